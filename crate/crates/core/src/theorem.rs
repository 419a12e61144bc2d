//! Runtime bounds of the adiabatic theorem, the reduction to a zero
//! eigenvalue, and end-to-end verification by simulation.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{
    distance_l2, distance_phase_invariant, evolve_adaptive_with, initial_steps, AdaptiveOptions, DoublingRecord, StateVector,
    DEFAULT_STEP_CEILING,
};
use crate::hamiltonian::{
    norm_bundle, CMatrix, DerivativeMode, InstanceMetadata, NormBundle, TimeDependentHamiltonian, DEFAULT_NORM_GRID,
};
use crate::numerics::ClampedSpline;
use crate::spectral::{spectral_gap, track_eigenpath, EigenPath, Selector, DEFAULT_GRID};

/// Constant of the general bound.
pub const GENERAL_CONSTANT: f64 = 1e5;
/// Constant of the bound for a tracked eigenvalue pinned at zero.
pub const SPECIAL_CONSTANT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    #[default]
    General,
    /// The tracked eigenvalue is identically zero.
    Special,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremInputs {
    pub delta: f64,
    pub norms: NormBundle,
    pub lambda: f64,
    pub case: BoundCase,
}

impl TheoremInputs {
    pub fn new(delta: f64, norms: NormBundle, lambda: f64, case: BoundCase) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            delta,
            norms,
            lambda,
            case,
        })
    }

    /// The bound for whichever case the inputs declare.
    pub fn required_time(&self) -> Result<f64> {
        match self.case {
            BoundCase::General => required_time_general(self),
            BoundCase::Special => required_time_special(self),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 2f64.sqrt()) {
        return Err(Error::Domain(format!("delta {delta} outside (0, √2]")));
    }
    Ok(())
}

/// `(c/δ²)·max(‖H'‖³/λ⁴, ‖H'‖‖H''‖/λ³)`.
pub fn bound(constant: f64, delta: f64, norm_h1: f64, norm_h2: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("gap {lambda} must be positive")));
    }
    let cubic = norm_h1.powi(3) / lambda.powi(4);
    let mixed = norm_h1 * norm_h2 / lambda.powi(3);
    Ok(constant / (delta * delta) * cubic.max(mixed))
}

fn required_time_for(inputs: &TheoremInputs, case: BoundCase, constant: f64) -> Result<f64> {
    if inputs.case != case {
        return Err(Error::Domain(format!("inputs declare the {:?} case", inputs.case)));
    }
    check_delta(inputs.delta)?;
    bound(constant, inputs.delta, inputs.norms.norm_h1, inputs.norms.norm_h2, inputs.lambda)
}

/// Sufficient evolution time for an arbitrary tracked eigenvalue.
pub fn required_time_general(inputs: &TheoremInputs) -> Result<f64> {
    required_time_for(inputs, BoundCase::General, GENERAL_CONSTANT)
}

/// Sufficient evolution time when the tracked eigenvalue is identically zero;
/// `inputs.norms` must be those of the shifted Hamiltonian.
pub fn required_time_special(inputs: &TheoremInputs) -> Result<f64> {
    required_time_for(inputs, BoundCase::Special, SPECIAL_CONSTANT)
}

/// `H̃(s) = H(s) − γ(s)·I`, with `γ` a clamped cubic spline through the
/// tracked eigenvalues and Hellmann–Feynman slopes at the ends.
pub fn shift_to_special_case(h: &TimeDependentHamiltonian, path: &EigenPath) -> Result<TimeDependentHamiltonian> {
    if path.gammas().iter().all(|&g| g == 0.0) {
        return Ok(h.clone());
    }
    let slope_at = |s: f64, v: &crate::hamiltonian::CVector| -> Result<f64> {
        let d = h.derivative(s, 1)?;
        Ok(v.dotc(&(d.matrix() * v)).re)
    };
    let grid = path.grid();
    let s0 = slope_at(grid[0], path.first())?;
    let s1 = slope_at(grid[grid.len() - 1], path.last())?;
    let gamma = Arc::new(ClampedSpline::new(grid.to_vec(), path.gammas().to_vec(), s0, s1)?);

    let dim = h.dim();
    let identity = CMatrix::identity(dim, dim);
    let shift = move |m: CMatrix, c: f64| m - identity.map(|z| z * c);
    let eval = h.evaluator();
    let (g0, sh0) = (gamma.clone(), shift.clone());
    let evaluator = move |s: f64| sh0(eval(s), g0.eval(s));
    let derivatives = match h.derivative_mode() {
        DerivativeMode::Analytic { first, second } => {
            let (f1, f2) = (first.clone(), second.clone());
            let (g1, g2) = (gamma.clone(), gamma.clone());
            let (sh1, sh2) = (shift.clone(), shift.clone());
            DerivativeMode::Analytic {
                first: Arc::new(move |s| sh1(f1(s), g1.eval_all(s).1)),
                second: Arc::new(move |s| sh2(f2(s), g2.eval_all(s).2)),
            }
        }
        fd @ DerivativeMode::FiniteDifference { .. } => fd.clone(),
    };
    let mut metadata: InstanceMetadata = h.metadata().clone();
    metadata.name = format!("{}_shifted", metadata.name);
    Ok(TimeDependentHamiltonian::new(dim, evaluator, derivatives, metadata))
}

struct Measured {
    path: EigenPath,
    gap: crate::spectral::GapReport,
    shifted: TimeDependentHamiltonian,
    norms: NormBundle,
    shifted_norms: NormBundle,
    t_required: f64,
}

fn measure(h: &TimeDependentHamiltonian, selector: &Selector, delta: f64, options: &VerifyOptions) -> Result<Measured> {
    check_delta(delta)?;
    let path = track_eigenpath(h, options.grid_size, selector)?;
    let gap = spectral_gap(h, &path)?;
    let shifted = shift_to_special_case(h, &path)?;
    let norms = norm_bundle(h, options.norm_grid)?;
    let shifted_norms = norm_bundle(&shifted, options.norm_grid)?;
    let t_required = match options.case {
        BoundCase::General => required_time_general(&TheoremInputs::new(delta, norms, gap.lambda_min, BoundCase::General)?)?,
        BoundCase::Special => {
            required_time_special(&TheoremInputs::new(delta, shifted_norms, gap.lambda_min, BoundCase::Special)?)?
        }
    };
    Ok(Measured {
        path,
        gap,
        shifted,
        norms,
        shifted_norms,
        t_required,
    })
}

/// The bound [`verify`] would evolve for, without evolving.
pub fn required_time(h: &TimeDependentHamiltonian, selector: &Selector, delta: f64, options: &VerifyOptions) -> Result<f64> {
    Ok(measure(h, selector, delta, options)?.t_required)
}

/// Knobs of [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub t_override: Option<f64>,
    pub case: BoundCase,
    pub grid_size: usize,
    pub norm_grid: usize,
    pub step_ceiling: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            t_override: None,
            case: BoundCase::General,
            grid_size: DEFAULT_GRID,
            norm_grid: DEFAULT_NORM_GRID,
            step_ceiling: DEFAULT_STEP_CEILING,
        }
    }
}

/// Outcome of one verification run with every input echoed.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremVerdict {
    pub instance: InstanceMetadata,
    pub delta: f64,
    pub case: BoundCase,
    pub grid_size: usize,
    pub lambda: f64,
    pub gap_argmin: f64,
    pub norms: NormBundle,
    pub shifted_norms: NormBundle,
    #[serde(rename = "T_required")]
    pub t_required: f64,
    #[serde(rename = "T_used")]
    pub t_used: f64,
    #[serde(rename = "L_used")]
    pub l_used: u64,
    pub disc_tol: f64,
    pub step_ceiling: u64,
    pub doublings: Vec<DoublingRecord>,
    pub distance_phase_invariant: f64,
    pub distance_gauge_fixed: f64,
    pub pass: bool,
}

/// Tracks the branch, evaluates the bound, evolves for the prescribed time
/// and measures how far the final state is from the tracked `Ψ(1)`.
///
/// The evolution runs under the shifted Hamiltonian. Its step unitaries
/// differ from the unshifted ones by scalar phases only, so the
/// phase-invariant distance is unchanged while the gauge-fixed distance
/// becomes meaningful.
pub fn verify(h: &TimeDependentHamiltonian, selector: &Selector, delta: f64, options: &VerifyOptions) -> Result<TheoremVerdict> {
    let Measured {
        path,
        gap,
        shifted,
        norms,
        shifted_norms,
        t_required,
    } = measure(h, selector, delta, options)?;
    let t_used = options.t_override.unwrap_or(t_required);
    if !(t_used >= 0.0 && t_used.is_finite()) {
        return Err(Error::Domain(format!("evolution time {t_used} must be nonnegative and finite")));
    }

    let disc_tol = delta / 100.0;
    let psi0 = StateVector::new(path.first().clone())?;
    let target = StateVector::new(path.last().clone())?;
    let (final_state, l_used, doublings) = if t_used == 0.0 {
        (psi0, 0, Vec::new())
    } else {
        let l0 = initial_steps(t_used, shifted_norms.norm_h);
        if l0.saturating_mul(2) > options.step_ceiling {
            let feasible = options.step_ceiling as f64 / 2.0 / (8.0 * shifted_norms.norm_h);
            return Err(Error::Infeasible(format!(
                "T = {t_used:.6e} needs at least {} steps, above the ceiling {}; the largest feasible T is {feasible:.6e}",
                l0.saturating_mul(2),
                options.step_ceiling
            )));
        }
        let adaptive = AdaptiveOptions {
            ceiling: options.step_ceiling,
            ..AdaptiveOptions::new(disc_tol)
        };
        let r = evolve_adaptive_with(&shifted, &psi0, t_used, &adaptive)?;
        (r.final_state, r.l_used, r.doublings)
    };

    let d_inv = distance_phase_invariant(&final_state, &target)?;
    let d_gauge = distance_l2(&final_state, &target)?;
    Ok(TheoremVerdict {
        instance: h.metadata().clone(),
        delta,
        case: options.case,
        grid_size: options.grid_size,
        lambda: gap.lambda_min,
        gap_argmin: gap.argmin_s,
        norms,
        shifted_norms,
        t_required,
        t_used,
        l_used,
        disc_tol,
        step_ceiling: options.step_ceiling,
        doublings,
        distance_phase_invariant: d_inv,
        distance_gauge_fixed: d_gauge,
        pass: d_inv <= delta,
    })
}
