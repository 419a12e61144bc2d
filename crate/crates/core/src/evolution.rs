//! Discretized evolution `U_{L-1}···U_0 ψ₀` with `U_j = exp(±i(T/L)H(j/L))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{norm_bundle, CMatrix, CVector, TimeDependentHamiltonian, C64, DEFAULT_NORM_GRID};
use crate::spectral::{decompose, EigenSystem};

/// Maximum per-step renormalization correction before the run is aborted.
pub const RENORMALIZATION_GUARD: f64 = 1e-10;

/// Default ceiling on the step count of the doubling loop.
pub const DEFAULT_STEP_CEILING: u64 = 1 << 30;

/// Steps whose eigensystems are computed in parallel ahead of the product.
const CHUNK: usize = 8192;

/// A unit-norm state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Accepts `v` when its norm is within `1e-10` of one.
    pub fn new(v: CVector) -> Result<Self> {
        let drift = (v.norm() - 1.0).abs();
        if !(drift <= RENORMALIZATION_GUARD) {
            return Err(Error::Domain(format!("state norm {} is not 1", v.norm())));
        }
        Ok(Self(v))
    }

    /// Scales `v` to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(v / C64::new(n, 0.0)))
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::Domain(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `exp(+iεH)`.
    #[default]
    PaperPlus,
    /// `exp(−iεH)`.
    PhysicsMinus,
}

impl SignConvention {
    fn sign(self) -> f64 {
        match self {
            SignConvention::PaperPlus => 1.0,
            SignConvention::PhysicsMinus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionConfig {
    total_time: f64,
    steps: u64,
    pub sign_convention: SignConvention,
    /// Record every `stride`-th intermediate state (and the final one).
    pub snapshot_stride: Option<u64>,
}

impl EvolutionConfig {
    pub fn new(total_time: f64, steps: u64) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::Domain(format!("total time {total_time} must be positive and finite")));
        }
        if steps == 0 {
            return Err(Error::Domain("step count must be at least 1".into()));
        }
        Ok(Self {
            total_time,
            steps,
            sign_convention: SignConvention::PaperPlus,
            snapshot_stride: None,
        })
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign_convention = sign;
        self
    }

    pub fn with_snapshots(mut self, stride: u64) -> Self {
        self.snapshot_stride = Some(stride.max(1));
        self
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Step size `ε = T/L`.
    pub fn epsilon(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Signed phase rate: `±T/L`.
    fn phase_rate(&self) -> f64 {
        self.sign_convention.sign() * self.epsilon()
    }
}

/// One `(L, distance to the previous final state)` record of the doubling loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingRecord {
    pub steps: u64,
    pub distance_to_previous: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    pub l_used: u64,
    /// `(k, U_{k-1}···U_0 ψ₀)`; step 0 and the final step are always included.
    pub snapshots: Vec<(u64, StateVector)>,
    /// Filled by [`evolve_adaptive`].
    pub doublings: Vec<DoublingRecord>,
}

/// `U_j = exp(±i(T/L)H(j/L))` by spectral exponentiation.
pub fn step_unitary(h: &TimeDependentHamiltonian, j: u64, cfg: &EvolutionConfig) -> Result<CMatrix> {
    if j >= cfg.steps {
        return Err(Error::Domain(format!("step index {j} outside 0..{}", cfg.steps)));
    }
    let es = decompose(&h.eval(j as f64 / cfg.steps as f64)?)?;
    let rate = cfg.phase_rate();
    Ok(es.apply_function(|lam| C64::from_polar(1.0, rate * lam)))
}

fn apply_step(es: &EigenSystem, rate: f64, psi: &CVector) -> CVector {
    if es.eigenvalues.iter().all(|&l| rate * l == 0.0) {
        return psi.clone();
    }
    es.apply_function_to(|lam| C64::from_polar(1.0, rate * lam), psi)
}

fn guarded_renormalize(v: &mut CVector, step: u64) -> Result<()> {
    let n = v.norm();
    let drift = (n - 1.0).abs();
    if !(drift < RENORMALIZATION_GUARD) {
        return Err(Error::Instability { step, drift });
    }
    if drift > 0.0 {
        *v /= C64::new(n, 0.0);
    }
    Ok(())
}

/// Applies `U_0`, then `U_1`, …, then `U_{L-1}` to `ψ₀`.
pub fn evolve_discrete(h: &TimeDependentHamiltonian, psi0: &StateVector, cfg: &EvolutionConfig) -> Result<EvolutionResult> {
    if psi0.dim() != h.dim() {
        return Err(Error::Domain(format!("state dim {} does not match Hamiltonian dim {}", psi0.dim(), h.dim())));
    }
    let l = cfg.steps;
    let rate = cfg.phase_rate();
    let mut psi = psi0.amplitudes().clone();
    let mut snapshots = Vec::new();
    if cfg.snapshot_stride.is_some() {
        snapshots.push((0, psi0.clone()));
    }

    let mut start = 0u64;
    while start < l {
        let end = (start + CHUNK as u64).min(l);
        let systems: Vec<EigenSystem> = (start..end)
            .into_par_iter()
            .map(|j| h.eval(j as f64 / l as f64).and_then(|op| decompose(&op)))
            .collect::<Result<_>>()?;
        for (offset, es) in systems.iter().enumerate() {
            let done = start + offset as u64 + 1;
            psi = apply_step(es, rate, &psi);
            guarded_renormalize(&mut psi, done - 1)?;
            if let Some(stride) = cfg.snapshot_stride {
                if done % stride == 0 || done == l {
                    snapshots.push((done, StateVector(psi.clone())));
                }
            }
        }
        start = end;
    }
    Ok(EvolutionResult {
        final_state: StateVector(psi),
        l_used: l,
        snapshots,
        doublings: Vec::new(),
    })
}

/// Settings of the doubling loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveOptions {
    pub disc_tol: f64,
    pub ceiling: u64,
    pub sign_convention: SignConvention,
}

impl AdaptiveOptions {
    pub fn new(disc_tol: f64) -> Self {
        Self {
            disc_tol,
            ceiling: DEFAULT_STEP_CEILING,
            sign_convention: SignConvention::PaperPlus,
        }
    }
}

/// Initial step count of the doubling loop: `max(1, ceil(8·T·‖H‖))`.
pub fn initial_steps(total_time: f64, h_norm: f64) -> u64 {
    let l0 = (8.0 * total_time * h_norm).ceil();
    if l0 >= u64::MAX as f64 {
        u64::MAX
    } else {
        (l0 as u64).max(1)
    }
}

/// Evolves with `L₀ = ceil(8T‖H‖)` steps and doubles `L` until successive
/// finals are within `disc_tol` (phase-invariant distance).
pub fn evolve_adaptive(h: &TimeDependentHamiltonian, psi0: &StateVector, total_time: f64, disc_tol: f64) -> Result<EvolutionResult> {
    evolve_adaptive_with(h, psi0, total_time, &AdaptiveOptions::new(disc_tol))
}

pub fn evolve_adaptive_with(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    total_time: f64,
    options: &AdaptiveOptions,
) -> Result<EvolutionResult> {
    if !(options.disc_tol > 0.0) {
        return Err(Error::Domain(format!("disc_tol {} must be positive", options.disc_tol)));
    }
    let h_norm = norm_bundle(h, DEFAULT_NORM_GRID)?.norm_h;
    let mut l = initial_steps(total_time, h_norm);
    if l > options.ceiling {
        return Err(Error::NonConvergence {
            steps: l,
            ceiling: options.ceiling,
            tolerance: options.disc_tol,
        });
    }
    let run = |steps: u64| -> Result<EvolutionResult> {
        let cfg = EvolutionConfig::new(total_time, steps)?.with_sign(options.sign_convention);
        evolve_discrete(h, psi0, &cfg)
    };
    let mut previous = run(l)?;
    let mut doublings = vec![DoublingRecord {
        steps: l,
        distance_to_previous: f64::NAN,
    }];
    loop {
        let next = l.checked_mul(2).filter(|&n| n <= options.ceiling).ok_or(Error::NonConvergence {
            steps: l.saturating_mul(2),
            ceiling: options.ceiling,
            tolerance: options.disc_tol,
        })?;
        let mut current = run(next)?;
        let d = distance_phase_invariant(&previous.final_state, &current.final_state)?;
        doublings.push(DoublingRecord {
            steps: next,
            distance_to_previous: d,
        });
        l = next;
        if d < options.disc_tol {
            current.doublings = doublings;
            return Ok(current);
        }
        previous = current;
    }
}

fn check_dims(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Domain(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `√(2 − 2|⟨ψ,φ⟩|)`: the l₂ distance minimized over a global phase.
pub fn distance_phase_invariant(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    check_dims(psi, phi)?;
    // Equal to √(2 − 2|⟨ψ,φ⟩|) for unit vectors, without the cancellation
    // that floors that form at ~1e-8.
    let overlap = phi.0.dotc(&psi.0);
    if overlap.norm() == 0.0 {
        return Ok(2f64.sqrt());
    }
    let phase = overlap / overlap.norm();
    Ok((&psi.0 - phi.0.map(|z| z * phase)).norm())
}

/// Plain `‖ψ − φ‖`.
pub fn distance_l2(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    check_dims(psi, phi)?;
    Ok((&psi.0 - &phi.0).norm())
}
