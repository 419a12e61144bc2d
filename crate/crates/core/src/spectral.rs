//! Eigendecomposition, eigenpath tracking in the parallel-transport gauge,
//! spectral-gap measurement and finite-difference eigenvector derivatives.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{CMatrix, CVector, HermitianOperator, TimeDependentHamiltonian, C64};
use crate::numerics::{golden_section_min, unit_grid};

/// Relative degeneracy tolerance: a gap below `1e-8·‖H‖` is treated as closed.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Consecutive tracked states must overlap at least this much.
pub const MIN_OVERLAP: f64 = 0.5;

/// Default tracking grid size.
pub const DEFAULT_GRID: usize = 1025;

/// Points decomposed in parallel before the sequential matching fold.
const CHUNK: usize = 4096;

/// Full spectral decomposition with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Expansion coefficients `a_k = ⟨φ_k, v⟩`.
    pub fn coefficients(&self, v: &CVector) -> CVector {
        self.eigenvectors.ad_mul(v)
    }

    /// Smallest distance from eigenvalue `k` to any other eigenvalue.
    pub fn isolation(&self, k: usize) -> f64 {
        let e = self.eigenvalues[k];
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, v)| (v - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `f(A) = V diag(f(λ)) V†` for a complex-valued spectral function.
    pub fn apply_function<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let c = f(lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= c);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `f(A)·v` without forming the matrix.
    pub fn apply_function_to<F: Fn(f64) -> C64>(&self, f: F, v: &CVector) -> CVector {
        let mut coeffs = self.coefficients(v);
        for (c, &lam) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= f(lam);
        }
        &self.eigenvectors * coeffs
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn decompose(a: &HermitianOperator) -> Result<EigenSystem> {
    let dim = a.dim();
    let eig = SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 1000 * dim).ok_or_else(|| {
        let scale = a.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diag_spread = (0..dim).map(|i| a.matrix()[(i, i)].re).fold(f64::NEG_INFINITY, f64::max)
            - (0..dim).map(|i| a.matrix()[(i, i)].re).fold(f64::INFINITY, f64::min);
        Error::Numerical(format!(
            "Hermitian eigensolver did not converge ({dim}x{dim}, max entry {scale:.3e}, diagonal spread {diag_spread:.3e})"
        ))
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Which branch to follow from `s = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Ground,
    /// The eigenvector at `s = 0` with the largest overlap with this vector.
    Match(CVector),
}

impl Selector {
    fn pick(&self, es: &EigenSystem) -> Result<usize> {
        match self {
            Selector::Ground => Ok(0),
            Selector::Match(v) => {
                if v.len() != es.dim() {
                    return Err(Error::Domain(format!(
                        "selector vector has length {}, Hamiltonian dim {}",
                        v.len(),
                        es.dim()
                    )));
                }
                Ok(best_overlap(es, v).0)
            }
        }
    }
}

fn best_overlap(es: &EigenSystem, v: &CVector) -> (usize, C64) {
    let coeffs = es.coefficients(v);
    let mut best = (0, coeffs[0]);
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        if c.norm() > best.1.norm() {
            best = (k, *c);
        }
    }
    best
}

/// Gauge-fixed samples of one eigenvector branch.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPath {
    grid: Vec<f64>,
    #[serde(skip)]
    states: Vec<CVector>,
    gammas: Vec<f64>,
    /// Distance from the tracked eigenvalue to the rest of the spectrum, per grid point.
    gaps: Vec<f64>,
    /// Minimum of `gaps` over the grid.
    gap: f64,
    argmin: f64,
    /// Accumulated phase rotation relative to the fixed-component reference gauge.
    gauge_phase: Vec<f64>,
}

impl EigenPath {
    /// Builds a path from explicit samples (no re-gauging). Gaps are unknown
    /// and reported as infinite.
    pub fn from_states(grid: Vec<f64>, states: Vec<CVector>, gammas: Vec<f64>) -> Result<Self> {
        if grid.len() != states.len() || grid.len() != gammas.len() || grid.is_empty() {
            return Err(Error::Domain("grid, states and gammas must have equal nonzero length".into()));
        }
        for (s, v) in grid.iter().zip(&states) {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("state at s = {s} has norm {}", v.norm())));
            }
        }
        let n = grid.len();
        Ok(Self {
            gauge_phase: vec![0.0; n],
            gaps: vec![f64::INFINITY; n],
            gap: f64::INFINITY,
            argmin: grid[0],
            grid,
            states,
            gammas,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn states(&self) -> &[CVector] {
        &self.states
    }
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
    pub fn argmin(&self) -> f64 {
        self.argmin
    }
    pub fn gauge_phase(&self) -> &[f64] {
        &self.gauge_phase
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    pub fn first(&self) -> &CVector {
        &self.states[0]
    }
    pub fn last(&self) -> &CVector {
        &self.states[self.states.len() - 1]
    }

    /// Grid spacing when the grid is uniform.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.grid.len() < 2 {
            return None;
        }
        let h = self.grid[1] - self.grid[0];
        self.grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            .then_some(h)
    }

    /// Index of the grid point nearest to `s`.
    pub fn nearest_index(&self, s: f64) -> usize {
        let i = self.grid.partition_point(|&g| g < s);
        if i == 0 {
            0
        } else if i >= self.grid.len() {
            self.grid.len() - 1
        } else if (s - self.grid[i - 1]) <= (self.grid[i] - s) {
            i - 1
        } else {
            i
        }
    }
}

/// Follows the selected branch over the uniform grid `{j/(grid_size-1)}`.
///
/// Branches are matched by maximum overlap with the previous state, and each
/// state is rotated so that `⟨Ψ(s_{j-1}), Ψ(s_j)⟩` is real and nonnegative.
pub fn track_eigenpath(h: &TimeDependentHamiltonian, grid_size: usize, selector: &Selector) -> Result<EigenPath> {
    if grid_size < 2 {
        return Err(Error::Domain(format!("grid_size {grid_size} is below 2")));
    }
    let grid = unit_grid(grid_size);

    // The degeneracy tolerance needs ‖H‖ over the whole grid before matching,
    // so spectra are computed twice only for their norms when the grid is large.
    let spectra_norm = |chunk: &[f64]| -> Result<f64> {
        chunk
            .par_iter()
            .map(|&s| {
                let vals = h.eval(s)?.eigenvalues()?;
                Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            })
            .collect::<Result<Vec<f64>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max))
    };
    let h_norm = if grid_size <= CHUNK {
        None
    } else {
        Some(grid.chunks(CHUNK).map(spectra_norm).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max))
    };

    let mut systems_first: Option<Vec<EigenSystem>> = None;
    if h_norm.is_none() {
        systems_first = Some(
            grid.par_iter()
                .map(|&s| h.eval(s).and_then(|op| decompose(&op)))
                .collect::<Result<_>>()?,
        );
    }
    let h_norm = h_norm.unwrap_or_else(|| {
        systems_first
            .as_ref()
            .map(|v| {
                v.iter()
                    .flat_map(|es| es.eigenvalues.iter())
                    .fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .unwrap_or(0.0)
    });
    let tolerance = DEGENERACY_TOLERANCE * h_norm;

    let mut states: Vec<CVector> = Vec::with_capacity(grid_size);
    let mut gammas = Vec::with_capacity(grid_size);
    let mut gaps = Vec::with_capacity(grid_size);
    let mut gauge_phase = Vec::with_capacity(grid_size);
    let mut reference: Option<usize> = None;

    let mut visit = |j: usize, es: &EigenSystem| -> Result<()> {
        let s = grid[j];
        let (k, state) = if j == 0 {
            let k = selector.pick(es)?;
            (k, es.vector(k))
        } else {
            let prev = &states[j - 1];
            let (k, c) = best_overlap(es, prev);
            if c.norm() < MIN_OVERLAP {
                return Err(Error::UnderResolved {
                    s_prev: grid[j - 1],
                    s,
                    overlap: c.norm(),
                });
            }
            // ⟨prev, v⟩ = conj(c); rotate v by c/|c| so the overlap is |c|.
            let phase = c / c.norm();
            (k, es.vector(k).map(|z| z * phase))
        };
        let gap = es.isolation(k);
        if gap <= tolerance {
            return Err(Error::GapCollapse { s, gap, tolerance });
        }
        let r = *reference.get_or_insert_with(|| {
            state
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc })
                .0
        });
        let beta = if j == 0 {
            0.0
        } else {
            let prev_beta: f64 = gauge_phase[j - 1];
            if state[r].norm() < 1e-8 {
                prev_beta
            } else {
                let raw = state[r].arg() - states[0][r].arg();
                prev_beta + wrap_angle(raw - prev_beta)
            }
        };
        gauge_phase.push(beta);
        gammas.push(es.eigenvalues[k]);
        gaps.push(gap);
        states.push(state);
        Ok(())
    };

    match systems_first {
        Some(systems) => {
            for (j, es) in systems.iter().enumerate() {
                visit(j, es)?;
            }
        }
        None => {
            for (c, chunk) in grid.chunks(CHUNK).enumerate() {
                let systems: Vec<EigenSystem> = chunk
                    .par_iter()
                    .map(|&s| h.eval(s).and_then(|op| decompose(&op)))
                    .collect::<Result<_>>()?;
                for (i, es) in systems.iter().enumerate() {
                    visit(c * CHUNK + i, es)?;
                }
            }
        }
    }

    let (imin, gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc });
    Ok(EigenPath {
        argmin: grid[imin],
        grid,
        states,
        gammas,
        gaps,
        gap,
        gauge_phase,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// The tracked branch evaluated off the grid.
#[derive(Debug, Clone)]
pub struct TrackedPoint {
    pub gamma: f64,
    /// Phase-aligned with the nearest grid state.
    pub state: CVector,
    pub gap: f64,
    pub spectrum: Vec<f64>,
}

/// Continues `path` to an arbitrary `s` by overlap matching against the
/// nearest grid state.
pub fn tracked_at(h: &TimeDependentHamiltonian, path: &EigenPath, s: f64) -> Result<TrackedPoint> {
    let es = decompose(&h.eval(s)?)?;
    let anchor = &path.states[path.nearest_index(s)];
    let (k, c) = best_overlap(&es, anchor);
    if c.norm() < MIN_OVERLAP {
        return Err(Error::UnderResolved {
            s_prev: path.grid[path.nearest_index(s)],
            s,
            overlap: c.norm(),
        });
    }
    let phase = c / c.norm();
    Ok(TrackedPoint {
        gamma: es.eigenvalues[k],
        state: es.vector(k).map(|z| z * phase),
        gap: es.isolation(k),
        spectrum: es.eigenvalues.clone(),
    })
}

/// Minimum spectral gap around the tracked eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub lambda_min: f64,
    pub argmin_s: f64,
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Measures `λ = min_s min_{k≠tracked} |λ_k(s) − γ(s)|`.
///
/// The grid minimum is refined by golden-section search on the two adjacent
/// grid cells.
pub fn spectral_gap(h: &TimeDependentHamiltonian, path: &EigenPath) -> Result<GapReport> {
    let checks: Vec<(f64, f64)> = path
        .grid
        .par_iter()
        .zip(path.states.par_iter())
        .zip(path.gammas.par_iter())
        .map(|((&s, v), &g)| {
            let op = h.eval(s)?;
            let vals = op.eigenvalues()?;
            let norm = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let residual = (op.matrix() * v - v.map(|z| z * g)).norm();
            Ok((residual, norm))
        })
        .collect::<Result<_>>()?;
    let h_norm = checks.iter().fold(0.0f64, |m, c| m.max(c.1));
    let tolerance = DEGENERACY_TOLERANCE * h_norm;
    for (s, (residual, _)) in path.grid.iter().zip(&checks) {
        if *residual > tolerance.max(1e-300) && *residual > 1e-14 {
            return Err(Error::Domain(format!(
                "path state at s = {s} is not an eigenvector of H (residual {residual:.3e})"
            )));
        }
    }

    let imin = path
        .gaps
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc })
        .0;
    let mut lambda = path.gaps[imin];
    let mut argmin = path.grid[imin];
    if path.len() >= 3 && lambda.is_finite() {
        let lo = path.grid[imin.saturating_sub(1)];
        let hi = path.grid[(imin + 1).min(path.len() - 1)];
        let (s_ref, g_ref) = golden_section_min(
            |s| tracked_at(h, path, s).map(|p| p.gap),
            lo,
            hi,
            1e-10 * (hi - lo).max(1e-12),
        )?;
        if g_ref < lambda {
            lambda = g_ref;
            argmin = s_ref;
        }
    }
    if lambda <= tolerance {
        return Err(Error::GapCollapse {
            s: argmin,
            gap: lambda,
            tolerance,
        });
    }
    Ok(GapReport {
        lambda_min: lambda,
        argmin_s: argmin,
        grid: path.grid.clone(),
        gaps: path.gaps.clone(),
    })
}

/// Finite-difference `Ψ'` (order 1) or `Ψ''` (order 2) on the gauge-fixed
/// states: central in the interior, one-sided second order at the ends.
pub fn path_derivatives(path: &EigenPath, order: u8) -> Result<Vec<CVector>> {
    if !(order == 1 || order == 2) {
        return Err(Error::Domain(format!("derivative order {order} not in {{1, 2}}")));
    }
    let n = path.len();
    if n < 5 {
        return Err(Error::Domain(format!("grid of {n} points is too coarse (need at least 5)")));
    }
    let h = path
        .uniform_step()
        .ok_or_else(|| Error::Domain("path derivatives need a uniform grid".into()))?;
    let psi = &path.states;
    let comb = |terms: &[(f64, usize)], denom: f64| -> CVector {
        let mut acc = CVector::zeros(psi[0].len());
        for &(w, i) in terms {
            acc += psi[i].map(|z| z * w);
        }
        acc.map(|z| z / denom)
    };
    let out = (0..n)
        .map(|j| match (order, j) {
            (1, 0) => comb(&[(-3.0, 0), (4.0, 1), (-1.0, 2)], 2.0 * h),
            (1, j) if j == n - 1 => comb(&[(3.0, j), (-4.0, j - 1), (1.0, j - 2)], 2.0 * h),
            (1, j) => comb(&[(1.0, j + 1), (-1.0, j - 1)], 2.0 * h),
            (_, 0) => comb(&[(2.0, 0), (-5.0, 1), (4.0, 2), (-1.0, 3)], h * h),
            (_, j) if j == n - 1 => comb(&[(2.0, j), (-5.0, j - 1), (4.0, j - 2), (-1.0, j - 3)], h * h),
            (_, j) => comb(&[(1.0, j + 1), (-2.0, j), (1.0, j - 1)], h * h),
        })
        .collect();
    Ok(out)
}

/// `max_j |⟨Ψ'(s_j), Ψ(s_j)⟩|`; zero certifies the parallel-transport gauge.
pub fn gauge_residual(path: &EigenPath) -> Result<f64> {
    let d = path_derivatives(path, 1)?;
    Ok(d.iter()
        .zip(&path.states)
        .map(|(dv, v)| dv.dotc(v).norm())
        .fold(0.0, f64::max))
}

/// First-order perturbation theory for the tracked eigenvector in the
/// parallel-transport gauge: `Ψ' = −Σ_{k≠t} φ_k ⟨φ_k|H'|Ψ⟩ / (λ_k − γ)`.
///
/// Independent of any finite-difference grid; used as an oracle.
pub fn transport_tangent(h: &TimeDependentHamiltonian, s: f64, state: &CVector) -> Result<CVector> {
    let es = decompose(&h.eval(s)?)?;
    let (t, _) = best_overlap(&es, state);
    let gamma = es.eigenvalues[t];
    let hv = h.derivative(s, 1)?.matrix() * state;
    let coeffs = es.coefficients(&hv);
    let mut out = CVector::zeros(state.len());
    for k in 0..es.dim() {
        if k == t {
            continue;
        }
        let w = -coeffs[k] / (es.eigenvalues[k] - gamma);
        out += es.eigenvectors.column(k).map(|z| z * w);
    }
    Ok(out)
}
