//! Checks on the discretized eigenpath: the error vectors `w_j`, their
//! drift, and the derivative bounds of the tracked eigenvector and eigenvalue.

use rayon::prelude::*;

use super::report::{ladder_entry, CheckEntry, Rung};
use crate::error::{Error, Result};
use crate::hamiltonian::{CVector, TimeDependentHamiltonian};
use crate::numerics::log_log_slope;
use crate::spectral::{path_derivatives, track_eigenpath, EigenPath, Selector};

/// Slack on single-inequality lemma checks.
pub const LEMMA_SLACK: f64 = 0.05;

/// Exponent the derivative-form residual must reach.
pub const DERIVATIVE_FORM_EXPONENT: f64 = 1.7;

/// Below this, derivative-form residuals count as exact.
const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Number of discretization levels in a ladder (four doublings).
pub const DEFAULT_RUNGS: usize = 5;

/// Step count of a path sampled at `j/L`, `j = 0..=L`.
fn steps_of(path: &EigenPath) -> u64 {
    (path.len() - 1) as u64
}

/// `w_j = P⊥_{g_j}(g_{j−1} − g_j) = g_{j−1} − g_j⟨g_j, g_{j−1}⟩`, for `1 ≤ j ≤ L`.
pub fn compute_w(path: &EigenPath, j: usize) -> Result<CVector> {
    let l = path.len() - 1;
    if j == 0 || j > l {
        return Err(Error::Domain(format!("error-vector index {j} outside 1..={l}")));
    }
    Ok(w_between(&path.states()[j - 1], &path.states()[j]))
}

pub(crate) fn w_between(prev: &CVector, next: &CVector) -> CVector {
    let c = next.dotc(prev);
    prev - next.map(|z| z * c)
}

fn all_w(path: &EigenPath) -> Vec<CVector> {
    let g = path.states();
    (1..g.len()).into_par_iter().map(|j| w_between(&g[j - 1], &g[j])).collect()
}

/// The same eigenpath sampled at `L, L/2, …, L/2^(rungs−1)` steps.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub paths: Vec<EigenPath>,
}

impl Ladder {
    /// Tracks the branch on every level; `finest` (sampled at `j/L`) is
    /// reused as the first rung.
    pub fn build(h: &TimeDependentHamiltonian, selector: &Selector, finest: EigenPath, rungs: usize) -> Result<Self> {
        let l = steps_of(&finest);
        if rungs < 2 {
            return Err(Error::Domain("a ladder needs at least two rungs".into()));
        }
        let coarsest = l >> (rungs - 1);
        if coarsest < 4 {
            return Err(Error::Domain(format!(
                "L = {l} is too small for {rungs} rungs (the coarsest level needs at least 4 steps)"
            )));
        }
        let mut paths = vec![finest];
        for i in 1..rungs {
            paths.push(track_eigenpath(h, (l >> i) as usize + 1, selector)?);
        }
        Ok(Self { paths })
    }

    pub fn finest(&self) -> &EigenPath {
        &self.paths[0]
    }

    pub fn steps(&self) -> Vec<u64> {
        self.paths.iter().map(steps_of).collect()
    }
}

/// `max_j ‖w_j + Ψ'(j/L)/L‖` against `1/L²`: the fitted exponent must reach 1.7.
pub fn check_w_derivative_form(ladder: &Ladder) -> Result<CheckEntry> {
    let mut residuals = Vec::new();
    for path in &ladder.paths {
        let l = steps_of(path) as f64;
        let d = path_derivatives(path, 1)?;
        let ws = all_w(path);
        let r = ws
            .iter()
            .zip(&d[1..])
            .map(|(w, dpsi)| (w + dpsi.map(|z| z / l)).norm())
            .fold(0.0, f64::max);
        residuals.push(r);
    }
    let ls: Vec<f64> = ladder.steps().iter().map(|&l| l as f64).collect();
    let detail = format!(
        "residuals {}",
        ls.iter()
            .zip(&residuals)
            .map(|(l, r)| format!("{l}:{r:.3e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if residuals.iter().all(|&r| r < ROUNDOFF_FLOOR) {
        return Ok(CheckEntry::at_least("w_derivative_form", f64::INFINITY, DERIVATIVE_FORM_EXPONENT)
            .with_detail(format!("all residuals below {ROUNDOFF_FLOOR:e}; {detail}")));
    }
    let exponent = log_log_slope(&ls, &residuals).map(|s| -s).unwrap_or(f64::NAN);
    let constant = residuals[0] * ls[0] * ls[0];
    Ok(CheckEntry::at_least("w_derivative_form", exponent, DERIVATIVE_FORM_EXPONENT)
        .with_fit(Some(exponent), Some(constant))
        .with_detail(detail))
}

/// `max_j ‖w_j‖ ≤ ‖H'‖/(λL)·(1 + 0.05) + C/L²`.
pub fn check_w_norm_bound(ladder: &Ladder, norm_h1: f64, lambda: f64) -> Result<CheckEntry> {
    let rungs: Vec<Rung> = ladder
        .paths
        .iter()
        .map(|p| {
            let l = steps_of(p);
            Rung {
                steps: l,
                measured: all_w(p).iter().map(|w| w.norm()).fold(0.0, f64::max),
                bound: norm_h1 / (lambda * l as f64),
            }
        })
        .collect();
    Ok(ladder_entry("w_norm", &rungs, LEMMA_SLACK, 2))
}

/// Largest `‖w_{j+k} − w_j‖ / k` over `j` and `1 ≤ k ≤ k_max`.
pub fn max_w_drift_per_step(path: &EigenPath, k_max: usize) -> f64 {
    let ws = all_w(path);
    let k_max = k_max.min(ws.len().saturating_sub(1));
    (0..ws.len())
        .into_par_iter()
        .map(|j| {
            (1..=k_max)
                .take_while(|k| j + k < ws.len())
                .map(|k| (&ws[j + k] - &ws[j]).norm() / k as f64)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `‖w_{j+k} − w_j‖ ≤ (k/L²)(‖H''‖/λ + 3‖H'‖²/λ²)(1 + 0.05) + C·k/L³`
/// for all `j` and `k ≤ k_max`.
///
/// The difference of two second-order remainders `k` steps apart is
/// `O(k/L³)`, so the per-`k` remainder is fitted at order three.
pub fn check_w_drift(ladder: &Ladder, norm_h1: f64, norm_h2: f64, lambda: f64, k_max: usize) -> Result<CheckEntry> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    let curvature = norm_h2 / lambda + 3.0 * norm_h1 * norm_h1 / (lambda * lambda);
    let rungs: Vec<Rung> = ladder
        .paths
        .iter()
        .map(|p| {
            let l = steps_of(p) as f64;
            Rung {
                steps: steps_of(p),
                measured: max_w_drift_per_step(p, k_max),
                bound: curvature / (l * l),
            }
        })
        .collect();
    let entry = ladder_entry("w_drift", &rungs, LEMMA_SLACK, 3);
    let detail = format!("per-step drift, k ≤ {k_max}; {}", entry.detail);
    Ok(entry.with_detail(detail))
}

/// First and second eigenvector-derivative bounds:
/// `‖Ψ'‖ ≤ ‖H'‖/λ` and `‖Ψ''‖ ≤ ‖H''‖/λ + 3‖H'‖²/λ²`, each with 5% slack.
pub fn check_eigenvector_derivative_bounds(path: &EigenPath, norm_h1: f64, norm_h2: f64, lambda: f64) -> Result<Vec<CheckEntry>> {
    let d1 = path_derivatives(path, 1)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let d2 = path_derivatives(path, 2)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(vec![
        CheckEntry::at_most("eigenvector_first_derivative", d1, norm_h1 / lambda, LEMMA_SLACK),
        CheckEntry::at_most(
            "eigenvector_second_derivative",
            d2,
            norm_h2 / lambda + 3.0 * norm_h1 * norm_h1 / (lambda * lambda),
            LEMMA_SLACK,
        ),
    ])
}

/// Finite differences of the tracked eigenvalue on a uniform grid.
pub fn eigenvalue_derivatives(path: &EigenPath) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = path.len();
    if n < 5 {
        return Err(Error::Domain(format!("grid of {n} points is too coarse (need at least 5)")));
    }
    let h = path
        .uniform_step()
        .ok_or_else(|| Error::Domain("eigenvalue derivatives need a uniform grid".into()))?;
    let g = path.gammas();
    let first = (0..n)
        .map(|j| match j {
            0 => (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h),
            j if j == n - 1 => (3.0 * g[j] - 4.0 * g[j - 1] + g[j - 2]) / (2.0 * h),
            j => (g[j + 1] - g[j - 1]) / (2.0 * h),
        })
        .collect();
    let second = (0..n)
        .map(|j| match j {
            0 => (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / (h * h),
            j if j == n - 1 => (2.0 * g[j] - 5.0 * g[j - 1] + 4.0 * g[j - 2] - g[j - 3]) / (h * h),
            j => (g[j + 1] - 2.0 * g[j] + g[j - 1]) / (h * h),
        })
        .collect();
    Ok((first, second))
}

/// Eigenvalue derivative bounds `|γ'| ≤ ‖H'‖` and `|γ''| ≤ ‖H''‖ + 4‖H'‖²/λ`
/// with 5% slack, on the unshifted Hamiltonian's path.
pub fn check_gamma_bounds(path: &EigenPath, norm_h1: f64, norm_h2: f64, lambda: f64) -> Result<Vec<CheckEntry>> {
    let (d1, d2) = eigenvalue_derivatives(path)?;
    let m1 = d1.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let m2 = d2.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(vec![
        CheckEntry::at_most("eigenvalue_first_derivative", m1, norm_h1, LEMMA_SLACK),
        CheckEntry::at_most(
            "eigenvalue_second_derivative",
            m2,
            norm_h2 + 4.0 * norm_h1 * norm_h1 / lambda,
            LEMMA_SLACK,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HermitianOperator, InstanceMetadata, C64};
    use crate::numerics::unit_grid;
    use std::f64::consts::{PI, SQRT_2};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn lz() -> TimeDependentHamiltonian {
        TimeDependentHamiltonian::linear(&HermitianOperator::pauli_z(), &HermitianOperator::pauli_x(), InstanceMetadata::default()).unwrap()
    }

    fn planar(l: usize) -> EigenPath {
        let grid = unit_grid(l + 1);
        let states = grid
            .iter()
            .map(|&s| {
                let th = PI * s / 2.0;
                CVector::from_vec(vec![c(th.cos()), c(th.sin())])
            })
            .collect();
        EigenPath::from_states(grid, states, vec![0.0; l + 1]).unwrap()
    }

    #[test]
    fn w_of_a_two_dimensional_step() {
        let eps = 0.01f64;
        let grid = vec![0.0, 1.0];
        let states = vec![
            CVector::from_vec(vec![c(1.0), c(0.0)]),
            CVector::from_vec(vec![c(eps.cos()), c(eps.sin())]),
        ];
        let p = EigenPath::from_states(grid, states, vec![0.0, 0.0]).unwrap();
        let w = compute_w(&p, 1).unwrap();
        let expected = CVector::from_vec(vec![c(eps.sin() * eps.sin()), c(-eps.sin() * eps.cos())]);
        assert!((&w - &expected).norm() < 1e-15);
        assert!((w.norm() - eps.sin()).abs() < 1e-15);
        assert!(compute_w(&p, 0).is_err() && compute_w(&p, 2).is_err());
    }

    #[test]
    fn w_is_orthogonal_to_the_new_state() {
        let path = track_eigenpath(&lz(), 10_001, &Selector::Ground).unwrap();
        for j in (1..=10_000).step_by(37) {
            let w = compute_w(&path, j).unwrap();
            assert!(path.states()[j].dotc(&w).norm() <= 1e-12);
        }
    }

    #[test]
    fn constant_path_has_no_error_vectors() {
        let h = TimeDependentHamiltonian::constant(&HermitianOperator::diagonal(&[0.0, 1.0]).unwrap(), InstanceMetadata::default());
        let path = track_eigenpath(&h, 129, &Selector::Ground).unwrap();
        let ladder = Ladder::build(&h, &Selector::Ground, path, DEFAULT_RUNGS).unwrap();
        assert!(all_w(ladder.finest()).iter().all(|w| w.norm() == 0.0));
        assert!(check_w_derivative_form(&ladder).unwrap().pass);
        let e = check_w_norm_bound(&ladder, 0.0, 1.0).unwrap();
        assert!(e.pass && e.measured == 0.0);
        let e = check_w_drift(&ladder, 0.0, 0.0, 1.0, 8).unwrap();
        assert!(e.pass && e.measured == 0.0);
    }

    #[test]
    fn planar_rotation_residual_is_second_order() {
        let paths = (0..5).map(|i| planar(1024 << i)).rev().collect();
        let e = check_w_derivative_form(&Ladder { paths }).unwrap();
        assert!(e.pass);
        // Chord and tangent of a uniform rotation differ by ε − sin ε.
        assert!((e.fitted_exponent.unwrap() - 3.0).abs() < 0.1, "{e:?}");
    }

    #[test]
    fn landau_zener_residual_shrinks_fourfold() {
        let h = lz();
        let r = |l: usize| {
            let p = track_eigenpath(&h, l + 1, &Selector::Ground).unwrap();
            let d = path_derivatives(&p, 1).unwrap();
            all_w(&p)
                .iter()
                .zip(&d[1..])
                .map(|(w, dp)| (w + dp.map(|z| z / l as f64)).norm())
                .fold(0.0, f64::max)
        };
        let ratio = r(1024) / r(2048);
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn landau_zener_w_norm_matches_the_mixing_angle() {
        let h = lz();
        let path = track_eigenpath(&h, 10_001, &Selector::Ground).unwrap();
        let max_w = all_w(&path).iter().map(|w| w.norm()).fold(0.0, f64::max);
        // ‖Ψ'‖ peaks at 1, so ‖w‖ ≈ 1/L.
        assert!((max_w * 1e4 - 1.0).abs() < 1e-3);
        let ladder = Ladder::build(&h, &Selector::Ground, path, DEFAULT_RUNGS).unwrap();
        assert!(check_w_norm_bound(&ladder, SQRT_2, SQRT_2).unwrap().pass);
    }

    #[test]
    fn landau_zener_drift_is_linear_in_k() {
        let h = lz();
        let path = track_eigenpath(&h, 4097, &Selector::Ground).unwrap();
        let ws = all_w(&path);
        let j = 1000;
        for k in [1, 2, 4, 8] {
            let a = (&ws[j + k] - &ws[j]).norm();
            let b = (&ws[j + 2 * k] - &ws[j]).norm();
            assert!(a > 1e-14);
            assert!((1.5..=2.5).contains(&(b / a)), "k = {k}: {}", b / a);
        }
        // k = 1 drift near the steepest point matches ‖Ψ''‖/L².
        let d2 = path_derivatives(&path, 2).unwrap();
        let l = 4096.0;
        let mid = 2048;
        let drift = (&ws[mid] - &ws[mid - 1]).norm();
        let expected = d2[mid].norm() / (l * l);
        assert!((drift / expected - 1.0).abs() < 0.05, "{drift} vs {expected}");
    }

    #[test]
    fn landau_zener_gamma_bounds() {
        let h = lz();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let (d1, _) = eigenvalue_derivatives(&path).unwrap();
        for (s, d) in path.grid().iter().zip(&d1) {
            let exact = (1.0 - 2.0 * s) / ((1.0 - s) * (1.0 - s) + s * s).sqrt();
            assert!((d - exact).abs() < 1e-4, "s = {s}");
        }
        let entries = check_gamma_bounds(&path, SQRT_2, 0.0, SQRT_2).unwrap();
        assert!(entries.iter().all(|e| e.pass));
        assert!((entries[0].measured - 1.0).abs() < 1e-4);
    }

    #[test]
    fn too_small_ladders_are_rejected() {
        let h = lz();
        let path = track_eigenpath(&h, 33, &Selector::Ground).unwrap();
        assert!(Ladder::build(&h, &Selector::Ground, path, 5).is_err());
    }
}
