//! Drift between consecutive step unitaries.
//!
//! With `J = H((j+1)/L) − H(j/L)`, the bound reads
//! `‖U_{j+1} − U_j‖ = (T/L)‖J‖ + O(1/L³) ≤ T‖H'‖/L² + O(1/L³)`.

use rayon::prelude::*;

use super::report::{ladder_entry, CheckEntry, Rung};
use super::vectors::LEMMA_SLACK;
use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::hamiltonian::{CMatrix, TimeDependentHamiltonian, C64};
use crate::spectral::decompose;

const CHUNK: u64 = 4096;

/// Operator norm (largest singular value) of a general square matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// `exp(i·rate·H(s))`.
pub(crate) fn exp_step(h: &TimeDependentHamiltonian, s: f64, rate: f64) -> Result<CMatrix> {
    let es = decompose(&h.eval(s)?)?;
    Ok(es.apply_function(|lam| C64::from_polar(1.0, rate * lam)))
}

/// `max_{0 ≤ j ≤ L−2} ‖U_{j+1} − U_j‖` with `U_j = exp(i(T/L)H(j/L))`.
pub fn max_unitary_drift(h: &TimeDependentHamiltonian, total_time: f64, steps: u64) -> Result<f64> {
    if steps < 2 {
        return Ok(0.0);
    }
    if total_time == 0.0 {
        return Ok(0.0);
    }
    let rate = total_time / steps as f64;
    let mut best = 0.0f64;
    let mut start = 0u64;
    while start + 1 < steps {
        let end = (start + CHUNK).min(steps - 1);
        let unitaries: Vec<CMatrix> = (start..=end)
            .into_par_iter()
            .map(|j| exp_step(h, j as f64 / steps as f64, rate))
            .collect::<Result<_>>()?;
        let local = unitaries
            .par_windows(2)
            .map(|w| spectral_norm(&(&w[1] - &w[0])))
            .reduce(|| 0.0, f64::max);
        best = best.max(local);
        start = end;
    }
    Ok(best)
}

/// `max_j ‖U_{j+1} − U_j‖ ≤ (T‖H'‖/L²)(1 + 0.05) + C/L³`, with `C` fitted over
/// `rungs` halvings of `L` at fixed `T`.
pub fn check_u_drift(h: &TimeDependentHamiltonian, cfg: &EvolutionConfig, norm_h1: f64, rungs: usize) -> Result<CheckEntry> {
    u_drift_entry(h, cfg.total_time(), cfg.steps(), norm_h1, rungs)
}

pub(crate) fn u_drift_entry(h: &TimeDependentHamiltonian, total_time: f64, steps: u64, norm_h1: f64, rungs: usize) -> Result<CheckEntry> {
    if rungs == 0 || steps >> (rungs - 1) < 2 {
        return Err(Error::Domain(format!("L = {steps} is too small for {rungs} rungs")));
    }
    let levels: Vec<Rung> = (0..rungs)
        .map(|i| {
            let l = steps >> i;
            Ok(Rung {
                steps: l,
                measured: max_unitary_drift(h, total_time, l)?,
                bound: total_time * norm_h1 / (l as f64 * l as f64),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ladder_entry("u_drift", &levels, LEMMA_SLACK, 3))
}
