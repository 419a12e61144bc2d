//! Numerical instrumentation of the proof: every intermediate inequality
//! becomes a [`CheckEntry`] with a measured value, a bound and a verdict.

pub mod blocks;
pub mod geometric;
pub mod report;
pub mod unitary;
pub mod vectors;

pub use blocks::{
    block_size_for, check_block_bound, check_total_error_sum, error_sweep, BlockRecord, ErrorSweep, ProofCheckConfig, BLOCK_SLACK,
    FOIL_FRACTION, TOTAL_SUM_MAX_DIM, TOTAL_SUM_MAX_STEPS,
};
pub use geometric::{distance_to_resonance, geometric_sum_norm, GeometricSum, RESONANCE_TOLERANCE};
pub use report::{ladder_entry, CheckEntry, Comparison, Rung};
pub use unitary::{check_u_drift, max_unitary_drift, spectral_norm};
pub use vectors::{
    check_eigenvector_derivative_bounds, check_gamma_bounds, check_w_derivative_form, check_w_drift, check_w_norm_bound, compute_w,
    eigenvalue_derivatives, max_w_drift_per_step, Ladder, DEFAULT_RUNGS, DERIVATIVE_FORM_EXPONENT, LEMMA_SLACK,
};

use serde::Serialize;

use crate::error::Result;
use crate::hamiltonian::{norm_bundle, InstanceMetadata, NormBundle, TimeDependentHamiltonian, DEFAULT_NORM_GRID};
use crate::spectral::{spectral_gap, track_eigenpath, Selector};
use crate::theorem::{required_time_special, shift_to_special_case, BoundCase, TheoremInputs};

/// Largest offset `k` in the w-drift check.
pub const DEFAULT_DRIFT_OFFSET: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ProofCheckSettings {
    /// Number of steps `L`.
    pub steps: u64,
    /// Evolution time; the special-case bound when absent.
    pub total_time: Option<f64>,
    pub delta: f64,
    pub drift_offset: usize,
    pub rungs: usize,
    pub norm_grid: usize,
}

impl ProofCheckSettings {
    pub fn new(steps: u64, delta: f64) -> Self {
        Self {
            steps,
            total_time: None,
            delta,
            drift_offset: DEFAULT_DRIFT_OFFSET,
            rungs: DEFAULT_RUNGS,
            norm_grid: DEFAULT_NORM_GRID,
        }
    }

    pub fn with_time(mut self, total_time: f64) -> Self {
        self.total_time = Some(total_time);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProofReport {
    pub instance: InstanceMetadata,
    #[serde(rename = "L")]
    pub steps: u64,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub delta: f64,
    /// Block size; absent when it exceeds `L`.
    #[serde(rename = "Delta")]
    pub block_size: Option<u64>,
    pub lambda: f64,
    pub norms: NormBundle,
    pub shifted_norms: NormBundle,
    pub entries: Vec<CheckEntry>,
    pub pass: bool,
}

impl ProofReport {
    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Runs every check at `L` steps.
///
/// Path checks use the eigenpath of `h`; norms and unitaries come from the
/// zero-eigenvalue frame `h − γ·I`, except the eigenvalue-derivative bounds
/// and the foil, which refer to `h` itself.
pub fn run_proof_check(h: &TimeDependentHamiltonian, selector: &Selector, settings: &ProofCheckSettings) -> Result<ProofReport> {
    let l = settings.steps;
    blocks::check_resources(l, h.dim())?;
    let path = track_eigenpath(h, l as usize + 1, selector)?;
    let gap = spectral_gap(h, &path)?;
    let lambda = gap.lambda_min;
    let shifted = shift_to_special_case(h, &path)?;
    let norms = norm_bundle(h, settings.norm_grid)?;
    let sn = norm_bundle(&shifted, settings.norm_grid)?;
    let total_time = match settings.total_time {
        Some(t) => t,
        None => required_time_special(&TheoremInputs::new(settings.delta, sn, lambda, BoundCase::Special)?)?,
    };

    let mut entries = Vec::new();
    let cfg = match ProofCheckConfig::new(l, total_time, settings.delta, sn.norm_h1, lambda, None) {
        Ok(c) => Some(c),
        Err(e) => {
            entries.push(CheckEntry::failed("block_partition", e.to_string()));
            None
        }
    };

    let ladder = Ladder::build(h, selector, path, settings.rungs)?;
    let finest = ladder.finest();
    entries.push(check_w_derivative_form(&ladder)?);
    entries.push(check_w_norm_bound(&ladder, sn.norm_h1, lambda)?);
    entries.push(check_w_drift(&ladder, sn.norm_h1, sn.norm_h2, lambda, settings.drift_offset)?);
    entries.push(unitary::u_drift_entry(&shifted, total_time, l, sn.norm_h1, settings.rungs)?);
    entries.extend(check_eigenvector_derivative_bounds(finest, sn.norm_h1, sn.norm_h2, lambda)?);
    entries.extend(check_gamma_bounds(finest, norms.norm_h1, norms.norm_h2, lambda)?);

    let foil = norms.norm_h1 / lambda;
    let (_, sum_entries) = check_total_error_sum(&shifted, finest, total_time, settings.delta, foil, cfg.as_ref())?;
    entries.extend(sum_entries);

    Ok(ProofReport {
        instance: h.metadata().clone(),
        steps: l,
        total_time,
        delta: settings.delta,
        block_size: cfg.as_ref().map(|c| c.block_size()),
        lambda,
        norms,
        shifted_norms: sn,
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}
