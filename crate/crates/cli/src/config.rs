//! The run configuration file.
//!
//! Every section is optional; missing values take the defaults below and are
//! echoed back in JSON output.

use std::path::Path;

use adiabatic_core::evolution::{SignConvention, DEFAULT_STEP_CEILING};
use adiabatic_core::hamiltonian::DEFAULT_NORM_GRID;
use adiabatic_core::problems::InstanceSpec;
use adiabatic_core::proofcheck::{ProofCheckSettings, DEFAULT_DRIFT_OFFSET, DEFAULT_RUNGS};
use adiabatic_core::spectral::DEFAULT_GRID;
use adiabatic_core::theorem::{BoundCase, VerifyOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_delta() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    /// Target distance `δ`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub gap_scan: GapScanSection,
    #[serde(default)]
    pub proof_check: ProofCheckSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Evolve for this time instead of the bound.
    pub t_override: Option<f64>,
    pub case: BoundCase,
    pub grid_size: usize,
    pub norm_grid: usize,
    pub step_ceiling: u64,
}

impl Default for VerifySection {
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

impl VerifySection {
    pub fn options(&self) -> VerifyOptions {
        VerifyOptions {
            t_override: self.t_override,
            case: self.case,
            grid_size: self.grid_size,
            norm_grid: self.norm_grid,
            step_ceiling: self.step_ceiling,
        }
    }
}

/// Sweep points; exactly one list must be nonempty. Each point is run with
/// the `[verify]` settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Absolute evolution times.
    pub t_values: Vec<f64>,
    /// Multiples of the required time at the configured `delta`.
    pub t_multiples: Vec<f64>,
    /// Target distances, each evolved for its own required time.
    pub delta_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepAxis<'a> {
    Times(&'a [f64]),
    Multiples(&'a [f64]),
    Deltas(&'a [f64]),
}

impl SweepSection {
    pub fn axis(&self) -> Result<SweepAxis<'_>, CliError> {
        let given = [!self.t_values.is_empty(), !self.t_multiples.is_empty(), !self.delta_values.is_empty()];
        match given {
            [true, false, false] => Ok(SweepAxis::Times(&self.t_values)),
            [false, true, false] => Ok(SweepAxis::Multiples(&self.t_multiples)),
            [false, false, true] => Ok(SweepAxis::Deltas(&self.delta_values)),
            [false, false, false] => Err(CliError::Config(
                "sweep list is empty: set one of sweep.t_values, sweep.t_multiples, sweep.delta_values".into(),
            )),
            _ => Err(CliError::Config(
                "set only one of sweep.t_values, sweep.t_multiples, sweep.delta_values".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapScanSection {
    pub grid_size: usize,
}

impl Default for GapScanSection {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProofCheckSection {
    /// Number of steps `L`.
    pub steps: u64,
    /// Evolution time; the zero-eigenvalue bound when absent.
    pub total_time: Option<f64>,
    pub drift_offset: usize,
    pub rungs: usize,
    pub norm_grid: usize,
}

impl Default for ProofCheckSection {
    fn default() -> Self {
        Self {
            steps: 100_000,
            total_time: None,
            drift_offset: DEFAULT_DRIFT_OFFSET,
            rungs: DEFAULT_RUNGS,
            norm_grid: DEFAULT_NORM_GRID,
        }
    }
}

impl ProofCheckSection {
    pub fn settings(&self, delta: f64) -> ProofCheckSettings {
        ProofCheckSettings {
            steps: self.steps,
            total_time: self.total_time,
            delta,
            drift_offset: self.drift_offset,
            rungs: self.rungs,
            norm_grid: self.norm_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub total_time: f64,
    pub steps: u64,
    pub snapshot_stride: u64,
    pub sign_convention: SignConvention,
    /// Grid on which the reference eigenpath is tracked.
    pub grid_size: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            total_time: 100.0,
            steps: 10_000,
            snapshot_stride: 100,
            sign_convention: SignConvention::PaperPlus,
            grid_size: DEFAULT_GRID,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Replaces the seed of a seeded instance; other instances ignore it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InstanceSpec::RandomInterpolation { seed: s, .. } = &mut self.instance {
            *s = seed;
        }
        self
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if !(self.delta > 0.0 && self.delta <= 2f64.sqrt()) {
            return fail(format!("delta = {} outside (0, √2]", self.delta));
        }
        if let Some(t) = self.verify.t_override {
            if !(t >= 0.0 && t.is_finite()) {
                return fail(format!("verify.t_override = {t} must be nonnegative and finite"));
            }
        }
        for (name, v) in [
            ("verify.grid_size", self.verify.grid_size),
            ("verify.norm_grid", self.verify.norm_grid),
            ("gap_scan.grid_size", self.gap_scan.grid_size),
            ("simulate.grid_size", self.simulate.grid_size),
            ("proof_check.norm_grid", self.proof_check.norm_grid),
        ] {
            if v < 5 {
                return fail(format!("{name} = {v} must be at least 5"));
            }
        }
        if self.sweep.t_values.iter().chain(&self.sweep.t_multiples).any(|t| !(*t >= 0.0 && t.is_finite())) {
            return fail("sweep times must be nonnegative and finite".into());
        }
        if let Some(d) = self.sweep.delta_values.iter().find(|d| !(**d > 0.0 && **d <= 2f64.sqrt())) {
            return fail(format!("sweep.delta_values entry {d} outside (0, √2]"));
        }
        if self.proof_check.steps == 0 {
            return fail("proof_check.steps must be positive".into());
        }
        if !(self.simulate.total_time > 0.0 && self.simulate.total_time.is_finite()) || self.simulate.steps == 0 {
            return fail("simulate.total_time and simulate.steps must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::parse("[instance]\nkind = \"landau_zener\"\n").unwrap();
        assert_eq!(cfg.delta, 0.5);
        assert_eq!(cfg.verify, VerifySection::default());
        assert_eq!(cfg.proof_check.steps, 100_000);
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let err = RunConfig::parse("delta = 0.5\ndeltta = 0.1\n[instance]\nkind = \"landau_zener\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("deltta") && msg.contains("line 2"), "{msg}");
        let err = RunConfig::parse("[instance]\nkind = \"landau_zener\"\n[verify]\ngrid = 3\n").unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_config_errors() {
        for text in [
            "delta = 2.0\n[instance]\nkind = \"landau_zener\"",
            "[instance]\nkind = \"landau_zener\"\n[verify]\nt_override = -1.0",
            "[instance]\nkind = \"landau_zener\"\n[sweep]\ndelta_values = [0.0]",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn sweep_axis_needs_exactly_one_list() {
        let mut s = SweepSection::default();
        assert!(s.axis().is_err());
        s.t_values = vec![1.0];
        assert_eq!(s.axis().unwrap(), SweepAxis::Times(&[1.0]));
        s.delta_values = vec![0.1];
        assert!(s.axis().is_err());
    }

    #[test]
    fn seed_flag_only_touches_seeded_instances() {
        let cfg = RunConfig::parse("[instance]\nkind = \"random_interpolation\"\ndim = 3\nseed = 1").unwrap();
        assert_eq!(cfg.with_seed(9).instance, InstanceSpec::RandomInterpolation { dim: 3, seed: 9 });
        let cfg = RunConfig::parse("[instance]\nkind = \"landau_zener\"").unwrap();
        assert_eq!(cfg.clone().with_seed(9), cfg);
    }
}
