//! Batch runner behind the `adiabatic` binary.
//!
//! Every command reads a [`RunConfig`], computes, and renders a report as CSV
//! or JSON. Exit codes: 0 pass, 1 the claim under test failed, 2 the
//! configuration is invalid, 3 a numerical or feasibility error.

pub mod config;

use adiabatic_core::evolution::{distance_phase_invariant, evolve_discrete, EvolutionConfig, StateVector};
use adiabatic_core::proofcheck::{run_proof_check, CheckEntry, ProofReport};
use adiabatic_core::spectral::{spectral_gap, track_eigenpath, tracked_at, Selector};
use adiabatic_core::theorem::{required_time, verify, TheoremVerdict, VerifyOptions};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

pub use config::RunConfig;
use config::SweepAxis;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] adiabatic_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(adiabatic_core::Error::Domain(_)) => 2,
            CliError::Core(_) | CliError::Output(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Verify,
    Sweep,
    GapScan,
    ProofCheck,
    Simulate,
}

impl Command {
    pub fn default_format(self) -> Format {
        match self {
            Command::Verify | Command::ProofCheck => Format::Json,
            Command::Sweep | Command::GapScan | Command::Simulate => Format::Csv,
        }
    }
}

/// A rendered report and whether the claim it tests held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn json<T: Serialize>(config: &RunConfig, key: &str, value: &T) -> Result<String, CliError> {
    let mut root = serde_json::Map::new();
    root.insert("config".into(), serde_json::to_value(config).map_err(|e| CliError::Output(e.to_string()))?);
    root.insert(key.into(), serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?);
    let mut text = serde_json::to_string_pretty(&root).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = ::csv::WriterBuilder::new().terminator(::csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let out = |e: ::csv::Error| CliError::Output(e.to_string());
    w.write_record(header).map_err(out)?;
    for row in rows {
        w.write_record(&row).map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

pub const SWEEP_HEADER: [&str; 4] = ["T", "L_used", "dist_phase_inv", "dist_gauge"];

fn verdict_row(v: &TheoremVerdict) -> Vec<String> {
    vec![
        v.t_used.to_string(),
        v.l_used.to_string(),
        v.distance_phase_invariant.to_string(),
        v.distance_gauge_fixed.to_string(),
    ]
}

pub fn cmd_verify(config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let h = config.instance.build()?;
    let verdict = verify(&h, &Selector::Ground, config.delta, &config.verify.options())?;
    let text = match format {
        Format::Json => json(config, "verdict", &verdict)?,
        Format::Csv => {
            let mut header = SWEEP_HEADER.to_vec();
            header.push("pass");
            let mut row = verdict_row(&verdict);
            row.push(verdict.pass.to_string());
            csv(&header, [row])?
        }
    };
    Ok(Outcome { text, pass: verdict.pass })
}

/// One verification per sweep point, rows in input order.
pub fn sweep_verdicts(config: &RunConfig) -> Result<Vec<TheoremVerdict>, CliError> {
    let h = config.instance.build()?;
    let base = config.verify.options();
    let points: Vec<(f64, VerifyOptions)> = match config.sweep.axis()? {
        SweepAxis::Times(ts) => ts.iter().map(|&t| (config.delta, VerifyOptions { t_override: Some(t), ..base })).collect(),
        SweepAxis::Multiples(ms) => {
            let t_required = required_time(&h, &Selector::Ground, config.delta, &base)?;
            ms.iter()
                .map(|&m| (config.delta, VerifyOptions { t_override: Some(m * t_required), ..base }))
                .collect()
        }
        SweepAxis::Deltas(ds) => ds.iter().map(|&d| (d, VerifyOptions { t_override: None, ..base })).collect(),
    };
    points
        .par_iter()
        .map(|(delta, opts)| verify(&h, &Selector::Ground, *delta, opts).map_err(CliError::from))
        .collect()
}

pub fn cmd_sweep(config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let verdicts = sweep_verdicts(config)?;
    let text = match format {
        Format::Csv => csv(&SWEEP_HEADER, verdicts.iter().map(verdict_row))?,
        Format::Json => json(config, "points", &verdicts)?,
    };
    Ok(Outcome { text, pass: true })
}

#[derive(Debug, Clone, Serialize)]
struct GapPoint {
    s: f64,
    gamma: f64,
    gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct GapScan {
    lambda_min: f64,
    argmin_s: f64,
    points: Vec<GapPoint>,
}

pub fn cmd_gap_scan(config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let h = config.instance.build()?;
    let path = track_eigenpath(&h, config.gap_scan.grid_size, &Selector::Ground)?;
    let report = spectral_gap(&h, &path)?;
    let points: Vec<GapPoint> = report
        .grid
        .iter()
        .zip(path.gammas())
        .zip(&report.gaps)
        .map(|((&s, &gamma), &gap)| GapPoint { s, gamma, gap })
        .collect();
    let text = match format {
        Format::Csv => csv(
            &["s", "gamma", "gap"],
            points.iter().map(|p| vec![p.s.to_string(), p.gamma.to_string(), p.gap.to_string()]),
        )?,
        Format::Json => json(
            config,
            "gap_scan",
            &GapScan {
                lambda_min: report.lambda_min,
                argmin_s: report.argmin_s,
                points,
            },
        )?,
    };
    Ok(Outcome { text, pass: true })
}

pub fn proof_report(config: &RunConfig) -> Result<ProofReport, CliError> {
    let h = config.instance.build()?;
    Ok(run_proof_check(&h, &Selector::Ground, &config.proof_check.settings(config.delta))?)
}

fn entry_row(e: &CheckEntry) -> Vec<String> {
    vec![
        e.name.clone(),
        e.measured.to_string(),
        e.bound.to_string(),
        e.slack.to_string(),
        e.allowance.to_string(),
        serde_json::to_value(e.comparison).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
        e.pass.to_string(),
    ]
}

pub fn cmd_proof_check(config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let report = proof_report(config)?;
    let text = match format {
        Format::Json => json(config, "report", &report)?,
        Format::Csv => csv(
            &["name", "measured", "bound", "slack", "allowance", "comparison", "pass"],
            report.entries.iter().map(entry_row),
        )?,
    };
    Ok(Outcome { text, pass: report.pass })
}

#[derive(Debug, Clone, Serialize)]
struct Snapshot {
    step: u64,
    s: f64,
    dist_phase_inv: f64,
    gamma: f64,
}

pub fn cmd_simulate(config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let sim = &config.simulate;
    let h = config.instance.build()?;
    let path = track_eigenpath(&h, sim.grid_size, &Selector::Ground)?;
    let psi0 = StateVector::new(path.first().clone())?;
    let cfg = EvolutionConfig::new(sim.total_time, sim.steps)?
        .with_sign(sim.sign_convention)
        .with_snapshots(sim.snapshot_stride);
    let result = evolve_discrete(&h, &psi0, &cfg)?;
    let snapshots: Vec<Snapshot> = result
        .snapshots
        .par_iter()
        .map(|(step, state)| {
            let s = *step as f64 / sim.steps as f64;
            let point = tracked_at(&h, &path, s)?;
            Ok(Snapshot {
                step: *step,
                s,
                dist_phase_inv: distance_phase_invariant(state, &StateVector::normalized(point.state)?)?,
                gamma: point.gamma,
            })
        })
        .collect::<Result<_, adiabatic_core::Error>>()?;
    let text = match format {
        Format::Csv => csv(
            &["step", "s", "dist_phase_inv", "gamma"],
            snapshots
                .iter()
                .map(|p| vec![p.step.to_string(), p.s.to_string(), p.dist_phase_inv.to_string(), p.gamma.to_string()]),
        )?,
        Format::Json => json(config, "snapshots", &snapshots)?,
    };
    Ok(Outcome { text, pass: true })
}

pub fn run(command: Command, config: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    match command {
        Command::Verify => cmd_verify(config, format),
        Command::Sweep => cmd_sweep(config, format),
        Command::GapScan => cmd_gap_scan(config, format),
        Command::ProofCheck => cmd_proof_check(config, format),
        Command::Simulate => cmd_simulate(config, format),
    }
}
