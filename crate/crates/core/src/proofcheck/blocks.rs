//! The total error vector `E = Σ_{j=1}^{L} U_{L−1}···U_j w_j` and its
//! partition into blocks of `Δ` consecutive terms.
//!
//! For a block `b..=e` the checks compare
//! - `S = Σ_{j=b}^{e} U_{e−1}···U_j w_j` (the block sum),
//! - `A`, the same sum with every `w_j` replaced by `w_b`,
//! - `P = Σ_{i<len} U_b^i w_b` (the pure power sum).

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use super::geometric::geometric_sum_at;
use super::report::CheckEntry;
use super::vectors::w_between;
use crate::error::{Error, Result};
use crate::hamiltonian::{CMatrix, CVector, TimeDependentHamiltonian, C64};
use crate::spectral::{decompose, EigenPath, EigenSystem};

/// Slack on block inequalities.
pub const BLOCK_SLACK: f64 = 0.1;

/// Resource ceiling of the total-error evaluation.
pub const TOTAL_SUM_MAX_STEPS: u64 = 200_000;
pub const TOTAL_SUM_MAX_DIM: usize = 16;

/// "Much smaller than the foil" is read as at most this fraction of it.
pub const FOIL_FRACTION: f64 = 0.1;

/// Tolerance of the block-concatenation and dual-evaluation identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofCheckConfig {
    #[serde(rename = "L")]
    steps: u64,
    #[serde(rename = "T")]
    total_time: f64,
    delta: f64,
    #[serde(rename = "Delta")]
    block_size: u64,
    block_starts: Vec<u64>,
}

/// `Δ = ceil((8/δ)·L·‖H'‖/(T·λ²))`, or 1 when `‖H'‖ = 0`.
pub fn block_size_for(steps: u64, total_time: f64, delta: f64, norm_h1: f64, lambda: f64) -> Result<u64> {
    if norm_h1 == 0.0 {
        return Ok(1);
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("gap {lambda} must be positive")));
    }
    let raw = (8.0 / delta) * steps as f64 * norm_h1 / (total_time * lambda * lambda);
    if !(raw.is_finite() && raw < u64::MAX as f64) {
        return Ok(u64::MAX);
    }
    Ok((raw.ceil() as u64).max(1))
}

impl ProofCheckConfig {
    /// Derives `Δ`; a `declared` block size must agree with it. Fails when
    /// `Δ > L`, since no block then fits.
    pub fn new(steps: u64, total_time: f64, delta: f64, norm_h1: f64, lambda: f64, declared: Option<u64>) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("L must be at least 1".into()));
        }
        if !(total_time >= 0.0 && total_time.is_finite()) {
            return Err(Error::Domain(format!("T = {total_time} must be nonnegative and finite")));
        }
        if !(delta > 0.0 && delta <= 2f64.sqrt()) {
            return Err(Error::Domain(format!("delta {delta} outside (0, √2]")));
        }
        let block_size = block_size_for(steps, total_time, delta, norm_h1, lambda)?;
        if let Some(d) = declared {
            if d != block_size {
                return Err(Error::Domain(format!("declared Δ = {d} disagrees with the derived Δ = {block_size}")));
            }
        }
        if block_size > steps {
            return Err(Error::Domain(format!(
                "Δ = {block_size} exceeds L = {steps}: T is too short for the block argument at this L"
            )));
        }
        let block_starts = (0..).map(|i| 1 + i * block_size).take_while(|&b| b <= steps).collect();
        Ok(Self {
            steps,
            total_time,
            delta,
            block_size,
            block_starts,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
    pub fn total_time(&self) -> f64 {
        self.total_time
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn block_size(&self) -> u64 {
        self.block_size
    }
    pub fn block_starts(&self) -> &[u64] {
        &self.block_starts
    }

    /// Length of the block starting at `start`; the final block may be short.
    pub fn block_len(&self, start: u64) -> u64 {
        self.block_size.min(self.steps - start + 1)
    }
}

/// Measurements of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRecord {
    pub start: u64,
    pub len: u64,
    pub trimmed: bool,
    /// `‖S‖`.
    pub sum: f64,
    /// `‖S − A‖`.
    pub w_replacement: f64,
    /// `‖A − P‖`.
    pub u_replacement: f64,
    /// `‖P‖`.
    pub power_sum: f64,
    /// `‖S − P‖`.
    pub approximation: f64,
    /// `‖P − P_geometric‖`, `P_geometric` from the eigen-expansion of `w_b`.
    pub power_sum_dual_gap: f64,
    /// Some `α·T/L` is within `1e-12` of a multiple of `2π`.
    pub resonant: bool,
    /// Every `|α·T/L| ≤ π/2`.
    pub small_angle: bool,
    /// Largest `|α·T/L|` over the other levels.
    pub max_phase: f64,
}

impl BlockRecord {
    /// The five block inequalities for this block alone, targets in units of
    /// `δΔ/L`.
    pub fn entries(&self, cfg: &ProofCheckConfig) -> Vec<CheckEntry> {
        let unit = cfg.delta * cfg.block_size as f64 / cfg.steps as f64;
        let detail = format!(
            "block at {} of length {}{}{}",
            self.start,
            self.len,
            if self.trimmed { " (trimmed)" } else { "" },
            if self.resonant { "; resonant" } else { "" }
        );
        [
            ("block_sum", self.sum, 1.0),
            ("block_approximation", self.approximation, 0.5),
            ("block_w_replacement", self.w_replacement, 0.25),
            ("block_u_replacement", self.u_replacement, 0.25),
            ("block_power_sum", self.power_sum, 0.5),
        ]
        .into_iter()
        .map(|(name, measured, fraction)| CheckEntry::at_most(name, measured, unit * fraction, BLOCK_SLACK).with_detail(detail.clone()))
        .collect()
    }
}

/// Everything the streaming pass measures.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorSweep {
    pub steps: u64,
    pub total_norm: f64,
    /// `Σ_j ‖w_j‖`, what the triangle inequality alone would give.
    pub triangle_sum: f64,
    /// `‖E − Σ_blocks U_{L−1}···U_e S_block‖`.
    pub concatenation_gap: Option<f64>,
    pub blocks: Vec<BlockRecord>,
}

fn apply(es: &EigenSystem, rate: f64, v: &CVector) -> CVector {
    if rate == 0.0 {
        return v.clone();
    }
    es.apply_function_to(|lam| C64::from_polar(1.0, rate * lam), v)
}

fn tracked_index(es: &EigenSystem, state: &CVector) -> usize {
    let coeffs = es.coefficients(state);
    (0..coeffs.len()).fold(0, |best, k| if coeffs[k].norm() > coeffs[best].norm() { k } else { best })
}

/// Power sum `P` by repeated application and through the geometric sums of
/// the eigen-expansion of `w_b`.
fn power_sum(es: &EigenSystem, rate: f64, tracked: &CVector, wb: &CVector, len: u64) -> (CVector, CVector, bool, f64) {
    let mut p = CVector::zeros(wb.len());
    for _ in 0..len {
        p = apply(es, rate, &p) + wb;
    }
    let t = tracked_index(es, tracked);
    let coeffs = es.coefficients(wb);
    let mut closed = CVector::zeros(wb.len());
    let (mut resonant, mut max_phase) = (false, 0.0f64);
    for (k, &lam) in es.eigenvalues.iter().enumerate() {
        let theta = rate * lam;
        let g = geometric_sum_at(theta, len);
        if k != t {
            resonant |= g.resonant;
            max_phase = max_phase.max(theta.abs());
        }
        let z = C64::from_polar(1.0, theta);
        let sum = if g.resonant || (z - 1.0).norm() == 0.0 {
            C64::new(len as f64, 0.0)
        } else {
            (C64::from_polar(1.0, theta * len as f64) - 1.0) / (z - 1.0)
        };
        closed += es.eigenvectors.column(k).map(|v| v * coeffs[k] * sum);
    }
    (p, closed, resonant, max_phase)
}

/// One pass over `j = 1..=L`, building the total error vector by Horner's
/// rule and, when a configuration is given, every block's sums.
///
/// `h` must be in the zero-eigenvalue frame and `path` sampled at `j/L`.
pub fn error_sweep(h: &TimeDependentHamiltonian, path: &EigenPath, total_time: f64, cfg: Option<&ProofCheckConfig>) -> Result<ErrorSweep> {
    let l = (path.len() - 1) as u64;
    if l == 0 {
        return Err(Error::Domain("path must have at least two samples".into()));
    }
    if let Some(c) = cfg {
        if c.steps != l {
            return Err(Error::Domain(format!("configuration L = {} but path has L = {l}", c.steps)));
        }
    }
    let rate = total_time / l as f64;
    let g = path.states();
    let dim = h.dim();
    let zero = CVector::zeros(dim);

    let mut total = zero.clone();
    let mut concatenated = zero.clone();
    let mut triangle = 0.0;
    let mut blocks = Vec::new();
    let mut next_block = 0usize;
    // (start, end, w_b, S, A, P, P_geometric, resonant, max_phase)
    let mut open: Option<(u64, u64, CVector, CVector, CVector, CVector, CVector, bool, f64)> = None;

    let mut start = 1u64;
    while start <= l {
        let end = (start + CHUNK - 1).min(l);
        let systems: Vec<EigenSystem> = (start - 1..end)
            .into_par_iter()
            .map(|i| h.eval(i as f64 / l as f64).and_then(|op| decompose(&op)))
            .collect::<Result<_>>()?;
        for j in start..=end {
            let u = &systems[(j - start) as usize];
            let w = w_between(&g[j as usize - 1], &g[j as usize]);
            triangle += w.norm();
            total = apply(u, rate, &total) + &w;
            let Some(c) = cfg else { continue };
            concatenated = apply(u, rate, &concatenated);

            if next_block < c.block_starts.len() && c.block_starts[next_block] == j {
                let len = c.block_len(j);
                let es_b = decompose(&h.eval(j as f64 / l as f64)?)?;
                let (p, p_geo, resonant, phase) = power_sum(&es_b, rate, &g[j as usize], &w, len);
                open = Some((j, j + len - 1, w.clone(), w.clone(), w.clone(), p, p_geo, resonant, phase));
                next_block += 1;
            } else if let Some(ref mut blk) = open {
                blk.3 = apply(u, rate, &blk.3) + &w;
                blk.4 = apply(u, rate, &blk.4) + &blk.2;
            }
            if let Some(blk) = open.as_ref().filter(|b| b.1 == j) {
                let (b, e, _, s, a, p, p_geo, resonant, phase) = blk;
                blocks.push(BlockRecord {
                    start: *b,
                    len: e - b + 1,
                    trimmed: e - b + 1 < c.block_size,
                    sum: s.norm(),
                    w_replacement: (s - a).norm(),
                    u_replacement: (a - p).norm(),
                    power_sum: p.norm(),
                    approximation: (s - p).norm(),
                    power_sum_dual_gap: (p - p_geo).norm(),
                    resonant: *resonant,
                    small_angle: *phase <= FRAC_PI_2,
                    max_phase: *phase,
                });
                concatenated += s;
                open = None;
            }
        }
        start = end + 1;
    }
    Ok(ErrorSweep {
        steps: l,
        total_norm: total.norm(),
        triangle_sum: triangle,
        concatenation_gap: cfg.map(|_| (&total - &concatenated).norm()),
        blocks,
    })
}

impl ErrorSweep {
    /// Worst block per quantity, the concatenation identity and the
    /// dual evaluation of the power sums.
    pub fn block_entries(&self, cfg: &ProofCheckConfig) -> Vec<CheckEntry> {
        let l = cfg.steps as f64;
        let delta = cfg.delta;
        let trimmed = self.blocks.iter().filter(|b| b.trimmed).map(|b| b.len).next();
        let resonant = self.blocks.iter().filter(|b| b.resonant).count();
        let wide = self.blocks.iter().filter(|b| !b.small_angle).count();
        let context = format!(
            "{} blocks of Δ = {}{}; resonant blocks {resonant}; blocks with some |αT/L| > π/2: {wide}",
            self.blocks.len(),
            cfg.block_size,
            trimmed.map(|m| format!(", final block trimmed to {m}")).unwrap_or_default()
        );
        let worst = |name: &str, value: fn(&BlockRecord) -> f64, fraction: f64| {
            let target = delta * cfg.block_size as f64 * fraction / l;
            let entries = self
                .blocks
                .iter()
                .map(|b| (b, CheckEntry::at_most(name, value(b), target, BLOCK_SLACK)));
            let (b, e) = entries
                .max_by(|x, y| x.1.ratio().total_cmp(&y.1.ratio()))
                .expect("a valid configuration has at least one block");
            e.with_detail(format!("worst block starts at {} (length {}); {context}", b.start, b.len))
        };
        let dual = self.blocks.iter().map(|b| b.power_sum_dual_gap).fold(0.0, f64::max);
        let phase = self.blocks.iter().map(|b| b.max_phase).fold(0.0, f64::max);
        vec![
            CheckEntry::at_most("block_phase_regime", phase, FRAC_PI_2, 0.0)
                .with_detail("largest |αT/L| at a block start; the geometric-sum bound 4/|θ| needs |θ| ≤ π/2"),
            worst("block_sum", |b| b.sum, 1.0),
            worst("block_approximation", |b| b.approximation, 0.5),
            worst("block_w_replacement", |b| b.w_replacement, 0.25),
            worst("block_u_replacement", |b| b.u_replacement, 0.25),
            worst("block_power_sum", |b| b.power_sum, 0.5),
            CheckEntry::at_most("block_concatenation", self.concatenation_gap.unwrap_or(f64::NAN), IDENTITY_TOLERANCE, 0.0)
                .with_detail("‖E − Σ_blocks U_{L−1}···U_e S_block‖"),
            CheckEntry::at_most("power_sum_dual_evaluation", dual, IDENTITY_TOLERANCE, 0.0)
                .with_detail("repeated application vs geometric sums over the eigenbasis"),
        ]
    }

    /// `‖E‖ ≤ δ` and `‖E‖ ≤ 0.1·foil`.
    pub fn total_entries(&self, delta: f64, foil: f64) -> Vec<CheckEntry> {
        vec![
            CheckEntry::at_most("total_error_sum", self.total_norm, delta, 0.0).with_detail(format!("L = {}", self.steps)),
            CheckEntry::at_most("total_error_vs_foil", self.total_norm, FOIL_FRACTION * foil, 0.0).with_detail(format!(
                "foil ‖H'‖/λ = {foil:.6e}; Σ‖w_j‖ = {:.6e}",
                self.triangle_sum
            )),
        ]
    }
}

pub(crate) fn check_resources(l: u64, dim: usize) -> Result<()> {
    if l > TOTAL_SUM_MAX_STEPS || dim > TOTAL_SUM_MAX_DIM {
        return Err(Error::Infeasible(format!(
            "the total error sum is limited to L ≤ {TOTAL_SUM_MAX_STEPS} and dim ≤ {TOTAL_SUM_MAX_DIM}; requested L = {l}, dim = {dim} (needs {} step eigendecompositions of size {dim})",
            l
        )));
    }
    Ok(())
}

/// Total error sum against `δ` and against the foil `‖H'‖/λ`, plus all block
/// checks when `cfg` holds a valid block partition.
pub fn check_total_error_sum(
    h: &TimeDependentHamiltonian,
    path: &EigenPath,
    total_time: f64,
    delta: f64,
    foil: f64,
    cfg: Option<&ProofCheckConfig>,
) -> Result<(ErrorSweep, Vec<CheckEntry>)> {
    let l = (path.len() - 1) as u64;
    check_resources(l, h.dim())?;
    let sweep = error_sweep(h, path, total_time, cfg)?;
    let mut entries = Vec::new();
    if let Some(c) = cfg {
        entries.extend(sweep.block_entries(c));
    }
    entries.extend(sweep.total_entries(delta, foil));
    Ok((sweep, entries))
}

/// One block evaluated from explicit partial products of step unitaries.
pub fn check_block_bound(h: &TimeDependentHamiltonian, path: &EigenPath, cfg: &ProofCheckConfig, block: usize) -> Result<BlockRecord> {
    let b = *cfg
        .block_starts
        .get(block)
        .ok_or_else(|| Error::Domain(format!("block {block} out of range ({} blocks)", cfg.block_starts.len())))?;
    let l = cfg.steps;
    if (path.len() - 1) as u64 != l {
        return Err(Error::Domain("path is not sampled at j/L".into()));
    }
    let len = cfg.block_len(b);
    let e = b + len - 1;
    let rate = cfg.total_time / l as f64;
    let unitary = |j: u64| -> Result<CMatrix> {
        let es = decompose(&h.eval(j as f64 / l as f64)?)?;
        Ok(es.apply_function(|lam| C64::from_polar(1.0, rate * lam)))
    };
    let g = path.states();
    let w = |j: u64| w_between(&g[j as usize - 1], &g[j as usize]);
    let dim = h.dim();
    let wb = w(b);

    // M_j = U_{e−1}···U_j, built from the right end.
    let mut m = CMatrix::identity(dim, dim);
    let mut s = CVector::zeros(dim);
    let mut a = CVector::zeros(dim);
    for j in (b..=e).rev() {
        if j < e {
            m = &m * unitary(j)?;
        }
        s += &m * w(j);
        a += &m * &wb;
    }
    let ub = unitary(b)?;
    let mut power = CMatrix::identity(dim, dim);
    let mut p = CVector::zeros(dim);
    for _ in 0..len {
        p += &power * &wb;
        power = &ub * power;
    }
    let es_b = decompose(&h.eval(b as f64 / l as f64)?)?;
    let (_, p_geo, resonant, phase) = power_sum(&es_b, rate, &g[b as usize], &wb, len);
    Ok(BlockRecord {
        start: b,
        len,
        trimmed: len < cfg.block_size,
        sum: s.norm(),
        w_replacement: (&s - &a).norm(),
        u_replacement: (&a - &p).norm(),
        power_sum: p.norm(),
        approximation: (&s - &p).norm(),
        power_sum_dual_gap: (&p - &p_geo).norm(),
        resonant,
        small_angle: phase <= FRAC_PI_2,
        max_phase: phase,
    })
}
