//! Time-dependent Hamiltonians `H(s)`, `s ∈ [0, 1]`, their derivatives and
//! the sup-norm bundle `‖H‖, ‖H'‖, ‖H''‖` consumed by the runtime bounds.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{golden_section_max, unit_grid};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance applied to every evaluated matrix.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default number of points for sup-norm grids.
pub const DEFAULT_NORM_GRID: usize = 1025;

/// Dense complex matrix certified Hermitian, of dimension at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Certifies `matrix`. Nearly-Hermitian input is rejected, never symmetrized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Integrity(format!(
                "matrix is {}x{}, expected square",
                n,
                matrix.ncols()
            )));
        }
        if n < 2 {
            return Err(Error::Integrity(format!("dimension {n} is below 2")));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = HERMITIAN_TOLERANCE * scale;
        for i in 0..n {
            for j in i..n {
                let defect = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if defect > tol {
                    return Err(Error::Integrity(format!(
                        "entry ({i},{j}) breaks Hermiticity by {defect:.3e} (tolerance {tol:.3e})"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(rows[i].get(j).copied().unwrap_or(f64::NAN), 0.0));
        Self::new(m)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(entries[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim))
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("Pauli X is Hermitian")
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("Pauli Z is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Real linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Domain(format!(
                "dimension mismatch {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            matrix: self.matrix.map(|z| z * a) + other.matrix.map(|z| z * b),
        })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let dim = self.dim();
        let eig = SymmetricEigen::try_new(self.matrix.clone(), f64::EPSILON, 1000 * dim)
            .ok_or_else(|| Error::Numerical(format!("eigenvalue iteration failed for a {dim}x{dim} matrix")))?;
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }
}

/// Largest absolute eigenvalue of a Hermitian operator.
pub fn operator_norm(a: &HermitianOperator) -> Result<f64> {
    if a.matrix.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let vals = a.eigenvalues()?;
    Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
}

pub type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// How `H'` and `H''` are obtained.
#[derive(Clone)]
pub enum DerivativeMode {
    /// Closed-form derivatives supplied with the instance.
    Analytic { first: MatrixFn, second: MatrixFn },
    /// Central differences of accuracy `h²`, one-sided second-order stencils at the ends.
    FiniteDifference { step: f64 },
}

impl fmt::Debug for DerivativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeMode::Analytic { .. } => f.write_str("Analytic"),
            DerivativeMode::FiniteDifference { step } => write!(f, "FiniteDifference({step})"),
        }
    }
}

/// Instance name and numeric parameters, echoed into reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InstanceMetadata {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
}

impl InstanceMetadata {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }
}

/// Sampler for `H(s)`, `s ∈ [0, 1]`. Evaluators must be pure functions of `s`.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    evaluator: MatrixFn,
    derivatives: DerivativeMode,
    metadata: InstanceMetadata,
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentHamiltonian")
            .field("dim", &self.dim)
            .field("derivatives", &self.derivatives)
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl TimeDependentHamiltonian {
    pub fn new<F>(dim: usize, evaluator: F, derivatives: DerivativeMode, metadata: InstanceMetadata) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        Self {
            dim,
            evaluator: Arc::new(evaluator),
            derivatives,
            metadata,
        }
    }

    /// `H(s) = (1 - s)·H₀ + s·H₁` with exact derivatives.
    pub fn linear(h0: &HermitianOperator, h1: &HermitianOperator, metadata: InstanceMetadata) -> Result<Self> {
        if h0.dim() != h1.dim() {
            return Err(Error::Domain(format!(
                "endpoint dimensions differ: {} vs {}",
                h0.dim(),
                h1.dim()
            )));
        }
        let dim = h0.dim();
        let (a, b) = (h0.matrix.clone(), h1.matrix.clone());
        let slope = &b - &a;
        let zero = CMatrix::zeros(dim, dim);
        Ok(Self::new(
            dim,
            move |s| a.map(|z| z * (1.0 - s)) + b.map(|z| z * s),
            DerivativeMode::Analytic {
                first: Arc::new(move |_| slope.clone()),
                second: Arc::new(move |_| zero.clone()),
            },
            metadata,
        ))
    }

    /// Time-independent Hamiltonian.
    pub fn constant(h: &HermitianOperator, metadata: InstanceMetadata) -> Self {
        let dim = h.dim();
        let m = h.matrix.clone();
        let zero = CMatrix::zeros(dim, dim);
        let zero2 = zero.clone();
        Self::new(
            dim,
            move |_| m.clone(),
            DerivativeMode::Analytic {
                first: Arc::new(move |_| zero.clone()),
                second: Arc::new(move |_| zero2.clone()),
            },
            metadata,
        )
    }

    /// Same evaluator, derivatives replaced by finite differences with step `h`.
    pub fn with_finite_differences(&self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step < 0.25) {
            return Err(Error::Domain(format!("finite-difference step {step} outside (0, 0.25)")));
        }
        let mut out = self.clone();
        out.derivatives = DerivativeMode::FiniteDifference { step };
        Ok(out)
    }

    /// `c·H(s)`, derivatives scaled accordingly.
    pub fn scaled(&self, c: f64) -> Self {
        let eval = self.evaluator.clone();
        let derivatives = match &self.derivatives {
            DerivativeMode::Analytic { first, second } => {
                let (f1, f2) = (first.clone(), second.clone());
                DerivativeMode::Analytic {
                    first: Arc::new(move |s| f1(s).map(|z| z * c)),
                    second: Arc::new(move |s| f2(s).map(|z| z * c)),
                }
            }
            fd @ DerivativeMode::FiniteDifference { .. } => fd.clone(),
        };
        let mut metadata = self.metadata.clone();
        metadata.parameters.insert("scale".into(), c);
        Self::new(self.dim, move |s| eval(s).map(|z| z * c), derivatives, metadata)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metadata(&self) -> &InstanceMetadata {
        &self.metadata
    }

    pub fn derivative_mode(&self) -> &DerivativeMode {
        &self.derivatives
    }

    /// The raw, uncertified evaluator.
    pub(crate) fn evaluator(&self) -> MatrixFn {
        self.evaluator.clone()
    }

    fn check_s(s: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("s = {s} lies outside [0, 1]")));
        }
        Ok(())
    }

    fn certify(&self, m: CMatrix, what: &str, s: f64) -> Result<HermitianOperator> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Integrity(format!(
                "{what} at s = {s} has shape {}x{}, declared dim {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        HermitianOperator::new(m).map_err(|e| match e {
            Error::Integrity(msg) => Error::Integrity(format!("{what} at s = {s}: {msg}")),
            other => other,
        })
    }

    /// `H(s)`.
    pub fn eval(&self, s: f64) -> Result<HermitianOperator> {
        Self::check_s(s)?;
        self.certify((self.evaluator)(s), "H", s)
    }

    /// `H'(s)` (order 1) or `H''(s)` (order 2).
    pub fn derivative(&self, s: f64, order: u8) -> Result<HermitianOperator> {
        Self::check_s(s)?;
        let m = match (&self.derivatives, order) {
            (DerivativeMode::Analytic { first, .. }, 1) => first(s),
            (DerivativeMode::Analytic { second, .. }, 2) => second(s),
            (DerivativeMode::FiniteDifference { step }, 1 | 2) => self.finite_difference(s, *step, order),
            (_, o) => return Err(Error::Domain(format!("derivative order {o} not in {{1, 2}}"))),
        };
        let what = if order == 1 { "H'" } else { "H''" };
        self.certify(m, what, s)
    }

    fn finite_difference(&self, s: f64, h: f64, order: u8) -> CMatrix {
        let f = |x: f64| (self.evaluator)(x.clamp(0.0, 1.0));
        let lin = |terms: &[(f64, f64)], denom: f64| {
            let mut acc = CMatrix::zeros(self.dim, self.dim);
            for &(w, x) in terms {
                acc += f(x).map(|z| z * w);
            }
            acc.map(|z| z / denom)
        };
        let forward = s - h < 0.0;
        let backward = s + h > 1.0;
        match (order, forward, backward) {
            (1, false, false) => lin(&[(1.0, s + h), (-1.0, s - h)], 2.0 * h),
            (1, true, _) => lin(&[(-3.0, s), (4.0, s + h), (-1.0, s + 2.0 * h)], 2.0 * h),
            (1, false, true) => lin(&[(3.0, s), (-4.0, s - h), (1.0, s - 2.0 * h)], 2.0 * h),
            (_, false, false) => lin(&[(1.0, s + h), (-2.0, s), (1.0, s - h)], h * h),
            (_, true, _) => lin(
                &[(2.0, s), (-5.0, s + h), (4.0, s + 2.0 * h), (-1.0, s + 3.0 * h)],
                h * h,
            ),
            (_, false, true) => lin(
                &[(2.0, s), (-5.0, s - h), (4.0, s - 2.0 * h), (-1.0, s - 3.0 * h)],
                h * h,
            ),
        }
    }
}

/// Grid maxima of `‖H(s)‖`, `‖H'(s)‖`, `‖H''(s)‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBundle {
    pub norm_h: f64,
    pub norm_h1: f64,
    pub norm_h2: f64,
    pub grid_size: usize,
}

/// Sup-norms over the uniform grid `{j/(grid_size-1)}`, each refined by a
/// golden-section search around its grid argmax.
pub fn norm_bundle(h: &TimeDependentHamiltonian, grid_size: usize) -> Result<NormBundle> {
    if grid_size < 2 {
        return Err(Error::Domain(format!("grid_size {grid_size} is below 2")));
    }
    let grid = unit_grid(grid_size);
    let sup = |order: u8| -> Result<f64> {
        let norm_at = |s: f64| -> Result<f64> {
            let op = if order == 0 { h.eval(s)? } else { h.derivative(s, order)? };
            operator_norm(&op)
        };
        let values: Vec<f64> = grid.par_iter().map(|&s| norm_at(s)).collect::<Result<_>>()?;
        let (idx, grid_max) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if grid_max == 0.0 {
            return Ok(0.0);
        }
        let lo = grid[idx.saturating_sub(1)];
        let hi = grid[(idx + 1).min(grid_size - 1)];
        let (_, refined) = golden_section_max(norm_at, lo, hi, 1e-9 * (hi - lo).max(1e-12))?;
        Ok(grid_max.max(refined))
    };
    Ok(NormBundle {
        norm_h: sup(0)?,
        norm_h1: sup(1)?,
        norm_h2: sup(2)?,
        grid_size,
    })
}
