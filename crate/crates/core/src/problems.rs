//! Deterministic library of interpolating Hamiltonians.
//!
//! Multi-qubit operators use big-endian ordering: qubit 0 is the most
//! significant bit of the basis index.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{CMatrix, HermitianOperator, InstanceMetadata, TimeDependentHamiltonian, C64};

pub const MAX_GROVER_QUBITS: u32 = 10;
pub const MAX_ISING_QUBITS: u32 = 8;
pub const MIN_RANDOM_DIM: usize = 2;
pub const MAX_RANDOM_DIM: usize = 64;

/// A named instance with its parameters, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// `(1−s)Z + sX`.
    LandauZener,
    /// Unstructured search over `n` qubits for basis state `marked`.
    Grover { n: u32, marked: u64 },
    /// `−(1−s)ΣXᵢ − s·J·ΣZᵢZᵢ₊₁` on an open chain.
    TransverseIsing {
        n: u32,
        #[serde(rename = "J")]
        coupling: f64,
    },
    /// `(1−s)H₀ + sH₁` with Gaussian Hermitian endpoints.
    RandomInterpolation { dim: usize, seed: u64 },
    /// A fixed diagonal Hamiltonian.
    Constant { diagonal: Vec<f64> },
}

/// Closed-form facts an instance is known to satisfy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AnalyticFacts {
    /// Minimum ground-state gap over `[0, 1]`.
    pub min_gap: Option<f64>,
    pub gap_argmin: Option<f64>,
    pub norm_h1: Option<f64>,
    pub norm_h2: Option<f64>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<TimeDependentHamiltonian> {
        match self {
            Self::LandauZener => Ok(landau_zener()),
            Self::Grover { n, marked } => grover(*n, *marked),
            Self::TransverseIsing { n, coupling } => transverse_ising(*n, *coupling),
            Self::RandomInterpolation { dim, seed } => random_interpolation(*dim, *seed),
            Self::Constant { diagonal } => constant(diagonal),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LandauZener => "landau_zener",
            Self::Grover { .. } => "grover",
            Self::TransverseIsing { .. } => "transverse_ising",
            Self::RandomInterpolation { .. } => "random_interpolation",
            Self::Constant { .. } => "constant",
        }
    }

    pub fn facts(&self) -> AnalyticFacts {
        match self {
            Self::LandauZener => AnalyticFacts {
                min_gap: Some(2f64.sqrt()),
                gap_argmin: Some(0.5),
                norm_h1: Some(2f64.sqrt()),
                norm_h2: Some(0.0),
            },
            Self::Grover { n, .. } => {
                let size = (1u64 << n) as f64;
                AnalyticFacts {
                    min_gap: Some(1.0 / size.sqrt()),
                    gap_argmin: Some(0.5),
                    norm_h1: Some((1.0 - 1.0 / size).sqrt()),
                    norm_h2: Some(0.0),
                }
            }
            Self::TransverseIsing { .. } | Self::RandomInterpolation { .. } => AnalyticFacts {
                norm_h2: Some(0.0),
                ..Default::default()
            },
            Self::Constant { diagonal } => {
                let mut d = diagonal.clone();
                d.sort_by(f64::total_cmp);
                AnalyticFacts {
                    min_gap: (d.len() > 1).then(|| d[1] - d[0]),
                    gap_argmin: None,
                    norm_h1: Some(0.0),
                    norm_h2: Some(0.0),
                }
            }
        }
    }

    /// Full spectrum at `s`, ascending, where a closed form is known.
    pub fn exact_spectrum(&self, s: f64) -> Option<Vec<f64>> {
        match self {
            Self::LandauZener => {
                let r = ((1.0 - s).powi(2) + s * s).sqrt();
                Some(vec![-r, r])
            }
            Self::Grover { n, .. } => {
                let size = 1usize << n;
                let g = grover_gap(*n, s);
                let mut v = vec![(1.0 - g) / 2.0, (1.0 + g) / 2.0];
                v.extend(std::iter::repeat_n(1.0, size - 2));
                Some(v)
            }
            Self::TransverseIsing { n, .. } if *n == 1 || s == 0.0 => {
                // Σ Xᵢ has eigenvalue n − 2k with multiplicity C(n, k).
                let n = *n as usize;
                let mut v: Vec<f64> = (0..1usize << n)
                    .map(|b| -(1.0 - s) * (n as f64 - 2.0 * b.count_ones() as f64))
                    .collect();
                v.sort_by(f64::total_cmp);
                Some(v)
            }
            Self::Constant { diagonal } => {
                let mut d = diagonal.clone();
                d.sort_by(f64::total_cmp);
                Some(d)
            }
            _ => None,
        }
    }
}

/// `√(1 − 4(1 − 1/N)s(1−s))`.
pub fn grover_gap(n: u32, s: f64) -> f64 {
    let size = (1u64 << n) as f64;
    (1.0 - 4.0 * (1.0 - 1.0 / size) * s * (1.0 - s)).sqrt()
}

/// The instances with a strictly positive ground-state gap on `[0, 1]`.
pub fn gapped_library() -> Vec<InstanceSpec> {
    vec![
        InstanceSpec::LandauZener,
        InstanceSpec::Grover { n: 2, marked: 0 },
        InstanceSpec::Grover { n: 3, marked: 5 },
        InstanceSpec::RandomInterpolation { dim: 4, seed: 7 },
        InstanceSpec::Constant {
            diagonal: vec![0.0, 1.0, 2.5],
        },
    ]
}

pub fn landau_zener() -> TimeDependentHamiltonian {
    TimeDependentHamiltonian::linear(
        &HermitianOperator::pauli_z(),
        &HermitianOperator::pauli_x(),
        InstanceMetadata::named("landau_zener"),
    )
    .expect("Pauli matrices share a dimension")
}

fn projector_complement(v: &[C64]) -> Result<HermitianOperator> {
    let n = v.len();
    let m = CMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        id - v[i] * v[j].conj()
    });
    HermitianOperator::new(m)
}

pub fn grover(n: u32, marked: u64) -> Result<TimeDependentHamiltonian> {
    if !(1..=MAX_GROVER_QUBITS).contains(&n) {
        return Err(Error::Domain(format!("grover needs 1 ≤ n ≤ {MAX_GROVER_QUBITS}, got {n}")));
    }
    let size = 1usize << n;
    if marked >= size as u64 {
        return Err(Error::Domain(format!("marked state {marked} outside 0..{size}")));
    }
    let uniform = vec![C64::new(1.0 / (size as f64).sqrt(), 0.0); size];
    let mut target = vec![C64::new(0.0, 0.0); size];
    target[marked as usize] = C64::new(1.0, 0.0);
    TimeDependentHamiltonian::linear(
        &projector_complement(&uniform)?,
        &projector_complement(&target)?,
        InstanceMetadata::named("grover").with("n", n as f64).with("marked", marked as f64),
    )
}

pub fn transverse_ising(n: u32, coupling: f64) -> Result<TimeDependentHamiltonian> {
    if !(1..=MAX_ISING_QUBITS).contains(&n) {
        return Err(Error::Domain(format!("transverse_ising needs 1 ≤ n ≤ {MAX_ISING_QUBITS}, got {n}")));
    }
    if !coupling.is_finite() {
        return Err(Error::Domain(format!("coupling J = {coupling} must be finite")));
    }
    let size = 1usize << n;
    let bit = |q: u32| 1usize << (n - 1 - q);
    let mut field = DMatrix::<f64>::zeros(size, size);
    let mut bonds = DMatrix::<f64>::zeros(size, size);
    for b in 0..size {
        for q in 0..n {
            field[(b ^ bit(q), b)] -= 1.0;
        }
        let zz: f64 = (0..n.saturating_sub(1))
            .map(|q| if ((b & bit(q)) == 0) == ((b & bit(q + 1)) == 0) { 1.0 } else { -1.0 })
            .sum();
        bonds[(b, b)] = -coupling * zz;
    }
    let lift = |m: &DMatrix<f64>| HermitianOperator::new(m.map(|x| C64::new(x, 0.0)));
    TimeDependentHamiltonian::linear(
        &lift(&field)?,
        &lift(&bonds)?,
        InstanceMetadata::named("transverse_ising").with("n", n as f64).with("J", coupling),
    )
}

fn gaussian_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    let mut a = CMatrix::zeros(dim, dim);
    for z in a.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = C64::new(re, im);
    }
    let sym = (&a + a.adjoint()).map(|z| z * 0.5);
    HermitianOperator::new(sym)
}

pub fn random_interpolation(dim: usize, seed: u64) -> Result<TimeDependentHamiltonian> {
    if !(MIN_RANDOM_DIM..=MAX_RANDOM_DIM).contains(&dim) {
        return Err(Error::Domain(format!(
            "random_interpolation needs {MIN_RANDOM_DIM} ≤ dim ≤ {MAX_RANDOM_DIM}, got {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = gaussian_hermitian(dim, &mut rng)?;
    let h1 = gaussian_hermitian(dim, &mut rng)?;
    TimeDependentHamiltonian::linear(
        &h0,
        &h1,
        InstanceMetadata::named("random_interpolation").with("dim", dim as f64).with("seed", seed as f64),
    )
}

pub fn constant(diagonal: &[f64]) -> Result<TimeDependentHamiltonian> {
    if diagonal.is_empty() {
        return Err(Error::Domain("constant instance needs a nonempty diagonal".into()));
    }
    let h = HermitianOperator::diagonal(diagonal)?;
    Ok(TimeDependentHamiltonian::constant(&h, InstanceMetadata::named("constant")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::norm_bundle;
    use crate::spectral::{spectral_gap, track_eigenpath, Selector};
    use std::f64::consts::SQRT_2;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn landau_zener_endpoints() {
        let h = landau_zener();
        assert!(close(h.eval(0.0).unwrap().matrix(), HermitianOperator::pauli_z().matrix(), 0.0));
        let path = track_eigenpath(&h, 33, &Selector::Ground).unwrap();
        let g1 = path.last();
        // |⟨(1, −1)/√2, g⟩| = 1.
        let ov = (g1[0] - g1[1]).norm() / SQRT_2;
        assert!((ov - 1.0).abs() < 1e-12, "ground(1) ∝ (1, −1)");
        let gap = spectral_gap(&h, &track_eigenpath(&h, 1025, &Selector::Ground).unwrap()).unwrap();
        assert!((gap.lambda_min - SQRT_2).abs() < 1e-8);
        assert!((gap.argmin_s - 0.5).abs() < 1e-6);
    }

    #[test]
    fn grover_two_qubits() {
        let spec = InstanceSpec::Grover { n: 2, marked: 3 };
        let h = spec.build().unwrap();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let gap = spectral_gap(&h, &path).unwrap();
        assert!((gap.lambda_min - 0.5).abs() < 1e-8);
        assert!((gap.argmin_s - 0.5).abs() < 1e-6);
        let norms = norm_bundle(&h, 257).unwrap();
        assert!((norms.norm_h1 - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((path.last()[3].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grover_gap_formula_matches_eigenvalues() {
        // 1 − 4(1 − 1/4)·¼ = ¼.
        assert!((grover_gap(2, 0.5) - 0.5).abs() < 1e-15);
        for n in 1..=4 {
            let spec = InstanceSpec::Grover { n, marked: 1 };
            let h = spec.build().unwrap();
            for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
                let got = h.eval(s).unwrap().eigenvalues().unwrap();
                let want = spec.exact_spectrum(s).unwrap();
                let mut want = want.clone();
                want.sort_by(f64::total_cmp);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-8, "n = {n}, s = {s}: {got:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn ising_single_qubit_has_no_coupling() {
        let h = transverse_ising(1, 3.0).unwrap();
        for s in [0.0, 0.4, 1.0] {
            let expected = HermitianOperator::pauli_x().matrix().map(|z| z * -(1.0 - s));
            assert!(close(h.eval(s).unwrap().matrix(), &expected, 1e-15));
        }
    }

    #[test]
    fn ising_endpoints() {
        let h = transverse_ising(2, 1.0).unwrap();
        // −Z₁Z₂ on |00⟩, |01⟩, |10⟩, |11⟩.
        let end = h.eval(1.0).unwrap();
        let want = [-1.0, 1.0, 1.0, -1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((end.matrix()[(k, k)].re - w).abs() < 1e-15);
        }
        let mut ev = end.eigenvalues().unwrap();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![-1.0, -1.0, 1.0, 1.0]);

        let start = crate::spectral::decompose(&h.eval(0.0).unwrap()).unwrap();
        assert!((start.eigenvalues[1] - start.eigenvalues[0] - 2.0).abs() < 1e-12);
        let g = start.vector(0);
        assert!(g.iter().all(|z| (z.norm() - 0.5).abs() < 1e-12));
        let spec = InstanceSpec::TransverseIsing { n: 3, coupling: 0.7 };
        let got = spec.build().unwrap().eval(0.0).unwrap().eigenvalues().unwrap();
        for (a, b) in got.iter().zip(spec.exact_spectrum(0.0).unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ising_degenerate_end_collapses_the_gap() {
        let h = transverse_ising(2, 1.0).unwrap();
        assert!(matches!(
            track_eigenpath(&h, 257, &Selector::Ground),
            Err(Error::GapCollapse { .. })
        ));
    }

    #[test]
    fn random_interpolation_is_deterministic() {
        let a = random_interpolation(5, 42).unwrap();
        let b = random_interpolation(5, 42).unwrap();
        let c = random_interpolation(5, 43).unwrap();
        for s in [0.0, 0.3, 1.0] {
            assert_eq!(a.eval(s).unwrap().matrix(), b.eval(s).unwrap().matrix());
            assert_ne!(a.eval(s).unwrap().matrix(), c.eval(s).unwrap().matrix());
        }
        let na = norm_bundle(&a, 129).unwrap();
        let nb = norm_bundle(&b, 129).unwrap();
        assert_eq!(na.norm_h.to_bits(), nb.norm_h.to_bits());
        assert_eq!(na.norm_h1.to_bits(), nb.norm_h1.to_bits());
        assert_eq!(na.norm_h2, 0.0);
    }

    #[test]
    fn random_two_level_gap_matches_closed_form() {
        let h = random_interpolation(2, 11).unwrap();
        let closed = |s: f64| {
            let m = h.eval(s).unwrap().into_matrix();
            let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
            ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt()
        };
        let scan = (0..=200_000).map(|k| closed(k as f64 / 200_000.0)).fold(f64::INFINITY, f64::min);
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let gap = spectral_gap(&h, &path).unwrap();
        assert!((gap.lambda_min - scan).abs() < 1e-8, "{} vs {scan}", gap.lambda_min);
        assert!((closed(gap.argmin_s) - gap.lambda_min).abs() < 1e-12);
    }

    #[test]
    fn library_facts_match_spectral_measurements() {
        for spec in gapped_library() {
            let h = spec.build().unwrap();
            let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
            let gap = spectral_gap(&h, &path).unwrap();
            let facts = spec.facts();
            if let Some(g) = facts.min_gap {
                assert!((gap.lambda_min - g).abs() < 1e-8, "{spec:?}");
            }
            if let Some(x) = facts.gap_argmin {
                assert!((gap.argmin_s - x).abs() < 1e-6, "{spec:?}");
            }
            let norms = norm_bundle(&h, 257).unwrap();
            if let Some(n1) = facts.norm_h1 {
                assert!((norms.norm_h1 - n1).abs() < 1e-12, "{spec:?}");
            }
            for (k, &s) in path.grid().iter().enumerate().step_by(64) {
                if let Some(spectrum) = spec.exact_spectrum(s) {
                    assert!((path.gammas()[k] - spectrum[0]).abs() < 1e-8, "{spec:?} at {s}");
                }
            }
        }
    }

    #[test]
    fn specs_parse_from_toml() {
        let spec: InstanceSpec = toml::from_str("kind = \"transverse_ising\"\nn = 3\nJ = 0.5").unwrap();
        assert_eq!(spec, InstanceSpec::TransverseIsing { n: 3, coupling: 0.5 });
        let spec: InstanceSpec = toml::from_str("kind = \"landau_zener\"").unwrap();
        assert_eq!(spec, InstanceSpec::LandauZener);
        assert!(toml::from_str::<InstanceSpec>("kind = \"grover\"\nn = 2\nmarked = 0\nextra = 1").is_err());
        assert!(toml::from_str::<InstanceSpec>("kind = \"heisenberg\"").is_err());
    }

    #[test]
    fn range_violations_are_rejected() {
        assert!(grover(0, 0).is_err());
        assert!(grover(11, 0).is_err());
        assert!(grover(2, 4).is_err());
        assert!(transverse_ising(9, 1.0).is_err());
        assert!(transverse_ising(2, f64::NAN).is_err());
        assert!(random_interpolation(1, 0).is_err());
        assert!(random_interpolation(65, 0).is_err());
        assert!(constant(&[]).is_err());
    }
}
