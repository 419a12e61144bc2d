//! The geometric sum behind the cancellation argument:
//! `|Σ_{j<Δ} e^{ijθ}| = |e^{iΔθ} − 1| / |e^{iθ} − 1|` with `θ = αT/L`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::C64;

/// Phases this close to a multiple of `2π` are treated as resonant.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricSum {
    /// `θ = αT/L`.
    pub theta: f64,
    /// The sum's modulus; the direct sum when resonant.
    pub value: f64,
    pub direct: f64,
    /// Closed-form ratio; absent at resonance, where it degenerates.
    pub closed_form: Option<f64>,
    pub resonant: bool,
    /// `4/|θ|` when `|θ| ≤ π/2`, the regime where `|e^{iθ} − 1| ≥ |θ|/2` is used.
    pub bound: Option<f64>,
}

/// Distance from `theta` to the nearest multiple of `2π`.
pub fn distance_to_resonance(theta: f64) -> f64 {
    reduce(theta).abs()
}

/// `|Σ_{j=0}^{Δ−1} e^{iαjT/L}|`, evaluated by direct summation and by the
/// closed form.
pub fn geometric_sum_norm(alpha: f64, total_time: f64, steps: u64, terms: u64) -> Result<GeometricSum> {
    if steps == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    if !(alpha.is_finite() && total_time.is_finite()) {
        return Err(Error::Domain("alpha and T must be finite".into()));
    }
    let theta = alpha * total_time / steps as f64;
    Ok(geometric_sum_at(theta, terms))
}

/// `theta` shifted by a multiple of `2π` into `[−π, π]`.
fn reduce(theta: f64) -> f64 {
    theta - 2.0 * PI * (theta / (2.0 * PI)).round()
}

pub(crate) fn geometric_sum_at(theta: f64, terms: u64) -> GeometricSum {
    // Both evaluations use the reduced phase so they agree near resonance.
    let reduced = reduce(theta);
    let direct = (0..terms)
        .map(|j| C64::from_polar(1.0, j as f64 * reduced))
        .fold(C64::new(0.0, 0.0), |acc, z| acc + z)
        .norm();
    let resonant = reduced.abs() <= RESONANCE_TOLERANCE;
    let closed_form = (!resonant).then(|| ((terms as f64 * reduced / 2.0).sin() / (reduced / 2.0).sin()).abs());
    let bound = (theta.abs() <= FRAC_PI_2 && theta != 0.0).then(|| 4.0 / theta.abs());
    GeometricSum {
        theta,
        value: if resonant { terms as f64 } else { closed_form.unwrap_or(direct) },
        direct,
        closed_form,
        resonant,
        bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let g = geometric_sum_at(FRAC_PI_2, 4);
        assert!(g.value.abs() < 1e-15 && g.direct < 1e-15);
        let g = geometric_sum_at(PI, 3);
        assert!((g.value - 1.0).abs() < 1e-15 && (g.direct - 1.0).abs() < 1e-14);
        let g = geometric_sum_at(0.01, 100);
        let expected = (0.5f64.sin() / 0.005f64.sin()).abs();
        assert!((g.value - expected).abs() < 1e-10);
        assert!((g.value - 95.89).abs() < 0.01);
        assert!(g.value <= g.bound.unwrap() && g.bound.unwrap() == 400.0);
    }

    #[test]
    fn resonance_is_flagged() {
        let g = geometric_sum_norm(2.0 * PI, 1.0, 1, 7).unwrap();
        assert!(g.resonant);
        assert_eq!(g.value, 7.0);
        assert!(g.closed_form.is_none());
        assert!((g.direct - 7.0).abs() < 1e-12);
        let near = geometric_sum_norm(2.0 * PI + 1e-6, 1.0, 1, 7).unwrap();
        assert!(!near.resonant);
        assert!((near.closed_form.unwrap() - near.direct).abs() < 1e-10);
    }

    #[test]
    fn bound_applies_only_in_the_small_angle_regime() {
        assert!(geometric_sum_at(2.0, 10).bound.is_none());
        assert!(geometric_sum_at(0.0, 10).bound.is_none());
        assert!(geometric_sum_at(-1.0, 10).bound == Some(4.0));
    }

    #[test]
    fn chord_inequality_on_dense_grid() {
        // |e^{iθ} − 1| ≥ |θ|/2 for |θ| ≤ π/2.
        for k in 0..=100_000 {
            let th = -FRAC_PI_2 + PI * k as f64 / 100_000.0;
            assert!((C64::from_polar(1.0, th) - 1.0).norm() >= th.abs() / 2.0);
        }
    }
}
