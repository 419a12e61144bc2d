use adiabatic_core::evolution::{
    distance_l2, distance_phase_invariant, evolve_discrete, step_unitary, EvolutionConfig, SignConvention, StateVector,
};
use adiabatic_core::hamiltonian::{CMatrix, CVector, C64};
use adiabatic_core::numerics::ClampedSpline;
use adiabatic_core::problems::{landau_zener, random_interpolation};
use adiabatic_core::proofcheck::{geometric_sum_norm, ladder_entry, Rung};
use proptest::prelude::*;
use std::f64::consts::PI;

fn state(parts: &[(f64, f64)]) -> StateVector {
    StateVector::normalized(CVector::from_iterator(parts.len(), parts.iter().map(|&(a, b)| C64::new(a, b)))).unwrap()
}

fn amplitudes(dim: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim).prop_filter("nonzero", |v| v.iter().any(|&(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_unitaries_are_unitary(dim in 2usize..7, seed in 0u64..1000, j in 0u64..50, t in 0.1..500.0f64) {
        let h = random_interpolation(dim, seed).unwrap();
        let cfg = EvolutionConfig::new(t, 50).unwrap();
        let u = step_unitary(&h, j, &cfg).unwrap();
        let defect = (u.adjoint() * &u - CMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(defect < 1e-12);
    }

    #[test]
    fn sign_convention_does_not_change_distances(t in 0.5..50.0f64, l in 4u64..400) {
        // Real Hamiltonian, real start: the two conventions are complex conjugates.
        let h = landau_zener();
        let psi0 = StateVector::basis(2, 1).unwrap();
        let target = StateVector::basis(2, 0).unwrap();
        let plus = evolve_discrete(&h, &psi0, &EvolutionConfig::new(t, l).unwrap()).unwrap().final_state;
        let cfg = EvolutionConfig::new(t, l).unwrap().with_sign(SignConvention::PhysicsMinus);
        let minus = evolve_discrete(&h, &psi0, &cfg).unwrap().final_state;
        let conj = StateVector::new(minus.amplitudes().map(|z| z.conj())).unwrap();
        prop_assert!(distance_l2(&plus, &conj).unwrap() < 1e-12);
        let dp = distance_phase_invariant(&plus, &target).unwrap();
        let dm = distance_phase_invariant(&minus, &target).unwrap();
        prop_assert!((dp - dm).abs() < 1e-12);
    }

    #[test]
    fn distance_axioms(a in amplitudes(4), b in amplitudes(4), phase in -PI..PI) {
        let (x, y) = (state(&a), state(&b));
        let rotated = StateVector::new(y.amplitudes().map(|z| z * C64::from_polar(1.0, phase))).unwrap();
        let d = distance_phase_invariant(&x, &y).unwrap();
        prop_assert!((d - distance_phase_invariant(&y, &x).unwrap()).abs() < 1e-14);
        prop_assert!((d - distance_phase_invariant(&x, &rotated).unwrap()).abs() < 1e-14);
        prop_assert!(d <= distance_l2(&x, &y).unwrap() + 1e-15);
        prop_assert!((0.0..=2f64.sqrt() + 1e-15).contains(&d));
        prop_assert!(distance_phase_invariant(&y, &rotated).unwrap() < 1e-14);
    }

    #[test]
    fn geometric_sum_evaluations_agree(alpha in 0.01..20.0f64, t in 1.0..1e4f64, l in 10u64..100_000, terms in 1u64..1000) {
        let g = geometric_sum_norm(alpha, t, l, terms).unwrap();
        prop_assume!(!g.resonant);
        prop_assert!((g.closed_form.unwrap() - g.direct).abs() < 1e-10);
        prop_assert!(g.direct <= terms as f64 + 1e-9);
        if let Some(b) = g.bound {
            prop_assert!(g.value <= b);
        }
    }

    #[test]
    fn clamped_spline_reproduces_cubics(c in prop::array::uniform4(-3.0..3.0f64), n in 4usize..40, x in 0.0..1.0f64) {
        let p = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let dp = |x: f64| c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        let knots: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let values = knots.iter().map(|&k| p(k)).collect();
        let spline = ClampedSpline::new(knots, values, dp(0.0), dp(1.0)).unwrap();
        let (v, d, dd) = spline.eval_all(x);
        prop_assert!((v - p(x)).abs() < 1e-10);
        prop_assert!((d - dp(x)).abs() < 1e-8);
        prop_assert!((dd - (2.0 * c[2] + 6.0 * c[3] * x)).abs() < 1e-6);
    }

    #[test]
    fn ladder_accepts_remainders_of_the_declared_order(c in 0.0..100.0f64, b in 0.1..10.0f64, q in 2i32..4) {
        let rungs: Vec<Rung> = (0..5).map(|i| {
            let l = 8000u64 >> i;
            let lf = l as f64;
            Rung { steps: l, measured: b / lf + c / lf.powi(q), bound: b / lf }
        }).collect();
        prop_assert!(ladder_entry("p", &rungs, 0.0, q).pass);
    }
}
