//! Shifting the tracked eigenvalue to zero, checked on the whole library.

use adiabatic_core::evolution::{distance_phase_invariant, evolve_discrete, EvolutionConfig, StateVector};
use adiabatic_core::hamiltonian::norm_bundle;
use adiabatic_core::problems::gapped_library;
use adiabatic_core::proofcheck::{check_eigenvector_derivative_bounds, check_gamma_bounds};
use adiabatic_core::spectral::{spectral_gap, track_eigenpath, Selector};
use adiabatic_core::theorem::shift_to_special_case;

#[test]
fn shifted_and_original_evolutions_agree_up_to_phase() {
    for spec in gapped_library() {
        let h = spec.build().unwrap();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let shifted = shift_to_special_case(&h, &path).unwrap();
        let psi0 = StateVector::new(path.first().clone()).unwrap();
        let cfg = EvolutionConfig::new(100.0, 20_000).unwrap();
        let a = evolve_discrete(&h, &psi0, &cfg).unwrap().final_state;
        let b = evolve_discrete(&shifted, &psi0, &cfg).unwrap().final_state;
        let d = distance_phase_invariant(&a, &b).unwrap();
        assert!(d <= 1e-8, "{}: {d}", spec.name());
    }
}

#[test]
fn shifted_norms_obey_the_derivative_bounds() {
    for spec in gapped_library() {
        let h = spec.build().unwrap();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let lambda = spectral_gap(&h, &path).unwrap().lambda_min;
        let shifted = shift_to_special_case(&h, &path).unwrap();
        let n = norm_bundle(&h, 1025).unwrap();
        let sn = norm_bundle(&shifted, 1025).unwrap();
        assert!(sn.norm_h1 <= 2.0 * n.norm_h1 + 1e-6, "{}: {sn:?} vs {n:?}", spec.name());
        assert!(
            sn.norm_h2 <= 2.0 * n.norm_h2 + 4.0 * n.norm_h1 * n.norm_h1 / lambda + 1e-6,
            "{}: {sn:?} vs {n:?}",
            spec.name()
        );
        // The tracked level of the shifted Hamiltonian sits at zero on the knots.
        let moved = track_eigenpath(&shifted, 1025, &Selector::Ground).unwrap();
        assert!(moved.gammas().iter().all(|g| g.abs() < 1e-10), "{}", spec.name());
    }
}

#[test]
fn eigenvalue_derivative_bounds_hold_on_the_library() {
    for spec in gapped_library() {
        let h = spec.build().unwrap();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let lambda = spectral_gap(&h, &path).unwrap().lambda_min;
        let n = norm_bundle(&h, 1025).unwrap();
        for e in check_gamma_bounds(&path, n.norm_h1, n.norm_h2, lambda).unwrap() {
            assert!(e.pass, "{}: {e:?}", spec.name());
        }
    }
}

#[test]
fn eigenvector_derivative_bounds_hold_in_the_zero_frame() {
    for spec in gapped_library() {
        let h = spec.build().unwrap();
        let path = track_eigenpath(&h, 1025, &Selector::Ground).unwrap();
        let lambda = spectral_gap(&h, &path).unwrap().lambda_min;
        let sn = norm_bundle(&shift_to_special_case(&h, &path).unwrap(), 1025).unwrap();
        for e in check_eigenvector_derivative_bounds(&path, sn.norm_h1, sn.norm_h2, lambda).unwrap() {
            assert!(e.pass, "{}: {e:?}", spec.name());
        }
    }
}
