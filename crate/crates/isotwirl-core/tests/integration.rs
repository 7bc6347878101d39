//! Cross-module checks of the exact algebra against independent routes.

use isotwirl_core::hamiltonians::{cb_spectrum, CbHamiltonian, ToricCode};
use isotwirl_core::linalg::{to_f64, RatMatrix};
use isotwirl_core::probes::{ProbeEngine, ProbeKind};
use isotwirl_core::spectral::{gde_averages, sff_explicit, FormFactors, Source};
use isotwirl_core::weingarten::{gram, weingarten_by_characters, weingarten_by_inversion, GramKind};

const KINDS: [GramKind; 3] = [GramKind::Plain, GramKind::QProjected, GramKind::QPerpProjected];

#[test]
fn weingarten_inversion_agrees_with_characters() {
    for d in [8u64, 16, 64] {
        for kind in KINDS {
            let a = weingarten_by_inversion(kind, d).unwrap();
            let b = weingarten_by_characters(kind, d).unwrap();
            assert_eq!(a.values, b.values, "{} at d={d}", kind.name());
            assert!(!a.singular());
        }
    }
}

#[test]
fn plain_weingarten_inverts_gram_at_odd_dimension() {
    let d = 5;
    let g = gram(GramKind::Plain, d).unwrap();
    let w = weingarten_by_characters(GramKind::Plain, d).unwrap().matrix();
    assert_eq!(g.mul(&w), RatMatrix::identity(24));
}

#[test]
fn projected_weingarten_is_generalized_inverse() {
    for d in [8u64, 16] {
        for kind in [GramKind::QProjected, GramKind::QPerpProjected] {
            let g = gram(kind, d).unwrap();
            let w = weingarten_by_characters(kind, d).unwrap().matrix();
            assert_eq!(g.mul(&w).mul(&g), g, "{} at d={d}", kind.name());
            assert_eq!(w.mul(&g).mul(&w), w, "{} at d={d}", kind.name());
        }
    }
}

#[test]
fn toric_levels_match_materialized_spectrum() {
    let code = ToricCode::new(2, 1.0).unwrap();
    let total: u64 = code.levels().iter().map(|&(_, g)| g).sum();
    assert_eq!(total, code.dim());
    let s = code.spectrum().unwrap();
    for t in [0.0, 0.37, 1.9, 12.5] {
        let a = code.sff(t);
        let b = sff_explicit(&s, t);
        let scale = (code.dim() as f64).powi(4);
        assert!((a.g2 - b.g2).abs() < 1e-9 * scale, "g2 at t={t}");
        assert!((a.g4 - b.g4).abs() < 1e-9 * scale, "g4 at t={t}");
        assert!((a.g3_re - b.g3_re).abs() < 1e-9 * scale, "g3 at t={t}");
    }
}

#[test]
fn cb_product_form_matches_explicit_sum() {
    let omegas = vec![0.3711, 0.9137, 1.5329, 2.2903];
    let h = CbHamiltonian::new(omegas.clone()).unwrap();
    let s = cb_spectrum(&omegas).unwrap();
    for t in [0.2, 3.0, 41.0] {
        let a = h.product_form(t);
        let b = sff_explicit(&s, t);
        assert!((a.g2 - b.g2).abs() < 1e-9 * b.g2.abs().max(1.0));
        assert!((a.g4 - b.g4).abs() < 1e-9 * b.g4.abs().max(1.0));
    }
}

#[test]
fn probes_are_trivial_at_zero_time() {
    let d = 16;
    let engine = ProbeEngine::new(d, Some(0.7)).unwrap();
    let ff = FormFactors::at_zero(d, Source::Explicit);
    let l2 = engine.haar(ProbeKind::Loschmidt2, &ff);
    assert!((l2 - 1.0).abs() < 1e-12, "Loschmidt echo {l2}");
    let otoc = engine.haar(ProbeKind::Otoc4, &ff);
    // X₁ and Z_N act on different qubits, so they commute at t = 0.
    assert!((otoc - 1.0).abs() < 1e-12, "commuting OTOC {otoc}");
    for kind in ProbeKind::ALL {
        let h = engine.haar(kind, &ff);
        let c = engine.clifford(kind, &ff).unwrap();
        assert!((h - c).abs() < 1e-12, "{} Haar {h} vs Clifford {c}", kind.name());
        for k in [1, 5] {
            let x = engine.doped(kind, &ff, k).unwrap();
            assert!((h - x).abs() < 1e-10, "{} doped k={k}: {x} vs {h}", kind.name());
        }
    }
}

#[test]
fn gde_averages_start_at_counting_values() {
    for d in [4u64, 32] {
        let a = gde_averages(d, 0.0).unwrap();
        let b = FormFactors::at_zero(d, Source::Gde);
        assert!((a.g2 - b.g2).abs() < 1e-9 * b.g2);
        assert!((a.g4 - b.g4).abs() < 1e-9 * b.g4);
        assert!((a.g3_re - b.g3_re).abs() < 1e-9 * b.g3_re);
    }
}

#[test]
fn weingarten_diagonal_is_positive_in_float() {
    for kind in KINDS {
        let w = weingarten_by_characters(kind, 32).unwrap();
        assert!(to_f64(&w.values[0]) > 0.0);
    }
}
