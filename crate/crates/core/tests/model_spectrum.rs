use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use soliton_core::indicial::{critical_weights, fredholm_window_check, weights_to_csv};
use soliton_core::spectrum::{level_map, levels_to_csv};
use soliton_core::*;

#[test]
fn cigar_is_an_exact_soliton_in_every_dimension() {
    let g = Grid::standard();
    for n in 1..=3 {
        let m = cigar_model(n).unwrap();
        let r = soliton_residual(&m, &GridFunction::zeros(g)).unwrap();
        assert!(r.sup_norm() <= 1e-12, "n = {n}: {:e}", r.sup_norm());
    }
}

#[test]
fn cylinder_is_an_exact_soliton() {
    let g = Grid::new(-5.0, 20.0, 0.01).unwrap();
    let r = soliton_residual(&cylinder_model(2).unwrap(), &GridFunction::zeros(g)).unwrap();
    assert!(r.sup_norm() <= 1e-12);
}

#[test]
fn ricci_form_equals_half_lie_derivative() {
    // -½(log a)'' = a' on a soliton with X = 2∂_t
    let g = Grid::new(-6.0, 6.0, 0.005).unwrap();
    let ric = ricci_coefficient(&cigar_model(1).unwrap(), &g).unwrap();
    for i in 1..g.len() - 1 {
        let x = (2.0 * g.t(i)).exp();
        let exact = 2.0 * x / (1.0 + x).powi(2);
        assert!((ric.values()[i] - exact).abs() < 1e-5);
    }
}

#[test]
fn model_text_rejects_unknown_keys_with_line() {
    let err = RadialKahlerModel::from_text("kind = cigar\nn = 1\nradius = 3\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn window_zero_two_has_no_interior_weights() {
    let hex_z3 = vec![vec![0, 1], vec![-1, -1]];
    let z2 = vec![vec![-1, 0], vec![0, -1]];
    let mut sections = Vec::new();
    for ell in [PI, TAU] {
        sections.push(CrossSection::square(ell, 2, TAU).unwrap());
        sections.push(CrossSection::hexagonal(ell, TAU).unwrap());
        sections.push(
            CrossSection::square(ell, 2, TAU)
                .unwrap()
                .with_quotient(Quotient::new(2, z2.clone()).unwrap())
                .unwrap(),
        );
        sections.push(
            CrossSection::hexagonal(ell, TAU)
                .unwrap()
                .with_quotient(Quotient::new(3, hex_z3.clone()).unwrap())
                .unwrap(),
        );
    }
    for cs in sections {
        let mus: Vec<f64> = cs.invariant_spectrum(16.0).unwrap().iter().map(|l| l.mu).collect();
        let cws = critical_weights(&mus, (0.0, 2.0), 16.0).unwrap();
        let eps: Vec<f64> = cws.weights.iter().map(|w| w.epsilon).collect();
        assert_eq!(eps, vec![0.0, 2.0]);
        let check = fredholm_window_check(&cws, (0.0, 2.0)).unwrap();
        assert!(check.fredholm);
        assert_eq!(check.margin, 0.0);
        assert_eq!(weights_to_csv(&cws), "epsilon,mu,branch\n0,0,minus\n2,0,plus\n");
    }
}

#[test]
fn level_csv_format() {
    let cs = CrossSection::square(TAU, 2, TAU).unwrap();
    let levels = cs.spectrum(1.0 + 1e-9).unwrap();
    assert_eq!(levels_to_csv(&levels), "mu,multiplicity\n0,1\n1,6\n");
    assert_eq!(level_map(&levels).values().sum::<usize>(), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cigar_profile_invariants(t in -30.0f64..30.0) {
        let m = cigar_model(1).unwrap();
        let a = m.coefficient(t).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        let h = 1e-5;
        let df = (m.potential(t + h).unwrap() - m.potential(t - h).unwrap()) / (2.0 * h);
        prop_assert!((df - 2.0 * a).abs() < 1e-6);
        prop_assert!(m.potential(t).unwrap() >= 1.0);
    }

    #[test]
    fn no_critical_weight_strictly_inside_zero_two(
        ell in 0.5f64..10.0,
        a in 0.5f64..8.0,
        b in 0.5f64..8.0,
        shear in -0.9f64..0.9,
    ) {
        let cs = CrossSection::new(ell, vec![vec![a, 0.0], vec![shear * b, b]]).unwrap();
        let mus: Vec<f64> = cs.spectrum(8.0).unwrap().iter().map(|l| l.mu).collect();
        let cws = critical_weights(&mus, (-3.0, 5.0), 8.0).unwrap();
        prop_assert!(cws.weights.iter().all(|w| w.epsilon <= 0.0 || w.epsilon >= 2.0));
        for w in &cws.weights {
            prop_assert!(indicial::characteristic_residual(w.epsilon, w.mu).abs() < 1e-9);
        }
    }

    #[test]
    fn invariant_levels_never_exceed_full_levels(ell in prop::sample::select(vec![PI, TAU]), side in 1.0f64..7.0) {
        let cs = CrossSection::square(ell, 2, side).unwrap();
        let q = cs.clone().with_quotient(Quotient::new(2, vec![vec![-1, 0], vec![0, -1]]).unwrap()).unwrap();
        let full = level_map(&cs.spectrum(30.0).unwrap());
        let inv = level_map(&q.invariant_spectrum(30.0).unwrap());
        for (mu, m) in inv {
            prop_assert!(full.get(&mu).copied().unwrap_or(0) >= m);
        }
    }

    #[test]
    fn model_text_round_trips(c0 in -5.0f64..5.0, n in 1usize..4) {
        let m = cigar_model(n).unwrap().with_potential_offset(c0).unwrap();
        prop_assert_eq!(RadialKahlerModel::from_text(&m.to_text()).unwrap(), m);
    }
}
