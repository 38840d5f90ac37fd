use hillspec::arcs::spectrum_portrait;
use hillspec::criterion::{riesz_basis_diagnostic, trend_levels_off, validate_parametrization_asymptotics, RieszMode};
use hillspec::floquet::transfer;
use hillspec::potential::Potential;
use hillspec::{Config, C64};
use proptest::prelude::*;

fn cfg() -> Config {
    Config::default()
}

#[test]
fn free_arcs_cover_the_half_line() {
    let v = Potential::zero();
    let p = spectrum_portrait(&v, 4, &cfg()).unwrap();
    for n in 1..=4usize {
        let arcs = p.band(n);
        assert!(!arcs.is_empty());
        for arc in arcs {
            for (t, l) in arc.t_samples.iter().zip(&arc.lambda_samples) {
                assert!(l.im.abs() < 1e-9);
                let lo = ((n - 1) * (n - 1)) as f64;
                let hi = (n * n) as f64;
                assert!(l.re >= lo - 1e-9 && l.re <= hi + 1e-9);
                let d = transfer(&v, *l, 1e-12).unwrap().delta_plus();
                assert!((d - t.cos()).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn gasymov_singular_point_at_one() {
    let p = spectrum_portrait(&Potential::gasymov(1.0), 3, &cfg()).unwrap();
    let hit = p.singular_points.iter().any(|s| (s.lambda - 1.0).norm() < 1e-6 && s.spectral_singularity);
    assert!(hit, "{:?}", p.singular_points);
}

#[test]
fn free_eigenfunctions_form_an_orthonormal_basis() {
    let d = riesz_basis_diagnostic(&Potential::zero(), 1.0, 8, 3, &cfg()).unwrap();
    assert_eq!(d.mode, RieszMode::Frame);
    assert!((d.bound - 1.0).abs() < 1e-8, "{}", d.bound);
}

#[test]
fn mathieu_parametrization_residuals_stay_bounded() {
    let a = validate_parametrization_asymptotics(&Potential::mathieu(C64::new(0.5, 0.2)), 8, &cfg()).unwrap();
    assert!(a.bounded, "{:?}", a.octave_max);
}

proptest! {
    #[test]
    fn constant_sequences_level_off(c in 1e-3..1e3f64, n in 2usize..8) {
        prop_assert!(trend_levels_off(&vec![c; n], 0.0));
    }

    #[test]
    fn geometric_growth_does_not_level_off(c in 1e-3..1e3f64, r in 1.5..4.0f64, n in 3usize..8) {
        let seq: Vec<f64> = (0..n).map(|k| c * r.powi(k as i32)).collect();
        prop_assert!(!trend_levels_off(&seq, 0.05));
    }
}
