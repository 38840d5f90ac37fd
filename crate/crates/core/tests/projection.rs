mod common;

use std::f64::consts::PI;

use common::fourier_multiplier;
use hillspec::arcs::spectrum_portrait;
use hillspec::criterion::Verdict;
use hillspec::potential::Potential;
use hillspec::projection::{
    expand, fiber_expansion, gelfand_forward, gelfand_inverse, project_band, resolvent_apply, uniform_t_grid, GridFunction,
};
use hillspec::{Config, HillError, C64};
use proptest::prelude::*;

fn cfg() -> Config {
    Config::default()
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn free_band_projection_is_a_frequency_window() {
    let v = Potential::zero();
    let p = spectrum_portrait(&v, 3, &cfg()).unwrap();
    let g = GridFunction::gaussian(4, 128, 0.5, 0.4).unwrap();
    let pg = project_band(&v, &p, 2, &g, &cfg()).unwrap();
    let oracle = fourier_multiplier(&g.x_grid, &g.values, g.h(), 3.0, |xi| {
        let a = xi.abs();
        C64::new(if (1.0..2.0).contains(&a) { 1.0 } else { 0.0 }, 0.0)
    });
    // the window edges are discontinuous in ξ, so the oracle quadrature limits the match
    assert!(rel(&pg.values, &oracle) < 1e-3, "{}", rel(&pg.values, &oracle));
}

#[test]
fn free_resolvent_matches_fourier_multiplier() {
    let v = Potential::zero();
    let g = GridFunction::gaussian(4, 128, 0.3, 0.5).unwrap();
    for z in [C64::new(-1.0, 0.0), C64::new(2.0, 1.5)] {
        let r = resolvent_apply(&v, z, &g, &cfg()).unwrap();
        let oracle = fourier_multiplier(&g.x_grid, &g.values, g.h(), 20.0, |xi| 1.0 / (xi * xi - z));
        assert!(rel(&r.values, &oracle) < 1e-6, "z = {z}: {}", rel(&r.values, &oracle));
    }
}

#[test]
fn resolvent_inverts_the_differential_expression() {
    let v = Potential::mathieu(0.4);
    let z = C64::new(-2.0, 0.0);
    let w = 0.4;
    let u = |x: f64| (-(x - 0.5).powi(2) / (2.0 * w * w)).exp();
    // -u'' + (V - z) u for the Gaussian
    let lu = |x: f64| {
        let d = x - 0.5;
        let upp = u(x) * (d * d / w.powi(4) - 1.0 / (w * w));
        C64::new(-upp, 0.0) + (v.evaluate(x) - z) * u(x)
    };
    let f = GridFunction::from_fn(4, 256, lu).unwrap();
    let r = resolvent_apply(&v, z, &f, &cfg()).unwrap();
    let exact: Vec<C64> = r.x_grid.iter().map(|&x| C64::new(u(x), 0.0)).collect();
    assert!(rel(&r.values, &exact) < 1e-4, "{}", rel(&r.values, &exact));
}

#[test]
fn resolvent_refuses_points_on_the_spectrum() {
    let g = GridFunction::gaussian(2, 64, 0.0, 0.5).unwrap();
    let err = resolvent_apply(&Potential::zero(), C64::new(2.0, 0.0), &g, &cfg()).unwrap_err();
    assert!(matches!(err, HillError::NearSpectrum { .. }));
}

#[test]
fn expansion_refused_after_a_failing_verdict() {
    let v = Potential::zero();
    let p = spectrum_portrait(&v, 2, &cfg()).unwrap();
    let g = GridFunction::gaussian(2, 64, 0.0, 0.5).unwrap();
    let err = expand(&v, &p, &g, 2, Verdict::Fail, false, &cfg()).unwrap_err();
    assert!(matches!(err, HillError::ExpansionRefused));
    assert!(expand(&v, &p, &g, 2, Verdict::Fail, true, &cfg()).is_ok());
}

#[test]
fn fiber_expansion_reproduces_quasi_periodic_functions() {
    let t = 1.1;
    // smooth quasi-periodic f: f(x + π) = e^{it} f(x)
    let f = |x: f64| C64::from_polar(1.0, t * x / PI) * C64::new(1.0 + 0.5 * (2.0 * x).cos(), 0.3 * (4.0 * x).sin());
    for v in [Potential::zero(), Potential::mathieu(C64::new(0.3, 0.2))] {
        let e = fiber_expansion(&v, t, f, 12, &cfg()).unwrap();
        assert!(e.residual < 1e-6, "{}: {}", v.label(), e.residual);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gelfand_round_trip(seed in any::<u64>(), cells in 1usize..4) {
        let mut s = seed | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let p = 16;
        let vals: Vec<C64> = (0..2 * cells * p).map(|_| C64::new(next(), next())).collect();
        let g = GridFunction::from_values(cells, p, vals).unwrap();
        let field = gelfand_forward(&g, &uniform_t_grid(2 * cells + 1));
        prop_assert!((field.norm() - g.norm()).abs() <= 1e-10 * g.norm());
        let back = gelfand_inverse(&field).unwrap();
        prop_assert!(back.sub(&g).unwrap().norm() <= 1e-10 * g.norm());
    }
}
