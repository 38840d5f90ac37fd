mod common;

use std::f64::consts::PI;

use common::{hill_dirichlet_eigenvalues, hill_fiber_eigenvalues};
use hillspec::potential::Potential;
use hillspec::spectra::{catalog, dirichlet_spectrum, expand, fiber_spectrum, periodic_antiperiodic_spectrum};
use hillspec::{Config, Potential64, C64};

fn cfg() -> Config {
    Config::default()
}

fn sort(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    v
}

fn max_dist(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn fiber_spectrum_of_complex_mathieu_matches_hill_matrix() {
    let v = Potential::mathieu(C64::new(0.3, 0.1));
    for t in [0.7, 2.0] {
        let got = sort(expand(&fiber_spectrum(&v, t, 4, &cfg()).unwrap()));
        let oracle = hill_fiber_eigenvalues(&v.coefficients(), t, 32);
        assert_eq!(got.len(), 7);
        assert!(max_dist(&got, &oracle[..7]) < 1e-7, "t = {t}: {got:?}");
    }
}

#[test]
fn dirichlet_spectrum_of_complex_potential_matches_sine_basis() {
    let v = Potential::mathieu(C64::new(0.3, 0.1));
    let got = sort(expand(&dirichlet_spectrum(&v, 5, &cfg()).unwrap()));
    let oracle = hill_dirichlet_eigenvalues(&v.coefficients(), 64);
    assert!(max_dist(&got, &oracle[..5]) < 1e-6, "{got:?}");
}

#[test]
fn narrow_mathieu_gaps_are_resolved_against_the_oracle() {
    // gaps 5 and 6 of mathieu(0.5) are narrower than the root finder's cluster radius
    let v = Potential::mathieu(0.5);
    let (per, anti) = periodic_antiperiodic_spectrum(&v, 6, &cfg()).unwrap();
    let per = sort(expand(&per));
    let anti = sort(expand(&anti));
    let per_oracle = hill_fiber_eigenvalues(&v.coefficients(), 0.0, 32);
    let anti_oracle = hill_fiber_eigenvalues(&v.coefficients(), PI, 32);
    assert!(max_dist(&per[..7], &per_oracle[..7]) < 1e-9, "{per:?}");
    assert!(max_dist(&anti[..6], &anti_oracle[..6]) < 1e-9, "{anti:?}");
    assert!(anti[5].re - anti[4].re > 1e-7);
}

#[test]
fn frozen_mathieu_values() {
    let cat = catalog(&Potential::mathieu(0.5), 6, &cfg()).unwrap();
    let per = sort(cat.periodic_expanded());
    let anti = sort(cat.antiperiodic_expanded());
    let dir = sort(expand(&cat.dirichlet));
    let close = |a: C64, b: f64| (a - b).norm() < 1e-10;
    assert!(close(per[0], -0.12176554494097), "{:?}", per[0]);
    assert!(close(anti[0], 0.47065435493415), "{:?}", anti[0]);
    assert!(close(dir[0], 0.47065435493415), "{:?}", dir[0]);
    assert!(close(anti[4], 25.00520901030229), "{:?}", anti[4]);
    assert!(close(anti[5], 25.00520943383556), "{:?}", anti[5]);
}

#[test]
fn free_coexistence_and_jordan_points_stay_double() {
    let (per, anti) = periodic_antiperiodic_spectrum(&Potential::zero(), 4, &cfg()).unwrap();
    let mults: Vec<usize> = per.iter().chain(&anti).map(|e| e.multiplicity).collect();
    assert_eq!(&mults[..3], &[1, 2, 2]);
    // the gasymov potential is isospectral to zero but its double points are Jordan blocks
    let (per, _) = periodic_antiperiodic_spectrum(&Potential::gasymov(1.0), 4, &cfg()).unwrap();
    assert_eq!(per[1].multiplicity, 2);
    assert!((per[1].z - 4.0).norm() < 1e-8);
}

#[test]
fn shifted_potential_shifts_the_spectrum() {
    let base = dirichlet_spectrum(&Potential::mathieu(0.5), 3, &cfg()).unwrap();
    let mut coeffs = Potential64::mathieu(0.5).coefficients();
    coeffs.insert(0, C64::new(0.7, -0.2));
    let moved = dirichlet_spectrum(&Potential::fourier(coeffs), 3, &cfg()).unwrap();
    for (a, b) in base.iter().zip(&moved) {
        assert!((b.z - a.z - C64::new(0.7, -0.2)).norm() < 1e-9);
    }
}
