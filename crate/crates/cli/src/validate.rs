//! Invariant suite behind `hillspec validate`.

use std::f64::consts::PI;

use anyhow::Result;
use hillspec::floquet::{delta_dot_lagrange, monodromy, transfer};
use hillspec::potential::{Potential, PotentialSpec};
use hillspec::projection::{biorthogonality, gelfand_forward, gelfand_inverse, spectral_matrix, uniform_t_grid, GridFunction};
use hillspec::spectra::{expand, fiber_bands};
use hillspec::{Config, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance, note: String::new() }
    }

    fn failed(name: &str, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Check { name: name.into(), value: f64::NAN, tolerance, pass: false, note: err.to_string() }
    }
}

#[derive(Serialize)]
pub struct ValidateDoc {
    pub potential: PotentialSpec,
    pub k_max: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

fn random_disk(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            C64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
        })
        .collect()
}

fn record(name: &str, tol: f64, r: hillspec::Result<f64>) -> Check {
    match r {
        Ok(v) => Check::new(name, v, tol),
        Err(e) => Check::failed(name, tol, e),
    }
}

fn max_of(list: hillspec::Result<Vec<f64>>) -> hillspec::Result<f64> {
    list.map(|l| l.into_iter().fold(0.0, f64::max))
}

/// Residuals of the Wronskian, discriminant and multiplier identities, each divided by the
/// size of the terms involved.
fn identities(v: &Potential, zs: &[C64], cfg: &Config) -> hillspec::Result<[f64; 4]> {
    let rows = zs
        .par_iter()
        .map(|&z| {
            let md = monodromy(v, z, &cfg.floquet)?;
            let scale = 1.0 + (md.m11 * md.m22).norm() + (md.m12 * md.m21).norm();
            let det = (md.m11 * md.m22 - md.m12 * md.m21 - 1.0).norm() / scale;
            let dp2 = md.delta_plus * md.delta_plus;
            let dm2 = md.delta_minus * md.delta_minus;
            let pt = md.m12 * md.m21;
            let disc = (dp2 - 1.0 - dm2 - pt).norm() / (1.0 + dp2.norm() + dm2.norm() + pt.norm());
            let rho = (md.rho_plus * md.rho_minus - 1.0).norm() / (1.0 + md.rho_minus.norm());
            let mfun = match (md.m_plus, md.m_minus) {
                (Some(a), Some(b)) => {
                    let s1 = (a + b + md.delta_minus * 2.0 / md.m12).norm() / (1.0 + a.norm() + b.norm());
                    let s2 = (a * b + md.m21 / md.m12).norm() / (1.0 + (a * b).norm());
                    s1.max(s2)
                }
                _ => 0.0,
            };
            Ok([det, disc, rho, mfun])
        })
        .collect::<hillspec::Result<Vec<[f64; 4]>>>()?;
    let mut out = [0.0f64; 4];
    for r in rows {
        for j in 0..4 {
            out[j] = out[j].max(r[j]);
        }
    }
    Ok(out)
}

pub fn run(potential: PotentialSpec, v: &Potential, k_max: usize, seed: u64, cfg: &Config) -> Result<(ValidateDoc, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let free = Potential::zero();
    let zs = random_disk(&mut rng, 50, 100.0);
    let closed = zs
        .par_iter()
        .map(|&z| {
            let tr = transfer(&free, z, cfg.floquet.tol)?;
            let r = z.sqrt();
            let a = (tr.delta_plus() - (r * PI).cos()).norm() / (1.0 + tr.delta_plus().norm());
            let b = (tr.m[1] - (r * PI).sin() / r).norm() / (1.0 + tr.m[1].norm());
            Ok(a.max(b))
        })
        .collect();
    checks.push(record("free_closed_forms", 1e-8, max_of(closed)));

    match identities(v, &random_disk(&mut rng, 50, 100.0), cfg) {
        Ok([det, disc, rho, mfun]) => {
            checks.push(Check::new("wronskian_det_m", det, 1e-10));
            checks.push(Check::new("discriminant_identity", disc, 1e-9));
            checks.push(Check::new("multiplier_product", rho, 1e-10));
            checks.push(Check::new("m_function_identities", mfun, 1e-9));
        }
        Err(e) => checks.push(Check::failed("transfer_identities", 1e-9, e)),
    }

    // near the spectrum; far from the real axis the Lagrange terms cancel catastrophically
    let zs: Vec<C64> = (0..20).map(|_| C64::new(rng.gen_range(-2.0..100.0), rng.gen_range(-5.0..5.0))).collect();
    let cross = zs
        .par_iter()
        .map(|&z| {
            let md = monodromy(v, z, &cfg.floquet)?;
            match delta_dot_lagrange(v, z, &cfg.floquet) {
                Ok(l) => Ok((l - md.delta_plus_dot).norm() / (1.0 + md.delta_plus_dot.norm())),
                Err(hillspec::HillError::DirichletPoint { .. }) => Ok(0.0),
                Err(e) => Err(e),
            }
        })
        .collect();
    checks.push(record("delta_dot_lagrange", 1e-7, max_of(cross)));

    let kb = k_max.min(8);
    let bio = [0.5, 1.5, 2.5].par_iter().map(|&t| biorthogonality(v, t, kb, cfg).map(|b| b.max_residual)).collect();
    checks.push(record("fiber_biorthogonality", 1e-7, max_of(bio)));

    let vals: Vec<C64> = (0..2 * 4 * 32)
        .map(|i| if (64..192).contains(&i) { C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { C64::new(0.0, 0.0) })
        .collect();
    let g = GridFunction::from_values(4, 32, vals)?;
    let field = gelfand_forward(&g, &uniform_t_grid(16));
    let back = gelfand_inverse(&field)?;
    let unitarity = (field.norm() - g.norm()).abs() / g.norm();
    let inversion = back.sub(&g)?.norm() / g.norm();
    checks.push(Check::new("gelfand_unitarity", unitarity, 1e-10));
    checks.push(Check::new("gelfand_inversion", inversion, 1e-10));

    let t = 1.0;
    let det = fiber_bands(v, t, k_max.min(4), cfg).and_then(|eig| {
        let list = expand(&eig);
        max_of(
            list.par_iter()
                .map(|&e| {
                    let s = spectral_matrix(v, e, t, cfg)?;
                    let d = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                    Ok((d * (4.0 * PI * PI) - 1.0).norm())
                })
                .collect(),
        )
    });
    checks.push(record("spectral_matrix_determinant", 1e-8, det));

    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    let mut table = String::new();
    for c in &checks {
        table.push_str(&format!(
            "{:<30} {:>12.3e} {:>10.1e}  {}{}\n",
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" },
            if c.note.is_empty() { String::new() } else { format!("  ({})", c.note) }
        ));
    }
    let doc = ValidateDoc { potential, k_max, seed, checks, passed, failed };
    Ok((doc, table))
}
