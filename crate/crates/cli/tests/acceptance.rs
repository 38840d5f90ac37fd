//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest harness so
//! the lines are always printed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{fourier_multiplier, hill_dirichlet_eigenvalues, hill_fiber_eigenvalues, rk4_monodromy, Xorshift};
use hillspec::arcs::spectrum_portrait;
use hillspec::criterion::{evaluate_criterion, Verdict};
use hillspec::floquet::{delta_dot_lagrange, monodromy, transfer};
use hillspec::potential::Potential;
use hillspec::projection::{biorthogonality, expand, gelfand_forward, gelfand_inverse, project_band, uniform_t_grid, GridFunction};
use hillspec::spectra::{catalog, fiber_asymptotic_residuals};
use hillspec::{Config, HillError, C64};

const TOL_FREE: f64 = 1e-8;
const TOL_DET: f64 = 1e-10;
const TOL_RHO: f64 = 1e-10;
const TOL_L21: f64 = 1e-9;
const TOL_MFUN: f64 = 1e-9;
const TOL_LAGRANGE: f64 = 1e-7;
const TOL_ZERO_SPECTRA: f64 = 1e-8;
const TOL_HILL_ORACLE: f64 = 1e-6;
const TOL_GASYMOV: f64 = 1e-8;
const TOL_RATIO_FREE: f64 = 1e-6;
const TOL_SINGULAR_POINT: f64 = 1e-6;
const DIRICHLET_FLOOR: f64 = 1e-6;
const TOL_INTERLACE: f64 = 1e-9;
const ASYMPTOTIC_STABILITY: f64 = 0.10;
const TOL_IDEMPOTENT: f64 = 1e-3;
const TOL_DISJOINT: f64 = 1e-3;
const TOL_EXPANSION: f64 = 5e-2;
const TOL_FREE_EXPANSION_ORACLE: f64 = 1e-4;
const TOL_BIORTH: f64 = 1e-7;
const TOL_GELFAND: f64 = 1e-10;
const RUNTIME_FREE: Duration = Duration::from_secs(10);
const RUNTIME_PROJECTION: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn presets() -> Vec<Potential> {
    vec![Potential::zero(), Potential::mathieu(0.5), Potential::gasymov(1.0), Potential::mathieu(C64::new(0.3, 0.1))]
}

/// Residuals are divided by the size of the quantities they compare; entire functions of
/// order 1/2 reach `e^{π |Im √z|}` on the disk, far beyond double precision in absolute terms.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let v = Potential::zero();
    let mut rng = Xorshift(0x9e3779b97f4a7c15);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let z = rng.in_disk(100.0);
        let tr = transfer(&v, z, 1e-12).unwrap();
        let r = z.sqrt();
        let c = (r * PI).cos();
        let s = (r * PI).sin() / r;
        worst = worst.max((tr.delta_plus() - c).norm() / (1.0 + c.norm()));
        worst = worst.max((tr.m[1] - s).norm() / (1.0 + s.norm()));
    }
    let took = start.elapsed();
    outcome(worst <= TOL_FREE && took < RUNTIME_FREE, format!("max residual {worst:.2e} (tol {TOL_FREE:.0e}), {took:.2?}"))
}

fn criterion_2(cfg: &Config) -> Outcome {
    let mut rng = Xorshift(12345);
    let mut worst = [0.0f64; 4];
    for v in presets() {
        for _ in 0..200 {
            let z = rng.in_disk(100.0);
            let md = monodromy(&v, z, &cfg.floquet).unwrap();
            let scale = 1.0 + (md.m11 * md.m22).norm() + (md.m12 * md.m21).norm();
            worst[0] = worst[0].max((md.m11 * md.m22 - md.m12 * md.m21 - 1.0).norm() / scale);
            worst[1] = worst[1].max((md.rho_plus * md.rho_minus - 1.0).norm());
            let dp2 = md.delta_plus * md.delta_plus;
            let dm2 = md.delta_minus * md.delta_minus;
            let pt = md.m12 * md.m21;
            worst[2] = worst[2].max((dp2 - 1.0 - dm2 - pt).norm() / (1.0 + dp2.norm() + dm2.norm() + pt.norm()));
            if let (Some(a), Some(b)) = (md.m_plus, md.m_minus) {
                let s1 = (a + b + md.delta_minus * 2.0 / md.m12).norm() / (1.0 + a.norm() + b.norm());
                let s2 = (a * b + md.m21 / md.m12).norm() / (1.0 + (a * b).norm());
                worst[3] = worst[3].max(s1.max(s2));
            }
        }
    }
    let pass = worst[0] <= TOL_DET && worst[1] <= TOL_RHO && worst[2] <= TOL_L21 && worst[3] <= TOL_MFUN;
    outcome(pass, format!("det {:.1e}, rho {:.1e}, discriminant {:.1e}, m-functions {:.1e}", worst[0], worst[1], worst[2], worst[3]))
}

/// Sampled on the rectangle around the spectrum where `Δ₊•` is consumed. Far from the real
/// axis the Lagrange terms grow like the square of the monodromy entries and cancel down to
/// `Δ₊•`, which costs about `π |Im √z| / ln 10` digits.
fn criterion_3(cfg: &Config) -> Outcome {
    let mut rng = Xorshift(777);
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for v in presets() {
        let mut done = 0;
        while done < 50 {
            let z = C64::new(-2.0 + 102.0 * rng.next_f64(), -5.0 + 10.0 * rng.next_f64());
            let md = monodromy(&v, z, &cfg.floquet).unwrap();
            match delta_dot_lagrange(&v, z, &cfg.floquet) {
                Ok(l) => {
                    worst = worst.max((l - md.delta_plus_dot).norm() / (1.0 + md.delta_plus_dot.norm()));
                    done += 1;
                }
                Err(HillError::DirichletPoint { .. }) => skipped += 1,
                Err(e) => return outcome(false, format!("{e}")),
            }
        }
    }
    outcome(worst <= TOL_LAGRANGE, format!("max relative disagreement {worst:.2e} over 200 points, {skipped} Dirichlet points skipped"))
}

fn sorted_re(mut list: Vec<C64>) -> Vec<C64> {
    list.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    list
}

fn max_gap(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn criterion_4(cfg: &Config) -> Outcome {
    let zero = catalog(&Potential::zero(), 4, cfg).unwrap();
    let sq = |k: usize| C64::new((k * k) as f64, 0.0);
    let dir: Vec<C64> = zero.dirichlet.iter().map(|e| e.z).collect();
    let crit: Vec<C64> = zero.critical.iter().map(|c| c.delta).collect();
    let per = zero.periodic_expanded();
    let anti = zero.antiperiodic_expanded();
    let e_zero = [
        max_gap(&dir, &(1..=dir.len().max(4)).map(sq).collect::<Vec<_>>()),
        max_gap(&per[..5.min(per.len())], &[0, 2, 2, 4, 4].map(sq)),
        max_gap(&anti[..4.min(anti.len())], &[1, 1, 3, 3].map(sq)),
        max_gap(&crit, &(1..=crit.len().max(3)).map(sq).collect::<Vec<_>>()),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let v = Potential::mathieu(0.5);
    let k = 6;
    let cat = catalog(&v, k, cfg).unwrap();
    let coeffs = v.coefficients();
    let per_oracle = hill_fiber_eigenvalues(&coeffs, 0.0, 32);
    let anti_oracle = hill_fiber_eigenvalues(&coeffs, PI, 32);
    let dir_oracle = hill_dirichlet_eigenvalues(&coeffs, 64);
    let per = sorted_re(cat.periodic_expanded());
    let anti = sorted_re(cat.antiperiodic_expanded());
    let dir = sorted_re(cat.dirichlet.iter().map(|e| e.z).collect());
    let e_hill = [
        max_gap(&per, &per_oracle[..per.len()]),
        max_gap(&anti, &anti_oracle[..anti.len()]),
        max_gap(&dir, &dir_oracle[..dir.len()]),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    outcome(
        e_zero <= TOL_ZERO_SPECTRA && e_hill <= TOL_HILL_ORACLE,
        format!("zero potential {e_zero:.1e} (tol {TOL_ZERO_SPECTRA:.0e}), mathieu(0.5) vs 64-mode oracle {e_hill:.1e} (tol {TOL_HILL_ORACLE:.0e})"),
    )
}

fn criterion_5(cfg: &Config) -> Outcome {
    let v = Potential::gasymov(1.0);
    let mut rng = Xorshift(4242);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let z = rng.in_disk(100.0);
        let md = monodromy(&v, z, &cfg.floquet).unwrap();
        let c = (z.sqrt() * PI).cos();
        worst = worst.max((md.delta_plus - c).norm() / (1.0 + c.norm()));
    }
    outcome(worst <= TOL_GASYMOV, format!("max relative residual {worst:.2e} over 200 points in |z| <= 100"))
}

fn criterion_6(cfg: &Config) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let (zero, _) = evaluate_criterion(&Potential::zero(), 8, cfg).unwrap();
    let (z_portrait_ratio, _) = {
        let v = Potential::zero();
        let p = spectrum_portrait(&v, 8, cfg).unwrap();
        let d = hillspec::criterion::ratio_diagnostics(&v, &p, cfg).unwrap();
        let dev = d.samples.iter().map(|s| (s.ratios[0] - 2.0 / PI).abs()).fold(0.0, f64::max);
        (dev, d.samples.len())
    };
    pass &= zero.verdict == Verdict::Pass && z_portrait_ratio <= TOL_RATIO_FREE && zero.theorems_agree;
    notes.push(format!("zero {} (|phi/delta_dot| - 2/pi up to {z_portrait_ratio:.1e})", zero.verdict));

    let (m, _) = evaluate_criterion(&Potential::mathieu(0.5), 8, cfg).unwrap();
    pass &= m.verdict == Verdict::Pass && m.theorems_agree;
    notes.push(format!("mathieu(0.5) {}", m.verdict));

    let v = Potential::gasymov(1.0);
    let coeffs = v.coefficients();
    let n0 = (1..=8usize).find(|&k| rk4_monodromy(&coeffs, C64::new((k * k) as f64, 0.0), 4000)[1].norm() > DIRICHLET_FLOOR);
    let (g, _) = evaluate_criterion(&v, 8, cfg).unwrap();
    let hit = n0.map(|n| g.singularities.iter().map(|s| (s.lambda - (n * n) as f64).norm()).fold(f64::INFINITY, f64::min));
    let near = hit.is_some_and(|d| d <= TOL_SINGULAR_POINT);
    pass &= g.verdict == Verdict::Fail && near && g.theorems_agree;
    notes.push(format!("gasymov(1) {} (n0 = {:?}, nearest singularity at distance {:.1e})", g.verdict, n0, hit.unwrap_or(f64::NAN)));
    notes.push(format!("theorem checks agree: {}", zero.theorems_agree && m.theorems_agree && g.theorems_agree));
    outcome(pass, notes.join("; "))
}

fn criterion_7(cfg: &Config) -> Outcome {
    let k = 6;
    let cat = catalog(&Potential::mathieu(0.5), k, cfg).unwrap();
    let per: Vec<f64> = sorted_re(cat.periodic_expanded()).iter().map(|z| z.re).collect();
    let anti: Vec<f64> = sorted_re(cat.antiperiodic_expanded()).iter().map(|z| z.re).collect();
    let dir: Vec<f64> = sorted_re(cat.dirichlet.iter().map(|e| e.z).collect()).iter().map(|z| z.re).collect();
    // gap n is bounded by antiperiodic values for odd n and periodic values for even n
    let mut chain = vec![per[0]];
    let mut n = 1;
    while n <= dir.len() {
        let list = if n % 2 == 1 { &anti } else { &per };
        if n >= list.len() {
            break;
        }
        chain.extend([list[n - 1], dir[n - 1], list[n]]);
        n += 1;
    }
    let worst = chain.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= TOL_INTERLACE && n > 4, format!("{} gaps checked, largest inversion {worst:.1e}", n - 1))
}

fn criterion_8(cfg: &Config) -> Outcome {
    let v = Potential::mathieu(0.5);
    let t_grid: Vec<f64> = (0..9).map(|j| j as f64 * PI / 8.0).collect();
    let res = fiber_asymptotic_residuals(&v, &t_grid, 16, cfg).unwrap();
    let window = |n_max: usize| res.iter().filter(|r| r.n <= n_max).map(|r| r.minus.max(r.plus)).fold(0.0, f64::max);
    let (a, b) = (window(8), window(16));
    let change = (b - a).abs() / a;
    outcome(change <= ASYMPTOTIC_STABILITY, format!("constant {a:.4} for n <= 8, {b:.4} for n <= 16 ({:.1}% change)", 100.0 * change))
}

fn criterion_9(cfg: &Config) -> Outcome {
    let v = Potential::mathieu(2.0);
    let p = spectrum_portrait(&v, 3, cfg).unwrap();
    let g = GridFunction::gaussian(4, 256, PI / 2.0, 0.5).unwrap();
    let start = Instant::now();
    let p1 = project_band(&v, &p, 1, &g, cfg).unwrap();
    let once = start.elapsed();
    let p11 = project_band(&v, &p, 1, &p1, cfg).unwrap();
    let idem = p11.sub(&p1).unwrap().norm() / p1.norm();
    let p21 = project_band(&v, &p, 2, &p1, cfg).unwrap();
    let disjoint = p21.norm() / g.norm();
    outcome(
        idem <= TOL_IDEMPOTENT && disjoint <= TOL_DISJOINT && once < RUNTIME_PROJECTION,
        format!("{} points: idempotence {idem:.1e}, disjoint arcs {disjoint:.1e}, one projection {once:.1?}", g.len()),
    )
}

fn criterion_10(cfg: &Config) -> Outcome {
    let g = GridFunction::gaussian(4, 256, PI / 2.0, 0.5).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut free_8 = None;
    for (name, v) in [("zero", Potential::zero()), ("mathieu(0.5)", Potential::mathieu(0.5))] {
        let p = spectrum_portrait(&v, 8, cfg).unwrap();
        let mut res = Vec::new();
        for bm in [2, 4, 8] {
            let e = expand(&v, &p, &g, bm, Verdict::Pass, false, cfg).unwrap();
            res.push(e.residual_norm / g.norm());
            if bm == 8 && v.is_zero() {
                free_8 = Some(e.reconstruction);
            }
        }
        let monotone = res.windows(2).all(|w| w[1] <= w[0]);
        pass &= monotone && res[2] <= TOL_EXPANSION;
        notes.push(format!("{name} residuals {:.1e} {:.1e} {:.1e}", res[0], res[1], res[2]));
    }
    // free bands 1..=8 are the frequencies |ξ| < 8
    let oracle = fourier_multiplier(&g.x_grid, &g.values, g.h(), 8.0, |_| C64::new(1.0, 0.0));
    let rec = free_8.unwrap();
    let diff = rec.values.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() * g.h().sqrt() / g.norm();
    pass &= diff <= TOL_FREE_EXPANSION_ORACLE;
    notes.push(format!("free case vs Fourier oracle {diff:.1e}"));
    outcome(pass, notes.join("; "))
}

fn criterion_11(cfg: &Config) -> Outcome {
    let mut worst = 0.0f64;
    for v in [Potential::zero(), Potential::mathieu(0.5), Potential::gasymov(1.0)] {
        for t in [0.5, 1.5, 2.5] {
            worst = worst.max(biorthogonality(&v, t, 16, cfg).unwrap().max_residual);
        }
    }
    outcome(worst <= TOL_BIORTH, format!("max normalized residual {worst:.2e} for k, l <= 16"))
}

fn criterion_12() -> Outcome {
    let mut rng = Xorshift(99);
    let mut worst = [0.0f64; 2];
    for _ in 0..5 {
        let (n, p) = (4, 32);
        let vals: Vec<C64> = (0..2 * n * p)
            .map(|i| {
                let inside = (p..3 * p).contains(&i) || (5 * p..6 * p).contains(&i);
                if inside { C64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5) } else { C64::new(0.0, 0.0) }
            })
            .collect();
        let g = GridFunction::from_values(n, p, vals).unwrap();
        let field = gelfand_forward(&g, &uniform_t_grid(2 * n + 3));
        let back = gelfand_inverse(&field).unwrap();
        worst[0] = worst[0].max((field.norm() - g.norm()).abs() / g.norm());
        worst[1] = worst[1].max(back.sub(&g).unwrap().norm() / g.norm());
    }
    outcome(worst[0] <= TOL_GELFAND && worst[1] <= TOL_GELFAND, format!("unitarity {:.1e}, inversion {:.1e}", worst[0], worst[1]))
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_13() -> Outcome {
    let base = std::env::temp_dir().join(format!("hillspec-acceptance-{}", std::process::id()));
    let run = |name: &str| {
        let out = base.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_hillspec"))
            .args(["validate", "--preset", "mathieu:0.3+0.1i", "--kmax", "4", "--seed", "17", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (status.status.code(), read_dir(&out))
    };
    let (c1, a) = run("a");
    let (c2, b) = run("b");
    let _ = std::fs::remove_dir_all(&base);
    let same = a == b && !a.is_empty();
    outcome(same && c1 == Some(0) && c2 == Some(0), format!("{} artifacts, byte-identical: {same}, exit codes {c1:?} {c2:?}", a.len()))
}

fn main() {
    let cfg = Config::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("free-operator closed forms", Box::new(criterion_1)),
        ("algebraic identities", Box::new(|| criterion_2(&cfg))),
        ("delta-dot cross-check", Box::new(|| criterion_3(&cfg))),
        ("spectra", Box::new(|| criterion_4(&cfg))),
        ("gasymov discriminant", Box::new(|| criterion_5(&cfg))),
        ("criterion verdicts", Box::new(|| criterion_6(&cfg))),
        ("interlacing", Box::new(|| criterion_7(&cfg))),
        ("eigenvalue asymptotics", Box::new(|| criterion_8(&cfg))),
        ("projection algebra", Box::new(|| criterion_9(&cfg))),
        ("expansion completeness", Box::new(|| criterion_10(&cfg))),
        ("fiber biorthogonality", Box::new(|| criterion_11(&cfg))),
        ("gelfand round trip", Box::new(criterion_12)),
        ("determinism", Box::new(criterion_13)),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        println!(
            "criterion {:>2} {:<28} {}  {} [{:.1?}]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
