//! Numerical checks of the scalar-type criteria on a finite window.
//!
//! Boundedness over an unbounded spectrum cannot be certified, so verdicts are three-valued:
//! `Fail` needs a concrete witness, `Pass` needs every finite check to hold and the ratio sups
//! to level off across octaves of bands, and anything else is `Inconclusive`.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcs::{
    arc_point, correct, distance_to_spectrum, quadruple_zero, spectrum_portrait, split_roots, Corrected,
    QuadrupleZero, SpectrumPortrait,
};
use crate::config::Config;
use crate::error::{HillError, Result};
use crate::floquet::{fundamental_system, transfer, Transfer};
use crate::potential::Potential;
use crate::quadrature::period_gauss_grid;
use crate::spectra::{algebraic_vs_geometric, asymptotic_remainders, expand, fiber_bands, fold_t, separation_tol, CriticalPoint};

type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// `Fail` dominates, then `Inconclusive`.
    pub fn combine(list: &[Verdict]) -> Verdict {
        if list.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if list.iter().all(|v| *v == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// `|φ(π)/Δ₊•|`, `|θ'(π)/((|λ|+1)Δ₊•)|`, `|Δ₋/((√|λ|+1)Δ₊•)|`.
pub fn ratio_triple(lambda: C64, tr: &Transfer) -> [f64; 3] {
    let d = tr.delta_plus_dot();
    let a = lambda.norm();
    [
        (tr.m[1] / d).norm(),
        (tr.m[2] / (d * (a + 1.0))).norm(),
        (tr.delta_minus() / (d * (a.sqrt() + 1.0))).norm(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub band: usize,
    pub t: f64,
    pub lambda: C64,
    pub ratios: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostics {
    pub samples: Vec<RatioSample>,
    /// Samples skipped because `|Δ₊•|` was below the singular threshold.
    pub excluded: usize,
    /// Per band, index `n - 1`.
    pub band_sups: Vec<[f64; 3]>,
    /// Sup over bands `≤ m`, index `m - 1`.
    pub window_sups: Vec<[f64; 3]>,
    /// Sup over the bands of each octave `{1}, {2}, {3, 4}, {5..8}, ...`.
    pub octave_sups: Vec<[f64; 3]>,
    pub sups: [f64; 3],
    pub argmax_band: [usize; 3],
}

fn octave_of(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Ratio triples at every regular arc sample, with per-band, window and octave sups.
pub fn ratio_diagnostics(v: &Potential, portrait: &SpectrumPortrait, cfg: &Config) -> Result<RatioDiagnostics> {
    let per_arc: Vec<Result<(Vec<RatioSample>, usize)>> = portrait
        .arcs
        .par_iter()
        .map(|arc| {
            let mut out = Vec::new();
            let mut skipped = 0;
            for i in 0..arc.len() {
                let lam = arc.lambda_samples[i];
                if arc.delta_dot_samples[i].norm() < cfg.arcs.eps_sing * (1.0 + lam.norm()) {
                    skipped += 1;
                    continue;
                }
                let tr = transfer(v, lam, cfg.floquet.tol)?;
                out.push(RatioSample { band: arc.band_index, t: arc.t_samples[i], lambda: lam, ratios: ratio_triple(lam, &tr) });
            }
            Ok((out, skipped))
        })
        .collect();
    let mut samples = Vec::new();
    let mut excluded = 0;
    for r in per_arc {
        let (s, k) = r?;
        samples.extend(s);
        excluded += k;
    }
    let k_max = portrait.k_max;
    let mut band_sups = vec![[0.0f64; 3]; k_max];
    for s in &samples {
        if s.band >= 1 && s.band <= k_max {
            for j in 0..3 {
                band_sups[s.band - 1][j] = band_sups[s.band - 1][j].max(s.ratios[j]);
            }
        }
    }
    let mut window_sups = Vec::with_capacity(k_max);
    let mut acc = [0.0f64; 3];
    let mut argmax_band = [1usize; 3];
    for (i, b) in band_sups.iter().enumerate() {
        for j in 0..3 {
            if b[j] > acc[j] {
                acc[j] = b[j];
                argmax_band[j] = i + 1;
            }
        }
        window_sups.push(acc);
    }
    let mut octave_sups = vec![[0.0f64; 3]; octave_of(k_max) + 1];
    for (i, b) in band_sups.iter().enumerate() {
        let o = octave_of(i + 1);
        for j in 0..3 {
            octave_sups[o][j] = octave_sups[o][j].max(b[j]);
        }
    }
    Ok(RatioDiagnostics { samples, excluded, band_sups, window_sups, octave_sups, sups: acc, argmax_band })
}

/// Whether a sequence of octave sups levels off: over the last three entries the latest
/// increment may not exceed the previous one (or zero) by more than `slack` times the level.
pub fn trend_levels_off(seq: &[f64], slack: f64) -> bool {
    let n = seq.len();
    match n {
        0 | 1 => true,
        2 => seq[1] <= seq[0] * (1.0 + slack),
        _ => {
            let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
            c - b <= (b - a).max(0.0) + slack * b
        }
    }
}

/// Ratio sups below this are rounding noise (e.g. `Δ₋ ≡ 0` for even potentials).
const RATIO_FLOOR: f64 = 1e-8;

fn column(rows: &[[f64; 3]], j: usize) -> Vec<f64> {
    rows.iter().map(|r| if r[j] < RATIO_FLOOR { 0.0 } else { r[j] }).collect()
}

/// Growth by more than `factor` in each of the last two octave steps.
fn superlinear(seq: &[f64], factor: f64) -> bool {
    let n = seq.len();
    n >= 3 && seq[n - 1] > factor * seq[n - 2] && seq[n - 2] > factor * seq[n - 3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Removability {
    pub radius: f64,
    pub mean_outer: f64,
    pub mean_inner: f64,
    /// `log₂(mean_inner / mean_outer)`: about `p` for a pole of order `p`, about zero when removable.
    pub order: f64,
    pub removable: bool,
}

/// Two-circle test of `(Δ₊² - 1 - Δ₋²) / (φ(π) Δ₊•)` around `delta`.
pub fn removability(v: &Potential, delta: C64, cfg: &Config) -> Result<Removability> {
    let r = cfg.criterion.removability_rel * (1.0 + delta.norm());
    let n = 32;
    let mean = |rad: f64| -> Result<f64> {
        let vals: Vec<Result<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let z = delta + C64::from_polar(rad, 2.0 * PI * (k as f64 + 0.5) / n as f64);
                let tr = transfer(v, z, cfg.floquet.tol)?;
                let dp = tr.delta_plus();
                let dm = tr.delta_minus();
                Ok(((dp * dp - 1.0 - dm * dm) / (tr.m[1] * tr.delta_plus_dot())).norm())
            })
            .collect();
        let mut s = 0.0;
        for x in vals {
            s += x?;
        }
        Ok(s / n as f64)
    };
    let outer = mean(r)?;
    let inner = mean(0.5 * r)?;
    let order = (inner / outer).log2();
    Ok(Removability { radius: r, mean_outer: outer, mean_inner: inner, order, removable: order < cfg.criterion.removability_order })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub k: usize,
    pub delta: C64,
    pub gamma: C64,
    pub distance: f64,
    pub on_spectrum: bool,
    pub pattern: Option<QuadrupleZero>,
    pub removability: Option<Removability>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem43 {
    pub points: Vec<CriticalRecord>,
    /// Sups of `|φ(π)/Δ₊•|` and `|Δ₋/((√|λ|+1)Δ₊•)|`.
    pub bound_sups: [f64; 2],
    pub bound_trend_ok: bool,
    pub verdict: Verdict,
}

/// Critical points inside the traced window with their distance to the spectrum.
fn critical_in_window(portrait: &SpectrumPortrait) -> Vec<(usize, CriticalPoint, f64)> {
    portrait
        .catalog
        .critical
        .iter()
        .enumerate()
        .filter_map(|(i, c)| distance_to_spectrum(c.delta, portrait).ok().map(|d| (i + 1, *c, d)))
        .collect()
}

fn on_spectrum(d: f64, z: C64, cfg: &Config) -> bool {
    d <= cfg.criterion.on_spectrum_rel * (1.0 + z.norm())
}

/// Analyticity and boundedness conditions: the quadruple-zero pattern and removability at
/// every critical point on the spectrum, and the trend of the two bounded ratios.
pub fn check_theorem_43(
    v: &Potential,
    portrait: &SpectrumPortrait,
    ratios: &RatioDiagnostics,
    cfg: &Config,
) -> Result<Theorem43> {
    let points = critical_in_window(portrait)
        .into_par_iter()
        .map(|(k, c, d)| {
            let on = on_spectrum(d, c.delta, cfg);
            if !on {
                return Ok(CriticalRecord { k, delta: c.delta, gamma: c.gamma, distance: d, on_spectrum: false, pattern: None, removability: None, holds: true });
            }
            let pattern = quadruple_zero(v, c.delta, cfg)?;
            let rem = removability(v, c.delta, cfg)?;
            Ok(CriticalRecord {
                k,
                delta: c.delta,
                gamma: c.gamma,
                distance: d,
                on_spectrum: true,
                holds: pattern.holds && rem.removable,
                pattern: Some(pattern),
                removability: Some(rem),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slack = cfg.criterion.trend_slack;
    let trend = trend_levels_off(&column(&ratios.octave_sups, 0), slack) && trend_levels_off(&column(&ratios.octave_sups, 2), slack);
    let verdict = if points.iter().any(|p| !p.holds) {
        Verdict::Fail
    } else if trend {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(Theorem43 { points, bound_sups: [ratios.sups[0], ratios.sups[2]], bound_trend_ok: trend, verdict })
}

/// A spectral singularity with the growth exponent of `|φ(π)/Δ₊•|` on approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub lambda: C64,
    pub t: f64,
    pub bands: Vec<usize>,
    pub exponent: f64,
}

/// Log-log slope of `|φ(π)/Δ₊•|` against `|λ - λ₀|` along the arcs leaving `λ₀` at `t_c`,
/// returned as a positive blowup exponent.
pub fn blowup_exponent(v: &Potential, lambda0: C64, t_c: f64, cfg: &Config) -> Result<f64> {
    let gamma = transfer(v, lambda0, cfg.floquet.tol)?.delta_plus();
    let c = CriticalPoint { delta: lambda0, gamma, order: 2 };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for j in 0..5 {
        let tau = 1e-2 * 0.5f64.powi(j);
        let ts: Vec<f64> = [t_c - tau, t_c + tau].into_iter().filter(|t| (0.0..=PI).contains(t)).collect();
        for t in ts {
            let roots = split_roots(v, &c, t, cfg)?;
            let reach = 0.5 * (roots[0] - roots[1]).norm();
            for g in roots {
                if let Corrected::Ok(lam, tr) = correct(v, g, t, reach, cfg)? {
                    let dist = (lam - lambda0).norm();
                    let r = ratio_triple(lam, &tr)[0];
                    if dist > 0.0 && r > 0.0 {
                        pts.push((dist.ln(), r.ln()));
                    }
                }
            }
        }
    }
    if pts.len() < 2 {
        return Err(HillError::Nonconvergence(format!("no approach samples near {lambda0}")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Critical points on the spectrum where the quadruple-zero pattern fails, with blowup exponents.
pub fn detect_spectral_singularities(v: &Potential, portrait: &SpectrumPortrait, cfg: &Config) -> Result<Vec<Singularity>> {
    portrait
        .singular_points
        .par_iter()
        .filter(|p| p.spectral_singularity)
        .map(|p| {
            Ok(Singularity { lambda: p.lambda, t: p.t, bands: p.bands.clone(), exponent: blowup_exponent(v, p.lambda, p.t, cfg)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem44 {
    pub sups: [f64; 3],
    pub octave_sups: Vec<[f64; 3]>,
    pub trend_ok: [bool; 3],
    pub superlinear: [bool; 3],
    pub verdict: Verdict,
}

/// The three ratio bounds on the traced spectrum.
pub fn check_theorem_44(ratios: &RatioDiagnostics, singularities: &[Singularity], cfg: &Config) -> Theorem44 {
    let c = &cfg.criterion;
    let trend_ok = [0, 1, 2].map(|j| trend_levels_off(&column(&ratios.octave_sups, j), c.trend_slack));
    let sup_lin = [0, 1, 2].map(|j| superlinear(&column(&ratios.octave_sups, j), c.superlinear_growth));
    let blowup = singularities.iter().any(|s| s.exponent > c.blowup_exponent);
    let verdict = if blowup || sup_lin.iter().any(|b| *b) {
        Verdict::Fail
    } else if trend_ok.iter().all(|b| *b) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Theorem44 { sups: ratios.sups, octave_sups: ratios.octave_sups.clone(), trend_ok, superlinear: sup_lin, verdict }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplePoint {
    pub z: C64,
    pub multiplicity: usize,
    /// `0` for periodic, `π` for antiperiodic.
    pub t: f64,
    pub nearest_dirichlet: Option<C64>,
    pub dirichlet_distance: f64,
    pub is_dirichlet: bool,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCheck {
    pub t: f64,
    pub band: usize,
    pub e: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRatio {
    pub k: usize,
    pub distance: f64,
    /// `|λ⁺ - λ⁻| / d`, `|μ - λ⁻| / d`, `|μ - λ⁺| / d`.
    pub ratios: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem45 {
    pub multiple_points: Vec<MultiplePoint>,
    /// Fiber eigenvalues on the `t`-grid that needed a multiplicity count.
    pub fiber_checks: Vec<FiberCheck>,
    pub fiber_points_checked: usize,
    pub gap_ratios: Vec<GapRatio>,
    pub gap_octave_sups: Vec<[f64; 3]>,
    pub dirichlet_condition: bool,
    pub multiplicity_condition: bool,
    pub gap_condition: bool,
    pub verdict: Verdict,
}

/// Multiple points in the Dirichlet spectrum, equal multiplicities on a `t`-grid and at every
/// multiple point, and the gap-distance ratios.
pub fn check_theorem_45(v: &Potential, portrait: &SpectrumPortrait, cfg: &Config) -> Result<Theorem45> {
    let cat = &portrait.catalog;
    let mut mult_in: Vec<(C64, usize, f64)> = Vec::new();
    for e in &cat.periodic {
        if e.multiplicity >= 2 {
            mult_in.push((e.z, e.multiplicity, 0.0));
        }
    }
    for e in &cat.antiperiodic {
        if e.multiplicity >= 2 {
            mult_in.push((e.z, e.multiplicity, PI));
        }
    }
    let window = portrait.window_re_max();
    mult_in.retain(|(z, _, _)| z.re <= window + 1e-9 * (1.0 + window.abs()));
    let multiple_points = mult_in
        .into_par_iter()
        .map(|(z, m, t)| {
            let near = cat
                .dirichlet
                .iter()
                .map(|d| d.z)
                .min_by(|a, b| (*a - z).norm().partial_cmp(&(*b - z).norm()).unwrap());
            let dist = near.map(|d| (d - z).norm()).unwrap_or(f64::INFINITY);
            let tol = (cfg.criterion.on_spectrum_rel * (1.0 + z.norm())).max(10.0 * separation_tol(z, cfg));
            let mu = algebraic_vs_geometric(v, t, z, cfg)?;
            Ok(MultiplePoint {
                z,
                multiplicity: m,
                t,
                nearest_dirichlet: near,
                dirichlet_distance: dist,
                is_dirichlet: dist <= tol,
                algebraic: mu.algebraic,
                geometric: mu.geometric,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // interior points of the t-grid; endpoints are covered by the multiple-point list and
    // simple endpoints have equal multiplicities trivially
    let nt = cfg.criterion.fiber_t_points.max(2);
    let grid: Vec<f64> = (1..nt - 1).map(|j| PI * j as f64 / (nt - 1) as f64).collect();
    let mut tasks = Vec::new();
    for &t in &grid {
        for arc in &portrait.arcs {
            let (a, b) = arc.t_range();
            if t >= a && t <= b {
                tasks.push((t, arc));
            }
        }
    }
    let fiber_points_checked = tasks.len();
    let checked = tasks
        .into_par_iter()
        .map(|(t, arc)| {
            let (e, tr) = arc_point(v, arc, t, cfg)?;
            if tr.delta_plus_dot().norm() >= cfg.arcs.eps_sing * (1.0 + e.norm()) {
                return Ok(None);
            }
            let mu = algebraic_vs_geometric(v, t, e, cfg)?;
            Ok(Some(FiberCheck { t, band: arc.band_index, e, algebraic: mu.algebraic, geometric: mu.geometric }))
        })
        .collect::<Result<Vec<_>>>()?;
    let fiber_checks: Vec<FiberCheck> = checked.into_iter().flatten().collect();

    let p = cat.periodic_expanded();
    let a = cat.antiperiodic_expanded();
    let mut gap_ratios = Vec::new();
    for (k, c, d) in critical_in_window(portrait) {
        let pair = if k % 2 == 1 { (a.get(k - 1), a.get(k)) } else { (p.get(k - 1), p.get(k)) };
        let (Some(lm), Some(lp)) = pair else { continue };
        let Some(mu) = cat.dirichlet.get(k - 1) else { continue };
        if on_spectrum(d, c.delta, cfg) {
            continue;
        }
        gap_ratios.push(GapRatio {
            k,
            distance: d,
            ratios: [(*lp - *lm).norm() / d, (mu.z - *lm).norm() / d, (mu.z - *lp).norm() / d],
        });
    }
    let mut gap_octave_sups: Vec<[f64; 3]> = Vec::new();
    for g in &gap_ratios {
        let o = octave_of(g.k);
        if gap_octave_sups.len() <= o {
            gap_octave_sups.resize(o + 1, [0.0; 3]);
        }
        for j in 0..3 {
            gap_octave_sups[o][j] = gap_octave_sups[o][j].max(g.ratios[j]);
        }
    }
    let growth = cfg.criterion.l60_growth;
    // the ratios are normalized, so growth is measured against a level of at least one
    let gap_condition = gap_octave_sups
        .windows(2)
        .all(|w| (0..3).all(|j| w[1][j] <= growth * w[0][j].max(1.0)));
    let dirichlet_condition = multiple_points.iter().all(|m| m.is_dirichlet);
    let multiplicity_condition = multiple_points.iter().all(|m| m.algebraic == m.geometric)
        && fiber_checks.iter().all(|f| f.algebraic == f.geometric);
    let verdict = if dirichlet_condition && multiplicity_condition && gap_condition { Verdict::Pass } else { Verdict::Fail };
    Ok(Theorem45 {
        multiple_points,
        fiber_checks,
        fiber_points_checked,
        gap_ratios,
        gap_octave_sups,
        dirichlet_condition,
        multiplicity_condition,
        gap_condition,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub potential: String,
    /// Mean subtracted before the analysis.
    pub mean_shift: C64,
    pub k_max: usize,
    pub verdict: Verdict,
    pub ratio_sups: [f64; 3],
    pub ratio_argmax_band: [usize; 3],
    pub ratio_window_sups: Vec<[f64; 3]>,
    pub ratio_octave_sups: Vec<[f64; 3]>,
    /// Running ℓ¹ sums of the eigenvalue remainders `f_k^±` over the window.
    pub remainder_l1_partial_sums: Vec<f64>,
    pub theorem_43: Theorem43,
    pub theorem_44: Theorem44,
    pub theorem_45: Theorem45,
    pub singularities: Vec<Singularity>,
    pub theorems_agree: bool,
    pub witnesses: Vec<String>,
    pub summary: String,
}

/// Runs every check on an existing portrait of a mean-zero potential.
pub fn criterion_report(v: &Potential, portrait: &SpectrumPortrait, mean_shift: C64, cfg: &Config) -> Result<CriterionReport> {
    let ratios = ratio_diagnostics(v, portrait, cfg)?;
    let singularities = detect_spectral_singularities(v, portrait, cfg)?;
    let t43 = check_theorem_43(v, portrait, &ratios, cfg)?;
    let t44 = check_theorem_44(&ratios, &singularities, cfg);
    let t45 = check_theorem_45(v, portrait, cfg)?;

    let mut witnesses = Vec::new();
    for p in t43.points.iter().filter(|p| !p.holds) {
        witnesses.push(format!("critical point {:.9} on the spectrum violates the quadruple-zero pattern or is a pole", p.delta));
    }
    for s in singularities.iter().filter(|s| s.exponent > cfg.criterion.blowup_exponent) {
        witnesses.push(format!("|phi/dDelta| blows up at {:.9} with exponent {:.3}", s.lambda, s.exponent));
    }
    for (j, b) in t44.superlinear.iter().enumerate() {
        if *b {
            witnesses.push(format!("ratio {} grows superlinearly across octaves", j + 1));
        }
    }
    for m in t45.multiple_points.iter().filter(|m| !m.is_dirichlet) {
        witnesses.push(format!("multiple point {:.9} is {:.3e} from the Dirichlet spectrum", m.z, m.dirichlet_distance));
    }
    for m in t45.multiple_points.iter().filter(|m| m.algebraic != m.geometric) {
        witnesses.push(format!("at t = {:.4}, E = {:.9}: algebraic {} vs geometric {}", m.t, m.z, m.algebraic, m.geometric));
    }
    for f in t45.fiber_checks.iter().filter(|f| f.algebraic != f.geometric) {
        witnesses.push(format!("at t = {:.4}, E = {:.9}: algebraic {} vs geometric {}", f.t, f.e, f.algebraic, f.geometric));
    }
    if !t45.gap_condition {
        witnesses.push("a gap-distance ratio grows by more than the configured factor across octaves".into());
    }
    let verdicts = [t43.verdict, t44.verdict, t45.verdict];
    let verdict = Verdict::combine(&verdicts);
    let theorems_agree = verdicts.iter().all(|x| *x == verdicts[0]);
    let summary = format!(
        "verdict {verdict} on bands 1..={} (theorem checks {} / {} / {}); ratio sups {:.6} {:.6} {:.6}; {} spectral singularities; {} witnesses",
        portrait.k_max,
        t43.verdict,
        t44.verdict,
        t45.verdict,
        ratios.sups[0],
        ratios.sups[1],
        ratios.sups[2],
        singularities.len(),
        witnesses.len()
    );
    Ok(CriterionReport {
        potential: v.label(),
        mean_shift,
        k_max: portrait.k_max,
        verdict,
        ratio_sups: ratios.sups,
        ratio_argmax_band: ratios.argmax_band,
        ratio_window_sups: ratios.window_sups,
        ratio_octave_sups: ratios.octave_sups,
        remainder_l1_partial_sums: asymptotic_remainders(&portrait.catalog, C64::new(0.0, 0.0)).l1_partial_sums,
        theorem_43: t43,
        theorem_44: t44,
        theorem_45: t45,
        singularities,
        theorems_agree,
        witnesses,
        summary,
    })
}

/// Shifts `v` to zero mean, traces the portrait on bands `1..=k_max` and runs every check.
pub fn evaluate_criterion(v: &Potential, k_max: usize, cfg: &Config) -> Result<(CriterionReport, SpectrumPortrait)> {
    let (v0, shift) = v.shift_to_zero_mean();
    let portrait = spectrum_portrait(&v0, k_max, cfg)?;
    let mut report = criterion_report(&v0, &portrait, shift, cfg)?;
    report.potential = v.label();
    Ok((report, portrait))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszMode {
    /// Frame quotient over random test functions, `t ≠ 0 mod π`.
    Frame,
    /// Per-eigenvalue sum of the three ratios, `t = 0 mod π`.
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszDiagnostic {
    pub t: f64,
    pub k_max: usize,
    pub mode: RieszMode,
    pub eigenvalues: Vec<C64>,
    /// Frame mode: the bound using the first `k` eigenfunctions. Pointwise mode: the ratio
    /// sum at the `k`-th eigenvalue.
    pub curve: Vec<f64>,
    pub bound: f64,
}

/// Riesz-basis diagnostic for the eigensystem of the fiber at `t`.
///
/// Away from `t = 0 mod π` this is `max(q, 1/q)` over 50 random quasi-periodic trigonometric
/// polynomials `f`, with `q = Σ_k |(f, ψ̂₊(E_k))|² / ‖f‖²`. At `t = 0 mod π` eigenvalues may be
/// double, so the ratio sums are evaluated at `t` moved off by the arc offset.
pub fn riesz_basis_diagnostic(v: &Potential, t: f64, k_max: usize, seed: u64, cfg: &Config) -> Result<RieszDiagnostic> {
    if k_max == 0 {
        return Err(HillError::InvalidInput("k_max must be at least 1".into()));
    }
    let tf = fold_t(t);
    let degenerate = tf < 1e-9 || PI - tf < 1e-9;
    if degenerate {
        let t1 = if tf < 1e-9 { cfg.arcs.t_offset } else { PI - cfg.arcs.t_offset };
        let eig = expand(&fiber_bands(v, t1, k_max, cfg)?);
        let curve = eig
            .par_iter()
            .map(|e| {
                let tr = transfer(v, *e, cfg.floquet.tol)?;
                Ok(ratio_triple(*e, &tr).iter().sum::<f64>())
            })
            .collect::<Result<Vec<f64>>>()?;
        let bound = curve.iter().cloned().fold(0.0, f64::max);
        return Ok(RieszDiagnostic { t, k_max, mode: RieszMode::Pointwise, eigenvalues: eig, curve, bound });
    }
    let eig = expand(&fiber_bands(v, t, k_max, cfg)?);
    let (grid, w) = period_gauss_grid(96, 8);
    let s = t.sin();
    let i = C64::new(0.0, 1.0);
    let basis = eig
        .par_iter()
        .map(|e| {
            let fd = fundamental_system(v, *e, &grid, cfg.floquet.tol)?;
            let n = grid.len() - 1;
            let phi_pi = fd.phi[n];
            let dm = (fd.theta[n] - fd.phi_prime[n]) * 0.5;
            let u: Vec<C64> = (0..grid.len()).map(|j| phi_pi * fd.theta[j] + (-dm + i * s) * fd.phi[j]).collect();
            let norm = u.iter().zip(&w).map(|(x, wj)| x.norm_sqr() * wj).sum::<f64>().sqrt();
            Ok(u.into_iter().map(|x| x / norm).collect::<Vec<C64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let modes = (k_max / 4).max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut curve = vec![1.0f64; k_max];
    for _ in 0..50 {
        let coeffs: Vec<C64> = (-modes..=modes).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f: Vec<C64> = grid
            .iter()
            .map(|x| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * C64::from_polar(1.0, (2.0 * (j as i64 - modes) as f64 + t / PI) * x))
                    .sum()
            })
            .collect();
        let fnorm2: f64 = f.iter().zip(&w).map(|(x, wj)| x.norm_sqr() * wj).sum();
        let mut partial = 0.0;
        for (k, b) in basis.iter().enumerate() {
            let ip: C64 = f.iter().zip(b).zip(&w).map(|((x, y), wj)| x * y.conj() * *wj).sum();
            partial += ip.norm_sqr();
            let q = partial / fnorm2;
            curve[k] = curve[k].max(q.max(1.0 / q));
        }
    }
    let bound = *curve.last().unwrap();
    Ok(RieszDiagnostic { t, k_max, mode: RieszMode::Frame, eigenvalues: eig, curve, bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametrizationAsymptotics {
    pub zeta: Vec<f64>,
    /// `ζ² |φ(ζ², π) - sin(πζ)/ζ|`
    pub s_residual: Vec<f64>,
    /// `ζ² |Δ₊(ζ²) - cos(πζ)|`
    pub u_plus_residual: Vec<f64>,
    /// `ζ |Δ₋(ζ²)|`
    pub u_minus_residual: Vec<f64>,
    /// Maxima over `ζ ∈ [2^j, 2^{j+1})`.
    pub octave_max: Vec<[f64; 3]>,
    pub bounded: bool,
}

/// Residual curves of the asymptotic parametrization on real `ζ ∈ [1, 2 k_max]`.
pub fn validate_parametrization_asymptotics(v: &Potential, k_max: usize, cfg: &Config) -> Result<ParametrizationAsymptotics> {
    let mean = v.mean();
    if mean.norm() > 1e-12 {
        return Err(HillError::NonZeroMean { re: mean.re, im: mean.im });
    }
    if k_max == 0 {
        return Err(HillError::InvalidInput("k_max must be at least 1".into()));
    }
    let per_unit = 16;
    let count = per_unit * (2 * k_max - 1) + 1;
    let zeta: Vec<f64> = (0..count).map(|j| 1.0 + j as f64 / per_unit as f64).collect();
    let rows = zeta
        .par_iter()
        .map(|&z| {
            let tr = transfer(v, C64::new(z * z, 0.0), cfg.floquet.tol)?;
            let pz = PI * z;
            Ok([
                z * z * (tr.m[1] - pz.sin() / z).norm(),
                z * z * (tr.delta_plus() - pz.cos()).norm(),
                z * tr.delta_minus().norm(),
            ])
        })
        .collect::<Result<Vec<[f64; 3]>>>()?;
    let mut octave_max: Vec<[f64; 3]> = Vec::new();
    for (z, r) in zeta.iter().zip(&rows) {
        let o = z.log2().floor() as usize;
        if octave_max.len() <= o {
            octave_max.resize(o + 1, [0.0; 3]);
        }
        for j in 0..3 {
            octave_max[o][j] = octave_max[o][j].max(r[j]);
        }
    }
    // bounded on the window: no octave exceeds the running maximum by more than the slack,
    // with an absolute floor for curves at the noise level
    let slack = cfg.criterion.trend_slack;
    let floor = 1e-6;
    let bounded = (0..3).all(|j| {
        let mut best = 0.0f64;
        octave_max.iter().all(|row| {
            let ok = row[j] <= best * (1.0 + slack) + floor || best == 0.0;
            best = best.max(row[j]);
            ok
        })
    });
    Ok(ParametrizationAsymptotics {
        zeta,
        s_residual: rows.iter().map(|r| r[0]).collect(),
        u_plus_residual: rows.iter().map(|r| r[1]).collect(),
        u_minus_residual: rows.iter().map(|r| r[2]).collect(),
        octave_max,
        bounded,
    })
}
