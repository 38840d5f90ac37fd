//! Spectral arcs `Δ₊(λ(t)) = cos t` by continuation in `t`, and the spectrum portrait.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{HillError, Result};
use crate::floquet::{transfer, transfer_second, Transfer};
use crate::potential::Potential;
use crate::spectra::{catalog, CriticalPoint, SpectraCatalog};

type C64 = Complex<f64>;

/// How a trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcStatus {
    Complete,
    /// `|Δ₊•|` fell below the singular threshold at the last sample.
    SingularEncounter { t: f64, lambda: C64 },
}

/// One branch `λ(t)`, `t ∈ [α, β] ⊆ [0, π]`, sampled in increasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralArc {
    pub band_index: usize,
    pub t_samples: Vec<f64>,
    pub lambda_samples: Vec<C64>,
    pub dlambda_dt: Vec<C64>,
    pub delta_dot_samples: Vec<C64>,
    /// `Δ₊•` stays above the singular threshold at every sample with `0 < t < π`. Band edges
    /// at double points are excluded; whether they are spectral singularities is decided by
    /// the quadruple-zero pattern.
    pub regular: bool,
    pub endpoints: (C64, C64),
    /// `+1` when increasing `t` is the positive direction of the arc, `-1` otherwise. With
    /// `√(1 - Δ₊²) = sin t` this makes `dλ / √(1 - Δ₊²) = -orientation dt / Δ₊•` a positive
    /// measure for real potentials.
    pub orientation: f64,
    pub status: ArcStatus,
}

impl SpectralArc {
    pub fn len(&self) -> usize {
        self.t_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_samples.is_empty()
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_samples[0], *self.t_samples.last().expect("non-empty arc"))
    }

    /// `λ(t)` by cubic Hermite interpolation of the samples; `t` is clamped to the arc.
    pub fn eval_at(&self, t: f64) -> C64 {
        let ts = &self.t_samples;
        let n = ts.len();
        if n == 1 || t <= ts[0] {
            return self.lambda_samples[0];
        }
        if t >= ts[n - 1] {
            return self.lambda_samples[n - 1];
        }
        let k = ts.partition_point(|s| *s <= t).clamp(1, n - 1) - 1;
        let h = ts[k + 1] - ts[k];
        let s = (t - ts[k]) / h;
        let (p0, p1) = (self.lambda_samples[k], self.lambda_samples[k + 1]);
        let (m0, m1) = (self.dlambda_dt[k] * h, self.dlambda_dt[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        p0 * (2.0 * s3 - 3.0 * s2 + 1.0) + m0 * (s3 - 2.0 * s2 + s) + p1 * (-2.0 * s3 + 3.0 * s2) + m1 * (s3 - s2)
    }
}

/// The zero pattern `Δ₊² - 1 = Δ₋ = φ(·, π) = 0`, `Δ₊•• ≠ 0` at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleZero {
    pub delta_plus_sq_minus_one: f64,
    pub delta_minus: f64,
    pub phi_pi: f64,
    pub delta_plus_ddot: f64,
    pub holds: bool,
}

/// Evaluates [`QuadrupleZero`] at `delta`.
pub fn quadruple_zero(v: &Potential, delta: C64, cfg: &Config) -> Result<QuadrupleZero> {
    let (tr, ddot) = transfer_second(v, delta, cfg.floquet.tol)?;
    let dp = tr.delta_plus();
    let tol = cfg.criterion.l52_tol * (1.0 + delta.norm());
    let a = (dp * dp - 1.0).norm();
    let b = tr.delta_minus().norm();
    let c = tr.m[1].norm();
    let d = ddot.norm();
    Ok(QuadrupleZero {
        delta_plus_sq_minus_one: a,
        delta_minus: b,
        phi_pi: c,
        delta_plus_ddot: d,
        holds: a <= tol && b <= tol && c <= tol && d >= cfg.criterion.l52_ddot_min,
    })
}

/// A critical point lying on the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub lambda: C64,
    /// `t ∈ [0, π]` with `Δ₊(λ) = cos t`.
    pub t: f64,
    pub bands: Vec<usize>,
    pub pattern: QuadrupleZero,
    /// The quadruple-zero pattern fails here.
    pub spectral_singularity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPortrait {
    pub arcs: Vec<SpectralArc>,
    pub singular_points: Vec<SingularPoint>,
    /// `(min Im V, max Im V, min Re V)`
    pub semistrip: (f64, f64, f64),
    pub k_max: usize,
    pub catalog: SpectraCatalog,
}

impl SpectrumPortrait {
    /// Largest real part reached by any arc.
    pub fn window_re_max(&self) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| a.lambda_samples.iter().map(|z| z.re))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arcs of band `n`, in increasing `t`.
    pub fn band(&self, n: usize) -> Vec<&SpectralArc> {
        self.arcs.iter().filter(|a| a.band_index == n).collect()
    }
}

fn sing_threshold(lambda: C64, cfg: &Config) -> f64 {
    cfg.arcs.eps_sing * (1.0 + lambda.norm())
}

pub(crate) enum Corrected {
    Ok(C64, Transfer),
    Failed,
}

/// Newton on `Δ₊(λ) - cos t = 0` from `guess`, refusing to wander beyond `reach`.
pub(crate) fn correct(v: &Potential, guess: C64, t: f64, reach: f64, cfg: &Config) -> Result<Corrected> {
    let target = t.cos();
    let tol = cfg.arcs.corrector_tol;
    let mut lam = guess;
    let mut prev = f64::INFINITY;
    for _ in 0..12 {
        let tr = transfer(v, lam, cfg.floquet.tol)?;
        let r = tr.delta_plus() - target;
        let rn = r.norm();
        if rn <= tol * (1.0 + lam.norm()) {
            return Ok(Corrected::Ok(lam, tr));
        }
        // residual at the evaluation noise floor
        if rn > 0.5 * prev && rn <= 1e3 * tol * (1.0 + lam.norm()) {
            return Ok(Corrected::Ok(lam, tr));
        }
        prev = rn;
        let d = tr.delta_plus_dot();
        if d.norm() == 0.0 {
            return Ok(Corrected::Failed);
        }
        lam -= r / d;
        if !lam.re.is_finite() || (lam - guess).norm() > reach {
            return Ok(Corrected::Failed);
        }
    }
    Ok(Corrected::Failed)
}

struct Sample {
    t: f64,
    lambda: C64,
    dot: C64,
}

impl Sample {
    fn dlambda(&self) -> C64 {
        -self.t.sin() / self.dot
    }
}

/// Traces the arc through `lambda_start` from `t_start` towards `t_end`.
///
/// Samples are returned in increasing `t` whichever direction was traced. The trace stops
/// early with [`ArcStatus::SingularEncounter`] when `|Δ₊•|` drops below the singular threshold.
pub fn trace_arc(v: &Potential, lambda_start: C64, t_start: f64, t_end: f64, cfg: &Config) -> Result<SpectralArc> {
    if !(0.0..=PI).contains(&t_start) || !(0.0..=PI).contains(&t_end) {
        return Err(HillError::InvalidInput(format!("t range [{t_start}, {t_end}] outside [0, π]")));
    }
    let tr = transfer(v, lambda_start, cfg.floquet.tol)?;
    let res = (tr.delta_plus() - t_start.cos()).norm();
    if res > 1e-8 * (1.0 + lambda_start.norm()) {
        return Err(HillError::NotAnEigenvalue { re: lambda_start.re, im: lambda_start.im, residual: res });
    }
    let d0 = tr.delta_plus_dot();
    if d0.norm() < sing_threshold(lambda_start, cfg) {
        return Err(HillError::SingularArc { t: t_start, dot: d0.norm() });
    }
    let dir = if t_end >= t_start { 1.0 } else { -1.0 };
    let mut samples = vec![Sample { t: t_start, lambda: lambda_start, dot: d0 }];
    let mut status = ArcStatus::Complete;
    let mut h = cfg.arcs.h_max;
    let h_min = cfg.arcs.h_max * 0.5f64.powi(30);
    while (t_end - samples.last().unwrap().t) * dir > 1e-15 {
        let cur = samples.last().unwrap();
        let mut h_try = h.min((t_end - cur.t).abs());
        let mut halvings = 0;
        let (next, iters_ok) = loop {
            let t1 = if h_try >= (t_end - cur.t).abs() { t_end } else { cur.t + dir * h_try };
            // first-order predictor in cos t, which stays valid at band edges where λ'(t) = 0
            let step = (t1.cos() - cur.t.cos()) / cur.dot;
            let guess = cur.lambda + step;
            let reach = step.norm() + 1e-6 * (1.0 + cur.lambda.norm());
            match correct(v, guess, t1, reach, cfg)? {
                Corrected::Ok(lam, tr) => {
                    let pred_err = (lam - guess).norm();
                    let moved = (lam - cur.lambda).norm();
                    break (Sample { t: t1, lambda: lam, dot: tr.delta_plus_dot() }, pred_err <= 0.2 * moved.max(1e-12));
                }
                Corrected::Failed => {
                    halvings += 1;
                    if halvings > cfg.arcs.max_halvings || h_try < h_min {
                        return Err(HillError::CorrectorDivergence { t: t1 });
                    }
                    h_try *= 0.5;
                }
            }
        };
        // shrink where |Δ₊•| decays or the predictor is poor, grow back otherwise
        let decay = next.dot.norm() < 0.5 * cur.dot.norm();
        h = if decay || !iters_ok { (0.5 * h_try).max(h_min) } else { (2.0 * h_try).min(cfg.arcs.h_max) };
        let singular = next.dot.norm() < sing_threshold(next.lambda, cfg);
        samples.push(next);
        if singular {
            let last = samples.last().unwrap();
            status = ArcStatus::SingularEncounter { t: last.t, lambda: last.lambda };
            break;
        }
    }
    if dir < 0.0 {
        samples.reverse();
    }
    Ok(build_arc(0, samples, status, 1.0, cfg))
}

fn build_arc(band: usize, samples: Vec<Sample>, status: ArcStatus, orientation: f64, cfg: &Config) -> SpectralArc {
    let regular = samples
        .iter()
        .filter(|s| s.t > 0.0 && s.t < PI)
        .all(|s| s.dot.norm() >= sing_threshold(s.lambda, cfg));
    let dl = samples
        .iter()
        .map(|s| if s.dot.norm() == 0.0 { C64::new(0.0, 0.0) } else { s.dlambda() })
        .collect();
    SpectralArc {
        band_index: band,
        endpoints: (samples[0].lambda, samples.last().unwrap().lambda),
        t_samples: samples.iter().map(|s| s.t).collect(),
        lambda_samples: samples.iter().map(|s| s.lambda).collect(),
        dlambda_dt: dl,
        delta_dot_samples: samples.iter().map(|s| s.dot).collect(),
        regular,
        orientation,
        status,
    }
}

fn arc_samples(arc: &SpectralArc) -> Vec<Sample> {
    (0..arc.len())
        .map(|i| Sample { t: arc.t_samples[i], lambda: arc.lambda_samples[i], dot: arc.delta_dot_samples[i] })
        .collect()
}

/// Nearest critical point to `z`, if any.
fn nearest_critical(list: &[CriticalPoint], z: C64) -> Option<CriticalPoint> {
    list.iter().copied().min_by(|a, b| (a.delta - z).norm().partial_cmp(&(b.delta - z).norm()).unwrap())
}

/// The two solutions of `Δ₊(λ) = cos t` near a critical point, from the quadratic model.
pub(crate) fn split_roots(v: &Potential, c: &CriticalPoint, t: f64, cfg: &Config) -> Result<[C64; 2]> {
    let (tr, ddot) = transfer_second(v, c.delta, cfg.floquet.tol)?;
    let eps = ((C64::new(t.cos(), 0.0) - tr.delta_plus()) * 2.0 / ddot).sqrt();
    Ok([c.delta + eps, c.delta - eps])
}

/// Half-width of the quadratic split at offset `t_off` from a double point.
fn split_scale(v: &Potential, c: &CriticalPoint, cfg: &Config) -> Result<f64> {
    let ddot = transfer_second(v, c.delta, cfg.floquet.tol)?.1;
    Ok(cfg.arcs.t_offset / ddot.norm().sqrt())
}

/// Start of band `n` near the endpoint `end` at `t_end ∈ {0, π}`: either the endpoint itself or,
/// next to a double point, the matching quadratic branch at `t_end ± t_offset`.
fn leave_endpoint(
    v: &Potential,
    end: C64,
    t_end: f64,
    lower: bool,
    crit: &[CriticalPoint],
    cfg: &Config,
) -> Result<Option<(f64, C64)>> {
    let Some(c) = nearest_critical(crit, end) else { return Ok(None) };
    let scale = split_scale(v, &c, cfg)?;
    if (c.delta - end).norm() >= 0.5 * scale {
        return Ok(None);
    }
    let t1 = if t_end == 0.0 { cfg.arcs.t_offset } else { PI - cfg.arcs.t_offset };
    let [a, b] = split_roots(v, &c, t1, cfg)?;
    let (lo, hi) = if a.re <= b.re { (a, b) } else { (b, a) };
    let guess = if lower { lo } else { hi };
    match correct(v, guess, t1, 0.5 * (a - b).norm(), cfg)? {
        Corrected::Ok(lam, _) => Ok(Some((t1, lam))),
        Corrected::Failed => Err(HillError::CorrectorDivergence { t: t1 }),
    }
}

/// Traces band `n` over `[0, π]` and returns its arcs (more than one after an interior
/// singular encounter) plus any encounter points.
fn trace_band(
    v: &Potential,
    n: usize,
    start: (C64, bool),
    end: (C64, bool),
    crit: &[CriticalPoint],
    cfg: &Config,
) -> Result<(Vec<SpectralArc>, Vec<(C64, f64)>)> {
    let orientation = if n % 2 == 1 { 1.0 } else { -1.0 };
    let (lam0, lower0) = start;
    let (lam_pi, lower_pi) = end;
    let mut arcs = Vec::new();
    let mut encounters = Vec::new();

    let mut head: Vec<Sample> = Vec::new();
    let (mut t, mut lam) = match leave_endpoint(v, lam0, 0.0, lower0, crit, cfg)? {
        Some((t1, l1)) => {
            let d = transfer(v, lam0, cfg.floquet.tol)?.delta_plus_dot();
            head.push(Sample { t: 0.0, lambda: lam0, dot: d });
            (t1, l1)
        }
        None => (0.0, lam0),
    };
    let tail = leave_endpoint(v, lam_pi, PI, lower_pi, crit, cfg)?;
    let t_stop = if tail.is_some() { PI - cfg.arcs.t_offset } else { PI };
    loop {
        let arc = trace_arc(v, lam, t, t_stop, cfg)?;
        let mut s = arc_samples(&arc);
        if !head.is_empty() {
            let mut h = std::mem::take(&mut head);
            h.append(&mut s);
            s = h;
        }
        match arc.status {
            ArcStatus::Complete => {
                if tail.is_some() {
                    let d = transfer(v, lam_pi, cfg.floquet.tol)?.delta_plus_dot();
                    s.push(Sample { t: PI, lambda: lam_pi, dot: d });
                }
                arcs.push(build_arc(n, s, ArcStatus::Complete, orientation, cfg));
                break;
            }
            ArcStatus::SingularEncounter { t: te, lambda: le } => {
                let prev_slope = s[s.len().saturating_sub(2)].dlambda();
                arcs.push(build_arc(n, s, arc.status, orientation, cfg));
                let Some(c) = nearest_critical(crit, le) else {
                    return Err(HillError::SingularArc { t: te, dot: 0.0 });
                };
                let tc = c.gamma.re.clamp(-1.0, 1.0).acos();
                encounters.push((c.delta, tc));
                let t1 = tc.max(te) + cfg.arcs.t_offset;
                if t1 >= t_stop {
                    break;
                }
                // continue along the branch that keeps the incoming direction
                let roots = split_roots(v, &c, t1, cfg)?;
                let guess = *roots
                    .iter()
                    .max_by(|a, b| {
                        let pa = ((**a - c.delta) * prev_slope.conj()).re;
                        let pb = ((**b - c.delta) * prev_slope.conj()).re;
                        pa.partial_cmp(&pb).unwrap()
                    })
                    .unwrap();
                match correct(v, guess, t1, (roots[0] - roots[1]).norm(), cfg)? {
                    Corrected::Ok(l1, _) => {
                        t = t1;
                        lam = l1;
                    }
                    Corrected::Failed => return Err(HillError::CorrectorDivergence { t: t1 }),
                }
            }
        }
    }
    Ok((arcs, encounters))
}

/// Arcs of bands `1..=k_max` and the critical points lying on them. Requires `⟨V⟩ = 0`.
pub fn spectrum_portrait(v: &Potential, k_max: usize, cfg: &Config) -> Result<SpectrumPortrait> {
    let mean = v.mean();
    if mean.norm() > 1e-12 {
        return Err(HillError::NonZeroMean { re: mean.re, im: mean.im });
    }
    let cat = catalog(v, k_max, cfg)?;
    portrait_from_catalog(v, cat, cfg)
}

/// As [`spectrum_portrait`] with a precomputed catalog.
pub fn portrait_from_catalog(v: &Potential, cat: SpectraCatalog, cfg: &Config) -> Result<SpectrumPortrait> {
    let k_max = cat.k_max;
    let p = cat.periodic_expanded();
    let a = cat.antiperiodic_expanded();
    if p.len() < k_max || a.len() < k_max {
        return Err(HillError::Window { re: v.mean().re + (k_max as f64 + 1.5).powi(2), im: 0.0 });
    }
    // band n runs from p[n-1] at t = 0 to a[n-1] at t = π; bands 2m, 2m+1 share the periodic
    // pair and 2m+1, 2m+2 the antiperiodic one, the lower band taking the branch with smaller
    // real part
    let crit = cat.critical.clone();
    let traced: Vec<Result<(Vec<SpectralArc>, Vec<(C64, f64)>)>> = (1..=k_max)
        .into_par_iter()
        .map(|n| trace_band(v, n, (p[n - 1], n % 2 == 0), (a[n - 1], n % 2 == 1), &crit, cfg))
        .collect();
    let mut arcs = Vec::new();
    let mut enc = Vec::new();
    for r in traced {
        let (ar, e) = r?;
        arcs.extend(ar);
        enc.extend(e);
    }

    // critical points on the spectrum: γ real in [-1, 1] and on a traced arc; the second test
    // drops points inside narrow open gaps
    let mut cands: Vec<(C64, f64)> = Vec::new();
    for c in &crit {
        let tol = cfg.criterion.on_spectrum_rel;
        let on_arc = arcs_distance(c.delta, &arcs) <= tol * (1.0 + c.delta.norm());
        if on_arc && c.gamma.im.abs() <= tol && c.gamma.re.abs() <= 1.0 + tol {
            cands.push((c.delta, c.gamma.re.clamp(-1.0, 1.0).acos()));
        }
    }
    for (z, t) in enc {
        if !cands.iter().any(|(w, _)| (*w - z).norm() <= 1e-9 * (1.0 + z.norm())) {
            cands.push((z, t));
        }
    }
    cands.sort_by(|x, y| x.0.re.partial_cmp(&y.0.re).unwrap());
    let singular_points = cands
        .into_par_iter()
        .map(|(z, t)| {
            let pattern = quadruple_zero(v, z, cfg)?;
            let reach = 1e-6 * (1.0 + z.norm()) + 2.0 * cfg.arcs.t_offset;
            let bands = touching_bands(&arcs, z, reach);
            Ok(SingularPoint { lambda: z, t, bands, spectral_singularity: !pattern.holds, pattern })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumPortrait { arcs, singular_points, semistrip: v.strip_bounds(), k_max, catalog: cat })
}

fn touching_bands(arcs: &[SpectralArc], z: C64, reach: f64) -> Vec<usize> {
    let mut b: Vec<usize> = arcs
        .iter()
        .filter(|a| a.lambda_samples.iter().any(|l| (*l - z).norm() <= reach * (1.0 + l.norm()).sqrt()))
        .map(|a| a.band_index)
        .collect();
    b.sort_unstable();
    b.dedup();
    b
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

/// Distance from `point` to the traced spectrum, by piecewise-linear interpolation of the arcs.
pub fn distance_to_spectrum(point: C64, portrait: &SpectrumPortrait) -> Result<f64> {
    if point.re > portrait.window_re_max() {
        return Err(HillError::Window { re: point.re, im: point.im });
    }
    Ok(arcs_distance(point, &portrait.arcs))
}

fn arcs_distance(point: C64, arcs: &[SpectralArc]) -> f64 {
    let mut best = f64::INFINITY;
    for arc in arcs {
        let l = &arc.lambda_samples;
        if l.len() == 1 {
            best = best.min((point - l[0]).norm());
        }
        for w in l.windows(2) {
            best = best.min(segment_distance(point, w[0], w[1]));
        }
    }
    best
}

/// `λ(t)` on `arc`, polished by Newton from the interpolant, with its transfer data.
pub fn arc_point(v: &Potential, arc: &SpectralArc, t: f64, cfg: &Config) -> Result<(C64, Transfer)> {
    let guess = arc.eval_at(t);
    let (a, b) = arc.t_range();
    let span = (arc.endpoints.1 - arc.endpoints.0).norm() / (b - a).max(1e-12);
    let reach = 1e-2 * (1.0 + guess.norm()) + span * 1e-2;
    match correct(v, guess, t, reach, cfg)? {
        Corrected::Ok(l, tr) => Ok((l, tr)),
        Corrected::Failed => Err(HillError::CorrectorDivergence { t }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_band_one() {
        let cfg = Config::default();
        let t0 = 0.3;
        let start = C64::new((t0 / PI).powi(2), 0.0);
        let arc = trace_arc(&Potential::zero(), start, t0, PI - 0.3, &cfg).unwrap();
        assert!(arc.len() >= 40);
        for (t, l) in arc.t_samples.iter().zip(&arc.lambda_samples) {
            assert!((l - (t / PI).powi(2)).norm() < 1e-8);
        }
    }

    #[test]
    fn hermite_interpolation() {
        let cfg = Config::default();
        let arc = trace_arc(&Potential::zero(), C64::new(0.25, 0.0), PI / 2.0, 3.0, &cfg).unwrap();
        let t = 2.2;
        assert!((arc.eval_at(t) - (t / PI).powi(2)).norm() < 1e-7);
    }

    #[test]
    fn backward_trace_is_sorted() {
        let cfg = Config::default();
        let arc = trace_arc(&Potential::zero(), C64::new(0.25, 0.0), PI / 2.0, 0.2, &cfg).unwrap();
        assert!(arc.t_samples.windows(2).all(|w| w[0] < w[1]));
        assert!((arc.t_samples[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn segment_distance_basics() {
        let a = C64::new(0.0, 0.0);
        let b = C64::new(2.0, 0.0);
        assert!((segment_distance(C64::new(1.0, 1.0), a, b) - 1.0).abs() < 1e-15);
        assert!((segment_distance(C64::new(3.0, 0.0), a, b) - 1.0).abs() < 1e-15);
    }
}
