//! Dirichlet, periodic, antiperiodic and fiber spectra, and critical points of `Δ₊`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{HillError, Result};
use crate::floquet::{transfer, transfer_second, Transfer};
use crate::potential::Potential;
use crate::rootfind::{find_roots_in_rect, winding_on_circle, Rect, Root};

type C64 = Complex<f64>;

/// An eigenvalue together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub z: C64,
    pub multiplicity: usize,
}

/// A zero `δ` of `Δ₊•` with `γ = Δ₊(δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub delta: C64,
    pub gamma: C64,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraCatalog {
    pub dirichlet: Vec<Eigenvalue>,
    pub periodic: Vec<Eigenvalue>,
    pub antiperiodic: Vec<Eigenvalue>,
    pub critical: Vec<CriticalPoint>,
    pub k_max: usize,
    pub search_region: Rect,
}

impl SpectraCatalog {
    /// Periodic values repeated by multiplicity, in catalog order.
    pub fn periodic_expanded(&self) -> Vec<C64> {
        expand(&self.periodic)
    }

    pub fn antiperiodic_expanded(&self) -> Vec<C64> {
        expand(&self.antiperiodic)
    }
}

pub fn expand(list: &[Eigenvalue]) -> Vec<C64> {
    list.iter().flat_map(|e| std::iter::repeat_n(e.z, e.multiplicity)).collect()
}

fn to_eigen(roots: Vec<Root>) -> Vec<Eigenvalue> {
    roots.into_iter().map(|r| Eigenvalue { z: r.z, multiplicity: r.multiplicity }).collect()
}

/// Keeps the first `m` eigenvalues counted with multiplicity.
fn truncate_counted(list: Vec<Eigenvalue>, m: usize) -> Vec<Eigenvalue> {
    let mut out = Vec::new();
    let mut left = m;
    for e in list {
        if left == 0 {
            break;
        }
        let k = e.multiplicity.min(left);
        out.push(Eigenvalue { z: e.z, multiplicity: k });
        left -= k;
    }
    out
}

/// Semi-strip rectangle `[M₃ - ε, re_max] × [M₁ - ε, M₂ + ε]`.
pub fn search_rect(v: &Potential, re_max: f64, cfg: &Config) -> Rect {
    let (im_lo, im_hi, re_lo) = v.strip_bounds();
    let m = cfg.spectra.margin;
    Rect::new(re_lo - m, re_max.max(re_lo + m), im_lo - m, im_hi + m)
}

/// `z ↦ (Δ₊(z) - target, Δ₊•(z))`
pub fn discriminant_fn<'a>(v: &'a Potential, target: C64, cfg: &'a Config) -> impl Fn(C64) -> Result<(C64, C64)> + Sync + 'a {
    let tol = cfg.floquet.tol;
    move |z| {
        let tr = transfer(v, z, tol)?;
        Ok((tr.delta_plus() - target, tr.delta_plus_dot()))
    }
}

fn dirichlet_fn<'a>(v: &'a Potential, cfg: &'a Config) -> impl Fn(C64) -> Result<(C64, C64)> + Sync + 'a {
    let tol = cfg.floquet.tol;
    move |z| {
        let tr = transfer(v, z, tol)?;
        Ok((tr.m[1], tr.dm[1]))
    }
}

fn critical_fn<'a>(v: &'a Potential, cfg: &'a Config) -> impl Fn(C64) -> Result<(C64, C64)> + Sync + 'a {
    let tol = cfg.floquet.tol;
    move |z| {
        let (tr, ddot) = transfer_second(v, z, tol)?;
        Ok((tr.delta_plus_dot(), ddot))
    }
}

/// First `k_max` Dirichlet eigenvalues.
pub fn dirichlet_spectrum(v: &Potential, k_max: usize, cfg: &Config) -> Result<Vec<Eigenvalue>> {
    check_kmax(k_max)?;
    let re_max = v.mean().re + (k_max as f64 + 0.5).powi(2);
    let f = dirichlet_fn(v, cfg);
    let roots = find_roots_in_rect(&f, search_rect(v, re_max, cfg), &cfg.spectra)?;
    Ok(truncate_counted(to_eigen(roots), k_max))
}

/// Zeros of `Δ₊ - 1` and `Δ₊ + 1` with real part up to `Re⟨V⟩ + (k_max + 3/2)²`.
pub fn periodic_antiperiodic_spectrum(
    v: &Potential,
    k_max: usize,
    cfg: &Config,
) -> Result<(Vec<Eigenvalue>, Vec<Eigenvalue>)> {
    check_kmax(k_max)?;
    let re_max = v.mean().re + (k_max as f64 + 1.5).powi(2);
    let rect = search_rect(v, re_max, cfg);
    let fp = discriminant_fn(v, C64::new(1.0, 0.0), cfg);
    let fa = discriminant_fn(v, C64::new(-1.0, 0.0), cfg);
    let (p, a) = rayon::join(
        || find_roots_in_rect(&fp, rect, &cfg.spectra),
        || find_roots_in_rect(&fa, rect, &cfg.spectra),
    );
    let split = |list: Vec<Root>, target: f64| -> Result<Vec<Eigenvalue>> {
        let mut out = Vec::new();
        for e in to_eigen(list) {
            match e.multiplicity {
                1 => out.push(Eigenvalue { z: refine_root(v, e.z, target, cfg)?, multiplicity: 1 }),
                2 => match split_pair(v, e.z, target, cfg)? {
                    Some((a, b)) => out.extend([Eigenvalue { z: a, multiplicity: 1 }, Eigenvalue { z: b, multiplicity: 1 }]),
                    None => out.push(e),
                },
                _ => out.push(e),
            }
        }
        Ok(out)
    };
    Ok((split(p?, 1.0)?, split(a?, -1.0)?))
}

/// Roots of `det(A + μB)` for 2×2 `A`, `B`, smallest first.
fn pencil_roots(a: [C64; 4], b: [C64; 4]) -> Option<[C64; 2]> {
    let q2 = b[0] * b[3] - b[1] * b[2];
    let q1 = a[0] * b[3] + a[3] * b[0] - a[1] * b[2] - a[2] * b[1];
    let q0 = a[0] * a[3] - a[1] * a[2];
    if q2.norm() == 0.0 {
        return None;
    }
    let d = (q1 * q1 - q2 * q0 * 4.0).sqrt();
    let big = if (-q1 + d).norm() >= (-q1 - d).norm() { -q1 + d } else { -q1 - d };
    if big.norm() == 0.0 {
        return Some([C64::new(0.0, 0.0); 2]);
    }
    // stable pair: μ₁ = big / 2q₂, μ₂ = 2q₀ / big
    let (r1, r2) = (q0 * 2.0 / big, big / (q2 * 2.0));
    Some(if r1.norm() <= r2.norm() { [r1, r2] } else { [r2, r1] })
}

/// Newton steps on the pencil `M(z) - target I + μ M'(z)`, taking the root `μ` nearest zero.
fn pencil_newton(v: &Potential, z: C64, target: f64, cfg: &Config, steps: usize) -> Result<Option<C64>> {
    let mut z = z;
    for _ in 0..steps {
        let tr = transfer(v, z, cfg.floquet.tol)?;
        let a = [tr.m[0] - target, tr.m[1], tr.m[2], tr.m[3] - target];
        match pencil_roots(a, tr.dm) {
            Some(r) => z += r[0],
            None => return Ok(None),
        }
    }
    Ok(Some(z))
}

/// Polishes a simple root of `Δ₊ - target`.
///
/// Near a narrow gap the two edges are simple roots of `Δ₊ - target` but with a small
/// derivative between them, so Newton on the discriminant stalls at `ε / |Δ₊•|`. The pencil
/// `M(z₀) - target I + μ M'(z₀)` sees both edges at once and is conditioned linearly in the
/// entries of `M`. Keeps `z₀` if the iteration leaves the cluster radius.
fn refine_root(v: &Potential, z0: C64, target: f64, cfg: &Config) -> Result<C64> {
    Ok(match pencil_newton(v, z0, target, cfg, 4)? {
        Some(z) if (z - z0).norm() <= separation_tol(z0, cfg) && z.re.is_finite() && z.im.is_finite() => z,
        _ => z0,
    })
}

/// Resolves a double root of `Δ₊ - target` into two simple roots when the pencil separates
/// them by more than the integration accuracy and the linearization accounts for
/// `M - target I`, as at a nearly closed gap. Returns `None` for a genuine double root.
fn split_pair(v: &Potential, z0: C64, target: f64, cfg: &Config) -> Result<Option<(C64, C64)>> {
    let tol = cfg.floquet.tol;
    let reach = separation_tol(z0, cfg);
    let tr = transfer(v, z0, tol)?;
    let a = [tr.m[0] - target, tr.m[1], tr.m[2], tr.m[3] - target];
    let Some(mu) = pencil_roots(a, tr.dm) else { return Ok(None) };
    if mu[1].norm() > reach {
        return Ok(None);
    }
    let mut z = [z0; 2];
    for (zi, m) in z.iter_mut().zip(mu) {
        match pencil_newton(v, z0 + m, target, cfg, 4)? {
            Some(next) => *zi = next,
            None => return Ok(None),
        }
    }
    let gap = (z[0] - z[1]).norm();
    if gap <= 10.0 * tol * (1.0 + z0.norm()) || z.iter().any(|zi| (zi - z0).norm() > reach) {
        return Ok(None);
    }
    // a split pair has `M - target I ≈ (z - z₀) M'` at the centre; at a Jordan point the
    // nilpotent part is far larger and the separation found above is rounding noise
    let size = |m: &[C64; 4]| m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if size(&a) > 10.0 * 0.5 * gap * size(&tr.dm) {
        return Ok(None);
    }
    z.sort_by(|p, q| p.re.partial_cmp(&q.re).expect("finite roots").then(p.im.partial_cmp(&q.im).expect("finite roots")));
    Ok(Some((z[0], z[1])))
}

/// First `k_max` zeros of `Δ₊•`, with `γ = Δ₊(δ)` and the zero order.
pub fn critical_points(v: &Potential, k_max: usize, cfg: &Config) -> Result<Vec<CriticalPoint>> {
    check_kmax(k_max)?;
    let re_max = v.mean().re + (k_max as f64 + 0.5).powi(2);
    let f = critical_fn(v, cfg);
    let roots = find_roots_in_rect(&f, search_rect(v, re_max, cfg), &cfg.spectra)?;
    let roots = truncate_counted(to_eigen(roots), k_max);
    roots
        .into_par_iter()
        .map(|e| {
            let tr = transfer(v, e.z, cfg.floquet.tol)?;
            Ok(CriticalPoint { delta: e.z, gamma: tr.delta_plus(), order: e.multiplicity })
        })
        .collect()
}

/// Leading asymptotics of `√E` for bands `1, 2, 3, ...` at quasi-momentum `t ∈ [0, π]`.
fn band_asymptotics(t: f64, count: usize) -> Vec<f64> {
    let s = t / std::f64::consts::PI;
    let mut a = vec![s];
    let mut n = 1;
    while a.len() < count {
        a.push(2.0 * n as f64 - s);
        a.push(2.0 * n as f64 + s);
        n += 1;
    }
    a.truncate(count);
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a
}

/// Folds `t` into `[0, π]`, where `cos t` takes each value once.
pub fn fold_t(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = t.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        two_pi - r
    } else {
        r
    }
}

/// Eigenvalues of the fiber at `t` belonging to bands `1..=2 k_max - 1`, counted with multiplicity.
pub fn fiber_spectrum(v: &Potential, t: f64, k_max: usize, cfg: &Config) -> Result<Vec<Eigenvalue>> {
    check_kmax(k_max)?;
    fiber_bands(v, t, 2 * k_max - 1, cfg)
}

/// The first `count` fiber eigenvalues at `t`, counted with multiplicity.
pub fn fiber_bands(v: &Potential, t: f64, count: usize, cfg: &Config) -> Result<Vec<Eigenvalue>> {
    let tf = fold_t(t);
    let a = band_asymptotics(tf, count + 2);
    // place the right edge in a wide gap of the asymptotic values
    let mut cut = 0.5 * (a[count - 1] + a[count]);
    if a[count] - a[count - 1] < 0.3 {
        cut = 0.5 * (a[count] + a[count + 1]);
    }
    let re_max = v.mean().re + cut * cut;
    let f = discriminant_fn(v, C64::new(tf.cos(), 0.0), cfg);
    let roots = find_roots_in_rect(&f, search_rect(v, re_max, cfg), &cfg.spectra)?;
    Ok(truncate_counted(to_eigen(roots), count))
}

fn check_kmax(k_max: usize) -> Result<()> {
    if k_max == 0 {
        return Err(HillError::InvalidInput("k_max must be at least 1".into()));
    }
    Ok(())
}

/// Singular values of a complex 2×2 matrix, largest first.
pub fn singular_values_2x2(a: [C64; 4]) -> (f64, f64) {
    let fro2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let det = (a[0] * a[3] - a[1] * a[2]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

/// Cluster resolution of the root finder at `z`.
pub fn separation_tol(z: C64, cfg: &Config) -> f64 {
    cfg.spectra.sep_rel * (1.0 + z.norm()).sqrt()
}

/// Multiplicities of a fiber eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub algebraic: usize,
    pub geometric: usize,
    /// Singular values of `M(E) - e^{it} I`.
    pub singular_values: (f64, f64),
    /// Threshold below which a singular value counted as zero.
    pub rank_tol: f64,
}

/// Algebraic multiplicity (zero order of `Δ₊ - cos t` at `E`) and geometric multiplicity
/// (`2 - rank(M(E) - e^{it} I)`).
///
/// Zeros closer than the root finder's cluster resolution count together; for such clusters
/// the rank tolerance is widened to the same resolution, since the monodromy matrix of a
/// split pair differs from `e^{it} I` by the size of the split.
pub fn algebraic_vs_geometric(v: &Potential, t: f64, e: C64, cfg: &Config) -> Result<Multiplicity> {
    let target = C64::new(t.cos(), 0.0);
    let tr: Transfer = transfer(v, e, cfg.floquet.tol)?;
    let residual = (tr.delta_plus() - target).norm();
    if residual > 1e-8 * (1.0 + e.norm()) {
        return Err(HillError::NotAnEigenvalue { re: e.re, im: e.im, residual });
    }
    let sep = separation_tol(e, cfg);
    let f = discriminant_fn(v, target, cfg);
    let w = winding_on_circle(&f, e, 0.75 * sep)?;
    let algebraic = w.round().max(0.0) as usize;
    let eit = C64::from_polar(1.0, t);
    let a = [tr.m[0] - eit, tr.m[1], tr.m[2], tr.m[3] - eit];
    let sv = singular_values_2x2(a);
    let mnorm = singular_values_2x2(tr.m).0;
    let mut tol = cfg.criterion.rank_rel * mnorm;
    if algebraic >= 2 {
        tol = tol.max(sep * (1.0 + e.norm().sqrt()));
    }
    let geometric = [sv.0, sv.1].iter().filter(|s| **s <= tol).count();
    Ok(Multiplicity { algebraic, geometric, singular_values: sv, rank_tol: tol })
}

/// Full catalog on the window `k_max`.
pub fn catalog(v: &Potential, k_max: usize, cfg: &Config) -> Result<SpectraCatalog> {
    let ((d, pa), c) = rayon::join(
        || rayon::join(|| dirichlet_spectrum(v, k_max, cfg), || periodic_antiperiodic_spectrum(v, k_max, cfg)),
        || critical_points(v, k_max, cfg),
    );
    let (periodic, antiperiodic) = pa?;
    let re_max = v.mean().re + (k_max as f64 + 1.5).powi(2);
    Ok(SpectraCatalog {
        dirichlet: d?,
        periodic,
        antiperiodic,
        critical: c?,
        k_max,
        search_region: search_rect(v, re_max, cfg),
    })
}

/// Remainders `f_k^±` in `λ_k^± = (k + ⟨V⟩/2k + f_k^±/k)²` for the catalogued `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRemainders {
    /// `[f_k^-, f_k^+]`, `k = 1, 2, ...`
    pub f: Vec<[C64; 2]>,
    /// `Σ_{j ≤ k} (|f_j^-| + |f_j^+|)`. Only a finite-window sum; says nothing about convergence.
    pub l1_partial_sums: Vec<f64>,
}

pub fn asymptotic_remainders(cat: &SpectraCatalog, mean: C64) -> AsymptoticRemainders {
    let sorted = |mut v: Vec<C64>| {
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v
    };
    let per = sorted(cat.periodic_expanded());
    let anti = sorted(cat.antiperiodic_expanded());
    let mut f = Vec::new();
    let mut l1_partial_sums = Vec::new();
    let mut acc = 0.0;
    for k in 1.. {
        // λ_k^± is the k-th pair above λ₀⁺: antiperiodic for odd k, periodic for even k
        let pair = if k % 2 == 1 { anti.get(k - 1..k + 1) } else { per.get(k - 1..k + 1) };
        let Some(pair) = pair else { break };
        let kf = k as f64;
        let r = |l: C64| (l.sqrt() - kf - mean / (2.0 * kf)) * kf;
        let fk = [r(pair[0]), r(pair[1])];
        acc += fk[0].norm() + fk[1].norm();
        f.push(fk);
        l1_partial_sums.push(acc);
    }
    AsymptoticRemainders { f, l1_partial_sums }
}

/// `n (√E_n^± - 2n ∓ t/π)` for `n = 1..=n_max` at each `t` in `t_grid` (values in `[0, π]`).
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticResidual {
    pub n: usize,
    pub t: f64,
    pub minus: f64,
    pub plus: f64,
}

pub fn fiber_asymptotic_residuals(
    v: &Potential,
    t_grid: &[f64],
    n_max: usize,
    cfg: &Config,
) -> Result<Vec<AsymptoticResidual>> {
    let per_t: Vec<Result<Vec<AsymptoticResidual>>> = t_grid
        .par_iter()
        .map(|&t| {
            let list = expand(&fiber_bands(v, t, 2 * n_max + 1, cfg)?);
            let s = t / std::f64::consts::PI;
            Ok((1..=n_max)
                .map(|n| {
                    let em = list[2 * n - 1];
                    let ep = list[2 * n];
                    let nf = n as f64;
                    AsymptoticResidual {
                        n,
                        t,
                        minus: nf * (em.sqrt() - (2.0 * nf - s)).norm(),
                        plus: nf * (ep.sqrt() - (2.0 * nf + s)).norm(),
                    }
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_t {
        out.extend(r?);
    }
    Ok(out)
}
