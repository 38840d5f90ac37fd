//! Spectral projections along arcs, eigenfunction expansions, the Gel'fand transform, the
//! spectral matrix and the resolvent on uniform grids.
//!
//! Arc integrals run in `t`, where `dλ / √(1 - Δ₊²) = -dt / Δ₊•` removes the band-edge
//! singularity. Kernels use the cleared products `φ(π) ψ₋ ψ₊`, so Dirichlet points need no care.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcs::{arc_point, quadruple_zero, SpectralArc, SpectrumPortrait};
use crate::config::Config;
use crate::criterion::Verdict;
use crate::error::{HillError, Result};
use crate::floquet::{fundamental_system, select_branch, transfer, FundamentalData};
use crate::potential::Potential;
use crate::quadrature::{composite_gauss, cumulative_uniform, period_gauss_grid, uniform_weights};
use crate::spectra::{expand as expand_counted, fiber_bands, separation_tol};

type C64 = Complex<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Values below this count as outside the support.
pub const SUPPORT_FLOOR: f64 = 1e-14;

/// Samples on the uniform grid `x_i = -Nπ + i π / p`, `i = 0 .. 2Np`, `p` points per cell.
///
/// Cell `n ∈ [-N, N)` holds indices `(n + N) p .. (n + N + 1) p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n_cells: usize,
    pub points_per_cell: usize,
    pub x_grid: Vec<f64>,
    pub values: Vec<C64>,
    /// Half-open index range outside which `|values| ≤ 1e-14`.
    pub support: (usize, usize),
}

impl GridFunction {
    pub fn from_values(n_cells: usize, points_per_cell: usize, values: Vec<C64>) -> Result<Self> {
        if n_cells == 0 || points_per_cell < 4 {
            return Err(HillError::InvalidInput("grid needs at least one cell and four points per cell".into()));
        }
        let len = 2 * n_cells * points_per_cell;
        if values.len() != len {
            return Err(HillError::InvalidInput(format!("expected {len} samples, got {}", values.len())));
        }
        let h = PI / points_per_cell as f64;
        let x_grid = (0..len).map(|i| -(n_cells as f64) * PI + i as f64 * h).collect();
        let lo = values.iter().position(|v| v.norm() > SUPPORT_FLOOR).unwrap_or(0);
        let hi = values.iter().rposition(|v| v.norm() > SUPPORT_FLOOR).map_or(0, |i| i + 1);
        Ok(GridFunction { n_cells, points_per_cell, x_grid, values, support: (lo, hi.max(lo)) })
    }

    pub fn from_fn(n_cells: usize, points_per_cell: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let h = PI / points_per_cell as f64;
        let values = (0..2 * n_cells * points_per_cell).map(|i| f(-(n_cells as f64) * PI + i as f64 * h)).collect();
        Self::from_values(n_cells, points_per_cell, values)
    }

    pub fn zeros(n_cells: usize, points_per_cell: usize) -> Result<Self> {
        Self::from_values(n_cells, points_per_cell, vec![ZERO; 2 * n_cells * points_per_cell])
    }

    /// `exp(-(x - center)² / (2 width²))`, cut to zero below the support floor.
    pub fn gaussian(n_cells: usize, points_per_cell: usize, center: f64, width: f64) -> Result<Self> {
        Self::from_fn(n_cells, points_per_cell, |x| {
            let g = (-(x - center).powi(2) / (2.0 * width * width)).exp();
            C64::new(if g > SUPPORT_FLOOR { g } else { 0.0 }, 0.0)
        })
    }

    pub fn h(&self) -> f64 {
        PI / self.points_per_cell as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete `L²` norm `(h Σ |g_i|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        (self.h() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `h Σ g_i conj(f_i)`.
    pub fn inner(&self, other: &GridFunction) -> C64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<C64>() * self.h()
    }

    fn same_shape(&self, other: &GridFunction) -> Result<()> {
        if self.n_cells != other.n_cells || self.points_per_cell != other.points_per_cell {
            return Err(HillError::InvalidInput("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &GridFunction, b: C64) -> Result<GridFunction> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::from_values(self.n_cells, self.points_per_cell, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Samples of cell `n` on `[0, π]`, the last one borrowed from cell `n + 1`.
    fn cell_closed(&self, n: i64) -> Vec<C64> {
        let p = self.points_per_cell;
        let start = ((n + self.n_cells as i64) as usize) * p;
        (0..=p).map(|j| self.values.get(start + j).copied().unwrap_or(ZERO)).collect()
    }

    /// Cells `n` whose closed cell `[nπ, (n+1)π]` meets the support.
    fn support_cells(&self) -> std::ops::Range<i64> {
        let (lo, hi) = self.support;
        if hi <= lo {
            return 0..0;
        }
        let p = self.points_per_cell;
        let first = lo.saturating_sub(1) / p;
        let last = (hi - 1) / p;
        (first as i64 - self.n_cells as i64)..(last as i64 - self.n_cells as i64 + 1)
    }

    fn cell_range(&self) -> std::ops::Range<i64> {
        -(self.n_cells as i64)..self.n_cells as i64
    }
}

/// `G(x, t) = Σ_n g(x + nπ) e^{-int}` on `x ∈ [0, π)` and the given `t` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandField {
    pub n_cells: usize,
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `values[k][i] = G(x_i, t_k)`.
    pub values: Vec<Vec<C64>>,
}

impl GelfandField {
    /// `((1/2π) ∫dt ∫dx |G|²)^{1/2}` by the trapezoid rule in `t` (uniform periodic grid) and
    /// the grid sum in `x`.
    pub fn norm(&self) -> f64 {
        let m = self.t_grid.len() as f64;
        let h = PI / self.x_grid.len() as f64;
        let s: f64 = self.values.iter().flat_map(|r| r.iter()).map(|v| v.norm_sqr()).sum();
        (s * h / m).sqrt()
    }
}

/// `m` equispaced nodes `2πk/m` on `[0, 2π)`.
pub fn uniform_t_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
}

pub fn gelfand_forward(g: &GridFunction, t_grid: &[f64]) -> GelfandField {
    let p = g.points_per_cell;
    let cells: Vec<i64> = g.support_cells().filter(|n| g.cell_range().contains(n)).collect();
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let mut row = vec![ZERO; p];
            for &n in &cells {
                let ph = C64::from_polar(1.0, -(n as f64) * t);
                let start = ((n + g.n_cells as i64) as usize) * p;
                for (i, r) in row.iter_mut().enumerate() {
                    *r += g.values[start + i] * ph;
                }
            }
            row
        })
        .collect();
    let h = g.h();
    GelfandField { n_cells: g.n_cells, x_grid: (0..p).map(|i| i as f64 * h).collect(), t_grid: t_grid.to_vec(), values }
}

/// `g(x + nπ) = (1/2π) ∫ G(x, t) e^{int} dt` by the trapezoid rule.
///
/// The `t` grid must be the uniform grid of [`uniform_t_grid`] with at least `2N` nodes, so
/// that the cells `-N..N` do not alias.
pub fn gelfand_inverse(field: &GelfandField) -> Result<GridFunction> {
    let m = field.t_grid.len();
    let n_cells = field.n_cells;
    if m < 2 * n_cells {
        return Err(HillError::InvalidInput(format!("{m} t-nodes cannot resolve {} cells", 2 * n_cells)));
    }
    let uniform = field.t_grid.iter().enumerate().all(|(k, t)| (t - 2.0 * PI * k as f64 / m as f64).abs() < 1e-12);
    if !uniform {
        return Err(HillError::InvalidInput("inverse transform needs the uniform t grid".into()));
    }
    let p = field.x_grid.len();
    let values: Vec<C64> = (-(n_cells as i64)..n_cells as i64)
        .into_par_iter()
        .flat_map_iter(|n| {
            let mut cell = vec![ZERO; p];
            for (k, row) in field.values.iter().enumerate() {
                let ph = C64::from_polar(1.0, n as f64 * field.t_grid[k]) / m as f64;
                for (c, v) in cell.iter_mut().zip(row) {
                    *c += v * ph;
                }
            }
            cell
        })
        .collect();
    GridFunction::from_values(n_cells, p, values)
}

/// `θ`, `φ` on the uniform cell grid plus the monodromy data the kernels need.
struct CellSystem {
    theta: Vec<C64>,
    phi: Vec<C64>,
    phi_pi: C64,
    delta_minus: C64,
    theta_prime_pi: C64,
    delta_plus: C64,
}

impl CellSystem {
    fn new(fd: FundamentalData) -> Self {
        let n = fd.theta.len() - 1;
        let delta_plus = (fd.theta[n] + fd.phi_prime[n]) * 0.5;
        let delta_minus = (fd.theta[n] - fd.phi_prime[n]) * 0.5;
        CellSystem {
            phi_pi: fd.phi[n],
            theta_prime_pi: fd.theta_prime[n],
            delta_plus,
            delta_minus,
            theta: fd.theta,
            phi: fd.phi,
        }
    }
}

fn cell_grid(p: usize) -> Vec<f64> {
    let h = PI / p as f64;
    let mut g: Vec<f64> = (0..=p).map(|j| j as f64 * h).collect();
    g[p] = PI;
    g
}

/// `(∫θ g_n, ∫φ g_n)` for every cell `n` meeting the support of `g`.
fn cell_coefficients(sys: &CellSystem, g: &GridFunction, w: &[f64]) -> Vec<(i64, C64, C64)> {
    g.support_cells()
        .map(|n| {
            let gn = g.cell_closed(n);
            let mut ct = ZERO;
            let mut cp = ZERO;
            for j in 0..gn.len() {
                ct += sys.theta[j] * gn[j] * w[j];
                cp += sys.phi[j] * gn[j] * w[j];
            }
            (n, ct, cp)
        })
        .collect()
}

/// `t`-nodes and weights covering the arc.
fn arc_nodes(arc: &SpectralArc, cfg: &Config) -> Vec<(f64, f64)> {
    let (a, b) = arc.t_range();
    if b <= a {
        return Vec::new();
    }
    let panels = ((b - a) / cfg.projection.arc_panel).ceil().max(1.0) as usize;
    let (t, w) = composite_gauss(a, b, panels, cfg.projection.arc_order);
    t.into_iter().zip(w).collect()
}

/// Fails when the arc is not regular or ends at a spectral singularity.
fn check_arc(v: &Potential, arc: &SpectralArc, cfg: &Config) -> Result<()> {
    let first_bad = || {
        arc.t_samples
            .iter()
            .zip(&arc.delta_dot_samples)
            .zip(&arc.lambda_samples)
            .find(|((t, d), l)| **t > 0.0 && **t < PI && d.norm() < cfg.arcs.eps_sing * (1.0 + l.norm()))
            .map(|((t, d), _)| (*t, d.norm()))
    };
    if !arc.regular {
        let (t, dot) = first_bad().unwrap_or((arc.t_range().1, 0.0));
        return Err(HillError::SingularArc { t, dot });
    }
    for k in [0, arc.len() - 1] {
        let (t, d, l) = (arc.t_samples[k], arc.delta_dot_samples[k], arc.lambda_samples[k]);
        if d.norm() < cfg.arcs.eps_sing * (1.0 + l.norm()) && !quadruple_zero(v, l, cfg)?.holds {
            return Err(HillError::SingularArc { t, dot: d.norm() });
        }
    }
    Ok(())
}

/// `P(σ) g` for a regular arc `σ`.
///
/// With `x = x₀ + jπ`, `y = y₀ + nπ` and `k = j - n` the kernel of one `t`-node is
/// `2 cos(kt) S(x₀, y₀) + 2 sin(kt) sin t (θ(x₀)φ(y₀) - φ(x₀)θ(y₀))`, with
/// `S = φ(π)θθ - Δ₋(θφ + φθ) - θ'(π)φφ`, weighted by `-1 / (4π Δ₊•)`. This is the `t`-average
/// of the fiber eigenprojections, so it does not depend on the direction of the arc in `λ`.
pub fn project(v: &Potential, arc: &SpectralArc, g: &GridFunction, cfg: &Config) -> Result<GridFunction> {
    check_arc(v, arc, cfg)?;
    let p = g.points_per_cell;
    let grid = cell_grid(p);
    let w = uniform_weights(p + 1, g.h());
    let nodes = arc_nodes(arc, cfg);
    let out_cells: Vec<i64> = g.cell_range().collect();
    let parts = nodes
        .par_iter()
        .map(|&(t, wt)| {
            let (lam, tr) = arc_point(v, arc, t, cfg)?;
            let sys = CellSystem::new(fundamental_system(v, lam, &grid, cfg.floquet.tol)?);
            let coeffs = cell_coefficients(&sys, g, &w);
            let s = t.sin();
            let scale = -wt / (4.0 * PI) / tr.delta_plus_dot();
            let mut out = vec![ZERO; g.len()];
            for (jj, &j) in out_cells.iter().enumerate() {
                let (mut a, mut b, mut c, mut d) = (ZERO, ZERO, ZERO, ZERO);
                for &(n, ct, cp) in &coeffs {
                    let kt = (j - n) as f64 * t;
                    let (sk, ck) = kt.sin_cos();
                    a += ct * ck;
                    b += cp * ck;
                    c += ct * sk;
                    d += cp * sk;
                }
                let ctheta = (sys.phi_pi * a - sys.delta_minus * b + d * s) * 2.0 * scale;
                let cphi = (-sys.delta_minus * a - sys.theta_prime_pi * b - c * s) * 2.0 * scale;
                let base = jj * p;
                for i in 0..p {
                    out[base + i] = ctheta * sys.theta[i] + cphi * sys.phi[i];
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    let mut total = vec![ZERO; g.len()];
    for part in parts {
        for (a, b) in total.iter_mut().zip(part) {
            *a += b;
        }
    }
    GridFunction::from_values(g.n_cells, p, total)
}

/// `P(Λ_n) g` summed over the arcs of band `n`.
pub fn project_band(v: &Potential, portrait: &SpectrumPortrait, n: usize, g: &GridFunction, cfg: &Config) -> Result<GridFunction> {
    let arcs = portrait.band(n);
    if arcs.is_empty() {
        return Err(HillError::InvalidInput(format!("band {n} is not in the portrait")));
    }
    let mut acc = GridFunction::zeros(g.n_cells, g.points_per_cell)?;
    for arc in arcs {
        acc = acc.combine(C64::new(1.0, 0.0), &project(v, arc, g, cfg)?, C64::new(1.0, 0.0))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub band_max: usize,
    pub reconstruction: GridFunction,
    /// `‖P(Λ_n) g‖` for `n = 1..=band_max`.
    pub band_norms: Vec<f64>,
    /// `‖g - Σ_{n ≤ band_max} P(Λ_n) g‖`.
    pub residual_norm: f64,
}

/// Partial eigenfunction expansion `Σ_{n ≤ band_max} P(Λ_n) g`.
///
/// `v` must be the potential the portrait was traced for. Refuses to run for a `Fail` verdict
/// unless `allow_fail` is set.
pub fn expand(
    v: &Potential,
    portrait: &SpectrumPortrait,
    g: &GridFunction,
    band_max: usize,
    verdict: Verdict,
    allow_fail: bool,
    cfg: &Config,
) -> Result<Expansion> {
    if verdict == Verdict::Fail && !allow_fail {
        return Err(HillError::ExpansionRefused);
    }
    if band_max == 0 || band_max > portrait.k_max {
        return Err(HillError::InvalidInput(format!("band_max must lie in 1..={}", portrait.k_max)));
    }
    let parts = (1..=band_max).map(|n| project_band(v, portrait, n, g, cfg)).collect::<Result<Vec<_>>>()?;
    let mut acc = GridFunction::zeros(g.n_cells, g.points_per_cell)?;
    let one = C64::new(1.0, 0.0);
    for part in &parts {
        acc = acc.combine(one, part, one)?;
    }
    let residual_norm = g.sub(&acc)?.norm();
    Ok(Expansion { band_max, band_norms: parts.iter().map(|p| p.norm()).collect(), reconstruction: acc, residual_norm })
}

/// `(∫ φ(π)ψ₊(λ, y) g(y) dy, ∫ φ(π)ψ₋(λ, y) g(y) dy)` over the line, with `ρ₊ = e^{it}`.
pub fn floquet_coefficients(v: &Potential, lambda: C64, t: f64, g: &GridFunction, cfg: &Config) -> Result<(C64, C64)> {
    let p = g.points_per_cell;
    let sys = CellSystem::new(fundamental_system(v, lambda, &cell_grid(p), cfg.floquet.tol)?);
    let w = uniform_weights(p + 1, g.h());
    let s = t.sin();
    let rho = C64::from_polar(1.0, t);
    let mut fp = ZERO;
    let mut fm = ZERO;
    for (n, ct, cp) in cell_coefficients(&sys, g, &w) {
        let r = rho.powi(n as i32);
        fp += r * (sys.phi_pi * ct + (-sys.delta_minus + I * s) * cp);
        fm += (sys.phi_pi * ct + (-sys.delta_minus - I * s) * cp) / r;
    }
    Ok((fp, fm))
}

/// `S(λ) = (1 / (2π sin t)) [[φ(π), -Δ₋], [-Δ₋, -θ'(π)]]` for `λ` on an arc at `t`, so
/// `√(1 - Δ₊²) = sin t` fixes the branch.
pub fn spectral_matrix(v: &Potential, lambda: C64, t: f64, cfg: &Config) -> Result<[[C64; 2]; 2]> {
    let tr = transfer(v, lambda, cfg.floquet.tol)?;
    let residual = (tr.delta_plus() - t.cos()).norm();
    if residual > 1e-8 * (1.0 + lambda.norm()) {
        return Err(HillError::NotAnEigenvalue { re: lambda.re, im: lambda.im, residual });
    }
    let s = t.sin();
    if s.abs() < cfg.floquet.near_spectrum_tol {
        return Err(HillError::SingularArc { t, dot: tr.delta_plus_dot().norm() });
    }
    let c = 1.0 / (2.0 * PI * s);
    let dm = tr.delta_minus();
    Ok([[tr.m[1] * c, -dm * c], [-dm * c, -tr.m[2] * c]])
}

/// `(H - z)⁻¹ g` on the grid of `g`, by quadrature of the Green's kernel.
///
/// The kernel separates as `Σ_{pq} Y_q(y₀) M_{qp} X_p(x₀) ρ₊^{j-n}` for `x ≥ y` with
/// `X = Y = (θ, φ)`, so one pass of running integrals per cell suffices.
pub fn resolvent_apply(v: &Potential, z: C64, g: &GridFunction, cfg: &Config) -> Result<GridFunction> {
    let p = g.points_per_cell;
    let h = g.h();
    let sys = CellSystem::new(fundamental_system(v, z, &cell_grid(p), cfg.floquet.tol)?);
    let s = select_branch(sys.delta_plus, None, cfg.floquet.branch_tie_tol);
    let is = I * s;
    let rho = sys.delta_plus + is;
    let gap = 1.0 - rho.norm();
    if gap < cfg.projection.resolvent_gap {
        return Err(HillError::NearSpectrum { re: z.re, im: z.im, gap });
    }
    // rows: y-component (θ, φ); columns: x-component
    let m = [[sys.phi_pi, -sys.delta_minus + is], [-sys.delta_minus - is, -sys.theta_prime_pi]];
    let pref = -1.0 / (2.0 * is);
    let cells: Vec<i64> = g.cell_range().collect();
    // running integrals L_q(i) = ∫_0^{x_i} Y_q g_n and totals per cell
    let running: Vec<[Vec<C64>; 2]> = cells
        .iter()
        .map(|&n| {
            let gn = g.cell_closed(n);
            let ft: Vec<C64> = gn.iter().zip(&sys.theta).map(|(a, b)| a * b).collect();
            let fp: Vec<C64> = gn.iter().zip(&sys.phi).map(|(a, b)| a * b).collect();
            [cumulative_uniform(&ft, h), cumulative_uniform(&fp, h)]
        })
        .collect();
    let totals: Vec<[C64; 2]> = running.iter().map(|r| [r[0][p], r[1][p]]).collect();
    let nc = cells.len();
    // left[j] = Σ_{n<j} ρ^{j-n} T^n, right[j] = Σ_{n>j} ρ^{n-j} T^n
    let mut left = vec![[ZERO; 2]; nc];
    for j in 1..nc {
        for q in 0..2 {
            left[j][q] = (left[j - 1][q] + totals[j - 1][q]) * rho;
        }
    }
    let mut right = vec![[ZERO; 2]; nc];
    for j in (0..nc.saturating_sub(1)).rev() {
        for q in 0..2 {
            right[j][q] = (right[j + 1][q] + totals[j + 1][q]) * rho;
        }
    }
    let mut out = vec![ZERO; g.len()];
    for j in 0..nc {
        for i in 0..p {
            let x = [sys.theta[i], sys.phi[i]];
            let lo = [left[j][0] + running[j][0][i], left[j][1] + running[j][1][i]];
            let hi = [right[j][0] + totals[j][0] - running[j][0][i], right[j][1] + totals[j][1] - running[j][1][i]];
            let mut acc = ZERO;
            for q in 0..2 {
                for pp in 0..2 {
                    // y ≤ x: Y_q(y) M_{q p} X_p(x); y ≥ x: X_q(x) M_{q p} Y_p(y)
                    acc += lo[q] * m[q][pp] * x[pp] + x[q] * m[q][pp] * hi[pp];
                }
            }
            out[j * p + i] = acc * pref;
        }
    }
    GridFunction::from_values(g.n_cells, p, out)
}

/// Quadrature grid on `[0, π]` fine enough for eigenfunctions up to band `k_max`.
fn fiber_grid(k_max: usize) -> (Vec<f64>, Vec<f64>) {
    period_gauss_grid(32 + 4 * k_max, 8)
}

struct FiberMode {
    e: C64,
    dot: C64,
    sys: CellSystem,
}

/// Simple eigenvalues `E_1(t), …, E_{k_max}(t)` with `θ`, `φ` on `grid`.
fn fiber_modes(v: &Potential, t: f64, k_max: usize, grid: &[f64], cfg: &Config) -> Result<Vec<FiberMode>> {
    if !(t > 0.0 && t < PI) {
        return Err(HillError::InvalidInput(format!("t = {t} must lie in (0, pi)")));
    }
    if k_max == 0 {
        return Err(HillError::InvalidInput("k_max must be at least 1".into()));
    }
    let eig = fiber_bands(v, t, k_max, cfg)?;
    if let Some(e) = eig.iter().find(|e| e.multiplicity > 1) {
        return Err(HillError::DegenerateFiber { t, reason: format!("E = {} has multiplicity {}", e.z, e.multiplicity) });
    }
    let list = expand_counted(&eig);
    for w in list.windows(2) {
        if (w[1] - w[0]).norm() < separation_tol(w[0], cfg) {
            return Err(HillError::DegenerateFiber { t, reason: format!("eigenvalues {} and {} are not separated", w[0], w[1]) });
        }
    }
    list.par_iter()
        .map(|&e| {
            let tr = transfer(v, e, cfg.floquet.tol)?;
            let dot = tr.delta_plus_dot();
            if dot.norm() < cfg.arcs.eps_sing * (1.0 + e.norm()) {
                return Err(HillError::DegenerateFiber { t, reason: format!("Delta' vanishes at E = {e}") });
            }
            Ok(FiberMode { e, dot, sys: CellSystem::new(fundamental_system(v, e, grid, cfg.floquet.tol)?) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberExpansion {
    pub t: f64,
    pub eigenvalues: Vec<C64>,
    /// Coefficients `(a_k, b_k)` of `θ(E_k, ·)` and `φ(E_k, ·)` in the reconstruction.
    pub coefficients: Vec<(C64, C64)>,
    /// Quadrature nodes on `[0, π]` and the reconstruction there.
    pub x_grid: Vec<f64>,
    pub reconstruction: Vec<C64>,
    /// `‖f - reconstruction‖ / ‖f‖`.
    pub residual: f64,
}

/// Eigenfunction expansion of `f` on `[0, π]` for the fiber at `t ∈ (0, π)`:
/// `f ≈ -(1/2) Σ_k (φ(E_k, π) / Δ₊•(E_k)) ψ₊(E_k, ·) ∫ ψ₋(E_k, y) f(y) dy`.
pub fn fiber_expansion(v: &Potential, t: f64, f: impl Fn(f64) -> C64 + Sync, k_max: usize, cfg: &Config) -> Result<FiberExpansion> {
    let (grid, w) = fiber_grid(k_max);
    let modes = fiber_modes(v, t, k_max, &grid, cfg)?;
    let fv: Vec<C64> = grid.iter().map(|x| f(*x)).collect();
    let s = t.sin();
    let coefficients: Vec<(C64, C64)> = modes
        .iter()
        .map(|md| {
            let sy = &md.sys;
            let it: C64 = sy.theta.iter().zip(&fv).zip(&w).map(|((a, b), c)| a * b * *c).sum();
            let ip: C64 = sy.phi.iter().zip(&fv).zip(&w).map(|((a, b), c)| a * b * *c).sum();
            let k = -0.5 / md.dot;
            let a = (sy.phi_pi * it + (-sy.delta_minus - I * s) * ip) * k;
            let b = ((-sy.delta_minus + I * s) * it - sy.theta_prime_pi * ip) * k;
            (a, b)
        })
        .collect();
    let reconstruction: Vec<C64> = (0..grid.len())
        .map(|j| modes.iter().zip(&coefficients).map(|(md, (a, b))| a * md.sys.theta[j] + b * md.sys.phi[j]).sum())
        .collect();
    let err: f64 = fv.iter().zip(&reconstruction).zip(&w).map(|((a, b), c)| (a - b).norm_sqr() * c).sum();
    let fnorm: f64 = fv.iter().zip(&w).map(|(a, c)| a.norm_sqr() * c).sum();
    Ok(FiberExpansion {
        t,
        eigenvalues: modes.iter().map(|m| m.e).collect(),
        coefficients,
        x_grid: grid,
        reconstruction,
        residual: (err / fnorm).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Biorthogonality {
    pub t: f64,
    pub eigenvalues: Vec<C64>,
    /// `|∫ v_k u_l + δ_kl 2 Δ₊•(E_k) φ(E_k, π)| / (‖v_k‖ ‖u_l‖)` with `u = φ(π)ψ₊`, `v = φ(π)ψ₋`.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
}

/// Biorthogonality residuals of the cleared Floquet eigenfunctions of the fiber at `t`.
pub fn biorthogonality(v: &Potential, t: f64, k_max: usize, cfg: &Config) -> Result<Biorthogonality> {
    let (grid, w) = fiber_grid(k_max);
    let modes = fiber_modes(v, t, k_max, &grid, cfg)?;
    let s = t.sin();
    let wave = |md: &FiberMode, sign: f64| -> Vec<C64> {
        let sy = &md.sys;
        let c = -sy.delta_minus + I * s * sign;
        sy.theta.iter().zip(&sy.phi).map(|(th, ph)| sy.phi_pi * th + c * ph).collect()
    };
    let us: Vec<Vec<C64>> = modes.iter().map(|m| wave(m, 1.0)).collect();
    let vs: Vec<Vec<C64>> = modes.iter().map(|m| wave(m, -1.0)).collect();
    let norm = |f: &[C64]| f.iter().zip(&w).map(|(a, c)| a.norm_sqr() * c).sum::<f64>().sqrt();
    let un: Vec<f64> = us.iter().map(|u| norm(u)).collect();
    let vn: Vec<f64> = vs.iter().map(|u| norm(u)).collect();
    let mut residuals = vec![vec![0.0; modes.len()]; modes.len()];
    let mut max_residual = 0.0f64;
    for k in 0..modes.len() {
        for l in 0..modes.len() {
            let ip: C64 = vs[k].iter().zip(&us[l]).zip(&w).map(|((a, b), c)| a * b * *c).sum();
            let target = if k == l { -2.0 * modes[k].dot * modes[k].sys.phi_pi } else { ZERO };
            let r = (ip - target).norm() / (vn[k] * un[l]);
            residuals[k][l] = r;
            max_residual = max_residual.max(r);
        }
    }
    Ok(Biorthogonality { t, eigenvalues: modes.iter().map(|m| m.e).collect(), residuals, max_residual })
}

/// Largest `(‖Θ‖² + ‖Φ‖²) / ‖c‖²` over `samples` random coefficient vectors, where
/// `Θ = Σ c_k θ(E_k(t), ·)` and `Φ = Σ c_k √(|E_k|+1) φ(E_k(t), ·)` over the first `k_max`
/// fiber eigenvalues.
pub fn synthesis_bound(v: &Potential, t: f64, k_max: usize, samples: usize, seed: u64, cfg: &Config) -> Result<f64> {
    let (grid, w) = fiber_grid(k_max);
    let eig = expand_counted(&fiber_bands(v, t, k_max, cfg)?);
    let systems = eig
        .par_iter()
        .map(|&e| Ok((e, CellSystem::new(fundamental_system(v, e, &grid, cfg.floquet.tol)?))))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples.max(1) {
        let c: Vec<C64> = (0..systems.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let cn: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        let mut total = 0.0;
        for j in 0..grid.len() {
            let mut th = ZERO;
            let mut ph = ZERO;
            for ((e, sy), ck) in systems.iter().zip(&c) {
                th += ck * sy.theta[j];
                ph += ck * (e.norm() + 1.0).sqrt() * sy.phi[j];
            }
            total += (th.norm_sqr() + ph.norm_sqr()) * w[j];
        }
        best = best.max(total / cn);
    }
    Ok(best)
}
