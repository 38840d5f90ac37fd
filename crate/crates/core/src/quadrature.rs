//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration of complex vector integrands.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;

use crate::error::{HillError, Result};
use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = T::lit(-z);
        x[n - 1 - i] = T::lit(z);
        w[i] = T::lit(wi);
        w[n - 1 - i] = T::lit(wi);
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels of `order` points.
pub fn composite_gauss<T: Real>(a: T, b: T, panels: usize, order: usize) -> (Vec<T>, Vec<T>) {
    let (gx, gw) = gauss_legendre::<T>(order);
    let width = (b - a) / T::lit(panels as f64);
    let half = width / T::lit(2.0);
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + width * T::lit(p as f64) + half;
        for (x, w) in gx.iter().zip(gw.iter()) {
            xs.push(mid + half * *x);
            ws.push(half * *w);
        }
    }
    (xs, ws)
}

/// Composite Gauss–Legendre nodes on `[0, π]` with both endpoints prepended/appended at zero
/// weight, the grid shape expected by the fundamental-system integrator.
pub fn period_gauss_grid(panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = composite_gauss(0.0, std::f64::consts::PI, panels, order);
    let mut xs = Vec::with_capacity(x.len() + 2);
    let mut ws = Vec::with_capacity(x.len() + 2);
    xs.push(0.0);
    ws.push(0.0);
    xs.extend(x);
    ws.extend(w);
    xs.push(std::f64::consts::PI);
    ws.push(0.0);
    (xs, ws)
}

/// Running integral `∫_{x₀}^{x_i} f` of uniform samples, fourth order.
///
/// Interior intervals use the cubic through the two neighbours on each side; the first and last
/// intervals use the one-sided cubic. Needs at least four samples.
pub fn cumulative_uniform(f: &[Complex<f64>], h: f64) -> Vec<Complex<f64>> {
    let n = f.len();
    assert!(n >= 4, "cumulative rule needs four samples");
    let c = h / 24.0;
    let mut out = Vec::with_capacity(n);
    let mut acc = Complex::new(0.0, 0.0);
    out.push(acc);
    for i in 0..n - 1 {
        let piece = if i == 0 {
            (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * c
        } else if i == n - 2 {
            (f[n - 1] * 9.0 + f[n - 2] * 19.0 - f[n - 3] * 5.0 + f[n - 4]) * c
        } else {
            ((f[i] + f[i + 1]) * 13.0 - f[i - 1] - f[i + 2]) * c
        };
        acc += piece;
        out.push(acc);
    }
    out
}

/// Weights of the rule behind [`cumulative_uniform`] for the whole interval.
pub fn uniform_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4, "cumulative rule needs four samples");
    let c = h / 24.0;
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        if i == 0 {
            for (k, a) in [9.0, 19.0, -5.0, 1.0].into_iter().enumerate() {
                w[k] += a * c;
            }
        } else if i == n - 2 {
            for (k, a) in [9.0, 19.0, -5.0, 1.0].into_iter().enumerate() {
                w[n - 1 - k] += a * c;
            }
        } else {
            w[i - 1] -= c;
            w[i] += 13.0 * c;
            w[i + 1] += 13.0 * c;
            w[i + 2] -= c;
        }
    }
    w
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct GkOptions<T> {
    pub epsabs: T,
    pub epsrel: T,
    pub max_intervals: usize,
}

#[derive(Debug, Clone)]
pub struct GkResult<T: Real, const M: usize> {
    pub value: [Complex<T>; M],
    pub error: T,
    pub intervals: usize,
    /// False when `max_intervals` was exhausted before the tolerance was met.
    pub converged: bool,
}

struct Piece<T: Real, const M: usize> {
    a: T,
    b: T,
    value: [Complex<T>; M],
    error: T,
}

impl<T: Real, const M: usize> PartialEq for Piece<T, M> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T: Real, const M: usize> Eq for Piece<T, M> {}
impl<T: Real, const M: usize> PartialOrd for Piece<T, M> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real, const M: usize> Ord for Piece<T, M> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

fn vnorm<T: Real, const M: usize>(v: &[Complex<T>; M]) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(c.norm()))
}

fn gk15<T, F, const M: usize>(f: &mut F, a: T, b: T) -> Result<([Complex<T>; M], T)>
where
    T: Real,
    F: FnMut(T) -> Result<[Complex<T>; M]>,
{
    let zero = Complex::new(T::zero(), T::zero());
    let half = (b - a) / T::lit(2.0);
    let mid = a + half;
    let mut k = [zero; M];
    let mut g = [zero; M];
    let fc = f(mid)?;
    for i in 0..M {
        k[i] = fc[i] * T::lit(WGK[7]);
        g[i] = fc[i] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(mid - dx)?;
        let f2 = f(mid + dx)?;
        for i in 0..M {
            let s = f1[i] + f2[i];
            k[i] = k[i] + s * T::lit(WGK[j]);
            if j % 2 == 1 {
                g[i] = g[i] + s * T::lit(WG[j / 2]);
            }
        }
    }
    let mut diff = [zero; M];
    for i in 0..M {
        k[i] = k[i] * half;
        g[i] = g[i] * half;
        diff[i] = k[i] - g[i];
    }
    if k.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(HillError::Nonconvergence("non-finite integrand".into()));
    }
    Ok((k, vnorm(&diff)))
}

/// Globally adaptive 15-point Kronrod integration of `f` over `[a, b]`.
pub fn gauss_kronrod<T, F, const M: usize>(
    mut f: F,
    a: T,
    b: T,
    opts: &GkOptions<T>,
) -> Result<GkResult<T, M>>
where
    T: Real,
    F: FnMut(T) -> Result<[Complex<T>; M]>,
{
    let (v, e) = gk15(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    let mut total = v;
    let mut err = e;
    heap.push(Piece { a, b, value: v, error: e });
    let mut intervals = 1;
    loop {
        let tol = opts.epsabs.max(opts.epsrel * vnorm(&total));
        if err <= tol {
            return Ok(GkResult { value: total, error: err, intervals, converged: true });
        }
        if intervals >= opts.max_intervals {
            return Ok(GkResult { value: total, error: err, intervals, converged: false });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = worst.a + (worst.b - worst.a) / T::lit(2.0);
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        for i in 0..M {
            total[i] = total[i] - worst.value[i] + v1[i] + v2[i];
        }
        err = err - worst.error + e1 + e2;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        intervals += 1;
        // guard against drift in the running error sum
        if intervals % 64 == 0 {
            err = heap.iter().fold(T::zero(), |s, p| s + p.error);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_rule_is_exact_on_cubics() {
        let h = 0.1;
        let f: Vec<Complex<f64>> = (0..11).map(|i| {
            let x = i as f64 * h;
            Complex::new(x * x * x - 2.0 * x, x * x)
        }).collect();
        let c = cumulative_uniform(&f, h);
        for (i, ci) in c.iter().enumerate() {
            let x = i as f64 * h;
            let exact = Complex::new(x.powi(4) / 4.0 - x * x, x.powi(3) / 3.0);
            assert!((ci - exact).norm() < 1e-13);
        }
        let w = uniform_weights(11, h);
        let total: Complex<f64> = f.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((total - c[10]).norm() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre::<f64>(n);
            let sw: f64 = w.iter().sum();
            assert!((sw - 2.0).abs() < 1e-13);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
            assert!(x.windows(2).all(|s| s[0] < s[1]));
        }
    }

    #[test]
    fn composite_rule_on_interval() {
        let (x, w) = composite_gauss::<f64>(0.0, std::f64::consts::PI, 8, 8);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((q - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let opts = GkOptions { epsabs: 1e-12, epsrel: 1e-12, max_intervals: 500 };
        let r = gauss_kronrod(
            |x: f64| Ok([Complex::new(1.0 / (1e-4 + x * x), 0.0), Complex::new(0.0, x)]),
            -1.0,
            1.0,
            &opts,
        )
        .unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(r.converged);
        assert!((r.value[0].re - exact).abs() < 1e-9 * exact);
        assert!(r.value[1].norm() < 1e-14);
    }
}
