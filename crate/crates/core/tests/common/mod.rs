//! Independent reference computations shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;

/// Eigenvalues of the fiber operator at `t` from the truncated matrix in the basis
/// `e^{i(2n + t/π)x}`, `|n| <= half`, sorted by real part.
pub fn hill_fiber_eigenvalues(coeffs: &BTreeMap<i64, C64>, t: f64, half: i64) -> Vec<C64> {
    let s = t / PI;
    let idx: Vec<i64> = (-half..=half).collect();
    let n = idx.len();
    let hermitian = coeffs.iter().all(|(k, c)| {
        let d = coeffs.get(&-k).copied().unwrap_or_default();
        (c.conj() - d).norm() < 1e-15
    });
    let entry = |i: usize, j: usize| -> C64 {
        let diag = if i == j { C64::new((2.0 * idx[i] as f64 + s).powi(2), 0.0) } else { C64::new(0.0, 0.0) };
        diag + coeffs.get(&(idx[i] - idx[j])).copied().unwrap_or_default()
    };
    let mut out: Vec<C64> = if hermitian {
        let m = DMatrix::<C64>::from_fn(n, n, entry);
        let e = m.symmetric_eigenvalues();
        e.iter().map(|x| C64::new(*x, 0.0)).collect()
    } else {
        let m = DMatrix::<C64>::from_fn(n, n, entry);
        let schur = nalgebra::linalg::Schur::new(m);
        let (_, tmat) = schur.unpack();
        (0..n).map(|i| tmat[(i, i)]).collect()
    };
    out.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    out
}

/// Dirichlet eigenvalues on `[0, π]` from the sine basis `sin(kx)`, `k = 1..=modes`.
pub fn hill_dirichlet_eigenvalues(coeffs: &BTreeMap<i64, C64>, modes: usize) -> Vec<C64> {
    // (2/π) ∫ e^{2inx} sin(jx) sin(kx) dx, by a 64-panel 8-point Gauss rule
    let (gx, gw) = gauss8();
    let panels = 256;
    let h = PI / panels as f64;
    let mut nodes = Vec::new();
    for p in 0..panels {
        for (x, w) in gx.iter().zip(gw.iter()) {
            nodes.push((h * (p as f64 + 0.5 + 0.5 * x), 0.5 * h * w));
        }
    }
    let v = |x: f64| -> C64 { coeffs.iter().map(|(n, c)| c * C64::from_polar(1.0, 2.0 * *n as f64 * x)).sum() };
    let vals: Vec<(f64, f64, C64)> = nodes.iter().map(|(x, w)| (*x, *w, v(*x))).collect();
    let m = DMatrix::<C64>::from_fn(modes, modes, |i, j| {
        let (ji, jj) = ((i + 1) as f64, (j + 1) as f64);
        let mut s = C64::new(0.0, 0.0);
        for (x, w, vx) in &vals {
            s += vx * (ji * x).sin() * (jj * x).sin() * *w;
        }
        s * (2.0 / PI) + if i == j { C64::new(ji * ji, 0.0) } else { C64::new(0.0, 0.0) }
    });
    let schur = nalgebra::linalg::Schur::new(m);
    let (_, tmat) = schur.unpack();
    let mut out: Vec<C64> = (0..modes).map(|i| tmat[(i, i)]).collect();
    out.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    out
}

fn gauss8() -> ([f64; 8], [f64; 8]) {
    (
        [
            -0.9602898564975363,
            -0.7966664774136267,
            -0.5255324099163290,
            -0.1834346424956498,
            0.1834346424956498,
            0.5255324099163290,
            0.7966664774136267,
            0.9602898564975363,
        ],
        [
            0.1012285362903763,
            0.2223810344533745,
            0.3137066458778873,
            0.3626837833783620,
            0.3626837833783620,
            0.3137066458778873,
            0.2223810344533745,
            0.1012285362903763,
        ],
    )
}

/// Deterministic xorshift stream in `[0, 1)`.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_f64(&mut self) -> f64 {
        let mut s = self.0;
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        self.0 = s;
        (s >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform point in the disk `|z| <= r`.
    pub fn in_disk(&mut self, r: f64) -> C64 {
        C64::from_polar(r * self.next_f64().sqrt(), 2.0 * PI * self.next_f64())
    }
}

/// `[θ(π), φ(π), θ'(π), φ'(π)]` by classical fixed-step RK4 on the Fourier series of `V`.
pub fn rk4_monodromy(coeffs: &BTreeMap<i64, C64>, z: C64, steps: usize) -> [C64; 4] {
    let v = |x: f64| -> C64 { coeffs.iter().map(|(n, c)| c * C64::from_polar(1.0, 2.0 * *n as f64 * x)).sum() };
    let f = |x: f64, y: [C64; 4]| -> [C64; 4] {
        let q = v(x) - z;
        [y[1], q * y[0], y[3], q * y[2]]
    };
    let h = PI / steps as f64;
    let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let add = |a: [C64; 4], b: [C64; 4], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s, a[3] + b[3] * s];
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(x + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(x + h, add(y, k3, h));
        for j in 0..4 {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
    }
    // state is (θ, θ', φ, φ')
    [y[0], y[2], y[1], y[3]]
}

/// Applies the Fourier multiplier `m(ξ)` to samples `values` at `xs` (spacing `h`), keeping
/// frequencies `|ξ| < xi_max`: `(1/2π) ∫ m(ξ) ĝ(ξ) e^{iξx} dξ` with `ĝ` the Riemann sum.
pub fn fourier_multiplier(xs: &[f64], values: &[C64], h: f64, xi_max: f64, m: impl Fn(f64) -> C64) -> Vec<C64> {
    let (gx, gw) = gauss8();
    let panels = (16.0 * xi_max).ceil() as usize;
    let step = 2.0 * xi_max / panels as f64;
    let mut nodes = Vec::new();
    for p in 0..panels {
        for (x, w) in gx.iter().zip(gw.iter()) {
            nodes.push((-xi_max + step * (p as f64 + 0.5 + 0.5 * x), 0.5 * step * w));
        }
    }
    let hat: Vec<C64> = nodes
        .iter()
        .map(|&(xi, w)| {
            let g: C64 = xs.iter().zip(values).map(|(x, v)| v * C64::from_polar(h, -xi * x)).sum();
            g * m(xi) * w
        })
        .collect();
    xs.iter()
        .map(|&x| nodes.iter().zip(&hat).map(|((xi, _), c)| c * C64::from_polar(1.0, xi * x)).sum::<C64>() / (2.0 * PI))
        .collect()
}
