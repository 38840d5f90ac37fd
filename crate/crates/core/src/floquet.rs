//! Fundamental system, monodromy matrix, discriminants, Floquet solutions and the Green's
//! function of `-y'' + V y = z y`.

use num_complex::Complex;
use serde::Serialize;

use crate::config::FloquetConfig;
use crate::error::{HillError, Result};
use crate::ode::{integrate, OdeOptions, OdeSystem};
use crate::potential::Potential;
use crate::scalar::{to_c64, Real};

type C<T> = Complex<T>;

/// State `[θ, θ', φ, φ', ∂zθ, ∂zθ', ∂zφ, ∂zφ']`.
struct Variational<'a, T: Real> {
    v: &'a Potential<T>,
    z: C<T>,
}

impl<T: Real> OdeSystem<T, 8> for Variational<'_, T> {
    #[inline]
    fn rhs(&self, x: T, y: &[C<T>; 8], dy: &mut [C<T>; 8]) {
        let q = self.v.evaluate(x) - self.z;
        dy[0] = y[1];
        dy[1] = q * y[0];
        dy[2] = y[3];
        dy[3] = q * y[2];
        dy[4] = y[5];
        dy[5] = q * y[4] - y[0];
        dy[6] = y[7];
        dy[7] = q * y[6] - y[2];
    }
}

/// The variational state extended by the second `z`-derivatives `[∂²θ, ∂²θ', ∂²φ, ∂²φ']`.
struct Second<'a, T: Real>(Variational<'a, T>);

impl<T: Real> OdeSystem<T, 12> for Second<'_, T> {
    #[inline]
    fn rhs(&self, x: T, y: &[C<T>; 12], dy: &mut [C<T>; 12]) {
        let q = self.0.v.evaluate(x) - self.0.z;
        let two = T::lit(2.0);
        dy[0] = y[1];
        dy[1] = q * y[0];
        dy[2] = y[3];
        dy[3] = q * y[2];
        dy[4] = y[5];
        dy[5] = q * y[4] - y[0];
        dy[6] = y[7];
        dy[7] = q * y[6] - y[2];
        dy[8] = y[9];
        dy[9] = q * y[8] - y[4] * two;
        dy[10] = y[11];
        dy[11] = q * y[10] - y[6] * two;
    }
}

/// The variational state extended by `∫θ², ∫θφ, ∫φ²`.
struct WithGram<'a, T: Real>(Variational<'a, T>);

impl<T: Real> OdeSystem<T, 11> for WithGram<'_, T> {
    #[inline]
    fn rhs(&self, x: T, y: &[C<T>; 11], dy: &mut [C<T>; 11]) {
        let q = self.0.v.evaluate(x) - self.0.z;
        dy[0] = y[1];
        dy[1] = q * y[0];
        dy[2] = y[3];
        dy[3] = q * y[2];
        dy[4] = y[5];
        dy[5] = q * y[4] - y[0];
        dy[6] = y[7];
        dy[7] = q * y[6] - y[2];
        dy[8] = y[0] * y[0];
        dy[9] = y[0] * y[2];
        dy[10] = y[2] * y[2];
    }
}

fn initial_state<T: Real>() -> [C<T>; 8] {
    let o = C::new(T::zero(), T::zero());
    let l = C::new(T::one(), T::zero());
    [l, o, o, l, o, o, o, o]
}

/// Values of the fundamental system and its `z`-derivatives on a grid in `[0, π]`.
#[derive(Debug, Clone)]
pub struct FundamentalData<T: Real = f64> {
    pub z: C<T>,
    pub x_grid: Vec<T>,
    pub theta: Vec<C<T>>,
    pub phi: Vec<C<T>>,
    pub theta_prime: Vec<C<T>>,
    pub phi_prime: Vec<C<T>>,
    pub dtheta_dz: Vec<C<T>>,
    pub dphi_dz: Vec<C<T>>,
    pub dtheta_prime_dz: Vec<C<T>>,
    pub dphi_prime_dz: Vec<C<T>>,
}

impl<T: Real> FundamentalData<T> {
    /// `θφ' - θ'φ` at every grid point.
    pub fn wronskian(&self) -> Vec<C<T>> {
        (0..self.x_grid.len())
            .map(|i| self.theta[i] * self.phi_prime[i] - self.theta_prime[i] * self.phi[i])
            .collect()
    }
}

/// Integrates the fundamental system and its variational system on `x_grid`.
///
/// The grid must be increasing, lie in `[0, π]`, and contain both `0` and `π` (up to rounding).
pub fn fundamental_system<T: Real>(
    v: &Potential<T>,
    z: C<T>,
    x_grid: &[T],
    tol: T,
) -> Result<FundamentalData<T>> {
    let pi = T::PI();
    let slack = T::lit(64.0) * T::eps() * pi;
    if x_grid.len() < 2
        || x_grid[0].abs() > slack
        || (x_grid[x_grid.len() - 1] - pi).abs() > slack
        || x_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(HillError::InvalidInput(
            "x grid must be increasing and run from 0 to pi".into(),
        ));
    }
    let n = x_grid.len();
    let zero = C::new(T::zero(), T::zero());
    let mut out = FundamentalData {
        z,
        x_grid: x_grid.to_vec(),
        theta: vec![zero; n],
        phi: vec![zero; n],
        theta_prime: vec![zero; n],
        phi_prime: vec![zero; n],
        dtheta_dz: vec![zero; n],
        dphi_dz: vec![zero; n],
        dtheta_prime_dz: vec![zero; n],
        dphi_prime_dz: vec![zero; n],
    };
    let y0 = initial_state::<T>();
    let store = |o: &mut FundamentalData<T>, i: usize, y: &[C<T>; 8]| {
        o.theta[i] = y[0];
        o.theta_prime[i] = y[1];
        o.phi[i] = y[2];
        o.phi_prime[i] = y[3];
        o.dtheta_dz[i] = y[4];
        o.dtheta_prime_dz[i] = y[5];
        o.dphi_dz[i] = y[6];
        o.dphi_prime_dz[i] = y[7];
    };
    store(&mut out, 0, &y0);
    let sys = Variational { v, z };
    let stops = &x_grid[1..];
    let mut rows: Vec<[C<T>; 8]> = Vec::with_capacity(n - 1);
    integrate(&sys, T::zero(), y0, stops, &OdeOptions::with_tol(tol), |_, y| rows.push(*y))?;
    for (i, y) in rows.iter().enumerate() {
        store(&mut out, i + 1, y);
    }
    Ok(out)
}

/// Monodromy matrix entries and their `z`-derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Transfer<T: Real = f64> {
    pub z: C<T>,
    /// `[θ(π), φ(π), θ'(π), φ'(π)]`
    pub m: [C<T>; 4],
    /// `∂z` of `m`.
    pub dm: [C<T>; 4],
}

impl<T: Real> Transfer<T> {
    pub fn delta_plus(&self) -> C<T> {
        (self.m[0] + self.m[3]) * T::lit(0.5)
    }

    pub fn delta_minus(&self) -> C<T> {
        (self.m[0] - self.m[3]) * T::lit(0.5)
    }

    pub fn delta_plus_dot(&self) -> C<T> {
        (self.dm[0] + self.dm[3]) * T::lit(0.5)
    }

    pub fn det(&self) -> C<T> {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }
}

/// `M(z)` and `∂z M(z)` from one integration over `[0, π]`.
pub fn transfer<T: Real>(v: &Potential<T>, z: C<T>, tol: T) -> Result<Transfer<T>> {
    let sys = Variational { v, z };
    let (y, _) = integrate(&sys, T::zero(), initial_state(), &[T::PI()], &OdeOptions::with_tol(tol), |_, _| {})?;
    Ok(Transfer { z, m: [y[0], y[2], y[1], y[3]], dm: [y[4], y[6], y[5], y[7]] })
}

/// Per-`z` monodromy bundle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonodromyData<T: Real = f64> {
    pub z: C<T>,
    pub m11: C<T>,
    pub m12: C<T>,
    pub m21: C<T>,
    pub m22: C<T>,
    pub delta_plus: C<T>,
    pub delta_minus: C<T>,
    pub delta_plus_dot: C<T>,
    pub delta_plus_ddot: C<T>,
    /// Selected branch of `√(1 - Δ₊²)`; `ρ± = Δ₊ ± i s`.
    pub sqrt_disc: C<T>,
    pub rho_plus: C<T>,
    pub rho_minus: C<T>,
    /// `None` at Dirichlet points.
    pub m_plus: Option<C<T>>,
    pub m_minus: Option<C<T>>,
}

impl<T: Real> MonodromyData<T> {
    /// `φ(z, π)`
    pub fn phi_pi(&self) -> C<T> {
        self.m12
    }

    /// `θ'(z, π)`
    pub fn theta_prime_pi(&self) -> C<T> {
        self.m21
    }
}

/// Chooses `s = ±√(1 - Δ₊²)` so that `|Δ₊ + i s| ≤ 1`. When both signs give modulus one to
/// within `tie_tol`, the sign closer to `hint` wins, and without a hint the principal root is kept.
pub fn select_branch<T: Real>(delta_plus: C<T>, hint: Option<C<T>>, tie_tol: T) -> C<T> {
    let one = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let s0 = (one - delta_plus * delta_plus).sqrt();
    let r_plus = (delta_plus + i * s0).norm();
    let r_minus = (delta_plus - i * s0).norm();
    if (r_plus - r_minus).abs() <= tie_tol * (T::one() + r_plus.max(r_minus)) {
        return match hint {
            Some(h) if (h + s0).norm() < (h - s0).norm() => -s0,
            _ => s0,
        };
    }
    if r_plus <= r_minus {
        s0
    } else {
        -s0
    }
}

/// `M(z)`, `∂z M(z)` and `Δ₊••(z)` from one integration of the second variational system.
pub fn transfer_second<T: Real>(v: &Potential<T>, z: C<T>, tol: T) -> Result<(Transfer<T>, C<T>)> {
    let sys = Second(Variational { v, z });
    let b = initial_state::<T>();
    let o = C::new(T::zero(), T::zero());
    let y0 = [b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], o, o, o, o];
    let (y, _) = integrate(&sys, T::zero(), y0, &[T::PI()], &OdeOptions::with_tol(tol), |_, _| {})?;
    let tr = Transfer { z, m: [y[0], y[2], y[1], y[3]], dm: [y[4], y[6], y[5], y[7]] };
    Ok((tr, (y[8] + y[11]) * T::lit(0.5)))
}

/// `Δ₊••` from the second variational system.
pub fn delta_plus_ddot<T: Real>(v: &Potential<T>, z: C<T>, tol: T) -> Result<C<T>> {
    Ok(transfer_second(v, z, tol)?.1)
}

/// `Δ₊••` by a four-direction central difference of the analytic function `Δ₊•`; an
/// independent check on [`delta_plus_ddot`].
pub fn delta_plus_ddot_difference<T: Real>(v: &Potential<T>, z: C<T>, tol: T) -> Result<C<T>> {
    let h = T::eps().powf(T::lit(0.2)) * (T::one() + z.norm().sqrt());
    let d = |w: C<T>| -> Result<C<T>> { Ok(transfer(v, w, tol)?.delta_plus_dot()) };
    let hr = C::new(h, T::zero());
    let hi = C::new(T::zero(), h);
    let i = C::new(T::zero(), T::one());
    let num = d(z + hr)? - d(z - hr)? - i * (d(z + hi)? - d(z - hi)?);
    Ok(num / (h * T::lit(4.0)))
}

impl<T: Real> MonodromyData<T> {
    pub fn from_transfer(tr: &Transfer<T>, ddot: C<T>, hint: Option<C<T>>, cfg: &FloquetConfig) -> Self {
        let i = C::new(T::zero(), T::one());
        let dp = tr.delta_plus();
        let dm = tr.delta_minus();
        let s = select_branch(dp, hint, T::lit(cfg.branch_tie_tol));
        let phi = tr.m[1];
        let (m_plus, m_minus) = if phi.norm() < T::lit(cfg.dirichlet_tol) {
            (None, None)
        } else {
            (Some((-dm + i * s) / phi), Some((-dm - i * s) / phi))
        };
        MonodromyData {
            z: tr.z,
            m11: tr.m[0],
            m12: tr.m[1],
            m21: tr.m[2],
            m22: tr.m[3],
            delta_plus: dp,
            delta_minus: dm,
            delta_plus_dot: tr.delta_plus_dot(),
            delta_plus_ddot: ddot,
            sqrt_disc: s,
            // the small multiplier is formed as a reciprocal; `Δ₊ + is` cancels when |ρ₋| is large
            rho_plus: (dp - i * s).inv(),
            rho_minus: dp - i * s,
            m_plus,
            m_minus,
        }
    }
}

/// Full monodromy bundle at `z`.
pub fn monodromy<T: Real>(v: &Potential<T>, z: C<T>, cfg: &FloquetConfig) -> Result<MonodromyData<T>> {
    monodromy_with_hint(v, z, None, cfg)
}

/// As [`monodromy`], resolving branch ties with the continuity hint for `√(1 - Δ₊²)`.
pub fn monodromy_with_hint<T: Real>(
    v: &Potential<T>,
    z: C<T>,
    hint: Option<C<T>>,
    cfg: &FloquetConfig,
) -> Result<MonodromyData<T>> {
    let (tr, ddot) = transfer_second(v, z, T::lit(cfg.tol))?;
    Ok(MonodromyData::from_transfer(&tr, ddot, hint, cfg))
}

/// `Δ₊•(z) = -(φ(π)/2) ∫ψ₊ψ₋`, evaluated in the form cleared of `φ(π)`:
/// `-(1/2) ∫ [φ(π) θ² - 2Δ₋ θφ - θ'(π) φ²]`.
///
/// The three terms are of size `|M|²` and cancel down to `Δ₊•`, so away from the real axis
/// this loses roughly `π |Im √z| / ln 10` digits against the variational value.
pub fn delta_dot_lagrange<T: Real>(v: &Potential<T>, z: C<T>, cfg: &FloquetConfig) -> Result<C<T>> {
    let sys = WithGram(Variational { v, z });
    let o = C::new(T::zero(), T::zero());
    let b = initial_state::<T>();
    let y0 = [b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], o, o, o];
    let (y, _) = integrate(&sys, T::zero(), y0, &[T::PI()], &OdeOptions::with_tol(T::lit(cfg.tol)), |_, _| {})?;
    let (theta, theta_p, phi, phi_p) = (y[0], y[1], y[2], y[3]);
    if phi.norm() < T::lit(cfg.dirichlet_tol) {
        let zz = to_c64(z);
        return Err(HillError::DirichletPoint { re: zz.re, im: zz.im, phi: phi.norm().as_f64() });
    }
    let dm = (theta - phi_p) * T::lit(0.5);
    let integral = phi * y[8] - dm * y[9] * T::lit(2.0) - theta_p * y[10];
    Ok(-integral * T::lit(0.5))
}

/// Floquet solutions on a grid together with their coefficients.
#[derive(Debug, Clone)]
pub struct FloquetSolutions<T: Real = f64> {
    pub x_grid: Vec<T>,
    pub psi_plus: Vec<C<T>>,
    pub psi_minus: Vec<C<T>>,
    pub m_plus: C<T>,
    pub m_minus: C<T>,
    pub monodromy: MonodromyData<T>,
}

/// `ψ± = θ + m± φ` on `x_grid` (increasing, from `0` to `π`).
pub fn floquet_solutions<T: Real>(
    v: &Potential<T>,
    z: C<T>,
    x_grid: &[T],
    cfg: &FloquetConfig,
) -> Result<FloquetSolutions<T>> {
    let fd = fundamental_system(v, z, x_grid, T::lit(cfg.tol))?;
    let n = x_grid.len() - 1;
    let tr = Transfer {
        z,
        m: [fd.theta[n], fd.phi[n], fd.theta_prime[n], fd.phi_prime[n]],
        dm: [fd.dtheta_dz[n], fd.dphi_dz[n], fd.dtheta_prime_dz[n], fd.dphi_prime_dz[n]],
    };
    let ddot = delta_plus_ddot(v, z, T::lit(cfg.tol))?;
    let md = MonodromyData::from_transfer(&tr, ddot, None, cfg);
    let (Some(mp), Some(mm)) = (md.m_plus, md.m_minus) else {
        let zz = to_c64(z);
        return Err(HillError::DirichletPoint { re: zz.re, im: zz.im, phi: md.m12.norm().as_f64() });
    };
    let psi_plus = fd.theta.iter().zip(&fd.phi).map(|(t, p)| *t + mp * *p).collect();
    let psi_minus = fd.theta.iter().zip(&fd.phi).map(|(t, p)| *t + mm * *p).collect();
    Ok(FloquetSolutions { x_grid: x_grid.to_vec(), psi_plus, psi_minus, m_plus: mp, m_minus: mm, monodromy: md })
}

/// Splits `x` into `(x₀, n)` with `x = x₀ + nπ`, `x₀ ∈ [0, π)`.
pub fn reduce_cell<T: Real>(x: T) -> (T, i64) {
    let pi = T::PI();
    let n = (x / pi).floor();
    let mut x0 = x - n * pi;
    let mut k = n.to_i64().unwrap_or(0);
    if x0 >= pi {
        x0 = x0 - pi;
        k += 1;
    }
    if x0 < T::zero() {
        x0 = T::zero();
    }
    (x0, k)
}

/// Green's function `G(z, x, y)` of `H - z` on the line.
///
/// Uses the cleared product `φ(π) ψ₋(a) ψ₊(b)`, which stays finite at Dirichlet points, and
/// quasi-periodicity to reduce both arguments to `[0, π)`.
pub fn greens_function<T: Real>(v: &Potential<T>, z: C<T>, x: T, y: T, cfg: &FloquetConfig) -> Result<C<T>> {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let (a, na) = reduce_cell(lo);
    let (b, nb) = reduce_cell(hi);
    let mut grid = vec![T::zero(), a, b, T::PI()];
    grid.sort_by(|p, q| p.partial_cmp(q).expect("finite abscissae"));
    grid.dedup();
    let fd = fundamental_system(v, z, &grid, T::lit(cfg.tol))?;
    let at = |p: T| grid.iter().position(|g| *g == p).expect("point on grid");
    let (ia, ib, ip) = (at(a), at(b), grid.len() - 1);
    let theta_pi = fd.theta[ip];
    let phi_pi = fd.phi[ip];
    let theta_p_pi = fd.theta_prime[ip];
    let phi_p_pi = fd.phi_prime[ip];
    let dp = (theta_pi + phi_p_pi) * T::lit(0.5);
    let dm = (theta_pi - phi_p_pi) * T::lit(0.5);
    let s = select_branch(dp, None, T::lit(cfg.branch_tie_tol));
    if s.norm() < T::lit(cfg.near_spectrum_tol) {
        let zz = to_c64(z);
        return Err(HillError::NearSpectrum { re: zz.re, im: zz.im, gap: s.norm().as_f64() });
    }
    let i = C::new(T::zero(), T::one());
    let cleared = cleared_kernel(
        [phi_pi, dm, theta_p_pi, s],
        (fd.theta[ia], fd.phi[ia]),
        (fd.theta[ib], fd.phi[ib]),
    );
    let rho_plus = (dp - i * s).inv();
    let g = -cleared / (i * s * T::lit(2.0));
    Ok(g * rho_plus.powi((nb - na) as i32))
}

/// `φ(π) ψ₋(a) ψ₊(b)` written without dividing by `φ(π)`.
///
/// `data = [φ(π), Δ₋, θ'(π), s]`, `left = (θ(a), φ(a))`, `right = (θ(b), φ(b))`.
#[inline]
pub fn cleared_kernel<T: Real>(data: [C<T>; 4], left: (C<T>, C<T>), right: (C<T>, C<T>)) -> C<T> {
    let [phi_pi, dm, theta_p_pi, s] = data;
    let i = C::new(T::zero(), T::one());
    let (ta, pa) = left;
    let (tb, pb) = right;
    phi_pi * ta * tb + (-dm + i * s) * ta * pb + (-dm - i * s) * pa * tb - theta_p_pi * pa * pb
}
