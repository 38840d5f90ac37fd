//! Zeros of analytic functions in rectangles by the argument principle.
//!
//! Boundary integrals of `f'/f · (1, w, w²)` with `w = (z - c)/R` give the root count and
//! the first two power sums. Cells with more than two roots are bisected; cells with one or two
//! well-separated roots are finished by Newton; unresolved clusters are reported at their
//! centroid with their multiplicity.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::config::SpectraConfig;
use crate::error::{HillError, Result};
use crate::quadrature::{gauss_kronrod, GkOptions};

type C64 = Complex<f64>;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Rect { re_min, re_max, im_min, im_max }
    }

    pub fn center(&self) -> C64 {
        C64::new((self.re_min + self.re_max) / 2.0, (self.im_min + self.im_max) / 2.0)
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }

    /// Grows every side by `frac` of the corresponding width.
    pub fn inflate(&self, frac: f64) -> Rect {
        let dw = frac * (self.re_max - self.re_min);
        let dh = frac * (self.im_max - self.im_min);
        Rect::new(self.re_min - dw, self.re_max + dw, self.im_min - dh, self.im_max + dh)
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    fn split(&self, frac: f64) -> (Rect, Rect) {
        let w = self.re_max - self.re_min;
        let h = self.im_max - self.im_min;
        if w >= h {
            let m = self.re_min + frac * w;
            (Rect::new(self.re_min, m, self.im_min, self.im_max), Rect::new(m, self.re_max, self.im_min, self.im_max))
        } else {
            let m = self.im_min + frac * h;
            (Rect::new(self.re_min, self.re_max, self.im_min, m), Rect::new(self.re_min, self.re_max, m, self.im_max))
        }
    }
}

/// A root and the number of zeros it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub z: C64,
    pub multiplicity: usize,
}

/// Count and scaled power sums of the zeros inside a rectangle.
#[derive(Debug, Clone, Copy)]
struct Moments {
    count: usize,
    /// `Σ w_j`, `w = (z - c)/R`
    m1: C64,
    /// `Σ w_j²`
    m2: C64,
    center: C64,
    radius: f64,
}

impl Moments {
    fn sum(&self) -> C64 {
        self.center * self.count as f64 + self.m1 * self.radius
    }
}

/// Irrational offsets keep split lines away from symmetric root positions.
const SPLIT_FRACTIONS: [f64; 6] = [0.5618034, 0.4174243, 0.6180340, 0.3819660, 0.5413812, 0.4472136];

pub struct RootFinder<'a, F> {
    f: &'a F,
    cfg: SpectraConfig,
}

impl<'a, F> RootFinder<'a, F>
where
    F: Fn(C64) -> Result<(C64, C64)> + Sync,
{
    pub fn new(f: &'a F, cfg: &SpectraConfig) -> Self {
        RootFinder { f, cfg: *cfg }
    }

    fn sep_tol(&self, z: C64) -> f64 {
        self.cfg.sep_rel * (1.0 + z.norm()).sqrt()
    }

    /// Boundary integrals over `rect`, or `None` when the winding number is ill-conditioned.
    fn moments(&self, rect: &Rect) -> Result<Option<Moments>> {
        let c = rect.center();
        let r = rect.half_diagonal();
        let corners = rect.corners();
        // cells near the clustering scale sit at the evaluation noise floor, where refinement
        // cannot converge; cap the work there
        let max_intervals = if r < 1e3 * self.sep_tol(c) { 40 } else { 200 };
        let opts = GkOptions { epsabs: self.cfg.contour_rel, epsrel: self.cfg.contour_rel, max_intervals };
        let edge = |k: usize| -> Result<Option<[C64; 3]>> {
            let a = corners[k];
            let b = corners[(k + 1) % 4];
            let d = b - a;
            let res = gauss_kronrod(
                |s: f64| {
                    let z = a + d * s;
                    let (fz, dfz) = (self.f)(z)?;
                    if fz.norm() == 0.0 {
                        return Err(HillError::BoundaryRoot { attempts: 0 });
                    }
                    let g = dfz / fz * d;
                    let w = (z - c) / r;
                    Ok([g, g * w, g * w * w])
                },
                0.0,
                1.0,
                &opts,
            );
            match res {
                // the integrator's noise floor can stall refinement on tiny cells; the count
                // only needs the error well below one half
                Ok(r) if r.converged || r.error < 5e-3 => Ok(Some(r.value)),
                Ok(_) => Ok(None),
                Err(HillError::BoundaryRoot { .. }) | Err(HillError::Nonconvergence(_)) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let ((e0, e1), (e2, e3)) = rayon::join(|| rayon::join(|| edge(0), || edge(1)), || rayon::join(|| edge(2), || edge(3)));
        let (Some(e0), Some(e1), Some(e2), Some(e3)) = (e0?, e1?, e2?, e3?) else {
            return Ok(None);
        };
        let scale = C64::new(0.0, 2.0 * std::f64::consts::PI);
        let tot = |j: usize| (e0[j] + e1[j] + e2[j] + e3[j]) / scale;
        let m0 = tot(0);
        let n = m0.re.round();
        if n < 0.0 || (m0 - n).norm() > 0.02 {
            return Ok(None);
        }
        Ok(Some(Moments { count: n as usize, m1: tot(1), m2: tot(2), center: c, radius: r }))
    }

    fn newton(&self, z0: C64, reach: f64) -> Option<C64> {
        let mut z = z0;
        let mut prev = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..40 {
            let (fz, dfz) = (self.f)(z).ok()?;
            if fz.norm() == 0.0 {
                return Some(z);
            }
            if dfz.norm() == 0.0 || !dfz.re.is_finite() {
                return None;
            }
            let step = fz / dfz;
            z -= step;
            if !z.re.is_finite() || (z - z0).norm() > reach {
                return None;
            }
            let size = step.norm();
            if size <= self.cfg.newton_tol * (1.0 + z.norm()) {
                return Some(z);
            }
            // at the noise floor the step stops shrinking
            if size > 0.5 * prev {
                stalls += 1;
                if stalls >= 3 {
                    return Some(z);
                }
            }
            prev = size;
        }
        Some(z)
    }

    /// All zeros of `f` in `rect`, sorted by real then imaginary part.
    pub fn find(&self, rect: Rect) -> Result<Vec<Root>> {
        for attempt in 0..=self.cfg.max_perturbations {
            let r = if attempt == 0 { rect } else { rect.inflate(0.002 * attempt as f64) };
            if let Some(m) = self.moments(&r)? {
                let mut roots = self.process(r, m, 0)?;
                roots.sort_by(|a, b| {
                    a.z.re.partial_cmp(&b.z.re).unwrap().then(a.z.im.partial_cmp(&b.z.im).unwrap())
                });
                return Ok(roots);
            }
        }
        Err(HillError::BoundaryRoot { attempts: self.cfg.max_perturbations })
    }

    fn process(&self, rect: Rect, m: Moments, depth: usize) -> Result<Vec<Root>> {
        match m.count {
            0 => return Ok(vec![]),
            1 => {
                let guess = m.sum();
                let reach = 2.0 * rect.half_diagonal();
                let z = match self.newton(guess, reach) {
                    Some(z) if rect.contains(z, 1e-9 * (1.0 + z.norm())) => z,
                    _ => guess,
                };
                return Ok(vec![Root { z, multiplicity: 1 }]);
            }
            2 => {
                let disc = (m.m2 * 2.0 - m.m1 * m.m1).sqrt() * m.radius;
                let centroid = m.sum() / 2.0;
                let sep = self.sep_tol(centroid);
                if disc.norm() < sep {
                    return Ok(vec![Root { z: centroid, multiplicity: 2 }]);
                }
                if disc.norm() > 0.25 * rect.half_diagonal() {
                    let reach = 0.45 * disc.norm();
                    let g1 = centroid + disc / 2.0;
                    let g2 = centroid - disc / 2.0;
                    if let (Some(a), Some(b)) = (self.newton(g1, reach), self.newton(g2, reach)) {
                        if (a - b).norm() > 0.5 * disc.norm() && rect.contains(a, 0.0) && rect.contains(b, 0.0) {
                            return Ok(vec![Root { z: a, multiplicity: 1 }, Root { z: b, multiplicity: 1 }]);
                        }
                    }
                } else {
                    // zoom onto the pair instead of bisecting down to its scale
                    let half = 2.0 * disc.norm() + 16.0 * sep;
                    let zoom = Rect::new(
                        (centroid.re - half).max(rect.re_min),
                        (centroid.re + half * 1.0137).min(rect.re_max),
                        (centroid.im - half * 0.9871).max(rect.im_min),
                        (centroid.im + half).min(rect.im_max),
                    );
                    if zoom.half_diagonal() < 0.5 * rect.half_diagonal() {
                        if let Some(mz) = self.moments(&zoom)? {
                            if mz.count == 2 {
                                return self.process(zoom, mz, depth + 1);
                            }
                        }
                    }
                }
            }
            n => {
                let centroid = m.sum() / n as f64;
                if 2.0 * rect.half_diagonal() < self.sep_tol(centroid) {
                    return Ok(vec![Root { z: centroid, multiplicity: n }]);
                }
            }
        }
        if depth >= self.cfg.max_depth {
            let centroid = m.sum() / m.count as f64;
            if 2.0 * rect.half_diagonal() < 1e3 * self.sep_tol(centroid) {
                return Ok(vec![Root { z: centroid, multiplicity: m.count }]);
            }
            return Err(HillError::Nonconvergence(format!("subdivision depth exhausted in {rect:?}")));
        }
        for frac in SPLIT_FRACTIONS.iter().take(self.cfg.max_perturbations.max(1)) {
            let (a, b) = rect.split(*frac);
            let (ma, mb) = rayon::join(|| self.moments(&a), || self.moments(&b));
            if let (Some(ma), Some(mb)) = (ma?, mb?) {
                if ma.count + mb.count != m.count {
                    continue;
                }
                let (ra, rb) = rayon::join(|| self.process(a, ma, depth + 1), || self.process(b, mb, depth + 1));
                let mut out = ra?;
                out.extend(rb?);
                return Ok(out);
            }
        }
        Err(HillError::Nonconvergence(format!("no admissible split of {rect:?}")))
    }
}

/// Convenience wrapper around [`RootFinder::find`].
pub fn find_roots_in_rect<F>(f: &F, rect: Rect, cfg: &SpectraConfig) -> Result<Vec<Root>>
where
    F: Fn(C64) -> Result<(C64, C64)> + Sync,
{
    RootFinder::new(f, cfg).find(rect)
}

/// Net winding of `f` around the circle `|z - c| = r`, by adaptive quadrature.
pub fn winding_on_circle<F>(f: &F, c: C64, r: f64) -> Result<f64>
where
    F: Fn(C64) -> Result<(C64, C64)>,
{
    let opts = GkOptions { epsabs: 1e-9, epsrel: 1e-9, max_intervals: 400 };
    let res = gauss_kronrod(
        |s: f64| {
            let e = C64::from_polar(1.0, s);
            let z = c + e * r;
            let (fz, dfz) = f(z)?;
            Ok([dfz / fz * C64::new(0.0, r) * e])
        },
        0.0,
        2.0 * std::f64::consts::PI,
        &opts,
    )?;
    Ok((res.value[0] / C64::new(0.0, 2.0 * std::f64::consts::PI)).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> SpectraConfig {
        SpectraConfig::default()
    }

    #[test]
    fn free_dirichlet_roots() {
        let f = |z: C64| {
            let r = z.sqrt();
            let val = (r * PI).sin() / r;
            let der = ((r * PI).cos() * PI - (r * PI).sin() / r) / (z * 2.0);
            Ok((val, der))
        };
        let roots = find_roots_in_rect(&f, Rect::new(0.5, 9.5, -1.0, 1.0), &cfg()).unwrap();
        let zs: Vec<f64> = roots.iter().map(|r| r.z.re).collect();
        assert_eq!(roots.len(), 3);
        for (z, k) in zs.iter().zip([1.0, 4.0, 9.0]) {
            assert!((z - k).abs() < 1e-10);
        }
        assert!(roots.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn free_double_periodic_roots() {
        let f = |z: C64| {
            let r = z.sqrt();
            Ok(((r * PI).cos() - 1.0, -(r * PI).sin() * PI / (r * 2.0)))
        };
        let roots = find_roots_in_rect(&f, Rect::new(0.5, 20.0, -1.0, 1.0), &cfg()).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].z - 4.0).norm() < 1e-8 && roots[0].multiplicity == 2);
        assert!((roots[1].z - 16.0).norm() < 1e-8 && roots[1].multiplicity == 2);
    }

    #[test]
    fn polynomial_with_cluster_and_complex_roots() {
        let rs = [C64::new(1.0, 0.5), C64::new(1.0, -0.5), C64::new(3.0, 0.0), C64::new(3.0 + 1e-9, 0.0)];
        let f = |z: C64| {
            let val: C64 = rs.iter().map(|r| z - r).product();
            let der: C64 = (0..4)
                .map(|i| rs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| z - r).product::<C64>())
                .sum();
            Ok((val, der))
        };
        let roots = find_roots_in_rect(&f, Rect::new(0.0, 4.0, -1.0, 1.0), &cfg()).unwrap();
        let total: usize = roots.iter().map(|r| r.multiplicity).sum();
        assert_eq!(total, 4);
        assert_eq!(roots.len(), 3);
        assert!((roots[2].z - 3.0).norm() < 1e-8 && roots[2].multiplicity == 2);
    }

    #[test]
    fn winding_counts() {
        let f = |z: C64| Ok(((z - 1.0) * (z - 1.0), (z - 1.0) * 2.0));
        assert!((winding_on_circle(&f, C64::new(1.1, 0.0), 0.5).unwrap() - 2.0).abs() < 1e-8);
        assert!(winding_on_circle(&f, C64::new(3.0, 0.0), 0.5).unwrap().abs() < 1e-8);
    }
}
