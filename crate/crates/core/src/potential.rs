//! Complex π-periodic potentials.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};
use crate::scalar::Real;

/// How a potential was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Coefficients `c_n` of `e^{2inx}`.
    Fourier(BTreeMap<i64, Complex<f64>>),
    /// Uniform samples on `[0, π)`, trigonometrically interpolated.
    Sampled(Vec<Complex<f64>>),
}

/// Named families with closed-form spectral data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Preset {
    Zero,
    /// `2c cos 2x`
    Mathieu { c: Complex<f64> },
    /// `γ e^{2ix}`
    Gasymov { gamma: Complex<f64> },
    Constant { c: Complex<f64> },
}

impl Preset {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let value = |default: f64| -> Result<Complex<f64>> {
            match arg {
                None => Ok(Complex::new(default, 0.0)),
                Some(a) => parse_complex(a),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "zero" | "free" => Ok(Preset::Zero),
            "mathieu" => Ok(Preset::Mathieu { c: value(0.5)? }),
            "gasymov" => Ok(Preset::Gasymov { gamma: value(1.0)? }),
            "constant" | "const" => Ok(Preset::Constant { c: value(1.0)? }),
            other => Err(HillError::InvalidPotential(format!("unknown preset `{other}`"))),
        }
    }

    pub fn coefficients(&self) -> BTreeMap<i64, Complex<f64>> {
        let mut m = BTreeMap::new();
        match *self {
            Preset::Zero => {}
            Preset::Mathieu { c } => {
                m.insert(-1, c);
                m.insert(1, c);
            }
            Preset::Gasymov { gamma } => {
                m.insert(1, gamma);
            }
            Preset::Constant { c } => {
                m.insert(0, c);
            }
        }
        m
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Zero => write!(f, "zero"),
            Preset::Mathieu { c } => write!(f, "mathieu:{}", fmt_complex(*c)),
            Preset::Gasymov { gamma } => write!(f, "gasymov:{}", fmt_complex(*gamma)),
            Preset::Constant { c } => write!(f, "constant:{}", fmt_complex(*c)),
        }
    }
}

fn fmt_complex(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also accepting `j`).
pub fn parse_complex(s: &str) -> Result<Complex<f64>> {
    let bad = || HillError::InvalidInput(format!("cannot parse complex number `{s}`"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix(['i', 'j']) {
        // split at the last sign that is not an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        Ok(Complex::new(re, im))
    } else {
        Ok(Complex::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}

/// User-facing description of a potential, as read from JSON or the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialSpec {
    Preset(String),
    /// Keys are decimal integers, values `[re, im]`.
    Fourier(BTreeMap<String, [f64; 2]>),
    Samples(Vec<[f64; 2]>),
}

impl PotentialSpec {
    pub fn build<T: Real>(&self) -> Result<Potential<T>> {
        match self {
            PotentialSpec::Preset(s) => Ok(Potential::preset(Preset::parse(s)?)),
            PotentialSpec::Fourier(map) => {
                let mut coeffs = BTreeMap::new();
                for (k, v) in map {
                    let n: i64 = k.trim().parse().map_err(|_| {
                        HillError::InvalidPotential(format!("Fourier index `{k}` is not an integer"))
                    })?;
                    coeffs.insert(n, Complex::new(v[0], v[1]));
                }
                Ok(Potential::fourier(coeffs))
            }
            PotentialSpec::Samples(s) => {
                Potential::sampled(s.iter().map(|v| Complex::new(v[0], v[1])).collect())
            }
        }
    }
}

/// A complex π-periodic potential `V(x) = Σ c_n e^{2inx}`.
///
/// Immutable after construction. Evaluation uses Horner's scheme in `e^{2ix}` on a dense
/// coefficient band `[-K, K]`.
#[derive(Debug, Clone)]
pub struct Potential<T: Real = f64> {
    representation: Representation,
    preset: Option<Preset>,
    mean: Complex<f64>,
    /// `pos[n] = c_n` for `n = 0..=K`
    pos: Vec<Complex<T>>,
    /// `neg[n-1] = c_{-n}` for `n = 1..=K`
    neg: Vec<Complex<T>>,
}

impl<T: Real> Potential<T> {
    pub fn zero() -> Self {
        Self::preset(Preset::Zero)
    }

    pub fn mathieu(c: impl Into<Complex<f64>>) -> Self {
        Self::preset(Preset::Mathieu { c: c.into() })
    }

    pub fn gasymov(gamma: impl Into<Complex<f64>>) -> Self {
        Self::preset(Preset::Gasymov { gamma: gamma.into() })
    }

    pub fn constant(c: impl Into<Complex<f64>>) -> Self {
        Self::preset(Preset::Constant { c: c.into() })
    }

    pub fn preset(p: Preset) -> Self {
        let mut v = Self::fourier(p.coefficients());
        v.preset = Some(p);
        v
    }

    /// Builds `Σ c_n e^{2inx}` from a finite coefficient map. The mean is `c_0`.
    pub fn fourier(coeffs: BTreeMap<i64, Complex<f64>>) -> Self {
        let coeffs: BTreeMap<i64, Complex<f64>> =
            coeffs.into_iter().filter(|(_, c)| *c != Complex::new(0.0, 0.0)).collect();
        let k = coeffs.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut pos = vec![Complex::new(T::zero(), T::zero()); k + 1];
        let mut neg = vec![Complex::new(T::zero(), T::zero()); k];
        for (&n, &c) in &coeffs {
            let c = Complex::new(T::lit(c.re), T::lit(c.im));
            if n >= 0 {
                pos[n as usize] = c;
            } else {
                neg[(-n) as usize - 1] = c;
            }
        }
        let mean = coeffs.get(&0).copied().unwrap_or_default();
        Potential { representation: Representation::Fourier(coeffs), preset: None, mean, pos, neg }
    }

    /// Trigonometric interpolant of samples `V(jπ/N)`, `j = 0..N`, with `N` a power of two.
    /// The Nyquist mode is split evenly between `±N/2` so real samples give a real interpolant.
    pub fn sampled(samples: Vec<Complex<f64>>) -> Result<Self> {
        let n = samples.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(HillError::InvalidPotential(format!(
                "sample count must be a power of two, got {n}"
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(HillError::InvalidPotential("non-finite sample".into()));
        }
        let mut buf = samples.clone();
        FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut coeffs = BTreeMap::new();
        for (j, c) in buf.into_iter().enumerate() {
            let c = c * scale;
            if n > 1 && j == n / 2 {
                coeffs.insert((n / 2) as i64, c * 0.5);
                coeffs.insert(-((n / 2) as i64), c * 0.5);
            } else if j < n / 2 || n == 1 {
                coeffs.insert(j as i64, c);
            } else {
                coeffs.insert(j as i64 - n as i64, c);
            }
        }
        let mut v = Self::fourier(coeffs);
        v.representation = Representation::Sampled(samples);
        Ok(v)
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    pub fn preset_tag(&self) -> Option<Preset> {
        self.preset
    }

    /// `⟨V⟩ = (1/π) ∫_0^π V`.
    pub fn mean(&self) -> Complex<f64> {
        self.mean
    }

    /// Fourier coefficients of the interpolant (nonzero entries only).
    pub fn coefficients(&self) -> BTreeMap<i64, Complex<f64>> {
        let mut m = BTreeMap::new();
        for (n, c) in self.pos.iter().enumerate() {
            if !c.re.is_zero() || !c.im.is_zero() {
                m.insert(n as i64, Complex::new(c.re.as_f64(), c.im.as_f64()));
            }
        }
        for (n, c) in self.neg.iter().enumerate() {
            if !c.re.is_zero() || !c.im.is_zero() {
                m.insert(-(n as i64) - 1, Complex::new(c.re.as_f64(), c.im.as_f64()));
            }
        }
        m
    }

    /// Highest Fourier index `K`.
    pub fn bandwidth(&self) -> usize {
        self.neg.len().max(self.pos.len().saturating_sub(1))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().is_empty()
    }

    /// `V(x)`, computed from `x mod π`.
    pub fn evaluate(&self, x: T) -> Complex<T> {
        if self.pos.len() == 1 && self.neg.is_empty() {
            return self.pos[0];
        }
        let pi = T::PI();
        let xr = x - pi * (x / pi).floor();
        let two = xr + xr;
        let w = Complex::new(two.cos(), two.sin());
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.pos.iter().rev() {
            acc = acc * w + *c;
        }
        if !self.neg.is_empty() {
            let wc = w.conj();
            let mut accn = Complex::new(T::zero(), T::zero());
            for c in self.neg.iter().rev() {
                accn = accn * wc + *c;
            }
            acc = acc + accn * wc;
        }
        acc
    }

    /// Returns `(V - ⟨V⟩, ⟨V⟩)`.
    pub fn shift_to_zero_mean(&self) -> (Potential<T>, Complex<f64>) {
        let mean = self.mean;
        if mean == Complex::new(0.0, 0.0) {
            return (self.clone(), mean);
        }
        let mut coeffs = self.coefficients();
        coeffs.remove(&0);
        let mut shifted = Self::fourier(coeffs);
        shifted.preset = match self.preset {
            Some(Preset::Constant { .. }) => Some(Preset::Zero),
            p => p,
        };
        (shifted, mean)
    }

    /// Semi-strip bounds `(min Im V, max Im V, min Re V)` sampled on a grid fine enough for the
    /// highest mode.
    pub fn strip_bounds(&self) -> (f64, f64, f64) {
        let n = (64 * (self.bandwidth() + 1)).min(1 << 16);
        let mut lo_im = f64::INFINITY;
        let mut hi_im = f64::NEG_INFINITY;
        let mut lo_re = f64::INFINITY;
        for j in 0..n {
            let x = T::lit(std::f64::consts::PI * j as f64 / n as f64);
            let v = self.evaluate(x);
            let (re, im) = (v.re.as_f64(), v.im.as_f64());
            lo_im = lo_im.min(im);
            hi_im = hi_im.max(im);
            lo_re = lo_re.min(re);
        }
        (lo_im, hi_im, lo_re)
    }

    /// `Σ |c_n|`, an upper bound for `sup |V|`.
    pub fn sup_bound(&self) -> f64 {
        self.pos.iter().chain(self.neg.iter()).map(|c| c.norm().as_f64()).sum()
    }

    /// Same potential in another precision.
    pub fn cast<U: Real>(&self) -> Potential<U> {
        let mut v = Potential::<U>::fourier(self.coefficients());
        v.representation = self.representation.clone();
        v.preset = self.preset;
        v
    }

    /// Description suitable for serialization.
    pub fn spec(&self) -> PotentialSpec {
        if let Some(p) = self.preset {
            return PotentialSpec::Preset(p.to_string());
        }
        match &self.representation {
            Representation::Sampled(s) => PotentialSpec::Samples(s.iter().map(|c| [c.re, c.im]).collect()),
            Representation::Fourier(m) => {
                PotentialSpec::Fourier(m.iter().map(|(n, c)| (n.to_string(), [c.re, c.im])).collect())
            }
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match (self.preset, &self.representation) {
            (Some(p), _) => p.to_string(),
            (None, Representation::Sampled(s)) => format!("samples[{}]", s.len()),
            (None, Representation::Fourier(m)) => format!("fourier[{} terms]", m.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn presets_evaluate() {
        let z = Potential::<f64>::zero();
        assert_eq!(z.evaluate(0.3), c(0.0, 0.0));
        assert_eq!(z.mean(), c(0.0, 0.0));
        let g = Potential::<f64>::gasymov(1.0);
        assert!((g.evaluate(0.0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((g.evaluate(PI / 2.0) - c(-1.0, 0.0)).norm() < 1e-15);
        let m = Potential::<f64>::mathieu(0.5);
        for &x in &[0.0, 0.4, 1.3, 2.9] {
            assert!((m.evaluate(x) - c((2.0 * x).cos(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn shift_constant() {
        let v = Potential::<f64>::constant(c(5.0, 1.0));
        let (s, mean) = v.shift_to_zero_mean();
        assert_eq!(mean, c(5.0, 1.0));
        assert!(s.is_zero());
        let (m, mean) = Potential::<f64>::mathieu(0.5).shift_to_zero_mean();
        assert_eq!(mean, c(0.0, 0.0));
        assert_eq!(m.coefficients(), Potential::<f64>::mathieu(0.5).coefficients());
    }

    #[test]
    fn sampled_interpolates_samples() {
        let n = 16;
        let s: Vec<_> = (0..n)
            .map(|j| {
                let x = PI * j as f64 / n as f64;
                c((2.0 * x).cos() + 0.3 * (4.0 * x).sin(), 0.1 * (6.0 * x).cos())
            })
            .collect();
        let v = Potential::<f64>::sampled(s.clone()).unwrap();
        for (j, sj) in s.iter().enumerate() {
            let x = PI * j as f64 / n as f64;
            assert!((v.evaluate(x) - sj).norm() < 1e-13);
        }
        // band-limited input is reproduced between nodes too
        let x: f64 = 0.123;
        let exact = c((2.0 * x).cos() + 0.3 * (4.0 * x).sin(), 0.1 * (6.0 * x).cos());
        assert!((v.evaluate(x) - exact).norm() < 1e-13);
        assert!(Potential::<f64>::sampled(vec![c(1.0, 0.0); 12]).is_err());
    }

    #[test]
    fn nyquist_split_keeps_real_samples_real() {
        let s: Vec<_> = (0..8).map(|j| c(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        let v = Potential::<f64>::sampled(s).unwrap();
        assert!(v.evaluate(0.37).im.abs() < 1e-14);
    }

    #[test]
    fn parse_complex_forms() {
        assert_eq!(parse_complex("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), c(0.3, 0.1));
        assert_eq!(parse_complex("-2i").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("1e-3-2e-1i").unwrap(), c(1e-3, -0.2));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn spec_roundtrip() {
        for p in ["zero", "mathieu:0.3+0.1i", "gasymov:1", "constant:2"] {
            let v: Potential = PotentialSpec::Preset(p.into()).build().unwrap();
            let back: Potential = v.spec().build().unwrap();
            assert_eq!(v.coefficients(), back.coefficients());
        }
        let json = r#"{"fourier": {"1": [1.0, 0.0], "-1": [1.0, 0.0]}}"#;
        let spec: PotentialSpec = serde_json::from_str(json).unwrap();
        let v: Potential = spec.build().unwrap();
        assert!((v.evaluate(0.0) - c(2.0, 0.0)).norm() < 1e-15);
    }
}
