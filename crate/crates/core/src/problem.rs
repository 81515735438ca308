//! Ground-truth problem description: `u_t + a(t) A^beta u = F(u) + g` on
//! `(0, pi)` with homogeneous Neumann data.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Time-dependent diffusion coefficient `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `start + slope * t`.
    Affine { start: f64, slope: f64 },
    /// `mean + amplitude * sin(2 pi frequency t)`.
    Oscillating { mean: f64, amplitude: f64, frequency: f64 },
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Coefficient::Constant(a) => a,
            Coefficient::Affine { start, slope } => start + slope * t,
            Coefficient::Oscillating { mean, amplitude, frequency } => {
                mean + amplitude * sin(2.0 * PI * frequency * t)
            }
        }
    }

    /// `int_{t0}^{t1} a(s) ds`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            Coefficient::Constant(a) => a * (t1 - t0),
            Coefficient::Affine { start, slope } => {
                start * (t1 - t0) + 0.5 * slope * (t1 * t1 - t0 * t0)
            }
            Coefficient::Oscillating { mean, amplitude, frequency } => {
                let w = 2.0 * PI * frequency;
                let osc = if w == 0.0 {
                    0.0
                } else {
                    amplitude * (cos(w * t0) - cos(w * t1)) / w
                };
                mean * (t1 - t0) + osc
            }
        }
    }

    /// Lower and upper bound over `[0, t_final]`.
    pub fn range(&self, t_final: f64) -> (f64, f64) {
        match *self {
            Coefficient::Constant(a) => (a, a),
            Coefficient::Affine { start, slope } => {
                let end = start + slope * t_final;
                (start.min(end), start.max(end))
            }
            Coefficient::Oscillating { mean, amplitude, .. } => {
                (mean - amplitude.abs(), mean + amplitude.abs())
            }
        }
    }

    pub fn is_identically_one(&self) -> bool {
        matches!(self, Coefficient::Constant(a) if *a == 1.0)
    }

    pub fn samples(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|t| self.eval(*t)).collect()
    }
}

/// Catalog of scalar nonlinearities `F: R -> R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Zero,
    /// `scale * sin(u)`.
    Sine { scale: f64 },
    /// `scale * u / (1 + u^2)`.
    Logistic { scale: f64 },
    /// `u - u^3`, only locally Lipschitz.
    Cubic,
    /// `scale * u^2`, only locally Lipschitz.
    Square { scale: f64 },
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Sine { scale } => scale * sin(u),
            Nonlinearity::Logistic { scale } => scale * u / (1.0 + u * u),
            Nonlinearity::Cubic => u - u * u * u,
            Nonlinearity::Square { scale } => scale * u * u,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Zero => "zero",
            Nonlinearity::Sine { .. } => "sine",
            Nonlinearity::Logistic { .. } => "logistic",
            Nonlinearity::Cubic => "cubic",
            Nonlinearity::Square { .. } => "square",
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Nonlinearity::Zero => true,
            Nonlinearity::Sine { scale }
            | Nonlinearity::Logistic { scale }
            | Nonlinearity::Square { scale } => scale == 0.0,
            Nonlinearity::Cubic => false,
        }
    }

    /// Global Lipschitz constant `K`, when one exists.
    pub fn global_lipschitz(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Zero => Some(0.0),
            // |d/du u/(1+u^2)| = |1-u^2|/(1+u^2)^2 peaks at u = 0.
            Nonlinearity::Sine { scale } | Nonlinearity::Logistic { scale } => Some(scale.abs()),
            Nonlinearity::Cubic | Nonlinearity::Square { .. } => None,
        }
    }

    /// Local Lipschitz profile `K(Q)` on `[-Q, Q]`.
    pub fn local_lipschitz(&self, q: f64) -> f64 {
        match *self {
            Nonlinearity::Cubic => (3.0 * q * q - 1.0).max(1.0),
            Nonlinearity::Square { scale } => 2.0 * scale.abs() * q,
            _ => self.global_lipschitz().expect("globally Lipschitz"),
        }
    }

    /// `sup |F|` for bounded entries.
    pub fn sup_abs(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Zero => Some(0.0),
            Nonlinearity::Sine { scale } => Some(scale.abs()),
            Nonlinearity::Logistic { scale } => Some(0.5 * scale.abs()),
            Nonlinearity::Cubic | Nonlinearity::Square { .. } => None,
        }
    }
}

/// Named catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub nonlinearity: Nonlinearity,
    pub global_lipschitz: Option<f64>,
    pub bounded: bool,
}

/// The built-in nonlinearities with their Lipschitz data.
pub fn nonlinearity_catalog() -> Vec<CatalogEntry> {
    [
        Nonlinearity::Zero,
        Nonlinearity::Sine { scale: 1.0 },
        Nonlinearity::Logistic { scale: 1.0 },
        Nonlinearity::Cubic,
        Nonlinearity::Square { scale: 0.5 },
    ]
    .into_iter()
    .map(|nonlinearity| CatalogEntry {
        name: nonlinearity.name().into(),
        nonlinearity,
        global_lipschitz: nonlinearity.global_lipschitz(),
        bounded: nonlinearity.sup_abs().is_some(),
    })
    .collect()
}

/// `F` clamped outside `[-Q, Q]`; `Q = inf` leaves `F` unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub inner: Nonlinearity,
    pub level: f64,
}

impl Clamped {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.inner.eval(u.clamp(-self.level, self.level))
    }

    /// Lipschitz bound `2 K(Q)` of the clamped map.
    pub fn lipschitz_bound(&self) -> f64 {
        if self.level.is_finite() {
            2.0 * self.inner.local_lipschitz(self.level)
        } else {
            2.0 * self.inner.global_lipschitz().unwrap_or(f64::INFINITY)
        }
    }
}

pub fn clamp_nonlinearity(f: Nonlinearity, q: f64) -> Result<Clamped> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter("clamp level must be positive".into()));
    }
    Ok(Clamped { inner: f, level: q })
}

/// Time profile of a separable source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temporal {
    Constant,
    /// `exp(-rate t)`.
    Decay { rate: f64 },
    /// `cos(2 pi frequency t)`.
    Oscillating { frequency: f64 },
}

impl Temporal {
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            Temporal::Constant => 1.0,
            Temporal::Decay { rate } => libm::exp(-rate * t),
            Temporal::Oscillating { frequency } => cos(2.0 * PI * frequency * t),
        }
    }
}

/// Separable source `g(x, t) = s(t) G(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub spatial: SpectralField,
    pub temporal: Temporal,
}

impl Source {
    pub fn zero() -> Self {
        Self {
            spatial: SpectralField::zeros(0),
            temporal: Temporal::Constant,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.spatial.coeffs().iter().all(|c| *c == 0.0)
    }

    pub fn at(&self, t: f64) -> SpectralField {
        self.spatial.scaled(self.temporal.factor(t))
    }

    /// Coefficient of mode `p` at time `t`.
    #[inline]
    pub fn coeff(&self, p: usize, t: f64) -> f64 {
        self.spatial.get(p) * self.temporal.factor(t)
    }
}

/// A complete forward problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub beta: f64,
    pub t_final: f64,
    pub coefficient: Coefficient,
    /// Declared upper bound `a0` of the coefficient.
    pub a0: f64,
    pub nonlinearity: Nonlinearity,
    pub source: Source,
    pub initial: SpectralField,
}

impl ProblemInstance {
    /// Constant coefficient `a = 1`, bound `a0 = 1`.
    pub fn unit_coefficient(
        beta: f64,
        t_final: f64,
        nonlinearity: Nonlinearity,
        source: Source,
        initial: SpectralField,
    ) -> Self {
        Self {
            beta,
            t_final,
            coefficient: Coefficient::Constant(1.0),
            a0: 1.0,
            nonlinearity,
            source,
            initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.5) {
            return Err(Error::InvalidParameter(alloc::format!(
                "beta = {} must exceed 1/2",
                self.beta
            )));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter("final time must be positive".into()));
        }
        let (lo, hi) = self.coefficient.range(self.t_final);
        if !(lo > 0.0) || hi > self.a0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "coefficient range [{lo}, {hi}] not inside (0, a0 = {}]",
                self.a0
            )));
        }
        if !self.initial.is_finite() || !self.source.spatial.is_finite() {
            return Err(Error::NonFinite("problem data".into()));
        }
        Ok(())
    }

    /// Source coefficients at every time in `times`, padded to `cap`.
    pub fn source_path(&self, times: &[f64], cap: usize) -> Vec<SpectralField> {
        times.iter().map(|t| self.source.at(*t).resized(cap)).collect()
    }
}

/// `c_p = amplitude * p^(-decay)` for `p = 1..=cap`, no constant mode.
pub fn power_law_field(amplitude: f64, decay: f64, cap: usize) -> SpectralField {
    let mut coeffs = vec![0.0; cap + 1];
    for (p, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = amplitude * libm::pow(p as f64, -decay);
    }
    SpectralField::from_raw(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn catalog_contents() {
        let cat = nonlinearity_catalog();
        let names: Vec<_> = cat.iter().map(|e| e.name.as_str()).collect();
        assert!(names.contains(&"zero") && names.contains(&"sine"));
        assert!(names.contains(&"logistic") && names.contains(&"cubic"));
        let sine = cat.iter().find(|e| e.name == "sine").unwrap();
        assert_eq!(sine.global_lipschitz, Some(1.0));
        assert!(sine.bounded);
        assert_eq!(Nonlinearity::Cubic.local_lipschitz(2.0), 11.0);
        assert_eq!(Nonlinearity::Cubic.local_lipschitz(0.5), 1.0);
        assert_eq!(Nonlinearity::Zero.global_lipschitz(), Some(0.0));
        assert_eq!(Nonlinearity::Zero.eval(3.0), 0.0);
    }

    #[test]
    fn sine_is_one_lipschitz() {
        let f = Nonlinearity::Sine { scale: 1.0 };
        for i in 0..200 {
            let a = -5.0 + 0.05 * i as f64;
            let b = 3.0 - 0.037 * i as f64;
            assert!((f.eval(a) - f.eval(b)).abs() <= (a - b).abs() + 1e-15);
        }
    }

    #[test]
    fn logistic_lipschitz_constant() {
        let f = Nonlinearity::Logistic { scale: 2.0 };
        let k = f.global_lipschitz().unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..4000 {
            let a = -10.0 + 0.005 * i as f64;
            let b = a + 1e-4;
            worst = worst.max((f.eval(b) - f.eval(a)).abs() / 1e-4);
        }
        assert!(worst <= k + 1e-6 && worst > k - 1e-3);
    }

    #[test]
    fn clamp_examples() {
        let c = clamp_nonlinearity(Nonlinearity::Square { scale: 1.0 }, 2.0).unwrap();
        assert_eq!(c.eval(3.0), 4.0);
        assert_eq!(c.eval(-7.0), 4.0);
        assert_eq!(c.eval(1.5), 2.25);
        assert!(clamp_nonlinearity(Nonlinearity::Cubic, 0.0).is_err());
    }

    #[test]
    fn coefficient_integrals() {
        let a = Coefficient::Affine { start: 1.0, slope: 0.5 };
        assert_abs_diff_eq!(a.integral(0.2, 0.6), 0.4 + 0.25 * (0.36 - 0.04), epsilon = 1e-15);
        let o = Coefficient::Oscillating { mean: 1.0, amplitude: 0.2, frequency: 1.0 };
        // Midpoint rule oracle.
        let m = 20000;
        let h = 0.7 / m as f64;
        let num: f64 = (0..m).map(|i| o.eval((i as f64 + 0.5) * h) * h).sum();
        assert_abs_diff_eq!(o.integral(0.0, 0.7), num, epsilon = 1e-9);
        assert_eq!(o.range(1.0), (0.8, 1.2));
    }

    #[test]
    fn validation() {
        let ok = ProblemInstance::unit_coefficient(
            1.0,
            0.5,
            Nonlinearity::Zero,
            Source::zero(),
            SpectralField::mode(1, 1.0, 4),
        );
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.beta = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.coefficient = Coefficient::Constant(1.5);
        assert!(bad.validate().is_err());
    }
}
