//! Cosine eigenbasis of the Neumann Laplacian on `(0, pi)`.
//!
//! Functions are stored by their coefficients in the orthonormal basis
//! `phi_0 = 1/sqrt(pi)`, `phi_p = sqrt(2/pi) cos(p x)`. Sampled data lives on
//! the midpoint nodes `x_k = pi (2k - 1) / (2n)`, `k = 1..n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, exp, log, pow, sqrt};

use crate::error::{Error, Result};

pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// `phi_p(x)` without the domain check.
#[inline]
pub fn basis(p: usize, x: f64) -> f64 {
    if p == 0 {
        INV_SQRT_PI
    } else {
        SQRT_2_OVER_PI * cos(p as f64 * x)
    }
}

/// Value of the `p`-th orthonormal eigenfunction at `x` in `[0, pi]`.
pub fn eigenfunction_value(p: usize, x: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&x) {
        return Err(Error::Domain { x });
    }
    Ok(basis(p, x))
}

/// Midpoint node `x_k` for `k = 1..=n`.
#[inline]
pub fn node(k: usize, n: usize) -> f64 {
    PI * (2 * k - 1) as f64 / (2 * n) as f64
}

/// Truncated cosine expansion `sum_{p <= cap} c_p phi_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("a field needs at least mode 0".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn zeros(cap: usize) -> Self {
        Self {
            coeffs: vec![0.0; cap + 1],
        }
    }

    /// `amplitude * phi_p`, padded with zeros up to `cap`.
    pub fn mode(p: usize, amplitude: f64, cap: usize) -> Self {
        let mut field = Self::zeros(cap.max(p));
        field.coeffs[p] = amplitude;
        field
    }

    /// The constant function `value`.
    pub fn constant(value: f64, cap: usize) -> Self {
        Self::mode(0, value * SQRT_PI, cap)
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of mode `p`, zero above the cap.
    pub fn get(&self, p: usize) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c * basis(p, x))
            .sum()
    }

    /// Copy truncated or zero-padded to `cap`.
    pub fn resized(&self, cap: usize) -> Self {
        let mut coeffs = vec![0.0; cap + 1];
        let keep = coeffs.len().min(self.coeffs.len());
        coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        Self { coeffs }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// L2 distance, treating missing modes as zero.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        sqrt(self.sq_distance(other))
    }

    pub fn sq_distance(&self, other: &Self) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|p| {
                let d = self.get(p) - other.get(p);
                d * d
            })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        sqrt(self.coeffs.iter().map(|c| c * c).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Function values at the midpoint nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    values: Vec<f64>,
}

impl GridSamples {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("at least two nodes are required".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((1..=n).map(|k| f(node(k, n))).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (1..=n).map(move |k| node(k, n))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }
}

/// Evaluate `field` at the `n` midpoint nodes.
pub fn synthesize(field: &SpectralField, n: usize) -> Result<GridSamples> {
    if n < 2 {
        return Err(Error::InvalidParameter("at least two nodes are required".into()));
    }
    Ok(GridSamples {
        values: (1..=n).map(|k| field.eval(node(k, n))).collect(),
    })
}

/// Midpoint-rule coefficient before aliasing correction: the sample mean for
/// `p = 0`, `(pi/n) sum f(x_k) phi_p(x_k)` for `1 <= p <= n-1`.
pub fn discrete_coefficient(samples: &GridSamples, p: usize) -> Result<f64> {
    let n = samples.n();
    if p >= n {
        return Err(Error::ModeRange { p, n });
    }
    Ok(raw_discrete_coefficient(samples.values(), p))
}

fn raw_discrete_coefficient(values: &[f64], p: usize) -> f64 {
    let n = values.len();
    if p == 0 {
        return values.iter().sum::<f64>() / n as f64;
    }
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| v * basis(p, node(i + 1, n)))
        .sum();
    PI / n as f64 * s
}

/// Exact correction `G_np` with `<f, phi_p> = discrete_coefficient - G_np` for
/// `1 <= p <= n-1`. For `p = 0` the identity holds for the mean value
/// `(1/pi) int f`, which is what the mean channel estimates.
pub fn aliasing_tail(field: &SpectralField, n: usize, p: usize) -> Result<f64> {
    if p >= n {
        return Err(Error::ModeRange { p, n });
    }
    let cap = field.cap();
    let mut total = 0.0;
    let mut l = 1usize;
    loop {
        let base = 2 * l * n;
        if base - p > cap {
            break;
        }
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        if p == 0 {
            total += sign * SQRT_2_OVER_PI * field.get(base);
        } else {
            total += sign * (field.get(base + p) + field.get(base - p));
        }
        l += 1;
    }
    Ok(total)
}

/// Discrete projection onto modes `0..=m`: the mean channel becomes the
/// constant function, modes `1..=m` take the midpoint coefficients.
pub fn project_samples(samples: &GridSamples, m: usize) -> Result<SpectralField> {
    if m >= samples.n() {
        return Err(Error::ModeRange { p: m, n: samples.n() });
    }
    let mut coeffs = vec![0.0; m + 1];
    coeffs[0] = SQRT_PI * samples.mean();
    for (p, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = raw_discrete_coefficient(samples.values(), p);
    }
    Ok(SpectralField::from_raw(coeffs))
}

/// `lambda_p^beta = p^(2 beta)`; zero for the constant mode.
#[inline]
pub fn frac_eigenvalue(p: usize, beta: f64) -> f64 {
    if p == 0 {
        0.0
    } else {
        pow(p as f64, 2.0 * beta)
    }
}

/// Spectral fractional Laplacian `A^beta`.
pub fn frac_laplacian_apply(field: &SpectralField, beta: f64) -> Result<SpectralField> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter("fractional order must be positive".into()));
    }
    Ok(SpectralField::from_raw(
        field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(p, c)| c * frac_eigenvalue(p, beta))
            .collect(),
    ))
}

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    L2,
    /// `(sum_{p>=1} p^(4 gamma) c_p^2)^(1/2)`.
    Sobolev { gamma: f64 },
    /// `(sum_{p>=1} p^(4 beta) exp(2 T a0 p^(2 beta)) c_p^2)^(1/2)`.
    Gevrey { t_final: f64, a0: f64, beta: f64 },
}

/// Squared weighted norm, accumulated in log space so large weights on
/// vanishing coefficients do not overflow.
pub fn norm_squared(field: &SpectralField, spec: NormSpec) -> Result<f64> {
    let total: f64 = match spec {
        NormSpec::L2 => field.coeffs().iter().map(|c| c * c).sum(),
        NormSpec::Sobolev { gamma } => field
            .coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, c)| pow(p as f64, 4.0 * gamma) * c * c)
            .sum(),
        NormSpec::Gevrey { t_final, a0, beta } => field
            .coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| **c != 0.0)
            .map(|(p, c)| {
                let lp = p as f64;
                let log_term = 4.0 * beta * log(lp)
                    + 2.0 * t_final * a0 * pow(lp, 2.0 * beta)
                    + 2.0 * log(c.abs());
                exp(log_term)
            })
            .sum(),
    };
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Overflow {
            exponent: f64::INFINITY,
            limit: crate::error::EXP_GUARD,
        })
    }
}

pub fn norm(field: &SpectralField, spec: NormSpec) -> Result<f64> {
    norm_squared(field, spec).map(sqrt)
}

/// Cached cosine table for evaluating pointwise maps pseudospectrally: sample
/// at `nodes` midpoints, apply the map, project back onto modes `0..=cap`.
#[derive(Debug, Clone)]
pub struct PseudoSpectral {
    cap: usize,
    nodes: usize,
    // table[k * (cap + 1) + p] = phi_p(x_k)
    table: Vec<f64>,
}

impl PseudoSpectral {
    pub fn new(cap: usize, nodes: usize) -> Result<Self> {
        if nodes <= cap {
            return Err(Error::InvalidParameter(alloc::format!(
                "{nodes} nodes cannot resolve {} modes",
                cap + 1
            )));
        }
        let mut table = Vec::with_capacity(nodes * (cap + 1));
        for k in 1..=nodes {
            let x = node(k, nodes);
            table.extend((0..=cap).map(|p| basis(p, x)));
        }
        Ok(Self { cap, nodes, table })
    }

    /// Node rule `2 cap + 2` used for the forward solver.
    pub fn with_default_nodes(cap: usize) -> Self {
        Self::new(cap, 2 * cap + 2).expect("2 cap + 2 nodes always resolve cap")
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Values at the nodes; modes above `cap` are ignored.
    pub fn synthesize_into(&self, field: &SpectralField, out: &mut [f64]) {
        let width = self.cap + 1;
        let used = width.min(field.coeffs().len());
        for (k, slot) in out.iter_mut().enumerate().take(self.nodes) {
            let row = &self.table[k * width..k * width + used];
            *slot = row
                .iter()
                .zip(&field.coeffs()[..used])
                .map(|(b, c)| b * c)
                .sum();
        }
    }

    /// Orthonormal projection of node values onto modes `0..=cap`.
    pub fn project(&self, values: &[f64]) -> SpectralField {
        let width = self.cap + 1;
        let mut coeffs = vec![0.0; width];
        let w = PI / self.nodes as f64;
        for (k, v) in values.iter().enumerate().take(self.nodes) {
            let row = &self.table[k * width..(k + 1) * width];
            for (c, b) in coeffs.iter_mut().zip(row) {
                *c += w * v * b;
            }
        }
        // phi_0^2 = 1/pi gives weight pi/n * 1/sqrt(pi) * f, the same as
        // sqrt(pi) * mean, so mode 0 needs no special case.
        SpectralField::from_raw(coeffs)
    }

    /// Pseudospectral image of `field` under the pointwise map `f`.
    pub fn map(&self, field: &SpectralField, f: impl Fn(f64) -> f64) -> SpectralField {
        let mut values = vec![0.0; self.nodes];
        self.synthesize_into(field, &mut values);
        for v in values.iter_mut() {
            *v = f(*v);
        }
        self.project(&values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenfunction_examples() {
        assert_abs_diff_eq!(eigenfunction_value(1, 0.0).unwrap(), 0.797_884_560_8, epsilon = 1e-10);
        assert_abs_diff_eq!(eigenfunction_value(3, PI / 6.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eigenfunction_value(0, PI / 2.0).unwrap(), 0.564_189_583_5, epsilon = 1e-10);
        assert!(matches!(eigenfunction_value(1, -0.1), Err(Error::Domain { .. })));
        assert!(matches!(eigenfunction_value(1, 3.2), Err(Error::Domain { .. })));
    }

    #[test]
    fn synthesize_examples() {
        let one = SpectralField::constant(1.0, 4);
        for v in synthesize(&one, 7).unwrap().values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
        let phi2 = SpectralField::mode(2, 1.0, 2);
        // first node of n = 8 sits at pi/16; x = pi/8 is the first node of n = 4
        let s = synthesize(&phi2, 8).unwrap();
        assert_abs_diff_eq!(s.values()[0], 0.737_149, epsilon = 1e-6);
        let s = synthesize(&phi2, 4).unwrap();
        assert_abs_diff_eq!(s.values()[0], 0.564_190, epsilon = 1e-6);
        let zero = synthesize(&SpectralField::zeros(5), 4).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn discrete_coefficient_examples() {
        let ones = GridSamples::new(vec![1.0; 9]).unwrap();
        assert_abs_diff_eq!(discrete_coefficient(&ones, 0).unwrap(), 1.0, epsilon = 1e-15);

        let phi3 = synthesize(&SpectralField::mode(3, 1.0, 3), 8).unwrap();
        assert_abs_diff_eq!(discrete_coefficient(&phi3, 3).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(discrete_coefficient(&phi3, 5).unwrap(), 0.0, epsilon = 1e-13);

        let phi5 = synthesize(&SpectralField::mode(5, 1.0, 5), 4).unwrap();
        assert_abs_diff_eq!(discrete_coefficient(&phi5, 3).unwrap(), -1.0, epsilon = 1e-13);
        assert!(matches!(discrete_coefficient(&phi5, 4), Err(Error::ModeRange { .. })));
    }

    #[test]
    fn aliasing_tail_examples() {
        let band = SpectralField::new(vec![0.3, 1.0, -2.0, 0.5]).unwrap();
        for p in 0..8 {
            assert_eq!(aliasing_tail(&band, 8, p).unwrap(), 0.0);
        }
        let phi5 = SpectralField::mode(5, 1.0, 5);
        assert_abs_diff_eq!(aliasing_tail(&phi5, 4, 3).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn frac_laplacian_examples() {
        let out = frac_laplacian_apply(&SpectralField::mode(3, 1.0, 3), 1.0).unwrap();
        assert_abs_diff_eq!(out.get(3), 9.0, epsilon = 1e-12);
        let out = frac_laplacian_apply(&SpectralField::mode(2, 1.0, 2), 0.75).unwrap();
        assert_abs_diff_eq!(out.get(2), 2.828_427_1, epsilon = 1e-7);
        let out = frac_laplacian_apply(&SpectralField::mode(0, 1.0, 0), 0.6).unwrap();
        assert_eq!(out.get(0), 0.0);
        assert!(frac_laplacian_apply(&out, 0.0).is_err());
    }

    #[test]
    fn norm_examples() {
        let phi3 = SpectralField::mode(3, 1.0, 3);
        assert_abs_diff_eq!(norm(&phi3, NormSpec::L2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norm(&phi3, NormSpec::Sobolev { gamma: 1.0 }).unwrap(), 9.0, epsilon = 1e-12);
        let phi2 = SpectralField::mode(2, 1.0, 2);
        let v = norm(&phi2, NormSpec::Gevrey { t_final: 1.0, a0: 1.0, beta: 1.0 }).unwrap();
        assert_abs_diff_eq!(v, 4.0 * libm::exp(4.0), epsilon = 1e-9);
        assert_abs_diff_eq!(v, 218.3926, epsilon = 1e-4);
    }

    #[test]
    fn gevrey_overflow_reported() {
        let f = SpectralField::mode(40, 1.0, 40);
        let spec = NormSpec::Gevrey { t_final: 1.0, a0: 1.0, beta: 1.0 };
        assert!(matches!(norm(&f, spec), Err(Error::Overflow { .. })));
    }

    #[test]
    fn pseudospectral_projection_matches_discrete_coefficients() {
        let field = SpectralField::new(vec![0.4, -0.2, 0.7, 0.1]).unwrap();
        let ps = PseudoSpectral::new(3, 10).unwrap();
        let back = ps.map(&field, |u| u);
        for p in 0..=3 {
            assert_abs_diff_eq!(back.get(p), field.get(p), epsilon = 1e-13);
        }
        let samples = synthesize(&field, 10).unwrap();
        let proj = project_samples(&samples, 3).unwrap();
        assert_abs_diff_eq!(proj.get(0), field.get(0), epsilon = 1e-13);
        assert!(PseudoSpectral::new(5, 5).is_err());
    }
}
