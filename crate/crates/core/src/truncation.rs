//! Fourier truncation regularizers for the constant-coefficient problem.
//!
//! The first regularizer keeps modes `0..=M` and solves
//! `U = Phi(u_T) - Phi~(g) - sum_{p<=M} int_t^T e^{(s-t) l_p} F_p(U)(s) ds phi_p`
//! by Picard iteration. The second (for `g = 0`) adds the stable forward
//! integral `int_0^t e^{(s-t) l_p} F_p(U)(s) ds` on modes `M < p <= cap`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, floor, log, pow, sqrt};

use crate::bounds::zeta;
use crate::error::{guard_exponent, Error, Result};
use crate::grid::TimeGrid;
use crate::problem::{Clamped, ProblemInstance};
use crate::spectral::{frac_eigenvalue, project_samples, GridSamples, PseudoSpectral, SpectralField, SQRT_2_OVER_PI};

/// `max(1, floor((sigma / (2T) log n)^{1/(2 beta)}))`.
pub fn choose_m_n(n: usize, sigma: f64, t_final: f64, beta: f64) -> Result<usize> {
    if n < 3 {
        return Err(Error::InvalidParameter("the cutoff rule needs n >= 3".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter("sigma must lie in (0, 1)".into()));
    }
    let m = pow(sigma / (2.0 * t_final) * log(n as f64), 1.0 / (2.0 * beta));
    Ok((floor(m) as usize).max(1))
}

/// Cutoff and Picard controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationParams {
    pub m_n: usize,
    pub n: usize,
    pub sigma_rate: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Clamp level `Q` for locally Lipschitz `F`; infinite means no clamp.
    pub clamp: f64,
    /// Nodes of the pseudospectral evaluation of `F`; `None` picks
    /// `max(2 M + 2, 32)` for the first method and `2 cap + 2` for the second.
    pub quad_nodes: Option<usize>,
}

impl TruncationParams {
    pub fn new(m_n: usize, n: usize) -> Self {
        Self {
            m_n,
            n,
            sigma_rate: f64::NAN,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            clamp: f64::INFINITY,
            quad_nodes: None,
        }
    }

    /// Cutoff from [`choose_m_n`].
    pub fn from_rule(n: usize, sigma: f64, t_final: f64, beta: f64) -> Result<Self> {
        let mut params = Self::new(choose_m_n(n, sigma, t_final, beta)?, n);
        params.sigma_rate = sigma;
        Ok(params)
    }

    pub fn validate(&self, t_final: f64, beta: f64) -> Result<()> {
        if self.m_n == 0 || self.m_n >= self.n {
            return Err(Error::InvalidParameter(alloc::format!(
                "cutoff M = {} must satisfy 0 < M < n = {}",
                self.m_n,
                self.n
            )));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 {
            return Err(Error::InvalidParameter("Picard controls must be positive".into()));
        }
        guard_exponent(t_final * frac_eigenvalue(self.m_n, beta))
    }

    /// `(M + 1) e^{2 T M^{2beta}} / n`.
    pub fn amplification_term(&self, t_final: f64, beta: f64) -> f64 {
        (self.m_n as f64 + 1.0) * exp(2.0 * t_final * frac_eigenvalue(self.m_n, beta)) / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    First,
    Second,
}

/// Outcome of a Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// Sup over the grid of the L2 change in the last sweep.
    pub last_increment: f64,
    /// Ratio of the last two increments; zero when one sweep sufficed.
    pub contraction_ratio: f64,
}

/// Regularized coefficients on the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedSolution {
    pub method: Method,
    pub grid: TimeGrid,
    pub states: Vec<SpectralField>,
    pub diagnostics: PicardDiagnostics,
}

impl RegularizedSolution {
    /// State at the grid node nearest to `t`.
    pub fn at(&self, t: f64) -> &SpectralField {
        &self.states[self.grid.nearest_index(t)]
    }
}

fn grid_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    let j = grid.nearest_index(t);
    if (grid.times()[j] - t).abs() > 1e-12 * grid.t_final().max(1.0) {
        return Err(Error::InvalidParameter(alloc::format!("t = {t} is not a grid node")));
    }
    Ok(j)
}

/// `Phi(f)(t)`: discrete projection onto modes `0..=M`, mode `p >= 1`
/// amplified by `e^{(T-t) p^{2beta}}`.
pub fn phi_data(samples: &GridSamples, m_n: usize, t: f64, beta: f64, t_final: f64) -> Result<SpectralField> {
    if !(0.0..=t_final).contains(&t) {
        return Err(Error::InvalidParameter("t must lie in [0, T]".into()));
    }
    guard_exponent((t_final - t) * frac_eigenvalue(m_n, beta))?;
    let mut field = project_samples(samples, m_n)?;
    for (p, c) in field.coeffs_mut().iter_mut().enumerate().skip(1) {
        *c *= exp((t_final - t) * frac_eigenvalue(p, beta));
    }
    Ok(field)
}

/// `Phi~(g)` at every grid time. Mode 0 is the plain node mean of `g(., t)`;
/// modes `1..=M` carry the trapezoid rule of
/// `int_t^T e^{(s-t) p^{2beta}} g_p(s) ds`.
pub fn phi_source_path(paths: &[GridSamples], m_n: usize, beta: f64, grid: &TimeGrid) -> Result<Vec<SpectralField>> {
    if paths.len() != grid.len() {
        return Err(Error::InvalidParameter("one sample vector per grid time is required".into()));
    }
    guard_exponent(grid.t_final() * frac_eigenvalue(m_n, beta))?;
    let projected: Vec<SpectralField> = paths
        .iter()
        .map(|s| project_samples(s, m_n))
        .collect::<Result<_>>()?;
    let m = grid.steps();
    let mut out = vec![SpectralField::zeros(m_n); m + 1];
    for (field, proj) in out.iter_mut().zip(&projected) {
        field.coeffs_mut()[0] = proj.get(0);
    }
    for p in 1..=m_n {
        let lambda = frac_eigenvalue(p, beta);
        let mut acc = 0.0;
        for j in (0..m).rev() {
            let h = grid.step(j);
            let e = exp(lambda * h);
            acc = e * acc + 0.5 * h * (projected[j].get(p) + e * projected[j + 1].get(p));
            out[j].coeffs_mut()[p] = acc;
        }
    }
    Ok(out)
}

/// `Phi~(g)` at the grid node `t`.
pub fn phi_source(paths: &[GridSamples], m_n: usize, t: f64, beta: f64, grid: &TimeGrid) -> Result<SpectralField> {
    let j = grid_index(grid, t)?;
    Ok(phi_source_path(paths, m_n, beta, grid)?.swap_remove(j))
}

/// Data term `Phi(u_T) - Phi~(g)` of the first regularizer on the grid.
pub fn first_data_term(
    final_samples: &GridSamples,
    source_paths: Option<&[GridSamples]>,
    m_n: usize,
    beta: f64,
    grid: &TimeGrid,
) -> Result<Vec<SpectralField>> {
    let t_final = grid.t_final();
    let mut data: Vec<SpectralField> = grid
        .times()
        .iter()
        .map(|t| phi_data(final_samples, m_n, *t, beta, t_final))
        .collect::<Result<_>>()?;
    if let Some(paths) = source_paths {
        let src = phi_source_path(paths, m_n, beta, grid)?;
        for (d, s) in data.iter_mut().zip(&src) {
            for (a, b) in d.coeffs_mut().iter_mut().zip(s.coeffs()) {
                *a -= b;
            }
        }
    }
    Ok(data)
}

/// Pseudospectral `F` coefficients on modes `0..=cap` along a path.
fn forcing_path(f: &Clamped, ps: &PseudoSpectral, states: &[SpectralField]) -> Vec<Vec<f64>> {
    states
        .iter()
        .map(|s| {
            if f.inner.is_zero() {
                vec![0.0; ps.cap() + 1]
            } else {
                ps.map(s, |u| f.eval(u)).into_coeffs()
            }
        })
        .collect()
}

/// `int_t^T e^{(s-t) l} v(s) ds` at every grid node, trapezoid rule.
fn backward_integral(grid: &TimeGrid, lambda: f64, values: impl Fn(usize) -> f64) -> Vec<f64> {
    let m = grid.steps();
    let mut out = vec![0.0; m + 1];
    let mut acc = 0.0;
    for j in (0..m).rev() {
        let h = grid.step(j);
        let e = exp(lambda * h);
        acc = e * acc + 0.5 * h * (values(j) + e * values(j + 1));
        out[j] = acc;
    }
    out
}

/// `int_0^t e^{(s-t) l} v(s) ds` at every grid node, trapezoid rule.
fn forward_integral(grid: &TimeGrid, lambda: f64, values: impl Fn(usize) -> f64) -> Vec<f64> {
    let m = grid.steps();
    let mut out = vec![0.0; m + 1];
    let mut acc = 0.0;
    for j in 0..m {
        let h = grid.step(j);
        let e = exp(-lambda * h);
        acc = e * acc + 0.5 * h * (e * values(j) + values(j + 1));
        out[j + 1] = acc;
    }
    out
}

/// Right-hand side of a truncation regularizer evaluated at `iterate`.
///
/// Modes `0..=M` get `data - int_t^T e^{(s-t) l_p} F_p(iterate) ds`; for the
/// second method modes `M < p <= cap` get `int_0^t e^{(s-t) l_p} F_p ds`.
#[derive(Debug, Clone)]
pub struct TruncationMap {
    method: Method,
    m_n: usize,
    cap: usize,
    beta: f64,
    grid: TimeGrid,
    data: Vec<SpectralField>,
    f: Clamped,
    ps: PseudoSpectral,
}

impl TruncationMap {
    pub fn first(
        data: Vec<SpectralField>,
        instance: &ProblemInstance,
        params: &TruncationParams,
        grid: &TimeGrid,
    ) -> Result<Self> {
        let m_n = params.m_n;
        let nodes = params.quad_nodes.unwrap_or((2 * m_n + 2).max(32));
        Ok(Self {
            method: Method::First,
            m_n,
            cap: m_n,
            beta: instance.beta,
            grid: grid.clone(),
            data: data.into_iter().map(|d| d.resized(m_n)).collect(),
            f: Clamped {
                inner: instance.nonlinearity,
                level: params.clamp,
            },
            ps: PseudoSpectral::new(m_n, nodes)?,
        })
    }

    pub fn second(
        data: Vec<SpectralField>,
        instance: &ProblemInstance,
        params: &TruncationParams,
        grid: &TimeGrid,
        cap: usize,
    ) -> Result<Self> {
        let nodes = params.quad_nodes.unwrap_or(2 * cap + 2);
        Ok(Self {
            method: Method::Second,
            m_n: params.m_n,
            cap,
            beta: instance.beta,
            grid: grid.clone(),
            data: data.into_iter().map(|d| d.resized(cap)).collect(),
            f: Clamped {
                inner: instance.nonlinearity,
                level: params.clamp,
            },
            ps: PseudoSpectral::new(cap, nodes)?,
        })
    }

    pub fn data(&self) -> &[SpectralField] {
        &self.data
    }

    pub fn apply(&self, iterate: &[SpectralField]) -> Vec<SpectralField> {
        let forcing = forcing_path(&self.f, &self.ps, iterate);
        let mut out = self.data.clone();
        for p in 0..=self.cap {
            let lambda = frac_eigenvalue(p, self.beta);
            if p <= self.m_n {
                let integral = backward_integral(&self.grid, lambda, |j| forcing[j][p]);
                for (state, v) in out.iter_mut().zip(integral) {
                    state.coeffs_mut()[p] -= v;
                }
            } else {
                let integral = forward_integral(&self.grid, lambda, |j| forcing[j][p]);
                for (state, v) in out.iter_mut().zip(integral) {
                    state.coeffs_mut()[p] += v;
                }
            }
        }
        out
    }

    /// Picard iteration from the data term.
    pub fn solve(&self, tol: f64, max_iters: usize) -> Result<RegularizedSolution> {
        let mut current = self.data.clone();
        let mut prev_inc = f64::NAN;
        let mut ratio = 0.0;
        for iter in 1..=max_iters {
            let next = self.apply(&current);
            let inc = next
                .iter()
                .zip(&current)
                .map(|(a, b)| a.l2_distance(b))
                .fold(0.0, f64::max);
            if !inc.is_finite() {
                return Err(Error::NonFinite("Picard iterate".into()));
            }
            if prev_inc > 0.0 {
                ratio = inc / prev_inc;
            }
            prev_inc = inc;
            current = next;
            if inc <= tol {
                return Ok(RegularizedSolution {
                    method: self.method,
                    grid: self.grid.clone(),
                    states: current,
                    diagnostics: PicardDiagnostics {
                        iterations: iter,
                        last_increment: inc,
                        contraction_ratio: ratio,
                    },
                });
            }
        }
        Err(Error::PicardDiverged {
            iterations: max_iters,
            last_increment: prev_inc,
            last_ratio: ratio,
        })
    }
}

fn require_unit_coefficient(instance: &ProblemInstance) -> Result<()> {
    if !instance.coefficient.is_identically_one() {
        return Err(Error::Precondition("truncation regularizers need a(t) = 1".into()));
    }
    Ok(())
}

/// First regularized solution on modes `0..=M`.
pub fn solve_first_regularizer(
    final_samples: &GridSamples,
    source_paths: Option<&[GridSamples]>,
    instance: &ProblemInstance,
    params: &TruncationParams,
    grid: &TimeGrid,
) -> Result<RegularizedSolution> {
    require_unit_coefficient(instance)?;
    params.validate(grid.t_final(), instance.beta)?;
    if final_samples.n() != params.n {
        return Err(Error::InvalidParameter("sample count differs from n".into()));
    }
    let data = first_data_term(final_samples, source_paths, params.m_n, instance.beta, grid)?;
    TruncationMap::first(data, instance, params, grid)?.solve(params.picard_tol, params.picard_max_iters)
}

/// Second regularized solution on modes `0..=cap`; requires `g = 0` and
/// `5 K T < 1`.
pub fn solve_second_regularizer(
    final_samples: &GridSamples,
    instance: &ProblemInstance,
    params: &TruncationParams,
    grid: &TimeGrid,
    cap: usize,
) -> Result<RegularizedSolution> {
    require_unit_coefficient(instance)?;
    params.validate(grid.t_final(), instance.beta)?;
    if !instance.source.is_zero() {
        return Err(Error::Precondition("the second regularizer assumes g = 0".into()));
    }
    let k = instance.nonlinearity.global_lipschitz().ok_or_else(|| {
        Error::Precondition("the second regularizer needs a globally Lipschitz F".into())
    })?;
    if !(5.0 * k * grid.t_final() < 1.0) {
        return Err(Error::Precondition(alloc::format!(
            "5 K T = {} is not below 1",
            5.0 * k * grid.t_final()
        )));
    }
    if cap < params.m_n {
        return Err(Error::InvalidParameter("cap must be at least M".into()));
    }
    let data = first_data_term(final_samples, None, params.m_n, instance.beta, grid)?;
    TruncationMap::second(data, instance, params, grid, cap)?.solve(params.picard_tol, params.picard_max_iters)
}

/// `C_1 = 2 sqrt(2/pi) E_1 / 4^beta zeta(2 beta)`.
pub fn c1_constant(beta: f64, e1: f64) -> f64 {
    2.0 * SQRT_2_OVER_PI * e1 / pow(4.0, beta) * zeta(2.0 * beta)
}

/// `C_2 = 2 sqrt(2/pi) E_2 / 2^gamma zeta(gamma)`.
pub fn c2_constant(gamma: f64, e2: f64) -> f64 {
    if e2 == 0.0 {
        return 0.0;
    }
    2.0 * SQRT_2_OVER_PI * e2 / pow(2.0, gamma) * zeta(gamma)
}

/// `C_3 = pi^2 V^2 + vartheta^2 (T + T^3) + C_1^2 + T^2 C_2^2`.
pub fn c3_constant(v_max: f64, vartheta: f64, t_final: f64, c1: f64, c2: f64) -> f64 {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    pi2 * v_max * v_max
        + vartheta * vartheta * (t_final + t_final * t_final * t_final)
        + c1 * c1
        + t_final * t_final * c2 * c2
}

/// Which smoothness budget drives the bias term of the first bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasBudget {
    /// `P~_1`.
    P1(f64),
    /// `M^{-2 beta alpha} P~_2`.
    P2 { alpha: f64, p2: f64 },
}

/// Inputs of the first-regularizer bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBoundInputs {
    pub c3: f64,
    pub lipschitz: f64,
    pub bias: BiasBudget,
}

/// `6 e^{-2 M^{2beta} t} [C_3 (M+1) e^{2 T M^{2beta}} / n + bias] e^{6 K (T-t)}`
/// at each time.
pub fn evaluate_truncation_bound(
    times: &[f64],
    params: &TruncationParams,
    beta: f64,
    t_final: f64,
    inputs: &TruncationBoundInputs,
) -> Result<Vec<f64>> {
    let mb = frac_eigenvalue(params.m_n, beta);
    guard_exponent(2.0 * t_final * mb)?;
    let bias = match inputs.bias {
        BiasBudget::P1(p1) => p1,
        BiasBudget::P2 { alpha, p2 } => pow(params.m_n as f64, -2.0 * beta * alpha) * p2,
    };
    let bracket = inputs.c3 * params.amplification_term(t_final, beta) + bias;
    let out: Vec<f64> = times
        .iter()
        .map(|t| 6.0 * exp(-2.0 * mb * t + 6.0 * inputs.lipschitz * (t_final - t)) * bracket)
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("truncation bound".into()));
    }
    Ok(out)
}

/// Second-regularizer bound
/// `e^{-2 M^{2beta} t} [(5 pi^2 V^2 + C_1^2)(M+1) e^{2TM^{2beta}}/n
/// + 5 M^{-2 beta gamma} ||u(0)||^2_{H^gamma}] / (1 - 5 K T)`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_second_bound(
    times: &[f64],
    params: &TruncationParams,
    beta: f64,
    t_final: f64,
    v_max: f64,
    c1: f64,
    lipschitz: f64,
    gamma: f64,
    u0_sobolev_sq: f64,
) -> Result<Vec<f64>> {
    let denom = 1.0 - 5.0 * lipschitz * t_final;
    if !(denom > 0.0) {
        return Err(Error::Precondition("5 K T must be below 1".into()));
    }
    let mb = frac_eigenvalue(params.m_n, beta);
    guard_exponent(2.0 * t_final * mb)?;
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    let bracket = (5.0 * pi2 * v_max * v_max + c1 * c1) * params.amplification_term(t_final, beta)
        + 5.0 * pow(params.m_n as f64, -2.0 * beta * gamma) * u0_sobolev_sq;
    Ok(times.iter().map(|t| exp(-2.0 * mb * t) * bracket / denom).collect())
}

/// Step-one variance bound of `Phi` at time `t` for pure noise:
/// `pi^2 V^2 sum_{p=0}^{M} e^{2 (T-t) p^{2beta}} / n`.
pub fn noise_variance_bound(params: &TruncationParams, beta: f64, t_final: f64, t: f64, v_max: f64) -> f64 {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    let s: f64 = (0..=params.m_n)
        .map(|p| exp(2.0 * (t_final - t) * frac_eigenvalue(p, beta)))
        .sum();
    pi2 * v_max * v_max * s / params.n as f64
}

/// `||v||_{L2}` restricted to modes above `m`.
pub fn tail_norm(field: &SpectralField, m: usize) -> f64 {
    sqrt(field.coeffs().iter().skip(m + 1).map(|c| c * c).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{forward_solve, Integrator};
    use crate::problem::{Nonlinearity, Source};
    use crate::spectral::synthesize;
    use approx::assert_abs_diff_eq;
    use libm::exp;

    fn unit(f: Nonlinearity, t: f64, u0: SpectralField) -> ProblemInstance {
        ProblemInstance::unit_coefficient(1.0, t, f, Source::zero(), u0)
    }

    #[test]
    fn cutoff_rule() {
        assert_eq!(choose_m_n(100, 0.9, 0.1, 0.5).unwrap(), 20);
        assert_eq!(choose_m_n(1000, 0.5, 1.0, 1.0).unwrap(), 1);
        assert_eq!(choose_m_n(1000, 1e-9, 1.0, 1.0).unwrap(), 1);
        assert!(choose_m_n(2, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn phi_data_examples() {
        let u = synthesize(&SpectralField::mode(2, 1.0, 2), 8).unwrap();
        let f = phi_data(&u, 4, 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(f.get(2), exp(4.0), epsilon = 1e-11);
        // rounding in the raw coefficient is amplified by up to e^16
        for p in [1, 3, 4] {
            assert_abs_diff_eq!(f.get(p), 0.0, epsilon = 1e-8);
        }
        let at_t = phi_data(&u, 4, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(at_t, project_samples(&u, 4).unwrap());
        let z = phi_data(&GridSamples::new(vec![0.0; 8]).unwrap(), 4, 0.3, 1.0, 1.0).unwrap();
        assert!(z.coeffs().iter().all(|c| *c == 0.0));
        assert!(matches!(phi_data(&u, 7, 0.0, 1.0, 20.0), Err(Error::Overflow { .. })));
    }

    #[test]
    fn phi_source_examples() {
        let grid = TimeGrid::uniform(1.0, 1000).unwrap();
        let g = synthesize(&SpectralField::mode(1, 1.0, 1), 8).unwrap();
        let paths = vec![g.clone(); grid.len()];
        let f = phi_source(&paths, 4, 0.0, 1.0, &grid).unwrap();
        assert_abs_diff_eq!(f.get(1), exp(1.0) - 1.0, epsilon = 1e-4);
        let at_t = phi_source(&paths, 4, 1.0, 1.0, &grid).unwrap();
        assert!(at_t.coeffs()[1..].iter().all(|c| *c == 0.0));
        assert_abs_diff_eq!(at_t.get(0), 0.0, epsilon = 1e-15);
        assert!(phi_source(&paths, 4, 0.00005, 1.0, &grid).is_err());
    }

    #[test]
    fn zero_nonlinearity_is_one_sweep() {
        let grid = TimeGrid::uniform(0.5, 20).unwrap();
        let u = synthesize(&SpectralField::mode(2, 0.7, 2), 16).unwrap();
        let inst = unit(Nonlinearity::Zero, 0.5, SpectralField::zeros(2));
        let sol = solve_first_regularizer(&u, None, &inst, &TruncationParams::new(3, 16), &grid).unwrap();
        assert_eq!(sol.diagnostics.iterations, 1);
        for (state, t) in sol.states.iter().zip(grid.times()) {
            assert_eq!(state, &phi_data(&u, 3, *t, 1.0, 0.5).unwrap());
        }
    }

    #[test]
    fn noise_free_sine_recovery() {
        let t_final = 0.3;
        let inst = unit(Nonlinearity::Sine { scale: 1.0 }, t_final, SpectralField::mode(1, 1.0, 1));
        let cap = 24;
        let grid = TimeGrid::uniform(t_final, 600).unwrap();
        let truth = forward_solve(&inst, &grid, cap, Integrator::ExpHeun).unwrap();
        let samples = synthesize(truth.final_state(), 64).unwrap();
        let sol = solve_first_regularizer(&samples, None, &inst, &TruncationParams::new(3, 64), &grid).unwrap();
        let err = sol.states[0].l2_distance(truth.initial_state());
        let tail = tail_norm(truth.initial_state(), 3);
        assert!(err <= tail + 1e-3, "error {err} tail {tail}");
        assert!(sol.diagnostics.contraction_ratio <= 0.9);
    }

    #[test]
    fn second_regularizer_preconditions() {
        let grid = TimeGrid::uniform(0.3, 10).unwrap();
        let u = GridSamples::new(vec![0.0; 16]).unwrap();
        let inst = unit(Nonlinearity::Sine { scale: 1.0 }, 0.3, SpectralField::zeros(1));
        let err = solve_second_regularizer(&u, &inst, &TruncationParams::new(3, 16), &grid, 8);
        assert!(matches!(err, Err(Error::Precondition(_))));
        let mut with_g = unit(Nonlinearity::Zero, 0.3, SpectralField::zeros(1));
        with_g.source.spatial = SpectralField::mode(1, 1.0, 1);
        let err = solve_second_regularizer(&u, &with_g, &TruncationParams::new(3, 16), &grid, 8);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn second_regularizer_tail_starts_at_zero() {
        let t_final = 0.15;
        let inst = unit(Nonlinearity::Sine { scale: 1.0 }, t_final, SpectralField::mode(1, 1.0, 1));
        let grid = TimeGrid::uniform(t_final, 200).unwrap();
        let truth = forward_solve(&inst, &grid, 16, Integrator::ExpHeun).unwrap();
        let samples = synthesize(truth.final_state(), 64).unwrap();
        let sol = solve_second_regularizer(&samples, &inst, &TruncationParams::new(3, 64), &grid, 16).unwrap();
        assert!(sol.states[0].coeffs()[4..].iter().all(|c| *c == 0.0));
        assert!(sol.states[100].coeffs()[4..].iter().any(|c| *c != 0.0));

        let linear = unit(Nonlinearity::Zero, t_final, SpectralField::zeros(1));
        let sol = solve_second_regularizer(&samples, &linear, &TruncationParams::new(3, 64), &grid, 16).unwrap();
        for s in &sol.states {
            assert!(s.coeffs()[4..].iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn bound_monotone_in_n() {
        let times = [0.0, 0.5, 1.0];
        let inputs = TruncationBoundInputs {
            c3: 2.0,
            lipschitz: 1.0,
            bias: BiasBudget::P1(1.0),
        };
        let a = evaluate_truncation_bound(&times, &TruncationParams::new(2, 100), 1.0, 1.0, &inputs).unwrap();
        let b = evaluate_truncation_bound(&times, &TruncationParams::new(2, 1000), 1.0, 1.0, &inputs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y <= x);
        }
        // t = T: the Lipschitz factor is 1
        let expected = 6.0 * exp(-8.0) * (2.0 * 3.0 * exp(8.0) / 100.0 + 1.0);
        assert_abs_diff_eq!(a[2], expected, epsilon = 1e-12);
    }

    #[test]
    fn constants() {
        let pi = core::f64::consts::PI;
        assert_abs_diff_eq!(
            c1_constant(1.0, 1.0),
            2.0 * sqrt(2.0 / pi) / 4.0 * pi * pi / 6.0,
            epsilon = 1e-12
        );
        assert_eq!(c2_constant(2.0, 0.0), 0.0);
        assert_abs_diff_eq!(c3_constant(1.0, 0.0, 1.0, 0.0, 0.0), pi * pi, epsilon = 1e-12);
    }
}
