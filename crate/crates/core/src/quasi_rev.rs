//! Quasi-reversibility regularizer for a noisy time-dependent coefficient.
//!
//! Solves `W_t + abar(t) A^beta W - a0 Rbar W = Fbar_Q(W) + gbar`,
//! `W(T) = wbar`, where `Rbar` keeps the modes `p >= p* = M a0^{-1/(2beta)}`.
//! Head modes (`p < p*`) follow the true backward dynamics with generator
//! `abar p^{2beta}`; tail modes see `(abar - a0) p^{2beta} <= 0` and stay
//! bounded.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, pow};

use crate::bounds::zeta;
use crate::error::{guard_exponent, Error, Result};
use crate::grid::TimeGrid;
use crate::problem::{Clamped, Nonlinearity, ProblemInstance};
use crate::spectral::{frac_eigenvalue, project_samples, GridSamples, PseudoSpectral, SpectralField};
use crate::truncation::PicardDiagnostics;

/// Cutoff, clamp and coefficient data of one QR solve.
#[derive(Debug, Clone, PartialEq)]
pub struct QRParams {
    pub m_n: usize,
    pub n: usize,
    /// Clamp level; infinite disables clamping.
    pub q_n: f64,
    pub a0: f64,
    /// Realized `min_t (a0 - abar(t))`; only used by the H^beta bound.
    pub b0: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Pseudospectral nodes for `F`; default `2 cap + 2`.
    pub quad_nodes: Option<usize>,
    threshold: f64,
}

impl QRParams {
    pub fn new(m_n: usize, n: usize, a0: f64, beta: f64) -> Result<Self> {
        if m_n == 0 || m_n >= n {
            return Err(Error::InvalidParameter(alloc::format!(
                "cutoff M = {m_n} must satisfy 0 < M < n = {n}"
            )));
        }
        if !(a0 > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter("a0 and beta must be positive".into()));
        }
        Ok(Self {
            m_n,
            n,
            q_n: f64::INFINITY,
            a0,
            b0: f64::NAN,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            quad_nodes: None,
            threshold: m_n as f64 * pow(a0, -1.0 / (2.0 * beta)),
        })
    }

    /// `p* = M a0^{-1/(2 beta)}`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn is_head(&self, p: usize) -> bool {
        (p as f64) < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Head,
    Tail,
}

/// `Pbar v = a0 sum_{p<p*} p^{2beta} v_p phi_p` or
/// `Rbar v = sum_{p>=p*} p^{2beta} v_p phi_p`.
pub fn head_tail_apply(field: &SpectralField, which: Part, params: &QRParams, beta: f64) -> SpectralField {
    let coeffs = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(p, c)| match (which, params.is_head(p)) {
            (Part::Head, true) => params.a0 * frac_eigenvalue(p, beta) * c,
            (Part::Tail, false) => frac_eigenvalue(p, beta) * c,
            _ => 0.0,
        })
        .collect();
    SpectralField::new(coeffs).expect("finite multiplier of a finite field")
}

/// `wbar`: discrete projection of the final samples onto modes `0..=M`.
pub fn data_approx_final(samples: &GridSamples, m_n: usize) -> Result<SpectralField> {
    project_samples(samples, m_n)
}

/// `gbar(t_j)` for every grid time, no time integral.
pub fn data_approx_source(paths: &[GridSamples], m_n: usize) -> Result<Vec<SpectralField>> {
    paths.iter().map(|s| project_samples(s, m_n)).collect()
}

/// Regularized path on the grid, `W(t_j)` in `states[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QRSolution {
    pub grid: TimeGrid,
    pub states: Vec<SpectralField>,
    /// Root of `e^{-t M^beta} = t` when `M^beta > log(1/T)/T`.
    pub t_n: Option<f64>,
    pub diagnostics: PicardDiagnostics,
}

impl QRSolution {
    /// `W(t_n)` when `t_n` is defined; the grid node nearest to it.
    pub fn at_t_n(&self) -> Option<&SpectralField> {
        self.t_n.map(|t| &self.states[self.grid.nearest_index(t)])
    }
}

/// Right-hand side of the time-reversed mild equation; see [`solve_qr_from_terminal`].
#[derive(Debug, Clone)]
pub struct QRMap {
    grid: TimeGrid,
    terminal: SpectralField,
    source: Vec<SpectralField>,
    /// `exp(int_{t_j}^{t_{j+1}} kappa_p)` per step and mode.
    factors: Vec<Vec<f64>>,
    f: Clamped,
    ps: PseudoSpectral,
}

impl QRMap {
    pub fn new(
        terminal: &SpectralField,
        source: &[SpectralField],
        abar: &[f64],
        nonlinearity: Nonlinearity,
        params: &QRParams,
        beta: f64,
        grid: &TimeGrid,
        cap: usize,
    ) -> Result<Self> {
        if abar.len() != grid.len() || (!source.is_empty() && source.len() != grid.len()) {
            return Err(Error::InvalidParameter("coefficient and source paths must match the grid".into()));
        }
        if cap < params.m_n {
            return Err(Error::InvalidParameter("cap must be at least M".into()));
        }
        if !(params.q_n > 0.0) {
            return Err(Error::InvalidParameter("clamp level must be positive".into()));
        }
        guard_exponent(grid.t_final() * frac_eigenvalue(params.m_n, beta))?;
        let factors = (0..grid.steps())
            .map(|j| {
                let abar_int = 0.5 * grid.step(j) * (abar[j] + abar[j + 1]);
                (0..=cap)
                    .map(|p| {
                        let lambda = frac_eigenvalue(p, beta);
                        let k = if params.is_head(p) {
                            abar_int * lambda
                        } else {
                            (abar_int - params.a0 * grid.step(j)) * lambda
                        };
                        exp(k)
                    })
                    .collect()
            })
            .collect();
        let nodes = params.quad_nodes.unwrap_or(2 * cap + 2);
        Ok(Self {
            grid: grid.clone(),
            terminal: terminal.resized(cap),
            source: source.iter().map(|s| s.resized(cap)).collect(),
            factors,
            f: Clamped {
                inner: nonlinearity,
                level: params.q_n,
            },
            ps: PseudoSpectral::new(cap, nodes)?,
        })
    }

    pub fn cap(&self) -> usize {
        self.terminal.cap()
    }

    /// Path with every state equal to the terminal field propagated with
    /// zero forcing.
    pub fn linear_path(&self) -> Vec<SpectralField> {
        self.sweep(|_, _| 0.0)
    }

    fn sweep(&self, forcing: impl Fn(usize, usize) -> f64) -> Vec<SpectralField> {
        let m = self.grid.steps();
        let cap = self.cap();
        let mut out = vec![SpectralField::zeros(cap); m + 1];
        out[m] = self.terminal.clone();
        for j in (0..m).rev() {
            let h = self.grid.step(j);
            let mut next = vec![0.0; cap + 1];
            for (p, slot) in next.iter_mut().enumerate() {
                let e = self.factors[j][p];
                *slot = e * out[j + 1].get(p) - 0.5 * h * (e * forcing(j + 1, p) + forcing(j, p));
            }
            out[j] = SpectralField::from_raw(next);
        }
        out
    }

    /// Trapezoid form of
    /// `W_p(t) = e^{int_t^T kappa_p} wbar_p - int_t^T e^{int_t^s kappa_p} (Fbar_p(W) + gbar_p)(s) ds`.
    pub fn apply(&self, iterate: &[SpectralField]) -> Vec<SpectralField> {
        let cap = self.cap();
        let forcing: Vec<Vec<f64>> = iterate
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let mut v = if self.f.inner.is_zero() {
                    vec![0.0; cap + 1]
                } else {
                    self.ps.map(s, |u| self.f.eval(u)).into_coeffs()
                };
                if let Some(g) = self.source.get(j) {
                    for (a, b) in v.iter_mut().zip(g.coeffs()) {
                        *a += b;
                    }
                }
                v
            })
            .collect();
        self.sweep(|j, p| forcing[j][p])
    }

    pub fn solve(&self, tol: f64, max_iters: usize) -> Result<(Vec<SpectralField>, PicardDiagnostics)> {
        let mut current = self.linear_path();
        if current.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("quasi-reversibility terminal propagation".into()));
        }
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
                return Err(Error::NonFinite("quasi-reversibility Picard iterate".into()));
            }
            if prev_inc > 0.0 {
                ratio = inc / prev_inc;
            }
            prev_inc = inc;
            current = next;
            if inc <= tol {
                return Ok((
                    current,
                    PicardDiagnostics {
                        iterations: iter,
                        last_increment: inc,
                        contraction_ratio: ratio,
                    },
                ));
            }
        }
        Err(Error::PicardDiverged {
            iterations: max_iters,
            last_increment: prev_inc,
            last_ratio: ratio,
        })
    }
}

/// Solve from an explicit terminal field and source path (modes beyond the
/// data cutoff are allowed in `terminal`).
#[allow(clippy::too_many_arguments)]
pub fn solve_qr_from_terminal(
    terminal: &SpectralField,
    source: &[SpectralField],
    abar: &[f64],
    instance: &ProblemInstance,
    params: &QRParams,
    grid: &TimeGrid,
    cap: usize,
) -> Result<QRSolution> {
    let map = QRMap::new(terminal, source, abar, instance.nonlinearity, params, instance.beta, grid, cap)?;
    let (states, diagnostics) = map.solve(params.picard_tol, params.picard_max_iters)?;
    Ok(QRSolution {
        grid: grid.clone(),
        states,
        t_n: solve_t_n(params.m_n, instance.beta, grid.t_final()).ok(),
        diagnostics,
    })
}

/// Solve from noisy observations: `wbar`, `gbar` and `abar` come from `data`.
pub fn solve_qr(
    final_samples: &GridSamples,
    source_paths: Option<&[GridSamples]>,
    abar: &[f64],
    instance: &ProblemInstance,
    params: &QRParams,
    grid: &TimeGrid,
    cap: usize,
) -> Result<QRSolution> {
    if final_samples.n() != params.n {
        return Err(Error::InvalidParameter("sample count differs from n".into()));
    }
    let terminal = data_approx_final(final_samples, params.m_n)?;
    let source = match source_paths {
        Some(paths) => data_approx_source(paths, params.m_n)?,
        None => Vec::new(),
    };
    solve_qr_from_terminal(&terminal, &source, abar, instance, params, grid, cap)
}

/// Root of `e^{-t r} = t` on `(0, T)` for `r = M^beta`.
pub fn t_n_root(rate: f64, t_final: f64) -> Result<f64> {
    let phi = |t: f64| exp(-t * rate) - t;
    if !(phi(t_final) < 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "M^beta = {rate} does not exceed log(1/T)/T"
        )));
    }
    let (mut lo, mut hi) = (0.0, t_final);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `t_n` with `e^{-t_n M^beta} = t_n`; requires `M^beta > log(1/T)/T`.
pub fn solve_t_n(m_n: usize, beta: f64, t_final: f64) -> Result<f64> {
    t_n_root(pow(m_n as f64, beta), t_final)
}

/// Grid with `t_n` inserted as a node, when it is defined.
pub fn grid_with_t_n(grid: &TimeGrid, m_n: usize, beta: f64) -> TimeGrid {
    match solve_t_n(m_n, beta, grid.t_final()) {
        Ok(t) => grid.with_point(t).unwrap_or_else(|_| grid.clone()),
        Err(_) => grid.clone(),
    }
}

/// Outcome of the clamp-level rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnChoice {
    /// Clamp level; infinite when the profile stays within budget.
    pub q_n: f64,
    pub budget: f64,
    /// False when even `Q -> 0+` exceeds the budget; `q_n` is then the end of
    /// the profile's minimal plateau.
    pub within_budget: bool,
}

const Q_LOW: f64 = 1e-12;
const Q_HIGH: f64 = 1e15;

/// Largest `Q` with `K(Q) <= target` for a nondecreasing profile.
fn largest_q_below(profile: &impl Fn(f64) -> f64, target: f64) -> f64 {
    if profile(Q_HIGH) <= target {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (Q_LOW, 1.0);
    while profile(hi) <= target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if profile(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    lo
}

/// Largest `Q` with `K(Q) <= log(log n) / (2T)`.
pub fn choose_q_n(n: usize, t_final: f64, profile: impl Fn(f64) -> f64) -> Result<QnChoice> {
    if n < 3 {
        return Err(Error::InvalidParameter("the clamp rule needs n >= 3".into()));
    }
    let budget = log(log(n as f64)) / (2.0 * t_final);
    let floor = profile(Q_LOW);
    if floor > budget {
        return Ok(QnChoice {
            q_n: largest_q_below(&profile, floor * (1.0 + 1e-12)),
            budget,
            within_budget: false,
        });
    }
    Ok(QnChoice {
        q_n: largest_q_below(&profile, budget),
        budget,
        within_budget: true,
    })
}

/// `K(Q_n)` of a catalog nonlinearity.
pub fn lipschitz_at(f: Nonlinearity, q_n: f64) -> f64 {
    if q_n.is_finite() {
        f.local_lipschitz(q_n)
    } else {
        f.global_lipschitz().unwrap_or(f64::INFINITY)
    }
}

/// `max(2/4^delta, sqrt(2)/(sqrt(pi) 2^delta)) zeta(delta) norm`.
pub fn aliasing_constant(delta: f64, sobolev_norm: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let lead = (2.0 / pow(4.0, delta)).max(libm::sqrt(2.0 / pi) / pow(2.0, delta));
    lead * zeta(delta) * sobolev_norm
}

/// Smoothness data entering the QR error functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRBoundInputs {
    pub v_max: f64,
    pub vartheta: f64,
    pub eps: f64,
    /// `Cbar(delta, u)`.
    pub c_bar: f64,
    /// `Dbar(delta, g)`.
    pub d_bar: f64,
    /// `sup_t ||u||^2_{H^{2beta}}`.
    pub u_h2beta_sq: f64,
    /// `||u_T||^2` in the Gevrey-type space.
    pub u_t_gevrey_sq: f64,
    /// `sup_t ||g||^2` in the Gevrey-type space.
    pub g_gevrey_sq: f64,
    /// `sup_t ||u||^2` in the Gevrey-type space.
    pub u_gevrey_sq: f64,
    /// `K(Q_n)`.
    pub lipschitz: f64,
    /// `sup_t ||du/dt||^2_{L2}`.
    pub du_dt_sq: f64,
}

/// Evaluated QR functionals and bounds on a set of times.
#[derive(Debug, Clone, PartialEq)]
pub struct QRBounds {
    /// L2 functional `Phi`.
    pub phi: f64,
    /// H^beta functional `Pi`; `None` when `b0 <= 0`.
    pub pi: Option<f64>,
    /// `e^{(2K+4)T} e^{-2 t M^beta} Phi`.
    pub l2: Vec<f64>,
    /// `e^{-2 M^{2beta} t} exp(8/b0 K^2 (T-t)) Pi`.
    pub h_beta: Option<Vec<f64>>,
    /// `2 Phi e^{(2K+4)T} / M^beta + 2 ||du/dt||^2 / M^beta`.
    pub at_t_n: f64,
}

pub fn evaluate_qr_bounds(
    times: &[f64],
    params: &QRParams,
    beta: f64,
    t_final: f64,
    inputs: &QRBoundInputs,
) -> Result<QRBounds> {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    let m = params.m_n as f64;
    let m2b = frac_eigenvalue(params.m_n, beta);
    let mb = pow(m, beta);
    guard_exponent(2.0 * t_final * m2b)?;
    let growth = exp(2.0 * t_final * m2b);
    let t = t_final;
    let n = params.n as f64;
    let a0 = params.a0;
    let i = inputs;

    let phi = (pi2 * i.v_max * i.v_max + i.c_bar * i.c_bar + pi2 * t * t * t * i.vartheta * i.vartheta
        + t * i.d_bar * i.d_bar)
        * (m + 1.0)
        * growth
        / n
        + i.eps * i.eps * growth * t * t * i.u_h2beta_sq
        + i.u_t_gevrey_sq
        + t * i.g_gevrey_sq
        + t * a0 * a0 * i.u_gevrey_sq;
    if !phi.is_finite() {
        return Err(Error::NonFinite("L2 functional".into()));
    }
    let lead = exp((2.0 * i.lipschitz + 4.0) * t);
    let l2 = times.iter().map(|s| lead * exp(-2.0 * s * mb) * phi).collect();

    let (pi_value, h_beta) = if params.b0 > 0.0 {
        let w = 8.0 / params.b0;
        let pi_value = (pi2 * i.v_max * i.v_max + i.c_bar * i.c_bar + w * pi2 * t * t * t * i.vartheta * i.vartheta
            + w * t * i.d_bar * i.d_bar)
            * (pow(m, 2.0 * beta + 1.0) + m2b)
            * growth
            / n
            + 4.0 * growth * i.eps * i.eps * t * t / params.b0 * i.u_h2beta_sq
            + i.u_t_gevrey_sq
            + w * t * i.g_gevrey_sq
            + w * t * a0 * a0 * i.u_gevrey_sq;
        let bound = times
            .iter()
            .map(|s| exp(-2.0 * m2b * s + w * i.lipschitz * i.lipschitz * (t - s)) * pi_value)
            .collect();
        (Some(pi_value), Some(bound))
    } else {
        (None, None)
    };
    let at_t_n = 2.0 * phi * lead / mb + 2.0 * i.du_dt_sq / mb;
    Ok(QRBounds {
        phi,
        pi: pi_value,
        l2,
        h_beta,
        at_t_n,
    })
}

/// `(pi^2 V^2 + Cbar^2)(M+1)/n + e^{-2TM^{2beta}} ||u_T||^2_V`.
pub fn final_data_bound(params: &QRParams, beta: f64, t_final: f64, v_max: f64, c_bar: f64, u_t_gevrey_sq: f64) -> f64 {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    (pi2 * v_max * v_max + c_bar * c_bar) * (params.m_n as f64 + 1.0) / params.n as f64
        + exp(-2.0 * t_final * frac_eigenvalue(params.m_n, beta)) * u_t_gevrey_sq
}

/// `(pi^2 T vartheta^2 + Dbar^2)(M+1)/n + e^{-2TM^{2beta}} sup ||g||^2_V`.
pub fn source_data_bound(params: &QRParams, beta: f64, t_final: f64, vartheta: f64, d_bar: f64, g_gevrey_sq: f64) -> f64 {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    (pi2 * t_final * vartheta * vartheta + d_bar * d_bar) * (params.m_n as f64 + 1.0) / params.n as f64
        + exp(-2.0 * t_final * frac_eigenvalue(params.m_n, beta)) * g_gevrey_sq
}

/// `||W(t_n) - u_0||_{L2}`.
pub fn qr_error_at_zero(solution: &QRSolution, u0: &SpectralField) -> Result<f64> {
    let w = solution
        .at_t_n()
        .ok_or_else(|| Error::Precondition("t_n is not defined for these parameters".into()))?;
    Ok(w.l2_distance(u0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Coefficient, Source};
    use crate::spectral::synthesize;
    use approx::assert_abs_diff_eq;

    fn linear_instance(a: f64, a0: f64, t: f64) -> ProblemInstance {
        ProblemInstance {
            beta: 1.0,
            t_final: t,
            coefficient: Coefficient::Constant(a),
            a0,
            nonlinearity: Nonlinearity::Zero,
            source: Source::zero(),
            initial: SpectralField::zeros(0),
        }
    }

    #[test]
    fn head_tail_examples() {
        let params = QRParams::new(3, 16, 1.0, 1.0).unwrap();
        let v2 = SpectralField::mode(2, 1.0, 6);
        assert_eq!(head_tail_apply(&v2, Part::Tail, &params, 1.0), SpectralField::zeros(6));
        assert_eq!(head_tail_apply(&v2, Part::Head, &params, 1.0).get(2), 4.0);
        let v5 = SpectralField::mode(5, 1.0, 6);
        assert_eq!(head_tail_apply(&v5, Part::Tail, &params, 1.0).get(5), 25.0);
        assert_eq!(head_tail_apply(&v5, Part::Head, &params, 1.0), SpectralField::zeros(6));

        let wide = QRParams::new(3, 16, 4.0, 0.5).unwrap();
        assert_abs_diff_eq!(wide.threshold(), 0.75, epsilon = 1e-15);
        assert!((1..10).all(|p| !wide.is_head(p)));
    }

    #[test]
    fn t_n_examples() {
        let t = t_n_root(10.0, 1.0).unwrap();
        assert_abs_diff_eq!(t, 0.174_55, epsilon = 1e-5);
        assert!((exp(-10.0 * t) - t).abs() <= 1e-12);
        assert!(t <= 1.0 / libm::sqrt(10.0));
        assert_abs_diff_eq!(solve_t_n(1, 1.0, 1.0).unwrap(), 0.567_143_290_409_784, epsilon = 1e-12);
        assert!(matches!(t_n_root(1.0, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn q_n_examples() {
        let q = choose_q_n(1_000_000, 1.0, |q| q).unwrap();
        assert_abs_diff_eq!(q.q_n, 0.5 * log(log(1e6)), epsilon = 1e-9);
        assert_abs_diff_eq!(q.q_n, 1.3129, epsilon = 1e-4);
        let sine = choose_q_n(1_000_000, 1.0, |q| lipschitz_at(Nonlinearity::Sine { scale: 1.0 }, q)).unwrap();
        assert!(sine.q_n.is_infinite() && sine.within_budget);
        let cubic = choose_q_n(1_000_000, 0.1, |q| Nonlinearity::Cubic.local_lipschitz(q)).unwrap();
        assert_abs_diff_eq!(cubic.q_n, 2.1702, epsilon = 1e-4);
        let tight = choose_q_n(10, 10.0, |q| Nonlinearity::Cubic.local_lipschitz(q)).unwrap();
        assert!(!tight.within_budget);
        assert_abs_diff_eq!(tight.q_n, libm::sqrt(2.0 / 3.0), epsilon = 1e-9);
    }

    #[test]
    fn closed_form_head_and_tail() {
        let t_final = 1.0;
        let grid = TimeGrid::uniform(t_final, 1000).unwrap();
        let inst = linear_instance(1.0, 2.0, t_final);
        let params = QRParams::new(3, 16, 2.0, 1.0).unwrap();
        let terminal = SpectralField::new(vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let abar = vec![1.0; grid.len()];
        let sol = solve_qr_from_terminal(&terminal, &[], &abar, &inst, &params, &grid, 5).unwrap();
        assert_abs_diff_eq!(sol.states[0].get(1), exp(1.0), epsilon = 1e-9);
        assert_abs_diff_eq!(sol.states[0].get(5), exp(-25.0), epsilon = 1e-9);
        for (state, t) in sol.states.iter().zip(grid.times()) {
            assert_abs_diff_eq!(state.get(1), exp(1.0 - t), epsilon = 1e-9 * exp(1.0));
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let grid = TimeGrid::uniform(0.5, 50).unwrap();
        let mut inst = linear_instance(1.0, 1.5, 0.5);
        inst.nonlinearity = Nonlinearity::Sine { scale: 1.0 };
        let params = QRParams::new(3, 16, 1.5, 1.0).unwrap();
        let samples = GridSamples::new(vec![0.0; 16]).unwrap();
        let sol = solve_qr(&samples, None, &vec![1.0; grid.len()], &inst, &params, &grid, 8).unwrap();
        assert!(sol.states.iter().all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn data_approximations() {
        let u = synthesize(&SpectralField::mode(2, 1.0, 2), 8).unwrap();
        let w = data_approx_final(&u, 4).unwrap();
        assert_abs_diff_eq!(w.get(2), 1.0, epsilon = 1e-13);
        for p in [1, 3, 4] {
            assert_abs_diff_eq!(w.get(p), 0.0, epsilon = 1e-13);
        }
        let g = synthesize(&SpectralField::mode(1, 1.0, 1), 8).unwrap();
        let path = data_approx_source(&vec![g; 4], 4).unwrap();
        for s in &path {
            assert_abs_diff_eq!(s.get(1), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn c_bar_example() {
        let pi = core::f64::consts::PI;
        assert_abs_diff_eq!(
            aliasing_constant(2.0, 16.0),
            (2.0_f64 / 16.0).max(libm::sqrt(2.0) / (libm::sqrt(pi) * 4.0)) * pi * pi / 6.0 * 16.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(aliasing_constant(2.0, 16.0), 5.2499, epsilon = 1e-4);
    }

    #[test]
    fn functionals_decrease_in_n() {
        let inputs = QRBoundInputs {
            v_max: 0.2,
            vartheta: 0.1,
            eps: 0.01,
            c_bar: 1.0,
            d_bar: 0.5,
            u_h2beta_sq: 3.0,
            u_t_gevrey_sq: 2.0,
            g_gevrey_sq: 1.0,
            u_gevrey_sq: 4.0,
            lipschitz: 1.0,
            du_dt_sq: 5.0,
        };
        let mut small = QRParams::new(3, 64, 2.0, 1.0).unwrap();
        small.b0 = 0.5;
        let mut large = small.clone();
        large.n = 1024;
        let times = [0.0, 0.25, 0.5];
        let a = evaluate_qr_bounds(&times, &small, 1.0, 0.5, &inputs).unwrap();
        let b = evaluate_qr_bounds(&times, &large, 1.0, 0.5, &inputs).unwrap();
        assert!(b.phi <= a.phi);
        assert!(b.pi.unwrap() <= a.pi.unwrap());
        // t = T: the time factor is exp(-2 T M^beta)
        assert_abs_diff_eq!(a.l2[2], exp(6.0 * 0.5) * exp(-2.0 * 0.5 * 3.0) * a.phi, epsilon = 1e-12 * a.l2[2]);
        small.b0 = -0.1;
        assert!(evaluate_qr_bounds(&times, &small, 1.0, 0.5, &inputs).unwrap().h_beta.is_none());
    }
}
