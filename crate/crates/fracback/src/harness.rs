//! Monte Carlo trials, MISE estimation, rate sweeps and bound comparison.

use rayon::prelude::*;
use serde::Serialize;

use fracback_core::bounds::{
    e1_constant, e_constant, gevrey_budget, p1_budget, p2_budget, sobolev_budget, source_budget,
    time_derivative_sup, Budget,
};
use fracback_core::noise::{observe_coefficient, observe_final, observe_source};
use fracback_core::quasi_rev::{
    aliasing_constant, choose_q_n, evaluate_qr_bounds, lipschitz_at, solve_qr, solve_t_n, QRBoundInputs,
    QRParams,
};
use fracback_core::spectral::{norm, norm_squared, synthesize};
use fracback_core::truncation::{
    c1_constant, c2_constant, c3_constant, choose_m_n, evaluate_second_bound, evaluate_truncation_bound,
    solve_first_regularizer, solve_second_regularizer, BiasBudget, TruncationBoundInputs, TruncationParams,
};
use fracback_core::{
    forward_solve, GridSamples, Integrator, NoiseSpec, NormSpec, ProblemInstance, SpectralField, TimeGrid, Trajectory,
};

use crate::config::{ClampSetting, ExperimentConfig, MethodKind};
use crate::error::{Context, HarnessError, Result};

pub fn instance_of(cfg: &ExperimentConfig) -> ProblemInstance {
    let p = &cfg.problem;
    ProblemInstance {
        beta: p.beta,
        t_final: p.t_final,
        coefficient: p.coefficient,
        a0: p.a0,
        nonlinearity: p.nonlinearity,
        source: p.source.clone(),
        initial: p.initial.clone(),
    }
}

/// Regularizer settings resolved for one sample count.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodParams {
    First(TruncationParams),
    Second { params: TruncationParams, cap: usize },
    Qr { params: QRParams, cap: usize },
}

impl MethodParams {
    pub fn m_n(&self) -> usize {
        match self {
            MethodParams::First(p) | MethodParams::Second { params: p, .. } => p.m_n,
            MethodParams::Qr { params, .. } => params.m_n,
        }
    }
}

/// Trial-independent data for one sample count: the reference solution on
/// the regularizer grid and its node samples.
#[derive(Debug, Clone)]
pub struct Setup {
    pub method: MethodKind,
    pub instance: ProblemInstance,
    pub n: usize,
    pub grid: TimeGrid,
    pub truth: Trajectory,
    pub final_samples: GridSamples,
    pub source_samples: Option<Vec<GridSamples>>,
    pub a_samples: Vec<f64>,
    pub noise: NoiseSpec,
    pub params: MethodParams,
    pub eval_times: Vec<f64>,
    pub eval_indices: Vec<usize>,
    pub t_n: Option<f64>,
    pub t_n_index: Option<usize>,
    pub assumptions: crate::config::AssumptionConfig,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, n: usize) -> Result<Self> {
        let instance = instance_of(cfg);
        instance.validate().context(|| "problem".into())?;
        let beta = instance.beta;
        let t_final = instance.t_final;
        let m_n = match cfg.params.m_n {
            Some(m) => m,
            None => choose_m_n(n, cfg.params.sigma_rate, t_final, beta).context(|| format!("cutoff for n = {n}"))?,
        };
        let cap = cfg.params.cap.unwrap_or(cfg.truth_cap).max(m_n);

        let mut grid = TimeGrid::uniform(t_final, cfg.steps).context(|| "grid".into())?;
        for t in cfg.eval_times.iter().filter(|t| **t > 0.0 && **t < t_final) {
            grid = grid.with_point(*t).context(|| format!("evaluation time {t}"))?;
        }
        let mut t_n = None;
        let params = match cfg.method {
            MethodKind::First | MethodKind::Second => {
                let mut p = TruncationParams::new(m_n, n);
                p.sigma_rate = cfg.params.sigma_rate;
                p.picard_tol = cfg.params.picard_tol;
                p.picard_max_iters = cfg.params.picard_max_iters;
                p.quad_nodes = cfg.params.quad_nodes;
                p.clamp = match cfg.params.q_n {
                    ClampSetting::Level(q) => q,
                    ClampSetting::None | ClampSetting::Auto => f64::INFINITY,
                };
                p.validate(t_final, beta).context(|| "truncation parameters".into())?;
                if cfg.method == MethodKind::First {
                    MethodParams::First(p)
                } else {
                    MethodParams::Second { params: p, cap }
                }
            }
            MethodKind::Qr => {
                let mut p = QRParams::new(m_n, n, instance.a0, beta).context(|| "QR parameters".into())?;
                p.picard_tol = cfg.params.picard_tol;
                p.picard_max_iters = cfg.params.picard_max_iters;
                p.quad_nodes = cfg.params.quad_nodes;
                let f = instance.nonlinearity;
                p.q_n = match cfg.params.q_n {
                    ClampSetting::None => f64::INFINITY,
                    ClampSetting::Level(q) => q,
                    ClampSetting::Auto => {
                        choose_q_n(n, t_final, |q| f.local_lipschitz(q)).context(|| "clamp level".into())?.q_n
                    }
                };
                if let Ok(t) = solve_t_n(m_n, beta, t_final) {
                    grid = grid.with_point(t).context(|| "t_n".into())?;
                    t_n = Some(t);
                }
                MethodParams::Qr { params: p, cap }
            }
        };

        let fine = grid.refined(cfg.truth_refine).context(|| "grid".into())?;
        let truth = forward_solve(&instance, &fine, cfg.truth_cap, Integrator::ExpHeun)
            .and_then(|t| t.subsample(cfg.truth_refine))
            .context(|| "reference solution".into())?;
        let final_samples = synthesize(truth.final_state(), n).context(|| "final samples".into())?;
        let needs_source = !instance.source.is_zero() || (cfg.noise.vartheta > 0.0 && cfg.method != MethodKind::Second);
        let source_samples = if needs_source {
            let path = grid
                .times()
                .iter()
                .map(|t| synthesize(&instance.source.at(*t), n))
                .collect::<fracback_core::Result<Vec<_>>>()
                .context(|| "source samples".into())?;
            Some(path)
        } else {
            None
        };
        let a_samples = instance.coefficient.samples(grid.times());
        let noise = NoiseSpec {
            sigma: cfg.sigma_for(n)?,
            v_max: cfg.noise.v_max,
            vartheta: cfg.noise.vartheta,
            eps: cfg.noise.eps,
            seed: cfg.seed,
        };
        noise.validate().context(|| "noise".into())?;
        let eval_indices = cfg.eval_times.iter().map(|t| grid.nearest_index(*t)).collect();
        let t_n_index = t_n.map(|t| grid.nearest_index(t));
        Ok(Self {
            method: cfg.method,
            instance,
            n,
            grid,
            truth,
            final_samples,
            source_samples,
            a_samples,
            noise,
            params,
            eval_times: cfg.eval_times.clone(),
            eval_indices,
            t_n,
            t_n_index,
            assumptions: cfg.assumptions,
        })
    }

    pub fn m_n(&self) -> usize {
        self.params.m_n()
    }

    /// Observed data of one trial.
    pub fn observe(&self, trial: u64) -> Result<fracback_core::ObservedData> {
        let ctx = || format!("trial {trial}: observation");
        let final_samples = observe_final(&self.final_samples, &self.noise, trial).context(ctx)?;
        let source_paths = match &self.source_samples {
            Some(paths) => observe_source(paths, &self.noise, &self.grid, trial).context(ctx)?,
            None => Vec::new(),
        };
        let coefficient = observe_coefficient(&self.a_samples, &self.noise, &self.grid, self.instance.a0, trial)
            .context(ctx)?;
        Ok(fracback_core::ObservedData {
            final_samples,
            source_paths,
            coefficient,
        })
    }

    /// Regularized states on the grid for one trial, with Picard iterations.
    pub fn regularize(&self, data: &fracback_core::ObservedData, trial: u64) -> Result<(Vec<SpectralField>, usize)> {
        let ctx = || format!("trial {trial}: {} regularizer", self.method.name());
        let paths = (!data.source_paths.is_empty()).then_some(data.source_paths.as_slice());
        match &self.params {
            MethodParams::First(p) => {
                let sol = solve_first_regularizer(&data.final_samples, paths, &self.instance, p, &self.grid)
                    .context(ctx)?;
                Ok((sol.states, sol.diagnostics.iterations))
            }
            MethodParams::Second { params, cap } => {
                let sol = solve_second_regularizer(&data.final_samples, &self.instance, params, &self.grid, *cap)
                    .context(ctx)?;
                Ok((sol.states, sol.diagnostics.iterations))
            }
            MethodParams::Qr { params, cap } => {
                let mut p = params.clone();
                p.b0 = data.coefficient.b0;
                let sol = solve_qr(
                    &data.final_samples,
                    paths,
                    &data.coefficient.path,
                    &self.instance,
                    &p,
                    &self.grid,
                    *cap,
                )
                .context(ctx)?;
                Ok((sol.states, sol.diagnostics.iterations))
            }
        }
    }
}

/// Errors and diagnostics of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// Squared L2 error per evaluation time.
    pub l2_sq: Vec<f64>,
    /// Squared H^beta error per evaluation time (QR only).
    pub h_beta_sq: Option<Vec<f64>>,
    /// Squared L2 distance between `W(t_n)` and `u(0)` (QR only).
    pub t_n_sq: Option<f64>,
    pub picard_iterations: usize,
    /// False when the observed coefficient leaves `(0, a0]`.
    pub coefficient_within_bounds: bool,
    pub b0: f64,
}

pub fn run_trial(setup: &Setup, trial: u64) -> Result<TrialReport> {
    let data = setup.observe(trial)?;
    let (states, iterations) = setup.regularize(&data, trial)?;
    let diff = |j: usize| -> SpectralField {
        let cap = states[j].cap().max(setup.truth.states[j].cap());
        let mut d = states[j].resized(cap);
        for (a, b) in d.coeffs_mut().iter_mut().zip(setup.truth.states[j].coeffs()) {
            *a -= b;
        }
        d
    };
    let l2_sq: Vec<f64> = setup.eval_indices.iter().map(|&j| diff(j).coeffs().iter().map(|c| c * c).sum()).collect();
    let h_beta_sq = match setup.method {
        MethodKind::Qr => Some(
            setup
                .eval_indices
                .iter()
                .map(|&j| norm_squared(&diff(j), NormSpec::Sobolev { gamma: setup.instance.beta }))
                .collect::<fracback_core::Result<Vec<_>>>()
                .context(|| format!("trial {trial}: H^beta error"))?,
        ),
        _ => None,
    };
    let t_n_sq = setup.t_n_index.map(|j| states[j].sq_distance(setup.truth.initial_state()));
    let report = TrialReport {
        trial,
        seed: setup.noise.seed,
        times: setup.eval_times.clone(),
        l2_sq,
        h_beta_sq,
        t_n_sq,
        picard_iterations: iterations,
        coefficient_within_bounds: data.coefficient.within_bounds,
        b0: data.coefficient.b0,
    };
    if report.l2_sq.iter().chain(report.h_beta_sq.iter().flatten()).any(|e| !e.is_finite() || *e < 0.0) {
        return Err(HarnessError::Core {
            context: format!("trial {trial}"),
            source: fracback_core::Error::NonFinite("trial error".into()),
        });
    }
    Ok(report)
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn of(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let stderr = if values.len() < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        };
        Self { mean, stderr }
    }

    /// `mean <= bound + 3 stderr`.
    pub fn within(&self, bound: f64) -> bool {
        let slack = if self.stderr.is_finite() { 3.0 * self.stderr } else { 0.0 };
        self.mean <= bound + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseReport {
    pub n: usize,
    pub m_n: usize,
    pub times: Vec<f64>,
    pub l2: Vec<MeanEstimate>,
    pub h_beta: Option<Vec<MeanEstimate>>,
    pub t_n: Option<f64>,
    pub at_t_n: Option<MeanEstimate>,
    /// Trials whose observed coefficient left `(0, a0]`.
    pub flagged_trials: Vec<u64>,
    pub trials: Vec<TrialReport>,
}

/// Trials `0..r` in parallel, sorted by trial index.
pub fn run_trials(setup: &Setup, r: usize) -> Result<Vec<TrialReport>> {
    (0..r as u64).into_par_iter().map(|i| run_trial(setup, i)).collect()
}

pub fn estimate_mise(setup: &Setup, r: usize) -> Result<MiseReport> {
    let trials = run_trials(setup, r)?;
    Ok(summarize(setup, trials))
}

pub fn summarize(setup: &Setup, trials: Vec<TrialReport>) -> MiseReport {
    let k = setup.eval_times.len();
    let column = |f: &dyn Fn(&TrialReport) -> f64| MeanEstimate::of(&trials.iter().map(f).collect::<Vec<_>>());
    let l2 = (0..k).map(|i| column(&|t| t.l2_sq[i])).collect();
    let h_beta = (setup.method == MethodKind::Qr)
        .then(|| (0..k).map(|i| column(&|t| t.h_beta_sq.as_ref().map_or(f64::NAN, |v| v[i]))).collect());
    let at_t_n = setup.t_n_index.map(|_| column(&|t| t.t_n_sq.unwrap_or(f64::NAN)));
    MiseReport {
        n: setup.n,
        m_n: setup.m_n(),
        times: setup.eval_times.clone(),
        l2,
        h_beta,
        t_n: setup.t_n,
        at_t_n,
        flagged_trials: trials.iter().filter(|t| !t.coefficient_within_bounds).map(|t| t.trial).collect(),
        trials,
    }
}

/// Budgets of the reference solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub p1: BudgetReport,
    pub p2: BudgetReport,
    /// Source budget with weight `p^{2 gamma}`.
    pub e2: BudgetReport,
    pub gevrey_u: BudgetReport,
    pub gevrey_u_t: BudgetReport,
    pub gevrey_g: BudgetReport,
    pub e1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetReport {
    pub value: f64,
    pub verified: bool,
    pub tail_fraction: f64,
}

impl From<Budget> for BudgetReport {
    fn from(b: Budget) -> Self {
        Self {
            value: b.value,
            verified: b.verified,
            tail_fraction: b.tail_fraction,
        }
    }
}

/// Lipschitz constant used by the bounds: global when it exists, else at the
/// clamp level.
fn bound_lipschitz(setup: &Setup) -> f64 {
    let f = setup.instance.nonlinearity;
    match &setup.params {
        MethodParams::Qr { params, .. } => lipschitz_at(f, params.q_n),
        MethodParams::First(p) | MethodParams::Second { params: p, .. } => lipschitz_at(f, p.clamp),
    }
}

pub fn verify_assumptions(setup: &Setup) -> AssumptionReport {
    let beta = setup.instance.beta;
    let t_final = setup.instance.t_final;
    let a0 = setup.instance.a0;
    let a = setup.assumptions;
    let source = setup.instance.source_path(setup.grid.times(), setup.truth.cap());
    let e = e_constant(&setup.truth, setup.instance.nonlinearity, bound_lipschitz(setup));
    AssumptionReport {
        p1: p1_budget(&setup.truth, beta).into(),
        p2: p2_budget(&setup.truth, beta, a.alpha).into(),
        e2: source_budget(&source, a.gamma).into(),
        gevrey_u: gevrey_budget(&setup.truth.states, t_final, a0, beta).into(),
        gevrey_u_t: gevrey_budget(std::slice::from_ref(setup.truth.final_state()), t_final, a0, beta).into(),
        gevrey_g: gevrey_budget(&source, t_final, a0, beta).into(),
        e1: e1_constant(e, t_final),
    }
}

/// Theoretical right-hand sides at the evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub l2: Vec<f64>,
    pub h_beta: Option<Vec<f64>>,
    pub at_t_n: Option<f64>,
    /// All budgets the bound relies on were verified.
    pub verified: bool,
    pub assumptions: AssumptionReport,
}

pub fn theoretical_bounds(setup: &Setup) -> Result<BoundReport> {
    let inst = &setup.instance;
    let beta = inst.beta;
    let t_final = inst.t_final;
    let times = &setup.eval_times;
    let a = setup.assumptions;
    let asm = verify_assumptions(setup);
    let k = bound_lipschitz(setup);
    let c1 = c1_constant(beta, asm.e1);
    let ctx = || "bound evaluation".to_string();
    match &setup.params {
        MethodParams::First(params) => {
            let c2 = c2_constant(a.gamma, asm.e2.value);
            let c3 = c3_constant(setup.noise.v_max, setup.noise.vartheta, t_final, c1, c2);
            let (bias, verified) = if asm.p1.verified {
                (BiasBudget::P1(asm.p1.value), true)
            } else {
                (BiasBudget::P2 { alpha: a.alpha, p2: asm.p2.value }, asm.p2.verified)
            };
            let l2 = evaluate_truncation_bound(times, params, beta, t_final, &TruncationBoundInputs { c3, lipschitz: k, bias })
                .context(ctx)?;
            Ok(BoundReport {
                l2,
                h_beta: None,
                at_t_n: None,
                verified: verified && asm.e2.verified && k.is_finite(),
                assumptions: asm,
            })
        }
        MethodParams::Second { params, .. } => {
            let u0 = setup.truth.initial_state();
            let u0_sq = norm_squared(u0, NormSpec::Sobolev { gamma: a.gamma }).context(ctx)?;
            let u0_verified = sobolev_budget(std::slice::from_ref(u0), a.gamma).verified;
            let l2 = evaluate_second_bound(times, params, beta, t_final, setup.noise.v_max, c1, k, a.gamma, u0_sq)
                .context(ctx)?;
            Ok(BoundReport {
                l2,
                h_beta: None,
                at_t_n: None,
                verified: u0_verified,
                assumptions: asm,
            })
        }
        MethodParams::Qr { params, .. } => {
            let u_t = setup.truth.final_state();
            let source = inst.source_path(setup.grid.times(), setup.truth.cap());
            let u_t_delta = norm(u_t, NormSpec::Sobolev { gamma: a.delta }).context(ctx)?;
            let g_delta = sobolev_budget(&source, a.delta).value.sqrt();
            let du = time_derivative_sup(&setup.truth, inst);
            let h2b = sobolev_budget(&setup.truth.states, 2.0 * beta);
            let inputs = QRBoundInputs {
                v_max: setup.noise.v_max,
                vartheta: setup.noise.vartheta,
                eps: setup.noise.eps,
                c_bar: aliasing_constant(a.delta, u_t_delta),
                d_bar: aliasing_constant(a.delta, g_delta),
                u_h2beta_sq: h2b.value,
                u_t_gevrey_sq: asm.gevrey_u_t.value,
                g_gevrey_sq: asm.gevrey_g.value,
                u_gevrey_sq: asm.gevrey_u.value,
                lipschitz: k,
                du_dt_sq: du * du,
            };
            let mut p = params.clone();
            p.b0 = worst_case_b0(setup);
            let b = evaluate_qr_bounds(times, &p, beta, t_final, &inputs).context(ctx)?;
            Ok(BoundReport {
                l2: b.l2,
                h_beta: b.h_beta,
                at_t_n: setup.t_n.map(|_| b.at_t_n),
                verified: asm.gevrey_u.verified && asm.gevrey_g.verified && h2b.verified && k.is_finite(),
                assumptions: asm,
            })
        }
    }
}

/// `min_t (a0 - a(t))` of the noise-free coefficient.
fn worst_case_b0(setup: &Setup) -> f64 {
    setup.a_samples.iter().map(|a| setup.instance.a0 - a).fold(f64::INFINITY, f64::min)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub m_n: usize,
    pub t: f64,
    pub mise: f64,
    pub stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub times: Vec<f64>,
    pub slopes: Vec<f64>,
    /// `-sigma t / T` per evaluation time.
    pub predicted: Vec<f64>,
    /// Per time: MISE fails to decrease by more than the combined 3-sigma noise.
    pub degenerate: Vec<bool>,
    pub noise_free_floor: bool,
}

impl SweepReport {
    pub fn slope_at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|s| (s - t).abs() < 1e-12).map(|i| self.slopes[i])
    }
}

pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.sweep.len() < 3 {
        return Err(HarnessError::config("a rate sweep needs at least three values in sweep.n"));
    }
    let mut rows = Vec::new();
    let mut per_n = Vec::new();
    for &n in &cfg.sweep {
        let setup = Setup::new(cfg, n)?;
        let mise = estimate_mise(&setup, cfg.trials)?;
        let bound = theoretical_bounds(&setup).map(|b| b.l2).unwrap_or_else(|_| vec![f64::NAN; cfg.eval_times.len()]);
        for (i, t) in cfg.eval_times.iter().enumerate() {
            rows.push(SweepRow {
                n,
                m_n: setup.m_n(),
                t: *t,
                mise: mise.l2[i].mean,
                stderr: mise.l2[i].stderr,
                bound: bound[i],
            });
        }
        per_n.push(mise.l2);
    }
    let ns: Vec<f64> = cfg.sweep.iter().map(|n| *n as f64).collect();
    let t_final = cfg.problem.t_final;
    let mut slopes = Vec::new();
    let mut degenerate = Vec::new();
    for i in 0..cfg.eval_times.len() {
        let ys: Vec<f64> = per_n.iter().map(|v| v[i].mean).collect();
        slopes.push(loglog_slope(&ns, &ys));
        degenerate.push(per_n.windows(2).any(|w| {
            let noise = 3.0 * (w[0][i].stderr.powi(2) + w[1][i].stderr.powi(2)).sqrt();
            w[1][i].mean > w[0][i].mean + noise
        }));
    }
    Ok(SweepReport {
        rows,
        times: cfg.eval_times.clone(),
        slopes,
        predicted: cfg.eval_times.iter().map(|t| -cfg.params.sigma_rate * t / t_final).collect(),
        degenerate,
        noise_free_floor: cfg.noise.sigma.iter().all(|s| *s == 0.0) && cfg.noise.vartheta == 0.0 && cfg.noise.eps == 0.0,
    })
}
