//! Forward (well-posed) solver used to manufacture ground truth.
//!
//! Each mode is advanced with its exact linear factor
//! `exp(-p^(2 beta) int a)`; the nonlinearity is evaluated pseudospectrally on
//! `2 cap + 2` midpoint nodes.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::error::{Error, Result, EXP_GUARD};
use crate::grid::TimeGrid;
use crate::problem::ProblemInstance;
use crate::spectral::{frac_eigenvalue, PseudoSpectral, SpectralField};

/// Spectral states on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<SpectralField>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::InvalidParameter("one state per grid point is required".into()));
        }
        let cap = states[0].cap();
        if states.iter().any(|s| s.cap() != cap) {
            return Err(Error::InvalidParameter("states must share one cap".into()));
        }
        Ok(Self { grid, states })
    }

    pub fn cap(&self) -> usize {
        self.states[0].cap()
    }

    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("non-empty trajectory")
    }

    pub fn initial_state(&self) -> &SpectralField {
        &self.states[0]
    }

    /// Every `factor`-th state, paired with the matching coarse grid.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.grid.steps() % factor != 0 {
            return Err(Error::InvalidParameter("factor must divide the step count".into()));
        }
        let times: Vec<f64> = self.grid.times().iter().step_by(factor).copied().collect();
        let states = self.states.iter().step_by(factor).cloned().collect();
        Self::new(TimeGrid::new(times)?, states)
    }
}

/// Time stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exponential Euler, first order.
    ExpEuler,
    /// Exponential Euler predictor with a trapezoidal corrector.
    #[default]
    ExpHeun,
}

/// Per-mode nonlinear plus source term at one time.
fn forcing(
    instance: &ProblemInstance,
    ps: &PseudoSpectral,
    state: &SpectralField,
    t: f64,
) -> Vec<f64> {
    let mut out = if instance.nonlinearity.is_zero() {
        vec![0.0; ps.cap() + 1]
    } else {
        let f = instance.nonlinearity;
        ps.map(state, |u| f.eval(u)).into_coeffs()
    };
    for (p, v) in out.iter_mut().enumerate() {
        *v += instance.source.coeff(p, t);
    }
    out
}

/// Solve `u_t + a(t) A^beta u = F(u) + g`, `u(0) = u_0` on `grid`.
pub fn forward_solve(
    instance: &ProblemInstance,
    grid: &TimeGrid,
    cap: usize,
    integrator: Integrator,
) -> Result<Trajectory> {
    instance.validate()?;
    if (grid.t_final() - instance.t_final).abs() > 1e-12 * instance.t_final {
        return Err(Error::InvalidParameter("grid must end at the final time".into()));
    }
    let ps = PseudoSpectral::with_default_nodes(cap);
    let lambda: Vec<f64> = (0..=cap).map(|p| frac_eigenvalue(p, instance.beta)).collect();

    let mut states = Vec::with_capacity(grid.len());
    let mut u = instance.initial.resized(cap);
    let mut n_cur = forcing(instance, &ps, &u, 0.0);
    states.push(u.clone());

    for j in 0..grid.steps() {
        let t0 = grid.times()[j];
        let t1 = grid.times()[j + 1];
        let h = t1 - t0;
        let a_int = instance.coefficient.integral(t0, t1);

        let mut next = vec![0.0; cap + 1];
        let mut decay = vec![0.0; cap + 1];
        for p in 0..=cap {
            let z = lambda[p] * a_int;
            let e = exp(-z);
            decay[p] = e;
            // int_{t0}^{t1} exp(-lambda int_s^{t1} a) ds with a frozen on the step
            let weight = if z < 1e-8 { h * (1.0 - 0.5 * z) } else { h * (1.0 - e) / z };
            next[p] = e * u.coeffs()[p] + weight * n_cur[p];
        }
        let mut predicted = SpectralField::from_raw(next);

        if integrator == Integrator::ExpHeun {
            let n_pred = forcing(instance, &ps, &predicted, t1);
            let coeffs = predicted.coeffs_mut();
            for p in 0..=cap {
                coeffs[p] = decay[p] * u.coeffs()[p]
                    + 0.5 * h * (decay[p] * n_cur[p] + n_pred[p]);
            }
        }
        if !predicted.is_finite() {
            return Err(Error::NonFinite(alloc::format!("forward state at t = {t1}")));
        }
        u = predicted;
        n_cur = forcing(instance, &ps, &u, t1);
        states.push(u.clone());
    }
    Trajectory::new(grid.clone(), states)
}

/// Double the step count from `steps` until successive final states agree to
/// `tolerance` in L2; returns the finer trajectory.
pub fn forward_solve_refined(
    instance: &ProblemInstance,
    steps: usize,
    cap: usize,
    tolerance: f64,
    max_doublings: usize,
) -> Result<Trajectory> {
    let mut coarse = forward_solve(
        instance,
        &TimeGrid::uniform(instance.t_final, steps)?,
        cap,
        Integrator::default(),
    )?;
    let mut m = steps;
    let mut change = f64::INFINITY;
    for _ in 0..max_doublings {
        m *= 2;
        let fine = forward_solve(
            instance,
            &TimeGrid::uniform(instance.t_final, m)?,
            cap,
            Integrator::default(),
        )?;
        change = fine.final_state().l2_distance(coarse.final_state());
        if change <= tolerance {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::NonConvergence { change, tolerance })
}

/// Outcome of [`mild_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct MildResidual {
    /// Max over grid times of the L2 residual on included modes.
    pub max_residual: f64,
    pub per_time: Vec<f64>,
    /// Number of (time, mode) pairs left out because the amplification
    /// exponent exceeded the guard.
    pub excluded_pairs: usize,
}

/// Distance between a constant-coefficient trajectory and the right-hand side
/// of its backward mild representation
/// `u_p(t) = e^{(T-t) l_p} u_p(T) - int_t^T e^{(s-t) l_p} (g_p + F_p(u))(s) ds`,
/// with the integral taken by the trapezoid rule on the trajectory grid.
pub fn mild_residual(traj: &Trajectory, instance: &ProblemInstance) -> Result<MildResidual> {
    mild_residual_with_guard(traj, instance, EXP_GUARD)
}

pub fn mild_residual_with_guard(
    traj: &Trajectory,
    instance: &ProblemInstance,
    max_exponent: f64,
) -> Result<MildResidual> {
    if !instance.coefficient.is_identically_one() {
        return Err(Error::Precondition(
            "the mild representation is stated for a(t) = 1".into(),
        ));
    }
    let cap = traj.cap();
    let grid = &traj.grid;
    let m = grid.steps();
    let t_final = grid.t_final();
    let ps = PseudoSpectral::with_default_nodes(cap);
    let forcing_path: Vec<Vec<f64>> = traj
        .states
        .iter()
        .zip(grid.times())
        .map(|(s, t)| forcing(instance, &ps, s, *t))
        .collect();

    let mut sq = vec![0.0; m + 1];
    let mut excluded = 0usize;
    for p in 0..=cap {
        let lambda = frac_eigenvalue(p, instance.beta);
        let mut rhs = traj.states[m].coeffs()[p];
        // t = T: the representation reduces to the final value itself.
        for j in (0..m).rev() {
            if (t_final - grid.times()[j]) * lambda > max_exponent {
                excluded += j + 1;
                break;
            }
            let h = grid.step(j);
            let e = exp(lambda * h);
            rhs = e * rhs - 0.5 * h * (forcing_path[j][p] + e * forcing_path[j + 1][p]);
            let d = traj.states[j].coeffs()[p] - rhs;
            sq[j] += d * d;
        }
    }
    let per_time: Vec<f64> = sq.into_iter().map(sqrt).collect();
    let max_residual = per_time.iter().copied().fold(0.0, f64::max);
    Ok(MildResidual {
        max_residual,
        per_time,
        excluded_pairs: excluded,
    })
}
