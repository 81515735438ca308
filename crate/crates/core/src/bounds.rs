//! Series constants and smoothness budgets of a known trajectory.
//!
//! A budget is a supremum over the trajectory grid of a weighted mode sum,
//! truncated at the trajectory cap. It counts as verified when every term is
//! finite and the top quarter of the retained modes carries at most
//! [`TAIL_FRACTION_LIMIT`] of the sum at every time.

use alloc::vec::Vec;

use libm::{exp, log, pow, sqrt};

use crate::forward::Trajectory;
use crate::problem::{Nonlinearity, ProblemInstance};
use crate::spectral::{frac_eigenvalue, PseudoSpectral, SpectralField};

pub const TAIL_FRACTION_LIMIT: f64 = 0.1;

/// Riemann zeta for `s > 1`: partial sum plus Euler-Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    if !(s > 1.0) {
        return f64::INFINITY;
    }
    const N: usize = 32;
    let mut sum = 0.0;
    for l in 1..N {
        sum += pow(l as f64, -s);
    }
    let n = N as f64;
    let ns = pow(n, -s);
    sum + n * ns / (s - 1.0) + 0.5 * ns + s * ns / (12.0 * n)
        - s * (s + 1.0) * (s + 2.0) * ns / (720.0 * n * n * n)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ns / (30240.0 * n * n * n * n * n)
}

/// Supremum of a mode sum together with its verification status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub value: f64,
    pub verified: bool,
    /// Largest share of the sum carried by the top quarter of modes.
    pub tail_fraction: f64,
}

impl Budget {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            verified: value.is_finite(),
            tail_fraction: 0.0,
        }
    }
}

/// `exp(log_weight) c^2` without forming the weight on its own.
#[inline]
fn weighted_square(log_weight: f64, c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        exp(log_weight + 2.0 * log(c.abs()))
    }
}

/// `sup_j sum_{p=1}^{cap} exp(log_weight(j, p)) c_p(t_j)^2`.
pub fn weighted_budget(states: &[SpectralField], log_weight: impl Fn(usize, usize) -> f64) -> Budget {
    let mut value: f64 = 0.0;
    let mut tail_fraction: f64 = 0.0;
    let mut finite = true;
    for (j, state) in states.iter().enumerate() {
        let cap = state.cap();
        if cap == 0 {
            continue;
        }
        let tail_start = cap + 1 - (cap / 4).max(1);
        let mut total = 0.0;
        let mut tail = 0.0;
        for p in 1..=cap {
            let term = weighted_square(log_weight(j, p), state.get(p));
            total += term;
            if p >= tail_start {
                tail += term;
            }
        }
        if !total.is_finite() {
            finite = false;
            value = f64::INFINITY;
            continue;
        }
        value = value.max(total);
        if total > 0.0 {
            tail_fraction = tail_fraction.max(tail / total);
        }
    }
    Budget {
        value,
        verified: finite && tail_fraction <= TAIL_FRACTION_LIMIT,
        tail_fraction,
    }
}

/// `sup_t sum_p e^{2 p^{2beta} t} u_p(t)^2`.
pub fn p1_budget(traj: &Trajectory, beta: f64) -> Budget {
    let times = traj.grid.times();
    weighted_budget(&traj.states, |j, p| 2.0 * frac_eigenvalue(p, beta) * times[j])
}

/// `sup_t sum_p p^{2 beta alpha} e^{2 p^{2beta} t} u_p(t)^2`.
pub fn p2_budget(traj: &Trajectory, beta: f64, alpha: f64) -> Budget {
    let times = traj.grid.times();
    weighted_budget(&traj.states, |j, p| {
        2.0 * beta * alpha * log(p as f64) + 2.0 * frac_eigenvalue(p, beta) * times[j]
    })
}

/// `sup_t ||v(t)||^2` in the Gevrey-type space with weight
/// `p^{4beta} e^{2 T a0 p^{2beta}}`.
pub fn gevrey_budget(states: &[SpectralField], t_final: f64, a0: f64, beta: f64) -> Budget {
    weighted_budget(states, |_, p| {
        4.0 * beta * log(p as f64) + 2.0 * t_final * a0 * frac_eigenvalue(p, beta)
    })
}

/// `sup_t ||v(t)||^2_{H^gamma}` with weight `lambda_p^{2 gamma} = p^{4 gamma}`.
pub fn sobolev_budget(states: &[SpectralField], gamma: f64) -> Budget {
    weighted_budget(states, |_, p| 4.0 * gamma * log(p as f64))
}

/// Source budget `sup_t sum_p p^{2 gamma} g_p(t)^2`.
pub fn source_budget(path: &[SpectralField], gamma: f64) -> Budget {
    weighted_budget(path, |_, p| 2.0 * gamma * log(p as f64))
}

/// `E = ||F(0)||_{L2} + max(K, 1) sup_t ||u(t)||_{L2}`.
pub fn e_constant(traj: &Trajectory, nonlinearity: Nonlinearity, lipschitz: f64) -> f64 {
    let f0 = nonlinearity.eval(0.0).abs() * sqrt(core::f64::consts::PI);
    let sup_u = traj.states.iter().map(|s| s.l2_norm()).fold(0.0, f64::max);
    f0 + lipschitz.max(1.0) * sup_u
}

/// `E_1 = E / T + E`.
pub fn e1_constant(e: f64, t_final: f64) -> f64 {
    e / t_final + e
}

/// `sup_t ||du/dt||_{L2}` from the equation, `-a lambda_p u_p + F_p(u) + g_p`.
pub fn time_derivative_sup(traj: &Trajectory, instance: &ProblemInstance) -> f64 {
    let cap = traj.cap();
    let ps = PseudoSpectral::with_default_nodes(cap);
    let f = instance.nonlinearity;
    let mut sup: f64 = 0.0;
    for (state, &t) in traj.states.iter().zip(traj.grid.times()) {
        let forcing: Vec<f64> = if f.is_zero() {
            alloc::vec![0.0; cap + 1]
        } else {
            ps.map(state, |u| f.eval(u)).into_coeffs()
        };
        let a = instance.coefficient.eval(t);
        let mut sq = 0.0;
        for p in 0..=cap {
            let d = -a * frac_eigenvalue(p, instance.beta) * state.get(p) + forcing[p]
                + instance.source.coeff(p, t);
            sq += d * d;
        }
        sup = sup.max(sqrt(sq));
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{forward_solve, Integrator};
    use crate::grid::TimeGrid;
    use crate::problem::Source;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn zeta_values() {
        assert_abs_diff_eq!(zeta(2.0), PI * PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(zeta(1.2), 5.591_582_441_177_751, epsilon = 1e-9);
        assert!(zeta(1.0).is_infinite());
    }

    #[test]
    fn p1_of_linear_mode_is_one() {
        let inst = ProblemInstance::unit_coefficient(
            1.0,
            0.5,
            Nonlinearity::Zero,
            Source::zero(),
            SpectralField::mode(2, 1.0, 2),
        );
        let traj = forward_solve(&inst, &TimeGrid::uniform(0.5, 50).unwrap(), 8, Integrator::ExpHeun).unwrap();
        let b = p1_budget(&traj, 1.0);
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-12);
        assert!(b.verified);
    }

    #[test]
    fn slow_spectrum_is_unverified() {
        let states = alloc::vec![crate::problem::power_law_field(1.0, 1.0, 64)];
        let b = gevrey_budget(&states, 1.0, 1.0, 1.0);
        assert!(!b.verified);
    }

    #[test]
    fn single_mode_source_budget() {
        let path = alloc::vec![SpectralField::mode(1, 1.0, 4); 3];
        for gamma in [1.5, 3.0, 10.0] {
            let b = source_budget(&path, gamma);
            assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-15);
            assert!(b.verified);
        }
    }
}
