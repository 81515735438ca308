//! Fast cross-module invariant suite behind the `check` subcommand.

use fracback_core::bounds::zeta;
use fracback_core::noise::{observe_final, observe_source};
use fracback_core::quasi_rev::{
    choose_q_n, head_tail_apply, solve_qr_from_terminal, solve_t_n, Part, QRParams,
};
use fracback_core::spectral::{
    aliasing_tail, basis, discrete_coefficient, frac_laplacian_apply, node, norm, synthesize,
};
use fracback_core::truncation::{solve_first_regularizer, solve_second_regularizer, TruncationParams};
use fracback_core::{
    forward_solve, mild_residual, Coefficient, GridSamples, Integrator, NoiseSpec, Nonlinearity, NormSpec,
    ProblemInstance, SpectralField, Source, TimeGrid,
};

pub type CheckResult = std::result::Result<(), String>;

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: fracback_core::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Deterministic pseudo-random field with algebraic decay.
fn sample_field(cap: usize, salt: u64) -> SpectralField {
    let mut state = salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let coeffs = (0..=cap)
        .map(|p| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            u / (1.0 + p as f64).powi(2)
        })
        .collect();
    SpectralField::new(coeffs).expect("finite")
}

fn orthonormality() -> CheckResult {
    for n in [4usize, 9, 16] {
        for p in 1..n {
            for q in 1..n {
                let s: f64 = (1..=n).map(|k| basis(p, node(k, n)) * basis(q, node(k, n))).sum::<f64>()
                    * std::f64::consts::PI
                    / n as f64;
                let want = if p == q { 1.0 } else { 0.0 };
                ensure((s - want).abs() < 1e-12, || format!("n={n} p={p} q={q}: {s}"))?;
            }
        }
    }
    Ok(())
}

fn aliasing_identity() -> CheckResult {
    for (i, n) in [4usize, 8, 16].into_iter().enumerate() {
        let field = sample_field(3 * n, i as u64 + 1);
        let samples = core(synthesize(&field, n))?;
        for p in 1..n {
            let got = core(discrete_coefficient(&samples, p))? - core(aliasing_tail(&field, n, p))?;
            ensure((got - field.get(p)).abs() <= 1e-9, || format!("n={n} p={p}"))?;
        }
    }
    Ok(())
}

fn fractional_composition() -> CheckResult {
    let f = sample_field(20, 7);
    let a = core(frac_laplacian_apply(&core(frac_laplacian_apply(&f, 0.3))?, 0.5))?;
    let b = core(frac_laplacian_apply(&f, 0.8))?;
    ensure(a.l2_distance(&b) <= 1e-10 * b.l2_norm(), || "A^0.3 A^0.5 != A^0.8".into())
}

fn forward_mild_residual() -> CheckResult {
    let inst = ProblemInstance::unit_coefficient(
        1.0,
        0.5,
        Nonlinearity::Sine { scale: 1.0 },
        Source::zero(),
        SpectralField::mode(1, 1.0, 1),
    );
    let traj = core(forward_solve(&inst, &core(TimeGrid::uniform(0.5, 400))?, 6, Integrator::ExpHeun))?;
    let r = core(mild_residual(&traj, &inst))?;
    ensure(r.max_residual <= 1e-5, || format!("residual {}", r.max_residual))
}

fn linear_recovery() -> CheckResult {
    let inst = ProblemInstance::unit_coefficient(1.0, 1.0, Nonlinearity::Zero, Source::zero(), SpectralField::zeros(3));
    let u_t = SpectralField::new(vec![0.3, 0.2, -0.1, 0.05]).expect("finite");
    let grid = core(TimeGrid::uniform(1.0, 10))?;
    let sol = core(solve_first_regularizer(&core(synthesize(&u_t, 16))?, None, &inst, &TruncationParams::new(3, 16), &grid))?;
    for (state, t) in sol.states.iter().zip(grid.times()) {
        for p in 0..=3 {
            let want = u_t.get(p) * ((1.0 - t) * (p * p) as f64).exp();
            ensure((state.get(p) - want).abs() <= 1e-9, || format!("p={p} t={t}"))?;
        }
    }
    Ok(())
}

fn second_regularizer_causality() -> CheckResult {
    let inst = ProblemInstance::unit_coefficient(1.0, 0.15, Nonlinearity::Sine { scale: 1.0 }, Source::zero(), SpectralField::zeros(8));
    let samples = core(GridSamples::from_fn(16, |x| 0.5 * x.cos() + 0.1))?;
    let grid = core(TimeGrid::uniform(0.15, 30))?;
    let sol = core(solve_second_regularizer(&samples, &inst, &TruncationParams::new(3, 16), &grid, 8))?;
    ensure(sol.states[0].coeffs()[4..].iter().all(|c| *c == 0.0), || "tail modes nonzero at t = 0".into())
}

fn head_tail_bounds() -> CheckResult {
    for (i, (a0, beta, m)) in [(1.0, 1.0, 3usize), (2.0, 1.0, 3), (4.0, 0.5, 3), (1.5, 0.75, 5), (0.5, 1.25, 2)]
        .into_iter()
        .enumerate()
    {
        let params = core(QRParams::new(m, 64, a0, beta))?;
        let raw = sample_field(16, 100 + i as u64);
        let v = SpectralField::new(
            raw.coeffs()
                .iter()
                .enumerate()
                .map(|(p, c)| c * (-(a0 + 0.5) * (p as f64).powf(2.0 * beta)).exp())
                .collect(),
        )
        .expect("finite");
        let head = head_tail_apply(&v, Part::Head, &params, beta);
        let tail = head_tail_apply(&v, Part::Tail, &params, beta);
        let full = core(frac_laplacian_apply(&v, beta))?;
        for p in 0..=16 {
            let lhs = a0 * tail.get(p) + head.get(p);
            ensure((lhs - a0 * full.get(p)).abs() <= 1e-12 * (a0 * full.get(p)).abs().max(1e-300), || {
                format!("decomposition at p={p}")
            })?;
        }
        let mb = (m as f64).powf(2.0 * beta);
        ensure(head.l2_norm() <= mb * v.l2_norm() * (1.0 + 1e-12), || "head bound".into())?;
        let vn = core(norm(&v, NormSpec::Gevrey { t_final: 1.0, a0, beta }))?;
        ensure(tail.l2_norm() <= (-mb).exp() * vn * (1.0 + 1e-12), || "tail bound".into())?;
    }
    Ok(())
}

fn qr_closed_form() -> CheckResult {
    let inst = ProblemInstance {
        beta: 1.0,
        t_final: 1.0,
        coefficient: Coefficient::Constant(1.0),
        a0: 2.0,
        nonlinearity: Nonlinearity::Zero,
        source: Source::zero(),
        initial: SpectralField::zeros(5),
    };
    let grid = core(TimeGrid::uniform(1.0, 100))?;
    let terminal = SpectralField::new(vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).expect("finite");
    let params = core(QRParams::new(3, 16, 2.0, 1.0))?;
    let sol = core(solve_qr_from_terminal(&terminal, &[], &vec![1.0; grid.len()], &inst, &params, &grid, 5))?;
    let w0 = &sol.states[0];
    ensure((w0.get(1) - 1f64.exp()).abs() <= 1e-9, || format!("head {}", w0.get(1)))?;
    ensure((w0.get(5) - (-25f64).exp()).abs() <= 1e-9 * (-25f64).exp(), || format!("tail {}", w0.get(5)))
}

fn t_n_contract() -> CheckResult {
    for m in [1usize, 2, 5, 10, 50] {
        let t = core(solve_t_n(m, 1.0, 1.0))?;
        let r = m as f64;
        ensure(((-t * r).exp() - t).abs() <= 1e-12 && t <= r.powf(-0.5), || format!("M={m}: {t}"))?;
    }
    let q = core(choose_q_n(1_000_000, 1.0, |q| q))?;
    ensure((q.q_n - 0.5 * (1e6f64).ln().ln()).abs() < 1e-9, || format!("Q_n {}", q.q_n))
}

fn noise_streams() -> CheckResult {
    let truth = core(GridSamples::from_fn(8, |x| x.cos()))?;
    let a = core(observe_final(&truth, &NoiseSpec::uniform(8, 0.1, 0.2, 0.0, 0.0, 5), 3))?;
    let b = core(observe_final(&truth, &NoiseSpec::uniform(8, 0.1, 0.2, 1.0, 1.0, 5), 3))?;
    ensure(a == b, || "final noise depends on other amplitudes".into())?;
    let c = core(observe_final(&truth, &NoiseSpec::uniform(8, 0.1, 0.2, 0.0, 0.0, 5), 4))?;
    ensure(a != c, || "trials share a stream".into())?;
    let grid = core(TimeGrid::uniform(1.0, 4))?;
    let rows = vec![truth.clone(); grid.len()];
    let s = core(observe_source(&rows, &NoiseSpec::uniform(8, 0.0, 0.2, 1.0, 0.0, 5), &grid, 3))?;
    ensure(s[0] == truth, || "source noise nonzero at t = 0".into())
}

fn zeta_values() -> CheckResult {
    let z = zeta(2.0);
    ensure((z - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12, || format!("zeta(2) = {z}"))
}

pub const CHECKS: &[Check] = &[
    Check { name: "discrete orthonormality", run: orthonormality },
    Check { name: "aliasing identity", run: aliasing_identity },
    Check { name: "fractional power composition", run: fractional_composition },
    Check { name: "forward mild residual", run: forward_mild_residual },
    Check { name: "linear noise-free recovery", run: linear_recovery },
    Check { name: "second regularizer causality", run: second_regularizer_causality },
    Check { name: "head/tail decomposition and bounds", run: head_tail_bounds },
    Check { name: "QR closed form", run: qr_closed_form },
    Check { name: "t_n and Q_n roots", run: t_n_contract },
    Check { name: "noise stream keying", run: noise_streams },
    Check { name: "zeta series", run: zeta_values },
];

/// Run every check; returns `(name, outcome)` in order.
pub fn run_all() -> Vec<(&'static str, CheckResult)> {
    CHECKS.iter().map(|c| (c.name, (c.run)())).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes() {
        for (name, outcome) in super::run_all() {
            assert!(outcome.is_ok(), "{name}: {outcome:?}");
        }
    }
}
