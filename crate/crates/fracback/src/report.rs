//! CSV and JSON writers. CSV is long format with a mandatory header row,
//! `.` decimals and UTF-8; floats use Rust's shortest round-trip form so
//! equal runs give equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use fracback_core::{NoiseSpec, ObservedData, SpectralField, TimeGrid, Trajectory};

use crate::error::{HarnessError, Result};
use crate::harness::{BoundReport, MiseReport, SweepReport, TrialReport};

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::io(path, std::io::Error::other(e)))?;
    write(path, &(text + "\n"))
}

/// `t,p,coefficient`, one row per grid time and mode.
pub fn trajectory_csv(grid: &TimeGrid, states: &[SpectralField]) -> String {
    let mut out = String::from("t,p,coefficient\n");
    for (t, s) in grid.times().iter().zip(states) {
        for (p, c) in s.coeffs().iter().enumerate() {
            let _ = writeln!(out, "{t},{p},{c}");
        }
    }
    out
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write(path, &trajectory_csv(&traj.grid, &traj.states))
}

pub fn write_path(path: &Path, grid: &TimeGrid, states: &[SpectralField]) -> Result<()> {
    write(path, &trajectory_csv(grid, states))
}

/// One trial's observations; comment lines name the seed and noise levels.
pub fn observed_csv(data: &ObservedData, grid: &TimeGrid, spec: &NoiseSpec, trial: u64) -> String {
    let sigma = if spec.sigma.windows(2).all(|w| w[0] == w[1]) {
        spec.sigma.first().map_or(String::new(), |s| s.to_string())
    } else {
        spec.sigma.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
    };
    let mut out = format!(
        "# seed={} trial={trial} n={} sigma={sigma} v_max={} vartheta={} eps={}\nkind,k,t,value\n",
        spec.seed,
        data.n(),
        spec.v_max,
        spec.vartheta,
        spec.eps
    );
    let t_final = grid.t_final();
    for (k, v) in data.final_samples.values().iter().enumerate() {
        let _ = writeln!(out, "final,{},{t_final},{v}", k + 1);
    }
    for (t, row) in grid.times().iter().zip(&data.source_paths) {
        for (k, v) in row.values().iter().enumerate() {
            let _ = writeln!(out, "source,{},{t},{v}", k + 1);
        }
    }
    for (t, a) in grid.times().iter().zip(&data.coefficient.path) {
        let _ = writeln!(out, "coefficient,0,{t},{a}");
    }
    out
}

pub fn write_observed(path: &Path, data: &ObservedData, grid: &TimeGrid, spec: &NoiseSpec, trial: u64) -> Result<()> {
    write(path, &observed_csv(data, grid, spec, trial))
}

/// `trial,t,metric,value`.
pub fn trials_csv(trials: &[TrialReport], t_n: Option<f64>) -> String {
    let mut out = String::from("trial,t,metric,value\n");
    for r in trials {
        for (t, e) in r.times.iter().zip(&r.l2_sq) {
            let _ = writeln!(out, "{},{t},l2_sq,{e}", r.trial);
        }
        if let Some(h) = &r.h_beta_sq {
            for (t, e) in r.times.iter().zip(h) {
                let _ = writeln!(out, "{},{t},h_beta_sq,{e}", r.trial);
            }
        }
        if let (Some(e), Some(t)) = (r.t_n_sq, t_n) {
            let _ = writeln!(out, "{},{t},t_n_sq,{e}", r.trial);
        }
        let _ = writeln!(out, "{},,picard_iterations,{}", r.trial, r.picard_iterations);
    }
    out
}

/// `n,M_n,t,metric,mise,stderr,bound`.
pub fn mise_csv(mise: &MiseReport, bound: Option<&BoundReport>) -> String {
    let mut out = String::from("n,M_n,t,metric,mise,stderr,bound\n");
    let fmt_bound = |b: Option<f64>| b.map_or(String::new(), |v| v.to_string());
    for (i, (t, e)) in mise.times.iter().zip(&mise.l2).enumerate() {
        let b = bound.map(|b| b.l2[i]);
        let _ = writeln!(out, "{},{},{t},l2_sq,{},{},{}", mise.n, mise.m_n, e.mean, e.stderr, fmt_bound(b));
    }
    if let Some(h) = &mise.h_beta {
        for (i, (t, e)) in mise.times.iter().zip(h).enumerate() {
            let b = bound.and_then(|b| b.h_beta.as_ref().map(|v| v[i]));
            let _ = writeln!(out, "{},{},{t},h_beta_sq,{},{},{}", mise.n, mise.m_n, e.mean, e.stderr, fmt_bound(b));
        }
    }
    if let (Some(t), Some(e)) = (mise.t_n, mise.at_t_n) {
        let b = bound.and_then(|b| b.at_t_n);
        let _ = writeln!(out, "{},{},{t},t_n_sq,{},{},{}", mise.n, mise.m_n, e.mean, e.stderr, fmt_bound(b));
    }
    out
}

/// `n,M_n,t,mise,stderr,bound,slope`.
pub fn sweep_csv(sweep: &SweepReport) -> String {
    let mut out = String::from("n,M_n,t,mise,stderr,bound,slope\n");
    for r in &sweep.rows {
        let slope = sweep.slope_at(r.t).unwrap_or(f64::NAN);
        let _ = writeln!(out, "{},{},{},{},{},{},{slope}", r.n, r.m_n, r.t, r.mise, r.stderr, r.bound);
    }
    out
}

pub fn write_csv(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{MeanEstimate, SweepRow};

    #[test]
    fn sweep_header_and_rows() {
        let sweep = SweepReport {
            rows: vec![SweepRow { n: 64, m_n: 3, t: 0.5, mise: 0.25, stderr: 0.01, bound: 4.0 }],
            times: vec![0.5],
            slopes: vec![-0.5],
            predicted: vec![-0.45],
            degenerate: vec![false],
            noise_free_floor: false,
        };
        assert_eq!(sweep_csv(&sweep), "n,M_n,t,mise,stderr,bound,slope\n64,3,0.5,0.25,0.01,4,-0.5\n");
    }

    #[test]
    fn trajectory_rows() {
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let states = vec![SpectralField::mode(1, 2.0, 1); 2];
        assert_eq!(trajectory_csv(&grid, &states), "t,p,coefficient\n0,0,0\n0,1,2\n1,0,0\n1,1,2\n");
    }

    #[test]
    fn mise_rows_without_bound() {
        let mise = MiseReport {
            n: 8,
            m_n: 2,
            times: vec![1.0],
            l2: vec![MeanEstimate { mean: 0.5, stderr: 0.1 }],
            h_beta: None,
            t_n: None,
            at_t_n: None,
            flagged_trials: vec![],
            trials: vec![],
        };
        assert_eq!(mise_csv(&mise, None), "n,M_n,t,metric,mise,stderr,bound\n8,2,1,l2_sq,0.5,0.1,\n");
    }
}
