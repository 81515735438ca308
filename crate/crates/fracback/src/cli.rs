//! Command line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{schema, ExperimentConfig, MethodKind};
use crate::error::{HarnessError, Result};
use crate::harness::{estimate_mise, rate_sweep, run_trial, theoretical_bounds, verify_assumptions, Setup};
use crate::{check, report};

pub const SEED_ENV: &str = "FRACBACK_SEED";

#[derive(Debug, Parser)]
#[command(name = "fracback", about = "Regularized backward fractional diffusion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides FRACBACK_SEED and the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Trial count; overrides trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// first | second | qr; overrides method.
    #[arg(long, global = true)]
    pub method: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the forward problem and export the trajectory and one observation.
    Forward,
    /// Run one trial with full diagnostics.
    Regularize,
    /// Monte Carlo MISE with bound comparison.
    Mise,
    /// Rate fit over sweep.n.
    Sweep,
    /// Run the invariant suite.
    Check,
}

fn usage() -> String {
    let flags = "flags:\n  --config <path>  key-value configuration file\n  --seed <u64>     master seed (also FRACBACK_SEED)\n  --out <dir>      output directory\n  --trials <R>     Monte Carlo trial count\n  --method <m>     first | second | qr\n";
    format!("usage: fracback <forward|regularize|mise|sweep|check> [flags]\n{flags}{}", schema())
}

/// Config with command-line and environment overrides applied.
pub fn resolve(cli: &Cli, env_seed: Option<String>) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::config("--config is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = env_seed {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| HarnessError::config(format!("{SEED_ENV} is not a u64: `{s}`")))?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.trials {
        cfg.trials = r;
    }
    if let Some(m) = &cli.method {
        cfg.method = MethodKind::parse(m)?;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn forward(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg, cfg.params.n)?;
    let dir = &cfg.out_dir;
    report::write_trajectory(&dir.join("trajectory.csv"), &setup.truth)?;
    let data = setup.observe(0)?;
    report::write_observed(&dir.join("observed_trial0.csv"), &data, &setup.grid, &setup.noise, 0)?;
    report::write_json(&dir.join("assumptions.json"), &verify_assumptions(&setup))?;
    println!("forward: {} times, cap {}, written to {}", setup.grid.len(), setup.truth.cap(), dir.display());
    Ok(())
}

fn regularize(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg, cfg.params.n)?;
    let dir = &cfg.out_dir;
    let data = setup.observe(0)?;
    let (states, _) = setup.regularize(&data, 0)?;
    report::write_path(&dir.join("regularized.csv"), &setup.grid, &states)?;
    report::write_observed(&dir.join("observed_trial0.csv"), &data, &setup.grid, &setup.noise, 0)?;
    let trial = run_trial(&setup, 0)?;
    report::write_json(&dir.join("trial.json"), &trial)?;
    for (t, e) in trial.times.iter().zip(&trial.l2_sq) {
        println!("t = {t}: squared L2 error {e:.6e}");
    }
    println!("M_n = {}, Picard iterations {}", setup.m_n(), trial.picard_iterations);
    Ok(())
}

fn mise(cfg: &ExperimentConfig) -> Result<()> {
    let setup = Setup::new(cfg, cfg.params.n)?;
    let dir = &cfg.out_dir;
    let mise = estimate_mise(&setup, cfg.trials)?;
    let bound = theoretical_bounds(&setup).ok();
    report::write_csv(&dir.join("trials.csv"), &report::trials_csv(&mise.trials, mise.t_n))?;
    report::write_csv(&dir.join("mise.csv"), &report::mise_csv(&mise, bound.as_ref()))?;
    report::write_json(&dir.join("mise.json"), &serde_json::json!({ "mise": mise, "bound": bound }))?;
    for (i, (t, e)) in mise.times.iter().zip(&mise.l2).enumerate() {
        let b = bound.as_ref().map_or(f64::NAN, |b| b.l2[i]);
        println!("t = {t}: MISE {:.6e} +- {:.2e}, bound {b:.6e}", e.mean, e.stderr);
    }
    if let (Some(t), Some(e)) = (mise.t_n, mise.at_t_n) {
        let b = bound.as_ref().and_then(|b| b.at_t_n).unwrap_or(f64::NAN);
        println!("t_n = {t}: mean squared distance to u(0) {:.6e} +- {:.2e}, bound {b:.6e}", e.mean, e.stderr);
    }
    if !mise.flagged_trials.is_empty() {
        println!("{} trials with the observed coefficient outside (0, a0]", mise.flagged_trials.len());
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let rep = rate_sweep(cfg)?;
    let dir = &cfg.out_dir;
    report::write_csv(&dir.join("sweep.csv"), &report::sweep_csv(&rep))?;
    report::write_json(&dir.join("sweep.json"), &rep)?;
    for (i, t) in rep.times.iter().enumerate() {
        let note = if rep.noise_free_floor {
            " (noise-free floor)"
        } else if rep.degenerate[i] {
            " (degenerate: MISE not decreasing)"
        } else {
            ""
        };
        println!("t = {t}: slope {:.4}, predicted {:.4}{note}", rep.slopes[i], rep.predicted[i]);
    }
    Ok(())
}

fn run_check() -> i32 {
    let mut failed = 0;
    for (name, outcome) in check::run_all() {
        match outcome {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed == 0 {
        0
    } else {
        2
    }
}

fn report_error(e: &HarnessError) -> i32 {
    eprintln!("error: {e}");
    if e.exit_code() == 1 {
        eprint!("{}", usage());
    }
    e.exit_code()
}

/// Parse `args` and run; returns the process exit code.
pub fn main_with<I, T>(args: I, env_seed: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprint!("{}", usage());
            return 1;
        }
    };
    let run: fn(&ExperimentConfig) -> Result<()> = match cli.command {
        Command::Check => return run_check(),
        Command::Forward => forward,
        Command::Regularize => regularize,
        Command::Mise => mise,
        Command::Sweep => sweep,
    };
    let outcome = resolve(&cli, env_seed).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}
