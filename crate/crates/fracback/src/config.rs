//! Flat `key = value` experiment configuration.
//!
//! One entry per line, `#` starts a comment, nested settings use dotted keys.
//! Lists are comma separated; mode lists are `p:value` pairs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracback_core::problem::{power_law_field, Temporal};
use fracback_core::{Coefficient, Nonlinearity, SpectralField, Source};

use crate::error::{HarnessError, Result};

/// Every accepted key with its meaning; printed as the usage schema.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed (u64); FRACBACK_SEED and --seed override it"),
    ("method", "first | second | qr"),
    ("trials", "Monte Carlo trial count R >= 1"),
    ("eval.times", "comma list of evaluation times in [0, T]"),
    ("sweep.n", "strictly increasing comma list of sample counts"),
    ("output.dir", "directory for CSV and JSON reports"),
    ("problem.beta", "fractional order, > 1/2"),
    ("problem.t_final", "final time T > 0"),
    ("problem.a0", "upper bound of the coefficient"),
    ("problem.coefficient", "constant | affine | oscillating"),
    ("problem.coefficient.value", "constant coefficient value"),
    ("problem.coefficient.start", "affine coefficient a(0)"),
    ("problem.coefficient.slope", "affine coefficient slope"),
    ("problem.coefficient.mean", "oscillating coefficient mean"),
    ("problem.coefficient.amplitude", "oscillating coefficient amplitude"),
    ("problem.coefficient.frequency", "oscillating coefficient frequency"),
    ("problem.nonlinearity", "zero | sine | logistic | cubic | square"),
    ("problem.nonlinearity.scale", "scale factor of sine, logistic, square"),
    ("problem.initial", "modes | power_law"),
    ("problem.initial.modes", "p:value list for u(0)"),
    ("problem.initial.amplitude", "power law amplitude"),
    ("problem.initial.decay", "power law exponent, c_p = amplitude p^-decay"),
    ("problem.initial.cap", "highest mode of the power law"),
    ("problem.source.modes", "p:value list of the source profile, empty for g = 0"),
    ("problem.source.temporal", "constant | decay | oscillating"),
    ("problem.source.rate", "decay rate of the source"),
    ("problem.source.frequency", "oscillation frequency of the source"),
    ("noise.sigma", "node noise level, or a comma list of n levels"),
    ("noise.v_max", "declared bound on the node noise levels"),
    ("noise.vartheta", "source noise amplitude"),
    ("noise.eps", "coefficient noise amplitude"),
    ("params.n", "sample count for single runs"),
    ("params.sigma_rate", "rate exponent in (0, 1) of the cutoff rule"),
    ("params.m_n", "fixed cutoff; omitted means the cutoff rule"),
    ("params.cap", "highest mode kept by second and qr"),
    ("params.q_n", "clamp level: none | auto | number"),
    ("params.picard_tol", "fixed-point tolerance"),
    ("params.picard_max_iters", "fixed-point iteration cap"),
    ("params.quad_nodes", "nodes of the pseudospectral nonlinearity"),
    ("grid.steps", "uniform steps of the regularizer grid"),
    ("truth.cap", "highest mode of the reference solution"),
    ("truth.refine", "forward steps per regularizer step"),
    ("assume.gamma", "source smoothness exponent, > 1"),
    ("assume.alpha", "exponent of the weighted bias budget"),
    ("assume.delta", "aliasing exponent, > 1"),
];

pub fn schema() -> String {
    let width = KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("configuration keys:\n");
    for (k, d) in KEYS {
        out.push_str(&format!("  {k:width$}  {d}\n"));
    }
    out
}

/// Parse `key = value` lines.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(HarnessError::config(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(HarnessError::config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    First,
    Second,
    Qr,
}

impl MethodKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(MethodKind::First),
            "second" => Ok(MethodKind::Second),
            "qr" | "quasi_reversibility" => Ok(MethodKind::Qr),
            other => Err(HarnessError::config(format!("unknown method `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::First => "first",
            MethodKind::Second => "second",
            MethodKind::Qr => "qr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClampSetting {
    None,
    Auto,
    Level(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub beta: f64,
    pub t_final: f64,
    pub a0: f64,
    pub coefficient: Coefficient,
    pub nonlinearity: Nonlinearity,
    pub initial: SpectralField,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// One value (uniform) or one per node.
    pub sigma: Vec<f64>,
    pub v_max: f64,
    pub vartheta: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsConfig {
    pub n: usize,
    pub sigma_rate: f64,
    pub m_n: Option<usize>,
    pub cap: Option<usize>,
    pub q_n: ClampSetting,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub quad_nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub method: MethodKind,
    pub trials: usize,
    pub eval_times: Vec<f64>,
    pub sweep: Vec<usize>,
    pub out_dir: PathBuf,
    pub problem: ProblemConfig,
    pub noise: NoiseConfig,
    pub params: ParamsConfig,
    pub steps: usize,
    pub truth_cap: usize,
    pub truth_refine: usize,
    pub assumptions: AssumptionConfig,
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| HarnessError::config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        self.parsed(key, default)
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| HarnessError::config(format!("`{key}`: cannot parse `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn modes(&self, key: &str) -> Result<Option<SpectralField>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let mut pairs = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, c) = item
                .split_once(':')
                .ok_or_else(|| HarnessError::config(format!("`{key}`: expected p:value, got `{item}`")))?;
            let p: usize = p
                .trim()
                .parse()
                .map_err(|_| HarnessError::config(format!("`{key}`: bad mode `{p}`")))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| HarnessError::config(format!("`{key}`: bad value `{c}`")))?;
            pairs.push((p, c));
        }
        let cap = pairs.iter().map(|(p, _)| *p).max().unwrap_or(0);
        let mut coeffs = vec![0.0; cap + 1];
        for (p, c) in pairs {
            coeffs[p] += c;
        }
        SpectralField::new(coeffs)
            .map(Some)
            .map_err(|e| HarnessError::config(format!("`{key}`: {e}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&parse_kv(text)?)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let r = Reader { map };
        let t_final = r.f64("problem.t_final", 1.0)?;
        let beta = r.f64("problem.beta", 1.0)?;

        let coefficient = match r.raw("problem.coefficient").unwrap_or("constant") {
            "constant" => Coefficient::Constant(r.f64("problem.coefficient.value", 1.0)?),
            "affine" => Coefficient::Affine {
                start: r.f64("problem.coefficient.start", 1.0)?,
                slope: r.f64("problem.coefficient.slope", 0.0)?,
            },
            "oscillating" => Coefficient::Oscillating {
                mean: r.f64("problem.coefficient.mean", 1.0)?,
                amplitude: r.f64("problem.coefficient.amplitude", 0.0)?,
                frequency: r.f64("problem.coefficient.frequency", 1.0)?,
            },
            other => return Err(HarnessError::config(format!("unknown coefficient `{other}`"))),
        };
        let a0 = r.f64("problem.a0", coefficient.range(t_final).1)?;

        let scale = r.f64("problem.nonlinearity.scale", 1.0)?;
        let nonlinearity = match r.raw("problem.nonlinearity").unwrap_or("zero") {
            "zero" => Nonlinearity::Zero,
            "sine" => Nonlinearity::Sine { scale },
            "logistic" => Nonlinearity::Logistic { scale },
            "cubic" => Nonlinearity::Cubic,
            "square" => Nonlinearity::Square { scale },
            other => return Err(HarnessError::config(format!("unknown nonlinearity `{other}`"))),
        };

        let initial = match r.raw("problem.initial").unwrap_or("modes") {
            "modes" => r
                .modes("problem.initial.modes")?
                .unwrap_or_else(|| SpectralField::mode(1, 1.0, 1)),
            "power_law" => power_law_field(
                r.f64("problem.initial.amplitude", 1.0)?,
                r.f64("problem.initial.decay", 2.0)?,
                r.parsed("problem.initial.cap", 64usize)?,
            ),
            other => return Err(HarnessError::config(format!("unknown initial profile `{other}`"))),
        };

        let temporal = match r.raw("problem.source.temporal").unwrap_or("constant") {
            "constant" => Temporal::Constant,
            "decay" => Temporal::Decay {
                rate: r.f64("problem.source.rate", 1.0)?,
            },
            "oscillating" => Temporal::Oscillating {
                frequency: r.f64("problem.source.frequency", 1.0)?,
            },
            other => return Err(HarnessError::config(format!("unknown source profile `{other}`"))),
        };
        let source = match r.modes("problem.source.modes")? {
            Some(spatial) => Source { spatial, temporal },
            None => Source::zero(),
        };

        let sigma = r.list::<f64>("noise.sigma")?.unwrap_or_else(|| vec![0.1]);
        let noise = NoiseConfig {
            v_max: r.f64("noise.v_max", 2.0 * sigma.iter().cloned().fold(0.0, f64::max).max(0.05))?,
            sigma,
            vartheta: r.f64("noise.vartheta", 0.0)?,
            eps: r.f64("noise.eps", 0.0)?,
        };

        let q_n = match r.raw("params.q_n").unwrap_or("none") {
            "none" | "inf" => ClampSetting::None,
            "auto" => ClampSetting::Auto,
            v => ClampSetting::Level(
                v.parse()
                    .map_err(|_| HarnessError::config(format!("`params.q_n`: cannot parse `{v}`")))?,
            ),
        };
        let params = ParamsConfig {
            n: r.parsed("params.n", 256usize)?,
            sigma_rate: r.f64("params.sigma_rate", 0.9)?,
            m_n: r.list::<usize>("params.m_n")?.and_then(|v| v.first().copied()),
            cap: r.list::<usize>("params.cap")?.and_then(|v| v.first().copied()),
            q_n,
            picard_tol: r.f64("params.picard_tol", 1e-10)?,
            picard_max_iters: r.parsed("params.picard_max_iters", 200usize)?,
            quad_nodes: r.list::<usize>("params.quad_nodes")?.and_then(|v| v.first().copied()),
        };

        let cfg = Self {
            seed: r.parsed("seed", 0u64)?,
            method: MethodKind::parse(r.raw("method").unwrap_or("first"))?,
            trials: r.parsed("trials", 100usize)?,
            eval_times: r.list("eval.times")?.unwrap_or_else(|| vec![0.5 * t_final, t_final]),
            sweep: r.list("sweep.n")?.unwrap_or_default(),
            out_dir: PathBuf::from(r.raw("output.dir").unwrap_or("out")),
            problem: ProblemConfig {
                beta,
                t_final,
                a0,
                coefficient,
                nonlinearity,
                initial,
                source,
            },
            noise,
            params,
            steps: r.parsed("grid.steps", 100usize)?,
            truth_cap: r.parsed("truth.cap", 64usize)?,
            truth_refine: r.parsed("truth.refine", 4usize)?,
            assumptions: AssumptionConfig {
                gamma: r.f64("assume.gamma", 2.0)?,
                alpha: r.f64("assume.alpha", 1.0)?,
                delta: r.f64("assume.delta", 2.0)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.problem.t_final;
        if self.trials == 0 {
            return Err(HarnessError::config("trials must be at least 1"));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::config("sweep.n must be strictly increasing"));
        }
        if let Some(bad) = self.eval_times.iter().find(|s| !(**s >= 0.0 && **s <= t)) {
            return Err(HarnessError::config(format!("evaluation time {bad} outside [0, {t}]")));
        }
        if self.eval_times.is_empty() {
            return Err(HarnessError::config("eval.times is empty"));
        }
        if self.steps == 0 || self.truth_refine == 0 {
            return Err(HarnessError::config("grid.steps and truth.refine must be positive"));
        }
        if self.noise.sigma.is_empty() {
            return Err(HarnessError::config("noise.sigma is empty"));
        }
        Ok(())
    }

    /// Per-node noise levels for `n` nodes.
    pub fn sigma_for(&self, n: usize) -> Result<Vec<f64>> {
        match self.noise.sigma.len() {
            1 => Ok(vec![self.noise.sigma[0]; n]),
            len if len == n => Ok(self.noise.sigma.clone()),
            len => Err(HarnessError::config(format!("{len} noise levels for {n} nodes"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_dotted_keys() {
        let map = parse_kv("# header\nproblem.beta = 0.75 # inline\n\nseed=9\n").unwrap();
        assert_eq!(map["problem.beta"], "0.75");
        assert_eq!(map["seed"], "9");
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse_kv("problem.bta = 1").is_err());
        assert!(parse_kv("seed = 1\nseed = 2").is_err());
        assert!(parse_kv("seed").is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.method, MethodKind::First);
        assert_eq!(cfg.eval_times, vec![0.5, 1.0]);
        assert_eq!(cfg.problem.initial, SpectralField::mode(1, 1.0, 1));
    }

    #[test]
    fn mode_lists_and_methods() {
        let cfg = ExperimentConfig::parse(
            "method = qr\nproblem.initial.modes = 1:0.5, 3:-0.25\nproblem.source.modes = 2:1\nproblem.source.temporal = decay\nparams.q_n = auto",
        )
        .unwrap();
        assert_eq!(cfg.method, MethodKind::Qr);
        assert_eq!(cfg.problem.initial.coeffs(), &[0.0, 0.5, 0.0, -0.25]);
        assert_eq!(cfg.problem.source.temporal, Temporal::Decay { rate: 1.0 });
        assert_eq!(cfg.params.q_n, ClampSetting::Auto);
    }

    #[test]
    fn invariants_enforced() {
        assert!(ExperimentConfig::parse("trials = 0").is_err());
        assert!(ExperimentConfig::parse("sweep.n = 64, 64").is_err());
        assert!(ExperimentConfig::parse("eval.times = 1.5").is_err());
        assert!(ExperimentConfig::parse("method = sideways").is_err());
    }

    #[test]
    fn sigma_broadcast() {
        let cfg = ExperimentConfig::parse("noise.sigma = 0.1").unwrap();
        assert_eq!(cfg.sigma_for(3).unwrap(), vec![0.1; 3]);
        let cfg = ExperimentConfig::parse("noise.sigma = 0.1, 0.2").unwrap();
        assert!(cfg.sigma_for(3).is_err());
    }
}
