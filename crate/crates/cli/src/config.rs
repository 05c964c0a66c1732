//! Resolved experiment configuration: defaults, then a JSON file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

/// Raised for any invalid configuration; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QbCompare,
    QbDepth,
    QbSweep,
    CbDepth,
    CbSweep,
    Bayes,
    NoiseSweep,
    TopologyList,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::QbCompare => "qb-compare",
            Self::QbDepth => "qb-depth",
            Self::QbSweep => "qb-sweep",
            Self::CbDepth => "cb-depth",
            Self::CbSweep => "cb-sweep",
            Self::Bayes => "bayes",
            Self::NoiseSweep => "noise-sweep",
            Self::TopologyList => "topology-list",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Register size for `qb-compare`.
    pub n: usize,
    /// Probes compared by `qb-compare`: topology names or edge-list files,
    /// plus the fixed probes `GHZ`, `E` (all excited) and `OPT`.
    pub topologies: Vec<String>,
    /// Topology name or edge-list file for single-topology experiments.
    pub topology: String,
    pub allow_overdegree: bool,
    pub l1: usize,
    pub l2: usize,
    /// Layer counts swept by `qb-depth` (L1) and `cb-depth` (L2).
    pub depths: Vec<usize>,
    /// Sensing phase in radians.
    pub delta: f64,
    /// Drive phase offset in radians.
    pub alpha: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub conv_tol: f64,
    /// Measurement counts for `bayes`.
    pub nu: Vec<u64>,
    pub trials: usize,
    pub prior: (f64, f64),
    pub grid_points: usize,
    pub lambda_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    /// Relative QB difference below which `qb-compare` ranks probes equal.
    pub rank_tolerance: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    pub checkpoint_every: usize,
    pub emit_plot_script: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::QbCompare,
            n: 4,
            topologies: Vec::new(),
            topology: "F4".into(),
            allow_overdegree: false,
            l1: 1,
            l2: 1,
            depths: vec![1, 2, 3],
            delta: 0.05,
            alpha: 0.0,
            restarts: 5,
            max_iters: 2000,
            learning_rate: 0.01,
            conv_tol: 1e-10,
            nu: vec![10, 100, 1_000, 10_000],
            trials: 20,
            prior: qsn_core::bayes::DEFAULT_PRIOR,
            grid_points: qsn_core::bayes::DEFAULT_GRID_POINTS,
            lambda_grid: (0..10).map(|k| k as f64 / 10.0).collect(),
            delta_grid: vec![1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0],
            alpha_grid: (0..17)
                .map(|k| std::f64::consts::TAU * k as f64 / 16.0)
                .collect(),
            rank_tolerance: 1e-6,
            seed: 0,
            output_dir: None,
            checkpoint_dir: None,
            checkpoint_every: 100,
            emit_plot_script: false,
        }
    }
}

/// Flags shared by every experiment. Anything given here overrides the
/// `--config` file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// JSON file with any subset of the configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub topologies: Option<Vec<String>>,
    /// Built-in name (L4, R4, S4, F4, L9, S9, RS9, F9, GHZ4, GHZ9) or edge-list file.
    #[arg(long)]
    pub topology: Option<String>,
    /// Accept custom graphs with more than four links per node.
    #[arg(long)]
    pub allow_overdegree: bool,
    #[arg(long = "L1")]
    pub l1: Option<usize>,
    #[arg(long = "L2")]
    pub l2: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub conv_tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<u64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub prior_lo: Option<f64>,
    #[arg(long)]
    pub prior_hi: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub rank_tolerance: Option<f64>,
    /// Falls back to the config file, then to QSN_SEED, then to 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to `results/<experiment>`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Save optimiser checkpoints here and resume from any found.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Also write a matplotlib script that plots the CSV outputs.
    #[arg(long)]
    pub emit_plot_script: bool,
}

fn read_config_file(path: &Path) -> anyhow::Result<(ExperimentConfig, bool)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{} is not valid JSON: {e}", path.display())))?;
    // A run manifest embeds its configuration under "config".
    let value = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => inner.clone(),
        _ => value,
    };
    let has_seed = value.get("seed").is_some();
    let cfg =
        serde_json::from_value(value).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok((cfg, has_seed))
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var("QSN_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| invalid(format!("QSN_SEED='{s}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, args: &RunArgs) -> anyhow::Result<Self> {
        let (mut cfg, file_seed) = match &args.config {
            Some(path) => read_config_file(path)?,
            None => (Self::default(), false),
        };
        cfg.experiment = experiment;

        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = args.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        take!(
            n,
            topologies,
            topology,
            l1,
            l2,
            depths,
            delta,
            alpha,
            restarts,
            max_iters,
            learning_rate,
            conv_tol,
            nu,
            trials,
            grid_points,
            lambda_grid,
            delta_grid,
            alpha_grid,
            rank_tolerance,
            checkpoint_every
        );
        if let Some(lo) = args.prior_lo {
            cfg.prior.0 = lo;
        }
        if let Some(hi) = args.prior_hi {
            cfg.prior.1 = hi;
        }
        if args.output_dir.is_some() {
            cfg.output_dir = args.output_dir.clone();
        }
        if args.checkpoint_dir.is_some() {
            cfg.checkpoint_dir = args.checkpoint_dir.clone();
        }
        cfg.allow_overdegree |= args.allow_overdegree;
        cfg.emit_plot_script |= args.emit_plot_script;

        if let Some(seed) = args.seed {
            cfg.seed = seed;
        } else if !file_seed {
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
        }
        if cfg.topologies.is_empty() {
            cfg.topologies = default_topologies(cfg.n);
        }
        if cfg.output_dir.is_none() {
            cfg.output_dir = Some(Path::new("results").join(experiment.name()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reloads the configuration recorded in a manifest.
    pub fn from_manifest(path: &Path) -> anyhow::Result<Self> {
        let (cfg, _) = read_config_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().unwrap_or(Path::new("results"))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let max = qsn_core::tol::MAX_QUBITS;
        if self.n == 0 || self.n > max {
            return Err(invalid(format!("--n must be in 1..={max}, got {}", self.n)));
        }
        if self.l1 == 0 || self.l2 == 0 {
            return Err(invalid("layer counts must be at least 1"));
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(invalid("--depths needs at least one positive layer count"));
        }
        if self.restarts == 0 {
            return Err(invalid("--restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(invalid("--max-iters must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("--learning-rate must be positive"));
        }
        if !(self.conv_tol >= 0.0) {
            return Err(invalid("--conv-tol must be non-negative"));
        }
        if !self.delta.is_finite() || !self.alpha.is_finite() {
            return Err(invalid("--delta and --alpha must be finite"));
        }
        if self.nu.is_empty() || self.nu.contains(&0) {
            return Err(invalid(
                "--nu needs at least one positive measurement count",
            ));
        }
        if self.trials == 0 {
            return Err(invalid("--trials must be at least 1"));
        }
        let (lo, hi) = self.prior;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("prior interval [{lo}, {hi}] is empty")));
        }
        if self.grid_points < 2 {
            return Err(invalid("--grid-points must be at least 2"));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l))
        {
            return Err(invalid("--lambda-grid values must lie in [0, 1]"));
        }
        for (name, grid) in [
            ("--delta-grid", &self.delta_grid),
            ("--alpha-grid", &self.alpha_grid),
        ] {
            if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{name} needs finite values")));
            }
        }
        if !(self.rank_tolerance >= 0.0) {
            return Err(invalid("--rank-tolerance must be non-negative"));
        }
        if self.checkpoint_every == 0 {
            return Err(invalid("--checkpoint-every must be at least 1"));
        }
        Ok(())
    }

    pub fn settings(&self) -> qsn_core::OptimizerSettings {
        qsn_core::OptimizerSettings {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            adam: qsn_core::AdamConfig {
                eta: self.learning_rate,
                ..Default::default()
            },
            conv_tol: self.conv_tol,
            ..Default::default()
        }
    }
}

fn default_topologies(n: usize) -> Vec<String> {
    let names: &[&str] = match n {
        9 => &["L9", "S9", "RS9", "F9", "GHZ", "E"],
        _ => &["L4", "R4", "S4", "F4", "GHZ", "E"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_settings() {
        let cfg = ExperimentConfig::resolve(Experiment::QbCompare, &RunArgs::default()).unwrap();
        assert_eq!((cfg.delta, cfg.alpha), (0.05, 0.0));
        assert_eq!((cfg.restarts, cfg.max_iters), (5, 2000));
        assert_eq!(cfg.topologies, ["L4", "R4", "S4", "F4", "GHZ", "E"]);
        assert_eq!(cfg.output_dir(), Path::new("results/qb-compare"));
        assert_eq!(cfg.lambda_grid.len(), 10);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("qsn-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"l1": 2, "seed": 5, "topology": "S4"}"#).unwrap();
        let args = RunArgs {
            config: Some(path.clone()),
            l1: Some(3),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(Experiment::QbDepth, &args).unwrap();
        assert_eq!((cfg.l1, cfg.seed, cfg.topology.as_str()), (3, 5, "S4"));

        std::fs::write(&path, r#"{"no_such_field": 1}"#).unwrap();
        let err = ExperimentConfig::resolve(Experiment::QbDepth, &args).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            RunArgs {
                nu: Some(vec![0]),
                ..Default::default()
            },
            RunArgs {
                restarts: Some(0),
                ..Default::default()
            },
            RunArgs {
                lambda_grid: Some(vec![1.5]),
                ..Default::default()
            },
            RunArgs {
                prior_lo: Some(0.2),
                ..Default::default()
            },
            RunArgs {
                l1: Some(0),
                ..Default::default()
            },
        ] {
            let err = ExperimentConfig::resolve(Experiment::Bayes, &args).unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{err}");
        }
    }
}
