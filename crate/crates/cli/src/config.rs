use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fuzzy_bns::bns::{ModelParams, ModelVariant, TimeGrid, DEFAULT_DT};
use fuzzy_bns::classifier::{NetConfig, ThetaRule};
use fuzzy_bns::jumplab::{DatasetConfig, SplitSpec};
use fuzzy_bns::market_data::{DayBoundary, FormatConfig, PlotOptions};
use fuzzy_bns::Tfn;

use crate::error::{CliError, CliResult};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Bar file, relative to the config file's directory.
    pub bars: PathBuf,
    #[serde(default)]
    pub format: FormatConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    /// Constant theta from the training step's run-level estimate.
    #[default]
    Estimated,
    /// `model.theta` exactly as configured.
    Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub variants: Vec<ModelVariant>,
    pub dt: f64,
    pub n_paths: usize,
    pub s: f64,
    pub ts: Vec<f64>,
    /// Number of individual paths written per variant.
    pub sample_paths: usize,
    pub s0: Tfn,
    #[serde(default)]
    pub theta_source: ThetaSource,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            variants: ModelVariant::ALL.to_vec(),
            dt: DEFAULT_DT,
            n_paths: 1000,
            s: 1.0,
            ts: vec![2.0, 4.0, 8.0],
            sample_paths: 1,
            s0: Tfn::crisp(100.0),
            theta_source: ThetaSource::Estimated,
        }
    }
}

impl SimulationConfig {
    pub fn horizon(&self) -> f64 {
        self.ts.iter().copied().fold(self.s, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub input: InputConfig,
    /// Run directory, relative to the config file's directory.
    pub output_dir: PathBuf,
    pub seed: u64,
    pub eta: f64,
    /// Risk attitudes reported by `stats`.
    pub stats_etas: Vec<f64>,
    /// Thresholds K (percent) for the jump-count table.
    pub thresholds: Vec<f64>,
    pub dataset: DatasetConfig,
    pub splits: Vec<SplitSpec>,
    pub net: NetConfig,
    #[serde(default)]
    pub theta_rule: ThetaRule,
    pub model: ModelParams,
    #[serde(default)]
    pub day_boundary: DayBoundary,
    #[serde(default)]
    pub plot: PlotOptions,
    pub simulation: SimulationConfig,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub thresholds: Vec<f64>,
}

/// A validated configuration with its paths resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub bars_path: PathBuf,
    pub run_dir: PathBuf,
    /// Digest of the configuration after overrides.
    pub config_digest: String,
}

impl RunConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.format_version != CONFIG_FORMAT_VERSION {
            v.push(format!(
                "format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                self.format_version
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            v.push(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        for e in &self.stats_etas {
            if !(0.0..=1.0).contains(e) {
                v.push(format!("stats_etas: {e} is outside [0, 1]"));
            }
        }
        if self.thresholds.is_empty() {
            v.push("thresholds must not be empty".into());
        }
        for k in &self.thresholds {
            if !(*k > 0.0 && k.is_finite()) {
                v.push(format!("thresholds: K must be positive, got {k}"));
            }
        }
        let d = &self.dataset;
        if !(d.k > 0.0) {
            v.push(format!("dataset.k must be positive, got {}", d.k));
        }
        if d.window == 0 || d.lookahead == 0 || d.min_jumps == 0 {
            v.push("dataset.window, lookahead and min_jumps must be positive".into());
        }
        if self.splits.is_empty() {
            v.push("at least one split is required".into());
        }
        for s in &self.splits {
            if let Err(e) = s.validate(None) {
                v.push(e.to_string());
            }
        }
        let mut names: Vec<&str> = self.splits.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            v.push("split names must be unique".into());
        }
        v.extend(self.net.violations().into_iter().map(|m| format!("net: {m}")));
        if self.net.layer_sizes.first() != Some(&d.window) {
            v.push(format!(
                "net.layer_sizes must start with the window width {}",
                d.window
            ));
        }
        v.extend(self.model.violations().into_iter().map(|m| format!("model: {m}")));
        let sim = &self.simulation;
        if sim.variants.is_empty() {
            v.push("simulation.variants must not be empty".into());
        }
        if sim.n_paths < fuzzy_bns::bns::correlation::MIN_PATHS {
            v.push(format!(
                "simulation.n_paths must be at least {}",
                fuzzy_bns::bns::correlation::MIN_PATHS
            ));
        }
        if !(sim.s > 0.0) || sim.ts.iter().any(|&t| t < sim.s) || sim.ts.is_empty() {
            v.push("simulation needs 0 < s <= every t".into());
        } else {
            match TimeGrid::new(sim.horizon(), sim.dt) {
                Ok(g) => {
                    for t in std::iter::once(sim.s).chain(sim.ts.iter().copied()) {
                        if g.index_of(t).is_err() {
                            v.push(format!("simulation: time {t} is not on the dt grid"));
                        }
                    }
                }
                Err(e) => v.push(format!("simulation: {e}")),
            }
        }
        if !(sim.s0.l() > 0.0) {
            v.push("simulation.s0 must be strictly positive".into());
        }
        v
    }

    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Loaded> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("cannot read config {}: {e}", path.display())]))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(vec![format!("config {}: {e}", path.display())]))?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(eta) = overrides.eta {
            config.eta = eta;
        }
        if !overrides.thresholds.is_empty() {
            config.thresholds = overrides.thresholds.clone();
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let bars_path = base.join(&config.input.bars);
        let run_dir = match &overrides.out {
            Some(out) => out.clone(),
            None => base.join(&config.output_dir),
        };
        let mut v = config.violations();
        if !bars_path.is_file() {
            v.push(format!("input.bars: {} does not exist", bars_path.display()));
        }
        if !v.is_empty() {
            return Err(CliError::Validation(v));
        }
        let config_digest = crate::manifest::digest(serde_json::to_string(&config)?.as_bytes());
        Ok(Loaded {
            config,
            bars_path,
            run_dir,
            config_digest,
        })
    }
}
