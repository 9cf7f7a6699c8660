use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use fuzzy_bns::bns::{
    corr_formula, corr_monte_carlo, simulate_variant, CorrelationEstimate, CorrelationSetup, ThetaSchedule,
};
use fuzzy_bns::classifier::{classification_report, estimate_theta, train, ClassificationReport, ThetaEstimate};
use fuzzy_bns::jumplab::{build_dataset, jump_count_table, split, DatasetMeta, WindowedDataset};
use fuzzy_bns::market_data::{
    descriptive_stats, emit_plot_data, parse_bars, realized_volatility, to_fuzzy_series, DescriptiveStats,
    FuzzyBarSeries, PlotKind,
};
use fuzzy_bns::{ExecMode, RiskAttitude, RngStream};

use crate::config::{Loaded, RunConfig, ThetaSource};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest, digest_file, ArtifactRecord, Manifest, RunLock};

pub const SERIES: &str = "series.json";
pub const DATASET_CSV: &str = "dataset.csv";
pub const DATASET_META: &str = "dataset.meta.json";
pub const THETA: &str = "theta.json";

/// One locked run directory plus its manifest.
pub struct Session<'a> {
    loaded: &'a Loaded,
    manifest: Manifest,
    _lock: RunLock,
}

fn json_bytes<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> fuzzy_bns::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

impl<'a> Session<'a> {
    pub fn open(loaded: &'a Loaded) -> CliResult<Self> {
        let lock = RunLock::acquire(&loaded.run_dir)?;
        let manifest = Manifest::load_or_new(&loaded.run_dir, loaded.config.seed)?;
        Ok(Session {
            loaded,
            manifest,
            _lock: lock,
        })
    }

    fn cfg(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn path(&self, name: &str) -> PathBuf {
        self.loaded.run_dir.join(name)
    }

    fn require(&self, name: &str, producer: &'static str) -> CliResult<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingArtifact {
                artifact: p.display().to_string(),
                producer,
            })
        }
    }

    /// Digest of one serialized config section.
    fn section<T: Serialize>(&self, name: &str, value: &T) -> CliResult<(String, String)> {
        Ok((format!("config.{name}"), digest(serde_json::to_string(value)?.as_bytes())))
    }

    fn artifact_input(&self, name: &str) -> CliResult<(String, String)> {
        Ok((name.to_string(), digest_file(&self.path(name))?))
    }

    fn seed_input(&self) -> (String, String) {
        ("seed".to_string(), self.cfg().seed.to_string())
    }

    fn emit(
        &mut self,
        name: &str,
        bytes: &[u8],
        command: &str,
        inputs: &BTreeMap<String, String>,
        seed_dependent: bool,
    ) -> CliResult<()> {
        std::fs::write(self.path(name), bytes)?;
        self.manifest.artifacts.insert(
            name.to_string(),
            ArtifactRecord {
                command: command.to_string(),
                sha256: digest(bytes),
                inputs: inputs.clone(),
                seed_dependent,
            },
        );
        self.manifest.save(&self.loaded.run_dir)
    }

    fn load_series(&self) -> CliResult<FuzzyBarSeries> {
        let p = self.require(SERIES, "ingest")?;
        Ok(serde_json::from_slice(&std::fs::read(p)?)?)
    }

    pub fn ingest(&mut self) -> CliResult<()> {
        let cfg = self.cfg().clone();
        let file = std::fs::File::open(&self.loaded.bars_path)?;
        let bars = parse_bars(std::io::BufReader::new(file), &cfg.input.format)?;
        if bars.len() < 2 {
            return Err(CliError::Validation(vec!["input has fewer than 2 bars".into()]));
        }
        let eta = RiskAttitude::new(cfg.eta)?;
        let series = to_fuzzy_series(bars, eta)?;
        let inputs = BTreeMap::from([
            ("input.bars".to_string(), digest_file(&self.loaded.bars_path)?),
            self.section("input.format", &cfg.input.format)?,
            self.section("eta", &cfg.eta)?,
        ]);
        self.emit(SERIES, &json_bytes(&series)?, "ingest", &inputs, false)
    }

    pub fn stats(&mut self) -> CliResult<()> {
        let series = self.load_series()?;
        let cfg = self.cfg().clone();
        let mut rows: Vec<StatsEntry> = Vec::new();
        for &e in &cfg.stats_etas {
            let s = to_fuzzy_series(series.bars.clone(), RiskAttitude::new(e)?)?;
            rows.push(StatsEntry {
                eta: e,
                fuzzy_price: descriptive_stats(&s.expectations)?,
                pct_change: descriptive_stats(&s.pct_changes)?,
            });
        }
        let inputs = BTreeMap::from([self.artifact_input(SERIES)?, self.section("stats_etas", &cfg.stats_etas)?]);
        self.emit("stats.json", &json_bytes(&rows)?, "stats", &inputs, false)?;
        self.emit("stats.txt", stats_text(&rows).as_bytes(), "stats", &inputs, false)
    }

    pub fn plotdata(&mut self) -> CliResult<()> {
        let series = self.load_series()?;
        let cfg = self.cfg().clone();
        let rv = realized_volatility(&series, cfg.day_boundary)?;
        let inputs = BTreeMap::from([
            self.artifact_input(SERIES)?,
            self.section("day_boundary", &cfg.day_boundary)?,
            self.section("plot", &cfg.plot)?,
        ]);
        self.emit("rv.json", &json_bytes(&rv)?, "plotdata", &inputs, false)?;
        for kind in PlotKind::ALL {
            let table = emit_plot_data(&series, &rv, kind, &cfg.plot)?;
            let bytes = csv_bytes(|b| table.write_csv(b))?;
            self.emit(&format!("plot_{}.csv", kind.name()), &bytes, "plotdata", &inputs, false)?;
        }
        Ok(())
    }

    pub fn jumps(&mut self) -> CliResult<()> {
        let series = self.load_series()?;
        let cfg = self.cfg().clone();
        for s in &cfg.splits {
            s.validate(Some(series.len())).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
        }
        let table = jump_count_table(&series.expectations, &cfg.thresholds, &cfg.splits, cfg.dataset.direction)?;
        let inputs = BTreeMap::from([
            self.artifact_input(SERIES)?,
            self.section("thresholds", &cfg.thresholds)?,
            self.section("splits", &cfg.splits)?,
            self.section("dataset.direction", &cfg.dataset.direction)?,
        ]);
        self.emit("jump_counts.csv", &csv_bytes(|b| table.write_csv(b))?, "jumps", &inputs, false)?;
        self.emit("jump_counts.json", &json_bytes(&table)?, "jumps", &inputs, false)
    }

    pub fn label(&mut self) -> CliResult<()> {
        let series = self.load_series()?;
        let cfg = self.cfg().clone();
        let mut dataset = build_dataset(&series, &cfg.dataset)?;
        for s in &cfg.splits {
            s.validate(Some(series.len())).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
        }
        dataset.meta.splits = cfg.splits.clone();
        let inputs = BTreeMap::from([
            self.artifact_input(SERIES)?,
            self.section("dataset", &cfg.dataset)?,
            self.section("splits", &cfg.splits)?,
        ]);
        self.emit(DATASET_CSV, &csv_bytes(|b| dataset.write_csv(b))?, "label", &inputs, false)?;
        self.emit(DATASET_META, &json_bytes(&dataset.meta)?, "label", &inputs, false)
    }

    pub fn train(&mut self) -> CliResult<()> {
        let csv_path = self.require(DATASET_CSV, "label")?;
        let meta_path = self.require(DATASET_META, "label")?;
        let meta: DatasetMeta = serde_json::from_slice(&std::fs::read(meta_path)?)?;
        let dataset = WindowedDataset::read_csv(std::fs::File::open(csv_path)?, meta)?;
        let cfg = self.cfg().clone();
        let inputs = BTreeMap::from([
            self.artifact_input(DATASET_CSV)?,
            self.artifact_input(DATASET_META)?,
            self.section("net", &cfg.net)?,
            self.section("theta_rule", &cfg.theta_rule)?,
            self.seed_input(),
        ]);
        let root = RngStream::new(cfg.seed, 0).named("train");
        let mut outcomes = Vec::new();
        let mut reports: Vec<(String, ClassificationReport)> = Vec::new();
        for (i, spec) in dataset.meta.splits.iter().enumerate() {
            let (train_rows, test_rows) = split(&dataset, spec)?;
            if train_rows.len() < 2 || test_rows.is_empty() {
                return Err(CliError::Runtime(format!(
                    "split {}: {} training rows and {} test rows; widen the ranges",
                    spec.name,
                    train_rows.len(),
                    test_rows.len()
                )));
            }
            let net = fuzzy_bns::classifier::NetConfig {
                seed: root.derive(i as u64).stream_id,
                ..cfg.net.clone()
            };
            let xs: Vec<Vec<f64>> = train_rows.iter().map(|r| r.features.clone()).collect();
            let ys: Vec<u8> = train_rows.iter().map(|r| r.label).collect();
            let model = train(&xs, &ys, &net)?;
            let tx: Vec<Vec<f64>> = test_rows.iter().map(|r| r.features.clone()).collect();
            let ty: Vec<u8> = test_rows.iter().map(|r| r.label).collect();
            let predicted: Vec<u8> = model.predict_all(&tx)?.iter().map(|p| p.class).collect();
            let report = classification_report(&predicted, &ty)?;
            let estimate = estimate_theta(&report, cfg.theta_rule);
            self.emit(&format!("model_{}.json", spec.name), &json_bytes(&model)?, "train", &inputs, true)?;
            self.emit(&format!("report_{}.json", spec.name), &json_bytes(&report)?, "train", &inputs, true)?;
            outcomes.push(SplitTheta {
                split: spec.name.clone(),
                train_rows: train_rows.len(),
                test_rows: test_rows.len(),
                degenerate_model: model.degenerate_class.is_some(),
                estimate,
                window_predictions: test_rows.iter().map(|r| r.start_index).zip(predicted).collect(),
            });
            reports.push((spec.name.clone(), report));
        }
        let labelled: Vec<(&str, &ClassificationReport)> = reports.iter().map(|(n, r)| (n.as_str(), r)).collect();
        let text = ClassificationReport::to_text(&labelled);
        self.emit("reports.txt", text.as_bytes(), "train", &inputs, true)?;
        let run_level = outcomes.last().map_or(0, |o| o.estimate.theta);
        let theta = ThetaFile {
            rule: cfg.theta_rule,
            run_level_theta: run_level,
            splits: outcomes,
        };
        self.emit(THETA, &json_bytes(&theta)?, "train", &inputs, true)
    }

    pub fn simulate(&mut self) -> CliResult<()> {
        let cfg = self.cfg().clone();
        let sim = &cfg.simulation;
        let mut params = cfg.model.clone();
        let mut inputs = BTreeMap::from([
            self.section("model", &cfg.model)?,
            self.section("simulation", sim)?,
            self.seed_input(),
        ]);
        if sim.theta_source == ThetaSource::Estimated {
            let p = self.require(THETA, "train")?;
            let theta: ThetaFile = serde_json::from_slice(&std::fs::read(&p)?)?;
            params.theta = ThetaSchedule::constant(theta.run_level_theta as f64)?;
            inputs.insert(THETA.to_string(), digest_file(&p)?);
        }
        let root = RngStream::new(cfg.seed, 0).named("simulate");
        let mut estimates: Vec<CorrelationEstimate> = Vec::new();
        for &variant in &sim.variants {
            let stream = root.named(variant.name());
            let setup = CorrelationSetup {
                exec: ExecMode::Parallel,
                ..CorrelationSetup::new(variant, sim.s, sim.ts.clone(), sim.n_paths, sim.dt)
            };
            estimates.extend(corr_formula(&params, &setup, stream.named("formula"))?);
            estimates.extend(corr_monte_carlo(&params, &setup, stream.named("monte_carlo"))?);
            for i in 0..sim.sample_paths {
                let path = simulate_variant(&params, variant, sim.horizon(), sim.dt, stream.named("sample").derive(i as u64))?;
                let bytes = csv_bytes(|b| path.write_csv(b))?;
                self.emit(&format!("path_{}_{i}.csv", variant.name()), &bytes, "simulate", &inputs, true)?;
                let prices = path.price_path(sim.s0)?;
                let mut text = String::from("t,s_l,s_m,s_u\n");
                for (t, p) in path.times.iter().zip(&prices) {
                    let _ = writeln!(text, "{t},{},{},{}", p.l(), p.m(), p.u());
                }
                self.emit(&format!("price_{}_{i}.csv", variant.name()), text.as_bytes(), "simulate", &inputs, true)?;
            }
        }
        let mut text = String::from("variant,method,s,t,value,std_error,n_paths,degenerate\n");
        for e in &estimates {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{}",
                e.variant.name(),
                serde_json::to_value(e.method)?.as_str().unwrap_or_default(),
                e.s,
                e.t,
                e.value,
                e.std_error,
                e.n_paths,
                e.degenerate
            );
        }
        self.emit("correlation.csv", text.as_bytes(), "simulate", &inputs, true)?;
        self.emit("correlation.json", &json_bytes(&estimates)?, "simulate", &inputs, true)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsEntry {
    pub eta: f64,
    pub fuzzy_price: DescriptiveStats,
    pub pct_change: DescriptiveStats,
}

fn stats_text(rows: &[StatsEntry]) -> String {
    let mut out = format!("{:<10}", "");
    for r in rows {
        let _ = write!(out, " {:>16} {:>16}", format!("price eta={}", r.eta), format!("change eta={}", r.eta));
    }
    out.push('\n');
    type Field = (&'static str, fn(&DescriptiveStats) -> f64);
    let fields: [Field; 6] = [
        ("mean", |s| s.mean),
        ("median", |s| s.median),
        ("minimum", |s| s.minimum),
        ("maximum", |s| s.maximum),
        ("skewness", |s| s.skewness),
        ("kurtosis", |s| s.kurtosis),
    ];
    for (name, get) in fields {
        let _ = write!(out, "{name:<10}");
        for r in rows {
            let _ = write!(out, " {:>16.6} {:>16.6}", get(&r.fuzzy_price), get(&r.pct_change));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitTheta {
    pub split: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub degenerate_model: bool,
    pub estimate: ThetaEstimate,
    /// `(start_index, predicted theta)` per test window.
    pub window_predictions: Vec<(usize, u8)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaFile {
    pub rule: fuzzy_bns::classifier::ThetaRule,
    /// Estimate from the last configured split (the most recent test period).
    pub run_level_theta: u8,
    pub splits: Vec<SplitTheta>,
}
