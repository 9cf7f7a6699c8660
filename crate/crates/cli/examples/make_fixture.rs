//! Regenerates the bundled synthetic bar file and its run configuration.
//!
//! cargo run -p fuzzy-bns-cli --example make_fixture -- crates/cli/fixtures

use std::path::PathBuf;

use fbns_cli::config::{InputConfig, SimulationConfig, CONFIG_FORMAT_VERSION};
use fbns_cli::RunConfig;
use fuzzy_bns::bns::ModelParams;
use fuzzy_bns::classifier::{NetConfig, ThetaRule};
use fuzzy_bns::jumplab::{DatasetConfig, IndexRange, SplitSpec};
use fuzzy_bns::levy::SubordinatorSpec;
use fuzzy_bns::market_data::{synthetic_bars, write_bars, DayBoundary, FormatConfig, PlotOptions, SyntheticConfig};
use fuzzy_bns::{RngStream, Tfn};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/fixtures".into()));
    std::fs::create_dir_all(&dir)?;

    // about 20 drops of 0.25% a day against roughly 0.08% bar noise, with
    // drift offsetting the mean jump loss
    let spec = SubordinatorSpec::new(20.0 / 300.0, 400.0, 1.0)?;
    let market = ModelParams {
        mu: 0.05,
        rho: -1.0,
        lambda: 300.0,
        sigma0_sq: Tfn::crisp(1.6e-4),
        spec,
        spec_b: spec.with_intensity_factor(4.0)?,
        fuzz_spread: 0.0,
        ..ModelParams::default()
    };
    let start = chrono::DateTime::parse_from_rfc3339("2020-09-27T18:00:00-05:00")?;
    let bars = synthetic_bars(&SyntheticConfig::futures_like(start, 10, market), RngStream::new(20201002, 0))?;
    let mut f = std::fs::File::create(dir.join("bars.csv"))?;
    write_bars(&mut f, &bars, &FormatConfig::default())?;

    let base_spec = SubordinatorSpec::new(1.0, 2.0, 1.0)?;
    let config = RunConfig {
        format_version: CONFIG_FORMAT_VERSION,
        input: InputConfig {
            bars: "bars.csv".into(),
            format: FormatConfig::default(),
        },
        output_dir: "run".into(),
        seed: 42,
        eta: 0.5,
        stats_etas: vec![0.0, 0.5, 1.0],
        thresholds: vec![0.01, 0.03, 0.05, 0.1, 0.5, 1.0],
        dataset: DatasetConfig::default(),
        splits: vec![
            SplitSpec::new("T1", IndexRange::new(0, 999)?, IndexRange::new(1000, 1379)?)?,
            SplitSpec::new("T2", IndexRange::new(1380, 2199)?, IndexRange::new(2200, 2749)?)?,
        ],
        net: NetConfig {
            epochs: 60,
            ..NetConfig::default()
        },
        theta_rule: ThetaRule::F1Comparison,
        model: ModelParams {
            rho: -0.5,
            sigma0_sq: Tfn::new(0.45, 0.5, 0.55)?,
            spec: base_spec,
            spec_b: base_spec.with_intensity_factor(4.0)?,
            ..ModelParams::default()
        },
        day_boundary: DayBoundary::default(),
        plot: PlotOptions::default(),
        simulation: SimulationConfig {
            n_paths: 200,
            ..SimulationConfig::default()
        },
    };
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;
    println!("{} bars written to {}", bars.len(), dir.display());
    Ok(())
}
