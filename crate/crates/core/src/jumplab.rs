//! Big-jump detection, windowed datasets with lookahead labels, and
//! time-range splits.
//!
//! Bars are indexed from 0. The percentage change into bar `k` (`k >= 1`)
//! is the feature attached to bar `k`, and a jump at `k` compares bar `k`'s
//! expectation with bar `k - 1`'s.

use std::io::{Read, Write};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market_data::FuzzyBarSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpDirection {
    /// Falls of at least K percent.
    #[default]
    Down,
    /// Moves of at least K percent either way.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub index: usize,
    pub timestamp: Option<DateTime<FixedOffset>>,
    /// Size of the move in percent of the previous expectation.
    pub drop_pct: f64,
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return domain(format!("threshold K must be positive (percent), got {k}"));
    }
    Ok(())
}

/// Move into each bar `k >= 1` that qualifies as a big jump; `out[0]` is `None`.
fn jump_sizes(expectations: &[f64], k: f64, direction: JumpDirection) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(expectations.len());
    if !expectations.is_empty() {
        out.push(None);
    }
    for w in expectations.windows(2) {
        let drop = 100.0 * (w[0] - w[1]) / w[0];
        let size = match direction {
            JumpDirection::Down => drop,
            JumpDirection::Absolute => drop.abs(),
        };
        out.push((size >= k).then_some(size));
    }
    out
}

/// Jump detection on a bare expectation sequence.
pub fn detect_in_expectations(expectations: &[f64], k: f64, direction: JumpDirection) -> Result<Vec<JumpEvent>> {
    check_k(k)?;
    Ok(jump_sizes(expectations, k, direction)
        .into_iter()
        .enumerate()
        .filter_map(|(index, s)| {
            s.map(|drop_pct| JumpEvent {
                index,
                timestamp: None,
                drop_pct,
            })
        })
        .collect())
}

pub fn detect_big_jumps(series: &FuzzyBarSeries, k: f64, direction: JumpDirection) -> Result<Vec<JumpEvent>> {
    let mut events = detect_in_expectations(&series.expectations, k, direction)?;
    for e in &mut events {
        e.timestamp = Some(series.bars[e.index].timestamp);
    }
    Ok(events)
}

/// Inclusive bar-index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return domain(format!("empty index range [{start}, {end}]"));
        }
        Ok(IndexRange { start, end })
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn covers(&self, first: usize, last: usize) -> bool {
        self.start <= first && last <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub train: IndexRange,
    pub test: IndexRange,
}

impl SplitSpec {
    pub fn new(name: impl Into<String>, train: IndexRange, test: IndexRange) -> Result<Self> {
        let s = SplitSpec {
            name: name.into(),
            train,
            test,
        };
        s.validate(None)?;
        Ok(s)
    }

    /// Test must start strictly after training ends and, when `n_bars` is
    /// given, both ranges must lie inside the series.
    pub fn validate(&self, n_bars: Option<usize>) -> Result<()> {
        if self.train.start > self.train.end || self.test.start > self.test.end {
            return domain(format!("split {}: empty range", self.name));
        }
        if self.train.end >= self.test.start {
            return domain(format!(
                "split {}: train [{}, {}] overlaps or follows test [{}, {}]",
                self.name, self.train.start, self.train.end, self.test.start, self.test.end
            ));
        }
        if let Some(n) = n_bars {
            if self.test.end >= n {
                return domain(format!("split {}: test ends at {} but the series has {n} bars", self.name, self.test.end));
            }
        }
        Ok(())
    }

    /// The whole span `[train.start, test.end]`.
    pub fn span(&self) -> IndexRange {
        IndexRange {
            start: self.train.start,
            end: self.test.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCountRow {
    pub k: f64,
    pub total: usize,
    /// One count per split, over the split's whole span.
    pub per_split: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCountTable {
    pub split_names: Vec<String>,
    pub rows: Vec<JumpCountRow>,
}

impl JumpCountTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["k".to_string(), "total".to_string()];
        header.extend(self.split_names.iter().cloned());
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.k.to_string(), r.total.to_string()];
            rec.extend(r.per_split.iter().map(|c| c.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn jump_count_table(
    expectations: &[f64],
    ks: &[f64],
    splits: &[SplitSpec],
    direction: JumpDirection,
) -> Result<JumpCountTable> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let events = detect_in_expectations(expectations, k, direction)?;
        let per_split = splits
            .iter()
            .map(|s| {
                let span = s.span();
                events.iter().filter(|e| span.contains(e.index)).count()
            })
            .collect();
        rows.push(JumpCountRow {
            k,
            total: events.len(),
            per_split,
        });
    }
    Ok(JumpCountTable {
        split_names: splits.iter().map(|s| s.name.clone()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Non-overlapping windows stacked end to end.
    #[default]
    Stacked,
    /// Stride-1 windows.
    Sliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub k: f64,
    pub window: usize,
    pub lookahead: usize,
    pub min_jumps: usize,
    pub mode: WindowMode,
    pub direction: JumpDirection,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            k: 0.1,
            window: 10,
            lookahead: 10,
            min_jumps: 2,
            mode: WindowMode::Stacked,
            direction: JumpDirection::Down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    /// First bar index covered by the window.
    pub start_index: usize,
    pub features: Vec<f64>,
    pub label: u8,
}

impl DatasetRow {
    pub fn end_index(&self) -> usize {
        self.start_index + self.features.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub config: DatasetConfig,
    pub n_bars: usize,
    #[serde(default)]
    pub splits: Vec<SplitSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub meta: DatasetMeta,
    pub rows: Vec<DatasetRow>,
}

pub fn build_dataset(series: &FuzzyBarSeries, cfg: &DatasetConfig) -> Result<WindowedDataset> {
    build_dataset_from_expectations(&series.expectations, cfg)
}

/// Rows of `window` consecutive percentage changes; a row is labeled 1 when
/// at least `min_jumps` big jumps fall in the `lookahead` bars strictly after it.
pub fn build_dataset_from_expectations(expectations: &[f64], cfg: &DatasetConfig) -> Result<WindowedDataset> {
    check_k(cfg.k)?;
    let (w, l) = (cfg.window, cfg.lookahead);
    if w == 0 || l == 0 || cfg.min_jumps == 0 {
        return domain("window, lookahead and min_jumps must be positive");
    }
    let n = expectations.len();
    if n < w + l + 1 {
        return domain(format!("series of {n} bars is shorter than window + lookahead + 1 = {}", w + l + 1));
    }
    let pct: Vec<f64> = expectations
        .windows(2)
        .map(|p| 100.0 * (p[1] - p[0]) / p[0])
        .collect();
    let is_jump: Vec<bool> = jump_sizes(expectations, cfg.k, cfg.direction)
        .into_iter()
        .map(|s| s.is_some())
        .collect();
    // prefix[i] = number of jumps among bars 0..i
    let mut prefix = vec![0usize; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + is_jump[i] as usize;
    }
    let stride = match cfg.mode {
        WindowMode::Stacked => w,
        WindowMode::Sliding => 1,
    };
    let mut rows = Vec::new();
    let mut start = 1;
    while start + w + l <= n {
        let end = start + w - 1;
        let features = pct[start - 1..end].to_vec();
        if features.iter().any(|f| !f.is_finite()) {
            return domain(format!("non-finite feature in window starting at bar {start}"));
        }
        let jumps = prefix[end + l + 1] - prefix[end + 1];
        rows.push(DatasetRow {
            start_index: start,
            features,
            label: (jumps >= cfg.min_jumps) as u8,
        });
        start += stride;
    }
    Ok(WindowedDataset {
        meta: DatasetMeta {
            config: *cfg,
            n_bars: n,
            splits: Vec::new(),
        },
        rows,
    })
}

/// Rows entirely inside the train range and rows entirely inside the test
/// range; rows straddling a boundary go to neither.
pub fn split(dataset: &WindowedDataset, spec: &SplitSpec) -> Result<(Vec<DatasetRow>, Vec<DatasetRow>)> {
    spec.validate(Some(dataset.meta.n_bars))?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in &dataset.rows {
        let (a, b) = (r.start_index, r.end_index());
        if spec.train.covers(a, b) {
            train.push(r.clone());
        } else if spec.test.covers(a, b) {
            test.push(r.clone());
        }
    }
    Ok((train, test))
}

impl WindowedDataset {
    pub fn width(&self) -> usize {
        self.meta.config.window
    }

    /// Columns `start_index, f1..fW, label`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["start_index".to_string()];
        header.extend((1..=self.width()).map(|i| format!("f{i}")));
        header.push("label".into());
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.start_index.to_string()];
            rec.extend(r.features.iter().map(|f| f.to_string()));
            rec.push(r.label.to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, meta: DatasetMeta) -> Result<Self> {
        let w = meta.config.window;
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |m: String| Error::Parse { line, message: m };
            if rec.len() != w + 2 {
                return Err(bad(format!("expected {} fields, found {}", w + 2, rec.len())));
            }
            let start_index = rec[0].parse().map_err(|_| bad(format!("bad start_index {:?}", &rec[0])))?;
            let features = (1..=w)
                .map(|i| rec[i].parse::<f64>().map_err(|_| bad(format!("bad feature {:?}", &rec[i]))))
                .collect::<Result<Vec<_>>>()?;
            let label = match &rec[w + 1] {
                "0" => 0,
                "1" => 1,
                other => return Err(bad(format!("label must be 0 or 1, got {other:?}"))),
            };
            rows.push(DatasetRow {
                start_index,
                features,
                label,
            });
        }
        Ok(WindowedDataset { meta, rows })
    }
}
