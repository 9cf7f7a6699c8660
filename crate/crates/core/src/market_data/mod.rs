//! OHLC bar ingestion and the fuzzy-price view of a bar series.
//!
//! Each bar becomes the triangular number `(low, close, high)`; its
//! risk-attitude expectation is the series' working price.

mod plot;
mod stats;
mod synthetic;

pub use plot::{emit_plot_data, PlotKind, PlotOptions, PlotTable};
pub use stats::{descriptive_stats, realized_volatility, DailyRv, DayBoundary, DescriptiveStats, RealizedVolSeries};
pub use synthetic::{synthetic_bars, SyntheticConfig};

use std::io::{Read, Write};

use chrono::{DateTime, FixedOffset, SecondsFormat, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{RiskAttitude, Tfn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: DateTime<FixedOffset>,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
}

impl Bar {
    /// Checks positivity and `low <= min(open, close) <= max(open, close) <= high`.
    pub fn check(&self) -> std::result::Result<(), String> {
        let px = [self.open, self.high, self.low, self.close];
        if px.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and positive".into());
        }
        if !(self.low <= self.open.min(self.close) && self.open.max(self.close) <= self.high) {
            return Err(format!(
                "OHLC ordering violated (open {}, high {}, low {}, close {})",
                self.open, self.high, self.low, self.close
            ));
        }
        if let Some(v) = self.volume {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("volume must be non-negative, got {v}"));
            }
        }
        if self.timestamp.second() != 0 || self.timestamp.nanosecond() != 0 {
            return Err("timestamps carry minute precision only".into());
        }
        Ok(())
    }

    pub fn fuzzy_price(&self) -> Tfn {
        Tfn::new_unchecked(self.low, self.close, self.high)
    }
}

/// Column layout of the delimited input. Timestamps are RFC 3339 with an
/// explicit UTC offset, e.g. `2020-10-02T18:00:00-05:00`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatConfig {
    pub delimiter: char,
    pub timestamp: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: Option<String>,
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig {
            delimiter: ',',
            timestamp: "timestamp".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: Some("volume".into()),
        }
    }
}

impl FormatConfig {
    fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(Error::Domain(format!("delimiter {:?} is not ASCII", self.delimiter)))
        }
    }
}

/// Reads and validates bars. Rows must already be in strictly increasing
/// time order; nothing is re-sorted. Line numbers in errors count the header
/// as line 1.
pub fn parse_bars<R: Read>(input: R, cfg: &FormatConfig) -> Result<Vec<Bar>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter_byte()?)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (it, io, ih, il, ic) = (col(&cfg.timestamp)?, col(&cfg.open)?, col(&cfg.high)?, col(&cfg.low)?, col(&cfg.close)?);
    // an absent volume column is fine; volume is optional
    let iv = cfg.volume.as_deref().and_then(|v| header.iter().position(|h| h == v));

    let mut bars: Vec<Bar> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{name}: cannot parse {:?} as a number", field(i)),
            })
        };
        let timestamp = DateTime::parse_from_rfc3339(field(it)).map_err(|e| Error::Parse {
            line,
            message: format!("timestamp {:?}: {e}", field(it)),
        })?;
        let volume = match iv.map(field) {
            None | Some("") => None,
            Some(_) => Some(num(iv.unwrap(), "volume")?),
        };
        let bar = Bar {
            timestamp,
            open: num(io, "open")?,
            high: num(ih, "high")?,
            low: num(il, "low")?,
            close: num(ic, "close")?,
            volume,
        };
        bar.check().map_err(|message| Error::Validation { line, message })?;
        if let Some(prev) = bars.last() {
            if bar.timestamp <= prev.timestamp {
                return Err(Error::Validation {
                    line,
                    message: format!(
                        "timestamp {} does not follow {} (rows must be strictly increasing)",
                        bar.timestamp, prev.timestamp
                    ),
                });
            }
        }
        bars.push(bar);
    }
    Ok(bars)
}

/// Writes bars in the layout `parse_bars` reads; the round trip is exact.
pub fn write_bars<W: Write>(out: W, bars: &[Bar], cfg: &FormatConfig) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(cfg.delimiter_byte()?)
        .from_writer(out);
    let mut header = vec![&cfg.timestamp, &cfg.open, &cfg.high, &cfg.low, &cfg.close];
    if let Some(v) = &cfg.volume {
        header.push(v);
    }
    w.write_record(header)?;
    for b in bars {
        let mut row = vec![
            b.timestamp.to_rfc3339_opts(SecondsFormat::Secs, false),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
        ];
        if cfg.volume.is_some() {
            row.push(b.volume.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyBarSeries {
    pub bars: Vec<Bar>,
    pub fuzzy_prices: Vec<Tfn>,
    pub eta: RiskAttitude,
    pub expectations: Vec<f64>,
    /// `pct_changes[k - 1]` is the change into bar `k`, `k >= 1`.
    pub pct_changes: Vec<f64>,
    /// Parallel to `pct_changes`: true when the change spans missing bars.
    pub gap_flags: Vec<bool>,
    /// Nominal bar spacing in minutes (the smallest observed spacing).
    pub bar_minutes: i64,
}

impl FuzzyBarSeries {
    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Percentage change into bar `k`; `None` for `k = 0` or out of range.
    pub fn pct_change(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.pct_changes.get(i).copied())
    }
}

pub fn to_fuzzy_series(bars: Vec<Bar>, eta: RiskAttitude) -> Result<FuzzyBarSeries> {
    for (i, b) in bars.iter().enumerate() {
        b.check().map_err(|m| Error::Domain(format!("bar {i}: {m}")))?;
    }
    for w in bars.windows(2) {
        if w[1].timestamp <= w[0].timestamp {
            return Err(Error::Domain(format!("bars out of order at {}", w[1].timestamp)));
        }
    }
    let fuzzy_prices: Vec<Tfn> = bars.iter().map(Bar::fuzzy_price).collect();
    let expectations: Vec<f64> = fuzzy_prices.iter().map(|p| p.expectation(eta)).collect();
    let pct_changes = expectations
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0]) / w[0])
        .collect();
    let spacing: Vec<i64> = bars
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).num_minutes())
        .collect();
    let bar_minutes = spacing.iter().copied().min().unwrap_or(0);
    let gap_flags = spacing.iter().map(|&m| m > bar_minutes).collect();
    Ok(FuzzyBarSeries {
        bars,
        fuzzy_prices,
        eta,
        expectations,
        pct_changes,
        gap_flags,
        bar_minutes,
    })
}
