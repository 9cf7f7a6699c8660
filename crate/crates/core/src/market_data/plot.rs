use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{FuzzyBarSeries, RealizedVolSeries};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    MonthlyBox,
    PriceHistogram,
    PctChangeHistogram,
    RvHeatmap,
    RvLine,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::MonthlyBox,
        PlotKind::PriceHistogram,
        PlotKind::PctChangeHistogram,
        PlotKind::RvHeatmap,
        PlotKind::RvLine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::MonthlyBox => "monthly_box",
            PlotKind::PriceHistogram => "price_histogram",
            PlotKind::PctChangeHistogram => "pct_change_histogram",
            PlotKind::RvHeatmap => "rv_heatmap",
            PlotKind::RvLine => "rv_line",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown plot kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotOptions {
    pub bins: usize,
    /// Daily RV above this value is flagged in the heatmap table (0.01%).
    pub rv_threshold: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            bins: 50,
            rv_threshold: 1e-4,
        }
    }
}

/// A header plus string rows, written as delimited text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotTable {
    fn new(header: &[&str]) -> Self {
        PlotTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn emit_plot_data(
    series: &FuzzyBarSeries,
    rv: &RealizedVolSeries,
    kind: PlotKind,
    opts: &PlotOptions,
) -> Result<PlotTable> {
    match kind {
        PlotKind::MonthlyBox => Ok(monthly_box(series)),
        PlotKind::PriceHistogram => histogram(&series.expectations, opts.bins),
        PlotKind::PctChangeHistogram => histogram(&series.pct_changes, opts.bins),
        PlotKind::RvHeatmap => {
            let mut t = PlotTable::new(&["date", "rv", "above_threshold"]);
            for d in &rv.days {
                t.rows.push(vec![d.date.to_string(), d.rv.to_string(), (d.rv > opts.rv_threshold).to_string()]);
            }
            Ok(t)
        }
        PlotKind::RvLine => {
            let mut t = PlotTable::new(&["date", "rv"]);
            for d in &rv.days {
                t.rows.push(vec![d.date.to_string(), d.rv.to_string()]);
            }
            Ok(t)
        }
    }
}

/// Linear-interpolation quantile of sorted data (`(n - 1) p` positioning).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn monthly_box(series: &FuzzyBarSeries) -> PlotTable {
    let mut months: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (b, e) in series.bars.iter().zip(&series.expectations) {
        months
            .entry(b.timestamp.format("%Y-%m").to_string())
            .or_default()
            .push(*e);
    }
    let mut t = PlotTable::new(&["month", "n", "q1", "median", "q3", "whisker_low", "whisker_high", "outliers"]);
    for (month, mut v) in months {
        v.sort_by(f64::total_cmp);
        let (q1, q2, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside: Vec<f64> = v.iter().copied().filter(|x| (fence_lo..=fence_hi).contains(x)).collect();
        let outliers: Vec<String> = v
            .iter()
            .filter(|x| !(fence_lo..=fence_hi).contains(*x))
            .map(|x| x.to_string())
            .collect();
        t.rows.push(vec![
            month,
            v.len().to_string(),
            q1.to_string(),
            q2.to_string(),
            q3.to_string(),
            inside[0].to_string(),
            inside[inside.len() - 1].to_string(),
            outliers.join(";"),
        ]);
    }
    t
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
fn histogram(values: &[f64], bins: usize) -> Result<PlotTable> {
    if bins == 0 {
        return domain("histogram needs at least one bin");
    }
    if values.is_empty() {
        return domain("histogram of no values");
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    let mut t = PlotTable::new(&["bin_low", "bin_high", "count"]);
    for (k, c) in counts.into_iter().enumerate() {
        let a = lo + k as f64 * width;
        let b = if k == bins - 1 { hi } else { lo + (k + 1) as f64 * width };
        t.rows.push(vec![a.to_string(), b.to_string(), c.to_string()]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::RiskAttitude;
    use crate::market_data::{realized_volatility, to_fuzzy_series, Bar, DayBoundary};
    use chrono::{DateTime, Duration};

    fn series(closes: &[f64], step_minutes: i64) -> FuzzyBarSeries {
        let t0 = DateTime::parse_from_rfc3339("2021-03-01T09:00:00-05:00").unwrap();
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| Bar {
                timestamp: t0 + Duration::minutes(step_minutes * i as i64),
                open: c,
                high: c * 1.001,
                low: c * 0.999,
                close: c,
                volume: None,
            })
            .collect();
        to_fuzzy_series(bars, RiskAttitude::NEUTRAL).unwrap()
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
    }

    #[test]
    fn one_month_one_box() {
        let closes: Vec<f64> = (0..200).map(|i| 100.0 + ((i * 37) % 11) as f64 * 0.1).collect();
        let s = series(&closes, 60);
        let rv = realized_volatility(&s, DayBoundary::default()).unwrap();
        let t = emit_plot_data(&s, &rv, PlotKind::MonthlyBox, &PlotOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 1);
        let q: Vec<f64> = t.rows[0][2..5].iter().map(|x| x.parse().unwrap()).collect();
        assert!(q[0] <= q[1] && q[1] <= q[2]);
    }

    #[test]
    fn outliers_listed() {
        let mut closes = vec![100.0; 20];
        closes[3] = 150.0;
        let s = series(&closes, 5);
        let t = monthly_box(&s);
        assert_eq!(t.rows[0][7], s.expectations[3].to_string());
    }

    #[test]
    fn histogram_conserves_count() {
        let closes: Vec<f64> = (0..137).map(|i| 90.0 + (i as f64 * 0.731).sin() * 5.0).collect();
        let s = series(&closes, 5);
        let rv = realized_volatility(&s, DayBoundary::default()).unwrap();
        for kind in [PlotKind::PriceHistogram, PlotKind::PctChangeHistogram] {
            let t = emit_plot_data(&s, &rv, kind, &PlotOptions::default()).unwrap();
            assert_eq!(t.rows.len(), 50);
            let total: usize = t.rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
            let expected = if kind == PlotKind::PriceHistogram { 137 } else { 136 };
            assert_eq!(total, expected);
        }
    }

    #[test]
    fn heatmap_flags_match_scan() {
        // hourly bars over several sessions with alternating calm and busy days
        let closes: Vec<f64> = (0..24 * 8)
            .map(|i| if (i / 24) % 2 == 0 { 100.0 } else { 100.0 + (i % 2) as f64 * 2.0 })
            .collect();
        let s = series(&closes, 60);
        let rv = realized_volatility(&s, DayBoundary::default()).unwrap();
        let opts = PlotOptions::default();
        let t = emit_plot_data(&s, &rv, PlotKind::RvHeatmap, &opts).unwrap();
        let flagged = t.rows.iter().filter(|r| r[2] == "true").count();
        let mut scan = 0;
        for d in &rv.days {
            if d.rv > 1e-4 {
                scan += 1;
            }
        }
        assert_eq!(flagged, scan);
        assert!(scan > 0 && scan < rv.days.len());
        let line = emit_plot_data(&s, &rv, PlotKind::RvLine, &opts).unwrap();
        assert_eq!(line.rows.len(), rv.days.len());
    }

    #[test]
    fn unknown_kind() {
        assert!("pie".parse::<PlotKind>().is_err());
        assert_eq!("rv_line".parse::<PlotKind>().unwrap(), PlotKind::RvLine);
    }
}
