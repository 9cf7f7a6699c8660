use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use super::FuzzyBarSeries;
use crate::error::{domain, Result};
use crate::numeric::{mean, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub minimum: f64,
    pub maximum: f64,
    /// Bias-adjusted sample skewness.
    pub skewness: f64,
    /// Bias-adjusted excess kurtosis (0 for a normal sample in expectation).
    pub kurtosis: f64,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats> {
    let n = values.len();
    if n < 4 {
        return domain(format!("descriptive statistics need at least 4 values, got {n}"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return domain("descriptive statistics of non-finite values");
    }
    let m = mean(values);
    let dev: Vec<f64> = values.iter().map(|v| v - m).collect();
    let ss = pairwise_sum(&dev.iter().map(|d| d * d).collect::<Vec<_>>());
    if ss == 0.0 {
        return domain("zero variance: skewness and kurtosis undefined");
    }
    let nf = n as f64;
    let sd = (ss / (nf - 1.0)).sqrt();
    let z3 = pairwise_sum(&dev.iter().map(|d| (d / sd).powi(3)).collect::<Vec<_>>());
    let z4 = pairwise_sum(&dev.iter().map(|d| (d / sd).powi(4)).collect::<Vec<_>>());
    let skewness = nf / ((nf - 1.0) * (nf - 2.0)) * z3;
    let kurtosis = nf * (nf + 1.0) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)) * z4
        - 3.0 * (nf - 1.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0));

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(DescriptiveStats {
        n,
        mean: m,
        median,
        minimum: sorted[0],
        maximum: sorted[n - 1],
        skewness,
        kurtosis,
    })
}

/// Session grouping: a bar stamped after `cutoff` (bar-local time) belongs to
/// the next calendar date's session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayBoundary {
    pub cutoff: NaiveTime,
}

impl Default for DayBoundary {
    fn default() -> Self {
        DayBoundary {
            cutoff: NaiveTime::from_hms_opt(17, 0, 0).expect("valid time"),
        }
    }
}

impl DayBoundary {
    pub fn session_date(&self, ts: &chrono::DateTime<chrono::FixedOffset>) -> NaiveDate {
        let local = ts.naive_local();
        if local.time() > self.cutoff {
            local.date().succ_opt().expect("date in range")
        } else {
            local.date()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRv {
    pub date: NaiveDate,
    pub rv: f64,
    pub n_returns: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizedVolSeries {
    pub days: Vec<DailyRv>,
    pub warnings: Vec<String>,
}

/// Daily sum of squared log-returns of the fuzzy-price expectations. Returns
/// never cross a session boundary; a session with a single bar contributes
/// no return and is omitted with a warning.
pub fn realized_volatility(series: &FuzzyBarSeries, boundary: DayBoundary) -> Result<RealizedVolSeries> {
    if series.is_empty() {
        return domain("realized volatility of an empty series");
    }
    let dates: Vec<NaiveDate> = series.bars.iter().map(|b| boundary.session_date(&b.timestamp)).collect();
    let mut out = RealizedVolSeries::default();
    let mut start = 0;
    while start < dates.len() {
        let mut end = start + 1;
        while end < dates.len() && dates[end] == dates[start] {
            end += 1;
        }
        let sq: Vec<f64> = (start + 1..end)
            .map(|k| {
                let r = (series.expectations[k] / series.expectations[k - 1]).ln();
                r * r
            })
            .collect();
        if sq.is_empty() {
            out.warnings.push(format!("session {} has no intraday return; omitted", dates[start]));
        } else {
            out.days.push(DailyRv {
                date: dates[start],
                rv: pairwise_sum(&sq),
                n_returns: sq.len(),
            });
        }
        start = end;
    }
    Ok(out)
}
