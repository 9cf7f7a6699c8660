use chrono::{DateTime, Duration, FixedOffset, NaiveTime};
use serde::{Deserialize, Serialize};

use super::Bar;
use crate::bns::{simulate_classic, ModelParams};
use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Bars sampled from a classic-model price path on a one-minute grid, with
/// the model's time unit taken as one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub start: DateTime<FixedOffset>,
    pub days: usize,
    pub s0: f64,
    pub bar_minutes: i64,
    /// Daily break `[break_start, session_open)` in bar-local time; no bars are
    /// emitted inside it but the price keeps evolving.
    pub break_start: NaiveTime,
    pub session_open: NaiveTime,
    pub params: ModelParams,
}

impl SyntheticConfig {
    /// Five-minute bars on a 23-hour session (18:00 to 16:55, 276 bars a day).
    pub fn futures_like(start: DateTime<FixedOffset>, days: usize, params: ModelParams) -> Self {
        SyntheticConfig {
            start,
            days,
            s0: 26_000.0,
            bar_minutes: 5,
            break_start: NaiveTime::from_hms_opt(17, 0, 0).expect("valid time"),
            session_open: NaiveTime::from_hms_opt(18, 0, 0).expect("valid time"),
            params,
        }
    }
}

const MINUTES_PER_DAY: i64 = 1440;

pub fn synthetic_bars(cfg: &SyntheticConfig, stream: RngStream) -> Result<Vec<Bar>> {
    if cfg.days == 0 || cfg.bar_minutes <= 0 || MINUTES_PER_DAY % cfg.bar_minutes != 0 {
        return domain("need days >= 1 and a bar length dividing one day");
    }
    if !(cfg.s0 > 0.0) {
        return domain("initial price must be positive");
    }
    let path = simulate_classic(
        &cfg.params.crisp(),
        cfg.days as f64,
        1.0 / MINUTES_PER_DAY as f64,
        stream,
    )?;
    let price: Vec<f64> = path.x.iter().map(|x| cfg.s0 * x.exp()).collect();
    let in_break = |t: NaiveTime| {
        if cfg.break_start <= cfg.session_open {
            cfg.break_start <= t && t < cfg.session_open
        } else {
            t >= cfg.break_start || t < cfg.session_open
        }
    };
    let step = cfg.bar_minutes as usize;
    let n_bars = cfg.days * MINUTES_PER_DAY as usize / step;
    let mut bars = Vec::with_capacity(n_bars);
    for k in 0..n_bars {
        let ts = cfg.start + Duration::minutes((k * step) as i64);
        if in_break(ts.time()) {
            continue;
        }
        let seg = &price[k * step..=(k + 1) * step];
        let high = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let low = seg.iter().copied().fold(f64::INFINITY, f64::min);
        bars.push(Bar {
            timestamp: ts,
            open: seg[0],
            high,
            low,
            close: seg[step],
            volume: None,
        });
    }
    Ok(bars)
}
