use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fuzzy::Tfn;
use crate::levy::SubordinatorSpec;

/// Right-continuous step function `t -> theta(t)` in `[0, 1]`.
///
/// Deserializes either from a bare number (constant schedule) or from
/// `{"steps": [[from, value], ...], "until": T?}`. The schedule is undefined
/// before the first step and, when `until` is set, after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct ThetaSchedule {
    steps: Vec<(f64, f64)>,
    until: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    Constant(f64),
    Steps {
        steps: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        until: Option<f64>,
    },
}

impl TryFrom<ScheduleRepr> for ThetaSchedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        match r {
            ScheduleRepr::Constant(v) => ThetaSchedule::constant(v),
            ScheduleRepr::Steps { steps, until } => ThetaSchedule::from_steps(steps, until),
        }
    }
}

impl From<ThetaSchedule> for ScheduleRepr {
    fn from(s: ThetaSchedule) -> Self {
        if s.until.is_none() && s.steps.len() == 1 && s.steps[0].0 == 0.0 {
            ScheduleRepr::Constant(s.steps[0].1)
        } else {
            ScheduleRepr::Steps {
                steps: s.steps,
                until: s.until,
            }
        }
    }
}

impl Default for ThetaSchedule {
    fn default() -> Self {
        ThetaSchedule {
            steps: vec![(0.0, 0.0)],
            until: None,
        }
    }
}

impl ThetaSchedule {
    pub fn constant(value: f64) -> Result<Self> {
        Self::from_steps(vec![(0.0, value)], None)
    }

    pub fn from_steps(steps: Vec<(f64, f64)>, until: Option<f64>) -> Result<Self> {
        if steps.is_empty() {
            return domain("theta schedule needs at least one step");
        }
        for w in steps.windows(2) {
            if w[1].0 <= w[0].0 {
                return domain("theta schedule breakpoints must be strictly increasing");
            }
        }
        for &(from, v) in &steps {
            if !from.is_finite() {
                return domain("theta schedule breakpoint is not finite");
            }
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("theta must lie in [0, 1], got {v}"));
            }
        }
        if let Some(end) = until {
            if end <= steps[steps.len() - 1].0 {
                return domain("theta schedule ends before its last step");
            }
        }
        Ok(ThetaSchedule { steps, until })
    }

    /// Alternates `first`, `second`, `first`, ... on intervals of `period`,
    /// covering `[0, horizon]`.
    pub fn alternating(period: f64, first: f64, second: f64, horizon: f64) -> Result<Self> {
        if !(period > 0.0) {
            return domain("alternation period must be positive");
        }
        let n = (horizon / period).ceil().max(1.0) as usize;
        let steps = (0..n)
            .map(|i| (i as f64 * period, if i % 2 == 0 { first } else { second }))
            .collect();
        Self::from_steps(steps, None)
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < self.steps[0].0 || self.until.is_some_and(|end| t > end) {
            return None;
        }
        let idx = self.steps.partition_point(|&(from, _)| from <= t);
        Some(self.steps[idx - 1].1)
    }

    pub fn check_defined_on(&self, horizon: f64) -> Result<()> {
        if self.steps[0].0 > 0.0 {
            return domain(format!("theta schedule undefined on [0, {})", self.steps[0].0));
        }
        if let Some(end) = self.until {
            if end < horizon {
                return domain(format!("theta schedule undefined on ({end}, {horizon}]"));
            }
        }
        Ok(())
    }

    pub fn is_constant(&self, value: f64) -> bool {
        self.steps.iter().all(|&(_, v)| v == value)
    }

    /// `integral_0^t g(theta(tau)) d tau`, assuming the schedule is defined on `[0, t]`.
    pub fn integrate(&self, t: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (i, &(from, v)) in self.steps.iter().enumerate() {
            if from >= t {
                break;
            }
            let to = self.steps.get(i + 1).map_or(t, |s| s.0.min(t));
            acc += (to - from.max(0.0)) * g(v);
        }
        acc
    }
}

/// What drives the variance in the generalized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceDriver {
    /// `(1 - theta) dZ + theta dZ^(b)`, the same combination as the log-return.
    #[default]
    ConvexCombination,
    /// `rho' dZ + sqrt(1 - rho'^2) dZ*`.
    Superposition,
}

/// Whether log-return and variance see the same jump realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpCoupling {
    #[default]
    Shared,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu: f64,
    pub beta: f64,
    /// Leverage, `<= 0`.
    pub rho: f64,
    /// Mean-reversion rate, `> 0`.
    pub lambda: f64,
    pub sigma0_sq: Tfn,
    #[serde(default)]
    pub rho_prime: f64,
    #[serde(default)]
    pub theta: ThetaSchedule,
    pub spec: SubordinatorSpec,
    pub spec_b: SubordinatorSpec,
    #[serde(default)]
    pub fuzz_spread: f64,
    #[serde(default)]
    pub variance_driver: VarianceDriver,
    #[serde(default)]
    pub jump_coupling: JumpCoupling,
}

impl Default for ModelParams {
    fn default() -> Self {
        let spec = SubordinatorSpec::new(1.0, 10.0, 1.0).expect("valid");
        ModelParams {
            mu: 0.0,
            beta: 0.0,
            rho: -0.5,
            lambda: 1.0,
            sigma0_sq: Tfn::crisp(0.1),
            rho_prime: 0.6,
            theta: ThetaSchedule::default(),
            spec,
            spec_b: spec.with_intensity_factor(4.0).expect("valid"),
            fuzz_spread: 0.05,
            variance_driver: VarianceDriver::default(),
            jump_coupling: JumpCoupling::default(),
        }
    }
}

impl ModelParams {
    /// Lists every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [("mu", self.mu), ("beta", self.beta)] {
            if !x.is_finite() {
                v.push(format!("{name} must be finite"));
            }
        }
        if !(self.rho <= 0.0 && self.rho.is_finite()) {
            v.push(format!("rho must be <= 0, got {}", self.rho));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            v.push(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.sigma0_sq.l() > 0.0) {
            v.push("sigma0_sq must be strictly positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.rho_prime) {
            v.push(format!("rho_prime must lie in [0, 1], got {}", self.rho_prime));
        }
        if !(0.0..1.0).contains(&self.fuzz_spread) {
            v.push(format!("fuzz_spread must lie in [0, 1), got {}", self.fuzz_spread));
        }
        let (i, ib) = (self.spec.intensity(), self.spec_b.intensity());
        if !(ib > i || (i == 0.0 && ib == 0.0)) {
            v.push(format!(
                "spec_b intensity ({ib}) must exceed spec intensity ({i})"
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            domain(v.join("; "))
        }
    }

    /// The classic-model reading of these parameters: crisp initial variance
    /// at the core value, crisp jumps, theta identically zero.
    pub fn crisp(&self) -> ModelParams {
        ModelParams {
            sigma0_sq: Tfn::crisp(self.sigma0_sq.m()),
            fuzz_spread: 0.0,
            theta: ThetaSchedule::default(),
            ..self.clone()
        }
    }

    pub(crate) fn dynamics(&self) -> Dynamics {
        Dynamics {
            mu: self.mu,
            beta: self.beta,
            rho: self.rho,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dynamics {
    pub mu: f64,
    pub beta: f64,
    pub rho: f64,
    pub lambda: f64,
}

/// Uniform grid `t_k = k dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

pub const DEFAULT_DT: f64 = 1.0 / 288.0;

impl TimeGrid {
    /// Requires `horizon` to be an integer multiple of `dt` (relative 1e-9).
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && horizon.is_finite() && horizon > dt) {
            return domain(format!("need horizon > dt > 0, got horizon {horizon}, dt {dt}"));
        }
        let steps = (horizon / dt).round();
        if ((steps * dt) - horizon).abs() > 1e-9 * horizon {
            return domain(format!("horizon {horizon} is not a multiple of dt {dt}"));
        }
        Ok(TimeGrid {
            dt,
            steps: steps as usize,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    /// Grid index of `t`, which must fall on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * t.abs().max(self.dt) || k < 0.0 || k as usize > self.steps {
            return domain(format!("time {t} is not a grid point"));
        }
        Ok(k as usize)
    }
}
