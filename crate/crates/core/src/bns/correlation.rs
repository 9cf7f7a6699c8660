//! Correlation of log-returns `Corr(X_s, X_t)`, `s < t`.
//!
//! Two independent routes to the same quantity: the closed-form expression
//! in integrated variance, jump functional and subordinator variance
//! (evaluated with Monte-Carlo means), and the sample Pearson correlation of
//! simulated `(X_s, X_t)` pairs. Both report bootstrap standard errors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ModelParams, TimeGrid};
use super::simulate::{build_drivers, run, streams, ModelVariant, Observer, PathValue};
use crate::error::{domain, Result};
use crate::fuzzy::Tfn;
use crate::levy::JumpPath;
use crate::numeric::{mean, pairwise_sum, pearson};
use crate::par::{map_indexed, try_map_indexed, ExecMode};
use crate::rng::RngStream;

/// Integrand of the jump functional `J(s)` over realized jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpFunctional {
    /// Sum of squared jump sizes.
    #[default]
    SquaredSizes,
    /// Number of jumps (mass of the jump measure).
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    FormulaClassic,
    FormulaFuzzy,
    FormulaGeneralized,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub variant: ModelVariant,
    pub s: f64,
    pub t: f64,
    pub value: f64,
    /// `f64::INFINITY` when the estimate is degenerate (serialized as null).
    pub std_error: f64,
    pub method: CorrelationMethod,
    pub n_paths: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSetup {
    pub variant: ModelVariant,
    pub s: f64,
    /// One or more later times; each gives one estimate.
    pub ts: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
    #[serde(default)]
    pub functional: JumpFunctional,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub exec: ExecMode,
}

fn default_resamples() -> usize {
    200
}

pub const MIN_PATHS: usize = 100;

impl CorrelationSetup {
    pub fn new(variant: ModelVariant, s: f64, ts: Vec<f64>, n_paths: usize, dt: f64) -> Self {
        CorrelationSetup {
            variant,
            s,
            ts,
            n_paths,
            dt,
            functional: JumpFunctional::default(),
            bootstrap_resamples: default_resamples(),
            exec: ExecMode::default(),
        }
    }

    fn validate(&self) -> Result<TimeGrid> {
        if !(self.s > 0.0) {
            return domain(format!("s must be positive, got {}", self.s));
        }
        if self.ts.is_empty() {
            return domain("no t values given");
        }
        for &t in &self.ts {
            if t < self.s {
                return domain(format!("need s <= t, got s = {}, t = {t}", self.s));
            }
        }
        if self.n_paths < MIN_PATHS {
            return domain(format!("need at least {MIN_PATHS} paths, got {}", self.n_paths));
        }
        if self.bootstrap_resamples < 2 {
            return domain("need at least 2 bootstrap resamples");
        }
        let horizon = self.ts.iter().cloned().fold(self.s, f64::max);
        let grid = TimeGrid::new(horizon, self.dt)?;
        grid.index_of(self.s)?;
        for &t in &self.ts {
            grid.index_of(t)?;
        }
        Ok(grid)
    }
}

/// What one path contributes to both estimators.
#[derive(Debug, Clone)]
struct PathSummary {
    x_s: f64,
    x_t: Vec<f64>,
    int_s: f64,
    int_t: Vec<f64>,
    jump_s: f64,
}

struct SummaryObserver {
    dt: f64,
    idx_s: usize,
    idx_t: Vec<usize>,
    prev_sig2: f64,
    integral: f64,
    out: PathSummary,
}

impl<V: PathValue> Observer<V> for SummaryObserver {
    fn observe(&mut self, k: usize, _t: f64, x: V, sigma_sq: V) {
        let s2 = sigma_sq.core();
        if k > 0 {
            self.integral += 0.5 * self.dt * (self.prev_sig2 + s2);
        }
        self.prev_sig2 = s2;
        if k == self.idx_s {
            self.out.x_s = x.core();
            self.out.int_s = self.integral;
        }
        for (j, &it) in self.idx_t.iter().enumerate() {
            if k == it {
                self.out.x_t[j] = x.core();
                self.out.int_t[j] = self.integral;
            }
        }
    }
}

fn jump_functional(path: &JumpPath, upto: f64, f: JumpFunctional, weight: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = path
        .iter()
        .take_while(|&(t, _)| t <= upto)
        .map(|(t, mark)| {
            let w = weight(t);
            let y = mark.m();
            w * w * match f {
                JumpFunctional::SquaredSizes => y * y,
                JumpFunctional::Count => 1.0,
            }
        })
        .collect();
    pairwise_sum(&terms)
}

fn effective_params(params: &ModelParams, variant: ModelVariant) -> ModelParams {
    match variant {
        ModelVariant::Classic => params.crisp(),
        _ => params.clone(),
    }
}

fn summarize_paths(params: &ModelParams, setup: &CorrelationSetup, grid: &TimeGrid, stream: RngStream) -> Result<Vec<PathSummary>> {
    let params = effective_params(params, setup.variant);
    params.validate()?;
    let dynamics = params.dynamics();
    let idx_s = grid.index_of(setup.s)?;
    let idx_t: Vec<usize> = setup.ts.iter().map(|&t| grid.index_of(t)).collect::<Result<_>>()?;
    let horizon = grid.horizon();
    let variant = setup.variant;
    let functional = setup.functional;
    try_map_indexed(setup.n_paths, setup.exec, |i| {
        let path_stream = stream.derive(i as u64);
        let d = build_drivers(&params, variant, horizon, path_stream)?;
        let jump_s = match (&d.z_big, variant) {
            (Some(z_big), ModelVariant::Generalized) => {
                let theta = |t: f64| params.theta.value_at(t).unwrap_or(0.0);
                jump_functional(&d.z, setup.s, functional, |t| 1.0 - theta(t))
                    + jump_functional(z_big, setup.s, functional, theta)
            }
            _ => jump_functional(&d.z, setup.s, functional, |_| 1.0),
        };
        let mut obs = SummaryObserver {
            dt: grid.dt(),
            idx_s,
            idx_t: idx_t.clone(),
            prev_sig2: 0.0,
            integral: 0.0,
            out: PathSummary {
                x_s: 0.0,
                x_t: vec![0.0; idx_t.len()],
                int_s: 0.0,
                int_t: vec![0.0; idx_t.len()],
                jump_s,
            },
        };
        let mut normals = path_stream.named(streams::BROWNIAN).rng();
        match variant {
            ModelVariant::Classic => run(&dynamics, params.sigma0_sq.m(), grid, &mut normals, &d.price, &d.variance, &mut obs),
            _ => run::<Tfn, _, _>(&dynamics, params.sigma0_sq, grid, &mut normals, &d.price, &d.variance, &mut obs),
        }
        Ok(obs.out)
    })
}

/// `rho^2 lambda integral_0^t Var` term of the denominator.
fn jump_variance_term(params: &ModelParams, variant: ModelVariant, t: f64) -> f64 {
    let v = params.spec.moments().var_rate;
    let scale = params.rho * params.rho * params.lambda;
    match variant {
        ModelVariant::Generalized => {
            let vb = params.spec_b.moments().var_rate;
            scale * params.theta.integrate(t, |th| (1.0 - th) * (1.0 - th) * v + th * th * vb)
        }
        _ => scale * t * v,
    }
}

/// Bootstrap standard error of `stat` over resampled path indices.
fn bootstrap_se(
    n: usize,
    resamples: usize,
    exec: ExecMode,
    stream: RngStream,
    stat: impl Fn(&[usize]) -> Option<f64> + Sync + Send,
) -> f64 {
    let reps: Vec<Option<f64>> = map_indexed(resamples, exec, |r| {
        let mut rng = stream.derive(r as u64).rng();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        stat(&idx)
    });
    let vals: Vec<f64> = reps.into_iter().flatten().collect();
    if vals.len() < 2 {
        return f64::INFINITY;
    }
    crate::numeric::sample_variance(&vals).sqrt()
}

fn degenerate(setup: &CorrelationSetup, t: f64, method: CorrelationMethod) -> CorrelationEstimate {
    CorrelationEstimate {
        variant: setup.variant,
        s: setup.s,
        t,
        value: 0.0,
        std_error: f64::INFINITY,
        method,
        n_paths: setup.n_paths,
        degenerate: true,
    }
}

fn exact_one(setup: &CorrelationSetup, t: f64, method: CorrelationMethod) -> CorrelationEstimate {
    CorrelationEstimate {
        variant: setup.variant,
        s: setup.s,
        t,
        value: 1.0,
        std_error: 0.0,
        method,
        n_paths: setup.n_paths,
        degenerate: false,
    }
}

/// Closed-form correlation with Monte-Carlo means of the path functionals.
pub fn corr_formula(params: &ModelParams, setup: &CorrelationSetup, stream: RngStream) -> Result<Vec<CorrelationEstimate>> {
    let grid = setup.validate()?;
    let method = match setup.variant {
        ModelVariant::Classic => CorrelationMethod::FormulaClassic,
        ModelVariant::Fuzzy => CorrelationMethod::FormulaFuzzy,
        ModelVariant::Generalized => CorrelationMethod::FormulaGeneralized,
    };
    let params_eff = effective_params(params, setup.variant);
    let summaries = summarize_paths(params, setup, &grid, stream.named("paths"))?;
    let rho2 = params_eff.rho * params_eff.rho;
    let var_s = jump_variance_term(&params_eff, setup.variant, setup.s);

    let mut out = Vec::with_capacity(setup.ts.len());
    for (j, &t) in setup.ts.iter().enumerate() {
        if t == setup.s {
            out.push(exact_one(setup, t, method));
            continue;
        }
        let var_t = jump_variance_term(&params_eff, setup.variant, t);
        let value_of = |idx: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let (mut is, mut it, mut js) = (Vec::new(), Vec::new(), Vec::new());
            for i in idx {
                let p = &summaries[i];
                is.push(p.int_s);
                it.push(p.int_t[j]);
                js.push(p.jump_s);
            }
            let (is, it, js) = (mean(&is), mean(&it), mean(&js));
            let den = ((it + var_t) * (is + var_s)).sqrt();
            (den > 0.0 && den.is_finite()).then(|| (is + rho2 * js) / den)
        };
        let Some(value) = value_of(&mut (0..summaries.len())) else {
            out.push(degenerate(setup, t, method));
            continue;
        };
        let se = bootstrap_se(
            summaries.len(),
            setup.bootstrap_resamples,
            setup.exec,
            stream.named("bootstrap").derive(j as u64),
            |idx| value_of(&mut idx.iter().copied()),
        );
        out.push(CorrelationEstimate {
            variant: setup.variant,
            s: setup.s,
            t,
            value,
            std_error: se,
            method,
            n_paths: setup.n_paths,
            degenerate: false,
        });
    }
    Ok(out)
}

/// Sample correlation of simulated `(X_s, X_t)` (cores for fuzzy paths).
pub fn corr_monte_carlo(params: &ModelParams, setup: &CorrelationSetup, stream: RngStream) -> Result<Vec<CorrelationEstimate>> {
    let grid = setup.validate()?;
    let method = CorrelationMethod::MonteCarlo;
    let summaries = summarize_paths(params, setup, &grid, stream.named("paths"))?;
    let xs: Vec<f64> = summaries.iter().map(|p| p.x_s).collect();

    let mut out = Vec::with_capacity(setup.ts.len());
    for (j, &t) in setup.ts.iter().enumerate() {
        if t == setup.s {
            out.push(exact_one(setup, t, method));
            continue;
        }
        let xt: Vec<f64> = summaries.iter().map(|p| p.x_t[j]).collect();
        let Some(value) = pearson(&xs, &xt) else {
            out.push(degenerate(setup, t, method));
            continue;
        };
        let se = bootstrap_se(
            xs.len(),
            setup.bootstrap_resamples,
            setup.exec,
            stream.named("bootstrap").derive(j as u64),
            |idx| {
                let a: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
                let b: Vec<f64> = idx.iter().map(|&i| xt[i]).collect();
                pearson(&a, &b)
            },
        );
        out.push(CorrelationEstimate {
            variant: setup.variant,
            s: setup.s,
            t,
            value,
            std_error: se,
            method,
            n_paths: setup.n_paths,
            degenerate: false,
        });
    }
    Ok(out)
}

/// Core terminal log-returns `X_T` of `n_paths` independent paths.
pub fn terminal_values(
    params: &ModelParams,
    variant: ModelVariant,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    stream: RngStream,
    exec: ExecMode,
) -> Result<Vec<f64>> {
    let setup = CorrelationSetup {
        n_paths,
        exec,
        ..CorrelationSetup::new(variant, horizon, vec![horizon], n_paths.max(MIN_PATHS), dt)
    };
    let grid = TimeGrid::new(horizon, dt)?;
    Ok(summarize_paths(params, &setup, &grid, stream)?
        .into_iter()
        .map(|p| p.x_s)
        .collect())
}
