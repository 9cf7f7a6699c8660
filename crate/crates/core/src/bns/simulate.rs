use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::params::{Dynamics, JumpCoupling, ModelParams, TimeGrid, VarianceDriver};
use crate::error::{domain, Result};
use crate::fuzzy::Tfn;
use crate::levy::{convex_combine_by, simulate_subordinator, superpose, JumpPath};
use crate::rng::RngStream;

/// Values a path can carry: crisp reals or triangular fuzzy numbers.
///
/// The simulation recursion is written once against this trait, so the
/// core of a fuzzy path performs exactly the floating-point operations of
/// the crisp path.
pub trait PathValue: Copy + Send + Sync + 'static {
    fn from_real(x: f64) -> Self;
    fn from_mark(mark: Tfn) -> Self;
    fn plus(self, other: Self) -> Self;
    fn times(self, gamma: f64) -> Self;
    fn sqrt(self) -> Self;
    fn core(self) -> f64;
    fn triple(self) -> [f64; 3];
}

impl PathValue for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_mark(mark: Tfn) -> Self {
        mark.m()
    }
    #[inline]
    fn plus(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn times(self, gamma: f64) -> Self {
        gamma * self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn core(self) -> f64 {
        self
    }
    fn triple(self) -> [f64; 3] {
        [self; 3]
    }
}

impl PathValue for Tfn {
    #[inline]
    fn from_real(x: f64) -> Self {
        Tfn::crisp(x)
    }
    #[inline]
    fn from_mark(mark: Tfn) -> Self {
        mark
    }
    #[inline]
    fn plus(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn times(self, gamma: f64) -> Self {
        self.scale(gamma)
    }
    #[inline]
    fn sqrt(self) -> Self {
        self.map_monotone(f64::sqrt)
    }
    #[inline]
    fn core(self) -> f64 {
        self.m()
    }
    fn triple(self) -> [f64; 3] {
        self.into()
    }
}

fn variance_step_generic<V: PathValue>(
    sigma_sq: V,
    decay: f64,
    lambda: f64,
    jumps: impl Iterator<Item = (f64, V)>,
) -> V {
    let mut out = sigma_sq.times(decay);
    for (remaining, size) in jumps {
        out = out.plus(size.times((-lambda * remaining).exp()));
    }
    out
}

/// Exact variance update over one step of length `dt`:
/// `e^{-lambda dt} sigma^2 + sum_j e^{-lambda (dt - offset_j)} size_j`,
/// with jump offsets measured from the start of the step.
pub fn variance_exact_step(sigma_sq: f64, lambda: f64, dt: f64, jumps_in_step: &[(f64, f64)]) -> f64 {
    variance_step_generic(
        sigma_sq,
        (-lambda * dt).exp(),
        lambda,
        jumps_in_step.iter().map(|&(offset, size)| (dt - offset, size)),
    )
}

pub(crate) trait Observer<V> {
    fn observe(&mut self, k: usize, t: f64, x: V, sigma_sq: V);
}

/// Euler for the log-return, exact recursion for the variance.
pub(crate) fn run<V: PathValue, R: Rng + ?Sized, O: Observer<V>>(
    dynamics: &Dynamics,
    sigma0_sq: V,
    grid: &TimeGrid,
    normals: &mut R,
    price_driver: &JumpPath,
    variance_driver: &JumpPath,
    observer: &mut O,
) {
    let Dynamics {
        mu,
        beta,
        rho,
        lambda,
    } = *dynamics;
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let decay = (-lambda * dt).exp();
    let mut x = V::from_real(0.0);
    let mut s2 = sigma0_sq;
    let (mut pi, mut vi) = (0usize, 0usize);
    observer.observe(0, 0.0, x, s2);
    for k in 0..grid.steps() {
        let t1 = grid.time(k + 1);
        let n: f64 = StandardNormal.sample(normals);

        let mut jump: Option<V> = None;
        while pi < price_driver.len() && price_driver.times[pi] <= t1 {
            let m = V::from_mark(price_driver.marks[pi]);
            jump = Some(jump.map_or(m, |j| j.plus(m)));
            pi += 1;
        }
        let drift = V::from_real(mu).plus(s2.times(beta)).times(dt);
        let diffusion = s2.sqrt().times(sqrt_dt * n);
        let mut incr = drift.plus(diffusion);
        if let Some(j) = jump {
            incr = incr.plus(j.times(rho));
        }
        x = x.plus(incr);

        let start = vi;
        while vi < variance_driver.len() && variance_driver.times[vi] <= t1 {
            vi += 1;
        }
        let jumps = (start..vi).map(|i| {
            (
                t1 - variance_driver.times[i],
                V::from_mark(variance_driver.marks[i]),
            )
        });
        s2 = variance_step_generic(s2, decay, lambda, jumps);
        observer.observe(k + 1, t1, x, s2);
    }
}

/// Grid trajectory of `(X_t, sigma_t^2)` with the jump paths that drove it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "V: Serialize", deserialize = "V: Deserialize<'de>"))]
pub struct Path<V> {
    pub times: Vec<f64>,
    pub x: Vec<V>,
    pub sigma_sq: Vec<V>,
    pub price_driver: JumpPath,
    pub variance_driver: JumpPath,
}

pub type SimulatedPath = Path<f64>;
pub type FuzzySimulatedPath = Path<Tfn>;

struct Recorder<V> {
    times: Vec<f64>,
    x: Vec<V>,
    sigma_sq: Vec<V>,
}

impl<V> Observer<V> for Recorder<V> {
    fn observe(&mut self, _k: usize, t: f64, x: V, sigma_sq: V) {
        self.times.push(t);
        self.x.push(x);
        self.sigma_sq.push(sigma_sq);
    }
}

impl<V: PathValue> Path<V> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns `t, x_l, x_m, x_u, sig2_l, sig2_m, sig2_u`; crisp paths repeat
    /// the value in all three slots.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x_l", "x_m", "x_u", "sig2_l", "sig2_m", "sig2_u"])?;
        for i in 0..self.len() {
            let [xl, xm, xu] = self.x[i].triple();
            let [sl, sm, su] = self.sigma_sq[i].triple();
            out.write_record(
                [self.times[i], xl, xm, xu, sl, sm, su]
                    .iter()
                    .map(|v| v.to_string()),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Fuzzy prices `S_0 exp(X_t)`, endpoint by endpoint.
    pub fn price_path(&self, s0: Tfn) -> Result<Vec<Tfn>> {
        price_path(&self.x, s0)
    }
}

pub fn price_path<V: PathValue>(x: &[V], s0: Tfn) -> Result<Vec<Tfn>> {
    if !(s0.l() > 0.0) {
        return domain("initial price must be strictly positive");
    }
    let [s_l, s_m, s_u] = s0.triple();
    Ok(x.iter()
        .map(|v| {
            let [l, m, u] = v.triple();
            Tfn::new_unchecked(s_l * l.exp(), s_m * m.exp(), s_u * u.exp())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Classic,
    Fuzzy,
    Generalized,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::Classic, ModelVariant::Fuzzy, ModelVariant::Generalized];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Classic => "classic",
            ModelVariant::Fuzzy => "fuzzy",
            ModelVariant::Generalized => "generalized",
        }
    }
}

pub(crate) mod streams {
    pub const BROWNIAN: &str = "brownian";
    pub const Z: &str = "z";
    pub const Z_BIG: &str = "z_big";
    pub const Z_STAR: &str = "z_star";
    pub const Z_VAR: &str = "z_var";
    pub const Z_BIG_VAR: &str = "z_big_var";
    pub const Z_STAR_VAR: &str = "z_star_var";
}

/// The raw subordinator paths of one simulated trajectory and the combined
/// drivers built from them.
#[derive(Debug, Clone)]
pub struct Drivers {
    pub z: JumpPath,
    pub z_big: Option<JumpPath>,
    pub price: JumpPath,
    pub variance: JumpPath,
}

/// Builds the jump drivers for `variant` from the named sub-streams of `stream`.
pub fn build_drivers(
    params: &ModelParams,
    variant: ModelVariant,
    horizon: f64,
    stream: RngStream,
) -> Result<Drivers> {
    let lambda = params.lambda;
    let delta = match variant {
        ModelVariant::Classic => 0.0,
        _ => params.fuzz_spread,
    };
    let z = simulate_subordinator(&params.spec, lambda, horizon, delta, stream.named(streams::Z))?;
    match variant {
        ModelVariant::Classic | ModelVariant::Fuzzy => Ok(Drivers {
            price: z.clone(),
            variance: z.clone(),
            z,
            z_big: None,
        }),
        ModelVariant::Generalized => {
            params.theta.check_defined_on(horizon)?;
            let theta_at = |t: f64| params.theta.value_at(t).unwrap_or(0.0);
            let z_big = simulate_subordinator(&params.spec_b, lambda, horizon, delta, stream.named(streams::Z_BIG))?;
            let price = convex_combine_by(&z, &z_big, theta_at)?;
            let variance = match (params.variance_driver, params.jump_coupling) {
                (VarianceDriver::ConvexCombination, JumpCoupling::Shared) => price.clone(),
                (VarianceDriver::ConvexCombination, JumpCoupling::Independent) => {
                    let zv = simulate_subordinator(&params.spec, lambda, horizon, delta, stream.named(streams::Z_VAR))?;
                    let zbv = simulate_subordinator(&params.spec_b, lambda, horizon, delta, stream.named(streams::Z_BIG_VAR))?;
                    convex_combine_by(&zv, &zbv, theta_at)?
                }
                (VarianceDriver::Superposition, coupling) => {
                    let zv = match coupling {
                        JumpCoupling::Shared => z.clone(),
                        JumpCoupling::Independent => {
                            simulate_subordinator(&params.spec, lambda, horizon, delta, stream.named(streams::Z_VAR))?
                        }
                    };
                    let star_stream = match coupling {
                        JumpCoupling::Shared => streams::Z_STAR,
                        JumpCoupling::Independent => streams::Z_STAR_VAR,
                    };
                    let z_star = simulate_subordinator(&params.spec, lambda, horizon, delta, stream.named(star_stream))?;
                    superpose(&zv, &z_star, params.rho_prime)?
                }
            };
            Ok(Drivers {
                z,
                z_big: Some(z_big),
                price,
                variance,
            })
        }
    }
}

/// Runs the recursion with explicitly supplied drivers. Normals come from
/// the `brownian` sub-stream of `stream`.
pub fn simulate_with_drivers<V: PathValue>(
    params: &ModelParams,
    sigma0_sq: V,
    grid: &TimeGrid,
    stream: RngStream,
    price_driver: JumpPath,
    variance_driver: JumpPath,
) -> Path<V> {
    let mut rec = Recorder {
        times: Vec::with_capacity(grid.steps() + 1),
        x: Vec::with_capacity(grid.steps() + 1),
        sigma_sq: Vec::with_capacity(grid.steps() + 1),
    };
    let mut normals = stream.named(streams::BROWNIAN).rng();
    run(
        &params.dynamics(),
        sigma0_sq,
        grid,
        &mut normals,
        &price_driver,
        &variance_driver,
        &mut rec,
    );
    Path {
        times: rec.times,
        x: rec.x,
        sigma_sq: rec.sigma_sq,
        price_driver,
        variance_driver,
    }
}

/// Classic model. Requires crisp `sigma0_sq` and zero fuzz spread; theta and
/// the big-jump spec are not used.
pub fn simulate_classic(params: &ModelParams, horizon: f64, dt: f64, stream: RngStream) -> Result<SimulatedPath> {
    params.validate()?;
    if !params.sigma0_sq.is_crisp() || params.fuzz_spread != 0.0 {
        return domain("classic model needs crisp sigma0_sq and fuzz_spread = 0 (see ModelParams::crisp)");
    }
    let grid = TimeGrid::new(horizon, dt)?;
    let d = build_drivers(params, ModelVariant::Classic, horizon, stream)?;
    Ok(simulate_with_drivers(params, params.sigma0_sq.m(), &grid, stream, d.price, d.variance))
}

/// Fuzzy model driven by a single fuzzy subordinator; theta is not used.
pub fn simulate_fuzzy(params: &ModelParams, horizon: f64, dt: f64, stream: RngStream) -> Result<FuzzySimulatedPath> {
    params.validate()?;
    let grid = TimeGrid::new(horizon, dt)?;
    let d = build_drivers(params, ModelVariant::Fuzzy, horizon, stream)?;
    Ok(simulate_with_drivers(params, params.sigma0_sq, &grid, stream, d.price, d.variance))
}

/// Generalized model with theta-weighted ordinary and big-jump subordinators.
pub fn simulate_generalized(
    params: &ModelParams,
    horizon: f64,
    dt: f64,
    stream: RngStream,
) -> Result<FuzzySimulatedPath> {
    params.validate()?;
    let grid = TimeGrid::new(horizon, dt)?;
    let d = build_drivers(params, ModelVariant::Generalized, horizon, stream)?;
    Ok(simulate_with_drivers(params, params.sigma0_sq, &grid, stream, d.price, d.variance))
}

/// Any variant as a fuzzy path (classic paths embed crisply).
pub fn simulate_variant(
    params: &ModelParams,
    variant: ModelVariant,
    horizon: f64,
    dt: f64,
    stream: RngStream,
) -> Result<FuzzySimulatedPath> {
    match variant {
        ModelVariant::Classic => {
            let p = simulate_classic(&params.crisp(), horizon, dt, stream)?;
            Ok(Path {
                times: p.times,
                x: p.x.into_iter().map(Tfn::crisp).collect(),
                sigma_sq: p.sigma_sq.into_iter().map(Tfn::crisp).collect(),
                price_driver: p.price_driver,
                variance_driver: p.variance_driver,
            })
        }
        ModelVariant::Fuzzy => simulate_fuzzy(params, horizon, dt, stream),
        ModelVariant::Generalized => simulate_generalized(params, horizon, dt, stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bns::params::ThetaSchedule;
    use crate::levy::SubordinatorSpec;

    fn no_jumps() -> ModelParams {
        ModelParams {
            spec: SubordinatorSpec::inactive(),
            spec_b: SubordinatorSpec::inactive(),
            fuzz_spread: 0.0,
            ..ModelParams::default()
        }
    }

    #[test]
    fn variance_step_examples() {
        assert!((variance_exact_step(1.0, 0.5, 2.0, &[]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((variance_exact_step(1.0, 1e-300, 1.0, &[(0.5, 2.0)]) - 3.0).abs() < 1e-15);
        let v = variance_exact_step(0.04, 1.0, 1.0, &[(0.5, 0.5)]);
        let expected = 0.04 * (-1.0f64).exp() + 0.5 * (-0.5f64).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.31798).abs() < 1e-5);
    }

    #[test]
    fn ou_decay_without_jumps() {
        let p = no_jumps();
        let path = simulate_classic(&p.crisp(), 3.0, 0.01, RngStream::new(1, 1)).unwrap();
        for (t, s2) in path.times.iter().zip(&path.sigma_sq) {
            let exact = (-p.lambda * t).exp() * 0.1;
            assert!((s2 - exact).abs() <= 1e-12 * 0.1);
        }
        assert_eq!(path.x[0], 0.0);
    }

    #[test]
    fn classic_rejects_fuzzy_inputs() {
        let p = ModelParams::default();
        assert!(simulate_classic(&p, 1.0, 0.01, RngStream::new(0, 0)).is_err());
        assert!(simulate_classic(&p.crisp(), 1.0, 0.3, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn fuzzy_core_matches_classic_bitwise() {
        let p = ModelParams {
            fuzz_spread: 0.0,
            mu: 0.03,
            beta: -0.4,
            ..ModelParams::default()
        };
        let s = RngStream::new(11, 4);
        let c = simulate_classic(&p, 2.0, 1.0 / 288.0, s).unwrap();
        let f = simulate_fuzzy(&p, 2.0, 1.0 / 288.0, s).unwrap();
        assert!(!c.price_driver.is_empty());
        for i in 0..c.len() {
            assert_eq!(c.x[i].to_bits(), f.x[i].m().to_bits());
            assert_eq!(c.sigma_sq[i].to_bits(), f.sigma_sq[i].m().to_bits());
        }
    }

    #[test]
    fn fuzzy_variance_support_behaviour() {
        let p = ModelParams {
            fuzz_spread: 0.1,
            sigma0_sq: Tfn::new(0.09, 0.1, 0.11).unwrap(),
            ..ModelParams::default()
        };
        let dt = 1.0 / 288.0;
        let f = simulate_fuzzy(&p, 5.0, dt, RngStream::new(3, 3)).unwrap();
        let decay = (-p.lambda * dt).exp();
        let driver = &f.price_driver;
        for k in 0..f.len() - 1 {
            assert!(f.sigma_sq[k].l() > 0.0);
            let (t0, t1) = (f.times[k], f.times[k + 1]);
            let jumped = driver.times.iter().any(|&t| t > t0 && t <= t1);
            let w0 = f.sigma_sq[k].width();
            let w1 = f.sigma_sq[k + 1].width();
            if jumped {
                assert!(w1 >= w0 * decay - 1e-15);
            } else {
                assert!((w1 - w0 * decay).abs() <= 1e-12 * w0.max(1e-300));
            }
        }
    }

    #[test]
    fn generalized_theta_zero_equals_fuzzy() {
        let p = ModelParams::default();
        let s = RngStream::new(8, 1);
        let f = simulate_fuzzy(&p, 2.0, 0.01, s).unwrap();
        let g = simulate_generalized(&p, 2.0, 0.01, s).unwrap();
        assert_eq!(f.x, g.x);
        assert_eq!(f.sigma_sq, g.sigma_sq);
    }

    #[test]
    fn generalized_requires_defined_schedule() {
        let p = ModelParams {
            theta: ThetaSchedule::from_steps(vec![(0.5, 1.0)], None).unwrap(),
            ..ModelParams::default()
        };
        assert!(simulate_generalized(&p, 1.0, 0.01, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn price_path_examples() {
        let s0 = Tfn::new(99.0, 100.0, 101.0).unwrap();
        let p = price_path(&[Tfn::new(0.0, 0.1, 0.2).unwrap()], s0).unwrap();
        assert_eq!(p[0], Tfn::new(99.0, 100.0 * 0.1f64.exp(), 101.0 * 0.2f64.exp()).unwrap());
        let flat = price_path(&[0.0f64; 3], s0).unwrap();
        assert!(flat.iter().all(|v| *v == s0));
        let doubled = price_path(&[2f64.ln()], Tfn::crisp(100.0)).unwrap();
        assert!((doubled[0].m() - 200.0).abs() < 1e-12);
        assert!(price_path(&[0.0f64], Tfn::crisp(0.0)).is_err());
    }

    #[test]
    fn csv_columns() {
        let p = simulate_fuzzy(&ModelParams::default(), 0.05, 0.01, RngStream::new(1, 0)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x_l,x_m,x_u,sig2_l,sig2_m,sig2_u");
        assert_eq!(lines.count(), 6);
    }
}
