use fuzzy_bns::bns::{
    corr_formula, corr_monte_carlo, simulate_classic, simulate_fuzzy, simulate_generalized, terminal_values,
    CorrelationSetup, ModelParams, ModelVariant, ThetaSchedule,
};
use fuzzy_bns::levy::SubordinatorSpec;
use fuzzy_bns::{ExecMode, RngStream, Tfn};
use rand::Rng;

fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let spec = SubordinatorSpec::new(rng.random_range(0.1..3.0), rng.random_range(0.5..20.0), 1.0).unwrap();
    let core = rng.random_range(0.01..1.0);
    let spread = rng.random_range(0.0..0.9);
    ModelParams {
        mu: rng.random_range(-0.5..0.5),
        beta: rng.random_range(-0.5..0.5),
        rho: -rng.random_range(0.0..2.0),
        lambda: rng.random_range(0.05..5.0),
        sigma0_sq: Tfn::new(core * (1.0 - spread), core, core * (1.0 + spread)).unwrap(),
        rho_prime: rng.random_range(0.0..=1.0),
        theta: ThetaSchedule::constant(rng.random_range(0.0..=1.0)).unwrap(),
        spec,
        spec_b: spec.with_intensity_factor(rng.random_range(1.5..6.0)).unwrap(),
        fuzz_spread: rng.random_range(0.0..0.5),
        ..ModelParams::default()
    }
}

#[test]
fn variance_stays_positive() {
    let mut rng = RngStream::new(2024, 0).rng();
    for i in 0..10_000u64 {
        let p = random_params(&mut rng);
        let st = RngStream::new(i, 1);
        let c = simulate_classic(&p.crisp(), 1.0, 0.05, st).unwrap();
        assert!(c.sigma_sq.iter().all(|&v| v > 0.0), "draw {i}: {p:?}");
        for path in [simulate_fuzzy(&p, 1.0, 0.05, st).unwrap(), simulate_generalized(&p, 1.0, 0.05, st).unwrap()] {
            assert!(path.sigma_sq.iter().all(|v| v.l() > 0.0), "draw {i}: {p:?}");
        }
    }
}

#[test]
fn crisp_inputs_collapse_to_classic() {
    let mut rng = RngStream::new(99, 0).rng();
    for i in 0..50u64 {
        let mut p = random_params(&mut rng);
        p.fuzz_spread = 0.0;
        p.sigma0_sq = Tfn::crisp(p.sigma0_sq.m());
        p.theta = ThetaSchedule::constant(0.0).unwrap();
        let st = RngStream::new(i, 5);
        let c = simulate_classic(&p, 2.0, 0.01, st).unwrap();
        for f in [simulate_fuzzy(&p, 2.0, 0.01, st).unwrap(), simulate_generalized(&p, 2.0, 0.01, st).unwrap()] {
            assert!(f.x.iter().chain(&f.sigma_sq).all(Tfn::is_crisp));
            assert_eq!(f.x.iter().map(Tfn::m).collect::<Vec<_>>(), c.x);
            assert_eq!(f.sigma_sq.iter().map(Tfn::m).collect::<Vec<_>>(), c.sigma_sq);
        }
    }
}

fn classic_params() -> ModelParams {
    let spec = SubordinatorSpec::new(1.0, 2.0, 1.0).unwrap();
    ModelParams {
        rho: -1.0,
        lambda: 1.0,
        sigma0_sq: Tfn::crisp(0.5),
        spec,
        spec_b: spec.with_intensity_factor(4.0).unwrap(),
        fuzz_spread: 0.0,
        ..ModelParams::default()
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn halving_dt_keeps_terminal_mean() {
    let p = classic_params();
    let coarse = terminal_values(&p, ModelVariant::Classic, 2.0, 0.02, 4000, RngStream::new(5, 0), ExecMode::Parallel).unwrap();
    let fine = terminal_values(&p, ModelVariant::Classic, 2.0, 0.01, 4000, RngStream::new(6, 0), ExecMode::Parallel).unwrap();
    let (m1, s1) = mean_se(&coarse);
    let (m2, s2) = mean_se(&fine);
    assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{m1} vs {m2}");
}

#[test]
fn estimators_agree_on_classic() {
    let p = classic_params();
    let setup = CorrelationSetup::new(ModelVariant::Classic, 1.0, vec![2.0, 4.0, 8.0], 3000, 0.02);
    let f = corr_formula(&p, &setup, RngStream::new(11, 0)).unwrap();
    let m = corr_monte_carlo(&p, &setup, RngStream::new(12, 0)).unwrap();
    for (a, b) in f.iter().zip(&m) {
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * joint, "t {}: {} vs {} (se {joint})", a.t, a.value, b.value);
    }
}

#[test]
fn classic_correlation_decays() {
    let p = classic_params();
    let setup = CorrelationSetup::new(ModelVariant::Classic, 1.0, vec![1.5, 2.0, 4.0, 8.0], 3000, 0.02);
    let m = corr_monte_carlo(&p, &setup, RngStream::new(13, 0)).unwrap();
    for w in m.windows(2) {
        let joint = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        assert!(w[1].value <= w[0].value + 3.0 * joint, "{:?}", m);
    }
}
