//! Barndorff-Nielsen-Shephard stochastic volatility in three variants:
//! classic, fuzzy (fuzzy jump marks and initial variance) and generalized
//! (a theta-weighted mix of ordinary and big-jump subordinators).

pub mod correlation;
pub mod params;
pub mod simulate;

pub use correlation::{
    corr_formula, corr_monte_carlo, terminal_values, CorrelationEstimate, CorrelationMethod,
    CorrelationSetup, JumpFunctional,
};
pub use params::{JumpCoupling, ModelParams, ThetaSchedule, TimeGrid, VarianceDriver, DEFAULT_DT};
pub use simulate::{
    build_drivers, price_path, simulate_classic, simulate_fuzzy, simulate_generalized,
    simulate_variant, simulate_with_drivers, variance_exact_step, Drivers, FuzzySimulatedPath,
    ModelVariant, Path, PathValue, SimulatedPath,
};
