//! Compound-Poisson subordinators and their combinations.
//!
//! Jump sizes are Exponential(b) and arrive at rate `a * c` per unit of
//! subordinator time, so a path of `Z_{lambda t}` on calendar time `[0, T]`
//! is a Poisson process of rate `a * c * lambda`. Fuzzy marks spread each
//! size `s` multiplicatively into `(s (1 - delta), s, s (1 + delta))`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fuzzy::Tfn;
use crate::rng::RngStream;

/// Lévy measure of a compound-Poisson-exponential subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFields", into = "SpecFields")]
pub struct SubordinatorSpec {
    jump_rate: f64,
    jump_mean_inv: f64,
    intensity_factor: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecFields {
    jump_rate: f64,
    jump_mean_inv: f64,
    #[serde(default = "one")]
    intensity_factor: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<SpecFields> for SubordinatorSpec {
    type Error = Error;

    fn try_from(f: SpecFields) -> Result<Self> {
        SubordinatorSpec::new(f.jump_rate, f.jump_mean_inv, f.intensity_factor)
    }
}

impl From<SubordinatorSpec> for SpecFields {
    fn from(s: SubordinatorSpec) -> Self {
        SpecFields {
            jump_rate: s.jump_rate,
            jump_mean_inv: s.jump_mean_inv,
            intensity_factor: s.intensity_factor,
        }
    }
}

/// Mean and variance of the unit-time increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyMoments {
    pub mean_rate: f64,
    pub var_rate: f64,
}

impl SubordinatorSpec {
    pub fn new(jump_rate: f64, jump_mean_inv: f64, intensity_factor: f64) -> Result<Self> {
        if !(jump_rate > 0.0 && jump_rate.is_finite()) {
            return domain(format!("jump rate must be positive, got {jump_rate}"));
        }
        if !(jump_mean_inv > 0.0 && jump_mean_inv.is_finite()) {
            return domain(format!("jump size parameter must be positive, got {jump_mean_inv}"));
        }
        if !(intensity_factor >= 1.0 && intensity_factor.is_finite()) {
            return domain(format!("intensity factor must be >= 1, got {intensity_factor}"));
        }
        Ok(SubordinatorSpec {
            jump_rate,
            jump_mean_inv,
            intensity_factor,
        })
    }

    /// The `a -> 0` limit: a subordinator that never jumps. Only reachable
    /// from code, never from configuration.
    pub fn inactive() -> Self {
        SubordinatorSpec {
            jump_rate: 0.0,
            jump_mean_inv: 1.0,
            intensity_factor: 1.0,
        }
    }

    /// Copy with a different intensity factor, e.g. for the big-jump process.
    pub fn with_intensity_factor(&self, c: f64) -> Result<Self> {
        if self.jump_rate == 0.0 {
            return Ok(*self);
        }
        SubordinatorSpec::new(self.jump_rate, self.jump_mean_inv, c)
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn jump_mean_inv(&self) -> f64 {
        self.jump_mean_inv
    }

    pub fn intensity_factor(&self) -> f64 {
        self.intensity_factor
    }

    /// Jumps per unit of subordinator time, `a * c`.
    pub fn intensity(&self) -> f64 {
        self.jump_rate * self.intensity_factor
    }

    /// `(a c / b, 2 a c / b^2)`.
    pub fn moments(&self) -> LevyMoments {
        let b = self.jump_mean_inv;
        LevyMoments {
            mean_rate: self.intensity() / b,
            var_rate: 2.0 * self.intensity() / (b * b),
        }
    }
}

/// Realized jumps of a (possibly fuzzy) subordinator on `[0, horizon]`.
///
/// Epochs are non-decreasing; equal epochs only arise from merging two
/// paths, with the first operand's jump ordered first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub times: Vec<f64>,
    pub marks: Vec<Tfn>,
    pub lambda: f64,
    pub horizon: f64,
    pub fuzz_spread: f64,
}

impl JumpPath {
    pub fn empty(lambda: f64, horizon: f64, fuzz_spread: f64) -> Self {
        JumpPath {
            times: Vec::new(),
            marks: Vec::new(),
            lambda,
            horizon,
            fuzz_spread,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Tfn)> + '_ {
        self.times.iter().copied().zip(self.marks.iter().copied())
    }

    /// Sum of core jump sizes.
    pub fn total_mass(&self) -> f64 {
        self.marks.iter().map(Tfn::m).sum()
    }

    /// Core mass falling in each `(k w, (k + 1) w]` for `k < horizon / w`.
    pub fn binned_mass(&self, width: f64) -> Vec<f64> {
        let n = (self.horizon / width).floor() as usize;
        let mut bins = vec![0.0; n];
        for (t, mark) in self.iter() {
            let k = (t / width).ceil() as usize;
            if k >= 1 && k <= n {
                bins[k - 1] += mark.m();
            }
        }
        bins
    }

    /// Structural checks: ordering, range, non-negative marks.
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.marks.len() {
            return domain("jump path has mismatched times and marks");
        }
        for w in self.times.windows(2) {
            if w[1] < w[0] {
                return domain("jump epochs must be non-decreasing");
            }
        }
        if let (Some(&first), Some(&last)) = (self.times.first(), self.times.last()) {
            if first < 0.0 || last > self.horizon {
                return domain("jump epoch outside [0, horizon]");
            }
        }
        if self.marks.iter().any(|m| m.l() < 0.0) {
            return domain("subordinator marks must be non-negative");
        }
        Ok(())
    }

    fn check_compatible(&self, other: &JumpPath) -> Result<()> {
        if self.lambda != other.lambda || self.horizon != other.horizon {
            return domain(format!(
                "paths disagree on lambda/horizon: ({}, {}) vs ({}, {})",
                self.lambda, self.horizon, other.lambda, other.horizon
            ));
        }
        if self.fuzz_spread != other.fuzz_spread {
            return domain("paths disagree on fuzz spread");
        }
        Ok(())
    }
}

/// Draws one path of `Z_{lambda t}` on `[0, horizon]`.
pub fn simulate_subordinator(
    spec: &SubordinatorSpec,
    lambda: f64,
    horizon: f64,
    fuzz_spread: f64,
    stream: RngStream,
) -> Result<JumpPath> {
    let mut rng = stream.rng();
    simulate_subordinator_with(spec, lambda, horizon, fuzz_spread, &mut rng)
}

pub(crate) fn simulate_subordinator_with<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    lambda: f64,
    horizon: f64,
    fuzz_spread: f64,
    rng: &mut R,
) -> Result<JumpPath> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    if !(0.0..1.0).contains(&fuzz_spread) {
        return domain(format!("fuzz spread must lie in [0, 1), got {fuzz_spread}"));
    }
    let mut path = JumpPath::empty(lambda, horizon, fuzz_spread);
    let rate = spec.intensity() * lambda;
    if rate == 0.0 {
        return Ok(path);
    }
    let gaps = Exp::new(rate).map_err(|e| Error::Domain(e.to_string()))?;
    let sizes = Exp::new(spec.jump_mean_inv).map_err(|e| Error::Domain(e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t > horizon {
            break;
        }
        let s: f64 = sizes.sample(rng);
        path.times.push(t);
        path.marks.push(fuzzy_mark(s, fuzz_spread));
    }
    Ok(path)
}

fn fuzzy_mark(s: f64, delta: f64) -> Tfn {
    if delta == 0.0 {
        Tfn::crisp(s)
    } else {
        Tfn::new_unchecked(s * (1.0 - delta), s, s * (1.0 + delta))
    }
}

/// Merges two paths, scaling the marks of each by a time-dependent weight.
/// Jumps whose weight is exactly zero are dropped. Stable: on equal epochs
/// the jump from `a` comes first.
fn weighted_merge(
    a: &JumpPath,
    b: &JumpPath,
    weight_a: impl Fn(f64) -> f64,
    weight_b: impl Fn(f64) -> f64,
) -> JumpPath {
    let mut out = JumpPath::empty(a.lambda, a.horizon, a.fuzz_spread);
    out.times.reserve(a.len() + b.len());
    out.marks.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut push = |t: f64, mark: Tfn, w: f64| {
        if w != 0.0 {
            out.times.push(t);
            out.marks.push(if w == 1.0 { mark } else { mark.scale(w) });
        }
    };
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a.times[i] <= b.times[j]);
        if take_a {
            let t = a.times[i];
            push(t, a.marks[i], weight_a(t));
            i += 1;
        } else {
            let t = b.times[j];
            push(t, b.marks[j], weight_b(t));
            j += 1;
        }
    }
    out
}

/// `rho' dZ + sqrt(1 - rho'^2) dZ*`.
pub fn superpose(z1: &JumpPath, z2: &JumpPath, rho_prime: f64) -> Result<JumpPath> {
    if !(0.0..=1.0).contains(&rho_prime) {
        return domain(format!("rho' must lie in [0, 1], got {rho_prime}"));
    }
    z1.check_compatible(z2)?;
    let w2 = (1.0 - rho_prime * rho_prime).sqrt();
    Ok(weighted_merge(z1, z2, |_| rho_prime, |_| w2))
}

/// `(1 - theta) dZ + theta dZ^(b)` with constant theta.
pub fn convex_combine(z: &JumpPath, zb: &JumpPath, theta: f64) -> Result<JumpPath> {
    convex_combine_by(z, zb, |_| theta)
}

/// Convex combination with theta evaluated at each jump epoch.
pub fn convex_combine_by(
    z: &JumpPath,
    zb: &JumpPath,
    theta_at: impl Fn(f64) -> f64,
) -> Result<JumpPath> {
    z.check_compatible(zb)?;
    for &t in z.times.iter().chain(&zb.times) {
        let th = theta_at(t);
        if !(0.0..=1.0).contains(&th) {
            return domain(format!("theta must lie in [0, 1], got {th} at t = {t}"));
        }
    }
    Ok(weighted_merge(z, zb, |t| 1.0 - theta_at(t), &theta_at))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(a: f64, b: f64, c: f64) -> SubordinatorSpec {
        SubordinatorSpec::new(a, b, c).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SubordinatorSpec::new(0.0, 1.0, 1.0).is_err());
        assert!(SubordinatorSpec::new(1.0, -1.0, 1.0).is_err());
        assert!(SubordinatorSpec::new(1.0, 1.0, 0.5).is_err());
        let parsed: SubordinatorSpec =
            serde_json::from_str(r#"{"jump_rate": 2.0, "jump_mean_inv": 4.0}"#).unwrap();
        assert_eq!(parsed, spec(2.0, 4.0, 1.0));
        assert!(serde_json::from_str::<SubordinatorSpec>(r#"{"jump_rate": 0, "jump_mean_inv": 4}"#).is_err());
    }

    #[test]
    fn moments_examples() {
        assert_eq!(spec(1.0, 1.0, 1.0).moments(), LevyMoments { mean_rate: 1.0, var_rate: 2.0 });
        assert_eq!(spec(2.0, 2.0, 1.0).moments(), LevyMoments { mean_rate: 1.0, var_rate: 1.0 });
        let m = spec(1.5, 2.0, 3.0).moments();
        let base = spec(1.5, 2.0, 1.0).moments();
        assert!((m.mean_rate - 3.0 * base.mean_rate).abs() < 1e-15);
        assert!((m.var_rate - 3.0 * base.var_rate).abs() < 1e-15);
    }

    #[test]
    fn inactive_is_empty() {
        let p = simulate_subordinator(&SubordinatorSpec::inactive(), 1.0, 100.0, 0.1, RngStream::new(1, 0)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn argument_errors() {
        let s = spec(1.0, 1.0, 1.0);
        let r = RngStream::new(0, 0);
        assert!(simulate_subordinator(&s, 0.0, 1.0, 0.0, r).is_err());
        assert!(simulate_subordinator(&s, 1.0, -1.0, 0.0, r).is_err());
        assert!(simulate_subordinator(&s, 1.0, 1.0, 1.0, r).is_err());
    }

    #[test]
    fn path_is_valid_and_deterministic() {
        let s = spec(3.0, 2.0, 1.0);
        let p = simulate_subordinator(&s, 0.7, 50.0, 0.05, RngStream::new(9, 2)).unwrap();
        let q = simulate_subordinator(&s, 0.7, 50.0, 0.05, RngStream::new(9, 2)).unwrap();
        assert_eq!(p, q);
        p.validate().unwrap();
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
        for m in &p.marks {
            assert!((m.l() - 0.95 * m.m()).abs() < 1e-15 && (m.u() - 1.05 * m.m()).abs() < 1e-15);
        }
        let crisp = simulate_subordinator(&s, 0.7, 50.0, 0.0, RngStream::new(9, 2)).unwrap();
        assert!(crisp.marks.iter().all(Tfn::is_crisp));
        assert_eq!(crisp.times, p.times);
    }

    #[test]
    fn jump_count_mean() {
        // Poisson(1000) count, 200 reps
        let s = spec(1.0, 1.0, 1.0);
        let reps = 200;
        let total: usize = (0..reps)
            .map(|i| simulate_subordinator(&s, 1.0, 1000.0, 0.0, RngStream::new(5, i)).unwrap().len())
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 1000.0).abs() < 3.0 * 1000f64.sqrt());
    }

    #[test]
    fn total_mass_mean() {
        // compound Poisson mean a lambda T / b = 25, variance 2 a lambda T / b^2 = 12.5
        let s = spec(2.0, 4.0, 1.0);
        let reps = 200;
        let masses: Vec<f64> = (0..reps)
            .map(|i| simulate_subordinator(&s, 0.5, 100.0, 0.0, RngStream::new(6, i)).unwrap().total_mass())
            .collect();
        let mean = masses.iter().sum::<f64>() / reps as f64;
        let stderr = (12.5f64 / reps as f64).sqrt();
        assert!((mean - 25.0).abs() < 3.0 * stderr, "mean {mean}");
    }

    #[test]
    fn superpose_boundaries() {
        let s = spec(1.0, 1.0, 1.0);
        let z1 = simulate_subordinator(&s, 1.0, 10.0, 0.1, RngStream::new(1, 1)).unwrap();
        let z2 = simulate_subordinator(&s, 1.0, 10.0, 0.1, RngStream::new(1, 2)).unwrap();
        assert_eq!(superpose(&z1, &z2, 1.0).unwrap(), z1);
        assert_eq!(superpose(&z1, &z2, 0.0).unwrap(), z2);
        let mid = superpose(&z1, &z2, 0.6).unwrap();
        assert_eq!(mid.len(), z1.len() + z2.len());
        mid.validate().unwrap();
        assert!(superpose(&z1, &z2, 1.2).is_err());
        let other = simulate_subordinator(&s, 2.0, 10.0, 0.1, RngStream::new(1, 2)).unwrap();
        assert!(superpose(&z1, &other, 0.5).is_err());
    }

    #[test]
    fn convex_boundaries() {
        let s = spec(1.0, 1.0, 1.0);
        let sb = spec(1.0, 1.0, 4.0);
        let z = simulate_subordinator(&s, 1.0, 10.0, 0.05, RngStream::new(2, 1)).unwrap();
        let zb = simulate_subordinator(&sb, 1.0, 10.0, 0.05, RngStream::new(2, 2)).unwrap();
        assert_eq!(convex_combine(&z, &zb, 0.0).unwrap(), z);
        assert_eq!(convex_combine(&z, &zb, 1.0).unwrap(), zb);
        assert!(convex_combine(&z, &zb, -0.1).is_err());
        let half = convex_combine(&z, &zb, 0.5).unwrap();
        assert!((half.total_mass() - 0.5 * (z.total_mass() + zb.total_mass())).abs() < 1e-9);
    }

    #[test]
    fn stable_merge_on_ties() {
        let a = JumpPath {
            times: vec![1.0, 2.0],
            marks: vec![Tfn::crisp(1.0), Tfn::crisp(2.0)],
            lambda: 1.0,
            horizon: 3.0,
            fuzz_spread: 0.0,
        };
        let b = JumpPath {
            marks: vec![Tfn::crisp(10.0), Tfn::crisp(20.0)],
            ..a.clone()
        };
        let m = superpose(&a, &b, 0.6).unwrap();
        assert_eq!(m.times, vec![1.0, 1.0, 2.0, 2.0]);
        assert!((m.marks[0].m() - 0.6).abs() < 1e-15);
        assert!((m.marks[1].m() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn binned_mass_conserves() {
        let s = spec(2.0, 1.0, 1.0);
        let z = simulate_subordinator(&s, 1.0, 20.0, 0.0, RngStream::new(3, 3)).unwrap();
        let bins = z.binned_mass(1.0);
        assert_eq!(bins.len(), 20);
        assert!((bins.iter().sum::<f64>() - z.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn json_shape() {
        let p = JumpPath {
            times: vec![0.5],
            marks: vec![Tfn::new(0.9, 1.0, 1.1).unwrap()],
            lambda: 1.0,
            horizon: 1.0,
            fuzz_spread: 0.1,
        };
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["marks"][0], serde_json::json!([0.9, 1.0, 1.1]));
        let back: JumpPath = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
