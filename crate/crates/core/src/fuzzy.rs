//! Triangular fuzzy numbers and fuzzy random variables.
//!
//! A [`Tfn`] is stored by its endpoints `l <= m <= u`. Alpha-cuts are taken
//! with the spreads `m - l` and `u - m`, so the cut at level `alpha` is
//! `[m - (1 - alpha)(m - l), m + (1 - alpha)(u - m)]`. A crisp real `x` embeds
//! as `(x, x, x)` and every operation here reduces to real arithmetic on it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Triangular fuzzy number with endpoints `l <= m <= u`.
///
/// Serializes as the triple `[l, m, u]`; deserialization re-checks ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Tfn {
    l: f64,
    m: f64,
    u: f64,
}

impl TryFrom<[f64; 3]> for Tfn {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Tfn::new(v[0], v[1], v[2])
    }
}

impl From<Tfn> for [f64; 3] {
    fn from(a: Tfn) -> Self {
        [a.l, a.m, a.u]
    }
}

impl Tfn {
    pub fn new(l: f64, m: f64, u: f64) -> Result<Self> {
        if !(l.is_finite() && m.is_finite() && u.is_finite()) {
            return domain(format!("non-finite fuzzy number ({l}, {m}, {u})"));
        }
        if !(l <= m && m <= u) {
            return domain(format!("fuzzy number requires l <= m <= u, got ({l}, {m}, {u})"));
        }
        Ok(Tfn { l, m, u })
    }

    /// Builds without checking; callers guarantee `l <= m <= u`.
    #[inline]
    pub(crate) const fn new_unchecked(l: f64, m: f64, u: f64) -> Self {
        Tfn { l, m, u }
    }

    #[inline]
    pub const fn crisp(x: f64) -> Self {
        Tfn { l: x, m: x, u: x }
    }

    #[inline]
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Core value (full membership).
    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn is_crisp(&self) -> bool {
        self.l == self.m && self.m == self.u
    }

    pub fn left_spread(&self) -> f64 {
        self.m - self.l
    }

    pub fn right_spread(&self) -> f64 {
        self.u - self.m
    }

    pub fn width(&self) -> f64 {
        self.u - self.l
    }

    /// Piecewise-linear hat membership. A zero-width ramp is a step, so the
    /// core always has membership 1.
    pub fn membership(&self, x: f64) -> f64 {
        if x == self.m {
            1.0
        } else if x < self.m {
            if x <= self.l {
                0.0
            } else {
                (x - self.l) / (self.m - self.l)
            }
        } else if x >= self.u {
            0.0
        } else {
            (self.u - x) / (self.u - self.m)
        }
    }

    pub fn alpha_cut(&self, alpha: f64) -> Result<AlphaCut> {
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("alpha must lie in [0, 1], got {alpha}"));
        }
        Ok(AlphaCut {
            lo: self.lower_at(alpha),
            hi: self.upper_at(alpha),
            alpha,
        })
    }

    #[inline]
    fn lower_at(&self, alpha: f64) -> f64 {
        self.m - (1.0 - alpha) * (self.m - self.l)
    }

    #[inline]
    fn upper_at(&self, alpha: f64) -> f64 {
        self.m + (1.0 - alpha) * (self.u - self.m)
    }

    /// Risk-attitude weighted expectation `((1 - eta) l + m + eta u) / 2`.
    pub fn expectation(&self, eta: RiskAttitude) -> f64 {
        let eta = eta.value();
        ((1.0 - eta) * self.l + self.m + eta * self.u) / 2.0
    }

    /// Scalar multiple. Negative scalars reflect the endpoints so the result
    /// stays ordered.
    #[inline]
    pub fn scale(&self, gamma: f64) -> Tfn {
        if gamma >= 0.0 {
            Tfn::new_unchecked(gamma * self.l, gamma * self.m, gamma * self.u)
        } else {
            Tfn::new_unchecked(gamma * self.u, gamma * self.m, gamma * self.l)
        }
    }

    /// `gamma / a`, defined when the support excludes zero.
    pub fn reciprocal_scale(&self, gamma: f64) -> Result<Tfn> {
        if gamma == 0.0 {
            return domain("reciprocal scaling by zero");
        }
        let positive = self.l > 0.0;
        let negative = self.u < 0.0;
        if !(positive || negative) {
            return domain(format!(
                "support [{}, {}] contains zero; reciprocal undefined",
                self.l, self.u
            ));
        }
        let a = gamma / self.l;
        let b = gamma / self.u;
        Ok(Tfn::new_unchecked(a.min(b), gamma / self.m, a.max(b)))
    }

    /// Interval subtraction `(l_a - u_b, m_a - m_b, u_a - l_b)`.
    pub fn sub_interval(&self, other: &Tfn) -> Tfn {
        Tfn::new_unchecked(self.l - other.u, self.m - other.m, self.u - other.l)
    }

    /// Componentwise difference. Fails when the result is not ordered, which
    /// happens whenever `other` is wider than `self`.
    pub fn sub_componentwise(&self, other: &Tfn) -> Result<Tfn> {
        Tfn::new(self.l - other.l, self.m - other.m, self.u - other.u)
    }

    pub fn sub_with(&self, other: &Tfn, mode: SubtractionMode) -> Result<Tfn> {
        match mode {
            SubtractionMode::Interval => Ok(self.sub_interval(other)),
            SubtractionMode::Componentwise => self.sub_componentwise(other),
        }
    }

    /// Applies a non-decreasing map to each endpoint.
    #[inline]
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Tfn {
        Tfn::new_unchecked(f(self.l), f(self.m), f(self.u))
    }
}

impl std::ops::Add for Tfn {
    type Output = Tfn;

    #[inline]
    fn add(self, rhs: Tfn) -> Tfn {
        Tfn::new_unchecked(self.l + rhs.l, self.m + rhs.m, self.u + rhs.u)
    }
}

impl std::ops::Sub for Tfn {
    type Output = Tfn;

    fn sub(self, rhs: Tfn) -> Tfn {
        self.sub_interval(&rhs)
    }
}

impl std::ops::Neg for Tfn {
    type Output = Tfn;

    fn neg(self) -> Tfn {
        self.scale(-1.0)
    }
}

/// How `a - b` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtractionMode {
    #[default]
    Interval,
    Componentwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCut {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
}

impl AlphaCut {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &AlphaCut) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Weight on the upper endpoint in [`Tfn::expectation`]; 0.5 is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskAttitude(f64);

impl RiskAttitude {
    pub const NEUTRAL: RiskAttitude = RiskAttitude(0.5);

    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return domain(format!("risk attitude eta must lie in [0, 1], got {eta}"));
        }
        Ok(RiskAttitude(eta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for RiskAttitude {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl TryFrom<f64> for RiskAttitude {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        RiskAttitude::new(v)
    }
}

impl From<RiskAttitude> for f64 {
    fn from(r: RiskAttitude) -> f64 {
        r.0
    }
}

pub const DEFAULT_ALPHA_GRID: usize = 101;

/// Realizations of a fuzzy random variable.
///
/// Moments integrate the alpha-cut endpoint statistics over a uniform alpha
/// grid with the trapezoidal rule. Sample (n - 1) denominators throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyEnsemble {
    samples: Vec<Tfn>,
    alpha_grid_size: usize,
}

impl FuzzyEnsemble {
    pub fn new(samples: Vec<Tfn>) -> Self {
        Self::with_grid(samples, DEFAULT_ALPHA_GRID).expect("default grid is valid")
    }

    pub fn with_grid(samples: Vec<Tfn>, alpha_grid_size: usize) -> Result<Self> {
        if alpha_grid_size < 2 {
            return domain("alpha grid needs at least 2 points");
        }
        Ok(FuzzyEnsemble {
            samples,
            alpha_grid_size,
        })
    }

    pub fn samples(&self) -> &[Tfn] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Componentwise mean of the endpoints. For triangular samples this is
    /// the mean of the alpha-cut endpoints at every level.
    pub fn expectation(&self) -> Result<Tfn> {
        if self.samples.is_empty() {
            return domain("expectation of an empty ensemble");
        }
        let n = self.samples.len() as f64;
        let (mut l, mut m, mut u) = (0.0, 0.0, 0.0);
        for s in &self.samples {
            l += s.l;
            m += s.m;
            u += s.u;
        }
        Ok(Tfn::new_unchecked(l / n, m / n, u / n))
    }

    pub fn variance(&self) -> Result<f64> {
        if self.samples.len() < 2 {
            return domain("variance needs at least 2 samples");
        }
        Ok(self.alpha_integral(|alpha| {
            let lo: Vec<f64> = self.samples.iter().map(|s| s.lower_at(alpha)).collect();
            let hi: Vec<f64> = self.samples.iter().map(|s| s.upper_at(alpha)).collect();
            sample_cov(&lo, &lo) + sample_cov(&hi, &hi)
        }))
    }

    pub fn covariance(&self, other: &FuzzyEnsemble) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return domain(format!(
                "paired ensembles differ in size: {} vs {}",
                self.samples.len(),
                other.samples.len()
            ));
        }
        if self.samples.len() < 2 {
            return domain("covariance needs at least 2 paired samples");
        }
        Ok(self.alpha_integral(|alpha| {
            let a_lo: Vec<f64> = self.samples.iter().map(|s| s.lower_at(alpha)).collect();
            let b_lo: Vec<f64> = other.samples.iter().map(|s| s.lower_at(alpha)).collect();
            let a_hi: Vec<f64> = self.samples.iter().map(|s| s.upper_at(alpha)).collect();
            let b_hi: Vec<f64> = other.samples.iter().map(|s| s.upper_at(alpha)).collect();
            sample_cov(&a_lo, &b_lo) + sample_cov(&a_hi, &b_hi)
        }))
    }

    pub fn correlation(&self, other: &FuzzyEnsemble) -> Result<f64> {
        let cov = self.covariance(other)?;
        let va = self.variance()?;
        let vb = other.variance()?;
        if va == 0.0 || vb == 0.0 {
            return domain("correlation undefined: an ensemble has zero variance");
        }
        Ok(cov / (va * vb).sqrt())
    }

    /// `0.5 * integral_0^1 f(alpha) d alpha` by the trapezoidal rule.
    fn alpha_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.alpha_grid_size;
        let h = 1.0 / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let alpha = if i == n - 1 { 1.0 } else { i as f64 * h };
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * f(alpha);
        }
        0.5 * acc * h
    }
}

fn sample_cov(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0)
}
