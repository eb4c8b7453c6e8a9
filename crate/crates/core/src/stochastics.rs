//! Clock arithmetic, the seeded generator, and the sampling primitives every
//! event draws from.
//!
//! All randomness in a run flows through a single [`SimRng`]. The generator
//! is ChaCha8 (from `rand_chacha`) seeded with `seed_from_u64`; every
//! higher-level draw (uniform floats, bounded integers, normals, shuffles) is
//! implemented here on top of raw `u64` output so the sequence of values is
//! fixed by this crate alone and not by the sampling code of some external
//! version. Transcendental functions come from `libm`, which gives the same
//! bits on every platform.

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// Upper clamp applied to yearly probabilities before the log transform.
pub const MAX_YEARLY_PROBABILITY: f64 = 1.0 - 1e-9;

/// Default cap on sampled initial ages, in years.
pub const DEFAULT_MAX_INITIAL_AGE: u32 = 110;

/// Standard deviation of the initial age distribution, in years.
pub const INITIAL_AGE_SIGMA_YEARS: f64 = 100.0 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Hourly,
    Daily,
    Weekly,
    Monthly,
    Custom,
}

/// Simulation step size, expressed as the number of steps per year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClockSpec {
    kind: StepKind,
    steps_per_year: u32,
}

impl ClockSpec {
    pub const fn hourly() -> Self {
        Self { kind: StepKind::Hourly, steps_per_year: 365 * 24 }
    }

    pub const fn daily() -> Self {
        Self { kind: StepKind::Daily, steps_per_year: 365 }
    }

    pub const fn weekly() -> Self {
        Self { kind: StepKind::Weekly, steps_per_year: 52 }
    }

    pub const fn monthly() -> Self {
        Self { kind: StepKind::Monthly, steps_per_year: 12 }
    }

    pub fn custom(steps_per_year: u32) -> Result<Self, SimError> {
        if steps_per_year == 0 {
            return Err(SimError::InvalidClock("custom clock needs at least one step per year".into()));
        }
        Ok(Self { kind: StepKind::Custom, steps_per_year })
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn steps_per_year(&self) -> u32 {
        self.steps_per_year
    }

    /// Converts a step count into (exact where representable) years.
    pub fn years(&self, steps: u64) -> f64 {
        steps as f64 / self.steps_per_year as f64
    }

    /// Number of steps in `years` whole years.
    pub fn steps_in_years(&self, years: u64) -> u64 {
        years * self.steps_per_year as u64
    }
}

impl Default for ClockSpec {
    fn default() -> Self {
        Self::daily()
    }
}

impl fmt::Display for ClockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StepKind::Hourly => f.write_str("hourly"),
            StepKind::Daily => f.write_str("daily"),
            StepKind::Weekly => f.write_str("weekly"),
            StepKind::Monthly => f.write_str("monthly"),
            StepKind::Custom => write!(f, "custom:{}", self.steps_per_year),
        }
    }
}

impl FromStr for ClockSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hourly" => Ok(Self::hourly()),
            "daily" => Ok(Self::daily()),
            "weekly" => Ok(Self::weekly()),
            "monthly" => Ok(Self::monthly()),
            other => {
                let n = other
                    .strip_prefix("custom:")
                    .ok_or_else(|| SimError::InvalidClock(format!("unknown clock `{other}`")))?;
                let n: u32 = n
                    .parse()
                    .map_err(|_| SimError::InvalidClock(format!("bad custom step count `{n}`")))?;
                Self::custom(n)
            }
        }
    }
}

/// Per-step probability whose compounding over one year recovers `p_yearly`:
/// `-ln(1 - p) / N`, with `p` clamped just below one.
pub fn instantaneous_probability(p_yearly: f64, clock: ClockSpec) -> Result<f64, SimError> {
    if !(0.0..=1.0).contains(&p_yearly) {
        return Err(SimError::ProbabilityOutOfRange(p_yearly));
    }
    let p = p_yearly.min(MAX_YEARLY_PROBABILITY);
    let rate = -libm::log1p(-p) / clock.steps_per_year() as f64;
    Ok(rate.clamp(0.0, 1.0))
}

/// The single source of randomness for a run.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn seed_from(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        // Lemire's nearly-divisionless method with rejection.
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as usize
    }

    /// `true` with probability `p`. Always consumes one draw.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller (one draw per call, the sine branch is
    /// discarded).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(std::f64::consts::TAU * u2)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Moves a uniform random `k`-subset of `items` to the front (partial
    /// Fisher-Yates) and returns that prefix. `k` is capped at the length.
    pub fn partial_shuffle<'a, T>(&mut self, items: &'a mut [T], k: usize) -> &'a mut [T] {
        let k = k.min(items.len());
        for i in 0..k {
            let j = i + self.below(items.len() - i);
            items.swap(i, j);
        }
        &mut items[..k]
    }

    /// Returns `true` with probability 0.5.
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Draws `true` with probability `p`, validating the argument.
pub fn bernoulli(rng: &mut SimRng, p: f64) -> Result<bool, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    Ok(rng.bernoulli(p))
}

/// Index `i` drawn with probability `weights[i] / sum(weights)`.
pub fn weighted_index(rng: &mut SimRng, weights: &[f64]) -> Result<usize, SimError> {
    if weights.is_empty() {
        return Err(SimError::EmptySample);
    }
    let mut total = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(SimError::InvalidWeight(w));
        }
        if w > 0.0 {
            last_positive = Some(i);
        }
        total += w;
    }
    let last_positive = last_positive.ok_or(SimError::AllZeroWeights)?;
    if !total.is_finite() {
        return Err(SimError::InvalidWeight(total));
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && target < acc {
            return Ok(i);
        }
    }
    // rounding pushed the target past the accumulated sum
    Ok(last_positive)
}

/// Picks one of `items` with probability proportional to its weight.
pub fn weighted_sample<'a, T>(
    rng: &mut SimRng,
    items: &'a [T],
    weights: &[f64],
) -> Result<&'a T, SimError> {
    if items.len() != weights.len() {
        return Err(SimError::LengthMismatch { items: items.len(), weights: weights.len() });
    }
    weighted_index(rng, weights).map(|i| &items[i])
}

/// Returns a uniformly permuted copy of `items`.
pub fn shuffle<T: Clone>(rng: &mut SimRng, items: &[T]) -> Vec<T> {
    let mut out = items.to_vec();
    rng.shuffle(&mut out);
    out
}

/// Initial age in steps: `|floor(g)|` with `g ~ Normal(0, 25 N)` measured in
/// steps, redrawn while the result reaches `max_years`.
pub fn sample_half_normal_age_steps(rng: &mut SimRng, clock: ClockSpec, max_years: u32) -> u64 {
    let n = clock.steps_per_year() as f64;
    let sigma = INITIAL_AGE_SIGMA_YEARS * n;
    let cap = clock.steps_in_years(max_years as u64);
    loop {
        let g = rng.standard_normal() * sigma;
        let steps = libm::floor(g).abs() as u64;
        if steps < cap {
            return steps;
        }
    }
}

/// Same as [`sample_half_normal_age_steps`] but in years.
pub fn sample_half_normal_age(rng: &mut SimRng, clock: ClockSpec, max_years: u32) -> f64 {
    clock.years(sample_half_normal_age_steps(rng, clock, max_years))
}
