//! Single-router analytics for an LRU Content Store fronted by a PIT, with
//! non-zero download delays.
//!
//! With per-object Poisson rate `m`, mean download delay `d` and cache
//! characteristic time `T`, a router sees per object
//!
//! ```text
//! hit         h = (e^{mT} - 1) / (m d + e^{mT})
//! aggregated  a = m d / (m d + e^{mT})
//! response    r = E[d (1 + m d / 2)] / (m d + e^{mT})
//! ```
//!
//! Every formula is evaluated after multiplying through by `e^{-mT}`, which
//! keeps them finite for any `mT`.

use serde::{Deserialize, Serialize};

use crate::catalog::PerObjectRates;
use crate::error::{domain, Error, Result};
use crate::numeric::{reduce_chunks, CompensatedSum};
use crate::solver::{solve_increasing, Tolerance};

/// First two moments of an object's download delay, in seconds and seconds².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayMoments {
    pub mean: f64,
    pub second_moment: f64,
}

impl DelayMoments {
    pub fn new(mean: f64, second_moment: f64) -> Result<Self> {
        let m = Self { mean, second_moment };
        m.validate()?;
        Ok(m)
    }

    /// A delay that always takes exactly `delay` seconds.
    pub fn deterministic(delay: f64) -> Self {
        Self { mean: delay, second_moment: delay * delay }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean.is_finite() && self.mean >= 0.0) {
            return Err(domain(format!("delay mean must be finite and >= 0, got {}", self.mean)));
        }
        // Jensen, with slack for the rounding in mean * mean.
        let floor = self.mean * self.mean;
        if !(self.second_moment.is_finite() && self.second_moment >= floor * (1.0 - 4.0 * f64::EPSILON)) {
            return Err(domain(format!(
                "delay second moment {} is below mean^2 = {floor}",
                self.second_moment
            )));
        }
        Ok(())
    }
}

/// Per-object outcome probabilities and pending time at one router.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectOutcome {
    pub hit: f64,
    pub aggregated: f64,
    pub forwarded: f64,
    pub response_time: f64,
}

/// Evaluates all per-object quantities with a single exponential.
/// Inputs are assumed valid.
#[inline]
pub fn object_outcome(rate: f64, delay: DelayMoments, t: f64) -> ObjectOutcome {
    if rate == 0.0 {
        return ObjectOutcome { hit: 0.0, aggregated: 0.0, forwarded: 1.0, response_time: delay.mean };
    }
    let decay = (-rate * t).exp();
    let load = rate * delay.mean;
    let denom = load * decay + 1.0;
    let aggregated = load * decay / denom;
    let forwarded = decay / denom;
    ObjectOutcome {
        hit: (1.0 - decay) / denom,
        aggregated,
        forwarded,
        response_time: (delay.mean + 0.5 * rate * delay.second_moment) * decay / denom,
    }
}

/// Hit probability and its derivative in `T`. Inputs are assumed valid.
#[inline]
pub(crate) fn hit_and_slope(rate: f64, delay_mean: f64, t: f64) -> (f64, f64) {
    if rate == 0.0 {
        return (0.0, 0.0);
    }
    let decay = (-rate * t).exp();
    let load = rate * delay_mean;
    let denom = load * decay + 1.0;
    let hit = (1.0 - decay) / denom;
    let slope = rate * decay * (1.0 + load) / (denom * denom);
    (hit, slope)
}

fn check_scalars(rate: f64, delay_mean: f64, t: f64) -> Result<()> {
    for (name, v) in [("rate", rate), ("delay", delay_mean), ("characteristic time", t)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    Ok(())
}

/// Cache hit probability of an object requested at `rate` with mean
/// download delay `delay_mean`, for characteristic time `t`.
pub fn hit_probability(rate: f64, delay_mean: f64, t: f64) -> Result<f64> {
    check_scalars(rate, delay_mean, t)?;
    Ok(hit_and_slope(rate, delay_mean, t).0)
}

/// Probability that an arriving Interest finds a pending PIT entry.
pub fn aggregation_probability(rate: f64, delay_mean: f64, t: f64) -> Result<f64> {
    check_scalars(rate, delay_mean, t)?;
    Ok(object_outcome(rate, DelayMoments::deterministic(delay_mean), t).aggregated)
}

/// Expected pending time of an Interest at the router.
pub fn response_time(rate: f64, delay: DelayMoments, t: f64) -> Result<f64> {
    check_scalars(rate, delay.mean, t)?;
    delay.validate()?;
    Ok(object_outcome(rate, delay, t).response_time)
}

/// Source of per-object `(rate, mean delay)` pairs for the characteristic-time
/// equation. Implementations must be pure so that chunks can be evaluated in
/// any order.
pub trait OccupancyInput: Sync {
    fn len(&self) -> usize;
    fn rate(&self, index: usize) -> f64;
    fn delay_mean(&self, index: usize) -> f64;
}

struct SliceInput<'a> {
    rates: &'a [f64],
    delays: &'a [f64],
}

impl OccupancyInput for SliceInput<'_> {
    fn len(&self) -> usize {
        self.rates.len()
    }
    #[inline]
    fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }
    #[inline]
    fn delay_mean(&self, i: usize) -> f64 {
        self.delays[i]
    }
}

/// Solves `sum_j h_j(T) = capacity` for an arbitrary input source.
///
/// `guess` seeds the bracket search; when `None` the search starts at
/// `1 / (mean positive rate)`.
pub fn solve_occupancy<I: OccupancyInput>(input: &I, capacity: u64, guess: Option<f64>) -> Result<f64> {
    if capacity == 0 {
        return Ok(0.0);
    }
    let [positive, rate_sum]: [CompensatedSum; 2] = reduce_chunks(input.len(), |range| {
        let mut acc = [CompensatedSum::new(); 2];
        for i in range {
            let m = input.rate(i);
            if m > 0.0 {
                acc[0].add(1.0);
                acc[1].add(m);
            }
        }
        acc
    });
    let effective = positive.value() as u64;
    if capacity >= effective {
        return Err(Error::InfeasibleCapacity { capacity, effective });
    }
    // h <= m T, so C / sum(m) never overshoots the root.
    let start = guess.filter(|g| g.is_finite() && *g > 0.0).unwrap_or(capacity as f64 / rate_sum.value());
    let target = capacity as f64;
    solve_increasing(
        |t| {
            let [value, slope]: [CompensatedSum; 2] = reduce_chunks(input.len(), |range| {
                let mut acc = [CompensatedSum::new(); 2];
                for i in range {
                    let (h, dh) = hit_and_slope(input.rate(i), input.delay_mean(i), t);
                    acc[0].add(h);
                    acc[1].add(dh);
                }
                acc
            });
            (value.value() - target, slope.value())
        },
        start,
        Tolerance::default(),
    )
}

/// Characteristic time `T` of an LRU cache holding `capacity` objects.
pub fn solve_characteristic_time(rates: &PerObjectRates, delay_means: &[f64], capacity: u64) -> Result<f64> {
    if rates.len() != delay_means.len() {
        return Err(domain(format!("{} rates but {} delays", rates.len(), delay_means.len())));
    }
    if let Some(d) = delay_means.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(domain(format!("delay must be finite and >= 0, got {d}")));
    }
    solve_occupancy(&SliceInput { rates, delays: delay_means }, capacity, None)
}

/// Per-router solution: characteristic time plus per-object metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterSolution {
    pub characteristic_time: f64,
    pub capacity: u64,
    pub hit: Vec<f64>,
    pub aggregated: Vec<f64>,
    pub response_time: Vec<f64>,
    pub forward_fraction: Vec<f64>,
}

impl RouterSolution {
    /// Evaluates every object at an already known characteristic time.
    pub fn evaluate(rates: &[f64], delays: &[DelayMoments], capacity: u64, t: f64) -> Self {
        let n = rates.len();
        let mut sol = Self {
            characteristic_time: t,
            capacity,
            hit: Vec::with_capacity(n),
            aggregated: Vec::with_capacity(n),
            response_time: Vec::with_capacity(n),
            forward_fraction: Vec::with_capacity(n),
        };
        for (&m, &d) in rates.iter().zip(delays) {
            let o = object_outcome(m, d, t);
            sol.hit.push(o.hit);
            sol.aggregated.push(o.aggregated);
            sol.response_time.push(o.response_time);
            sol.forward_fraction.push(o.forwarded);
        }
        sol
    }

    pub fn len(&self) -> usize {
        self.hit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hit.is_empty()
    }

    /// `sum_i h_i`, which equals the capacity at the solved `T`.
    pub fn occupancy(&self) -> f64 {
        self.hit.iter().copied().collect::<CompensatedSum>().value()
    }
}

/// Solves `T` and evaluates hit, aggregation and response time per object.
pub fn analyze_router(rates: &PerObjectRates, delays: &[DelayMoments], capacity: u64) -> Result<RouterSolution> {
    if rates.len() != delays.len() {
        return Err(domain(format!("{} rates but {} delays", rates.len(), delays.len())));
    }
    for d in delays {
        d.validate()?;
    }
    let means: Vec<f64> = delays.iter().map(|d| d.mean).collect();
    let t = solve_characteristic_time(rates, &means, capacity)?;
    Ok(RouterSolution::evaluate(rates, delays, capacity, t))
}
