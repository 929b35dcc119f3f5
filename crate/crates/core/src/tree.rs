//! Iterative analysis of a complete k-ary hierarchy of caching routers.
//!
//! Consumers sit below the level-1 routers, `L` router levels follow and the
//! producer is the root. Each iteration sets the download delay into a
//! level-`l` router to one link round trip plus the previous iteration's
//! response time of its parent, then walks the levels bottom-up: solve the
//! characteristic time, evaluate hit/aggregation/response per object, and
//! superpose `k` miss streams into the parent's demand. Iteration stops when
//! the characteristic times and traffic-weighted response times settle.
//!
//! The working set is one demand vector plus one response-time vector per
//! router level above the first, each of catalog length. Per-object results
//! of every level are kept only when requested.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{PerObjectRates, PopularityProfile, DENSE_LIMIT};
use crate::error::{domain, Error, Result};
use crate::numeric::{CompensatedSum, REDUCTION_CHUNK};
use crate::router::{object_outcome, solve_occupancy, DelayMoments, OccupancyInput, RouterSolution};

/// Inputs of the hierarchical analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeScenario {
    /// Fan-in `k` of every router.
    pub arity: u32,
    /// Number of router levels `L` (tree height is `L + 2`).
    pub levels: u32,
    /// Interest rate from consumers into each level-1 router, per second.
    pub consumer_rate: f64,
    /// Round-trip delay of one link, seconds.
    pub link_rtt: f64,
    /// Content Store capacity of each router, indexed by level - 1.
    pub capacities: Vec<u64>,
    pub popularity: PopularityProfile,
}

impl TreeScenario {
    pub fn validate(&self) -> Result<()> {
        if self.arity < 1 {
            return Err(domain("arity must be >= 1"));
        }
        if self.levels < 1 {
            return Err(domain("at least one router level is required"));
        }
        if self.capacities.len() != self.levels as usize {
            return Err(domain(format!(
                "{} capacities given for {} levels",
                self.capacities.len(),
                self.levels
            )));
        }
        if !(self.consumer_rate.is_finite() && self.consumer_rate >= 0.0) {
            return Err(domain(format!("consumer rate must be finite and >= 0, got {}", self.consumer_rate)));
        }
        if !(self.link_rtt.is_finite() && self.link_rtt >= 0.0) {
            return Err(domain(format!("link delay must be finite and >= 0, got {}", self.link_rtt)));
        }
        Ok(())
    }

    /// Number of routers at `level` (1-based): `k^(L - level + 1)`.
    pub fn routers_at_level(&self, level: u32) -> u64 {
        (self.arity as u64).pow(self.levels - level + 1)
    }

    pub fn total_routers(&self) -> u64 {
        (1..=self.levels).map(|l| self.routers_at_level(l)).sum()
    }

    pub fn n_objects(&self) -> usize {
        self.popularity.n_objects() as usize
    }

    /// Consumer Interests entering the whole tree per second.
    pub fn total_consumer_rate(&self) -> f64 {
        self.consumer_rate * self.routers_at_level(1) as f64
    }
}

/// Iteration controls for [`analyze_tree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Largest relative change (characteristic times and mean response
    /// times) accepted as converged.
    pub convergence_threshold: f64,
    pub max_iterations: usize,
    /// Keep per-object vectors for every level. Defaults to on for dense
    /// catalogs.
    pub retain_objects: Option<bool>,
    /// Return the last iterate instead of failing when the threshold is
    /// not reached.
    pub allow_unconverged: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { convergence_threshold: 1e-3, max_iterations: 50, retain_objects: None, allow_unconverged: false }
    }
}

/// Per-level aggregates of one router at that level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSolution {
    pub level: u32,
    pub routers: u64,
    pub capacity: u64,
    pub characteristic_time: f64,
    /// Total Interest rate into one router, `sum_i m_i`.
    pub demand: f64,
    /// `sum_i m_i h_i`.
    pub hit_rate: f64,
    /// `sum_i m_i a_i`.
    pub aggregated_rate: f64,
    /// Traffic-weighted mean response time.
    pub response_time: f64,
}

impl LevelSolution {
    pub fn hit_probability(&self) -> f64 {
        ratio(self.hit_rate, self.demand)
    }

    pub fn aggregation_probability(&self) -> f64 {
        ratio(self.aggregated_rate, self.demand)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Per-object vectors for every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDetail {
    pub per_level: Vec<RouterSolution>,
    /// Input rate of each object into one router of the level.
    pub demands: Vec<PerObjectRates>,
    /// Mean download delay into each level.
    pub delays: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSolution {
    pub arity: u32,
    pub consumer_rate: f64,
    pub levels: Vec<LevelSolution>,
    pub detail: Option<TreeDetail>,
    pub iterations: usize,
    pub converged: bool,
    pub convergence_delta: f64,
}

impl TreeSolution {
    pub fn level(&self, level: u32) -> Result<&LevelSolution> {
        level
            .checked_sub(1)
            .and_then(|i| self.levels.get(i as usize))
            .ok_or_else(|| domain(format!("level {level} outside 1..={}", self.levels.len())))
    }

    /// Fraction of all consumer Interests aggregated at `level`, in percent.
    pub fn aggregation_percentage(&self, level: u32) -> Result<f64> {
        let lv = self.level(level)?;
        let offered = (self.arity as f64).powi(level as i32 - 1) * self.consumer_rate;
        Ok(100.0 * ratio(lv.aggregated_rate, offered))
    }

    /// Sum of [`Self::aggregation_percentage`] over all levels.
    pub fn cumulative_aggregation_percentage(&self) -> f64 {
        (1..=self.levels.len() as u32).map(|l| self.aggregation_percentage(l).unwrap()).sum()
    }

    /// Mean time a consumer waits for Data at its level-1 router.
    pub fn consumer_response_time(&self) -> f64 {
        self.levels.first().map_or(0.0, |l| l.response_time)
    }
}

/// `out[i] = k * m[i] * (1 - h[i]) * (1 - a[i])`: the superposed miss stream
/// of `k` identical children.
pub fn next_level_demand(arity: u32, demand: &[f64], hit: &[f64], aggregated: &[f64]) -> Result<PerObjectRates> {
    if demand.len() != hit.len() || demand.len() != aggregated.len() {
        return Err(domain(format!(
            "vector lengths differ: demand {}, hit {}, aggregated {}",
            demand.len(),
            hit.len(),
            aggregated.len()
        )));
    }
    for (i, (&h, &a)) in hit.iter().zip(aggregated).enumerate() {
        if !(h >= 0.0 && a >= 0.0 && h + a <= 1.0 + 1e-12) {
            return Err(domain(format!("object {i}: hit {h} and aggregated {a} are not a valid split")));
        }
    }
    let k = arity as f64;
    PerObjectRates::new(
        demand.iter().zip(hit).zip(aggregated).map(|((&m, &h), &a)| miss_rate(k, m, h, a)).collect(),
    )
}

#[inline]
fn miss_rate(k: f64, m: f64, h: f64, a: f64) -> f64 {
    k * m * (1.0 - h) * (1.0 - a)
}

/// Share of the Interests reaching `level` that are aggregated there.
pub fn level_aggregation_probability(solution: &TreeSolution, level: u32) -> Result<f64> {
    Ok(solution.level(level)?.aggregation_probability())
}

/// Aggregated Interests at `level` as a percentage of all consumer Interests.
pub fn aggregation_percentage(solution: &TreeSolution, scenario: &TreeScenario, level: u32) -> Result<f64> {
    if level < 1 || level > scenario.levels {
        return Err(domain(format!("level {level} outside 1..={}", scenario.levels)));
    }
    solution.aggregation_percentage(level)
}

/// `lambda * delta`.
pub fn system_load(consumer_rate: f64, link_rtt: f64) -> f64 {
    consumer_rate * link_rtt
}

struct LevelInput<'a> {
    demand: &'a [f64],
    parent_response: Option<&'a [f64]>,
    link_rtt: f64,
}

impl LevelInput<'_> {
    #[inline]
    fn delay(&self, i: usize) -> f64 {
        self.link_rtt + self.parent_response.map_or(0.0, |r| r[i])
    }
}

impl OccupancyInput for LevelInput<'_> {
    fn len(&self) -> usize {
        self.demand.len()
    }
    #[inline]
    fn rate(&self, i: usize) -> f64 {
        self.demand[i]
    }
    #[inline]
    fn delay_mean(&self, i: usize) -> f64 {
        self.delay(i)
    }
}

fn relative_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Runs the hierarchical fixed-point analysis.
pub fn analyze_tree(scenario: &TreeScenario, options: &AnalysisOptions) -> Result<TreeSolution> {
    scenario.validate()?;
    if !(options.convergence_threshold > 0.0) {
        return Err(domain("convergence threshold must be > 0"));
    }
    let n = scenario.n_objects();
    let levels = scenario.levels as usize;
    let k = scenario.arity as f64;
    let delta = scenario.link_rtt;
    let retain = options.retain_objects.unwrap_or(scenario.popularity.n_objects() <= DENSE_LIMIT);

    // response[j] holds the latest response times of level j + 2; the
    // producer (level L + 1) answers instantly.
    let mut response: Vec<Vec<f64>> =
        (2..=levels).map(|j| vec![delta * (levels + 1 - j) as f64; n]).collect();
    let mut demand = vec![0.0; n];

    let mut prev: Option<Vec<LevelSolution>> = None;
    let mut delta_max = f64::INFINITY;
    let mut iteration = 0;
    let mut detail = None;

    while iteration < options.max_iterations {
        iteration += 1;
        let profile = &scenario.popularity;
        let lambda = scenario.consumer_rate;
        demand
            .par_chunks_mut(REDUCTION_CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * REDUCTION_CHUNK;
                for (j, m) in chunk.iter_mut().enumerate() {
                    *m = lambda * profile.prob_at(base + j);
                }
            });

        let mut current = Vec::with_capacity(levels);
        let mut iter_detail = retain.then(|| TreeDetail {
            per_level: Vec::with_capacity(levels),
            demands: Vec::with_capacity(levels),
            delays: Vec::with_capacity(levels),
        });

        for l in 1..=levels {
            let capacity = scenario.capacities[l - 1];
            // Level l reads its parent's responses (index l - 1) and
            // overwrites its own (index l - 2).
            let (lower, upper) = response.split_at_mut((l - 1).min(levels - 1));
            let parent_response = if l < levels { upper.first().map(|v| v.as_slice()) } else { None };
            let own_response: Option<&mut Vec<f64>> = if l >= 2 { lower.last_mut() } else { None };

            let input = LevelInput { demand: &demand, parent_response, link_rtt: delta };
            let guess = prev.as_ref().map(|p| p[l - 1].characteristic_time);
            let t = solve_occupancy(&input, capacity, guess)?;

            if let Some(d) = iter_detail.as_mut() {
                let delays: Vec<f64> = (0..n).map(|i| input.delay(i)).collect();
                let moments: Vec<DelayMoments> = delays.iter().map(|&x| DelayMoments::deterministic(x)).collect();
                d.per_level.push(RouterSolution::evaluate(&demand, &moments, capacity, t));
                d.demands.push(PerObjectRates::new(demand.clone())?);
                d.delays.push(delays);
            }

            let sums = advance_level(&mut demand, parent_response, own_response, delta, k, t);
            let [total, hits, aggregated, weighted_response] = sums.map(|s| s.value());
            current.push(LevelSolution {
                level: l as u32,
                routers: scenario.routers_at_level(l as u32),
                capacity,
                characteristic_time: t,
                demand: total,
                hit_rate: hits,
                aggregated_rate: aggregated,
                response_time: ratio(weighted_response, total),
            });
        }

        if let Some(p) = &prev {
            delta_max = p
                .iter()
                .zip(&current)
                .flat_map(|(a, b)| {
                    [
                        relative_change(a.characteristic_time, b.characteristic_time),
                        relative_change(a.response_time, b.response_time),
                    ]
                })
                .fold(0.0, f64::max);
        }
        prev = Some(current);
        detail = iter_detail;
        if delta_max <= options.convergence_threshold {
            break;
        }
    }

    let converged = delta_max <= options.convergence_threshold;
    if !converged && !options.allow_unconverged {
        return Err(Error::NonConvergence { iterations: iteration, delta: delta_max });
    }
    Ok(TreeSolution {
        arity: scenario.arity,
        consumer_rate: scenario.consumer_rate,
        levels: prev.unwrap_or_default(),
        detail,
        iterations: iteration,
        converged,
        convergence_delta: delta_max,
    })
}

/// Evaluates one level at characteristic time `t`, replacing `demand` with
/// the parent's demand and `own_response` with this level's response times.
/// Returns `[sum m, sum m h, sum m a, sum m r]`.
fn advance_level(
    demand: &mut [f64],
    parent_response: Option<&[f64]>,
    own_response: Option<&mut Vec<f64>>,
    link_rtt: f64,
    arity: f64,
    t: f64,
) -> [CompensatedSum; 4] {
    let step = |m: &mut f64, parent: f64, own: Option<&mut f64>, acc: &mut [CompensatedSum; 4]| {
        let o = object_outcome(*m, DelayMoments::deterministic(link_rtt + parent), t);
        acc[0].add(*m);
        acc[1].add(*m * o.hit);
        acc[2].add(*m * o.aggregated);
        acc[3].add(*m * o.response_time);
        if let Some(r) = own {
            *r = o.response_time;
        }
        *m = miss_rate(arity, *m, o.hit, o.aggregated);
    };

    let parent_at = |chunk: usize, j: usize| parent_response.map_or(0.0, |r| r[chunk * REDUCTION_CHUNK + j]);
    let partials: Vec<[CompensatedSum; 4]> = match own_response {
        Some(own) => demand
            .par_chunks_mut(REDUCTION_CHUNK)
            .zip(own.par_chunks_mut(REDUCTION_CHUNK))
            .enumerate()
            .map(|(c, (ms, rs))| {
                let mut acc = [CompensatedSum::new(); 4];
                for (j, (m, r)) in ms.iter_mut().zip(rs.iter_mut()).enumerate() {
                    step(m, parent_at(c, j), Some(r), &mut acc);
                }
                acc
            })
            .collect(),
        None => demand
            .par_chunks_mut(REDUCTION_CHUNK)
            .enumerate()
            .map(|(c, ms)| {
                let mut acc = [CompensatedSum::new(); 4];
                for (j, m) in ms.iter_mut().enumerate() {
                    step(m, parent_at(c, j), None, &mut acc);
                }
                acc
            })
            .collect(),
    };
    let mut total = [CompensatedSum::new(); 4];
    for p in &partials {
        for (a, b) in total.iter_mut().zip(p) {
            a.merge(b);
        }
    }
    total
}
