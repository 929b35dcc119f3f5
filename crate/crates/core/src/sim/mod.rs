//! Discrete-event simulator of the k-ary router hierarchy.
//!
//! Every level-1 router receives one Poisson stream of consumer Interests
//! (or a replayed trace). Routers run an LRU Content Store and an unbounded
//! PIT without timeouts; each link adds `link_rtt / 2` in each direction and
//! the producer answers instantly. Consumers are attached to their level-1
//! router with no extra latency, so a consumer's response time is the
//! Interest's pending time at that router.
//!
//! Events are processed in `(time, class, sequence)` order where Data sorts
//! before Interests at equal timestamps. The first `warmup_fraction` of
//! consumer requests, and every Interest they cause upstream, are left out
//! of the statistics.
//!
//! RNG: leaf `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`.

mod lru;
mod router;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

pub use lru::LruSet;
pub use router::{Disposition, DispositionCounts, Face, PitEntry, RouterState};

use crate::catalog::DENSE_LIMIT;
use crate::error::{Error, Result};
use crate::tree::TreeScenario;

/// One consumer request of a replayed trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    /// 1-based popularity rank.
    pub object_rank: u64,
    /// Index of the level-1 router, `0..k^L`.
    pub leaf: u64,
}

/// Parses a whitespace-separated `time object_rank leaf_index` trace.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::InvalidTrace(format!("line {}: {what}: {line:?}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let time: f64 = fields[0].parse().map_err(|_| bad("bad time"))?;
        let object_rank: u64 = fields[1].parse().map_err(|_| bad("bad object rank"))?;
        let leaf: u64 = fields[2].parse().map_err(|_| bad("bad leaf index"))?;
        out.push(TraceRecord { time, object_rank, leaf });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: TreeScenario,
    /// Consumer requests to generate; ignored when a trace is given.
    pub total_requests: u64,
    pub warmup_fraction: f64,
    pub seed: u64,
    pub trace: Option<Vec<TraceRecord>>,
}

impl SimConfig {
    pub fn new(scenario: TreeScenario, total_requests: u64, warmup_fraction: f64, seed: u64) -> Self {
        Self { scenario, total_requests, warmup_fraction, seed, trace: None }
    }

    fn request_count(&self) -> u64 {
        self.trace.as_ref().map_or(self.total_requests, |t| t.len() as u64)
    }

    fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let sc = &self.scenario;
        if sc.popularity.n_objects() > DENSE_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "simulation supports at most {DENSE_LIMIT} objects, got {}",
                sc.popularity.n_objects()
            )));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::InvalidConfig(format!("warmup fraction {} not in [0, 1)", self.warmup_fraction)));
        }
        let leaves = sc.routers_at_level(1);
        match &self.trace {
            Some(trace) => {
                if trace.is_empty() {
                    return Err(Error::InvalidTrace("trace is empty".into()));
                }
                let mut last = 0.0;
                for (i, r) in trace.iter().enumerate() {
                    if !(r.time.is_finite() && r.time >= last) {
                        return Err(Error::InvalidTrace(format!(
                            "record {i}: time {} is before the previous record ({last})",
                            r.time
                        )));
                    }
                    last = r.time;
                    if r.object_rank < 1 || r.object_rank > sc.popularity.n_objects() {
                        return Err(Error::InvalidTrace(format!("record {i}: object rank {} out of range", r.object_rank)));
                    }
                    if r.leaf >= leaves {
                        return Err(Error::InvalidTrace(format!("record {i}: leaf {} out of range", r.leaf)));
                    }
                }
            }
            None => {
                if self.total_requests == 0 {
                    return Err(Error::InvalidConfig("total_requests must be >= 1".into()));
                }
                if !(sc.consumer_rate > 0.0) {
                    return Err(Error::InvalidConfig("Poisson consumers need a positive rate".into()));
                }
            }
        }
        Ok(())
    }
}

/// Aggregate dispositions of all routers at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    pub routers: u64,
    pub counts: DispositionCounts,
    pub aggregation_probability: f64,
    pub hit_probability: f64,
    /// Aggregated Interests at this level per measured consumer request, %.
    pub aggregation_percentage: f64,
}

/// Counters of one router over the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterCounts {
    pub level: u32,
    pub index: u64,
    pub per_object: Vec<DispositionCounts>,
    /// Largest Content Store occupancy over the whole run.
    pub peak_store_len: usize,
}

impl RouterCounts {
    pub fn total(&self) -> DispositionCounts {
        let mut t = DispositionCounts::default();
        for c in &self.per_object {
            t.add(c);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub routers: Vec<RouterCounts>,
    pub levels: Vec<LevelStats>,
    pub issued: u64,
    pub delivered: u64,
    pub measured_requests: u64,
    /// Mean consumer response time per object over measured requests.
    pub response_time: Vec<Option<f64>>,
    pub mean_response_time: Option<f64>,
    pub end_time: f64,
    pub events: u64,
}

impl SimStats {
    pub fn level(&self, level: u32) -> Option<&LevelStats> {
        self.levels.iter().find(|l| l.level == level)
    }

    pub fn cumulative_aggregation_percentage(&self) -> f64 {
        self.levels.iter().map(|l| l.aggregation_percentage).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    NextConsumer { leaf: u32 },
    NextTrace,
    Interest { level: u32, router: u32, object: u32, face: Face, measured: bool },
    Data { level: u32, router: u32, object: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn class(&self) -> u8 {
        match self.kind {
            EventKind::Data { .. } => 0,
            _ => 1,
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so that BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.class().cmp(&self.class()))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Request {
    issued: f64,
    object: u32,
    measured: bool,
}

struct Engine<'a> {
    config: &'a SimConfig,
    arity: u32,
    levels: u32,
    half_rtt: f64,
    routers: Vec<Vec<RouterState>>,
    queue: BinaryHeap<Event>,
    seq: u64,
    requests: HashMap<u64, Request>,
    generated: u64,
    warmup: u64,
    delivered: u64,
    response_sum: Vec<f64>,
    response_count: Vec<u64>,
    events: u64,
    now: f64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig) -> Self {
        let sc = &config.scenario;
        let n = sc.n_objects();
        let routers = (1..=sc.levels)
            .map(|l| {
                let cap = sc.capacities[l as usize - 1] as usize;
                (0..sc.routers_at_level(l)).map(|_| RouterState::new(cap, n)).collect()
            })
            .collect();
        Self {
            config,
            arity: sc.arity,
            levels: sc.levels,
            half_rtt: sc.link_rtt / 2.0,
            routers,
            queue: BinaryHeap::new(),
            seq: 0,
            requests: HashMap::new(),
            generated: 0,
            warmup: (config.warmup_fraction * config.request_count() as f64).floor() as u64,
            delivered: 0,
            response_sum: vec![0.0; n],
            response_count: vec![0; n],
            events: 0,
            now: 0.0,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event { time, seq: self.seq, kind });
    }

    fn consumer_request(&mut self, leaf: u32, object: u32) {
        let id = self.generated;
        self.generated += 1;
        let measured = id >= self.warmup;
        self.requests.insert(id, Request { issued: self.now, object, measured });
        self.interest(1, leaf, object, Face::Consumer(id), measured);
    }

    fn interest(&mut self, level: u32, router: u32, object: u32, face: Face, measured: bool) {
        let now = self.now;
        let state = &mut self.routers[level as usize - 1][router as usize];
        match state.handle_interest(object, face, now, measured) {
            Disposition::Hit => self.deliver(level, router, object, face),
            Disposition::Aggregated => {}
            Disposition::Forwarded => {
                debug_assert!(!state.content_store().contains(object));
                if level < self.levels {
                    let kind = EventKind::Interest {
                        level: level + 1,
                        router: router / self.arity,
                        object,
                        face: Face::Child(router % self.arity),
                        measured,
                    };
                    self.schedule(now + self.half_rtt, kind);
                } else {
                    // The producer answers at once; Data is back after a full round trip.
                    self.schedule(now + 2.0 * self.half_rtt, EventKind::Data { level, router, object });
                }
            }
        }
    }

    fn data(&mut self, level: u32, router: u32, object: u32) -> Result<()> {
        let faces = self.routers[level as usize - 1][router as usize].handle_data(object, self.now)?;
        for face in faces {
            self.deliver(level, router, object, face);
        }
        Ok(())
    }

    fn deliver(&mut self, level: u32, router: u32, object: u32, face: Face) {
        match face {
            Face::Consumer(id) => {
                let req = self.requests.remove(&id).expect("data for unknown consumer request");
                debug_assert_eq!(req.object, object);
                self.delivered += 1;
                if req.measured {
                    self.response_sum[object as usize] += self.now - req.issued;
                    self.response_count[object as usize] += 1;
                }
            }
            Face::Child(slot) => {
                let child = router * self.arity + slot;
                self.schedule(self.now + self.half_rtt, EventKind::Data { level: level - 1, router: child, object });
            }
        }
    }

    fn run(mut self) -> Result<SimStats> {
        let sc = &self.config.scenario;
        let total = self.config.request_count();
        let leaves = sc.routers_at_level(1) as u32;

        let mut sources: Vec<ChaCha8Rng> = Vec::new();
        let mut popularity = None;
        let mut gap = None;
        match &self.config.trace {
            Some(trace) => self.schedule(trace[0].time, EventKind::NextTrace),
            None => {
                popularity = Some(
                    WeightedIndex::new(sc.popularity.probs().iter())
                        .map_err(|e| Error::InvalidConfig(format!("popularity weights: {e}")))?,
                );
                let exp = Exp::new(sc.consumer_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                for leaf in 0..leaves {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                    rng.set_stream(leaf as u64);
                    let first = exp.sample(&mut rng);
                    sources.push(rng);
                    self.schedule(first, EventKind::NextConsumer { leaf });
                }
                gap = Some(exp);
            }
        }
        let mut trace_pos = 0usize;

        while let Some(ev) = self.queue.pop() {
            self.now = ev.time;
            self.events += 1;
            match ev.kind {
                EventKind::NextConsumer { leaf } => {
                    if self.generated >= total {
                        continue;
                    }
                    let rng = &mut sources[leaf as usize];
                    let object = popularity.as_ref().unwrap().sample(rng) as u32;
                    let next = self.now + gap.as_ref().unwrap().sample(rng);
                    self.consumer_request(leaf, object);
                    if self.generated < total {
                        self.schedule(next, EventKind::NextConsumer { leaf });
                    }
                }
                EventKind::NextTrace => {
                    let trace = self.config.trace.as_ref().unwrap();
                    let rec = trace[trace_pos];
                    trace_pos += 1;
                    if let Some(next) = trace.get(trace_pos) {
                        self.schedule(next.time, EventKind::NextTrace);
                    }
                    self.consumer_request(rec.leaf as u32, (rec.object_rank - 1) as u32);
                }
                EventKind::Interest { level, router, object, face, measured } => {
                    self.interest(level, router, object, face, measured);
                }
                EventKind::Data { level, router, object } => self.data(level, router, object)?,
            }
        }
        Ok(self.finish())
    }

    fn finish(self) -> SimStats {
        let measured_requests = self.generated - self.warmup.min(self.generated);
        let mut levels = Vec::new();
        let mut routers = Vec::new();
        for (li, level_routers) in self.routers.into_iter().enumerate() {
            let mut counts = DispositionCounts::default();
            let n_routers = level_routers.len() as u64;
            for (index, r) in level_routers.into_iter().enumerate() {
                let rc = RouterCounts {
                    level: li as u32 + 1,
                    index: index as u64,
                    per_object: r.counts().to_vec(),
                    peak_store_len: r.peak_store_len(),
                };
                counts.add(&rc.total());
                routers.push(rc);
            }
            let arrivals = counts.arrivals();
            let frac = |x: u64, of: u64| if of == 0 { 0.0 } else { x as f64 / of as f64 };
            levels.push(LevelStats {
                level: li as u32 + 1,
                routers: n_routers,
                counts,
                aggregation_probability: frac(counts.aggregated, arrivals),
                hit_probability: frac(counts.hit, arrivals),
                aggregation_percentage: 100.0 * frac(counts.aggregated, measured_requests),
            });
        }
        let response_time: Vec<Option<f64>> = self
            .response_sum
            .iter()
            .zip(&self.response_count)
            .map(|(s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        let answered: u64 = self.response_count.iter().sum();
        let mean_response_time = (answered > 0).then(|| self.response_sum.iter().sum::<f64>() / answered as f64);
        SimStats {
            routers,
            levels,
            issued: self.generated,
            delivered: self.delivered,
            measured_requests,
            response_time,
            mean_response_time,
            end_time: self.now,
            events: self.events,
        }
    }
}

/// Runs one simulation to completion: all generated requests are answered
/// before the statistics are returned.
pub fn run_simulation(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    Engine::new(config).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::zipf_profile;

    fn tree(n: u64, k: u32, levels: u32, lambda: f64, rtt: f64, caps: Vec<u64>) -> TreeScenario {
        TreeScenario {
            arity: k,
            levels,
            consumer_rate: lambda,
            link_rtt: rtt,
            capacities: caps,
            popularity: zipf_profile(n, 1.0).unwrap(),
        }
    }

    #[test]
    fn three_event_script() {
        let d = 0.2;
        let trace = vec![
            TraceRecord { time: 0.0, object_rank: 1, leaf: 0 },
            TraceRecord { time: d / 2.0, object_rank: 1, leaf: 0 },
            TraceRecord { time: 2.0 * d, object_rank: 1, leaf: 0 },
        ];
        let mut cfg = SimConfig::new(tree(1, 2, 1, 1.0, d, vec![1]), 3, 0.0, 0);
        cfg.trace = Some(trace);
        let stats = run_simulation(&cfg).unwrap();
        let c = stats.routers[0].per_object[0];
        assert_eq!(c, DispositionCounts { hit: 1, aggregated: 1, forwarded: 1 });
        assert_eq!(stats.levels[0].aggregation_probability, 1.0 / 3.0);
        assert_eq!(stats.delivered, 3);
        // Waits: d, d/2 and 0.
        assert!((stats.mean_response_time.unwrap() - d / 2.0).abs() < 1e-12);
    }

    #[test]
    fn data_wins_ties_with_interests() {
        // An Interest arriving exactly when the Data lands is a hit.
        let trace = vec![
            TraceRecord { time: 0.0, object_rank: 1, leaf: 0 },
            TraceRecord { time: 0.5, object_rank: 1, leaf: 0 },
        ];
        let mut cfg = SimConfig::new(tree(1, 2, 1, 1.0, 0.5, vec![1]), 2, 0.0, 0);
        cfg.trace = Some(trace);
        let stats = run_simulation(&cfg).unwrap();
        assert_eq!(stats.routers[0].per_object[0], DispositionCounts { hit: 1, aggregated: 0, forwarded: 1 });
    }

    #[test]
    fn trace_errors() {
        let mut cfg = SimConfig::new(tree(3, 2, 1, 1.0, 0.1, vec![1]), 2, 0.0, 0);
        cfg.trace = Some(vec![
            TraceRecord { time: 1.0, object_rank: 1, leaf: 0 },
            TraceRecord { time: 0.5, object_rank: 1, leaf: 0 },
        ]);
        assert!(matches!(run_simulation(&cfg), Err(Error::InvalidTrace(_))));
        cfg.trace = Some(vec![TraceRecord { time: 1.0, object_rank: 4, leaf: 0 }]);
        assert!(matches!(run_simulation(&cfg), Err(Error::InvalidTrace(_))));
        cfg.trace = Some(vec![TraceRecord { time: 1.0, object_rank: 1, leaf: 2 }]);
        assert!(matches!(run_simulation(&cfg), Err(Error::InvalidTrace(_))));
        assert!(parse_trace("0.0 1\n").is_err());
        assert!(parse_trace("x 1 0\n").is_err());
        let parsed = parse_trace("# t obj leaf\n0.5 2 1\n\n0.75 1 0\n").unwrap();
        assert_eq!(parsed, vec![
            TraceRecord { time: 0.5, object_rank: 2, leaf: 1 },
            TraceRecord { time: 0.75, object_rank: 1, leaf: 0 },
        ]);
    }

    #[test]
    fn small_tree_conserves_requests() {
        let cfg = SimConfig::new(tree(20, 3, 2, 50.0, 0.04, vec![3, 3]), 20_000, 0.5, 11);
        let stats = run_simulation(&cfg).unwrap();
        assert_eq!(stats.issued, 20_000);
        assert_eq!(stats.delivered, 20_000);
        assert_eq!(stats.measured_requests, 10_000);
        // Level 1 sees exactly the measured consumer requests.
        assert_eq!(stats.levels[0].counts.arrivals(), 10_000);
        let forwarded_1 = stats.levels[0].counts.forwarded;
        assert_eq!(stats.levels[1].counts.arrivals(), forwarded_1);
        assert!(stats.levels[1].counts.aggregated > 0);
    }
}
