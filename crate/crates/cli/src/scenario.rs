//! Scenario files: one TOML document describing a tree, its cache budget,
//! an optional parameter sweep and optional simulation settings. Absent
//! fields take the default large-catalog configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use ccn_agg::sim::{parse_trace, SimConfig};
use ccn_agg::{zipf_profile, TreeScenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CacheAllocation {
    /// Every router gets the same capacity.
    #[default]
    Uniform,
    /// Only level-1 routers cache.
    Edge,
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Link round-trip delay, seconds.
    Delta,
    /// Consumer rate per level-1 router.
    Lambda,
    /// `lambda * delta`; varies the delay at fixed rate.
    Load,
    /// Per-node capacity under the configured allocation.
    Capacity,
    /// Total caching budget.
    Budget,
    /// Zipf exponent.
    Alpha,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Delta => "delta",
            Self::Lambda => "lambda",
            Self::Load => "load",
            Self::Capacity => "capacity",
            Self::Budget => "budget",
            Self::Alpha => "alpha",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub total_requests: u64,
    pub warmup_fraction: f64,
    pub seed: u64,
    pub replications: u32,
    /// Trace file, relative to the scenario file. Replaces Poisson consumers.
    pub trace: Option<PathBuf>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { total_requests: 4_000_000, warmup_fraction: 0.5, seed: 1, replications: 5, trace: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub arity: u32,
    pub levels: u32,
    pub n_objects: u64,
    pub alpha: f64,
    /// Interests per second into each level-1 router.
    pub consumer_rate: f64,
    /// Round-trip delay per link, seconds.
    pub link_rtt: f64,
    pub cache_allocation: CacheAllocation,
    /// Total number of objects cached across all routers.
    pub caching_budget: Option<f64>,
    /// Objects per router; used when no budget is given.
    pub capacity_per_node: u64,
    /// Explicit per-level capacities, overriding budget and allocation.
    pub capacities: Option<Vec<u64>>,
    pub sweep: Option<Sweep>,
    pub sim: Option<SimSection>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            arity: 10,
            levels: 3,
            n_objects: 140_000_000,
            alpha: 0.8,
            consumer_rate: 100_000.0,
            // 15 ms each way.
            link_rtt: 0.030,
            cache_allocation: CacheAllocation::Uniform,
            caching_budget: None,
            capacity_per_node: 100_000,
            capacities: None,
            sweep: None,
            sim: None,
            base_dir: None,
        }
    }
}

/// Per-level capacities derived from a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityPlan {
    pub capacities: Vec<u64>,
    /// Budget objects left over by per-node rounding.
    pub remainder: u64,
}

impl ScenarioFile {
    /// Parses and validates a scenario document.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| CliError::Parse { origin: "scenario".into(), message: e.to_string() })?;
        file.validate()?;
        Ok(file)
    }

    pub fn routers_at_level(&self, level: u32) -> u64 {
        (self.arity as u64).saturating_pow(self.levels - level + 1)
    }

    pub fn total_routers(&self) -> u64 {
        (1..=self.levels).map(|l| self.routers_at_level(l)).fold(0u64, u64::saturating_add)
    }

    /// Resolves capacities: explicit list, then budget, then per-node size.
    pub fn capacity_plan(&self) -> CapacityPlan {
        let levels = self.levels as usize;
        if let Some(c) = &self.capacities {
            return CapacityPlan { capacities: c.clone(), remainder: 0 };
        }
        let budget = match self.caching_budget {
            Some(b) => b.floor() as u64,
            None => match self.cache_allocation {
                CacheAllocation::Uniform => return CapacityPlan { capacities: vec![self.capacity_per_node; levels], remainder: 0 },
                CacheAllocation::Edge => self.capacity_per_node.saturating_mul(self.total_routers()),
            },
        };
        match self.cache_allocation {
            CacheAllocation::Uniform => {
                let nodes = self.total_routers();
                let per = budget / nodes;
                CapacityPlan { capacities: vec![per; levels], remainder: budget - per * nodes }
            }
            CacheAllocation::Edge => {
                let nodes = self.routers_at_level(1);
                let per = budget / nodes;
                let mut capacities = vec![0; levels];
                capacities[0] = per;
                CapacityPlan { capacities, remainder: budget - per * nodes }
            }
        }
    }

    /// Lists every invariant violation at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.arity < 2 {
            problems.push(format!("arity must be >= 2, got {}", self.arity));
        }
        if self.levels < 1 {
            problems.push("levels must be >= 1".to_string());
        }
        if self.n_objects < 1 {
            problems.push("n_objects must be >= 1".to_string());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            problems.push(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.consumer_rate.is_finite() && self.consumer_rate >= 0.0) {
            problems.push(format!("consumer_rate must be finite and >= 0, got {}", self.consumer_rate));
        }
        if !(self.link_rtt.is_finite() && self.link_rtt >= 0.0) {
            problems.push(format!("link_rtt must be finite and >= 0, got {}", self.link_rtt));
        }
        if let Some(b) = self.caching_budget {
            if !(b.is_finite() && b >= 0.0) {
                problems.push(format!("caching_budget must be finite and >= 0, got {b}"));
            }
        }
        if let Some(c) = &self.capacities {
            if c.len() != self.levels as usize {
                problems.push(format!("{} capacities given for {} levels", c.len(), self.levels));
            }
        }
        if problems.is_empty() {
            let plan = self.capacity_plan();
            for (i, &c) in plan.capacities.iter().enumerate() {
                if c >= self.n_objects {
                    problems.push(format!("level {} capacity {c} must be below the catalog size {}", i + 1, self.n_objects));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            for &v in &sweep.values {
                if !(v.is_finite() && v >= 0.0) {
                    problems.push(format!("sweep value {v} for {} must be finite and >= 0", sweep.parameter));
                }
            }
            if sweep.parameter == SweepParameter::Load && !(self.consumer_rate > 0.0) {
                problems.push("a load sweep needs a positive consumer_rate".to_string());
            }
        }
        if let Some(sim) = &self.sim {
            if !(0.0..1.0).contains(&sim.warmup_fraction) {
                problems.push(format!("sim.warmup_fraction must be in [0, 1), got {}", sim.warmup_fraction));
            }
            if sim.replications < 1 {
                problems.push("sim.replications must be >= 1".to_string());
            }
            if sim.total_requests < 1 && sim.trace.is_none() {
                problems.push("sim.total_requests must be >= 1".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }

    /// Copy of this scenario with the sweep parameter set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self, CliError> {
        let mut s = self.clone();
        match parameter {
            SweepParameter::Delta => s.link_rtt = value,
            SweepParameter::Lambda => s.consumer_rate = value,
            SweepParameter::Load => s.link_rtt = value / s.consumer_rate,
            SweepParameter::Capacity => {
                s.capacities = None;
                s.caching_budget = None;
                s.capacity_per_node = value.round() as u64;
            }
            SweepParameter::Budget => {
                s.capacities = None;
                s.caching_budget = Some(value);
            }
            SweepParameter::Alpha => s.alpha = value,
        }
        s.sweep = None;
        s.validate()?;
        Ok(s)
    }

    /// Builds the model input. Large catalogs take a few seconds here
    /// because the Zipf normalizer is summed exactly.
    pub fn tree_scenario(&self) -> Result<TreeScenario, CliError> {
        Ok(TreeScenario {
            arity: self.arity,
            levels: self.levels,
            consumer_rate: self.consumer_rate,
            link_rtt: self.link_rtt,
            capacities: self.capacity_plan().capacities,
            popularity: zipf_profile(self.n_objects, self.alpha)?,
        })
    }

    /// Simulation settings, with defaults when the file has no `[sim]` table.
    pub fn sim_section(&self) -> SimSection {
        self.sim.clone().unwrap_or_default()
    }

    /// Simulation input for one replication.
    pub fn sim_config(&self, tree: TreeScenario, seed: u64) -> Result<SimConfig, CliError> {
        let sim = self.sim_section();
        let mut cfg = SimConfig::new(tree, sim.total_requests, sim.warmup_fraction, seed);
        if let Some(path) = &sim.trace {
            let path = match &self.base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io(format!("reading trace {}: {e}", path.display())))?;
            cfg.trace = Some(parse_trace(&text)?);
        }
        Ok(cfg)
    }
}

/// Reads a scenario file; an empty file yields the defaults.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut file = ScenarioFile::from_toml(&text).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse { origin: path.display().to_string(), message },
        other => other,
    })?;
    file.base_dir = path.parent().map(Path::to_path_buf);
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_configuration() {
        let s = ScenarioFile::from_toml("").unwrap();
        assert_eq!(s, ScenarioFile::default());
        assert_eq!(s.levels + 2, 5);
        assert_eq!(s.capacity_plan().capacities, vec![100_000; 3]);
        assert_eq!(s.link_rtt, 0.03);
    }

    #[test]
    fn edge_budget_goes_to_level_one() {
        let s = ScenarioFile::from_toml("cache_allocation = \"edge\"\ncaching_budget = 1.11e4\nn_objects = 100\n").unwrap();
        assert_eq!(s.capacity_plan(), CapacityPlan { capacities: vec![11, 0, 0], remainder: 100 });
    }

    #[test]
    fn uniform_budget_rounds_down_per_node() {
        let s = ScenarioFile::from_toml("caching_budget = 11105\nn_objects = 100\n").unwrap();
        assert_eq!(s.total_routers(), 1110);
        assert_eq!(s.capacity_plan(), CapacityPlan { capacities: vec![10, 10, 10], remainder: 5 });
    }

    #[test]
    fn edge_without_budget_pools_per_node_capacity() {
        let s = ScenarioFile { cache_allocation: CacheAllocation::Edge, ..Default::default() };
        assert_eq!(s.capacity_plan().capacities, vec![111_000, 0, 0]);
    }

    #[test]
    fn violations_are_listed_together() {
        let err = ScenarioFile::from_toml("consumer_rate = -1.0\nalpha = -0.5\n").unwrap_err();
        match err {
            CliError::Validation(list) => {
                assert_eq!(list.len(), 2, "{list:?}");
                assert!(list[1].contains("consumer_rate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_a_line() {
        let err = ScenarioFile::from_toml("arity = 10\nlevels = \"three\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ScenarioFile::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn sweep_overrides() {
        let s = ScenarioFile::default();
        assert_eq!(s.with_parameter(SweepParameter::Load, 1500.0).unwrap().link_rtt, 0.015);
        let c = s.with_parameter(SweepParameter::Capacity, 1.0).unwrap();
        assert_eq!(c.capacity_plan().capacities, vec![1, 1, 1]);
        assert!(s.with_parameter(SweepParameter::Alpha, -1.0).is_err());
    }

    #[test]
    fn capacity_must_fit_the_catalog() {
        assert!(matches!(
            ScenarioFile::from_toml("n_objects = 10\ncapacity_per_node = 10\n"),
            Err(CliError::Validation(_))
        ));
    }
}
