//! Analytical model and event-driven simulator for Interest aggregation in
//! hierarchical content-centric networks.
//!
//! * [`catalog`]: Zipf popularity profiles and per-object demand.
//! * [`router`]: hit, aggregation and response time of one LRU router with
//!   non-zero download delays.
//! * [`tree`]: fixed-point analysis of a complete k-ary router hierarchy.
//! * [`sim`]: discrete-event simulator of the same hierarchy, used to
//!   validate the model.

pub mod catalog;
pub mod error;
pub mod numeric;
pub mod router;
pub mod sim;
pub mod solver;
pub mod tree;

pub use catalog::{demand_vector, zipf_profile, PerObjectRates, PopularityProfile};
pub use error::{Error, Result};
pub use router::{
    aggregation_probability, analyze_router, hit_probability, response_time, solve_characteristic_time,
    DelayMoments, RouterSolution,
};
pub use tree::{
    aggregation_percentage, analyze_tree, level_aggregation_probability, next_level_demand, system_load,
    AnalysisOptions, LevelSolution, TreeScenario, TreeSolution,
};
