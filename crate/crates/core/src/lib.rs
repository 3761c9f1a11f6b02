//! Counterfactual explanations for rule-based smart environments.
//!
//! Load a [`Scenario`], build a [`World`] from its recorded history and ask
//! why a device is not in some other state:
//!
//! ```
//! use cfexplain::{explain, parse_scenario, ExplanationKind, ExplanationRequest, Settings, World};
//!
//! let scenario = parse_scenario(include_str!("../scenarios/lamp.json")).unwrap();
//! let world = World::from_scenario(&scenario, Default::default()).unwrap();
//! let req = ExplanationRequest::new("lamp", "off", ExplanationKind::Counterfactual);
//! let report = explain(&world, &req, &Settings::default()).unwrap();
//! assert_eq!(
//!     report.counterfactual().unwrap().text,
//!     "The lamp would have been off if the room had been empty."
//! );
//! ```

pub mod candidates;
pub mod case;
pub mod change;
pub mod config;
pub mod engine;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod render;
pub mod scoring;
pub mod stats;
pub mod world;

pub use candidates::{enumerate_candidates, Candidate, Derivation, Generation, Strategy};
pub use case::{classify, ConfusionContext, ExplanationCase};
pub use change::{Change, ChangeKind, ChangeSet, Timing};
pub use config::{ConfigLayer, RankingConfig, Settings, Weights, MAX_SPARSITY};
pub use engine::{Engine, EngineConfig, EngineError, Event, FiringRecord, SystemState, TimedEvent, Trajectory};
pub use error::ExplainError;
pub use model::{
    parse_scenario, validate_scenario, Assignment, Cause, Condition, Controllability, Entity, HistoryEntry, Rule,
    Scenario, ScenarioError, Violation,
};
pub use pipeline::{explain, rank_candidates, ExplanationKind, ExplanationReport, ExplanationRequest, RankedCandidate};
pub use render::{render_causal, render_counterfactual, Explanation, ExplanationStyle};
pub use scoring::{filter_candidates, score, CriterionVector};
pub use world::{Outcome, World};
