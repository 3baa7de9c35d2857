//! Learning in a sequential-buyer recommendation model with a hidden,
//! slowly drifting product quality.
//!
//! The crate solves the social planner's average-reward program over public
//! beliefs, computes the myopic policy strategic buyers follow, builds the
//! report subsidy that aligns the two, and compares all regimes by
//! simulation.

pub mod belief;
pub mod error;
pub mod exec;
pub mod grid;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod sim;
pub mod solver;
pub mod strategic;

pub use belief::Belief;
pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::Grid;
pub use model::{ActionPair, GammaFn, GammaKind, Observation, Params, PublicOutcome, Report, State};
pub use solver::{PolicyTable, Regime, ValueTable};
pub use sim::{Arm, ComparisonReport, DecisionRule, TrajectoryStats};
pub use strategic::{CoincidenceSet, IncentiveScheme, MechanismConfig};
pub use pipeline::{run_pipeline, validate_config, RunConfig, Stage};
