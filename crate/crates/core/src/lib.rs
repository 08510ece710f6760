//! Plan realization for mobile manipulation: a PDDL-subset task planner, a
//! deterministic 2.5D simulator with per-action controllers, and a
//! cross-entropy search over the continuous parameters of a symbolic plan.
//!
//! The usual flow is
//!
//! 1. [`world::load_scenario`] and [`symbolic::parse_domain`] /
//!    [`symbolic::parse_problem`] to read inputs,
//! 2. [`symbolic::plan`] for the action sequence,
//! 3. [`sim::Realization::new`] to bind plan parameters to scenario regions,
//! 4. [`ce::optimize`] to search for a goal-feasible low-cost realization.

pub mod ce;
pub mod controllers;
pub mod geometry;
pub mod params;
pub mod sim;
pub mod symbolic;
pub mod world;

pub use ce::{optimize, CeConfig, CeReport, IterationRecord};
pub use geometry::{Rect, Vec2, Vec3};
pub use params::{DistributionState, ParamKind, ParamSpace, ParamSpec, ParamVector};
pub use sim::{Realization, RolloutResult, WorldState};
pub use symbolic::{GroundAction, SymbolicPlan};
pub use world::{load_scenario, Scenario};
