//! Explicable planning: a robot model, a human mental model of it, plan
//! distances between the two, a learned explicability score, and a search
//! for robot plans the human would find explicable.

pub mod dataset;
pub mod distances;
pub mod epp;
pub mod expected;
pub mod ground;
pub mod mapping;
pub mod pddl;
pub mod planner;
pub mod regression;
pub mod scoring;
pub mod search;
pub mod planfile;
pub mod task;

pub use distances::{CompositeKind, DistanceVector, LinkMode};
pub use epp::ExplicablePlanningProblem;
pub use mapping::{ActionMapping, Direction};
pub use task::{ActionId, FluentId, GroundTask, Plan, State};
