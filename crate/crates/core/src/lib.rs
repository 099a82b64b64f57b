//! Strategy-augmented planning for a small MicroRTS-style game.
//!
//! Modules, bottom up:
//! - [`engine`]: deterministic tick-based two-player simulator.
//! - [`actions`]: abstract actions, plans, pathfinding and the plan executor.
//! - [`strategy`]: the explicit strategy space, its numeric encoding and libraries.
//! - [`planner`]: strategy + expert tips → plan, with a rule planner and a text-model port.
//! - [`sen`]: the strategy evaluation network (pairwise win probability) and best-response search.
//! - [`recognition`]: trajectories, heuristic summaries and opponent-strategy recognition.
//! - [`harness`]: agents, matches, tournaments, experiments and reports.

pub mod actions;
pub mod engine;
pub mod harness;
pub mod planner;
pub mod recognition;
pub mod remote;
pub mod sen;
pub mod strategy;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
