//! Multi-object tracking as min-cost flow over a layered detection graph.
//!
//! The batch solvers compute the globally optimal set of trajectories for
//! a whole sequence. The online tracker maintains the same optimum frame
//! by frame, optionally within a bounded window of recent frames.

pub mod bench;
pub mod config;
pub mod cost;
pub mod detection;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod online;
pub mod oracle;
pub mod run;
pub mod solution;
pub mod solver;
pub mod synth;

pub use cost::{CostModel, EdgeCosts};
pub use detection::{BBox, DetId, Detection};
pub use error::{Error, Result};
pub use graph::TrackingGraph;
pub use solution::{FlowSolution, Trajectory};
