//! Successive shortest path solvers over a [`TrackingGraph`](crate::graph::TrackingGraph).

mod dag;
mod dijkstra;
mod greedy;
mod residual;
mod ssp;

use std::cmp::Ordering;
use std::time::Duration;

use crate::graph::NodeId;

pub use dag::dag_shortest_path;
pub use dijkstra::{dijkstra_full, dynamic_broadcast, WarmStart};
pub use greedy::solve_dp_greedy;
pub use residual::{Arc, Label, Pred, PredecessorMap, ResidualGraph, ShortestPath};
pub use ssp::{decode_trajectories, solve_dssp, solve_ssp, ssp_loop, Inner, SspRecord};

/// Tolerance for cost comparisons. A path is only worth augmenting when its
/// cost is below `-EPS`, and reduced costs above `-EPS` count as non-negative.
pub const EPS: f64 = 1e-9;

/// Work counters gathered by the solvers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    /// Arcs examined while labelling.
    pub relaxations: u64,
    pub queue_pushes: u64,
    /// Augmenting paths accepted.
    pub iterations: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub elapsed: Duration,
    /// Whether the distance-growth stop rule fired on the same iteration
    /// as the non-negative path-cost rule, when both were evaluated.
    pub stop_rule_agrees: Option<bool>,
}

impl SolverStats {
    pub fn absorb(&mut self, other: &SolverStats) {
        self.relaxations += other.relaxations;
        self.queue_pushes += other.queue_pushes;
        self.iterations += other.iterations;
        self.cache_hits += other.cache_hits;
        self.cache_misses += other.cache_misses;
        self.elapsed += other.elapsed;
        if other.stop_rule_agrees.is_some() {
            self.stop_rule_agrees = match (self.stop_rule_agrees, other.stop_rule_agrees) {
                (Some(a), Some(b)) => Some(a && b),
                (_, b) => b,
            };
        }
    }
}

/// Min-heap entry ordered by key, ties broken by node slot.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QueueItem {
    pub key: f64,
    pub node: NodeId,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueItem {}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.node.index().cmp(&self.node.index()))
    }
}
