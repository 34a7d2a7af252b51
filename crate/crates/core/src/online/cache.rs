use std::collections::{BTreeSet, VecDeque};

use crate::graph::{EdgeId, NodeId, TrackingGraph};
use crate::solver::{PredecessorMap, ShortestPath};

/// Search results of one processed frame, kept for warm starts.
#[derive(Debug, Clone)]
pub(crate) struct FrameCache {
    pub frame: i64,
    /// Graph stamp when the frame's searches ran.
    pub stamp: u64,
    /// Labels of search `k`, for every `k` the frame ran.
    pub labels: Vec<PredecessorMap>,
    /// Flow-carrying edges that search `k` ran on.
    pub flows: Vec<BTreeSet<EdgeId>>,
    /// Interior nodes of each accepted path.
    pub paths: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub(crate) struct SearchCache {
    entries: VecDeque<FrameCache>,
    capacity: usize,
}

fn restricted<'a>(
    graph: &'a TrackingGraph,
    nodes: impl Iterator<Item = NodeId> + 'a,
    frame: i64,
) -> impl Iterator<Item = NodeId> + 'a {
    nodes.filter(move |n| graph.node(*n).and_then(|n| n.frame).is_some_and(|f| f <= frame))
}

impl SearchCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn push(&mut self, entry: FrameCache) {
        if self.capacity == 0 {
            return;
        }
        while self.entries.len() >= self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn oldest_stamp(&self) -> Option<u64> {
        self.entries.front().map(|e| e.stamp)
    }

    /// Most recent entry whose first `k` accepted paths agree with
    /// `current` on the nodes that entry had seen.
    pub fn lookup(&self, graph: &TrackingGraph, k: usize, current: &[ShortestPath]) -> Option<&FrameCache> {
        self.entries.iter().rev().find(|e| {
            e.labels.len() > k
                && e.paths.len() >= k
                && current.len() >= k
                && (0..k).all(|j| {
                    restricted(graph, e.paths[j].iter().copied(), e.frame)
                        .eq(restricted(graph, current[j].inner_nodes(), e.frame))
                })
        })
    }
}
