//! Frame-by-frame tracking engines.
//!
//! [`TrackerMode::Optimal`] keeps every frame and re-optimizes the whole
//! history on each new frame, reusing cached shortest-path labels from
//! earlier frames. [`TrackerMode::Bounded`] keeps only the last `window`
//! frames; trajectories leaving the window are frozen and their prefix
//! cost is folded into the entry edge of their continuation.

mod cache;
mod ids;

use std::collections::BTreeSet;
use std::time::Instant;

use crate::cost::EdgeCosts;
use crate::detection::{BBox, Detection};
use crate::error::{Error, Result};
use crate::graph::{ClipReport, EdgeId, TrackingGraph};
use crate::solution::FlowSolution;
use crate::solver::{
    dag_shortest_path, decode_trajectories, dijkstra_full, dynamic_broadcast, ssp_loop, PredecessorMap,
    ResidualGraph, SolverStats, WarmStart,
};

use cache::{FrameCache, SearchCache};
pub use ids::{assign_track_ids, IdRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    Optimal,
    Bounded { window: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub mode: TrackerMode,
    /// Frames of search labels kept for warm starts. Defaults to the window
    /// length in bounded mode and to 8 otherwise.
    pub cache_size: Option<usize>,
    /// Disable to recompute every search from scratch.
    pub cache_reuse: bool,
    /// Audit reduced costs after every potential update.
    pub strict_checks: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            mode: TrackerMode::Optimal,
            cache_size: None,
            cache_reuse: true,
            strict_checks: false,
        }
    }
}

impl TrackerConfig {
    pub fn optimal() -> Self {
        Self::default()
    }

    pub fn bounded(window: usize) -> Self {
        Self {
            mode: TrackerMode::Bounded { window },
            ..Self::default()
        }
    }

    fn effective_cache_size(&self) -> usize {
        match (self.cache_size, self.mode) {
            (Some(c), _) => c,
            (None, TrackerMode::Bounded { window }) => window,
            (None, TrackerMode::Optimal) => 8,
        }
    }
}

/// One emitted box of a track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: i64,
    pub track_id: u64,
    pub local_index: usize,
    pub bbox: BBox,
}

/// Instrumentation for one processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: i64,
    pub stats: SolverStats,
    pub live_nodes: usize,
    pub live_edges: usize,
    pub cache_entries: usize,
    pub total_cost: f64,
    pub clipped: Option<ClipReport>,
}

pub struct OnlineTracker<C: EdgeCosts> {
    costs: C,
    config: TrackerConfig,
    graph: TrackingGraph,
    cache: SearchCache,
    last_dag: Option<(u64, PredecessorMap)>,
    solution: FlowSolution,
    frozen: Vec<TrackPoint>,
    frozen_cost: f64,
    registry: IdRegistry,
    totals: SolverStats,
}

impl<C: EdgeCosts> OnlineTracker<C> {
    pub fn new(costs: C, config: TrackerConfig) -> Result<Self> {
        if matches!(config.mode, TrackerMode::Bounded { window: 0 }) {
            return Err(Error::Config("window must be at least one frame".into()));
        }
        let cache = SearchCache::new(config.effective_cache_size());
        Ok(Self {
            costs,
            config,
            graph: TrackingGraph::new(),
            cache,
            last_dag: None,
            solution: FlowSolution::empty(),
            frozen: Vec::new(),
            frozen_cost: 0.0,
            registry: IdRegistry::default(),
            totals: SolverStats::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn graph(&self) -> &TrackingGraph {
        &self.graph
    }

    /// Current solution over the frames still in the graph.
    pub fn solution(&self) -> &FlowSolution {
        &self.solution
    }

    /// Points of frames that have left the window.
    pub fn frozen(&self) -> &[TrackPoint] {
        &self.frozen
    }

    /// Summed work over all processed frames.
    pub fn totals(&self) -> &SolverStats {
        &self.totals
    }

    pub fn next_frame(&self) -> Option<i64> {
        self.graph.t_max().map(|t| t + 1)
    }

    /// Processes the detections of the next frame.
    pub fn process_frame(&mut self, frame: i64, detections: Vec<Detection>) -> Result<FrameReport> {
        let start = Instant::now();
        self.graph.append_frame(frame, detections, &self.costs)?;
        let mut clipped = None;
        if let TrackerMode::Bounded { window } = self.config.mode {
            while self.graph.frame_count() > window {
                clipped = Some(self.clip()?);
            }
        }
        let mut stats = self.solve(frame, clipped.is_some())?;
        stats.elapsed = start.elapsed();
        self.totals.absorb(&stats);
        Ok(FrameReport {
            frame,
            stats,
            live_nodes: self.graph.node_count(),
            live_edges: self.graph.edge_count(),
            cache_entries: self.cache.len(),
            total_cost: self.solution.total_cost,
            clipped,
        })
    }

    fn clip(&mut self) -> Result<ClipReport> {
        let t = self.graph.t_min().expect("non-empty graph");
        for traj in &self.solution.trajectories {
            let Some(&first) = traj.detections.first() else { continue };
            let Some(e) = self.graph.detection(first) else { continue };
            if e.det.frame == t {
                self.frozen.push(TrackPoint {
                    frame: t,
                    track_id: traj.track_id,
                    local_index: e.det.local_index,
                    bbox: e.det.bbox,
                });
                if traj.detections.len() == 1 {
                    self.frozen_cost += traj.cost;
                }
            }
        }
        self.graph.clip_oldest_frame(&self.solution, &self.costs)
    }

    fn solve(&mut self, frame: i64, clipped: bool) -> Result<SolverStats> {
        let graph = &self.graph;
        let reuse = self.config.cache_reuse;
        let mut stats = SolverStats::default();
        let mut res = ResidualGraph::new(graph).with_strict_checks(self.config.strict_checks);

        let (seed, from) = match (&self.last_dag, reuse) {
            (Some((stamp, labels)), true) => {
                let from = if clipped {
                    graph.t_min()
                } else {
                    graph
                        .changed_since(*stamp)
                        .iter()
                        .filter_map(|e| {
                            let e = graph.edge_ref(*e);
                            let a = graph.node_ref(e.from).frame;
                            let b = graph.node_ref(e.to).frame;
                            a.into_iter().chain(b).min()
                        })
                        .min()
                        .or(graph.t_max().map(|t| t + 1))
                };
                (Some(labels), from)
            }
            _ => (None, None),
        };
        let first = dag_shortest_path(&res, from, seed, &mut stats)?;
        let dag_labels = first.1.clone();

        let cache = &self.cache;
        let mut flows_log: Vec<BTreeSet<EdgeId>> = vec![BTreeSet::new()];
        let record = ssp_loop(&mut res, first, reuse, &mut stats, |k, res, _, _, accepted, st| {
            if reuse {
                flows_log.push(res.flow_edges().clone());
                if let Some(entry) = cache.lookup(graph, k, accepted) {
                    st.cache_hits += 1;
                    let warm = WarmStart {
                        labels: &entry.labels[k],
                        stamp: entry.stamp,
                        flows: &entry.flows[k],
                    };
                    return dynamic_broadcast(res, &warm, st);
                }
                st.cache_misses += 1;
            }
            dijkstra_full(res, st)
        })?;

        let mut solution = decode_trajectories(&res)?;
        assign_track_ids(&mut solution.trajectories, &self.solution.trajectories, &mut self.registry);
        solution.total_cost += self.frozen_cost;
        self.solution = solution;

        let stamp = graph.stamp();
        if reuse {
            self.cache.push(FrameCache {
                frame,
                stamp,
                labels: record.labels,
                flows: flows_log,
                paths: record
                    .paths
                    .iter()
                    .map(|p| p.inner_nodes().collect())
                    .collect(),
            });
        }
        self.last_dag = Some((stamp, dag_labels));
        let keep = self.cache.oldest_stamp().unwrap_or(stamp).min(stamp);
        self.graph.prune_changes(keep);
        Ok(stats)
    }

    /// All points known so far: frozen ones and the current solution.
    pub fn rows(&self) -> Vec<TrackPoint> {
        let mut rows = self.frozen.clone();
        rows.extend(self.current_rows());
        rows.sort_by_key(|r| (r.frame, r.track_id));
        rows
    }

    fn current_rows(&self) -> impl Iterator<Item = TrackPoint> + '_ {
        self.solution.trajectories.iter().flat_map(move |t| {
            t.detections.iter().map(move |d| {
                let det = &self.graph.detection(*d).expect("live detection").det;
                TrackPoint {
                    frame: det.frame,
                    track_id: t.track_id,
                    local_index: det.local_index,
                    bbox: det.bbox,
                }
            })
        })
    }

    /// Points of a single frame under the current solution.
    pub fn rows_for_frame(&self, frame: i64) -> Vec<TrackPoint> {
        let mut rows: Vec<TrackPoint> = match self.graph.t_min() {
            Some(t) if frame >= t => self.current_rows().filter(|r| r.frame == frame).collect(),
            _ => self.frozen.iter().filter(|r| r.frame == frame).copied().collect(),
        };
        rows.sort_by_key(|r| r.track_id);
        rows
    }
}
