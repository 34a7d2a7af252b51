//! Runs any solver over a whole detection sequence.

use std::time::Instant;

use crate::config::{Settings, SolverKind};
use crate::cost::EdgeCosts;
use crate::detection::{frame_layers, Detection};
use crate::error::Result;
use crate::graph::TrackingGraph;
use crate::online::{FrameReport, OnlineTracker, TrackPoint};
use crate::oracle::solve_brute_force;
use crate::solution::FlowSolution;
use crate::solver::{solve_dp_greedy, solve_dssp, solve_ssp, SolverStats};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<TrackPoint>,
    pub total_cost: f64,
    pub stats: SolverStats,
    /// Per-frame reports of online solvers; empty for batch solvers.
    pub frames: Vec<FrameReport>,
}

/// Track points of a batch solution, sorted by frame and id.
pub fn solution_rows(graph: &TrackingGraph, solution: &FlowSolution) -> Vec<TrackPoint> {
    let mut rows: Vec<TrackPoint> = solution
        .trajectories
        .iter()
        .flat_map(|t| {
            t.detections.iter().map(move |d| {
                let det = &graph.detection(*d).expect("live detection").det;
                TrackPoint {
                    frame: det.frame,
                    track_id: t.track_id,
                    local_index: det.local_index,
                    bbox: det.bbox,
                }
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.track_id));
    rows
}

/// Batch solve with one of the offline solvers.
pub fn solve_batch(kind: SolverKind, graph: &TrackingGraph) -> Result<(FlowSolution, SolverStats)> {
    match kind {
        SolverKind::Ssp => solve_ssp(graph),
        SolverKind::Dssp => solve_dssp(graph),
        SolverKind::Dp => solve_dp_greedy(graph),
        SolverKind::Oracle => {
            let start = Instant::now();
            let s = solve_brute_force(graph)?;
            let stats = SolverStats {
                elapsed: start.elapsed(),
                ..SolverStats::default()
            };
            Ok((s, stats))
        }
        SolverKind::Odssp | SolverKind::Mbodssp => unreachable!("online solver passed to solve_batch"),
    }
}

pub fn run_solver(
    kind: SolverKind,
    detections: Vec<Detection>,
    costs: &impl EdgeCosts,
    settings: &Settings,
) -> Result<RunOutput> {
    if kind.is_online() {
        let mut tracker = OnlineTracker::new(costs, settings.tracker(kind))?;
        let mut frames = Vec::new();
        for (t, layer) in frame_layers(detections) {
            frames.push(tracker.process_frame(t, layer)?);
        }
        return Ok(RunOutput {
            rows: tracker.rows(),
            total_cost: tracker.solution().total_cost,
            stats: tracker.totals().clone(),
            frames,
        });
    }
    let graph = TrackingGraph::build_batch(detections, costs)?;
    let (solution, stats) = solve_batch(kind, &graph)?;
    Ok(RunOutput {
        rows: solution_rows(&graph, &solution),
        total_cost: solution.total_cost,
        stats,
        frames: Vec::new(),
    })
}
