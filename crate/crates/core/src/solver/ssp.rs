use std::collections::BTreeSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeKind, TrackingGraph};
use crate::solution::FlowSolution;

use super::dag::dag_shortest_path;
use super::dijkstra::{dijkstra_full, dynamic_broadcast, WarmStart};
use super::residual::{PredecessorMap, ResidualGraph, ShortestPath};
use super::{SolverStats, EPS};

/// Shortest-path result of one SSP iteration.
pub type Inner = (Option<ShortestPath>, PredecessorMap);

/// What happened during one run of [`ssp_loop`].
#[derive(Debug, Clone, Default)]
pub struct SspRecord {
    /// Labels of every search, iteration 0 first. Empty unless kept.
    pub labels: Vec<PredecessorMap>,
    /// Accepted augmenting paths in order.
    pub paths: Vec<ShortestPath>,
    /// Sink distance of the first search.
    pub first_sink_dist: f64,
}

/// Runs successive shortest paths starting from an iteration-0 result.
///
/// `next` produces the search result of iteration `k >= 1` given the
/// residual graph after augmentation, the labels of iteration `k - 1`,
/// the flow set those labels were computed on, and the paths accepted so
/// far. The loop stops at the
/// first path whose original cost is not below `-EPS`.
pub fn ssp_loop<F>(
    res: &mut ResidualGraph<'_>,
    first: Inner,
    keep_labels: bool,
    stats: &mut SolverStats,
    mut next: F,
) -> Result<SspRecord>
where
    F: FnMut(
        usize,
        &ResidualGraph<'_>,
        &PredecessorMap,
        &BTreeSet<EdgeId>,
        &[ShortestPath],
        &mut SolverStats,
    ) -> Result<Inner>,
{
    let graph = res.graph();
    let sink = graph.sink();
    let (mut path, mut labels) = first;
    let d0 = labels.dist(sink);
    let mut record = SspRecord {
        first_sink_dist: d0,
        ..Default::default()
    };
    let mut growth_stop: Option<usize> = None;
    let mut k = 0usize;
    let stop_at = loop {
        let dk = labels.dist(sink);
        if growth_stop.is_none() && (!dk.is_finite() || (dk - d0) > d0.abs() + EPS) {
            growth_stop = Some(k);
        }
        if keep_labels {
            record.labels.push(labels.clone());
        }
        let Some(p) = path.take().filter(|p| p.cost < -EPS) else {
            break k;
        };
        if k > graph.detection_count() {
            return Err(Error::invariant("more augmenting paths than detections"));
        }
        res.convert_edge_costs(&labels)?;
        let prev_flows = res.flow_edges().clone();
        res.build_residual(&p)?;
        record.paths.push(p);
        stats.iterations += 1;
        k += 1;
        (path, labels) = next(k, res, &labels, &prev_flows, &record.paths, stats)?;
    };
    if d0.is_finite() && d0 < -EPS {
        stats.stop_rule_agrees = Some(growth_stop == Some(stop_at));
    }
    Ok(record)
}

fn run_batch(graph: &TrackingGraph, dynamic: bool) -> Result<(FlowSolution, SolverStats)> {
    let start = Instant::now();
    let mut stats = SolverStats::default();
    let mut res = ResidualGraph::new(graph);
    let first = dag_shortest_path(&res, None, None, &mut stats)?;
    ssp_loop(&mut res, first, false, &mut stats, |_, res, prev, flows, _, stats| {
        if dynamic {
            let warm = WarmStart {
                labels: prev,
                stamp: res.graph().stamp(),
                flows,
            };
            dynamic_broadcast(res, &warm, stats)
        } else {
            dijkstra_full(res, stats)
        }
    })?;
    let solution = decode_trajectories(&res)?;
    stats.elapsed = start.elapsed();
    Ok((solution, stats))
}

/// Batch successive shortest paths with a full Dijkstra per iteration.
pub fn solve_ssp(graph: &TrackingGraph) -> Result<(FlowSolution, SolverStats)> {
    run_batch(graph, false)
}

/// Batch successive shortest paths where each iteration repairs the
/// previous shortest-path tree instead of searching from scratch.
pub fn solve_dssp(graph: &TrackingGraph) -> Result<(FlowSolution, SolverStats)> {
    run_batch(graph, true)
}

/// Reads trajectories off the flow-carrying edges.
pub fn decode_trajectories(res: &ResidualGraph<'_>) -> Result<FlowSolution> {
    let graph = res.graph();
    let mut chains = Vec::new();
    for (_, d) in graph.detections() {
        if !res.has_flow(d.exit) {
            continue;
        }
        let mut chain = Vec::new();
        let mut v = d.v;
        loop {
            let det = graph
                .det_of(v)
                .ok_or_else(|| Error::invariant("flow reaches a non-detection node"))?;
            let entry = graph.detection(det).expect("live detection");
            if !res.has_flow(entry.detection) {
                return Err(Error::invariant(format!("flow skips detection edge of {det}")));
            }
            chain.push(det);
            if chain.len() > graph.frame_count() {
                return Err(Error::invariant("flow path longer than the frame count"));
            }
            let mut incoming = graph
                .node_ref(entry.u)
                .in_edges
                .iter()
                .filter(|e| res.has_flow(**e));
            let e = incoming
                .next()
                .ok_or_else(|| Error::invariant(format!("dangling flow into {det}")))?;
            if incoming.next().is_some() {
                return Err(Error::invariant(format!("two flow units enter {det}")));
            }
            let edge = graph.edge_ref(*e);
            match edge.kind {
                EdgeKind::Entry => break,
                EdgeKind::Link => v = edge.from,
                _ => return Err(Error::invariant("malformed flow path")),
            }
        }
        chain.reverse();
        chains.push(chain);
    }
    let solution = FlowSolution::from_chains(graph, chains)?;
    let decoded: BTreeSet<EdgeId> = solution.flow_edges.iter().copied().collect();
    if &decoded != res.flow_edges() {
        return Err(Error::invariant("flow edges do not decompose into trajectories"));
    }
    Ok(solution)
}
