use std::time::Instant;

use crate::error::Result;
use crate::graph::{NodeKind, TrackingGraph};
use crate::solution::FlowSolution;

use super::dag::dag_pass;
use super::residual::ResidualGraph;
use super::{SolverStats, EPS};

/// Greedy baseline: repeatedly takes the cheapest source-sink path over
/// unused detections and never revisits an accepted path.
pub fn solve_dp_greedy(graph: &TrackingGraph) -> Result<(FlowSolution, SolverStats)> {
    let start = Instant::now();
    let mut stats = SolverStats::default();
    let res = ResidualGraph::new(graph);
    let mut blocked = vec![false; graph.node_slots()];
    let mut chains = Vec::new();
    loop {
        let (path, _) = dag_pass(&res, None, None, Some(&blocked), &mut stats)?;
        let Some(path) = path.filter(|p| p.cost < -EPS) else { break };
        let mut chain = Vec::new();
        for n in path.inner_nodes() {
            if let NodeKind::In(d) = graph.node_ref(n).kind {
                chain.push(d);
                let e = graph.detection(d).expect("live detection");
                blocked[e.u.index()] = true;
                blocked[e.v.index()] = true;
            }
        }
        stats.iterations += 1;
        chains.push(chain);
    }
    let solution = FlowSolution::from_chains(graph, chains)?;
    stats.elapsed = start.elapsed();
    Ok((solution, stats))
}
