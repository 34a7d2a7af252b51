use crate::error::{Error, Result};
use crate::graph::NodeId;

use super::residual::{PredecessorMap, ResidualGraph, ShortestPath};
use super::SolverStats;

/// Shortest source-sink path by one topological sweep of the layered DAG.
///
/// Frames before `from_frame` keep the labels of `seed`; the sweep only
/// recomputes frames `from_frame..=t_max` and the sink. Without a seed the
/// sweep starts at the first frame. Callers must only pass a seed whose
/// labels for the earlier frames are still exact.
///
/// The residual graph must not carry flow inside the swept region; a
/// backward arc there is reported as an invariant breach.
pub fn dag_shortest_path(
    res: &ResidualGraph<'_>,
    from_frame: Option<i64>,
    seed: Option<&PredecessorMap>,
    stats: &mut SolverStats,
) -> Result<(Option<ShortestPath>, PredecessorMap)> {
    dag_pass(res, from_frame, seed, None, stats)
}

pub(crate) fn dag_pass(
    res: &ResidualGraph<'_>,
    from_frame: Option<i64>,
    seed: Option<&PredecessorMap>,
    blocked: Option<&[bool]>,
    stats: &mut SolverStats,
) -> Result<(Option<ShortestPath>, PredecessorMap)> {
    let graph = res.graph();
    let mut labels = PredecessorMap::unreached(graph);
    let (Some(t_min), Some(t_max)) = (graph.t_min(), graph.t_max()) else {
        return Ok((None, labels));
    };
    let is_blocked = |n: NodeId| blocked.is_some_and(|b| b[n.index()]);

    let mut from = match seed {
        Some(_) => from_frame.unwrap_or(t_min).clamp(t_min, t_max + 1),
        None => t_min,
    };
    if let Some(seed) = seed.filter(|_| from > t_min) {
        let nodes: Vec<_> = (t_min..from)
            .flat_map(|t| graph.frame(t).iter())
            .flat_map(|id| {
                let d = graph.detection(*id).expect("frame detection");
                [d.u, d.v]
            })
            .collect();
        if nodes.iter().all(|n| seed.get(*n).is_some()) {
            for n in nodes {
                let l = seed.get(n).expect("checked above");
                labels.set(n, l.dist, l.pred);
            }
        } else {
            from = t_min;
        }
    }

    for t in from..=t_max {
        for id in graph.frame(t) {
            let d = graph.detection(*id).expect("frame detection");
            for n in [d.u, d.v] {
                if is_blocked(n) {
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut pred = None;
                for arc in res.in_arcs(n) {
                    stats.relaxations += 1;
                    if arc.reversed {
                        return Err(Error::invariant(format!(
                            "backward arc into frame {t} during the layered sweep"
                        )));
                    }
                    if is_blocked(arc.from) {
                        continue;
                    }
                    let cand = labels.dist(arc.from) + arc.cost;
                    if cand < best {
                        best = cand;
                        pred = Some(super::Pred {
                            node: arc.from,
                            edge: arc.edge,
                            reversed: false,
                        });
                    }
                }
                labels.set(n, best, pred);
            }
        }
    }

    let sink = graph.sink();
    let mut best = f64::INFINITY;
    let mut pred = None;
    let mut scan_from = t_min;
    if let Some(l) = seed.filter(|_| from > t_min).and_then(|s| s.get(sink)) {
        let seeded = match l.pred {
            Some(p) => graph
                .node(p.node)
                .and_then(|n| n.frame)
                .filter(|f| *f < from && graph.edge(p.edge).is_some())
                .map(|_| p),
            None => None,
        };
        if let Some(p) = seeded {
            best = l.dist;
            pred = Some(p);
            scan_from = from;
        } else if l.pred.is_none() && !l.dist.is_finite() {
            scan_from = from;
        }
    }
    for t in scan_from..=t_max {
        for id in graph.frame(t) {
            let d = graph.detection(*id).expect("frame detection");
            if is_blocked(d.v) {
                continue;
            }
            stats.relaxations += 1;
            let exit = graph.edge_ref(d.exit);
            if res.has_flow(d.exit) {
                return Err(Error::invariant("backward exit arc during the layered sweep"));
            }
            let cand = labels.dist(d.v) + exit.cost;
            if cand < best {
                best = cand;
                pred = Some(super::Pred {
                    node: d.v,
                    edge: d.exit,
                    reversed: false,
                });
            }
        }
    }
    labels.set(sink, best, pred);
    let path = labels.path_to(res, sink)?;
    Ok((path, labels))
}
