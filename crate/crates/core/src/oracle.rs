//! Exhaustive reference solver for small instances.

use crate::detection::DetId;
use crate::error::{Error, Result};
use crate::graph::TrackingGraph;
use crate::solution::FlowSolution;

/// Largest instance [`solve_brute_force`] accepts by default.
pub const DEFAULT_LIMIT: usize = 12;

/// Minimum-cost set of disjoint trajectories by enumerating all of them.
pub fn solve_brute_force(graph: &TrackingGraph) -> Result<FlowSolution> {
    solve_brute_force_with_limit(graph, DEFAULT_LIMIT)
}

pub fn solve_brute_force_with_limit(graph: &TrackingGraph, limit: usize) -> Result<FlowSolution> {
    let n = graph.detection_count();
    if n > limit {
        return Err(Error::TooLarge {
            detections: n,
            limit,
        });
    }
    let order: Vec<DetId> = match (graph.t_min(), graph.t_max()) {
        (Some(a), Some(b)) => (a..=b).flat_map(|t| graph.frame(t).iter().copied()).collect(),
        _ => Vec::new(),
    };
    let mut search = Search {
        graph,
        used: vec![false; order.len()],
        pos: order.iter().enumerate().map(|(i, d)| (*d, i)).collect(),
        order,
        chains: Vec::new(),
        best: (0.0, Vec::new()),
    };
    search.visit(0, 0.0);
    let chains = search.best.1;
    FlowSolution::from_chains(graph, chains)
}

struct Search<'g> {
    graph: &'g TrackingGraph,
    order: Vec<DetId>,
    pos: std::collections::BTreeMap<DetId, usize>,
    used: Vec<bool>,
    chains: Vec<Vec<DetId>>,
    best: (f64, Vec<Vec<DetId>>),
}

impl Search<'_> {
    fn visit(&mut self, i: usize, cost: f64) {
        if i == self.order.len() {
            if cost < self.best.0 {
                self.best = (cost, self.chains.clone());
            }
            return;
        }
        self.visit(i + 1, cost);
        if self.used[i] {
            return;
        }
        let d = self.order[i];
        let e = self.graph.detection(d).expect("live detection");
        let start = self.graph.edge_ref(e.entry).cost + self.graph.edge_ref(e.detection).cost;
        self.used[i] = true;
        self.chains.push(vec![d]);
        self.extend(i, d, cost, start);
        self.chains.pop();
        self.used[i] = false;
    }

    /// Grows the newest chain from its last detection `tail`.
    fn extend(&mut self, i: usize, tail: DetId, base: f64, prefix: f64) {
        let graph = self.graph;
        let e = graph.detection(tail).expect("live detection");
        self.visit(i + 1, base + prefix + graph.edge_ref(e.exit).cost);
        for link in &graph.node_ref(e.v).out_edges {
            let edge = graph.edge_ref(*link);
            let Some(next) = graph.det_of(edge.to) else { continue };
            let j = self.pos[&next];
            if self.used[j] {
                continue;
            }
            let ne = graph.detection(next).expect("live detection");
            let step = edge.cost + graph.edge_ref(ne.detection).cost;
            self.used[j] = true;
            self.chains.last_mut().expect("open chain").push(next);
            self.extend(i, next, base, prefix + step);
            self.chains.last_mut().expect("open chain").pop();
            self.used[j] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn canonical_optimum() {
        let (dets, costs) = fixtures::canonical_2x2();
        let g = TrackingGraph::build_batch(dets, &costs).unwrap();
        let s = solve_brute_force(&g).unwrap();
        assert_eq!(s.total_cost, -12.0);
        assert_eq!(s.trajectories.len(), 2);
    }

    #[test]
    fn interchange_optimum() {
        let (dets, costs) = fixtures::interchange();
        let g = TrackingGraph::build_batch(dets, &costs).unwrap();
        assert_eq!(solve_brute_force(&g).unwrap().total_cost, -12.0);
    }

    #[test]
    fn empty_and_positive() {
        let g = TrackingGraph::build_batch(vec![], &fixtures::TableCosts::uniform(0.0, 0.0, 0.0)).unwrap();
        assert!(solve_brute_force(&g).unwrap().trajectories.is_empty());
        let (dets, costs) = fixtures::single(1.0, 1.0, 1.0);
        let g = TrackingGraph::build_batch(dets, &costs).unwrap();
        assert!(solve_brute_force(&g).unwrap().trajectories.is_empty());
    }

    #[test]
    fn refuses_large_instances() {
        let dets = fixtures::grid_detections(&[5, 5, 5]);
        let g = TrackingGraph::build_batch(dets, &fixtures::TableCosts::uniform(0.0, -1.0, 0.0)).unwrap();
        assert!(matches!(solve_brute_force(&g), Err(Error::TooLarge { detections: 15, .. })));
    }

    /// Independent enumeration: every detection picks "unused", or "used"
    /// together with a distinct predecessor in the previous frame or none.
    fn by_predecessor(graph: &TrackingGraph) -> f64 {
        let order: Vec<DetId> = (graph.t_min().unwrap()..=graph.t_max().unwrap())
            .flat_map(|t| graph.frame(t).to_vec())
            .collect();
        fn rec(g: &TrackingGraph, order: &[DetId], i: usize, state: &mut Vec<Option<Option<DetId>>>) -> f64 {
            if i == order.len() {
                let mut cost = 0.0;
                for (k, s) in state.iter().enumerate() {
                    let Some(pred) = s else { continue };
                    let e = g.detection(order[k]).unwrap();
                    cost += g.edge_ref(e.detection).cost;
                    cost += match pred {
                        None => g.edge_ref(e.entry).cost,
                        Some(p) => g.edge_ref(g.link_between(*p, order[k]).unwrap()).cost,
                    };
                    let has_succ = state
                        .iter()
                        .any(|o| matches!(o, Some(Some(p)) if *p == order[k]));
                    if !has_succ {
                        cost += g.edge_ref(e.exit).cost;
                    }
                }
                return cost;
            }
            let mut best = f64::INFINITY;
            state.push(None);
            best = best.min(rec(g, order, i + 1, state));
            state.pop();
            state.push(Some(None));
            best = best.min(rec(g, order, i + 1, state));
            state.pop();
            let e = g.detection(order[i]).unwrap();
            for link in &g.node_ref(e.u).in_edges {
                let Some(p) = g.det_of(g.edge_ref(*link).from) else { continue };
                let k = order.iter().position(|d| *d == p).unwrap();
                let taken = state.iter().any(|o| matches!(o, Some(Some(q)) if *q == p));
                if state[k].is_none() || taken {
                    continue;
                }
                state.push(Some(Some(p)));
                best = best.min(rec(g, order, i + 1, state));
                state.pop();
            }
            best
        }
        rec(graph, &order, 0, &mut Vec::new())
    }

    #[test]
    fn agrees_with_predecessor_enumeration() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let (dets, costs) = fixtures::random_instance(&mut rng, 1..=4, 0..=3, 0.7);
            let g = TrackingGraph::build_batch(dets, &costs).unwrap();
            if g.detection_count() == 0 {
                continue;
            }
            let s = solve_brute_force(&g).unwrap();
            s.check(&g).unwrap();
            let other = by_predecessor(&g);
            assert!((s.total_cost - other).abs() < 1e-9, "{} vs {other}", s.total_cost);
        }
    }
}
