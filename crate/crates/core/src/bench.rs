//! Per-frame instrumentation runs.

use std::io::Write;

use crate::config::{Settings, SolverKind};
use crate::detection::{frame_layers, Detection};
use crate::error::{Error, Result};
use crate::graph::TrackingGraph;
use crate::online::OnlineTracker;
use crate::run::solve_batch;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub solvers: Vec<SolverKind>,
    /// Windows to sweep for the bounded tracker; empty means the configured one.
    pub taus: Vec<usize>,
    /// Batch solvers are rerun on every `stride`-th prefix of the sequence.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub solver: SolverKind,
    pub tau: Option<usize>,
    pub frame: i64,
    pub wall_us: u128,
    pub relaxations: u64,
    pub queue_pushes: u64,
    pub live_nodes: usize,
    pub live_edges: usize,
    pub cache_entries: usize,
}

struct Job {
    solver: SolverKind,
    tau: Option<usize>,
}

pub fn run_bench(detections: &[Detection], settings: &Settings, config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let mut jobs = Vec::new();
    for &solver in &config.solvers {
        match solver {
            SolverKind::Oracle => return Err(Error::Config("the oracle cannot be benchmarked".into())),
            SolverKind::Mbodssp if !config.taus.is_empty() => {
                for &tau in &config.taus {
                    if tau == 0 {
                        return Err(Error::Config("window must be at least 1".into()));
                    }
                    jobs.push(Job { solver, tau: Some(tau) });
                }
            }
            SolverKind::Mbodssp => jobs.push(Job {
                solver,
                tau: Some(settings.window),
            }),
            _ => jobs.push(Job { solver, tau: None }),
        }
    }
    let layers = frame_layers(detections.to_vec());
    let results: Vec<Result<Vec<BenchRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| scope.spawn(|| run_job(job, &layers, settings, config.stride)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::invariant("bench worker panicked"))))
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn run_job(job: &Job, layers: &[(i64, Vec<Detection>)], settings: &Settings, stride: usize) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    if job.solver.is_online() {
        let mut s = settings.clone();
        if let Some(tau) = job.tau {
            s.window = tau;
        }
        let mut tracker = OnlineTracker::new(&s.costs, s.tracker(job.solver))?;
        for (t, layer) in layers {
            let r = tracker.process_frame(*t, layer.clone())?;
            rows.push(BenchRow {
                solver: job.solver,
                tau: job.tau,
                frame: r.frame,
                wall_us: r.stats.elapsed.as_micros(),
                relaxations: r.stats.relaxations,
                queue_pushes: r.stats.queue_pushes,
                live_nodes: r.live_nodes,
                live_edges: r.live_edges,
                cache_entries: r.cache_entries,
            });
        }
        return Ok(rows);
    }
    let mut graph = TrackingGraph::new();
    for (i, (t, layer)) in layers.iter().enumerate() {
        graph.append_frame(*t, layer.clone(), &settings.costs)?;
        if (i + 1) % stride != 0 && i + 1 != layers.len() {
            continue;
        }
        let (_, stats) = solve_batch(job.solver, &graph)?;
        rows.push(BenchRow {
            solver: job.solver,
            tau: None,
            frame: *t,
            wall_us: stats.elapsed.as_micros(),
            relaxations: stats.relaxations,
            queue_pushes: stats.queue_pushes,
            live_nodes: graph.node_count(),
            live_edges: graph.edge_count(),
            cache_entries: 0,
        });
    }
    Ok(rows)
}

pub const BENCH_HEADER: &str =
    "solver,tau,frame,wall_us,relaxations,queue_pushes,live_nodes,live_edges,cache_entries";

pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        let tau = r.tau.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{tau},{},{},{},{},{},{},{}",
            r.solver, r.frame, r.wall_us, r.relaxations, r.queue_pushes, r.live_nodes, r.live_edges, r.cache_entries
        )?;
    }
    w.flush()
}
