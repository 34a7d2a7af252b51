//! Acceptance checks. Each test prints one `[PASS]` or `[FAIL]` line.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use flowtrack::config::{RunConfig, SolverKind};
use flowtrack::detection::frame_layers;
use flowtrack::fixtures;
use flowtrack::metrics::{clear_mot, FrameBoxes, MotReport};
use flowtrack::online::{OnlineTracker, TrackPoint, TrackerConfig};
use flowtrack::oracle::solve_brute_force;
use flowtrack::run::run_solver;
use flowtrack::solution::chain_cost;
use flowtrack::solver::{solve_dp_greedy, solve_dssp, solve_ssp};
use flowtrack::synth::{generate_synthetic, SynthConfig};
use flowtrack::{BBox, CostModel, Detection, TrackingGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    // Written past the test harness capture so the line always shows.
    let _ = writeln!(std::io::stderr(), "[{tag}] {id} {detail}");
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - mx) * (y - my)).sum();
    let var: f64 = (0..ys.len()).map(|i| (i as f64 - mx).powi(2)).sum();
    cov / var
}

#[test]
fn c1_oracle_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut ok, total) = (0, 250);
    for _ in 0..total {
        let (dets, costs) = fixtures::random_instance(&mut rng, 2..=4, 1..=3, 0.7);
        let g = TrackingGraph::build_batch(dets, &costs).unwrap();
        let best = solve_brute_force(&g).unwrap().total_cost;
        let a = solve_ssp(&g).unwrap().0.total_cost;
        let b = solve_dssp(&g).unwrap().0.total_cost;
        if (a - best).abs() <= 1e-9 && (b - best).abs() <= 1e-9 {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = ok == total && secs < 10.0;
    report("C1 oracle optimality", pass, &format!("{ok}/{total} instances exact, {secs:.2}s"));
    assert!(pass);
}

#[test]
fn c2_online_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut prefixes, mut worst) = (0, 0.0f64);
    for _ in 0..60 {
        let (dets, costs) = fixtures::random_instance(&mut rng, 10..=30, 0..=5, 0.6);
        let mut tracker = OnlineTracker::new(&costs, TrackerConfig::optimal()).unwrap();
        let mut graph = TrackingGraph::new();
        for (t, layer) in frame_layers(dets) {
            graph.append_frame(t, layer.clone(), &costs).unwrap();
            let online = tracker.process_frame(t, layer).unwrap().total_cost;
            let batch = solve_ssp(&graph).unwrap().0.total_cost;
            worst = worst.max((online - batch).abs());
            prefixes += 1;
        }
    }
    let pass = worst <= 1e-9;
    report(
        "C2 online optimality",
        pass,
        &format!("60 sequences, {prefixes} prefixes, max |delta| {worst:.3e}"),
    );
    assert!(pass);
}

fn trajectories(tracker: &OnlineTracker<&CostModel>) -> Vec<Vec<(i64, usize)>> {
    let g = tracker.graph();
    tracker
        .solution()
        .trajectories
        .iter()
        .map(|t| {
            t.detections
                .iter()
                .map(|d| {
                    let det = &g.detection(*d).unwrap().det;
                    (det.frame, det.local_index)
                })
                .collect()
        })
        .collect()
}

#[test]
fn c3_window_degeneracy() {
    let model = CostModel::default();
    let mut frames_checked = 0;
    let mut pass = true;
    for seed in 0..20 {
        let seq = generate_synthetic(&SynthConfig { frames: 40, ..SynthConfig::default() }, seed).unwrap();
        let layers = frame_layers(seq.detections);
        let mut a = OnlineTracker::new(&model, TrackerConfig::optimal()).unwrap();
        let mut b = OnlineTracker::new(&model, TrackerConfig::bounded(layers.len())).unwrap();
        for (t, layer) in layers {
            let ra = a.process_frame(t, layer.clone()).unwrap();
            let rb = b.process_frame(t, layer).unwrap();
            frames_checked += 1;
            if ra.total_cost != rb.total_cost || trajectories(&a) != trajectories(&b) || a.rows() != b.rows() {
                pass = false;
            }
        }
    }
    report(
        "C3 window degeneracy",
        pass,
        &format!("20 sequences, {frames_checked} frames compared for exact equality"),
    );
    assert!(pass);
}

#[test]
fn c4_memory_bound() {
    let tau = 10;
    let seq = generate_synthetic(&SynthConfig::stationary(500, 8), 4).unwrap();
    let layers = frame_layers(seq.detections);
    let d_max = layers.iter().map(|(_, l)| l.len()).max().unwrap();
    let bound = 2 * tau * d_max + 2;
    let model = CostModel::default();
    let mut tracker = OnlineTracker::new(&model, TrackerConfig::bounded(tau)).unwrap();
    let mut peak = 0;
    let mut steady = std::collections::BTreeSet::new();
    for (t, layer) in layers {
        let r = tracker.process_frame(t, layer).unwrap();
        peak = peak.max(r.live_nodes);
        if t > tau as i64 {
            steady.insert(r.live_nodes);
        }
    }
    let pass = peak <= bound && steady.len() == 1;
    report(
        "C4 memory bound",
        pass,
        &format!("peak {peak} nodes, bound {bound}, distinct steady counts {steady:?}"),
    );
    assert!(pass);
}

#[test]
fn c5_computation_bound() {
    let seq = generate_synthetic(&SynthConfig::stationary(500, 6), 5).unwrap();
    let model = CostModel::default();
    let per_frame = |config: TrackerConfig| -> Vec<f64> {
        let mut tracker = OnlineTracker::new(&model, config).unwrap();
        frame_layers(seq.detections.clone())
            .into_iter()
            .map(|(t, l)| tracker.process_frame(t, l).unwrap().stats.relaxations as f64)
            .collect()
    };
    let bounded = per_frame(TrackerConfig::bounded(10));
    let mean = bounded.iter().sum::<f64>() / bounded.len() as f64;
    let s = slope(&bounded);
    let optimal = per_frame(TrackerConfig::optimal());
    let early: f64 = optimal[50..100].iter().sum();
    let late: f64 = optimal[450..500].iter().sum();
    let opt_slope = slope(&optimal);
    let pass = s.abs() <= 0.01 * mean && late > 2.0 * early && opt_slope > 0.0;
    report(
        "C5 computation bound",
        pass,
        &format!(
            "mbodssp slope {s:.3} relaxations/frame vs mean {mean:.1} ({:.3}%); odssp frames 450-499 do {:.1}x the work of frames 50-99",
            100.0 * s.abs() / mean,
            late / early
        ),
    );
    assert!(pass);
}

#[test]
fn c6_dynamic_efficiency() {
    let model = CostModel::default();
    let (mut ssp, mut dssp) = (0u64, 0u64);
    let (mut t_ssp, mut t_dssp) = (0.0, 0.0);
    for seed in 0..10 {
        let seq = generate_synthetic(&SynthConfig { frames: 120, tracks: 8, ..SynthConfig::default() }, seed).unwrap();
        let g = TrackingGraph::build_batch(seq.detections, &model).unwrap();
        let (a, sa) = solve_ssp(&g).unwrap();
        let (b, sb) = solve_dssp(&g).unwrap();
        assert!((a.total_cost - b.total_cost).abs() < 1e-6);
        ssp += sa.relaxations;
        dssp += sb.relaxations;
        t_ssp += sa.elapsed.as_secs_f64();
        t_dssp += sb.elapsed.as_secs_f64();
    }
    let ratio = dssp as f64 / ssp as f64;
    let pass = ratio <= 0.7;
    report(
        "C6 dynamic efficiency",
        pass,
        &format!(
            "dssp/ssp relaxations {ratio:.3} ({dssp}/{ssp}); wall time ssp {:.1}ms dssp {:.1}ms (informative)",
            t_ssp * 1e3,
            t_dssp * 1e3
        ),
    );
    assert!(pass);
}

/// Cost of a stitched track output on the full batch graph. Rows of one
/// track id that skip a frame are scored as separate trajectories.
fn stitched_cost(graph: &TrackingGraph, rows: &[TrackPoint]) -> f64 {
    let mut by_id: BTreeMap<u64, Vec<&TrackPoint>> = BTreeMap::new();
    for r in rows {
        by_id.entry(r.track_id).or_default().push(r);
    }
    let mut total = 0.0;
    for pts in by_id.values_mut() {
        pts.sort_by_key(|p| p.frame);
        let mut chain = Vec::new();
        let mut last = None;
        for p in pts.iter() {
            if last.is_some_and(|l| p.frame != l + 1) {
                total += chain_cost(graph, &chain).unwrap().0;
                chain.clear();
            }
            chain.push(graph.find_detection(p.frame, p.local_index).unwrap());
            last = Some(p.frame);
        }
        total += chain_cost(graph, &chain).unwrap().0;
    }
    total
}

fn boxes(rows: &[TrackPoint]) -> FrameBoxes {
    flowtrack::io::tracks_to_boxes(rows)
}

#[test]
fn c7_approximation_quality() {
    let settings = RunConfig::default().resolve().unwrap();
    let model = &settings.costs;
    let config = SynthConfig {
        frames: 100,
        tracks: 8,
        width: 500.0,
        height: 250.0,
        ..SynthConfig::default()
    };
    let (mut cost_ok, mut ids_ok, total) = (0, 0, 50);
    let (mut ids_mb, mut ids_dp) = (0, 0);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut best_gap = f64::INFINITY;
    let mut exact_matches = 0;
    for seed in 0..total {
        let seq = generate_synthetic(&config, 1000 + seed).unwrap();
        let graph = TrackingGraph::build_batch(seq.detections.clone(), model).unwrap();
        let optimum = solve_ssp(&graph).unwrap().0.total_cost;
        let mut s = settings.clone();
        s.window = 10;
        let mb = run_solver(SolverKind::Mbodssp, seq.detections.clone(), model, &s).unwrap();
        let gap = (stitched_cost(&graph, &mb.rows) - optimum) / optimum.abs();
        worst_gap = worst_gap.max(gap);
        best_gap = best_gap.min(gap);
        if gap.abs() < 1e-9 {
            exact_matches += 1;
        }
        if gap <= 0.05 {
            cost_ok += 1;
        }
        let (dp_solution, _) = solve_dp_greedy(&graph).unwrap();
        let dp_rows = flowtrack::run::solution_rows(&graph, &dp_solution);
        let m_mb = clear_mot(&seq.ground_truth, &boxes(&mb.rows), 0.5);
        let m_dp = clear_mot(&seq.ground_truth, &boxes(&dp_rows), 0.5);
        ids_mb += m_mb.id_switches;
        ids_dp += m_dp.id_switches;
        if m_mb.id_switches <= m_dp.id_switches {
            ids_ok += 1;
        }
    }
    let pass = best_gap >= -1e-9 && cost_ok * 10 >= total * 9 && ids_ok * 10 >= total * 9;
    report(
        "C7 approximation quality",
        pass,
        &format!(
            "cost within 5%: {cost_ok}/{total} (gap {:.4}%..{:.4}%, {exact_matches} at the optimum); IDS <= DP: {ids_ok}/{total} (total IDS mbodssp {ids_mb}, dp {ids_dp})",
            100.0 * best_gap,
            100.0 * worst_gap
        ),
    );
    assert!(pass);
}

fn frames(rows: &[(i64, u64, f64)]) -> FrameBoxes {
    let mut out = FrameBoxes::new();
    for &(t, id, x) in rows {
        out.entry(t).or_default().push((id, BBox::new(x, 0.0, 10.0, 10.0)));
    }
    out
}

fn exact(r: &MotReport, mota: f64, motp: f64, ids: usize, frag: usize, fp: usize, fn_: usize) -> bool {
    (r.mota - mota).abs() <= 1e-9
        && (r.motp - motp).abs() <= 1e-9
        && r.id_switches == ids
        && r.fragmentations == frag
        && r.false_positives == fp
        && r.misses == fn_
}

#[test]
fn c8_metric_correctness() {
    let mut results = Vec::new();

    let gt = frames(&[(0, 1, 0.0), (0, 2, 50.0), (1, 1, 1.0), (1, 2, 51.0)]);
    results.push(("identical", exact(&clear_mot(&gt, &gt, 0.5), 1.0, 1.0, 0, 0, 0, 0)));

    let gt = frames(&(0..10).map(|t| (t, 7, 0.0)).collect::<Vec<_>>());
    let hyp = frames(&(0..10).map(|t| (t, if t < 5 { 1 } else { 2 }, 0.0)).collect::<Vec<_>>());
    results.push(("one switch", exact(&clear_mot(&gt, &hyp, 0.5), 0.9, 1.0, 1, 0, 0, 0)));

    let r = clear_mot(&gt, &FrameBoxes::new(), 0.5);
    results.push(("no hypotheses", exact(&r, 0.0, 0.0, 0, 0, 0, 10) && r.mostly_lost == 1.0));

    // Miss in frame 2, false alarm in frame 2, shifted box in frame 4:
    // MOTA = 1 - (1 + 1) / 5, MOTP = (1 + 1 + 1 + 8/12) / 4.
    let gt = frames(&(0..5).map(|t| (t, 1, 0.0)).collect::<Vec<_>>());
    let hyp = frames(&[(0, 5, 0.0), (1, 5, 0.0), (2, 9, 300.0), (3, 5, 0.0), (4, 5, 2.0)]);
    let r = clear_mot(&gt, &hyp, 0.5);
    let ok = exact(&r, 0.6, (3.0 + 80.0 / 120.0) / 4.0, 0, 1, 1, 1)
        && r.mostly_tracked == 1.0
        && (r.false_alarm_rate - 0.2).abs() <= 1e-12;
    results.push(("miss, false alarm, fragment", ok));

    // The established match survives a better-overlapping newcomer.
    let gt = frames(&[(0, 1, 0.0), (1, 1, 0.0), (2, 1, 0.0)]);
    let hyp = frames(&[(0, 10, 0.0), (1, 10, 0.0), (1, 11, 1.0), (2, 10, 3.0), (2, 11, 0.0)]);
    let r = clear_mot(&gt, &hyp, 0.5);
    results.push(("persistent match", exact(&r, 1.0 / 3.0, (2.0 + 7.0 / 13.0) / 3.0, 0, 0, 2, 0)));

    let failed: Vec<&str> = results.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let pass = failed.is_empty();
    report(
        "C8 metric correctness",
        pass,
        &format!("{}/{} hand-computed cases exact; failed {failed:?}", results.len() - failed.len(), results.len()),
    );
    assert!(pass);
}

#[test]
fn c9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.csv");
    let bin = env!("CARGO_BIN_EXE_flowtrack");
    let synth = |seed: &str| {
        Command::new(bin)
            .args(["synth", "--seed", seed, "--frames", "80", "--detections"])
            .arg(&det)
            .env_remove("FLOWTRACK_CONFIG")
            .output()
            .unwrap()
    };
    assert!(synth("9").status.success());
    let first = std::fs::read(&det).unwrap();
    assert!(synth("9").status.success());
    let mut pass = first == std::fs::read(&det).unwrap();
    for solver in ["ssp", "dssp", "odssp", "mbodssp", "dp"] {
        let run = || {
            Command::new(bin)
                .args(["track", "--solver", solver, "-i"])
                .arg(&det)
                .env_remove("FLOWTRACK_CONFIG")
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        pass &= a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout;
    }
    report("C9 determinism", pass, "synth and track (5 solvers) run twice, byte-identical");
    assert!(pass);
}

#[test]
fn c10_throughput() {
    let seq = generate_synthetic(
        &SynthConfig {
            frames: 300,
            tracks: 15,
            ..SynthConfig::default()
        },
        10,
    )
    .unwrap();
    let layers: Vec<(i64, Vec<Detection>)> = frame_layers(seq.detections);
    let d_max = layers.iter().map(|(_, l)| l.len()).max().unwrap();
    let model = CostModel::default();
    let mut tracker = OnlineTracker::new(&model, TrackerConfig::bounded(10)).unwrap();
    let n = layers.len();
    let start = Instant::now();
    for (t, layer) in layers {
        tracker.process_frame(t, layer).unwrap();
    }
    let mean_ms = start.elapsed().as_secs_f64() * 1e3 / n as f64;
    let pass = mean_ms < 10.0 && d_max <= 20;
    // Soft gate: machine dependent, reported but never fails the build.
    report(
        "C10 throughput",
        pass,
        &format!("mbodssp tau=10, up to {d_max} detections/frame: {mean_ms:.3} ms/frame mean{}", if pass { "" } else { " (warning only)" }),
    );
}
