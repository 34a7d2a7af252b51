use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_flowtrack"));
    c.env_remove("FLOWTRACK_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn synth(dir: &Path, seed: &str, frames: &str) -> (String, String) {
    let d = dir.join("det.csv");
    let g = dir.join("gt.csv");
    let out = run(&[
        "synth",
        "--seed",
        seed,
        "--frames",
        frames,
        "--detections",
        d.to_str().unwrap(),
        "--gt",
        g.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (d.to_str().unwrap().to_string(), g.to_str().unwrap().to_string())
}

const CANONICAL: &str = "0,-1,0,0,10,10,5\n0,-1,100,0,10,10,5\n1,-1,1,0,10,10,5\n1,-1,101,0,10,10,5\n";

#[test]
fn canonical_tracks_two_ids() {
    let out = run_stdin(&["track", "--entry-cost", "0.5", "--exit-cost", "0.5"], CANONICAL);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "0,0,0,0,10,10\n0,1,100,0,10,10\n1,0,1,0,10,10\n1,1,101,0,10,10\n"
    );
}

#[test]
fn empty_input_gives_empty_output() {
    let out = run_stdin(&["track", "--solver", "mbodssp"], "");
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["track", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["track", "--window", "0", "-i", "/nonexistent"]).status.code(), Some(1));
    assert_eq!(run(&["track", "-i", "/nonexistent/file.csv"]).status.code(), Some(2));
    let bad = run_stdin(&["track"], "0,-1,1,1,0,2,1\n");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_refuses_large_input() {
    let dir = tempfile::tempdir().unwrap();
    let (det, _) = synth(dir.path(), "1", "20");
    assert_eq!(run(&["oracle", "-i", &det]).status.code(), Some(2));
    let small = run_stdin(&["oracle"], CANONICAL);
    assert!(small.status.success());
    assert_eq!(small.stdout, run_stdin(&["track"], CANONICAL).stdout);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (det, _) = synth(dir.path(), "4", "60");
    for solver in ["ssp", "dssp", "odssp", "mbodssp", "dp"] {
        let a = run(&["track", "-i", &det, "--solver", solver]);
        let b = run(&["track", "-i", &det, "--solver", solver]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{solver}");
    }
}

#[test]
fn streaming_matches_batch_after_flush() {
    let dir = tempfile::tempdir().unwrap();
    let (det, _) = synth(dir.path(), "6", "40");
    let text = std::fs::read_to_string(&det).unwrap();
    let mut blocks = String::new();
    let mut last = None;
    for line in text.lines() {
        let frame = line.split(',').next().unwrap().to_string();
        if last.as_ref().is_some_and(|l| *l != frame) {
            blocks.push('\n');
        }
        blocks.push_str(line);
        blocks.push('\n');
        last = Some(frame);
    }
    // With a lag longer than the sequence everything is emitted at the end.
    let streamed = run_stdin(&["track", "--stream", "--solver", "odssp", "--confirm-lag", "1000"], &blocks);
    assert!(streamed.status.success(), "{}", String::from_utf8_lossy(&streamed.stderr));
    let batch = run(&["track", "-i", &det, "--solver", "odssp"]);
    assert_eq!(streamed.stdout, batch.stdout);
    let eager = run_stdin(&["track", "--stream", "--solver", "mbodssp", "--confirm-lag", "0"], &blocks);
    assert!(eager.status.success());
    assert!(!eager.stdout.is_empty());
}

#[test]
fn stream_fills_gaps_and_rejects_the_past() {
    let ok = run_stdin(
        &["track", "--stream", "--confirm-lag", "0"],
        "0,-1,0,0,10,10,5\n\n3,-1,1,0,10,10,5\n",
    );
    assert!(ok.status.success());
    let bad = run_stdin(&["track", "--stream"], "3,-1,0,0,10,10,5\n\n1,-1,1,0,10,10,5\n");
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn tracks_round_trip_to_perfect_score() {
    let dir = tempfile::tempdir().unwrap();
    let (det, _) = synth(dir.path(), "8", "50");
    let tracks = dir.path().join("tracks.csv");
    let gt = dir.path().join("self_gt.csv");
    assert!(run(&["track", "-i", &det, "-o", tracks.to_str().unwrap()]).status.success());
    assert!(run(&["tracks-to-gt", "-i", tracks.to_str().unwrap(), "-o", gt.to_str().unwrap()])
        .status
        .success());
    let out = run(&["eval", "--gt", gt.to_str().unwrap(), "--tracks", tracks.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mota 1\n"), "{text}");
    assert!(text.contains("id_switches 0\n"));
}

#[test]
fn config_file_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "entry_cost = 100.0\nexit_cost = 100.0\n").unwrap();
    let from_file = run_stdin(&["track", "--config", cfg.to_str().unwrap()], CANONICAL);
    assert!(from_file.status.success());
    assert!(from_file.stdout.is_empty());
    let overridden = run_stdin(
        &["track", "--config", cfg.to_str().unwrap(), "--entry-cost", "0.5", "--exit-cost", "0.5"],
        CANONICAL,
    );
    assert!(!overridden.stdout.is_empty());

    let mut child = bin()
        .env("FLOWTRACK_CONFIG", &cfg)
        .arg("track")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(CANONICAL.as_bytes()).unwrap();
    assert!(child.wait_with_output().unwrap().stdout.is_empty());

    std::fs::write(&cfg, "entry = 1\n").unwrap();
    assert_eq!(run(&["track", "--config", cfg.to_str().unwrap(), "-i", "x"]).status.code(), Some(1));
}

#[test]
fn bench_emits_rows() {
    let out = run(&["bench", "--frames", "30", "--solvers", "ssp,mbodssp", "--taus", "2,5", "--stride", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "solver,tau,frame,wall_us,relaxations,queue_pushes,live_nodes,live_edges,cache_entries"
    );
    assert_eq!(lines.count(), 3 + 30 + 30);
}
