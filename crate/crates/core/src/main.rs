use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowtrack::bench::{run_bench, write_bench_csv, BenchConfig};
use flowtrack::config::{RunConfig, Settings, SolverKind};
use flowtrack::cost::DetectionCostForm;
use flowtrack::detection::Detection;
use flowtrack::error::Error;
use flowtrack::io::{self as fio, FrameBlocks};
use flowtrack::metrics::clear_mot;
use flowtrack::online::OnlineTracker;
use flowtrack::run::run_solver;
use flowtrack::synth::{generate_synthetic, SynthConfig};

#[derive(Parser)]
#[command(name = "flowtrack", version, about = "Min-cost flow multi-object tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a detection file, or a stream of frame blocks with --stream.
    Track(TrackArgs),
    /// Emit per-frame solver statistics as CSV.
    Bench(BenchArgs),
    /// Generate a synthetic detection sequence with ground truth.
    Synth(SynthArgs),
    /// Score tracks against ground truth with CLEAR-MOT.
    Eval(EvalArgs),
    /// Exhaustive optimum of a small detection file.
    Oracle(OracleArgs),
    /// Rewrite a track file as ground truth.
    TracksToGt(ConvertArgs),
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat TOML config file (default: $FLOWTRACK_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    cache_size: Option<usize>,
    #[arg(long)]
    cache_reuse: Option<bool>,
    #[arg(long)]
    strict: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    entry_cost: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    exit_cost: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    det_offset: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    det_weight: Option<f64>,
    #[arg(long, value_parser = parse_form)]
    detection_form: Option<DetectionCostForm>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    link_offsets: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    link_weights: Option<Vec<f64>>,
    #[arg(long)]
    gating: Option<bool>,
    #[arg(long)]
    gating_radius: Option<f64>,
    #[arg(long)]
    confirm_lag: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iou_threshold: Option<f64>,
}

fn parse_form(s: &str) -> Result<DetectionCostForm, String> {
    match s {
        "affine" => Ok(DetectionCostForm::Affine),
        "log_odds" => Ok(DetectionCostForm::LogOdds),
        _ => Err(format!("expected affine or log_odds, got {s:?}")),
    }
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings, Error> {
        let cli = RunConfig {
            solver: self.solver,
            window: self.window,
            cache_size: self.cache_size,
            cache_reuse: self.cache_reuse,
            strict: self.strict,
            beta: self.beta,
            entry_cost: self.entry_cost,
            exit_cost: self.exit_cost,
            det_offset: self.det_offset,
            det_weight: self.det_weight,
            detection_form: self.detection_form,
            link_offsets: self.link_offsets.clone(),
            link_weights: self.link_weights.clone(),
            gating: self.gating,
            gating_radius: self.gating_radius,
            confirm_lag: self.confirm_lag,
            seed: self.seed,
            iou_threshold: self.iou_threshold,
        };
        RunConfig::discover(self.config.as_deref())?.overlay(cli).resolve()
    }
}

#[derive(Args)]
struct TrackArgs {
    /// Detection CSV; `-` or omitted reads standard input.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Track CSV; omitted writes standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Read blank-line separated frame blocks and emit tracks as frames
    /// are confirmed.
    #[arg(long)]
    stream: bool,
    /// Print the objective and solver counters to standard error.
    #[arg(long)]
    summary: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthSource {
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    tracks: Option<usize>,
    #[arg(long)]
    spawn_prob: Option<f64>,
    #[arg(long)]
    death_prob: Option<f64>,
    #[arg(long)]
    motion_noise: Option<f64>,
    #[arg(long)]
    fp_rate: Option<f64>,
    #[arg(long)]
    miss_rate: Option<f64>,
    /// Keep objects inside the image by reflecting them at the border.
    #[arg(long)]
    bounce: bool,
    /// Constant object count with a perfect detector.
    #[arg(long)]
    stationary: bool,
}

impl SynthSource {
    fn config(&self) -> SynthConfig {
        let base = if self.stationary {
            SynthConfig::stationary(100, 5)
        } else {
            SynthConfig::default()
        };
        SynthConfig {
            frames: self.frames.unwrap_or(base.frames),
            tracks: self.tracks.unwrap_or(base.tracks),
            spawn_prob: self.spawn_prob.unwrap_or(base.spawn_prob),
            death_prob: self.death_prob.unwrap_or(base.death_prob),
            motion_noise: self.motion_noise.unwrap_or(base.motion_noise),
            fp_rate: self.fp_rate.unwrap_or(base.fp_rate),
            miss_rate: self.miss_rate.unwrap_or(base.miss_rate),
            bounce: self.bounce || base.bounce,
            ..base
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Detection CSV; omitted benchmarks a synthetic sequence.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "ssp,dssp,odssp,mbodssp")]
    solvers: Vec<SolverKind>,
    /// Windows to sweep for mbodssp.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[command(flatten)]
    synth: SynthSource,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write detections (default standard output).
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Where to write ground truth.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    source: SynthSource,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    match path {
        Some(p) if p != Path::new("-") => {
            let f = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(f))
        }
        _ => Ok(Box::new(io::stdout().lock())),
    }
}

fn read_input(path: Option<&Path>) -> Result<Vec<Detection>, Error> {
    match path {
        Some(p) if p != Path::new("-") => fio::load_detections(p),
        _ => fio::read_detections(io::stdin().lock()),
    }
}

fn write_err(path: Option<&Path>) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Track(args) => track(args),
        Command::Bench(args) => bench(args),
        Command::Synth(args) => synth(args),
        Command::Eval(args) => eval(args),
        Command::Oracle(args) => {
            let settings = args.config.settings()?;
            let dets = read_input(args.input.as_deref())?;
            let out = run_solver(SolverKind::Oracle, dets, &settings.costs, &settings)?;
            let mut w = open_output(args.output.as_deref())?;
            fio::write_tracks(&out.rows, &mut w).map_err(write_err(args.output.as_deref()))?;
            eprintln!("cost {}", fio::fmt_num(out.total_cost));
            Ok(())
        }
        Command::TracksToGt(args) => {
            let boxes = fio::load_frame_boxes(&args.input)?;
            let mut w = open_output(args.output.as_deref())?;
            fio::write_frame_boxes(&boxes, &mut w).map_err(write_err(args.output.as_deref()))
        }
    }
}

fn track(args: TrackArgs) -> Result<(), Error> {
    let settings = args.config.settings()?;
    if args.stream {
        return track_stream(&args, &settings);
    }
    let dets = read_input(args.input.as_deref())?;
    let out = run_solver(settings.solver, dets, &settings.costs, &settings)?;
    let mut w = open_output(args.output.as_deref())?;
    fio::write_tracks(&out.rows, &mut w).map_err(write_err(args.output.as_deref()))?;
    if args.summary {
        let s = &out.stats;
        eprintln!(
            "solver {} cost {} tracks {} iterations {} relaxations {} queue_pushes {} cache_hits {} cache_misses {}",
            settings.solver,
            fio::fmt_num(out.total_cost),
            out.rows.iter().map(|r| r.track_id).collect::<std::collections::BTreeSet<_>>().len(),
            s.iterations,
            s.relaxations,
            s.queue_pushes,
            s.cache_hits,
            s.cache_misses
        );
    }
    Ok(())
}

fn track_stream(args: &TrackArgs, settings: &Settings) -> Result<(), Error> {
    let solver = match settings.solver {
        SolverKind::Ssp => SolverKind::Odssp,
        s if s.is_online() => s,
        s => return Err(Error::Config(format!("{s} cannot run on a stream"))),
    };
    let input: Box<dyn BufRead> = match args.input.as_deref() {
        Some(p) if p != Path::new("-") => Box::new(BufReader::new(File::open(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?)),
        _ => Box::new(io::stdin().lock()),
    };
    let mut blocks = FrameBlocks::new(input);
    let mut tracker = OnlineTracker::new(&settings.costs, settings.tracker(solver))?;
    let out_path = args.output.as_deref();
    let mut w = open_output(out_path)?;
    let lag = settings.confirm_lag as i64;
    let mut next_emit: Option<i64> = None;

    while let Some((frame, dets)) = blocks.next_block()? {
        if let Some(expected) = tracker.next_frame() {
            if frame < expected {
                return Err(Error::FrameGap {
                    expected_after: expected - 1,
                    got: frame,
                });
            }
            for gap in expected..frame {
                tracker.process_frame(gap, Vec::new())?;
            }
        } else {
            next_emit = Some(frame);
        }
        tracker.process_frame(frame, dets)?;
        emit_through(&tracker, &mut next_emit, frame - lag, &mut *w, out_path)?;
    }
    if let Some(t_max) = tracker.graph().t_max() {
        emit_through(&tracker, &mut next_emit, t_max, &mut *w, out_path)?;
    }
    Ok(())
}

/// Writes every frame from `next` through `upto` and advances `next`.
fn emit_through<C: flowtrack::EdgeCosts>(
    tracker: &OnlineTracker<C>,
    next: &mut Option<i64>,
    upto: i64,
    w: &mut dyn Write,
    out_path: Option<&Path>,
) -> Result<(), Error> {
    let Some(mut t) = *next else { return Ok(()) };
    while t <= upto {
        fio::write_tracks(&tracker.rows_for_frame(t), &mut *w).map_err(write_err(out_path))?;
        t += 1;
    }
    *next = Some(t);
    w.flush().map_err(write_err(out_path))
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let settings = args.config.settings()?;
    let dets = match args.input.as_deref() {
        Some(p) => fio::load_detections(p)?,
        None => generate_synthetic(&args.synth.config(), settings.seed)?.detections,
    };
    let config = BenchConfig {
        solvers: args.solvers.clone(),
        taus: args.taus.clone(),
        stride: args.stride,
    };
    let rows = run_bench(&dets, &settings, &config)?;
    let mut w = open_output(args.output.as_deref())?;
    write_bench_csv(&rows, &mut w).map_err(write_err(args.output.as_deref()))
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let seq = generate_synthetic(&args.source.config(), args.seed)?;
    let mut w = open_output(args.detections.as_deref())?;
    fio::write_detections(&seq.detections, &mut w).map_err(write_err(args.detections.as_deref()))?;
    if let Some(p) = args.gt.as_deref() {
        let mut g = open_output(Some(p))?;
        fio::write_frame_boxes(&seq.ground_truth, &mut g).map_err(write_err(Some(p)))?;
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Error> {
    if !(args.iou_threshold > 0.0 && args.iou_threshold <= 1.0) {
        return Err(Error::Config("iou threshold must be in (0, 1]".into()));
    }
    let gt = fio::load_frame_boxes(&args.gt)?;
    let hyp = fio::load_frame_boxes(&args.tracks)?;
    let r = clear_mot(&gt, &hyp, args.iou_threshold);
    let f = fio::fmt_num;
    println!("mota {}", f(r.mota));
    println!("motp {}", f(r.motp));
    println!("mostly_tracked {}", f(r.mostly_tracked));
    println!("partially_tracked {}", f(r.partially_tracked));
    println!("mostly_lost {}", f(r.mostly_lost));
    println!("id_switches {}", r.id_switches);
    println!("fragmentations {}", r.fragmentations);
    println!("false_alarm_rate {}", f(r.false_alarm_rate));
    println!("ground_truth {}", r.ground_truth);
    println!("false_positives {}", r.false_positives);
    println!("misses {}", r.misses);
    Ok(())
}
