//! `alvs` command line: scenario runs, the evasion sweep, stimulus
//! generation, layer dumps, latency bench and the memory report.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags or overrides),
//! 2 when the work itself fails.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{AlvsError, Result};
use crate::map::{Frame, Map};
use crate::params::PipelineConfig;
use crate::pgm;
use crate::pipeline::{FrameTrace, Pipeline, TimingStats, FRAME_BUDGET_MS};
use crate::sim::library::{self, EscapeOutcome};
use crate::sim::{run_trial, run_trial_observed, ControllerKind, Observation, ScenarioConfig};
use crate::stimulus;

#[derive(Debug, Parser)]
#[command(name = "alvs", version, about = "Looming detection and escape in a simulated robot arena")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trajectories, events, behaviour and a summary.
    Run(RunArgs),
    /// Nine-angle evasion sweep plus the dual-threat trials.
    Sweep(SweepArgs),
    /// Write synthetic stimulus sequences as numbered graymaps.
    Stimuli(StimuliArgs),
    /// Dump intermediate layers for selected frames.
    Inspect(InspectArgs),
    /// Per-frame latency over rendered arena views.
    Bench(BenchArgs),
    /// Persistent-memory accounting of one pipeline.
    Report(ReportArgs),
}

/// Model switches shared by every subcommand that builds a pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    /// Override a model or controller parameter (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Correlator without the delayed opponent term.
    #[arg(long)]
    pub compat_eq6: bool,
    /// Gate that only rejects exactly-zero quadrants.
    #[arg(long)]
    pub compat_eq9: bool,
    #[arg(long, value_name = "escape|spin")]
    pub mode: Option<String>,
    /// 16-bit channel storage.
    #[arg(long)]
    pub compact: bool,
}

impl ModelFlags {
    fn pairs(&self) -> std::result::Result<Vec<(String, String)>, String> {
        let mut v = Vec::new();
        if self.compat_eq6 {
            v.push(("hrc".into(), "printed".into()));
        }
        if self.compat_eq9 {
            v.push(("gate".into(), "printed".into()));
        }
        if self.compact {
            v.push(("precision".into(), "compact".into()));
        }
        if let Some(m) = &self.mode {
            v.push(("mode".into(), m.clone()));
        }
        for s in &self.set {
            let (k, val) = s
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            v.push((k.trim().into(), val.trim().into()));
        }
        Ok(v)
    }

    fn apply_to_scenario(&self, cfg: &mut ScenarioConfig) -> std::result::Result<(), Failure> {
        for (k, v) in self.pairs().map_err(Failure::Usage)? {
            if k == "mode" {
                cfg.mode = v.parse().map_err(|e: AlvsError| Failure::Usage(e.to_string()))?;
            }
            cfg.set_param(&k, &v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(())
    }

    fn pipeline_config(&self) -> std::result::Result<PipelineConfig, Failure> {
        let mut pc = PipelineConfig::default();
        for (k, v) in self.pairs().map_err(Failure::Usage)? {
            pc.set(&k, &v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(pc)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<u64>,
    /// Also write per-field quadrant sums.
    #[arg(long)]
    pub quadrants: bool,
    /// Also write every rendered view of the ALVS robots.
    #[arg(long)]
    pub views: bool,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated approach angles in degrees; defaults to the nine-angle set.
    #[arg(long, value_name = "LIST")]
    pub angles: Option<String>,
    /// Number of seeded dual-threat trials.
    #[arg(long, default_value_t = 10)]
    pub dual_trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct StimuliArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub frames: u64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Directory of 99x72 graymaps, processed in file-name order.
    #[arg(long, conflicts_with = "scenario")]
    pub frames_dir: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Which robot's view to inspect (default: the first ALVS robot).
    #[arg(long)]
    pub robot: Option<usize>,
    /// First frame to dump (default: the last frame).
    #[arg(long)]
    pub from: Option<u64>,
    /// Last frame to dump, inclusive (default: same as --from).
    #[arg(long)]
    pub to: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    pub frames: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(AlvsError),
}

impl From<AlvsError> for Failure {
    fn from(e: AlvsError) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Stimuli(a) => stimuli(a),
        Command::Inspect(a) => inspect(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    }
}

fn load_scenario(
    path: &Path,
    seed: Option<u64>,
    frames: Option<u64>,
    model: &ModelFlags,
) -> std::result::Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = frames {
        cfg.frames = f;
    }
    model.apply_to_scenario(&mut cfg)?;
    cfg.resolve()?;
    Ok(cfg)
}

fn run(a: RunArgs) -> Outcome {
    let cfg = load_scenario(&a.scenario, a.seed, a.frames, &a.model)?;
    let mut views: Vec<(String, Vec<u8>)> = Vec::new();
    let log = if a.views {
        let mut keep = |o: &Observation| {
            views.push((format!("r{}_{:05}.pgm", o.robot, o.frame), pgm::encode(o.view)));
        };
        run_trial_observed(&cfg, Some(&mut keep))?
    } else {
        run_trial(&cfg)?
    };
    log.write_outputs(&a.out, a.quadrants)?;
    if a.views {
        let dir = a.out.join("views");
        fs::create_dir_all(&dir).map_err(AlvsError::from)?;
        for (name, bytes) in views {
            fs::write(dir.join(name), bytes).map_err(AlvsError::from)?;
        }
    }
    print!("{}", log.summary_text());
    Ok(())
}

fn parse_angles(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::Usage(format!("bad angle `{t}`")))
        })
        .collect()
}

/// Tolerance of the single-threat sweep and of the dual-threat check.
pub const SWEEP_TOLERANCE_DEG: f64 = 10.0;
pub const DUAL_TOLERANCE_DEG: f64 = 25.0;

fn sweep(a: SweepArgs) -> Outcome {
    let angles = match &a.angles {
        Some(s) => parse_angles(s)?,
        None => library::SWEEP_ANGLES.to_vec(),
    };
    let prepare = |mut cfg: ScenarioConfig| -> std::result::Result<ScenarioConfig, Failure> {
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        a.model.apply_to_scenario(&mut cfg)?;
        Ok(cfg)
    };
    let singles = angles
        .iter()
        .map(|&ang| prepare(library::sweep_angle(ang)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if singles.is_empty() && a.dual_trials == 0 {
        println!("nothing to sweep");
        return Ok(());
    }
    let duals = (0..a.dual_trials)
        .map(|s| prepare(library::dual_threat(s)))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let run_one = |cfg: &ScenarioConfig| -> Result<Option<EscapeOutcome>> {
        Ok(library::escape_outcome(&run_trial(cfg)?, 0, 1))
    };
    let single_out: Vec<_> = singles.par_iter().map(run_one).collect::<Result<_>>()?;
    let dual_out: Vec<_> = duals.par_iter().map(run_one).collect::<Result<_>>()?;

    let row = |o: &Option<EscapeOutcome>, tol: f64| match o {
        Some(o) => (
            format!(
                "{},{:.3},{:.3},{:.3}",
                o.trigger_frame, o.threat_bearing, o.escape_heading, o.error
            ),
            o.error.abs() <= tol,
        ),
        None => (",,,".to_string(), false),
    };
    let mut csv = String::from("angle,trigger_frame,threat_bearing,escape_heading,error,pass\n");
    let mut table = String::from("angle    error    result\n");
    let mut passed = 0;
    for (ang, o) in angles.iter().zip(&single_out) {
        let (cells, ok) = row(o, SWEEP_TOLERANCE_DEG);
        passed += usize::from(ok);
        let _ = writeln!(csv, "{ang},{cells},{ok}");
        let err = o.map(|o| format!("{:+7.2}", o.error)).unwrap_or_else(|| "   none".into());
        let _ = writeln!(table, "{ang:+7.2} {err}  {}", if ok { "pass" } else { "FAIL" });
    }
    let _ = writeln!(table, "sweep: {passed}/{} within {SWEEP_TOLERANCE_DEG} deg", angles.len());

    let mut dual_csv = String::from("seed,trigger_frame,fast_bearing,escape_heading,error,pass\n");
    let mut dual_pass = 0;
    for (s, o) in dual_out.iter().enumerate() {
        let (cells, ok) = row(o, DUAL_TOLERANCE_DEG);
        dual_pass += usize::from(ok);
        let _ = writeln!(dual_csv, "{s},{cells},{ok}");
    }
    if a.dual_trials > 0 {
        let _ = writeln!(
            table,
            "dual threat: {dual_pass}/{} escapes oppose the faster robot within {DUAL_TOLERANCE_DEG} deg",
            a.dual_trials
        );
    }
    fs::create_dir_all(&a.out).map_err(AlvsError::from)?;
    fs::write(a.out.join("sweep.csv"), csv).map_err(AlvsError::from)?;
    fs::write(a.out.join("dual_threat.csv"), dual_csv).map_err(AlvsError::from)?;
    fs::write(a.out.join("sweep.txt"), &table).map_err(AlvsError::from)?;
    print!("{table}");
    Ok(())
}

fn write_sequence(dir: &Path, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in frames {
        pgm::write_frame(&dir.join(format!("frame_{:05}.pgm", f.index())), f)?;
    }
    Ok(())
}

fn stimuli(a: StimuliArgs) -> Outcome {
    let n = a.frames.max(2) as usize;
    let (cx, cy) = (49.0, 36.0);
    let sets: Vec<(&str, Vec<Frame>)> = vec![
        ("looming", stimulus::looming_disc(n, cx, cy, 3.0, 30.0, 20, 200)),
        ("receding", stimulus::receding_disc(n, cx, cy, 30.0, 3.0, 20, 200)),
        (
            "translating",
            stimulus::translating_bar(n, 10.0, 2.0, 8.0, (20, 52), 20, 200),
        ),
        (
            "static",
            (0..n as u64).map(|i| stimulus::checkerboard(i, 9, 40, 220)).collect(),
        ),
    ];
    for (name, frames) in &sets {
        write_sequence(&a.out.join(name), frames)?;
        println!("{name}: {} frames", frames.len());
    }
    Ok(())
}

fn rectified(m: &Map) -> Map {
    m.map(|v| v.max(0.0))
}

/// Writes the layer maps of one traced frame.
pub fn dump_layers(dir: &Path, trace: &FrameTrace) -> Result<()> {
    fs::create_dir_all(dir)?;
    let layers: [(&str, &Map); 4] = [
        ("l_layer.pgm", &trace.diff),
        ("p_on.pgm", &trace.channels.on),
        ("p_off.pgm", &trace.channels.off),
        ("saliency.pgm", &trace.saliency),
    ];
    for (name, m) in layers {
        pgm::write_map(&dir.join(name), m)?;
    }
    let dirs = [
        ("dir_right.pgm", &trace.motion.lm_r),
        ("dir_left.pgm", &trace.motion.lm_l),
        ("dir_down.pgm", &trace.motion.lm_d),
        ("dir_up.pgm", &trace.motion.lm_u),
    ];
    for (name, m) in dirs {
        pgm::write_map(&dir.join(name), &rectified(m))?;
    }
    Ok(())
}

fn attention_rows(out: &mut String, trace: &FrameTrace) {
    for f in &trace.fields {
        let q = &f.quadrants;
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            trace.frame_index,
            f.id,
            f.cx,
            f.cy,
            q.q1,
            q.q2,
            q.q3,
            q.q4,
            f.response.value,
            u8::from(f.response.gated)
        );
    }
}

fn check_range(from: u64, to: u64, total: u64) -> Result<()> {
    if total == 0 {
        return Err(AlvsError::Scenario("no frames to inspect".into()));
    }
    for r in [from, to] {
        if r >= total {
            return Err(AlvsError::FrameOutOfRange {
                requested: r,
                first: 0,
                last: total - 1,
            });
        }
    }
    if from > to {
        return Err(AlvsError::Scenario(format!("--from {from} is after --to {to}")));
    }
    Ok(())
}

fn inspect(a: InspectArgs) -> Outcome {
    let mut traces: Vec<FrameTrace> = Vec::new();
    let (from, to);
    match (&a.frames_dir, &a.scenario) {
        (Some(dir), None) => {
            let pc = a.model.pipeline_config()?;
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(AlvsError::from)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
                .collect();
            paths.sort();
            let total = paths.len() as u64;
            let last = total.saturating_sub(1);
            from = a.from.unwrap_or(last);
            to = a.to.unwrap_or(from.max(a.from.map_or(last, |_| from)));
            check_range(from, to, total)?;
            let mut p = Pipeline::new(pc)?;
            for (i, path) in paths.iter().enumerate().take(to as usize + 1) {
                let frame = pgm::read_frame(path, i as u64)?;
                let (_, trace) = p.process_frame_traced(&frame, 0.0)?;
                if i as u64 >= from {
                    traces.push(trace);
                }
            }
        }
        (None, Some(path)) => {
            let cfg = load_scenario(path, a.seed, a.frames, &a.model)?;
            let robot = match a.robot {
                Some(r) => r,
                None => cfg
                    .robots
                    .iter()
                    .position(|r| r.controller == ControllerKind::Alvs)
                    .ok_or_else(|| AlvsError::Scenario("scenario has no ALVS robot".into()))?,
            };
            if cfg.robots.get(robot).map(|r| r.controller) != Some(ControllerKind::Alvs) {
                return Err(Failure::Usage(format!("robot {robot} is not an ALVS robot")));
            }
            let last = cfg.frames.saturating_sub(1);
            from = a.from.unwrap_or(last);
            to = a.to.unwrap_or(from);
            check_range(from, to, cfg.frames)?;
            let mut keep = |o: &Observation| {
                if o.robot == robot && (from..=to).contains(&o.frame) {
                    traces.push(o.trace.clone());
                }
            };
            run_trial_observed(&cfg, Some(&mut keep))?;
        }
        _ => {
            return Err(Failure::Usage(
                "inspect needs exactly one of --frames-dir or --scenario".into(),
            ))
        }
    }
    let mut csv = String::from("frame,field_id,cx,cy,q1,q2,q3,q4,response,gated\n");
    for t in &traces {
        dump_layers(&a.out.join(format!("frame_{:05}", t.frame_index)), t)?;
        attention_rows(&mut csv, t);
    }
    fs::write(a.out.join("attention.csv"), csv).map_err(AlvsError::from)?;
    println!("dumped frames {from}..={to} to {}", a.out.display());
    Ok(())
}

/// Rendered views from the first robot of a checker-background arena trial.
pub fn bench_views(frames: u64, seed: u64) -> Result<Vec<Frame>> {
    let mut cfg = library::arena_trial(
        crate::sim::Background::Checker,
        ControllerKind::Alvs,
        seed,
    );
    cfg.frames = frames;
    let mut views = Vec::with_capacity(frames as usize);
    let mut keep = |o: &Observation| {
        if o.robot == 0 {
            views.push(o.view.clone());
        }
    };
    run_trial_observed(&cfg, Some(&mut keep))?;
    Ok(views)
}

fn bench(a: BenchArgs) -> Outcome {
    if a.frames < 1000 {
        return Err(Failure::Usage("bench needs --frames >= 1000".into()));
    }
    let pc = a.model.pipeline_config()?;
    let views = bench_views(a.frames, a.seed.unwrap_or(1))?;
    let mut p = Pipeline::new(pc)?;
    let mut samples = Vec::with_capacity(views.len());
    for v in &views {
        let t0 = Instant::now();
        p.process_frame(v, 0.0)?;
        samples.push(t0.elapsed());
    }
    let stats = TimingStats::from_samples(&samples);
    let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    ms.sort_by(f64::total_cmp);
    let pct = |q: f64| ms[((ms.len() - 1) as f64 * q).round() as usize];
    let text = format!(
        "frames {}\nmin_ms {:.4}\nmean_ms {:.4}\np50_ms {:.4}\np99_ms {:.4}\nmax_ms {:.4}\nbudget_ms {FRAME_BUDGET_MS}\nmargin_on_mean {:.1}x\nmargin_on_max {:.1}x\n",
        stats.frames,
        stats.min_ms,
        stats.mean_ms,
        pct(0.5),
        pct(0.99),
        stats.max_ms,
        FRAME_BUDGET_MS / stats.mean_ms,
        FRAME_BUDGET_MS / stats.max_ms,
    );
    if let Some(out) = &a.out {
        let mut csv = String::from("frame,ms\n");
        for (i, d) in samples.iter().enumerate() {
            let _ = writeln!(csv, "{i},{:.6}", d.as_secs_f64() * 1e3);
        }
        fs::create_dir_all(out).map_err(AlvsError::from)?;
        fs::write(out.join("bench.csv"), csv).map_err(AlvsError::from)?;
        fs::write(out.join("bench.txt"), &text).map_err(AlvsError::from)?;
    }
    print!("{text}");
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    let pc = a.model.pipeline_config()?;
    let budget = Pipeline::new(pc)?.budget_report(&[]);
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(AlvsError::from)?;
        fs::write(out.join("budget.csv"), budget.to_csv()).map_err(AlvsError::from)?;
        fs::write(out.join("budget.txt"), budget.to_string()).map_err(AlvsError::from)?;
    }
    print!("{budget}");
    Ok(())
}
