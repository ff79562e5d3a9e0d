// SPDX-License-Identifier: Apache-2.0

//! `octrack` subcommands: `synth`, `track`, `eval`, `bench`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{bench_tracking, BenchReport};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::evaluation::{compare, LayerSeries};
use crate::io::{self, FrameFormat, TraceRow};
use crate::observers::{detect_frame, oracle_run, ObservationPair, ReplayReader};
use crate::signal::{BoundaryTrace, LayerId, ObsStatus};
use crate::synth::{preset, Regime, SyntheticScene};
use crate::track::{track_pairs, Pipeline};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "octrack", version, about = "Kalman boundary tracking for M-mode OCT")]
struct Cli {
    /// Key-value config file (falls back to $OCTRACK_CONFIG).
    #[arg(long, global = true, env = "OCTRACK_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene to a frame file plus truth CSV.
    Synth(SynthArgs),
    /// Track both boundaries column by column.
    Track(TrackArgs),
    /// Score traces against ground truth.
    Eval(EvalArgs),
    /// Measure tracking throughput and latency.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Pgm,
    Raw,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// clean | low-snr | motion | dropout-jagged
    #[arg(long, default_value = "clean")]
    preset: String,
    /// Output path prefix; writes <out>.pgm (or .mscn) and <out>.truth.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "pgm")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct TrackArgs {
    /// frame:<path> | obs:<path> | preset:<name>
    #[arg(long)]
    source: Source,
    /// raw | kdh
    #[arg(long, default_value = "kdh")]
    pipeline: Pipeline,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Basename for the output files.
    #[arg(long, default_value = "run")]
    name: String,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Prefix of a track run (<prefix>.epithelium.trace.csv, ...).
    #[arg(long, conflicts_with_all = ["epi", "dm"])]
    run: Option<PathBuf>,
    /// Epithelium trace CSV (with --dm, instead of --run).
    #[arg(long, requires = "dm")]
    epi: Option<PathBuf>,
    /// DM trace CSV (with --epi, instead of --run).
    #[arg(long, requires = "epi")]
    dm: Option<PathBuf>,
    /// Truth CSV; defaults to <run>.truth.csv.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// frame:<path> | obs:<path> | preset:<name>
    #[arg(long, default_value = "preset:clean")]
    source: Source,
    /// raw | kdh
    #[arg(long, default_value = "kdh")]
    pipeline: Pipeline,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Override the synthetic scene width (columns).
    #[arg(long)]
    width: Option<usize>,
    /// Directory that also receives bench.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Where observations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Frame(PathBuf),
    Observations(PathBuf),
    Preset(Regime),
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParam(format!("source {s:?} must be kind:value")))?;
        match kind {
            "frame" => Ok(Source::Frame(rest.into())),
            "obs" => Ok(Source::Observations(rest.into())),
            "preset" => Ok(Source::Preset(rest.parse()?)),
            other => Err(Error::InvalidParam(format!("unknown source kind {other:?}"))),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Frame(p) => write!(f, "frame:{}", p.display()),
            Source::Observations(p) => write!(f, "obs:{}", p.display()),
            Source::Preset(r) => write!(f, "preset:{r}"),
        }
    }
}

/// Everything a tracking run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub source: Source,
    pub pipeline: Pipeline,
    pub config: Config,
    pub out_dir: PathBuf,
    pub name: String,
    pub seed: u64,
}

/// Observations for a source, with truth when the source is synthetic.
pub struct Loaded {
    pub pairs: Vec<ObservationPair>,
    pub truth: Option<Vec<(f64, f64)>>,
}

pub fn scene_for(regime: Regime, config: &Config, seed: u64) -> SyntheticScene {
    let mut scene = config.apply_scene(preset(regime));
    scene.seed = seed;
    scene
}

pub fn load_source(source: &Source, config: &Config, seed: u64) -> Result<Loaded> {
    match source {
        Source::Preset(regime) => {
            let scene = scene_for(*regime, config, seed);
            scene.validate()?;
            Ok(Loaded {
                pairs: oracle_run(&scene, seed)?,
                truth: Some(scene.truth()),
            })
        }
        Source::Frame(path) => {
            let frame = io::read_frame(path)?;
            Ok(Loaded {
                pairs: detect_frame(&frame, &config.detector).map_err(|e| e.in_file(path))?,
                truth: None,
            })
        }
        Source::Observations(path) => {
            let reader = ReplayReader::new(io::open(path)?).map_err(|e| e.in_file(path))?;
            Ok(Loaded {
                pairs: reader.read_all().map_err(|e| e.in_file(path))?,
                truth: None,
            })
        }
    }
}

pub fn trace_path(prefix: &Path, layer: LayerId) -> PathBuf {
    with_suffix(prefix, &format!(".{}.trace.csv", layer.as_str()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

/// Runs the tracker and writes `<name>.{epithelium,dm}.trace.csv`,
/// `<name>.obs.csv` and, for synthetic sources, `<name>.truth.csv`.
pub fn run_track(manifest: &RunManifest) -> Result<[BoundaryTrace; 2]> {
    let loaded = load_source(&manifest.source, &manifest.config, manifest.seed)?;
    let traces = track_pairs(
        &loaded.pairs,
        manifest.pipeline,
        &manifest.config.filter,
        &manifest.config.window,
    );
    std::fs::create_dir_all(&manifest.out_dir).map_err(|e| Error::from(e).in_file(&manifest.out_dir))?;
    let prefix = manifest.out_dir.join(&manifest.name);
    for trace in &traces {
        let path = trace_path(&prefix, trace.layer);
        let mut w = io::create(&path)?;
        io::write_trace(&mut w, trace).map_err(|e| e.in_file(&path))?;
        w.flush().map_err(|e| Error::from(e).in_file(&path))?;
    }
    let obs_path = with_suffix(&prefix, ".obs.csv");
    io::write_observations(io::create(&obs_path)?, &loaded.pairs).map_err(|e| e.in_file(&obs_path))?;
    if let Some(truth) = &loaded.truth {
        let path = with_suffix(&prefix, ".truth.csv");
        io::write_truth(io::create(&path)?, truth).map_err(|e| e.in_file(&path))?;
    }
    Ok(traces)
}

/// Raw estimates as the pass-through pipeline would emit them: the
/// observation, or the last valid one during dropout.
pub fn held_raw(rows: &[TraceRow]) -> Vec<Option<f64>> {
    let mut last = None;
    rows.iter()
        .map(|r| {
            if let (ObsStatus::Valid, Some(z)) = (r.status, r.raw_px) {
                last = Some(z);
            }
            last
        })
        .collect()
}

pub fn series_from_traces(epi: &[TraceRow], dm: &[TraceRow], truth: &[(f64, f64)]) -> Result<Vec<LayerSeries>> {
    for rows in [epi, dm] {
        if rows.len() != truth.len() {
            return Err(Error::Misaligned(rows.len().min(truth.len())));
        }
    }
    let build = |layer, rows: &[TraceRow], pick: fn(&(f64, f64)) -> f64| LayerSeries {
        layer,
        raw: held_raw(rows),
        kdh: rows.iter().map(|r| r.filtered_px).collect(),
        truth: truth.iter().map(pick).collect(),
    };
    Ok(vec![
        build(LayerId::Epithelium, epi, |t| t.0),
        build(LayerId::DM, dm, |t| t.1),
    ])
}

fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    io::read_trace(io::open(path)?).map_err(|e| e.in_file(path))
}

fn cmd_synth(args: &SynthArgs, config: &Config, seed: u64) -> Result<()> {
    let regime: Regime = args.preset.parse()?;
    let scene = scene_for(regime, config, seed);
    let (frame, truth) = scene.render()?;
    let format = match args.format {
        FormatArg::Pgm => FrameFormat::Pgm,
        FormatArg::Raw => FrameFormat::Raw,
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    }
    let frame_path = with_suffix(&args.out, &format!(".{}", format.extension()));
    io::write_frame(&frame_path, &frame, format)?;
    let truth_path = with_suffix(&args.out, ".truth.csv");
    io::write_truth(io::create(&truth_path)?, &truth).map_err(|e| e.in_file(&truth_path))?;
    println!("{}\n{}", frame_path.display(), truth_path.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs, config: &Config) -> Result<()> {
    let (epi_path, dm_path, truth_path) = match (&args.run, &args.epi, &args.dm) {
        (Some(prefix), _, _) => (
            trace_path(prefix, LayerId::Epithelium),
            trace_path(prefix, LayerId::DM),
            args.truth.clone().unwrap_or_else(|| with_suffix(prefix, ".truth.csv")),
        ),
        (None, Some(e), Some(d)) => (
            e.clone(),
            d.clone(),
            args.truth
                .clone()
                .ok_or_else(|| Error::InvalidParam("--truth is required with --epi/--dm".into()))?,
        ),
        _ => return Err(Error::InvalidParam("give --run or both --epi and --dm".into())),
    };
    let epi = read_trace_file(&epi_path)?;
    let dm = read_trace_file(&dm_path)?;
    let truth = io::read_truth(io::open(&truth_path)?).map_err(|e| e.in_file(&truth_path))?;
    let series = series_from_traces(&epi, &dm, &truth)?;
    let report = compare(&series, &config.eval)?;
    let json = report.to_json();
    let table = report.to_table();
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        std::fs::write(dir.join("report.json"), &json)?;
        std::fs::write(dir.join("report.txt"), &table)?;
    }
    print!("{table}");
    println!("{json}");
    Ok(())
}

fn cmd_bench(args: &BenchArgs, config: &Config, seed: u64) -> Result<BenchReport> {
    let pairs = match (&args.source, args.width) {
        (Source::Preset(regime), Some(width)) => {
            let mut scene = scene_for(*regime, config, seed);
            scene.width_px = width;
            oracle_run(&scene, seed)?
        }
        (source, _) => load_source(source, config, seed)?.pairs,
    };
    let report = bench_tracking(&pairs, args.pipeline, &config.filter, &config.window, args.repetitions)?;
    let json = serde_json::to_string_pretty(&report).expect("bench report serializes");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        std::fs::write(dir.join("bench.json"), &json)?;
    }
    println!("{json}");
    Ok(report)
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = cli.seed.or(config.scene_seed()).unwrap_or(0);
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, &config, seed),
        Command::Track(a) => {
            let manifest = RunManifest {
                source: a.source.clone(),
                pipeline: a.pipeline,
                config,
                out_dir: a.out.clone(),
                name: a.name.clone(),
                seed,
            };
            run_track(&manifest).map(|_| ())
        }
        Command::Eval(a) => cmd_eval(a, &config),
        Command::Bench(a) => cmd_bench(a, &config, seed).map(|_| ()),
    }
}

fn is_usage_error(e: &Error) -> bool {
    match e {
        Error::InvalidParam(_) => true,
        Error::File { source, .. } => is_usage_error(source),
        _ => false,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("octrack: {e}");
            if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}
