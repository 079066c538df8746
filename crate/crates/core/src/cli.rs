//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration or usage error,
//! 3 I/O or malformed input file, 4 not enough history to train,
//! 5 an undecodable stream was produced (the session log is dumped first).
//!
//! Summaries go to stdout as `key=value` lines (JSON for `run` and `report
//! --json`); diagnostics go to stderr.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::alloc::{
    allocate, qoe_total, uniform_allocate, write_allocation_csv, AllocError, Allocation, BudgetSchedule, QoeParams,
    RateBounds, Stationarity,
};
use crate::harness::{
    emit_report, gen_traces, load_config_graph, load_config_traces, load_summary, run_with_traces, save_traces,
    switch_rate, BehaviorModel, ExperimentConfig, HarnessError, Interactivity, Scheme, Summary,
};
use crate::popularity::{load_checkpoint, post_process, PopularityError, PopularityGnn, TrainConfig};
use crate::stream::StreamError;

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_HISTORY: i32 = 4;
pub const EXIT_DECODABILITY: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "fvvsim", version, about = "Free-view video streaming simulator")]
pub struct Cli {
    /// Seed for every random choice; falls back to FVV_SEED, then the config file.
    #[arg(long, env = "FVV_SEED", global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic view-switch traces.
    GenTraces(GenTracesArgs),
    /// Train the popularity network on the switching popularity of a trace file.
    Train(TrainArgs),
    /// Allocate rates for every chunk of a popularity CSV.
    Allocate(AllocateArgs),
    /// Run the closed-loop experiment and write its report.
    Run(RunArgs),
    /// Print the condensed results of a finished run.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Low,
    High,
    Mixed,
}

#[derive(Debug, Args)]
pub struct GenTracesArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub chunks: u64,
    #[arg(long)]
    pub n_views: usize,
    #[arg(long, default_value_t = 25)]
    pub fps: u32,
    #[arg(long, default_value_t = 1.0)]
    pub chunk_seconds: f64,
    /// Exponent of the hotspot-favoring target weights; 0 is uniform.
    #[arg(long)]
    pub zipf: Option<f64>,
    #[arg(long)]
    pub hotspot: Option<usize>,
    #[arg(long, short, default_value = "traces.csv")]
    pub out: PathBuf,
}

/// Options shared by commands that read an experiment configuration.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-key override such as `budget.mbps_per_view=20`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub n_views: Option<usize>,
    /// Chunks of the traces to measure; the config's `chunks` when absent.
    #[arg(long)]
    pub chunks: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Chunks used for the initial training; all but the held-out last chunk when absent.
    #[arg(long)]
    pub history: Option<usize>,
    /// Start from this checkpoint instead of training from scratch.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Follow the initial training with one online update per remaining chunk.
    #[arg(long)]
    pub online: bool,
    #[arg(long, short, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// CSV with `chunk,view,p,p_hat` columns and optionally `x,x_hat`.
    #[arg(long)]
    pub popularity: PathBuf,
    /// TOML parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Allocate every chunk uniformly instead.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, short, default_value = "allocation.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Scheme to run; repeatable. All schemes when absent.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Vec<Scheme>,
    #[arg(long)]
    pub fps: Option<u32>,
    #[arg(long)]
    pub chunk_seconds: Option<f64>,
    #[arg(long)]
    pub n_views: Option<usize>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub chunks: Option<u64>,
    /// Replay this trace CSV instead of generating traces.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[arg(long, short, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a run, or its `summary.json`.
    #[arg(default_value = "reports")]
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Scheme::ALL.iter().map(|k| k.name()).collect();
        format!("unknown scheme {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Io(_) | HarnessError::Parse { .. } | HarnessError::Validation(_) => EXIT_IO,
            HarnessError::Decodability { .. } => EXIT_DECODABILITY,
            HarnessError::Stream(StreamError::Config(_)) => EXIT_CONFIG,
            HarnessError::Alloc(AllocError::Params(_)) => EXIT_CONFIG,
            HarnessError::Popularity(p) => return p.clone().into(),
            _ => EXIT_INTERNAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<PopularityError> for CliError {
    fn from(e: PopularityError) -> Self {
        let code = match &e {
            PopularityError::InsufficientHistory { .. } => EXIT_HISTORY,
            PopularityError::Config(_) => EXIT_CONFIG,
            PopularityError::Parse { .. } | PopularityError::Checkpoint(_) => EXIT_IO,
            _ => EXIT_INTERNAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        let code = match e {
            AllocError::Params(_) => EXIT_CONFIG,
            _ => EXIT_INTERNAL,
        };
        CliError::new(code, e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::GenTraces(a) => cmd_gen_traces(a, cli.seed, out),
        Command::Train(a) => cmd_train(a, cli.seed, out),
        Command::Allocate(a) => cmd_allocate(a, out),
        Command::Run(a) => cmd_run(a, cli.seed, out),
        Command::Report(a) => cmd_report(a, out),
    }
}

fn write_out<W: Write>(out: &mut W, text: &str) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::new(EXIT_IO, e.to_string()))
}

pub fn cmd_gen_traces<W: Write>(a: &GenTracesArgs, seed: Option<u64>, out: &mut W) -> Result<(), CliError> {
    let mut model = match a.model {
        ModelArg::Low => BehaviorModel::low(),
        ModelArg::High => BehaviorModel::high(),
        ModelArg::Mixed => BehaviorModel {
            kind: Interactivity::Mixed,
            ..BehaviorModel::default()
        },
    };
    if let Some(z) = a.zipf {
        model.zipf_exponent = z;
    }
    model.hotspot = a.hotspot.or(model.hotspot);
    let stream = crate::stream::StreamConfig {
        n_views: a.n_views,
        fps: a.fps,
        chunk_seconds: a.chunk_seconds,
        ..Default::default()
    };
    stream.validate().map_err(HarnessError::from)?;
    model.validate(a.n_views)?;
    let seed = seed.unwrap_or(0);
    let f = stream.frames_per_chunk();
    let traces = gen_traces(&model, a.users, a.chunks, a.n_views, f, seed)?;
    save_traces(create(&a.out)?, &traces)?;
    write_out(
        out,
        &format!(
            "users={} chunks={} n_views={} seed={} switch_rate={:.6} out={}",
            traces.len(),
            a.chunks,
            a.n_views,
            seed,
            switch_rate(&traces, a.chunks, f),
            a.out.display()
        ),
    )
}

fn load_config(c: &ConfigArgs, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(c.config.as_deref(), &c.overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

pub fn cmd_train<W: Write>(a: &TrainArgs, seed: Option<u64>, out: &mut W) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config, seed)?;
    if let Some(n) = a.n_views {
        cfg.stream.n_views = n;
    }
    if let Some(c) = a.chunks {
        cfg.chunks = c;
    }
    if let Some(e) = a.epochs {
        cfg.gnn.epochs = e;
    }
    cfg.gnn.seed = cfg.seed;
    cfg.trace_file = Some(a.traces.clone());
    cfg.schemes = vec![Scheme::Uniform];
    cfg.validate()?;
    let traces = load_config_traces(&cfg)?;
    let graph = load_config_graph(&cfg)?;
    let history: Vec<Vec<f64>> = run_with_traces(&cfg, &traces, &graph)?
        .popularity
        .into_iter()
        .map(|r| r.x_hat)
        .collect();

    let held_out = history.len().saturating_sub(1);
    let initial = a.history.unwrap_or(held_out).min(history.len());
    let mut net = match &a.checkpoint {
        Some(path) => {
            let (params, config) = load_checkpoint(open(path)?)?;
            let config = TrainConfig {
                epochs: cfg.gnn.epochs,
                ..config
            };
            PopularityGnn::from_params(&graph, config, params)?
        }
        None => PopularityGnn::new(&graph, cfg.gnn.clone())?,
    };
    let mut final_mae = None;
    if a.checkpoint.is_none() || a.epochs.is_some() {
        let report = net.train(&history[..initial])?;
        final_mae = report.epoch_mae.last().copied();
    }
    if a.online {
        for t in initial.max(1)..held_out {
            final_mae = Some(net.online_update(&history[..=t])?);
        }
    }
    net.save(create(&a.out)?)?;

    let c = &net.config;
    let mut line = format!(
        "lr={} batch={} epochs={} M={} tau={} blocks={} chunks={}",
        c.learning_rate,
        c.batch_size,
        c.epochs,
        c.cheb_order,
        c.tau,
        c.blocks,
        history.len()
    );
    if let Some(m) = final_mae {
        line += &format!(" final_mae={m:.6}");
    }
    if held_out > 0 {
        let target = &history[held_out];
        let predicted = net.predict(&history[..held_out])?;
        line += &format!(
            " heldout_mae={:.6} ppc_heldout_mae={:.6}",
            mae(&predicted, target),
            mae(&history[held_out - 1], target)
        );
    }
    line += &format!(" out={}", a.out.display());
    write_out(out, &line)
}

/// Parameter file of the `allocate` command. Rates are in Mbit per chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocParamsFile {
    pub eta: f64,
    pub eta_hat: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub epsilon: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_iterations: u32,
    pub stationarity: Stationarity,
    /// Sliding window in chunks.
    pub sw: u32,
    /// Target rate for all representations in Mbit/s; `10 * N` when absent.
    pub r_tar: Option<f64>,
    /// Chunk duration in seconds.
    pub t_d: f64,
    /// `[0.1, 4] x` the fair share when absent.
    pub bounds: Option<RateBounds>,
}

impl Default for AllocParamsFile {
    fn default() -> Self {
        let q = QoeParams::default();
        AllocParamsFile {
            eta: q.eta,
            eta_hat: q.eta_hat,
            mu1: q.mu1,
            mu2: q.mu2,
            mu3: q.mu3,
            epsilon: q.epsilon,
            lambda_min: q.lambda_min,
            lambda_max: q.lambda_max,
            max_iterations: q.max_iterations,
            stationarity: q.stationarity,
            sw: 4,
            r_tar: None,
            t_d: 1.0,
            bounds: None,
        }
    }
}

impl AllocParamsFile {
    pub fn qoe(&self) -> QoeParams {
        QoeParams {
            eta: self.eta,
            eta_hat: self.eta_hat,
            mu1: self.mu1,
            mu2: self.mu2,
            mu3: self.mu3,
            epsilon: self.epsilon,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            max_iterations: self.max_iterations,
            stationarity: self.stationarity,
        }
    }

    pub fn schedule(&self, n_views: usize) -> Result<BudgetSchedule, CliError> {
        let r_tar = self.r_tar.unwrap_or(10.0 * n_views as f64);
        if !(r_tar > 0.0 && self.t_d > 0.0 && self.sw >= 1) {
            return Err(CliError::new(EXIT_CONFIG, "need r_tar > 0, t_d > 0 and sw >= 1"));
        }
        let bounds = self
            .bounds
            .unwrap_or_else(|| RateBounds::proportional(r_tar * self.t_d, n_views));
        bounds.validate()?;
        Ok(BudgetSchedule::new(r_tar, self.t_d, self.sw, n_views, bounds))
    }
}

#[derive(Debug, Default)]
struct ChunkInput {
    p: BTreeMap<usize, f64>,
    p_hat: BTreeMap<usize, f64>,
    x: BTreeMap<usize, f64>,
    x_hat: BTreeMap<usize, f64>,
}

fn read_popularity(path: &Path) -> Result<BTreeMap<u64, ChunkInput>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ci), Some(vi), Some(pi), Some(phi)) = (col("chunk"), col("view"), col("p"), col("p_hat")) else {
        return Err(io_err(path, "header needs chunk, view, p and p_hat columns"));
    };
    let (xi, xhi) = (col("x"), col("x_hat"));
    let mut chunks: BTreeMap<u64, ChunkInput> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| io_err(path, format!("line {line}: {e}")))?;
        let field = |i: usize| -> Result<&str, CliError> {
            rec.get(i)
                .ok_or_else(|| io_err(path, format!("line {line}: missing column {}", i + 1)))
        };
        let num = |i: usize| -> Result<f64, CliError> {
            field(i)?
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| io_err(path, format!("line {line}: bad number in column {}", i + 1)))
        };
        let chunk: u64 = field(ci)?
            .parse()
            .map_err(|_| io_err(path, format!("line {line}: bad chunk")))?;
        let view: usize = field(vi)?
            .parse()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| io_err(path, format!("line {line}: views are numbered from 1")))?;
        let entry = chunks.entry(chunk).or_default();
        entry.p.insert(view, num(pi)?);
        entry.p_hat.insert(view, num(phi)?);
        if let (Some(xi), Some(xhi)) = (xi, xhi) {
            entry.x.insert(view, num(xi)?);
            entry.x_hat.insert(view, num(xhi)?);
        }
    }
    Ok(chunks)
}

fn dense(map: &BTreeMap<usize, f64>, n: usize) -> Vec<f64> {
    (1..=n).map(|v| map.get(&v).copied().unwrap_or(0.0)).collect()
}

pub fn cmd_allocate<W: Write>(a: &AllocateArgs, out: &mut W) -> Result<(), CliError> {
    let params: AllocParamsFile = match &a.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            toml::from_str(&text).map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?
        }
        None => AllocParamsFile::default(),
    };
    let qoe = params.qoe();
    qoe.validate()?;
    let chunks = read_popularity(&a.popularity)?;
    let n = chunks
        .values()
        .flat_map(|c| c.p.keys().chain(c.p_hat.keys()))
        .max()
        .copied()
        .unwrap_or(0);
    let mut schedule = params.schedule(n.max(1))?;
    let bounds = schedule.bounds;
    let mut previous: Option<Vec<f64>> = None;
    let mut allocations: Vec<Allocation> = Vec::new();
    let mut qoe_values = Vec::new();
    for (&j, c) in &chunks {
        let target = schedule.target_bits();
        let (mut p, mut p_hat) = (dense(&c.p, n), dense(&c.p_hat, n));
        let total = p.iter().chain(&p_hat).sum::<f64>();
        post_process(&mut p, &mut p_hat, if total > 0.0 { total } else { 1.0 });
        let mut alloc = match (&previous, a.uniform) {
            (Some(prev), false) => allocate(j, &p, &p_hat, prev, target.bits, &qoe, &bounds)?,
            _ => uniform_allocate(j, target.bits, n, &bounds)?,
        };
        alloc.flags.infeasible |= target.infeasible;
        schedule.record(alloc.total());
        if !c.x.is_empty() {
            let prev = previous.as_deref().unwrap_or(&alloc.constant);
            let q = qoe_total(&alloc.constant, &alloc.switching, prev, &dense(&c.x, n), &dense(&c.x_hat, n), &qoe)?;
            qoe_values.push(q.total);
        }
        previous = Some(alloc.constant.clone());
        allocations.push(alloc);
    }
    write_allocation_csv(create(&a.out)?, &allocations).map_err(|e| io_err(&a.out, e))?;
    let flagged = allocations.iter().filter(|a| a.flags.any()).count();
    let mut line = format!("chunks={} n_views={n} flagged={flagged}", allocations.len());
    if !qoe_values.is_empty() {
        line += &format!(" mean_qoe={:.6}", qoe_values.iter().sum::<f64>() / qoe_values.len() as f64);
    }
    line += &format!(" out={}", a.out.display());
    write_out(out, &line)
}

/// Machine-readable result line of `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub seed: u64,
    pub users: usize,
    pub chunks: u64,
    pub n_views: usize,
    pub qoe_median: BTreeMap<String, Option<f64>>,
    pub qoe_min: BTreeMap<String, Option<f64>>,
    pub precision_median: BTreeMap<String, Option<f64>>,
    pub switch_events: usize,
    pub switch_delay_mean_ms: Option<f64>,
    pub switch_delay_max_ms: Option<f64>,
    pub sessions: usize,
    pub decodable_sessions: usize,
    pub frames_reencoded: u64,
    pub bandwidth_order_violations: BTreeMap<String, usize>,
    pub out: PathBuf,
}

impl RunLine {
    pub fn new(s: &Summary, out: &Path) -> Self {
        RunLine {
            seed: s.seed,
            users: s.n_users,
            chunks: s.n_chunks,
            n_views: s.config.stream.n_views,
            qoe_median: s.qoe.iter().map(|(k, v)| (k.clone(), v.median)).collect(),
            qoe_min: s.qoe.iter().map(|(k, v)| (k.clone(), v.min)).collect(),
            precision_median: s.precision.iter().map(|(k, v)| (k.clone(), v.median)).collect(),
            switch_events: s.switch_events,
            switch_delay_mean_ms: s.switch_delay_ms.mean,
            switch_delay_max_ms: s.switch_delay_ms.max,
            sessions: s.sessions,
            decodable_sessions: s.decodable_sessions,
            frames_reencoded: s.work.frames_reencoded,
            bandwidth_order_violations: s.bandwidth_order_violations.clone(),
            out: out.to_path_buf(),
        }
    }
}

pub fn cmd_run<W: Write>(a: &RunArgs, seed: Option<u64>, out: &mut W) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config, seed)?;
    if !a.scheme.is_empty() {
        cfg.schemes = a.scheme.clone();
    }
    if let Some(v) = a.fps {
        cfg.stream.fps = v;
    }
    if let Some(v) = a.chunk_seconds {
        cfg.stream.chunk_seconds = v;
    }
    if let Some(v) = a.n_views {
        cfg.stream.n_views = v;
    }
    if let Some(v) = a.users {
        cfg.users = v;
    }
    if let Some(v) = a.chunks {
        cfg.chunks = v;
    }
    if let Some(t) = &a.traces {
        cfg.trace_file = Some(t.clone());
    }
    if cfg.dump_dir.is_none() {
        cfg.dump_dir = Some(a.out.join("dumps"));
    }
    cfg.validate()?;
    let traces = load_config_traces(&cfg)?;
    let graph = load_config_graph(&cfg)?;
    let report = run_with_traces(&cfg, &traces, &graph)?;
    emit_report(&report, &a.out)?;
    let line = RunLine::new(&Summary::from_report(&report), &a.out);
    write_out(out, &serde_json::to_string(&line).expect("summary serializes"))
}

pub fn cmd_report<W: Write>(a: &ReportArgs, out: &mut W) -> Result<(), CliError> {
    let path = if a.input.is_dir() {
        a.input.join("summary.json")
    } else {
        a.input.clone()
    };
    let summary = load_summary(open(&path)?).map_err(|e| io_err(&path, e))?;
    if a.json {
        let dir = path.parent().unwrap_or(Path::new("."));
        return write_out(out, &serde_json::to_string(&RunLine::new(&summary, dir)).expect("serializes"));
    }
    let fmt = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.6}"));
    let mut lines = vec![format!(
        "seed={} users={} chunks={} n_views={}",
        summary.seed, summary.n_users, summary.n_chunks, summary.config.stream.n_views
    )];
    for (name, s) in &summary.qoe {
        lines.push(format!(
            "qoe scheme={name} median={} mean={} min={} max={}",
            fmt(s.median),
            fmt(s.mean),
            fmt(s.min),
            fmt(s.max)
        ));
    }
    for (name, s) in &summary.precision {
        lines.push(format!(
            "precision predictor={name} median={} mean={} min={}",
            fmt(s.median),
            fmt(s.mean),
            fmt(s.min)
        ));
    }
    lines.push(format!(
        "delay events={} mean_ms={} max_ms={} startup_mean_ms={}",
        summary.switch_events,
        fmt(summary.switch_delay_ms.mean),
        fmt(summary.switch_delay_ms.max),
        fmt(summary.startup_ms.mean)
    ));
    for (name, b) in &summary.mean_bandwidth_bits {
        lines.push(format!(
            "bandwidth scheme={name} reassembled={:.0} has10={:.0} conventional={:.0} violations={}",
            b[0],
            b[1],
            b[2],
            summary.bandwidth_order_violations.get(name).copied().unwrap_or(0)
        ));
    }
    lines.push(format!(
        "edge sessions={} decodable={} frames_reassembled={} frames_reencoded={}",
        summary.sessions, summary.decodable_sessions, summary.work.frames_reassembled, summary.work.frames_reencoded
    ));
    write_out(out, &lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let code = |e: HarnessError| CliError::from(e).code;
        assert_eq!(code(HarnessError::Config("x".into())), EXIT_CONFIG);
        assert_eq!(code(HarnessError::Io("x".into())), EXIT_IO);
        assert_eq!(code(HarnessError::Parse { line: 2, message: "x".into() }), EXIT_IO);
        assert_eq!(
            code(HarnessError::Popularity(PopularityError::InsufficientHistory { have: 1, need: 10 })),
            EXIT_HISTORY
        );
        assert_eq!(
            code(HarnessError::Decodability {
                user_id: 1,
                detail: "x".into(),
                dump: None
            }),
            EXIT_DECODABILITY
        );
        assert_eq!(CliError::from(AllocError::Params("x".into())).code, EXIT_CONFIG);
    }

    #[test]
    fn allocation_params_default_to_the_qoe_defaults() {
        let p: AllocParamsFile = toml::from_str("sw = 2").unwrap();
        assert_eq!(p.qoe(), QoeParams::default());
        assert_eq!(p.sw, 2);
        let s = p.schedule(4).unwrap();
        assert_eq!(s.r_avg(), 40.0);
        assert!(toml::from_str::<AllocParamsFile>("colour = 1").is_err());
        let bounds: AllocParamsFile =
            toml::from_str("[bounds]\nr_min = 1.0\nr_max = 2.0\nr_hat_min = 1.0\nr_hat_max = 3.0").unwrap();
        assert_eq!(bounds.schedule(2).unwrap().bounds.r_hat_max, 3.0);
    }
}
