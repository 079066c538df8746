use std::collections::BTreeMap;
use std::fs::File;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bandwidth::{baseline_bandwidth, BandwidthRow, BandwidthScheme};
use super::config::{ExperimentConfig, Scheme};
use super::trace::{gen_traces, load_traces, ViewTrace};
use super::HarnessError;
use crate::alloc::{allocate, qoe_total, uniform_allocate, Allocation, BudgetSchedule};
use crate::edge::{measure_delays, validate_stream, write_emitted_csv, EdgeWork, SessionState, SwitchDelay, SyncBuffer};
use crate::popularity::{
    compute_actual_popularity, precision, predict_popularity, ChunkPopularity, PopularityGnn, PopularityRecord,
    PredictorKind, ViewGraph,
};
use crate::stream::{generate_chunk_streams, ChunkBudgets, Frame, FrameKind, StreamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartupDelay {
    pub user_id: u32,
    pub frames: u64,
    pub ms: f64,
}

/// Everything measured in one closed-loop run. Series are indexed by chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n_users: usize,
    pub n_chunks: u64,
    /// Predictor name to per-chunk precision.
    pub precision: BTreeMap<String, Vec<f64>>,
    /// Scheme name to per-chunk QoE under measured popularity.
    pub qoe: BTreeMap<String, Vec<f64>>,
    pub allocations: BTreeMap<String, Vec<Allocation>>,
    /// Measured and predicted popularity of the combined predictor.
    pub popularity: Vec<PopularityRecord>,
    pub bandwidth: BTreeMap<String, Vec<BandwidthRow>>,
    pub delays: Vec<SwitchDelay>,
    pub startup: Vec<StartupDelay>,
    pub sessions: usize,
    pub decodable_sessions: usize,
    pub work: EdgeWork,
    /// Per-epoch MAE of the switching network's initial training.
    pub train_mae: Vec<f64>,
}

impl ExperimentReport {
    pub fn schemes(&self) -> Vec<Scheme> {
        self.config.schemes.clone()
    }
}

const PREDICTORS: [PredictorKind; 3] = [PredictorKind::Combined, PredictorKind::PpcOnly, PredictorKind::GnnOnly];

fn predictor_for(scheme: Scheme) -> Option<PredictorKind> {
    match scheme {
        Scheme::Adaptive => Some(PredictorKind::Combined),
        Scheme::PpcOnly => Some(PredictorKind::PpcOnly),
        Scheme::GnnOnly => Some(PredictorKind::GnnOnly),
        Scheme::Uniform => None,
    }
}

struct SchemeState {
    scheme: Scheme,
    schedule: BudgetSchedule,
    buffer: SyncBuffer,
    sessions: Vec<SessionState>,
    previous: Option<Vec<f64>>,
    allocations: Vec<Allocation>,
    qoe: Vec<f64>,
    bandwidth: Vec<BandwidthRow>,
}

/// Networks for constant and switching popularity, trained once enough
/// history has been measured and stepped online afterwards.
struct Predictors {
    constant: PopularityGnn,
    switching: PopularityGnn,
    trained: bool,
    train_after: usize,
    online: bool,
    train_mae: Vec<f64>,
}

impl Predictors {
    fn observe(&mut self, hist_c: &[Vec<f64>], hist_s: &[Vec<f64>]) -> Result<(), HarnessError> {
        if hist_s.len() == self.train_after {
            self.constant.train(hist_c)?;
            self.train_mae = self.switching.train(hist_s)?.epoch_mae;
            self.trained = true;
        } else if self.trained && self.online {
            self.constant.online_update(hist_c)?;
            self.switching.online_update(hist_s)?;
        }
        Ok(())
    }

    /// `(p, p̂)` for the next chunk from each predictor.
    fn predict(
        &self,
        previous: Option<&ChunkPopularity>,
        hist_c: &[Vec<f64>],
        hist_s: &[Vec<f64>],
        n: usize,
    ) -> Result<BTreeMap<PredictorKind, (Vec<f64>, Vec<f64>)>, HarnessError> {
        let Some(prev) = previous else {
            let cold = (vec![1.0 / n as f64; n], vec![0.0; n]);
            return Ok(PREDICTORS.iter().map(|&k| (k, cold.clone())).collect());
        };
        let (gc, gs) = if self.trained {
            (Some(self.constant.predict(hist_c)?), Some(self.switching.predict(hist_s)?))
        } else {
            (None, None)
        };
        let mut out = BTreeMap::new();
        out.insert(PredictorKind::PpcOnly, predict_popularity(prev, None, None));
        out.insert(PredictorKind::Combined, predict_popularity(prev, None, gs.clone()));
        out.insert(PredictorKind::GnnOnly, predict_popularity(prev, gc, gs));
        Ok(out)
    }
}

fn to_bits(mbit: &[f64]) -> Vec<u64> {
    mbit.iter().map(|r| (r * 1e6).round() as u64).collect()
}

/// Traces named by the config: the trace file if set, generated otherwise.
pub fn load_config_traces(cfg: &ExperimentConfig) -> Result<Vec<ViewTrace>, HarnessError> {
    match &cfg.trace_file {
        Some(path) => {
            let f = File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            load_traces(f, cfg.stream.n_views)
        }
        None => gen_traces(
            &cfg.behavior,
            cfg.users,
            cfg.chunks,
            cfg.stream.n_views,
            cfg.stream.frames_per_chunk(),
            cfg.seed,
        ),
    }
}

pub fn load_config_graph(cfg: &ExperimentConfig) -> Result<ViewGraph, HarnessError> {
    match &cfg.graph_file {
        Some(path) => {
            let f = File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            Ok(ViewGraph::from_edge_csv(f, cfg.stream.n_views)?)
        }
        None => Ok(ViewGraph::path(cfg.stream.n_views)),
    }
}

/// Closed loop over `cfg.chunks` chunks with the configured traces.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let traces = load_config_traces(cfg)?;
    let graph = load_config_graph(cfg)?;
    run_with_traces(cfg, &traces, &graph)
}

/// Closed loop: for each chunk, predict popularity from what was measured
/// up to the previous chunk, allocate, generate the chunk's streams, advance
/// every session through it and measure.
///
/// Every scheme runs its own streams and sessions over the same traces; the
/// first scheme's sessions supply the measured popularity, which does not
/// depend on rates.
pub fn run_with_traces(
    cfg: &ExperimentConfig,
    traces: &[ViewTrace],
    graph: &ViewGraph,
) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let stream = &cfg.stream;
    let n = stream.n_views;
    let f = stream.frames_per_chunk();
    for t in traces {
        t.validate(n)?;
    }
    if graph.n_views() != n {
        return Err(HarnessError::Config(format!("graph has {} views, stream {n}", graph.n_views())));
    }
    let bounds = cfg.budget.bounds(stream);
    let r_avg = cfg.budget.r_avg(stream);

    let mut states: Vec<SchemeState> = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let sessions = traces
                .iter()
                .map(|t| {
                    let mut s = SessionState::join(t.user_id, t.start_view, t.join_pts, f, n)?;
                    s.schedule(t.switch_events());
                    Ok(s)
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            Ok(SchemeState {
                scheme,
                schedule: BudgetSchedule::new(r_avg, 1.0, cfg.budget.sliding_window, n, bounds),
                buffer: SyncBuffer::for_config(stream),
                sessions,
                previous: None,
                allocations: Vec::new(),
                qoe: Vec::new(),
                bandwidth: Vec::new(),
            })
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut gnn_cfg = cfg.gnn.clone();
    gnn_cfg.seed ^= cfg.seed;
    let mut predictors = Predictors {
        constant: PopularityGnn::new(graph, gnn_cfg.clone())?,
        switching: PopularityGnn::new(graph, gnn_cfg)?,
        trained: false,
        train_after: cfg.train_after(),
        online: cfg.online_updates,
        train_mae: Vec::new(),
    };

    let mut actuals: Vec<ChunkPopularity> = Vec::new();
    let mut hist_c: Vec<Vec<f64>> = Vec::new();
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut precision_series: BTreeMap<PredictorKind, Vec<f64>> = PREDICTORS.iter().map(|&k| (k, Vec::new())).collect();
    let mut popularity = Vec::new();

    for j in 0..cfg.chunks {
        let predictions = predictors.predict(actuals.last(), &hist_c, &hist_s, n)?;
        let end_pts = (j + 1) * f as u64 - 1;
        let mut measured: Option<ChunkPopularity> = None;
        for state in states.iter_mut() {
            let target = state.schedule.target_bits();
            let mut alloc = match (j, predictor_for(state.scheme)) {
                (0, _) | (_, None) => uniform_allocate(j, target.bits, n, &bounds)?,
                (_, Some(kind)) => {
                    let (p, p_hat) = &predictions[&kind];
                    let previous = state.previous.as_ref().expect("set after chunk 0");
                    allocate(j, p, p_hat, previous, target.bits, &cfg.qoe, &bounds)?
                }
            };
            alloc.flags.infeasible = target.infeasible;
            state.schedule.record(alloc.total());
            let budgets = ChunkBudgets {
                chunk: j,
                constant: to_bits(&alloc.constant),
                switching: to_bits(&alloc.switching),
            };
            let streams = generate_chunk_streams(stream, &budgets)?;
            state.buffer.prune_below(j * f as u64);
            state.buffer.push_all(streams.frames())?;

            let starts: Vec<usize> = state.sessions.iter().map(|s| s.log().len()).collect();
            let buffer = &state.buffer;
            state
                .sessions
                .par_iter_mut()
                .map(|s| s.advance_to(buffer, end_pts).map(|_| ()))
                .collect::<Result<Vec<()>, _>>()?;

            let mut chunk_frames: Vec<Frame> = Vec::new();
            for (s, &start) in state.sessions.iter().zip(&starts) {
                let log = s.log();
                // resume from the last I-frame so the window is self-contained
                let from = log[..start]
                    .iter()
                    .rposition(|e| e.frame.kind == FrameKind::I)
                    .unwrap_or(0);
                let window: Vec<Frame> = log[from..].iter().map(|e| e.frame).collect();
                if let Err(v) = validate_stream(&window) {
                    return Err(decodability_failure(cfg, state.scheme, s, v.to_string()));
                }
                let new = &log[start..];
                if let Some(first) = new.first() {
                    let emitted: u64 = new.iter().map(|e| e.frame.size_bits).sum();
                    let view = first.frame.view;
                    state.bandwidth.push(BandwidthRow {
                        chunk: j,
                        user_id: s.user_id,
                        reassembled: baseline_bandwidth(BandwidthScheme::Reassembled, &budgets.constant, view, emitted),
                        has10: baseline_bandwidth(BandwidthScheme::Has10, &budgets.constant, view, emitted),
                        conventional: baseline_bandwidth(BandwidthScheme::Conventional, &budgets.constant, view, emitted),
                    });
                }
                if measured.is_none() {
                    chunk_frames.extend(new.iter().map(|e| e.frame));
                }
            }
            let actual = measured
                .get_or_insert_with(|| {
                    let mut pop = compute_actual_popularity(chunk_frames.iter().filter(|fr| fr.chunk == j), n, j + 1);
                    pop.pop().expect("one entry per chunk")
                })
                .clone();

            let previous = state.previous.clone().unwrap_or_else(|| alloc.constant.clone());
            let q = qoe_total(
                &alloc.constant,
                &alloc.switching,
                &previous,
                &actual.constant,
                &actual.switching,
                &cfg.qoe,
            )?;
            state.qoe.push(q.total);
            state.previous = Some(alloc.constant.clone());
            state.allocations.push(alloc);
        }

        let actual = measured.expect("at least one scheme");
        for (&kind, series) in precision_series.iter_mut() {
            let (p, p_hat) = &predictions[&kind];
            series.push(precision(p, p_hat, &actual.constant, &actual.switching)?);
        }
        let (p, p_hat) = predictions[&PredictorKind::Combined].clone();
        popularity.push(PopularityRecord {
            chunk: j,
            x: actual.constant.clone(),
            x_hat: actual.switching.clone(),
            precision: *precision_series[&PredictorKind::Combined].last().expect("pushed"),
            p,
            p_hat,
        });
        hist_c.push(actual.constant.clone());
        hist_s.push(actual.switching.clone());
        actuals.push(actual);
        predictors.observe(&hist_c, &hist_s)?;
    }

    let reference = &states[0];
    let mut delays = Vec::new();
    let mut startup = Vec::new();
    let mut work = EdgeWork::default();
    for (s, t) in reference.sessions.iter().zip(traces) {
        work += s.work();
        let frames = s.frames();
        let Some(last) = frames.last() else { continue };
        let events: Vec<_> = t
            .switch_events()
            .into_iter()
            .filter(|e| e.request_pts < last.pts)
            .collect();
        let report = measure_delays(t.user_id, t.join_pts, &frames, &events, stream.fps)?;
        delays.extend(report.switches);
        if let (Some(frames), Some(ms)) = (report.startup_frames, report.startup_ms) {
            startup.push(StartupDelay {
                user_id: t.user_id,
                frames,
                ms,
            });
        }
    }
    let sessions = reference.sessions.len();

    let mut qoe = BTreeMap::new();
    let mut allocations = BTreeMap::new();
    let mut bandwidth = BTreeMap::new();
    for state in states {
        let name = state.scheme.name().to_string();
        qoe.insert(name.clone(), state.qoe);
        allocations.insert(name.clone(), state.allocations);
        bandwidth.insert(name, state.bandwidth);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        n_users: traces.len(),
        n_chunks: cfg.chunks,
        precision: precision_series
            .into_iter()
            .map(|(k, v)| (k.name().to_string(), v))
            .collect(),
        qoe,
        allocations,
        popularity,
        bandwidth,
        delays,
        startup,
        sessions,
        decodable_sessions: sessions,
        work,
        train_mae: predictors.train_mae,
    })
}

fn decodability_failure(cfg: &ExperimentConfig, scheme: Scheme, session: &SessionState, detail: String) -> HarnessError {
    let dump = cfg.dump_dir.as_ref().and_then(|dir| {
        std::fs::create_dir_all(dir).ok()?;
        let path = dir.join(format!("undecodable_{}_user{}.csv", scheme.name(), session.user_id));
        let frames = session.frames();
        let file = File::create(&path).ok()?;
        write_emitted_csv(file, &[(session.user_id, &frames[..])]).ok()?;
        Some(path)
    });
    HarnessError::Decodability {
        user_id: session.user_id,
        detail,
        dump,
    }
}

/// Reassembly-only run used to measure edge cost.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRun {
    pub users: usize,
    pub frames_emitted: u64,
    pub work: EdgeWork,
    /// Wall time spent inside the sessions, excluding stream generation.
    pub session_time: Duration,
}

/// Advances every session through `chunks` chunks of uniformly allocated
/// streams on one thread and times only the reassembly.
pub fn run_edge_only(
    stream: &StreamConfig,
    traces: &[ViewTrace],
    chunks: u64,
    bits_per_representation: u64,
) -> Result<EdgeRun, HarnessError> {
    stream.validate()?;
    let n = stream.n_views;
    let f = stream.frames_per_chunk();
    let mut sessions = traces
        .iter()
        .map(|t| {
            t.validate(n)?;
            let mut s = SessionState::join(t.user_id, t.start_view, t.join_pts, f, n)?;
            s.schedule(t.switch_events());
            Ok(s)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut buffer = SyncBuffer::for_config(stream);
    let mut session_time = Duration::ZERO;
    for j in 0..chunks {
        let budgets = ChunkBudgets {
            chunk: j,
            constant: vec![bits_per_representation; n],
            switching: vec![bits_per_representation; n],
        };
        let streams = generate_chunk_streams(stream, &budgets)?;
        buffer.prune_below(j * f as u64);
        buffer.push_all(streams.frames())?;
        let end = (j + 1) * f as u64 - 1;
        let start = Instant::now();
        for s in sessions.iter_mut() {
            s.advance_to(&buffer, end)?;
        }
        session_time += start.elapsed();
    }
    let mut work = EdgeWork::default();
    for s in &sessions {
        work += s.work();
    }
    Ok(EdgeRun {
        users: sessions.len(),
        frames_emitted: sessions.iter().map(|s| s.log().len() as u64).sum(),
        work,
        session_time,
    })
}
