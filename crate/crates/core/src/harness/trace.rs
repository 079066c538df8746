use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::edge::SwitchEvent;

/// One user's navigation: the view requested at `join_pts` and the switch
/// requests that follow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewTrace {
    pub user_id: u32,
    pub join_pts: u64,
    pub start_view: usize,
    /// `(request_pts, target_view)`, strictly increasing in PTS, all after `join_pts`.
    pub events: Vec<(u64, usize)>,
}

impl ViewTrace {
    pub fn validate(&self, n_views: usize) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Validation(format!("user {}: {m}", self.user_id)));
        if !(1..=n_views).contains(&self.start_view) {
            return bad(format!("start view {} outside 1..={n_views}", self.start_view));
        }
        let mut last = self.join_pts;
        for &(pts, view) in &self.events {
            if pts <= last {
                return bad(format!("request pts {pts} does not increase (previous {last})"));
            }
            if !(1..=n_views).contains(&view) {
                return bad(format!("target view {view} outside 1..={n_views}"));
            }
            last = pts;
        }
        Ok(())
    }

    pub fn switch_events(&self) -> Vec<SwitchEvent> {
        self.events
            .iter()
            .map(|&(request_pts, target_view)| SwitchEvent {
                user_id: self.user_id,
                request_pts,
                target_view,
            })
            .collect()
    }

    /// Events whose request falls before `until_pts`.
    pub fn events_before(&self, until_pts: u64) -> usize {
        self.events.iter().take_while(|(p, _)| *p < until_pts).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interactivity {
    /// Long dwells with occasional short moves.
    Low,
    /// Short dwells with multi-view sweeps.
    High,
    /// Each user is low or high with equal probability.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellParams {
    /// Mean time between switch requests, in chunks (exponential).
    pub mean_dwell_chunks: f64,
    /// Farthest a single request may move, in views.
    pub max_sweep: usize,
}

/// A stretch of chunks in which every user behaves differently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub start_chunk: u64,
    pub chunks: u64,
    pub dwell: DwellParams,
    /// Where the attention hotspot moves to during the burst (1-based view).
    pub hotspot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BehaviorModel {
    pub kind: Interactivity,
    pub low: DwellParams,
    pub high: DwellParams,
    /// Exponent of the `1 / (1 + distance to hotspot)^s` target weights; 0 is uniform.
    pub zipf_exponent: f64,
    /// Attention hotspot (1-based view); the middle view when absent.
    pub hotspot: Option<usize>,
    pub burst: Option<Burst>,
    /// Users join at a uniformly random PTS within the first this-many chunks.
    pub join_spread_chunks: u64,
}

impl Default for BehaviorModel {
    fn default() -> Self {
        BehaviorModel {
            kind: Interactivity::Mixed,
            low: DwellParams {
                mean_dwell_chunks: 12.0,
                max_sweep: 2,
            },
            high: DwellParams {
                mean_dwell_chunks: 1.5,
                max_sweep: 6,
            },
            zipf_exponent: 1.2,
            hotspot: None,
            burst: None,
            join_spread_chunks: 1,
        }
    }
}

impl BehaviorModel {
    pub fn low() -> Self {
        BehaviorModel {
            kind: Interactivity::Low,
            ..Self::default()
        }
    }

    pub fn high() -> Self {
        BehaviorModel {
            kind: Interactivity::High,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_views: usize) -> Result<(), HarnessError> {
        let mut dwells = vec![self.low, self.high];
        dwells.extend(self.burst.map(|b| b.dwell));
        for d in dwells {
            if !(d.mean_dwell_chunks > 0.0) || d.max_sweep == 0 {
                return Err(HarnessError::Config("dwell and sweep parameters must be positive".into()));
            }
        }
        if !(self.zipf_exponent >= 0.0) {
            return Err(HarnessError::Config("zipf_exponent must be non-negative".into()));
        }
        let hotspots = self.hotspot.into_iter().chain(self.burst.map(|b| b.hotspot));
        for h in hotspots {
            if !(1..=n_views).contains(&h) {
                return Err(HarnessError::Config(format!("hotspot {h} outside 1..={n_views}")));
            }
        }
        if self.join_spread_chunks == 0 {
            return Err(HarnessError::Config("join_spread_chunks must be at least 1".into()));
        }
        Ok(())
    }
}

fn target_weights(n_views: usize, hotspot: usize, exponent: f64) -> Vec<f64> {
    (1..=n_views)
        .map(|v| (1.0 + v.abs_diff(hotspot) as f64).powf(-exponent))
        .collect()
}

/// Synthetic traces from a dwell/sweep process.
///
/// After each dwell (exponential, in frames) the user requests a view within
/// `max_sweep` of the current one, drawn with weights that favor the
/// hotspot. Deterministic for a given seed.
pub fn gen_traces(
    model: &BehaviorModel,
    n_users: usize,
    duration_chunks: u64,
    n_views: usize,
    frames_per_chunk: usize,
    seed: u64,
) -> Result<Vec<ViewTrace>, HarnessError> {
    if n_users == 0 || n_views == 0 {
        return Err(HarnessError::Config("need at least one user and one view".into()));
    }
    model.validate(n_views)?;
    let f = frames_per_chunk as u64;
    let end_pts = duration_chunks * f;
    let hotspot = model.hotspot.unwrap_or(n_views.div_ceil(2));
    let base_weights = target_weights(n_views, hotspot, model.zipf_exponent);
    let burst_weights = model
        .burst
        .map(|b| target_weights(n_views, b.hotspot, model.zipf_exponent));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(n_users);
    for user in 0..n_users {
        let dwell = match model.kind {
            Interactivity::Low => model.low,
            Interactivity::High => model.high,
            Interactivity::Mixed => {
                if rng.gen_bool(0.5) {
                    model.low
                } else {
                    model.high
                }
            }
        };
        let join_pts = rng.gen_range(0..model.join_spread_chunks * f).min(end_pts.saturating_sub(1));
        let start_view = WeightedIndex::new(&base_weights).expect("positive weights").sample(&mut rng) + 1;
        let mut events = Vec::new();
        let mut view = start_view;
        let mut pts = join_pts;
        loop {
            let in_burst = model
                .burst
                .filter(|b| (b.start_chunk * f..(b.start_chunk + b.chunks) * f).contains(&pts));
            let params = in_burst.map_or(dwell, |b| b.dwell);
            let mean_frames = params.mean_dwell_chunks * f as f64;
            let gap = Exp::new(1.0 / mean_frames).expect("positive rate").sample(&mut rng);
            pts += (gap.round() as u64).max(1);
            if pts >= end_pts {
                break;
            }
            let weights = match (in_burst, &burst_weights) {
                (Some(_), Some(w)) => w,
                _ => &base_weights,
            };
            let lo = view.saturating_sub(params.max_sweep).max(1);
            let hi = (view + params.max_sweep).min(n_views);
            let candidates: Vec<usize> = (lo..=hi).filter(|&v| v != view).collect();
            if candidates.is_empty() {
                continue;
            }
            let w: Vec<f64> = candidates.iter().map(|&v| weights[v - 1]).collect();
            view = candidates[WeightedIndex::new(&w).expect("positive weights").sample(&mut rng)];
            events.push((pts, view));
        }
        traces.push(ViewTrace {
            user_id: user as u32,
            join_pts,
            start_view,
            events,
        });
    }
    Ok(traces)
}

/// Mean switch requests per user per chunk of presence.
pub fn switch_rate(traces: &[ViewTrace], duration_chunks: u64, frames_per_chunk: usize) -> f64 {
    let end = duration_chunks * frames_per_chunk as u64;
    let events: usize = traces.iter().map(|t| t.events.len()).sum();
    let presence: f64 = traces
        .iter()
        .map(|t| end.saturating_sub(t.join_pts) as f64 / frames_per_chunk as f64)
        .sum();
    if presence == 0.0 {
        0.0
    } else {
        events as f64 / presence
    }
}

/// Trace CSV `user_id,join_pts,request_pts,target_view`.
///
/// Each user has a join row with empty request and target, a row with
/// `request_pts == join_pts` naming the start view, then one row per switch.
pub fn save_traces<W: Write>(out: W, traces: &[ViewTrace]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(["user_id", "join_pts", "request_pts", "target_view"]).map_err(io)?;
    for t in traces {
        let (user, join) = (t.user_id.to_string(), t.join_pts.to_string());
        w.write_record([user.as_str(), join.as_str(), "", ""]).map_err(io)?;
        w.write_record([user.clone(), join.clone(), join.clone(), t.start_view.to_string()])
            .map_err(io)?;
        for (pts, view) in &t.events {
            w.write_record([user.clone(), join.clone(), pts.to_string(), view.to_string()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn load_traces<R: Read>(input: R, n_views: usize) -> Result<Vec<ViewTrace>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| HarnessError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["user_id", "join_pts", "request_pts", "target_view"] {
        return Err(HarnessError::Parse {
            line: 1,
            message: "expected header user_id,join_pts,request_pts,target_view".into(),
        });
    }
    // user -> (join_pts, start view, events); BTreeMap keeps output ordered by user
    let mut users: BTreeMap<u32, (u64, Option<usize>, Vec<(u64, usize)>)> = BTreeMap::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| HarnessError::Parse {
            line,
            message: e.to_string(),
        })?;
        let parse_err = |m: String| HarnessError::Parse { line, message: m };
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", record.len())));
        }
        let user: u32 = record[0].parse().map_err(|_| parse_err(format!("bad user_id {:?}", &record[0])))?;
        let join: u64 = record[1].parse().map_err(|_| parse_err(format!("bad join_pts {:?}", &record[1])))?;
        let entry = users.entry(user).or_insert((join, None, Vec::new()));
        if entry.0 != join {
            return Err(HarnessError::Validation(format!(
                "line {line}: user {user} joins at {join} and at {}",
                entry.0
            )));
        }
        match (record[2].is_empty(), record[3].is_empty()) {
            (true, true) => continue,
            (false, false) => {}
            _ => return Err(parse_err("request_pts and target_view must both be set or both empty".into())),
        }
        let pts: u64 = record[2].parse().map_err(|_| parse_err(format!("bad request_pts {:?}", &record[2])))?;
        let view: usize = record[3].parse().map_err(|_| parse_err(format!("bad target_view {:?}", &record[3])))?;
        if view == 0 || view > n_views {
            return Err(HarnessError::Validation(format!(
                "line {line}: view {view} outside 1..={n_views}"
            )));
        }
        if pts == join {
            if entry.1.replace(view).is_some() {
                return Err(HarnessError::Validation(format!("line {line}: user {user} has two start views")));
            }
        } else if pts < join {
            return Err(HarnessError::Validation(format!(
                "line {line}: request at {pts} precedes the join at {join}"
            )));
        } else {
            if entry.2.last().is_some_and(|(p, _)| *p >= pts) {
                return Err(HarnessError::Validation(format!(
                    "line {line}: request pts {pts} is not increasing for user {user}"
                )));
            }
            entry.2.push((pts, view));
        }
    }
    users
        .into_iter()
        .map(|(user_id, (join_pts, start, events))| {
            let start_view = start.ok_or_else(|| {
                HarnessError::Validation(format!("user {user_id} has no start view row"))
            })?;
            let t = ViewTrace {
                user_id,
                join_pts,
                start_view,
                events,
            };
            t.validate(n_views)?;
            Ok(t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let traces = gen_traces(&BehaviorModel::default(), 20, 6, 8, 25, 3).unwrap();
        let mut buf = Vec::new();
        save_traces(&mut buf, &traces).unwrap();
        assert_eq!(load_traces(buf.as_slice(), 8).unwrap(), traces);
    }

    #[test]
    fn view_zero_rejected() {
        let csv = "user_id,join_pts,request_pts,target_view\n1,0,,\n1,0,0,0\n";
        assert!(matches!(load_traces(csv.as_bytes(), 4), Err(HarnessError::Validation(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "user_id,join_pts,request_pts,target_view\n1,0,,\n1,0,0,2\n1,x,5,3\n";
        assert!(matches!(
            load_traces(csv.as_bytes(), 4),
            Err(HarnessError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn non_monotone_rejected() {
        let csv = "user_id,join_pts,request_pts,target_view\n1,0,0,2\n1,0,9,3\n1,0,9,1\n";
        assert!(matches!(load_traces(csv.as_bytes(), 4), Err(HarnessError::Validation(_))));
    }

    #[test]
    fn seeded_generation_repeats() {
        let m = BehaviorModel::high();
        assert_eq!(
            gen_traces(&m, 30, 10, 12, 25, 5).unwrap(),
            gen_traces(&m, 30, 10, 12, 25, 5).unwrap()
        );
        assert_ne!(
            gen_traces(&m, 30, 10, 12, 25, 5).unwrap(),
            gen_traces(&m, 30, 10, 12, 25, 6).unwrap()
        );
    }

    #[test]
    fn interactivity_rates() {
        let low = gen_traces(&BehaviorModel::low(), 500, 60, 48, 25, 1).unwrap();
        assert!(switch_rate(&low, 60, 25) < 0.1);
        let high = gen_traces(&BehaviorModel::high(), 500, 60, 48, 25, 1).unwrap();
        assert!(switch_rate(&high, 60, 25) > 0.5);
        for t in low.iter().chain(&high) {
            t.validate(48).unwrap();
        }
    }
}
