//! Edge-side frame reassembly.
//!
//! The edge node keeps a PTS-synchronized buffer of every source stream and,
//! for each connected user, selects already-encoded frames along that user's
//! view path. Nothing is decoded or re-encoded.

mod buffer;
mod session;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::{Frame, FrameKind, Representation};

pub use buffer::SyncBuffer;
pub use session::{EdgeWork, Emitted, Mode, Phase, SessionState, SwitchEvent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdgeError {
    #[error("view {view} outside 1..={n_views}")]
    InvalidView { view: usize, n_views: usize },
    #[error("duplicate frame {representation}{view} at pts {pts}")]
    DuplicateFrame {
        view: usize,
        representation: Representation,
        pts: u64,
    },
    #[error("frame {representation}{view} at pts {pts} is older than the queue floor {floor}")]
    OutOfOrderFrame {
        view: usize,
        representation: Representation,
        pts: u64,
        floor: u64,
    },
    #[error("frame at pts {pts} not yet synchronized (watermark {watermark:?})")]
    StarvedBuffer { pts: u64, watermark: Option<u64> },
    #[error("no frame emitted for user {user_id} after the event at pts {event_pts}")]
    IncompleteLog { user_id: u32, event_pts: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// PTS did not increase by exactly one.
    PtsGap { expected: u64, found: u64 },
    /// A P-frame whose reference (same stream, previous PTS) was not the previous output frame.
    MissingReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamViolation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for StreamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::PtsGap { expected, found } => write!(
                f,
                "frame {}: expected pts {expected}, found {found}",
                self.index
            ),
            ViolationKind::MissingReference => {
                write!(f, "frame {}: P-frame without its reference", self.index)
            }
        }
    }
}

/// Decodability check of an output stream.
pub fn validate_stream(emitted: &[Frame]) -> Result<(), StreamViolation> {
    let mut prev: Option<&Frame> = None;
    for (index, frame) in emitted.iter().enumerate() {
        if let Some(p) = prev {
            if frame.pts != p.pts + 1 {
                return Err(StreamViolation {
                    index,
                    kind: ViolationKind::PtsGap {
                        expected: p.pts + 1,
                        found: frame.pts,
                    },
                });
            }
        }
        if frame.kind == FrameKind::P {
            let chained = prev.is_some_and(|p| {
                p.view == frame.view
                    && p.representation == frame.representation
                    && p.pts + 1 == frame.pts
            });
            if !chained {
                return Err(StreamViolation {
                    index,
                    kind: ViolationKind::MissingReference,
                });
            }
        }
        prev = Some(frame);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchDelay {
    pub user_id: u32,
    pub event_pts: u64,
    pub frames: u64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport {
    pub startup_frames: Option<u64>,
    pub startup_ms: Option<f64>,
    pub switches: Vec<SwitchDelay>,
}

/// Frame-level delays of one session.
///
/// A switch delay runs from the request PTS to the first emitted frame whose
/// view differs from the view on screen at request time. Events that do not
/// change the view, or that are overridden by the next event before any view
/// change, are not reported; neither are events whose change would fall
/// after the end of the log. Delays exclude network and decode latency.
pub fn measure_delays(
    user_id: u32,
    join_pts: u64,
    log: &[Frame],
    events: &[SwitchEvent],
    fps: u32,
) -> Result<DelayReport, EdgeError> {
    let frame_ms = 1000.0 / fps as f64;
    let startup_frames = log.first().map(|f| f.pts - join_pts);
    let mut switches = Vec::new();
    for (k, event) in events.iter().enumerate() {
        let on_screen = log
            .iter()
            .take_while(|f| f.pts <= event.request_pts)
            .last()
            .map(|f| f.view);
        let Some(before) = on_screen else {
            continue;
        };
        if before == event.target_view {
            continue;
        }
        let horizon = events.get(k + 1).map(|next| next.request_pts);
        let changed = log
            .iter()
            .skip_while(|f| f.pts <= event.request_pts)
            .take_while(|f| horizon.is_none_or(|h| f.pts <= h))
            .find(|f| f.view != before);
        match changed {
            Some(f) => {
                let frames = f.pts - event.request_pts;
                switches.push(SwitchDelay {
                    user_id,
                    event_pts: event.request_pts,
                    frames,
                    ms: frames as f64 * frame_ms,
                });
            }
            None if horizon.is_some() => {}
            // the log ends before the change could have been emitted
            None if log.last().is_some_and(|f| f.pts > event.request_pts && f.pts < event.request_pts + 2) => {}
            None => {
                return Err(EdgeError::IncompleteLog {
                    user_id,
                    event_pts: event.request_pts,
                })
            }
        }
    }
    Ok(DelayReport {
        startup_frames,
        startup_ms: startup_frames.map(|f| f as f64 * frame_ms),
        switches,
    })
}

/// Bits delivered to a user, per chunk index.
pub fn per_user_bits(emitted: &[Frame]) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for frame in emitted {
        *out.entry(frame.chunk).or_insert(0) += frame.size_bits;
    }
    out
}

/// Emitted-stream log: `user_id,pts,view,rep,kind,size_bits`.
pub fn write_emitted_csv<W: Write>(out: W, logs: &[(u32, &[Frame])]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "pts", "view", "rep", "kind", "size_bits"])?;
    for (user, frames) in logs {
        for f in frames.iter() {
            w.write_record([
                user.to_string(),
                f.pts.to_string(),
                f.view.to_string(),
                f.representation.to_string(),
                f.kind.to_string(),
                f.size_bits.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Delay report: `user_id,event_pts,switch_delay_ms`.
pub fn write_delay_csv<W: Write>(out: W, delays: &[SwitchDelay]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "event_pts", "switch_delay_ms"])?;
    for d in delays {
        w.write_record([d.user_id.to_string(), d.event_pts.to_string(), format!("{}", d.ms)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(view: usize, rep: Representation, pts: u64, kind: FrameKind) -> Frame {
        Frame {
            view,
            representation: rep,
            chunk: pts / 25,
            pts,
            kind,
            size_bits: 100,
        }
    }

    #[test]
    fn p_frame_from_another_stream_is_undecodable() {
        let s = Representation::Switching;
        let frames = [f(3, s, 4, FrameKind::I), f(4, s, 5, FrameKind::P)];
        assert_eq!(
            validate_stream(&frames),
            Err(StreamViolation {
                index: 1,
                kind: ViolationKind::MissingReference
            })
        );
    }

    #[test]
    fn pts_gap_detected() {
        let c = Representation::Constant;
        let frames = [f(1, c, 0, FrameKind::I), f(1, c, 2, FrameKind::I)];
        assert!(matches!(
            validate_stream(&frames),
            Err(StreamViolation {
                index: 1,
                kind: ViolationKind::PtsGap { expected: 1, found: 2 }
            })
        ));
    }

    #[test]
    fn leading_p_frame_rejected() {
        let frames = [f(1, Representation::Constant, 3, FrameKind::P)];
        assert_eq!(validate_stream(&frames).unwrap_err().index, 0);
        assert!(validate_stream(&[]).is_ok());
    }

    #[test]
    fn bits_grouped_by_chunk() {
        let c = Representation::Constant;
        let frames = [
            f(1, c, 24, FrameKind::P),
            f(1, c, 25, FrameKind::I),
            f(1, c, 26, FrameKind::P),
        ];
        let bits = per_user_bits(&frames);
        assert_eq!(bits.get(&0), Some(&100));
        assert_eq!(bits.get(&1), Some(&200));
    }

    #[test]
    fn delay_counts_frames_after_request() {
        let c = Representation::Constant;
        let s = Representation::Switching;
        let log = [
            f(2, c, 8, FrameKind::P),
            f(2, c, 9, FrameKind::P),
            f(2, s, 10, FrameKind::I),
            f(3, s, 11, FrameKind::I),
        ];
        let ev = SwitchEvent {
            user_id: 4,
            request_pts: 9,
            target_view: 3,
        };
        let report = measure_delays(4, 7, &log, &[ev], 25).unwrap();
        assert_eq!(report.startup_frames, Some(1));
        assert_eq!(report.switches.len(), 1);
        assert_eq!(report.switches[0].frames, 2);
        assert!((report.switches[0].ms - 80.0).abs() < 1e-12);

        let late = SwitchEvent {
            request_pts: 11,
            target_view: 1,
            ..ev
        };
        assert_eq!(
            measure_delays(4, 7, &log, &[late], 25),
            Err(EdgeError::IncompleteLog {
                user_id: 4,
                event_pts: 11
            })
        );
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_delay_csv(
            &mut buf,
            &[SwitchDelay {
                user_id: 1,
                event_pts: 5,
                frames: 1,
                ms: 40.0,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "user_id,event_pts,switch_delay_ms\n1,5,40\n");
        let frames = [f(1, Representation::Constant, 0, FrameKind::I)];
        let mut buf = Vec::new();
        write_emitted_csv(&mut buf, &[(7, &frames[..])]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "user_id,pts,view,rep,kind,size_bits\n7,0,1,C,I,100\n"
        );
    }
}
