use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::stream::{Frame, FrameKind, Representation};

use super::{EdgeError, SyncBuffer};

/// A user's request to move to another view, issued while frame
/// `request_pts` is on screen. It takes effect from the next output frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub user_id: u32,
    pub request_pts: u64,
    pub target_view: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Stable viewing from `C_view`.
    Constant { view: usize },
    /// Moving one view per frame along the staggered I-frame diagonal.
    ///
    /// `origin` is the representation served before the sweep began and is
    /// cleared by the first frame emitted in this mode; it lets a cancelled
    /// sweep return to where it came from.
    Sweeping {
        current: usize,
        target: usize,
        direction: i8,
        origin: Option<Representation>,
    },
    /// Serving `S_view` until the next chunk boundary, where `C_view` has its I-frame.
    ResyncS { view: usize },
}

impl Mode {
    pub fn current_view(&self) -> usize {
        match *self {
            Mode::Constant { view } | Mode::ResyncS { view } => view,
            Mode::Sweeping { current, .. } => current,
        }
    }
}

/// Mode a frame was emitted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Constant,
    Sweep,
    Resync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emitted {
    pub frame: Frame,
    pub phase: Phase,
}

/// Per-session work counters used as a compute-cost proxy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeWork {
    pub frames_reassembled: u64,
    pub buffer_lookups: u64,
    /// Frames decoded and re-encoded at the edge. Reassembly never does this.
    pub frames_reencoded: u64,
}

impl std::ops::AddAssign for EdgeWork {
    fn add_assign(&mut self, rhs: Self) {
        self.frames_reassembled += rhs.frames_reassembled;
        self.buffer_lookups += rhs.buffer_lookups;
        self.frames_reencoded += rhs.frames_reencoded;
    }
}

/// Reassembly state of one user on the edge node.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub user_id: u32,
    mode: Mode,
    next_output_pts: u64,
    join_pts: u64,
    frames_per_chunk: u64,
    n_views: usize,
    pending: VecDeque<SwitchEvent>,
    log: Vec<Emitted>,
    work: EdgeWork,
}

impl SessionState {
    /// New session for a user who asked to watch `view` at `join_pts`.
    ///
    /// The user enters through `S_view` at the first I-frame after the join
    /// request and moves to `C_view` at the next chunk boundary.
    pub fn join(
        user_id: u32,
        view: usize,
        join_pts: u64,
        frames_per_chunk: usize,
        n_views: usize,
    ) -> Result<Self, EdgeError> {
        check_view(view, n_views)?;
        Ok(SessionState {
            user_id,
            mode: Mode::ResyncS { view },
            next_output_pts: join_pts + 1,
            join_pts,
            frames_per_chunk: frames_per_chunk as u64,
            n_views,
            pending: VecDeque::new(),
            log: Vec::new(),
            work: EdgeWork::default(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn current_view(&self) -> usize {
        self.mode.current_view()
    }

    pub fn next_output_pts(&self) -> u64 {
        self.next_output_pts
    }

    pub fn join_pts(&self) -> u64 {
        self.join_pts
    }

    pub fn log(&self) -> &[Emitted] {
        &self.log
    }

    pub fn frames(&self) -> Vec<Frame> {
        self.log.iter().map(|e| e.frame).collect()
    }

    pub fn work(&self) -> EdgeWork {
        self.work
    }

    /// Queue events to be applied as output reaches them.
    pub fn schedule<I: IntoIterator<Item = SwitchEvent>>(&mut self, events: I) {
        self.pending.extend(events);
    }

    pub fn handle_event(&mut self, event: SwitchEvent) -> Result<(), EdgeError> {
        check_view(event.target_view, self.n_views)?;
        let current = self.current_view();
        if event.target_view == current {
            if let Mode::Sweeping { origin, .. } = self.mode {
                self.mode = match origin {
                    Some(Representation::Constant) => Mode::Constant { view: current },
                    _ => Mode::ResyncS { view: current },
                };
            }
            return Ok(());
        }
        let direction = if event.target_view > current { 1 } else { -1 };
        let origin = match self.mode {
            Mode::Constant { .. } => Some(Representation::Constant),
            Mode::ResyncS { .. } => Some(Representation::Switching),
            Mode::Sweeping { origin, .. } => origin,
        };
        self.mode = Mode::Sweeping {
            current,
            target: event.target_view,
            direction,
            origin,
        };
        Ok(())
    }

    fn fetch<'b>(
        &mut self,
        buffer: &'b SyncBuffer,
        view: usize,
        representation: Representation,
        pts: u64,
    ) -> Result<&'b Frame, EdgeError> {
        self.work.buffer_lookups += 1;
        buffer
            .get(view, representation, pts)
            .ok_or(EdgeError::StarvedBuffer {
                pts,
                watermark: buffer.watermark(),
            })
    }

    /// Emits the frame at `next_output_pts` and advances by one.
    ///
    /// The only exception is the very first frame of a session: when the
    /// joined view's `S` stream has a P-frame there, output starts one frame
    /// later on its I-frame. On `StarvedBuffer` the state is left untouched.
    pub fn next_output_frame(&mut self, buffer: &SyncBuffer) -> Result<Frame, EdgeError> {
        let mut pts = self.next_output_pts;
        let f = self.frames_per_chunk;
        let (frame, phase, mode) = match self.mode {
            Mode::Constant { view } => {
                let frame = *self.fetch(buffer, view, Representation::Constant, pts)?;
                (frame, Phase::Constant, self.mode)
            }
            Mode::ResyncS { view } => {
                if self.log.is_empty() && pts % f != 0 {
                    let s = *self.fetch(buffer, view, Representation::Switching, pts)?;
                    if s.kind == FrameKind::P {
                        pts += 1;
                    }
                }
                if pts % f == 0 {
                    let frame = *self.fetch(buffer, view, Representation::Constant, pts)?;
                    (frame, Phase::Constant, Mode::Constant { view })
                } else {
                    let frame = *self.fetch(buffer, view, Representation::Switching, pts)?;
                    (frame, Phase::Resync, self.mode)
                }
            }
            Mode::Sweeping {
                current,
                target,
                direction,
                ..
            } => {
                let next = (current as i64 + direction as i64) as usize;
                let candidate = *self.fetch(buffer, next, Representation::Switching, pts)?;
                if candidate.kind == FrameKind::I {
                    let mode = if next == target {
                        Mode::ResyncS { view: next }
                    } else {
                        Mode::Sweeping {
                            current: next,
                            target,
                            direction,
                            origin: None,
                        }
                    };
                    (candidate, Phase::Sweep, mode)
                } else {
                    // adjacent S streams never share a P position, so this is an I
                    let hold = *self.fetch(buffer, current, Representation::Switching, pts)?;
                    debug_assert_eq!(hold.kind, FrameKind::I);
                    let mode = Mode::Sweeping {
                        current,
                        target,
                        direction,
                        origin: None,
                    };
                    (hold, Phase::Sweep, mode)
                }
            }
        };
        self.mode = mode;
        self.next_output_pts = pts + 1;
        self.work.frames_reassembled += 1;
        self.log.push(Emitted { frame, phase });
        Ok(frame)
    }

    /// Applies due events and emits frames until `next_output_pts` passes
    /// `until_pts` or the buffer runs dry. Returns the number of frames emitted.
    pub fn advance_to(&mut self, buffer: &SyncBuffer, until_pts: u64) -> Result<usize, EdgeError> {
        let mut emitted = 0;
        while self.next_output_pts <= until_pts {
            while let Some(event) = self.pending.front() {
                if event.request_pts >= self.next_output_pts {
                    break;
                }
                let event = self.pending.pop_front().expect("front exists");
                self.handle_event(event)?;
            }
            match self.next_output_frame(buffer) {
                Ok(_) => emitted += 1,
                Err(EdgeError::StarvedBuffer { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        Ok(emitted)
    }
}

fn check_view(view: usize, n_views: usize) -> Result<(), EdgeError> {
    if view == 0 || view > n_views {
        Err(EdgeError::InvalidView { view, n_views })
    } else {
        Ok(())
    }
}
