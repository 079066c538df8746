use std::collections::VecDeque;

use crate::stream::{Frame, Representation, StreamConfig};

use super::EdgeError;

#[derive(Debug, Clone, Default)]
struct Queue {
    /// PTS of `slots[0]`.
    base: u64,
    slots: VecDeque<Option<Frame>>,
    /// Highest PTS such that every PTS from the buffer origin up to it is present.
    frontier: Option<u64>,
}

impl Queue {
    fn get(&self, pts: u64) -> Option<&Frame> {
        let idx = pts.checked_sub(self.base)? as usize;
        self.slots.get(idx).and_then(|s| s.as_ref())
    }

    fn advance_frontier(&mut self, origin: u64) {
        let mut next = self.frontier.map_or(origin, |f| f + 1);
        while self.get(next).is_some() {
            self.frontier = Some(next);
            next += 1;
        }
    }
}

/// PTS-synchronized frame store shared by every session on an edge node.
///
/// One queue per (view, representation). Frames may arrive in any order
/// within a queue; the watermark is the highest PTS for which all queues are
/// complete from the origin, and sessions only read at or below it.
#[derive(Debug, Clone)]
pub struct SyncBuffer {
    n_views: usize,
    origin: u64,
    queues: Vec<Queue>,
    watermark: Option<u64>,
}

impl SyncBuffer {
    pub fn new(n_views: usize) -> Self {
        Self::with_origin(n_views, 0)
    }

    pub fn for_config(cfg: &StreamConfig) -> Self {
        Self::new(cfg.n_views)
    }

    /// Buffer whose first expected PTS is `origin`.
    pub fn with_origin(n_views: usize, origin: u64) -> Self {
        let queues = (0..2 * n_views)
            .map(|_| Queue {
                base: origin,
                ..Default::default()
            })
            .collect();
        SyncBuffer {
            n_views,
            origin,
            queues,
            watermark: None,
        }
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    fn slot(&self, view: usize, representation: Representation) -> usize {
        let rep = match representation {
            Representation::Constant => 0,
            Representation::Switching => 1,
        };
        (view - 1) * 2 + rep
    }

    pub fn watermark(&self) -> Option<u64> {
        self.watermark
    }

    pub fn push_frame(&mut self, frame: Frame) -> Result<(), EdgeError> {
        if frame.view == 0 || frame.view > self.n_views {
            return Err(EdgeError::InvalidView {
                view: frame.view,
                n_views: self.n_views,
            });
        }
        let origin = self.origin;
        let slot = self.slot(frame.view, frame.representation);
        let queue = &mut self.queues[slot];
        if frame.pts < queue.base {
            return Err(EdgeError::OutOfOrderFrame {
                view: frame.view,
                representation: frame.representation,
                pts: frame.pts,
                floor: queue.base,
            });
        }
        let idx = (frame.pts - queue.base) as usize;
        if idx >= queue.slots.len() {
            queue.slots.resize(idx + 1, None);
        }
        if queue.slots[idx].is_some() {
            return Err(EdgeError::DuplicateFrame {
                view: frame.view,
                representation: frame.representation,
                pts: frame.pts,
            });
        }
        queue.slots[idx] = Some(frame);
        queue.advance_frontier(origin);
        self.recompute_watermark();
        Ok(())
    }

    pub fn push_all<'a, I>(&mut self, frames: I) -> Result<(), EdgeError>
    where
        I: IntoIterator<Item = &'a Frame>,
    {
        for frame in frames {
            self.push_frame(*frame)?;
        }
        Ok(())
    }

    fn recompute_watermark(&mut self) {
        self.watermark = self
            .queues
            .iter()
            .map(|q| q.frontier)
            .min()
            .flatten();
    }

    /// Frame readable by sessions, i.e. present and at or below the watermark.
    pub fn get(&self, view: usize, representation: Representation, pts: u64) -> Option<&Frame> {
        if view == 0 || view > self.n_views || self.watermark.is_none_or(|w| pts > w) {
            return None;
        }
        self.queues[self.slot(view, representation)].get(pts)
    }

    /// Drops frames with PTS below `pts`; later pushes below it are rejected
    /// as out of order.
    pub fn prune_below(&mut self, pts: u64) {
        // never past the watermark, or frontiers could no longer advance
        let pts = pts.min(self.watermark.map_or(self.origin, |w| w + 1));
        for queue in &mut self.queues {
            while queue.base < pts {
                if queue.slots.pop_front().is_none() {
                    queue.base = pts;
                    break;
                }
                queue.base += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::FrameKind;

    fn frame(view: usize, representation: Representation, pts: u64) -> Frame {
        Frame {
            view,
            representation,
            chunk: pts / 25,
            pts,
            kind: FrameKind::P,
            size_bits: 10,
        }
    }

    #[test]
    fn watermark_waits_for_every_queue() {
        let mut buf = SyncBuffer::new(1);
        buf.push_frame(frame(1, Representation::Switching, 0)).unwrap();
        assert_eq!(buf.watermark(), None);
        assert!(buf.get(1, Representation::Switching, 0).is_none());
        buf.push_frame(frame(1, Representation::Constant, 0)).unwrap();
        assert_eq!(buf.watermark(), Some(0));
        assert!(buf.get(1, Representation::Switching, 0).is_some());
    }

    #[test]
    fn watermark_is_min_over_queues() {
        let mut buf = SyncBuffer::new(2);
        for view in 1..=2 {
            for rep in [Representation::Constant, Representation::Switching] {
                let last = if view == 2 && rep == Representation::Switching { 7 } else { 10 };
                for pts in 0..=last {
                    buf.push_frame(frame(view, rep, pts)).unwrap();
                }
            }
        }
        assert_eq!(buf.watermark(), Some(7));
        assert!(buf.get(1, Representation::Constant, 8).is_none());
    }

    #[test]
    fn gaps_hold_back_the_frontier() {
        let mut buf = SyncBuffer::new(1);
        for rep in [Representation::Constant, Representation::Switching] {
            for pts in [0, 1, 3] {
                buf.push_frame(frame(1, rep, pts)).unwrap();
            }
        }
        assert_eq!(buf.watermark(), Some(1));
        buf.push_frame(frame(1, Representation::Constant, 2)).unwrap();
        buf.push_frame(frame(1, Representation::Switching, 2)).unwrap();
        assert_eq!(buf.watermark(), Some(3));
    }

    #[test]
    fn duplicate_and_regression_rejected() {
        let mut buf = SyncBuffer::new(1);
        buf.push_frame(frame(1, Representation::Constant, 0)).unwrap();
        assert!(matches!(
            buf.push_frame(frame(1, Representation::Constant, 0)),
            Err(EdgeError::DuplicateFrame { pts: 0, .. })
        ));
        buf.push_frame(frame(1, Representation::Constant, 1)).unwrap();
        buf.push_frame(frame(1, Representation::Switching, 0)).unwrap();
        buf.prune_below(1);
        assert!(matches!(
            buf.push_frame(frame(1, Representation::Constant, 0)),
            Err(EdgeError::OutOfOrderFrame { pts: 0, floor: 1, .. })
        ));
        assert!(matches!(
            buf.push_frame(frame(3, Representation::Constant, 5)),
            Err(EdgeError::InvalidView { .. })
        ));
    }

    #[test]
    fn prune_keeps_later_frames_readable() {
        let mut buf = SyncBuffer::new(1);
        for rep in [Representation::Constant, Representation::Switching] {
            for pts in 0..50 {
                buf.push_frame(frame(1, rep, pts)).unwrap();
            }
        }
        buf.prune_below(25);
        assert!(buf.get(1, Representation::Constant, 24).is_none());
        assert_eq!(buf.get(1, Representation::Constant, 30).unwrap().pts, 30);
        assert_eq!(buf.watermark(), Some(49));
        buf.push_frame(frame(1, Representation::Constant, 50)).unwrap();
        buf.push_frame(frame(1, Representation::Switching, 50)).unwrap();
        assert_eq!(buf.watermark(), Some(50));
    }
}
