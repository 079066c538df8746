//! Synthetic multiview source streams.
//!
//! Every camera view is encoded twice: a view-constant representation `C`
//! with a long GoP for stable viewing and a view-switching representation
//! `S` with GoP 2 for random access while the user sweeps across views.
//! I-frames of adjacent `S` streams are staggered by view parity so that a
//! sweep moving one view per frame keeps landing on I-frames.
//!
//! No real encoding happens here: a chunk's bit budget is spread over its
//! frames with a fixed I:P size ratio, keeping integer bit accounting exact.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StreamError {
    #[error("invalid stream configuration: {0}")]
    Config(String),
    #[error("view {view} outside 1..={n_views}")]
    InvalidView { view: usize, n_views: usize },
    #[error("budget of {budget} bits cannot cover {frames} frames")]
    BudgetTooSmall { budget: u64, frames: usize },
    #[error("allocation for chunk {chunk} is missing an entry for view {view}")]
    IncompleteAllocation { chunk: u64, view: usize },
}

/// Which of the two encodings of a view a frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Representation {
    /// View-switching representation (`S`, GoP 2).
    Switching,
    /// View-constant representation (`C`, long GoP).
    Constant,
}

impl Representation {
    pub fn code(self) -> &'static str {
        match self {
            Representation::Switching => "S",
            Representation::Constant => "C",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "S" => Some(Representation::Switching),
            "C" => Some(Representation::Constant),
            _ => None,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    I,
    P,
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameKind::I => f.write_str("I"),
            FrameKind::P => f.write_str("P"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreamConfig {
    pub n_views: usize,
    pub fps: u32,
    /// Chunk duration in seconds.
    pub chunk_seconds: f64,
    /// GoP size of the view-constant representation.
    pub gop_constant: usize,
    /// GoP size of the view-switching representation.
    pub gop_switching: usize,
    /// Size of an I-frame relative to a P-frame of the same chunk.
    pub i_to_p_ratio: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            n_views: 23,
            fps: 25,
            chunk_seconds: 1.0,
            gop_constant: 25,
            gop_switching: 2,
            i_to_p_ratio: 4,
        }
    }
}

impl StreamConfig {
    pub fn with_views(n_views: usize) -> Self {
        StreamConfig {
            n_views,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        if self.n_views == 0 {
            return Err(StreamError::Config("n_views must be at least 1".into()));
        }
        if self.fps == 0 || !(self.chunk_seconds > 0.0) {
            return Err(StreamError::Config(
                "fps and chunk_seconds must be positive".into(),
            ));
        }
        let frames = self.fps as f64 * self.chunk_seconds;
        if (frames - frames.round()).abs() > 1e-9 || frames.round() < 1.0 {
            return Err(StreamError::Config(format!(
                "fps * chunk_seconds = {frames} is not a positive whole number of frames"
            )));
        }
        if self.gop_constant == 0 || self.gop_switching == 0 {
            return Err(StreamError::Config("GoP sizes must be positive".into()));
        }
        if self.i_to_p_ratio < 2 {
            return Err(StreamError::Config(
                "i_to_p_ratio must be greater than 1".into(),
            ));
        }
        Ok(())
    }

    /// Frames per chunk (`fps * chunk_seconds`).
    pub fn frames_per_chunk(&self) -> usize {
        (self.fps as f64 * self.chunk_seconds).round() as usize
    }

    pub fn frame_interval_ms(&self) -> f64 {
        1000.0 / self.fps as f64
    }

    pub fn check_view(&self, view: usize) -> Result<(), StreamError> {
        if view == 0 || view > self.n_views {
            Err(StreamError::InvalidView {
                view,
                n_views: self.n_views,
            })
        } else {
            Ok(())
        }
    }

    /// Kind of the frame at intra-chunk position `t` of a stream.
    ///
    /// Constant streams carry an I-frame every `gop_constant` frames starting
    /// at the chunk boundary. Switching streams of odd views carry I-frames
    /// at even phases of `gop_switching`, even views at the opposite phase
    /// plus an extra I-frame at `t = 0` so every chunk starts decodable.
    pub fn kind_at(&self, view: usize, representation: Representation, t: usize) -> FrameKind {
        let is_i = match representation {
            Representation::Constant => t % self.gop_constant == 0,
            Representation::Switching => {
                let g = self.gop_switching;
                if view % 2 == 1 {
                    t % g == 0
                } else {
                    t == 0 || t % g == 1 % g
                }
            }
        };
        if is_i {
            FrameKind::I
        } else {
            FrameKind::P
        }
    }
}

/// One encoded picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    /// 1-based camera index.
    pub view: usize,
    pub representation: Representation,
    pub chunk: u64,
    /// Global frame counter: `chunk * F + t`.
    pub pts: u64,
    pub kind: FrameKind,
    pub size_bits: u64,
}

/// Frame-kind pattern for one view/representation/chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopLayout {
    pub view: usize,
    pub representation: Representation,
    pub chunk: u64,
    pub kinds: Vec<FrameKind>,
}

impl GopLayout {
    pub fn i_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == FrameKind::I).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationChunk {
    pub view: usize,
    pub representation: Representation,
    pub chunk: u64,
    pub frames: Vec<Frame>,
    pub budget_bits: u64,
}

pub fn build_gop_layout(
    cfg: &StreamConfig,
    view: usize,
    representation: Representation,
    chunk: u64,
) -> Result<GopLayout, StreamError> {
    cfg.validate()?;
    cfg.check_view(view)?;
    let kinds = (0..cfg.frames_per_chunk())
        .map(|t| cfg.kind_at(view, representation, t))
        .collect();
    Ok(GopLayout {
        view,
        representation,
        chunk,
        kinds,
    })
}

/// Per-frame sizes for a layout: `P = floor(B / (k*nI + nP))`, `I = k*P`,
/// and the rounding remainder goes to the first I-frame (or the first frame
/// when the layout has none).
pub fn frame_sizes(kinds: &[FrameKind], budget_bits: u64, k: u64) -> Result<Vec<u64>, StreamError> {
    if kinds.is_empty() || budget_bits < kinds.len() as u64 {
        return Err(StreamError::BudgetTooSmall {
            budget: budget_bits,
            frames: kinds.len(),
        });
    }
    let n_i = kinds.iter().filter(|k| **k == FrameKind::I).count() as u64;
    let n_p = kinds.len() as u64 - n_i;
    let p_size = budget_bits / (k * n_i + n_p);
    let i_size = k * p_size;
    let mut sizes: Vec<u64> = kinds
        .iter()
        .map(|kind| match kind {
            FrameKind::I => i_size,
            FrameKind::P => p_size,
        })
        .collect();
    let remainder = budget_bits - (i_size * n_i + p_size * n_p);
    let slot = kinds.iter().position(|k| *k == FrameKind::I).unwrap_or(0);
    sizes[slot] += remainder;
    Ok(sizes)
}

pub fn encode_chunk(
    cfg: &StreamConfig,
    layout: &GopLayout,
    budget_bits: u64,
) -> Result<RepresentationChunk, StreamError> {
    let sizes = frame_sizes(&layout.kinds, budget_bits, cfg.i_to_p_ratio)?;
    let f = layout.kinds.len() as u64;
    let frames = layout
        .kinds
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(t, (&kind, size_bits))| Frame {
            view: layout.view,
            representation: layout.representation,
            chunk: layout.chunk,
            pts: layout.chunk * f + t as u64,
            kind,
            size_bits,
        })
        .collect();
    Ok(RepresentationChunk {
        view: layout.view,
        representation: layout.representation,
        chunk: layout.chunk,
        frames,
        budget_bits,
    })
}

/// Bit budgets of every representation for one chunk, indexed by `view - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkBudgets {
    pub chunk: u64,
    pub constant: Vec<u64>,
    pub switching: Vec<u64>,
}

/// All streams of one chunk, indexed by `view - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkStreams {
    pub chunk: u64,
    pub constant: Vec<RepresentationChunk>,
    pub switching: Vec<RepresentationChunk>,
}

impl ChunkStreams {
    pub fn get(&self, view: usize, representation: Representation) -> &RepresentationChunk {
        match representation {
            Representation::Constant => &self.constant[view - 1],
            Representation::Switching => &self.switching[view - 1],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &RepresentationChunk> {
        self.constant.iter().chain(self.switching.iter())
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.iter().flat_map(|c| c.frames.iter())
    }
}

pub fn generate_chunk_streams(
    cfg: &StreamConfig,
    budgets: &ChunkBudgets,
) -> Result<ChunkStreams, StreamError> {
    cfg.validate()?;
    let n = cfg.n_views;
    for (list, _) in [(&budgets.constant, 0), (&budgets.switching, 1)] {
        if list.len() < n {
            return Err(StreamError::IncompleteAllocation {
                chunk: budgets.chunk,
                view: list.len() + 1,
            });
        }
    }
    let build = |rep: Representation, list: &[u64]| -> Result<Vec<RepresentationChunk>, StreamError> {
        (1..=n)
            .map(|view| {
                let layout = build_gop_layout(cfg, view, rep, budgets.chunk)?;
                encode_chunk(cfg, &layout, list[view - 1])
            })
            .collect()
    };
    Ok(ChunkStreams {
        chunk: budgets.chunk,
        constant: build(Representation::Constant, &budgets.constant)?,
        switching: build(Representation::Switching, &budgets.switching)?,
    })
}

/// Streams for a whole allocation sequence, one entry per chunk in order.
pub fn generate_multiview_streams(
    cfg: &StreamConfig,
    allocation_sequence: &[ChunkBudgets],
) -> Result<Vec<ChunkStreams>, StreamError> {
    allocation_sequence
        .iter()
        .map(|budgets| generate_chunk_streams(cfg, budgets))
        .collect()
}

/// Debug dump: `view,rep,chunk,pts,kind,size_bits`.
pub fn write_stream_csv<W: Write>(out: W, streams: &[ChunkStreams]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["view", "rep", "chunk", "pts", "kind", "size_bits"])?;
    for chunk in streams {
        for frame in chunk.frames() {
            w.write_record([
                frame.view.to_string(),
                frame.representation.to_string(),
                frame.chunk.to_string(),
                frame.pts.to_string(),
                frame.kind.to_string(),
                frame.size_bits.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
