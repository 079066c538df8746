//! Measured and predicted view popularity.
//!
//! Constant-representation popularity is carried over from the previous
//! chunk; switching-representation popularity is forecast by a graph network
//! over the view graph.

mod gnn;
mod graph;
pub mod tape;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::{Frame, Representation};

pub use gnn::{
    forward, history_window, load_checkpoint, loss_and_grad, save_checkpoint, windows, Adam, AttentionParams,
    BlockParams, GnnContext, GnnParams, PopularityGnn, TrainConfig, TrainReport, CHECKPOINT_VERSION,
};
pub use graph::ViewGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopularityError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite value in the network")]
    NonFiniteValue,
    #[error("need at least {need} chunks of history, have {have}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Share of a chunk's emitted frames drawn from each representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkPopularity {
    pub chunk: u64,
    /// `x_i`, per constant representation.
    pub constant: Vec<f64>,
    /// `x̂_i`, per switching representation.
    pub switching: Vec<f64>,
    /// No frames were emitted in the chunk; both vectors are zero.
    pub empty: bool,
}

impl ChunkPopularity {
    pub fn total(&self) -> f64 {
        self.constant.iter().sum::<f64>() + self.switching.iter().sum::<f64>()
    }
}

/// Popularity of every chunk in `0..n_chunks` from the frames sent to all users.
pub fn compute_actual_popularity<'a, I>(frames: I, n_views: usize, n_chunks: u64) -> Vec<ChunkPopularity>
where
    I: IntoIterator<Item = &'a Frame>,
{
    let mut counts = vec![(vec![0u64; n_views], vec![0u64; n_views]); n_chunks as usize];
    for f in frames {
        let Some((c, s)) = counts.get_mut(f.chunk as usize) else {
            continue;
        };
        match f.representation {
            Representation::Constant => c[f.view - 1] += 1,
            Representation::Switching => s[f.view - 1] += 1,
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(j, (c, s))| {
            let total: u64 = c.iter().sum::<u64>() + s.iter().sum::<u64>();
            let share = |v: Vec<u64>| -> Vec<f64> {
                v.into_iter()
                    .map(|k| if total == 0 { 0.0 } else { k as f64 / total as f64 })
                    .collect()
            };
            ChunkPopularity {
                chunk: j as u64,
                constant: share(c),
                switching: share(s),
                empty: total == 0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub cold_start: bool,
}

/// Previous-chunk carryover; uniform `1/N` with a flag when there is no
/// previous chunk.
pub fn ppc_predict(previous: Option<&[f64]>, n_views: usize) -> Prediction {
    match previous {
        Some(x) => Prediction {
            values: x.to_vec(),
            cold_start: false,
        },
        None => Prediction {
            values: vec![1.0 / n_views as f64; n_views],
            cold_start: true,
        },
    }
}

/// Clamps negatives to zero and rescales both vectors jointly to `total`.
/// If nothing positive remains, spreads `total` evenly over all entries.
pub fn post_process(constant: &mut [f64], switching: &mut [f64], total: f64) {
    for v in constant.iter_mut().chain(switching.iter_mut()) {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    let sum: f64 = constant.iter().chain(switching.iter()).sum();
    if sum > 0.0 {
        let k = total / sum;
        constant.iter_mut().chain(switching.iter_mut()).for_each(|v| *v *= k);
    } else {
        let n = (constant.len() + switching.len()).max(1) as f64;
        constant
            .iter_mut()
            .chain(switching.iter_mut())
            .for_each(|v| *v = total / n);
    }
}

/// Which predictor supplies each representation's popularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// Carryover for constant views, network for switching views.
    Combined,
    /// Carryover for both.
    PpcOnly,
    /// Networks for both.
    GnnOnly,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Combined => "combined",
            PredictorKind::PpcOnly => "ppc-only",
            PredictorKind::GnnOnly => "gnn-only",
        }
    }
}

/// Post-processed `(p_j, p̂_j)` from the previous chunk's measurement and raw
/// network outputs for whichever representations the network covers.
pub fn predict_popularity(
    previous: &ChunkPopularity,
    gnn_constant: Option<Vec<f64>>,
    gnn_switching: Option<Vec<f64>>,
) -> (Vec<f64>, Vec<f64>) {
    let mut p = gnn_constant.unwrap_or_else(|| previous.constant.clone());
    let mut p_hat = gnn_switching.unwrap_or_else(|| previous.switching.clone());
    let total = if previous.empty { 1.0 } else { previous.total() };
    post_process(&mut p, &mut p_hat, total);
    (p, p_hat)
}

/// `1 − sqrt((Σ(p−x)² + Σ(p̂−x̂)²) / 2N)`.
pub fn precision(p: &[f64], p_hat: &[f64], x: &[f64], x_hat: &[f64]) -> Result<f64, PopularityError> {
    let n = p.len();
    if p_hat.len() != n || x.len() != n || x_hat.len() != n {
        return Err(PopularityError::Shape(format!(
            "lengths {}, {}, {}, {} differ",
            n,
            p_hat.len(),
            x.len(),
            x_hat.len()
        )));
    }
    let sq: f64 = p.iter().zip(x).chain(p_hat.iter().zip(x_hat)).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - (sq / (2 * n).max(1) as f64).sqrt())
}

/// One chunk's measurement next to its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityRecord {
    pub chunk: u64,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub p: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub precision: f64,
}

/// Popularity report: `chunk,view,x,x_hat,p,p_hat,precision`.
pub fn write_popularity_csv<W: Write>(out: W, records: &[PopularityRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["chunk", "view", "x", "x_hat", "p", "p_hat", "precision"])?;
    for r in records {
        for i in 0..r.x.len() {
            w.write_record([
                r.chunk.to_string(),
                (i + 1).to_string(),
                format!("{}", r.x[i]),
                format!("{}", r.x_hat[i]),
                format!("{}", r.p[i]),
                format!("{}", r.p_hat[i]),
                format!("{}", r.precision),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::FrameKind;

    fn frame(view: usize, rep: Representation, pts: u64) -> Frame {
        Frame {
            view,
            representation: rep,
            chunk: pts / 25,
            pts,
            kind: FrameKind::P,
            size_bits: 1,
        }
    }

    #[test]
    fn single_constant_viewer() {
        let frames: Vec<Frame> = (0..25).map(|t| frame(2, Representation::Constant, t)).collect();
        let pop = compute_actual_popularity(&frames, 3, 1);
        assert_eq!(pop[0].constant, vec![0.0, 1.0, 0.0]);
        assert_eq!(pop[0].switching, vec![0.0; 3]);
    }

    #[test]
    fn empty_chunk_flagged() {
        let pop = compute_actual_popularity(&[], 2, 2);
        assert!(pop.iter().all(|p| p.empty && p.total() == 0.0));
    }

    #[test]
    fn ppc_cold_start() {
        let p = ppc_predict(None, 4);
        assert!(p.cold_start);
        assert_eq!(p.values, vec![0.25; 4]);
        assert_eq!(ppc_predict(Some(&[0.2, 0.8]), 2).values, vec![0.2, 0.8]);
    }

    #[test]
    fn post_process_normalizes() {
        let mut c = vec![0.3, -0.1];
        let mut s = vec![0.1, 0.2];
        post_process(&mut c, &mut s, 1.0);
        assert_eq!(c[1], 0.0);
        assert!((c.iter().chain(&s).sum::<f64>() - 1.0).abs() < 1e-15);
        let mut c = vec![-1.0];
        let mut s = vec![0.0];
        post_process(&mut c, &mut s, 1.0);
        assert_eq!((c[0], s[0]), (0.5, 0.5));
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision(&[0.5], &[0.5], &[0.5], &[0.5]).unwrap(), 1.0);
        assert_eq!(precision(&[1.0], &[0.0], &[0.0], &[1.0]).unwrap(), 0.0);
        assert!(precision(&[1.0], &[0.0, 1.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn all_constant_traffic_predicts_no_switching() {
        let prev = ChunkPopularity {
            chunk: 4,
            constant: vec![0.25, 0.75],
            switching: vec![0.0, 0.0],
            empty: false,
        };
        let (p, ph) = predict_popularity(&prev, None, Some(vec![0.0, 0.0]));
        assert_eq!(p, vec![0.25, 0.75]);
        assert_eq!(ph, vec![0.0, 0.0]);
    }
}
