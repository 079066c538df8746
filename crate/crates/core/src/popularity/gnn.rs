//! Spatial-temporal graph network for switching-view popularity.
//!
//! Input is an `N x τ` history (one column per chunk, oldest first); output is
//! `N x d`. Each block computes, from its input `H`:
//!
//! ```text
//! Y' = softmax_rows(σ((H w1) w2 (w3 H)ᵀ + c) V)          N x N
//! Z' = softmax_rows(σ((Hᵀ u1) u2 (u3 Hᵀ)ᵀ + c') V')      τ x τ
//! G  = Σ_{m=1..M} s_m (T_m(L̃) ⊙ Y') H Z'
//! H' = ReLU(k_0 G S₋ + k_1 G + k_2 G S₊ + b + H)
//! ```
//!
//! where `S₋`/`S₊` shift columns by one chunk with zero padding. The head is
//! `W ⊙ ReLU(H F + f)`.

use std::io::{Read, Write};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::{PopularityError, ViewGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// History length in chunks.
    pub tau: usize,
    /// Prediction horizon in chunks.
    pub horizon: usize,
    /// Chebyshev order `M`.
    pub cheb_order: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optimizer steps taken on the newest windows after each observed chunk.
    pub online_steps: usize,
    pub blocks: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 10,
            horizon: 1,
            cheb_order: 2,
            learning_rate: 0.005,
            batch_size: 32,
            epochs: 50,
            online_steps: 10,
            blocks: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PopularityError> {
        if self.tau == 0 || self.horizon == 0 || self.cheb_order == 0 || self.blocks == 0 {
            return Err(PopularityError::Config(
                "tau, horizon, cheb_order and blocks must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(PopularityError::Config("batch_size and learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub w3: Array2<f64>,
    pub c: Array2<f64>,
    pub v: Array2<f64>,
}

impl AttentionParams {
    /// Attention over `rows` items whose features have length `cols`.
    fn zeros(rows: usize, cols: usize) -> Self {
        AttentionParams {
            w1: Array2::zeros((cols, 1)),
            w2: Array2::zeros((1, cols)),
            w3: Array2::zeros((1, 1)),
            c: Array2::zeros((rows, rows)),
            v: Array2::zeros((rows, rows)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub spatial: AttentionParams,
    pub temporal: AttentionParams,
    /// `1 x M` Chebyshev coefficients `s_1..s_M`.
    pub cheb: Array2<f64>,
    /// `1 x 3` temporal kernel over chunks `t-1, t, t+1`.
    pub conv: Array2<f64>,
    pub conv_bias: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub n_views: usize,
    pub tau: usize,
    pub horizon: usize,
    pub cheb_order: usize,
    pub blocks: Vec<BlockParams>,
    /// `τ x d`.
    pub fc_weight: Array2<f64>,
    /// `1 x d`.
    pub fc_bias: Array2<f64>,
    /// `N x d` element-wise output weights.
    pub out_weight: Array2<f64>,
}

impl GnnParams {
    pub fn zeros(n_views: usize, cfg: &TrainConfig) -> Self {
        let (n, tau, d) = (n_views, cfg.tau, cfg.horizon);
        GnnParams {
            n_views,
            tau,
            horizon: d,
            cheb_order: cfg.cheb_order,
            blocks: (0..cfg.blocks)
                .map(|_| BlockParams {
                    spatial: AttentionParams::zeros(n, tau),
                    temporal: AttentionParams::zeros(tau, n),
                    cheb: Array2::zeros((1, cfg.cheb_order)),
                    conv: Array2::zeros((1, 3)),
                    conv_bias: Array2::zeros((1, 1)),
                })
                .collect(),
            fc_weight: Array2::zeros((tau, d)),
            fc_bias: Array2::zeros((1, d)),
            out_weight: Array2::zeros((n, d)),
        }
    }

    /// Seeded random initialization.
    pub fn init(n_views: usize, cfg: &TrainConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(n_views, cfg);
        let mut fill = |a: &mut Array2<f64>, scale: f64, offset: f64| {
            a.mapv_inplace(|_| offset + rng.gen_range(-scale..scale));
        };
        let (n, tau) = (n_views as f64, cfg.tau as f64);
        for b in &mut p.blocks {
            for (att, items, feats) in [(&mut b.spatial, n, tau), (&mut b.temporal, tau, n)] {
                fill(&mut att.w1, 1.0 / feats.sqrt(), 0.0);
                fill(&mut att.w2, 1.0 / feats.sqrt(), 0.0);
                fill(&mut att.w3, 0.5, 0.0);
                fill(&mut att.c, 0.1, 0.0);
                fill(&mut att.v, 1.0 / items.sqrt(), 0.0);
            }
            fill(&mut b.cheb, 0.5, 0.0);
            fill(&mut b.conv, 0.3, 0.0);
            b.conv[[0, 1]] += 1.0;
        }
        fill(&mut p.fc_weight, 1.0 / tau.sqrt(), 0.0);
        p.fc_bias.fill(0.1);
        p.out_weight.fill(1.0);
        p
    }

    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for att in [&b.spatial, &b.temporal] {
                out.extend([&att.w1, &att.w2, &att.w3, &att.c, &att.v]);
            }
            out.extend([&b.cheb, &b.conv, &b.conv_bias]);
        }
        out.extend([&self.fc_weight, &self.fc_bias, &self.out_weight]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            for att in [&mut b.spatial, &mut b.temporal] {
                out.extend([&mut att.w1, &mut att.w2, &mut att.w3, &mut att.c, &mut att.v]);
            }
            out.extend([&mut b.cheb, &mut b.conv, &mut b.conv_bias]);
        }
        out.extend([&mut self.fc_weight, &mut self.fc_bias, &mut self.out_weight]);
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for k in 0..self.blocks.len() {
            for att in ["spatial", "temporal"] {
                for t in ["w1", "w2", "w3", "c", "v"] {
                    out.push(format!("block{k}.{att}.{t}"));
                }
            }
            for t in ["cheb", "conv", "conv_bias"] {
                out.push(format!("block{k}.{t}"));
            }
        }
        out.extend(["fc_weight".to_string(), "fc_bias".to_string(), "out_weight".to_string()]);
        out
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn config_shape(&self) -> TrainConfig {
        TrainConfig {
            tau: self.tau,
            horizon: self.horizon,
            cheb_order: self.cheb_order,
            blocks: self.blocks.len(),
            ..TrainConfig::default()
        }
    }
}

/// Constant matrices shared by every forward pass on one graph.
#[derive(Debug, Clone)]
pub struct GnnContext {
    cheb: Vec<Array2<f64>>,
    shift_back: Array2<f64>,
    shift_fwd: Array2<f64>,
}

impl GnnContext {
    pub fn new(graph: &ViewGraph, tau: usize, cheb_order: usize) -> Self {
        let mut shift_back = Array2::zeros((tau, tau));
        let mut shift_fwd = Array2::zeros((tau, tau));
        for t in 1..tau {
            // (G S₋)[:, t] = G[:, t-1]
            shift_back[[t - 1, t]] = 1.0;
            // (G S₊)[:, t-1] = G[:, t]
            shift_fwd[[t, t - 1]] = 1.0;
        }
        GnnContext {
            cheb: graph.chebyshev_terms(cheb_order),
            shift_back,
            shift_fwd,
        }
    }
}

struct AttVars {
    w1: Var,
    w2: Var,
    w3: Var,
    c: Var,
    v: Var,
}

fn attention(t: &mut Tape, x: Var, p: &AttVars) -> Var {
    let a = t.matmul(x, p.w1);
    let b = t.matmul(a, p.w2);
    let xs = t.scale(x, p.w3);
    let xt = t.transpose(xs);
    let e = t.matmul(b, xt);
    let e = t.add(e, p.c);
    let s = t.sigmoid(e);
    let y = t.matmul(s, p.v);
    t.softmax_rows(y)
}

fn check_input(params: &GnnParams, x: &Array2<f64>) -> Result<(), PopularityError> {
    if x.dim() != (params.n_views, params.tau) {
        return Err(PopularityError::Shape(format!(
            "input is {:?}, model expects {:?}",
            x.dim(),
            (params.n_views, params.tau)
        )));
    }
    Ok(())
}

/// Records one forward pass; returns the parameter leaves (in
/// [`GnnParams::tensors`] order) and the output node.
fn record_forward(
    t: &mut Tape,
    params: &GnnParams,
    ctx: &GnnContext,
    x: &Array2<f64>,
) -> Result<(Vec<Var>, Var), PopularityError> {
    check_input(params, x)?;
    if ctx.cheb.len() < params.cheb_order {
        return Err(PopularityError::Config(format!(
            "Chebyshev order {} exceeds the {} precomputed terms",
            params.cheb_order,
            ctx.cheb.len()
        )));
    }
    let leaves: Vec<Var> = params.tensors().into_iter().map(|a| t.leaf(a.clone())).collect();
    let cheb: Vec<Var> = ctx.cheb.iter().map(|m| t.leaf(m.clone())).collect();
    let back = t.leaf(ctx.shift_back.clone());
    let fwd = t.leaf(ctx.shift_fwd.clone());
    let mut h = t.leaf(x.clone());
    let mut k = 0;
    let mut next = || {
        k += 1;
        leaves[k - 1]
    };
    for _ in &params.blocks {
        let mut att = || AttVars {
            w1: next(),
            w2: next(),
            w3: next(),
            c: next(),
            v: next(),
        };
        let spatial = att();
        let temporal = att();
        let s = next();
        let conv = next();
        let conv_bias = next();

        let y = attention(t, h, &spatial);
        let ht = t.transpose(h);
        let z = attention(t, ht, &temporal);
        let hz = t.matmul(h, z);
        let mut g: Option<Var> = None;
        for (m, tm) in cheb.iter().enumerate().take(params.cheb_order) {
            let masked = t.hadamard(*tm, y);
            let term = t.matmul(masked, hz);
            let sm = t.element(s, 0, m);
            let term = t.scale(term, sm);
            g = Some(match g {
                Some(acc) => t.add(acc, term),
                None => term,
            });
        }
        let g = g.expect("cheb_order >= 1");
        let g_back = t.matmul(g, back);
        let g_fwd = t.matmul(g, fwd);
        let (k0, k1, k2) = (t.element(conv, 0, 0), t.element(conv, 0, 1), t.element(conv, 0, 2));
        let a = t.scale(g_back, k0);
        let b = t.scale(g, k1);
        let c = t.scale(g_fwd, k2);
        let sum = t.add(a, b);
        let sum = t.add(sum, c);
        let sum = t.add(sum, conv_bias);
        let res = t.add(sum, h);
        h = t.relu(res);
    }
    let fc_weight = next();
    let fc_bias = next();
    let out_weight = next();
    let o = t.matmul(h, fc_weight);
    let o = t.add(o, fc_bias);
    let o = t.relu(o);
    let out = t.hadamard(o, out_weight);
    if !t.all_finite() {
        return Err(PopularityError::NonFiniteValue);
    }
    Ok((leaves, out))
}

/// `N x d` prediction for one `N x τ` history.
pub fn forward(params: &GnnParams, ctx: &GnnContext, x: &Array2<f64>) -> Result<Array2<f64>, PopularityError> {
    let mut t = Tape::new();
    let (_, out) = record_forward(&mut t, params, ctx, x)?;
    Ok(t.value(out).clone())
}

/// Mean absolute error over a batch of `(history, target)` pairs and its
/// gradient, laid out like the parameters.
pub fn loss_and_grad(
    params: &GnnParams,
    ctx: &GnnContext,
    batch: &[(Array2<f64>, Array2<f64>)],
) -> Result<(f64, GnnParams), PopularityError> {
    if batch.is_empty() {
        return Err(PopularityError::InsufficientHistory { have: 0, need: 1 });
    }
    let per_sample: Vec<Result<(f64, Vec<Array2<f64>>), PopularityError>> = batch
        .par_iter()
        .map(|(x, target)| {
            if target.dim() != (params.n_views, params.horizon) {
                return Err(PopularityError::Shape(format!("target is {:?}", target.dim())));
            }
            let mut t = Tape::new();
            let (leaves, out) = record_forward(&mut t, params, ctx, x)?;
            let loss = t.mae(out, target.clone());
            let grads = t.backward(loss);
            let value = t.value(loss)[[0, 0]];
            Ok((value, leaves.iter().map(|v| grads[v.index()].clone()).collect()))
        })
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = GnnParams::zeros(params.n_views, &params.config_shape());
    let mut loss = 0.0;
    // summed in batch order so results do not depend on thread scheduling
    for sample in per_sample {
        let (l, g) = sample?;
        loss += l * scale;
        for (acc, gi) in grad.tensors_mut().into_iter().zip(g) {
            acc.scaled_add(scale, &gi);
        }
    }
    if !loss.is_finite() {
        return Err(PopularityError::NonFiniteValue);
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(params: &GnnParams, learning_rate: f64) -> Self {
        let zeros: Vec<Array2<f64>> = params.tensors().iter().map(|t| Array2::zeros(t.raw_dim())).collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, params: &mut GnnParams, grad: &GnnParams) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            });
        }
    }
}

/// Training pairs from a per-chunk history of popularity vectors.
///
/// The pair for target chunk `t` uses chunks `t-τ..t` as input, repeating
/// chunk 0 where the window reaches before the start of the history.
pub fn windows(history: &[Vec<f64>], tau: usize, horizon: usize) -> Vec<(Array2<f64>, Array2<f64>)> {
    if history.len() <= horizon {
        return Vec::new();
    }
    (1..=history.len() - horizon)
        .map(|t| (history_window(history, t, tau), target_window(history, t, horizon)))
        .collect()
}

/// `N x τ` input ending just before chunk `t`.
pub fn history_window(history: &[Vec<f64>], t: usize, tau: usize) -> Array2<f64> {
    let n = history[0].len();
    let mut x = Array2::zeros((n, tau));
    for k in 0..tau {
        let src = (t as i64 - tau as i64 + k as i64).max(0) as usize;
        for i in 0..n {
            x[[i, k]] = history[src][i];
        }
    }
    x
}

fn target_window(history: &[Vec<f64>], t: usize, horizon: usize) -> Array2<f64> {
    let n = history[0].len();
    let mut y = Array2::zeros((n, horizon));
    for k in 0..horizon {
        for i in 0..n {
            y[[i, k]] = history[t + k][i];
        }
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training MAE of each epoch, in popularity units.
    pub epoch_mae: Vec<f64>,
}

/// A trained network plus its optimizer state, ready for online updates.
///
/// Popularity is multiplied by `N` on the way in and divided on the way
/// out so that a uniform distribution maps to ones.
#[derive(Debug, Clone)]
pub struct PopularityGnn {
    pub params: GnnParams,
    pub config: TrainConfig,
    ctx: GnnContext,
    adam: Adam,
    rng: ChaCha8Rng,
}

impl PopularityGnn {
    pub fn new(graph: &ViewGraph, config: TrainConfig) -> Result<Self, PopularityError> {
        config.validate()?;
        let params = GnnParams::init(graph.n_views(), &config, config.seed);
        Self::from_params(graph, config, params)
    }

    pub fn from_params(graph: &ViewGraph, config: TrainConfig, params: GnnParams) -> Result<Self, PopularityError> {
        config.validate()?;
        if params.n_views != graph.n_views() {
            return Err(PopularityError::Shape(format!(
                "model has {} views, graph {}",
                params.n_views,
                graph.n_views()
            )));
        }
        let ctx = GnnContext::new(graph, params.tau, params.cheb_order);
        let adam = Adam::new(&params, config.learning_rate);
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        Ok(PopularityGnn {
            params,
            config,
            ctx,
            adam,
            rng,
        })
    }

    fn scale(&self) -> f64 {
        self.params.n_views as f64
    }

    fn scaled_pairs(&self, history: &[Vec<f64>]) -> Vec<(Array2<f64>, Array2<f64>)> {
        let s = self.scale();
        windows(history, self.params.tau, self.params.horizon)
            .into_iter()
            .map(|(x, y)| (x * s, y * s))
            .collect()
    }

    fn check_history(&self, history: &[Vec<f64>]) -> Result<(), PopularityError> {
        let need = self.params.tau.max(self.params.horizon + 1);
        if history.len() < need {
            return Err(PopularityError::InsufficientHistory {
                have: history.len(),
                need,
            });
        }
        if history.iter().any(|h| h.len() != self.params.n_views) {
            return Err(PopularityError::Shape("history vectors must have one entry per view".into()));
        }
        Ok(())
    }

    /// Initial training: `epochs` passes over shuffled mini-batches.
    pub fn train(&mut self, history: &[Vec<f64>]) -> Result<TrainReport, PopularityError> {
        self.check_history(history)?;
        let pairs = self.scaled_pairs(history);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut epoch_mae = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            order.shuffle(&mut self.rng);
            let mut total = 0.0;
            for chunk in order.chunks(self.config.batch_size) {
                let batch: Vec<_> = chunk.iter().map(|&i| pairs[i].clone()).collect();
                let (loss, grad) = loss_and_grad(&self.params, &self.ctx, &batch)?;
                self.adam.update(&mut self.params, &grad);
                total += loss * batch.len() as f64;
            }
            epoch_mae.push(total / pairs.len() as f64 / self.scale());
        }
        Ok(TrainReport { epoch_mae })
    }

    /// `online_steps` optimizer steps on the newest windows after a chunk is
    /// observed. Returns the MAE before the last step.
    pub fn online_update(&mut self, history: &[Vec<f64>]) -> Result<f64, PopularityError> {
        self.check_history(history)?;
        let pairs = self.scaled_pairs(history);
        let start = pairs.len().saturating_sub(self.config.batch_size);
        let mut mae = 0.0;
        for _ in 0..self.config.online_steps {
            let (loss, grad) = loss_and_grad(&self.params, &self.ctx, &pairs[start..])?;
            self.adam.update(&mut self.params, &grad);
            mae = loss / self.scale();
        }
        Ok(mae)
    }

    /// Prediction for the chunk after the end of `history`.
    pub fn predict(&self, history: &[Vec<f64>]) -> Result<Vec<f64>, PopularityError> {
        if history.is_empty() {
            return Err(PopularityError::InsufficientHistory {
                have: 0,
                need: self.params.tau,
            });
        }
        let s = self.scale();
        let x = history_window(history, history.len(), self.params.tau) * s;
        let out = forward(&self.params, &self.ctx, &x)?;
        Ok(out.column(0).iter().map(|v| v / s).collect())
    }

    pub fn save<W: Write>(&self, out: W) -> Result<(), PopularityError> {
        save_checkpoint(out, &self.params, &self.config)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    version: u32,
    n_views: usize,
    config: TrainConfig,
    tensors: Vec<TensorDump>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorDump {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

/// JSON checkpoint: `{version, n_views, config, tensors: [{name, shape, data}]}`
/// with row-major data. Floats round-trip exactly.
pub fn save_checkpoint<W: Write>(out: W, params: &GnnParams, config: &TrainConfig) -> Result<(), PopularityError> {
    let cfg = TrainConfig {
        tau: params.tau,
        horizon: params.horizon,
        cheb_order: params.cheb_order,
        blocks: params.blocks.len(),
        ..config.clone()
    };
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        n_views: params.n_views,
        config: cfg,
        tensors: params
            .tensor_names()
            .into_iter()
            .zip(params.tensors())
            .map(|(name, t)| TensorDump {
                name,
                shape: [t.nrows(), t.ncols()],
                data: t.iter().copied().collect(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &ck).map_err(|e| PopularityError::Checkpoint(e.to_string()))
}

pub fn load_checkpoint<R: Read>(input: R) -> Result<(GnnParams, TrainConfig), PopularityError> {
    let ck: Checkpoint = serde_json::from_reader(input).map_err(|e| PopularityError::Checkpoint(e.to_string()))?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(PopularityError::Checkpoint(format!("unsupported version {}", ck.version)));
    }
    ck.config.validate()?;
    let mut params = GnnParams::zeros(ck.n_views, &ck.config);
    let names = params.tensor_names();
    if ck.tensors.len() != names.len() {
        return Err(PopularityError::Checkpoint(format!(
            "expected {} tensors, found {}",
            names.len(),
            ck.tensors.len()
        )));
    }
    for ((dst, name), src) in params.tensors_mut().into_iter().zip(names).zip(ck.tensors) {
        if src.name != name || [dst.nrows(), dst.ncols()] != src.shape || src.data.len() != dst.len() {
            return Err(PopularityError::Checkpoint(format!(
                "tensor {} {:?} does not match {name} {:?}",
                src.name,
                src.shape,
                dst.dim()
            )));
        }
        *dst = Array2::from_shape_vec((src.shape[0], src.shape[1]), src.data)
            .map_err(|e| PopularityError::Checkpoint(e.to_string()))?;
    }
    Ok((params, ck.config))
}
