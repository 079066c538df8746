#![allow(dead_code)]

use fvvsim::alloc::{qoe_total, QoeParams, RateBounds};
use rayon::prelude::*;

/// Best QoE of a two-view instance by exhaustive search.
///
/// `R1`, `R2` and `R̂1` each take `points` evenly spaced values in their boxes.
/// `R̂2` only enters a concave one-dimensional term, so it is set to that
/// term's maximizer clamped to its box and to the budget left over.
pub fn grid_oracle(
    p: [f64; 2],
    p_hat: [f64; 2],
    previous: [f64; 2],
    budget: f64,
    params: &QoeParams,
    bounds: &RateBounds,
    points: usize,
) -> Option<(f64, [f64; 4])> {
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect()
    };
    let rc = axis(bounds.r_min, bounds.r_max);
    let rs = axis(bounds.r_hat_min, bounds.r_hat_max);
    rc.par_iter()
        .filter_map(|&r1| {
            let mut best: Option<(f64, [f64; 4])> = None;
            for &r2 in &rc {
                for &h1 in &rs {
                    let left = budget - r1 - r2 - h1;
                    if left < bounds.r_hat_min {
                        continue;
                    }
                    let h2 = best_second_switching(r1, h1, p_hat[1], params)
                        .clamp(bounds.r_hat_min, bounds.r_hat_max.min(left));
                    let q = qoe_total(&[r1, r2], &[h1, h2], &previous, &p, &p_hat, params)
                        .unwrap()
                        .total;
                    if best.is_none_or(|(b, _)| q > b) {
                        best = Some((q, [r1, r2, h1, h2]));
                    }
                }
            }
            best
        })
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
}

/// Unconstrained maximizer of `p̂ ln(1 + r/η̂) − μ1 p̂ (μ3 (r − h1)² + (r/η̂ − r1/η)²)`.
fn best_second_switching(r1: f64, h1: f64, p_hat: f64, params: &QoeParams) -> f64 {
    let eh = params.eta_hat;
    let a = 2.0 * params.mu1 * (params.mu3 + 1.0 / (eh * eh));
    if p_hat <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return f64::INFINITY;
    }
    let b = 2.0 * params.mu1 * (params.mu3 * h1 + r1 / (params.eta * eh));
    // (η̂ + r)(a r − b) = 1
    let qb = a * eh - b;
    let qc = -(b * eh + 1.0);
    (-qb + (qb * qb - 4.0 * a * qc).sqrt()) / (2.0 * a)
}

pub mod gnn_ref {
    //! Straight-line loop evaluation of the popularity network.

    use fvvsim::popularity::{AttentionParams, GnnParams};
    use ndarray::Array2;

    pub type Mat = Vec<Vec<f64>>;

    pub fn to_mat(a: &Array2<f64>) -> Mat {
        a.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn transpose(x: &Mat) -> Mat {
        (0..x[0].len()).map(|j| x.iter().map(|r| r[j]).collect()).collect()
    }

    /// `softmax_rows(σ((X w1) w2 (w3 X)ᵀ + c) V)` for `X` of shape rows x cols.
    pub fn attention(x: &Mat, p: &AttentionParams) -> Mat {
        let rows = x.len();
        let cols = x[0].len();
        let w3 = p.w3[[0, 0]];
        let mut s = vec![vec![0.0; rows]; rows];
        for i in 0..rows {
            let a: f64 = (0..cols).map(|k| x[i][k] * p.w1[[k, 0]]).sum();
            for j in 0..rows {
                let mut e = 0.0;
                for k in 0..cols {
                    e += a * p.w2[[0, k]] * w3 * x[j][k];
                }
                s[i][j] = sigmoid(e + p.c[[i, j]]);
            }
        }
        let mut y = vec![vec![0.0; rows]; rows];
        for i in 0..rows {
            for j in 0..rows {
                y[i][j] = (0..rows).map(|l| s[i][l] * p.v[[l, j]]).sum();
            }
            let max = y[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = y[i].iter().map(|v| (v - max).exp()).sum();
            for j in 0..rows {
                y[i][j] = (y[i][j] - max).exp() / sum;
            }
        }
        y
    }

    /// Scaled Laplacian of a path graph; its normalized Laplacian has top eigenvalue 2.
    pub fn path_scaled_laplacian(n: usize) -> Mat {
        let deg = |i: usize| -> f64 { ((i > 0) as usize + (i + 1 < n) as usize) as f64 };
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let adj = (i + 1 == j || j + 1 == i) as u8 as f64;
                let lap = if i == j { 1.0 } else { -adj / (deg(i) * deg(j)).sqrt() };
                l[i][j] = lap - if i == j { 1.0 } else { 0.0 };
            }
        }
        if n == 1 {
            l[0][0] = -1.0;
        }
        l
    }

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let (n, k, m) = (a.len(), b.len(), b[0].len());
        let mut out = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                for l in 0..k {
                    out[i][j] += a[i][l] * b[l][j];
                }
            }
        }
        out
    }

    /// `T_1..T_m` of the scaled Laplacian.
    pub fn chebyshev(l: &Mat, m: usize) -> Vec<Mat> {
        let n = l.len();
        let eye: Mat = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
        let mut terms = vec![eye, l.clone()];
        while terms.len() <= m {
            let k = terms.len();
            let p = matmul(l, &terms[k - 1]);
            let next = (0..n)
                .map(|i| (0..n).map(|j| 2.0 * p[i][j] - terms[k - 2][i][j]).collect())
                .collect();
            terms.push(next);
        }
        terms.into_iter().skip(1).take(m).collect()
    }

    /// `Σ_m s_m (T_m ⊙ Y') X`.
    pub fn cheb_conv(x: &Mat, y: &Mat, terms: &[Mat], s: &[f64]) -> Mat {
        let (n, tau) = (x.len(), x[0].len());
        let mut out = vec![vec![0.0; tau]; n];
        for (tm, sm) in terms.iter().zip(s) {
            for i in 0..n {
                for t in 0..tau {
                    for j in 0..n {
                        out[i][t] += sm * tm[i][j] * y[i][j] * x[j][t];
                    }
                }
            }
        }
        out
    }

    pub fn forward(params: &GnnParams, terms: &[Mat], x: &Mat) -> Mat {
        let n = x.len();
        let tau = x[0].len();
        let mut h = x.clone();
        for b in &params.blocks {
            let y = attention(&h, &b.spatial);
            let z = attention(&transpose(&h), &b.temporal);
            let hz = matmul(&h, &z);
            let s: Vec<f64> = b.cheb.iter().copied().collect();
            let g = cheb_conv(&hz, &y, terms, &s);
            let mut next = vec![vec![0.0; tau]; n];
            for i in 0..n {
                for t in 0..tau {
                    let left = if t > 0 { g[i][t - 1] } else { 0.0 };
                    let right = if t + 1 < tau { g[i][t + 1] } else { 0.0 };
                    let v = b.conv[[0, 0]] * left + b.conv[[0, 1]] * g[i][t] + b.conv[[0, 2]] * right
                        + b.conv_bias[[0, 0]]
                        + h[i][t];
                    next[i][t] = v.max(0.0);
                }
            }
            h = next;
        }
        let d = params.horizon;
        let mut out = vec![vec![0.0; d]; n];
        for i in 0..n {
            for k in 0..d {
                let o: f64 = (0..tau).map(|t| h[i][t] * params.fc_weight[[t, k]]).sum::<f64>() + params.fc_bias[[0, k]];
                out[i][k] = o.max(0.0) * params.out_weight[[i, k]];
            }
        }
        out
    }
}

pub mod gradcheck {
    use fvvsim::popularity::{loss_and_grad, GnnContext, GnnParams};
    use ndarray::Array2;

    /// Relative error `|g − g_fd| / max(|g|, |g_fd|)` between the analytic
    /// gradient and central differences with step `h`, over all parameters.
    pub fn relative_error(params: &GnnParams, ctx: &GnnContext, batch: &[(Array2<f64>, Array2<f64>)], h: f64) -> f64 {
        let (_, grad) = loss_and_grad(params, ctx, batch).unwrap();
        let analytic: Vec<f64> = grad.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        let n_tensors = params.tensors().len();
        for ti in 0..n_tensors {
            let len = params.tensors()[ti].len();
            for k in 0..len {
                let eval = |delta: f64| {
                    let mut p = params.clone();
                    let t = &mut p.tensors_mut()[ti];
                    let cols = t.ncols();
                    t[[k / cols, k % cols]] += delta;
                    loss_and_grad(&p, ctx, batch).unwrap().0
                };
                numeric.push((eval(h) - eval(-h)) / (2.0 * h));
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        diff / na.max(nb).max(1e-300)
    }
}
