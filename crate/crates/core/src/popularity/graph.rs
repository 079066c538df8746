use std::io::Read;

use ndarray::Array2;

use super::PopularityError;

/// Camera connectivity graph over views `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGraph {
    adjacency: Array2<f64>,
    scaled_laplacian: Array2<f64>,
}

impl ViewGraph {
    /// Path graph: view `i` is adjacent to `i - 1` and `i + 1`.
    pub fn path(n: usize) -> Self {
        let mut a = Array2::zeros((n, n));
        for i in 1..n {
            a[[i - 1, i]] = 1.0;
            a[[i, i - 1]] = 1.0;
        }
        Self::from_adjacency(a).expect("path adjacency is valid")
    }

    pub fn from_adjacency(adjacency: Array2<f64>) -> Result<Self, PopularityError> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(PopularityError::Shape(format!("adjacency is {:?}", adjacency.dim())));
        }
        for i in 0..n {
            if adjacency[[i, i]] != 0.0 {
                return Err(PopularityError::Config(format!("self-loop on view {}", i + 1)));
            }
            for j in 0..n {
                let v = adjacency[[i, j]];
                if v != adjacency[[j, i]] || (v != 0.0 && v != 1.0) {
                    return Err(PopularityError::Config(format!(
                        "adjacency must be symmetric 0/1 (views {} and {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let scaled_laplacian = scaled_laplacian(&adjacency);
        Ok(ViewGraph {
            adjacency,
            scaled_laplacian,
        })
    }

    /// Edge list CSV with rows `i,j` (1-based views, optional header).
    pub fn from_edge_csv<R: Read>(reader: R, n: usize) -> Result<Self, PopularityError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut a = Array2::zeros((n, n));
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| PopularityError::Parse {
                line: line + 1,
                message: e.to_string(),
            })?;
            if line == 0 && record.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
                continue;
            }
            let field = |k: usize| -> Result<usize, PopularityError> {
                record
                    .get(k)
                    .and_then(|f| f.parse::<usize>().ok())
                    .filter(|v| (1..=n).contains(v))
                    .ok_or_else(|| PopularityError::Parse {
                        line: line + 1,
                        message: format!("expected two views in 1..={n}"),
                    })
            };
            let (i, j) = (field(0)?, field(1)?);
            if i == j {
                return Err(PopularityError::Parse {
                    line: line + 1,
                    message: "self-loop".into(),
                });
            }
            a[[i - 1, j - 1]] = 1.0;
            a[[j - 1, i - 1]] = 1.0;
        }
        Self::from_adjacency(a)
    }

    pub fn n_views(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn scaled_laplacian(&self) -> &Array2<f64> {
        &self.scaled_laplacian
    }

    /// `T_1(L̃), ..., T_m(L̃)` from the Chebyshev recurrence.
    pub fn chebyshev_terms(&self, m: usize) -> Vec<Array2<f64>> {
        let n = self.n_views();
        let l = &self.scaled_laplacian;
        let mut terms: Vec<Array2<f64>> = Vec::with_capacity(m + 1);
        terms.push(Array2::eye(n));
        terms.push(l.clone());
        while terms.len() <= m {
            let k = terms.len();
            let next = 2.0 * l.dot(&terms[k - 1]) - &terms[k - 2];
            terms.push(next);
        }
        terms.into_iter().skip(1).take(m).collect()
    }
}

/// `2 L / λ_max − I` with `L = I − D^{-1/2} A D^{-1/2}`.
fn scaled_laplacian(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let inv_sqrt: Vec<f64> = a
        .rows()
        .into_iter()
        .map(|r| {
            let d: f64 = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Array2::eye(n);
    for i in 0..n {
        for j in 0..n {
            l[[i, j]] -= inv_sqrt[i] * a[[i, j]] * inv_sqrt[j];
        }
    }
    let lambda_max = largest_eigenvalue(&l, 1e-6);
    if lambda_max <= 0.0 {
        // edgeless graph: L is zero
        return -Array2::<f64>::eye(n);
    }
    2.0 / lambda_max * &l - Array2::<f64>::eye(n)
}

/// Power iteration for the dominant eigenvalue of a symmetric PSD matrix.
pub(crate) fn largest_eigenvalue(m: &Array2<f64>, tolerance: f64) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // a non-symmetric start vector avoids orthogonality to the top eigenvector
    let mut v: ndarray::Array1<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    v /= v.dot(&v).sqrt();
    let mut estimate = 0.0;
    for _ in 0..1_000_000 {
        let w = m.dot(&v);
        estimate = v.dot(&w);
        // residual of the Rayleigh pair bounds the eigenvalue error
        let residual = &w - &(estimate * &v);
        if residual.dot(&residual).sqrt() <= tolerance {
            return estimate;
        }
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
    }
    estimate
}
