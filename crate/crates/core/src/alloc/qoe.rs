use super::{AllocError, QoeParams};

/// The three components of per-chunk QoE and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoeBreakdown {
    /// Popularity-weighted log-rate quality.
    pub quality: f64,
    /// Inter-view quality switching (already includes the `mu3` weight on its first sum).
    pub inter_view: f64,
    /// Temporal quality switching of the constant representations.
    pub temporal: f64,
    pub total: f64,
}

/// QoE of one chunk's rates given the popularity that weighs them.
///
/// `constant`/`switching` are `R_i` and `R̂_i`, `previous` the constant rates
/// of the previous chunk. Pass predicted popularity to get the objective the
/// allocator maximizes, or measured popularity to score what users received.
pub fn qoe_total(
    constant: &[f64],
    switching: &[f64],
    previous: &[f64],
    popularity: &[f64],
    switching_popularity: &[f64],
    params: &QoeParams,
) -> Result<QoeBreakdown, AllocError> {
    let n = constant.len();
    for (name, v) in [
        ("switching rates", switching),
        ("previous rates", previous),
        ("popularity", popularity),
        ("switching popularity", switching_popularity),
    ] {
        if v.len() != n {
            return Err(AllocError::Shape(format!("{name} has length {}, expected {n}", v.len())));
        }
    }
    if let Some(bad) = constant
        .iter()
        .chain(switching)
        .chain(previous)
        .find(|r| !(**r >= 0.0))
    {
        return Err(AllocError::Domain(format!("negative or non-finite rate {bad}")));
    }

    let (eta, eta_hat) = (params.eta, params.eta_hat);
    let mut quality = 0.0;
    for i in 0..n {
        quality += popularity[i] * (1.0 + constant[i] / eta).ln()
            + switching_popularity[i] * (1.0 + switching[i] / eta_hat).ln();
    }

    let mut adjacent = 0.0;
    let mut cross = 0.0;
    for i in 1..n {
        let w = switching_popularity[i];
        adjacent += w * (switching[i] - switching[i - 1]).powi(2);
        cross += w * (switching[i] / eta_hat - constant[i - 1] / eta).powi(2);
    }
    let inter_view = params.mu3 * adjacent + cross;

    let temporal: f64 = (0..n)
        .map(|i| popularity[i] * (constant[i] - previous[i]).powi(2))
        .sum();

    Ok(QoeBreakdown {
        quality,
        inter_view,
        temporal,
        total: quality - params.mu1 * inter_view - params.mu2 * temporal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_view_has_no_inter_view_term() {
        let params = QoeParams::default();
        let q = qoe_total(&[3.0], &[2.0], &[1.0], &[0.7], &[0.3], &params).unwrap();
        let expected = 0.7 * 4f64.ln() + 0.3 * (1.5f64).ln() - params.mu2 * 0.7 * 4.0;
        assert!((q.total - expected).abs() < 1e-12);
        assert_eq!(q.inter_view, 0.0);
    }

    #[test]
    fn zero_rates_give_zero_quality() {
        let params = QoeParams::default();
        let q = qoe_total(&[0.0; 3], &[0.0; 3], &[0.0; 3], &[0.2, 0.3, 0.1], &[0.1, 0.2, 0.1], &params)
            .unwrap();
        assert_eq!(q.quality, 0.0);
        assert_eq!(q.total, 0.0);
    }

    #[test]
    fn negative_rate_is_domain_error() {
        let params = QoeParams::default();
        assert!(matches!(
            qoe_total(&[-1.0], &[1.0], &[1.0], &[1.0], &[0.0], &params),
            Err(AllocError::Domain(_))
        ));
        assert!(matches!(
            qoe_total(&[1.0, 2.0], &[1.0], &[1.0, 1.0], &[1.0, 0.0], &[0.0, 0.0], &params),
            Err(AllocError::Shape(_))
        ));
    }
}
