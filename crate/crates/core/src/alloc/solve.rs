use super::{AllocError, Allocation, AllocationFlags, QoeParams, RateBounds, Stationarity};

const ROOT_TOLERANCE: f64 = 1e-9;

/// Root of a strictly decreasing function searched on `[lo, hi]`; returns
/// the nearer end when both ends have the same sign.
pub(crate) fn bisect_decreasing<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    if g(lo) <= 0.0 {
        return lo;
    }
    if g(hi) >= 0.0 {
        return hi;
    }
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Derivative of the Lagrangian with respect to a constant-representation rate.
pub fn constant_stationarity(rate: f64, p: f64, previous: f64, lambda: f64, params: &QoeParams) -> f64 {
    (p / params.eta) / (1.0 + rate / params.eta) - 2.0 * params.mu2 * p * (rate - previous) - lambda
}

/// Rates of the preceding view already solved in this pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub switching: f64,
    pub constant: f64,
}

/// Derivative of the Lagrangian with respect to a switching-representation
/// rate, with the coupling to the preceding view (absent for the first view).
pub fn switching_stationarity(
    rate: f64,
    p_hat: f64,
    neighbor: Option<Neighbor>,
    lambda: f64,
    params: &QoeParams,
) -> f64 {
    let eta_hat = params.eta_hat;
    let mut g = (p_hat / eta_hat) / (1.0 + rate / eta_hat) - lambda;
    if let Some(nb) = neighbor {
        g -= 2.0 * params.mu1 * params.mu3 * p_hat * (rate - nb.switching);
        g -= 2.0 * params.mu1 * p_hat * (rate / eta_hat - nb.constant / params.eta) / eta_hat;
    }
    g
}

pub fn solve_constant_rate(p: f64, previous: f64, lambda: f64, params: &QoeParams, bounds: &RateBounds) -> f64 {
    if p <= 0.0 {
        return bounds.r_min;
    }
    let root = bisect_decreasing(
        |r| constant_stationarity(r, p, previous, lambda, params),
        bounds.r_min,
        4.0 * bounds.r_max,
    );
    root.clamp(bounds.r_min, bounds.r_max)
}

pub fn solve_switching_rate(
    p_hat: f64,
    neighbor: Option<Neighbor>,
    lambda: f64,
    params: &QoeParams,
    bounds: &RateBounds,
) -> f64 {
    if p_hat <= 0.0 {
        return bounds.r_hat_min;
    }
    let root = bisect_decreasing(
        |r| switching_stationarity(r, p_hat, neighbor, lambda, params),
        bounds.r_hat_min,
        4.0 * bounds.r_hat_max,
    );
    root.clamp(bounds.r_hat_min, bounds.r_hat_max)
}

/// All rates at a fixed multiplier.
///
/// With [`Stationarity::Printed`] this is one pass over the views: for each
/// view the constant rate, then the switching rate using the preceding view's
/// fresh values. With [`Stationarity::Coupled`] the full partial derivatives
/// are used and coordinate passes repeat, starting from `warm` when given,
/// until no rate moves by more than the root tolerance.
pub fn solve_at_lambda(
    popularity: &[f64],
    switching_popularity: &[f64],
    previous: &[f64],
    lambda: f64,
    params: &QoeParams,
    bounds: &RateBounds,
) -> (Vec<f64>, Vec<f64>) {
    solve_at_lambda_from(popularity, switching_popularity, previous, lambda, params, bounds, None)
}

fn solve_at_lambda_from(
    popularity: &[f64],
    switching_popularity: &[f64],
    previous: &[f64],
    lambda: f64,
    params: &QoeParams,
    bounds: &RateBounds,
    warm: Option<(&[f64], &[f64])>,
) -> (Vec<f64>, Vec<f64>) {
    let n = popularity.len();
    match params.stationarity {
        Stationarity::Printed => {
            let mut constant = Vec::with_capacity(n);
            let mut switching: Vec<f64> = Vec::with_capacity(n);
            for i in 0..n {
                let r = solve_constant_rate(popularity[i], previous[i], lambda, params, bounds);
                let neighbor = (i > 0).then(|| Neighbor {
                    switching: switching[i - 1],
                    constant: constant[i - 1],
                });
                let r_hat = solve_switching_rate(switching_popularity[i], neighbor, lambda, params, bounds);
                constant.push(r);
                switching.push(r_hat);
            }
            (constant, switching)
        }
        Stationarity::Coupled => {
            let (mut constant, mut switching) = match warm {
                Some((c, s)) => (c.to_vec(), s.to_vec()),
                None => (vec![bounds.r_min; n], vec![bounds.r_hat_min; n]),
            };
            let problem = Coupled {
                p: popularity,
                p_hat: switching_popularity,
                previous,
                lambda,
                params,
            };
            for _ in 0..MAX_PASSES {
                let mut moved = 0.0f64;
                for i in 0..n {
                    let r = problem.best_constant(i, &switching).clamp(bounds.r_min, bounds.r_max);
                    moved = moved.max((r - constant[i]).abs());
                    constant[i] = r;
                    let h = problem
                        .best_switching(i, &constant, &switching)
                        .clamp(bounds.r_hat_min, bounds.r_hat_max);
                    moved = moved.max((h - switching[i]).abs());
                    switching[i] = h;
                }
                if moved <= 4.0 * ROOT_TOLERANCE {
                    break;
                }
            }
            (constant, switching)
        }
    }
}

const MAX_PASSES: usize = 5000;

/// Complete partial derivatives of the Lagrangian.
struct Coupled<'a> {
    p: &'a [f64],
    p_hat: &'a [f64],
    previous: &'a [f64],
    lambda: f64,
    params: &'a QoeParams,
}

/// Root of `a / (eta + r) - b r + c` on `r > -eta`, the unconstrained
/// coordinate maximizer. Infinite when the derivative never turns negative.
fn coordinate_root(a: f64, eta: f64, b: f64, c: f64) -> f64 {
    if b <= 0.0 {
        return if c > 0.0 || (c == 0.0 && a > 0.0) {
            f64::INFINITY
        } else if c == 0.0 {
            f64::NEG_INFINITY
        } else {
            -a / c - eta
        };
    }
    let disc = ((b * eta + c).powi(2) + 4.0 * a * b).sqrt();
    let lead = c - b * eta;
    if lead >= 0.0 {
        (lead + disc) / (2.0 * b)
    } else {
        2.0 * (c * eta + a) / (disc - lead)
    }
}

impl Coupled<'_> {
    fn best_constant(&self, i: usize, switching: &[f64]) -> f64 {
        let QoeParams { eta, eta_hat, mu1, mu2, .. } = *self.params;
        let p = self.p[i];
        let mut b = 2.0 * mu2 * p;
        let mut c = 2.0 * mu2 * p * self.previous[i] - self.lambda;
        if let Some(&next) = switching.get(i + 1) {
            let w = 2.0 * mu1 * self.p_hat[i + 1];
            b += w / (eta * eta);
            c += w * next / (eta * eta_hat);
        }
        coordinate_root(p, eta, b, c)
    }

    fn best_switching(&self, i: usize, constant: &[f64], switching: &[f64]) -> f64 {
        let QoeParams { eta, eta_hat, mu1, mu3, .. } = *self.params;
        let ph = self.p_hat[i];
        let mut b = 0.0;
        let mut c = -self.lambda;
        if i > 0 {
            let w = 2.0 * mu1 * ph;
            b += w * (mu3 + 1.0 / (eta_hat * eta_hat));
            c += w * (mu3 * switching[i - 1] + constant[i - 1] / (eta * eta_hat));
        }
        if let Some(&next) = switching.get(i + 1) {
            let w = 2.0 * mu1 * mu3 * self.p_hat[i + 1];
            b += w;
            c += w * next;
        }
        coordinate_root(ph, eta_hat, b, c)
    }

    fn d_constant(&self, i: usize, r: f64, switching: &[f64]) -> f64 {
        let QoeParams { eta, eta_hat, mu1, mu2, .. } = *self.params;
        let mut g = (self.p[i] / eta) / (1.0 + r / eta) - 2.0 * mu2 * self.p[i] * (r - self.previous[i]) - self.lambda;
        if let Some(&next) = switching.get(i + 1) {
            g += 2.0 * mu1 * self.p_hat[i + 1] * (next / eta_hat - r / eta) / eta;
        }
        g
    }

    fn d_switching(&self, i: usize, h: f64, constant: &[f64], switching: &[f64]) -> f64 {
        let QoeParams { eta, eta_hat, mu1, mu3, .. } = *self.params;
        let mut g = (self.p_hat[i] / eta_hat) / (1.0 + h / eta_hat) - self.lambda;
        if i > 0 {
            g -= 2.0 * mu1 * self.p_hat[i] * (mu3 * (h - switching[i - 1]) + (h / eta_hat - constant[i - 1] / eta) / eta_hat);
        }
        if let Some(&next) = switching.get(i + 1) {
            g += 2.0 * mu1 * mu3 * self.p_hat[i + 1] * (next - h);
        }
        g
    }
}

/// Gradient of the Lagrangian at the given rates, as `(d/dR, d/dR̂)`.
pub fn lagrangian_gradient(
    constant: &[f64],
    switching: &[f64],
    popularity: &[f64],
    switching_popularity: &[f64],
    previous: &[f64],
    lambda: f64,
    params: &QoeParams,
) -> (Vec<f64>, Vec<f64>) {
    let problem = Coupled {
        p: popularity,
        p_hat: switching_popularity,
        previous,
        lambda,
        params,
    };
    let n = constant.len();
    (
        (0..n).map(|i| problem.d_constant(i, constant[i], switching)).collect(),
        (0..n)
            .map(|i| problem.d_switching(i, switching[i], constant, switching))
            .collect(),
    )
}

/// Popularity-adaptive allocation of a chunk budget.
///
/// Bisects the Lagrange multiplier: spending above the budget raises the
/// lower end of the bracket, spending at or below it lowers the upper end,
/// until the total is within `epsilon * budget` or the iteration cap is hit.
/// On exhaustion the last iterate that stayed within budget is returned with
/// the `bracket_exhausted` flag.
pub fn allocate(
    chunk: u64,
    popularity: &[f64],
    switching_popularity: &[f64],
    previous: &[f64],
    budget: f64,
    params: &QoeParams,
    bounds: &RateBounds,
) -> Result<Allocation, AllocError> {
    let n = popularity.len();
    if switching_popularity.len() != n || previous.len() != n {
        return Err(AllocError::Shape(format!(
            "popularity lengths {}/{} and previous rates {} differ",
            n,
            switching_popularity.len(),
            previous.len()
        )));
    }
    if popularity.iter().chain(switching_popularity).any(|p| !(*p >= 0.0)) {
        return Err(AllocError::Domain("popularity must be non-negative".into()));
    }
    let minimum = n as f64 * (bounds.r_min + bounds.r_hat_min);
    if minimum > budget {
        return Err(AllocError::Infeasible { budget, minimum });
    }

    let (mut lo, mut hi) = (params.lambda_min, params.lambda_max);
    let mut within_budget: Option<Allocation> = None;
    let mut last: Option<Allocation> = None;
    for iteration in 1..=params.max_iterations {
        let lambda = 0.5 * (lo + hi);
        let warm = last.as_ref().map(|a: &Allocation| (&a.constant[..], &a.switching[..]));
        let (constant, switching) =
            solve_at_lambda_from(popularity, switching_popularity, previous, lambda, params, bounds, warm);
        let spent: f64 = constant.iter().sum::<f64>() + switching.iter().sum::<f64>();
        let alloc = Allocation {
            chunk,
            budget,
            constant,
            switching,
            lambda,
            iterations: iteration,
            flags: AllocationFlags::default(),
        };
        if (budget - spent).abs() < params.epsilon * budget {
            return Ok(alloc);
        }
        if spent > budget {
            lo = lambda;
        } else {
            hi = lambda;
            within_budget = Some(alloc.clone());
        }
        last = Some(alloc);
    }
    let mut alloc = within_budget.or(last).expect("at least one iteration");
    alloc.iterations = params.max_iterations;
    alloc.flags.bracket_exhausted = true;
    Ok(alloc)
}

/// Equal split of the budget over all `2n` representations.
pub fn uniform_allocate(chunk: u64, budget: f64, n: usize, bounds: &RateBounds) -> Result<Allocation, AllocError> {
    let reps = 2 * n;
    let share = budget / reps as f64;
    let lo = bounds.r_min.max(bounds.r_hat_min);
    let hi = bounds.r_max.min(bounds.r_hat_max);
    if n == 0 || share < lo * (1.0 - 1e-12) || share > hi * (1.0 + 1e-12) {
        return Err(AllocError::Infeasible {
            budget,
            minimum: n as f64 * (bounds.r_min + bounds.r_hat_min),
        });
    }
    let constant = vec![share; n];
    let mut switching = vec![share; n];
    // the last representation absorbs the rounding remainder
    let others: f64 = constant.iter().sum::<f64>() + switching[..n - 1].iter().sum::<f64>();
    switching[n - 1] = budget - others;
    Ok(Allocation {
        chunk,
        budget,
        constant,
        switching,
        lambda: 0.0,
        iterations: 0,
        flags: AllocationFlags::default(),
    })
}
