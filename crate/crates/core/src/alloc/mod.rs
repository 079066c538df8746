//! QoE model and popularity-adaptive bit allocation.
//!
//! Rates here are in abstract rate units per chunk (the harness uses
//! megabits); the default QoE parameters are calibrated for megabits.

mod budget;
mod qoe;
mod solve;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use budget::{target_bits, BudgetSchedule, BudgetTarget};
pub use qoe::{qoe_total, QoeBreakdown};
pub use solve::{
    allocate, constant_stationarity, lagrangian_gradient, solve_at_lambda, solve_constant_rate, solve_switching_rate,
    switching_stationarity, uniform_allocate, Neighbor,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("invalid QoE parameters: {0}")]
    Params(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("budget {budget} is below the minimum total rate {minimum}")]
    Infeasible { budget: f64, minimum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QoeParams {
    pub eta: f64,
    pub eta_hat: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Relative budget tolerance of the multiplier search.
    pub epsilon: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_iterations: u32,
    pub stationarity: Stationarity,
}

/// Which stationarity conditions the inner solve enforces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    /// Complete partial derivatives of the Lagrangian, iterated to a fixed point.
    #[default]
    Coupled,
    /// One view-ordered pass of the per-view conditions, each ignoring the
    /// terms it shares with the next view.
    Printed,
}

impl Default for QoeParams {
    fn default() -> Self {
        QoeParams {
            eta: 1.0,
            eta_hat: 4.0,
            mu1: 1.0,
            mu2: 1.0 / 16.0,
            mu3: 1.0,
            epsilon: 0.005,
            lambda_min: 0.0,
            lambda_max: 100.0,
            max_iterations: 64,
            stationarity: Stationarity::Coupled,
        }
    }
}

impl QoeParams {
    pub fn validate(&self) -> Result<(), AllocError> {
        let err = |m: &str| Err(AllocError::Params(m.to_string()));
        if !(self.eta > 0.0 && self.eta_hat > 0.0) {
            return err("eta and eta_hat must be positive");
        }
        if !(self.mu1 >= 0.0 && self.mu2 >= 0.0 && self.mu3 >= 0.0) {
            return err("mu weights must be non-negative");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return err("epsilon must lie in (0, 1)");
        }
        if !(self.lambda_min < self.lambda_max) || self.lambda_min < 0.0 {
            return err("need 0 <= lambda_min < lambda_max");
        }
        if self.max_iterations == 0 {
            return err("max_iterations must be positive");
        }
        Ok(())
    }
}

/// Box constraints on per-representation rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBounds {
    pub r_min: f64,
    pub r_max: f64,
    pub r_hat_min: f64,
    pub r_hat_max: f64,
}

impl RateBounds {
    /// `[0.1, 4] x` the fair share `r_avg / 2n` for both representations.
    pub fn proportional(r_avg: f64, n_views: usize) -> Self {
        let fair = r_avg / (2 * n_views.max(1)) as f64;
        RateBounds {
            r_min: 0.1 * fair,
            r_max: 4.0 * fair,
            r_hat_min: 0.1 * fair,
            r_hat_max: 4.0 * fair,
        }
    }

    pub fn validate(&self) -> Result<(), AllocError> {
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_hat_min > 0.0 && self.r_hat_min <= self.r_hat_max) {
            return Err(AllocError::Params(format!("invalid rate bounds {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, constant: f64, switching: f64) -> bool {
        (self.r_min..=self.r_max).contains(&constant) && (self.r_hat_min..=self.r_hat_max).contains(&switching)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationFlags {
    /// The chunk budget was floored at the sum of minimum rates.
    pub infeasible: bool,
    /// The multiplier search hit its iteration cap before meeting the tolerance.
    pub bracket_exhausted: bool,
}

impl AllocationFlags {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.infeasible {
            parts.push("infeasible");
        }
        if self.bracket_exhausted {
            parts.push("bracket_exhausted");
        }
        parts.join("|")
    }

    pub fn any(&self) -> bool {
        self.infeasible || self.bracket_exhausted
    }
}

/// Rates of every representation for one chunk, indexed by `view - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub chunk: u64,
    pub budget: f64,
    pub constant: Vec<f64>,
    pub switching: Vec<f64>,
    pub lambda: f64,
    pub iterations: u32,
    pub flags: AllocationFlags,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.constant.iter().sum::<f64>() + self.switching.iter().sum::<f64>()
    }

    pub fn n_views(&self) -> usize {
        self.constant.len()
    }

    pub fn within_budget_tolerance(&self, epsilon: f64) -> bool {
        (self.budget - self.total()).abs() <= epsilon * self.budget
    }
}

/// Allocation CSV: `chunk,lambda,view,R,R_hat,flags`.
pub fn write_allocation_csv<W: Write>(out: W, allocations: &[Allocation]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["chunk", "lambda", "view", "R", "R_hat", "flags"])?;
    for a in allocations {
        let flags = a.flags.label();
        for (i, (r, rh)) in a.constant.iter().zip(&a.switching).enumerate() {
            w.write_record([
                a.chunk.to_string(),
                format!("{}", a.lambda),
                (i + 1).to_string(),
                format!("{r}"),
                format!("{rh}"),
                flags.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
