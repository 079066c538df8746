use serde::{Deserialize, Serialize};

use super::RateBounds;

/// Sliding-window budget for the next chunk.
///
/// Over- or under-spending on past chunks is paid back over the next `sw`
/// chunks so the long-run average tracks `r_tar * t_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSchedule {
    /// Target rate for all representations together, in rate units per second.
    pub r_tar: f64,
    /// Chunk duration in seconds.
    pub t_d: f64,
    /// Sliding window, in chunks.
    pub sw: u32,
    pub n_coded: u64,
    /// Rate units spent on all coded chunks so far.
    pub r_coded: f64,
    pub n_views: usize,
    pub bounds: RateBounds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetTarget {
    pub bits: f64,
    /// The window formula fell below the sum of minimum rates and was floored.
    pub infeasible: bool,
}

impl BudgetSchedule {
    pub fn new(r_tar: f64, t_d: f64, sw: u32, n_views: usize, bounds: RateBounds) -> Self {
        BudgetSchedule {
            r_tar,
            t_d,
            sw: sw.max(1),
            n_coded: 0,
            r_coded: 0.0,
            n_views,
            bounds,
        }
    }

    pub fn r_avg(&self) -> f64 {
        self.r_tar * self.t_d
    }

    /// Account for a chunk that was coded with `spent` rate units in total.
    pub fn record(&mut self, spent: f64) {
        self.n_coded += 1;
        self.r_coded += spent;
    }

    pub fn target_bits(&self) -> BudgetTarget {
        target_bits(self)
    }
}

pub fn target_bits(schedule: &BudgetSchedule) -> BudgetTarget {
    let sw = schedule.sw.max(1) as f64;
    let raw = (schedule.r_avg() * (schedule.n_coded as f64 + sw) - schedule.r_coded) / sw;
    let floor = schedule.n_views as f64 * (schedule.bounds.r_min + schedule.bounds.r_hat_min);
    if raw < floor {
        BudgetTarget {
            bits: floor,
            infeasible: true,
        }
    } else {
        BudgetTarget {
            bits: raw,
            infeasible: false,
        }
    }
}
