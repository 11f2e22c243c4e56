//! Ensemble bookkeeping: member fan-out and mean/std summaries.

use serde::{Deserialize, Serialize};

use crate::stats::mean_std;

/// Runs `job(member)` for every member index. Members are independent and
/// carry their own derived seeds, so the result does not depend on
/// scheduling.
pub fn run_members<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(job).collect()
    }
}

/// Mean and standard deviation over the members that succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub failures: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std: 0.0,
            count: 1,
            failures: 0,
        }
    }

    pub fn from_samples(samples: &[f64], failures: usize) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let (mean, std) = mean_std(samples);
        Some(Self {
            mean,
            std,
            count: samples.len(),
            failures,
        })
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }

    /// `self - other` with standard deviations combined in quadrature.
    /// An exact operand (zero spread) does not limit `count`.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        let count = match (self.std == 0.0, other.std == 0.0) {
            (true, false) => other.count,
            (false, true) => self.count,
            _ => self.count.min(other.count),
        };
        Estimate {
            mean: self.mean - other.mean,
            std: self.std.hypot(other.std),
            count,
            failures: self.failures + other.failures,
        }
    }
}
