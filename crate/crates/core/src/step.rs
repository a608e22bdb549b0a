use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nondecreasing pure-jump function on `[0, inf)`.
///
/// `eval(t)` is the sum of increments at jump times `<= t`; the value at
/// `0-` is zero.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StepFunction {
    times: Vec<f64>,
    increments: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl PartialEq for StepFunction {
    fn eq(&self, other: &Self) -> bool {
        self.times == other.times && self.increments == other.increments
    }
}

impl StepFunction {
    pub fn new(times: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if times.len() != increments.len() {
            return Err(Error::InvalidArgument(format!(
                "{} jump times but {} increments",
                times.len(),
                increments.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "jump times must be finite and nonnegative".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "jump times must be strictly increasing".into(),
            ));
        }
        if increments.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidArgument(
                "increments must be finite and strictly positive".into(),
            ));
        }
        Ok(Self::from_parts(times, increments))
    }

    pub(crate) fn from_parts(times: Vec<f64>, increments: Vec<f64>) -> Self {
        let cumulative = increments
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect();
        StepFunction {
            times,
            increments,
            cumulative,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .copied()
            .zip(self.increments.iter().copied())
    }

    /// Sum of increments at times `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.prefix(k)
    }

    /// Sum of increments at times `< t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        self.prefix(k)
    }

    /// Sum of increments at times `> t`.
    pub fn tail(&self, t: f64) -> f64 {
        self.total() - self.eval(t)
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// Increment at exactly `t`, zero if `t` is not a jump time.
    pub fn jump_at(&self, t: f64) -> f64 {
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => self.increments[k],
            Err(_) => 0.0,
        }
    }

    fn prefix(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if self.cumulative.len() == self.increments.len() {
            self.cumulative[k - 1]
        } else {
            self.increments[..k].iter().sum()
        }
    }
}
