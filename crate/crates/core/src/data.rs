//! Observations, datasets and their validation.
//!
//! A record is a duration `x`, a status `a` and a covariate vector `z`:
//!
//! * `a = 0`: the lifetime was observed exactly, `T = x`;
//! * `a = 1`: the lifetime exceeds the duration, `T > x`;
//! * `a = 2`: the lifetime did not exceed the duration, `T <= x`.
//!
//! Which of statuses 1 and 2 plays the censoring role and which plays the
//! current status role depends on the [`Model`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    /// `T = x`.
    Exact = 0,
    /// `T > x`.
    Above = 1,
    /// `T <= x`.
    Below = 2,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<Status> {
        match code {
            0 => Some(Status::Exact),
            1 => Some(Status::Above),
            2 => Some(Status::Below),
            _ => None,
        }
    }
}

/// The two latent censoring mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Right censoring combined with current status (status 2) records.
    #[serde(rename = "right-cs")]
    RightCs,
    /// Left censoring combined with current status (status 1) records.
    #[serde(rename = "left-cs")]
    LeftCs,
}

impl Model {
    /// Status whose risk-set contribution is weighted by `p`.
    pub fn weighted_status(self) -> Status {
        match self {
            Model::RightCs => Status::Above,
            Model::LeftCs => Status::Below,
        }
    }

    /// Status of the current status records entering the likelihood through
    /// `log(1 - exp(-V))`.
    pub fn current_status(self) -> Status {
        match self {
            Model::RightCs => Status::Below,
            Model::LeftCs => Status::Above,
        }
    }

    pub fn mirrored(self) -> Model {
        match self {
            Model::RightCs => Model::LeftCs,
            Model::LeftCs => Model::RightCs,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::RightCs => "right-cs",
            Model::LeftCs => "left-cs",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "right-cs" | "right" | "rightcs" => Ok(Model::RightCs),
            "left-cs" | "left" | "leftcs" => Ok(Model::LeftCs),
            other => Err(Error::InvalidArgument(format!(
                "unknown model `{other}` (expected right-cs or left-cs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub status: Status,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataWarning {
    /// The covariate sample variance matrix is not positive definite.
    DegenerateDesign,
}

/// A validated sample, sorted by duration.
///
/// Storage is columnar. Every empirical average is computed as
/// `(1/n) * sum_i w_i * (...)`; the weights are all one unless the dataset
/// was derived with [`Dataset::with_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    model: Model,
    q: usize,
    x: Vec<f64>,
    status: Vec<Status>,
    z: Vec<f64>,
    weights: Vec<f64>,
    z_bound: f64,
    warnings: Vec<DataWarning>,
}

/// Validates raw `(x, a, z)` records and builds a sorted [`Dataset`].
///
/// Records are ordered by `x`, then status code, then covariates
/// (lexicographically), so that the same multiset of records always yields
/// the same dataset. Exact events therefore precede censorings at tied times.
pub fn validate<I>(records: I, model: Model) -> Result<Dataset>
where
    I: IntoIterator<Item = (f64, i64, Vec<f64>)>,
{
    let mut rows: Vec<Observation> = Vec::new();
    let mut q = None;
    for (index, (x, code, z)) in records.into_iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::NonFiniteValue { index, field: "x" });
        }
        let status = Status::from_code(code).ok_or(Error::BadStatusCode { index, code })?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, field: "z" });
        }
        match q {
            None => {
                if z.is_empty() {
                    return Err(Error::NoCovariates);
                }
                q = Some(z.len());
            }
            Some(expected) if expected != z.len() => {
                return Err(Error::InconsistentCovariateDim {
                    index,
                    expected,
                    found: z.len(),
                })
            }
            _ => {}
        }
        rows.push(Observation { x, status, z });
    }
    let q = q.ok_or(Error::Empty)?;
    Dataset::from_rows(rows, q, model, None)
}

fn record_order(a: &Observation, b: &Observation) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.status.cmp(&b.status))
        .then_with(|| {
            a.z.iter()
                .zip(&b.z)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

impl Dataset {
    fn from_rows(
        mut rows: Vec<Observation>,
        q: usize,
        model: Model,
        weights: Option<Vec<f64>>,
    ) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        if !rows.iter().any(|r| r.status == Status::Exact) {
            return Err(Error::NoUncensoredEvents);
        }
        let n = rows.len();
        // weights travel with their rows through the sort
        let mut tagged: Vec<(Observation, f64)> = match weights {
            Some(w) => rows.drain(..).zip(w).collect(),
            None => rows.drain(..).map(|r| (r, 1.0)).collect(),
        };
        tagged.sort_by(|a, b| record_order(&a.0, &b.0));

        let mut data = Dataset {
            model,
            q,
            x: Vec::with_capacity(n),
            status: Vec::with_capacity(n),
            z: Vec::with_capacity(n * q),
            weights: Vec::with_capacity(n),
            z_bound: 0.0,
            warnings: Vec::new(),
        };
        for (row, w) in tagged {
            data.x.push(row.x);
            data.status.push(row.status);
            data.z_bound = data.z_bound.max(norm(&row.z));
            data.z.extend(row.z);
            data.weights.push(w);
        }
        if !data.covariance_is_positive_definite() {
            log::warn!("covariate sample variance matrix is not positive definite");
            data.warnings.push(DataWarning::DegenerateDesign);
        }
        Ok(data)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn status(&self, i: usize) -> Status {
        self.status[i]
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.z[i * self.q..(i + 1) * self.q]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn durations(&self) -> &[f64] {
        &self.x
    }

    pub fn statuses(&self) -> &[Status] {
        &self.status
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest covariate norm in the sample.
    pub fn z_bound(&self) -> f64 {
        self.z_bound
    }

    pub fn warnings(&self) -> &[DataWarning] {
        &self.warnings
    }

    pub fn is_unit_weighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.n()).map(move |i| Observation {
            x: self.x[i],
            status: self.status[i],
            z: self.z(i).to_vec(),
        })
    }

    /// Number of records with status `k`.
    pub fn count(&self, k: Status) -> usize {
        self.status.iter().filter(|&&s| s == k).count()
    }

    /// Replaces the observation weights. Weights are attached in the sorted
    /// order of the dataset.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Dataset> {
        if weights.len() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} observations",
                weights.len(),
                self.n()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let mut out = self.clone();
        out.weights = weights;
        Ok(out)
    }

    /// Translates every covariate vector by `shift`.
    pub fn with_covariate_shift(&self, shift: &[f64]) -> Dataset {
        assert_eq!(shift.len(), self.q, "shift dimension");
        let mut out = self.clone();
        for row in out.z.chunks_mut(self.q) {
            for (v, d) in row.iter_mut().zip(shift) {
                *v += d;
            }
        }
        out.z_bound = out.z.chunks(self.q).map(norm).fold(0.0, f64::max);
        out
    }

    /// Multiplies covariate `j` by `factor`.
    pub fn with_covariate_scale(&self, j: usize, factor: f64) -> Dataset {
        let mut out = self.clone();
        for row in out.z.chunks_mut(self.q) {
            row[j] *= factor;
        }
        out.z_bound = out.z.chunks(self.q).map(norm).fold(0.0, f64::max);
        out
    }

    /// Breaks ties in `x` by adding `i * step` to the `i`-th sorted duration.
    pub fn jittered(&self, step: f64) -> Dataset {
        let mut out = self.clone();
        for (i, x) in out.x.iter_mut().enumerate() {
            *x += i as f64 * step;
        }
        out
    }

    /// Time reflection `x -> horizon - x` with statuses 1 and 2 exchanged,
    /// which maps one model onto the other. Requires `horizon >= max x`.
    pub fn mirrored(&self, horizon: f64) -> Result<Dataset> {
        let max_x = self.x.iter().copied().fold(0.0, f64::max);
        if !(horizon >= max_x) {
            return Err(Error::InvalidArgument(format!(
                "reflection horizon {horizon} below largest duration {max_x}"
            )));
        }
        let rows = (0..self.n())
            .map(|i| Observation {
                x: horizon - self.x[i],
                status: match self.status[i] {
                    Status::Exact => Status::Exact,
                    Status::Above => Status::Below,
                    Status::Below => Status::Above,
                },
                z: self.z(i).to_vec(),
            })
            .collect();
        Dataset::from_rows(
            rows,
            self.q,
            self.model.mirrored(),
            Some(self.weights.clone()),
        )
    }

    /// Weighted covariate mean.
    pub fn covariate_mean(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mut mean = vec![0.0; self.q];
        for i in 0..self.n() {
            for (m, v) in mean.iter_mut().zip(self.z(i)) {
                *m += self.weights[i] * v;
            }
        }
        if total > 0.0 {
            mean.iter_mut().for_each(|m| *m /= total);
        }
        mean
    }

    fn covariance_is_positive_definite(&self) -> bool {
        let n = self.n();
        let q = self.q;
        if n < 2 {
            return false;
        }
        let mean = self.covariate_mean();
        let mut cov = vec![0.0; q * q];
        for i in 0..n {
            let z = self.z(i);
            for r in 0..q {
                for c in 0..=r {
                    cov[r * q + c] += (z[r] - mean[r]) * (z[c] - mean[c]);
                }
            }
        }
        let scale = cov.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        // Cholesky on the lower triangle
        let mut l = vec![0.0; q * q];
        for r in 0..q {
            for c in 0..=r {
                let mut s = cov[r * q + c];
                for k in 0..c {
                    s -= l[r * q + k] * l[c * q + k];
                }
                if r == c {
                    if s <= 1e-12 * scale {
                        return false;
                    }
                    l[r * q + r] = s.sqrt();
                } else {
                    l[r * q + c] = s / l[c * q + c];
                }
            }
        }
        true
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
