use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Model, Status};
use crate::error::{Error, Result};

/// Finite-dimensional parameter: the probability `p` that an uncensored
/// lifetime is actually observed, and the regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub p: f64,
    pub beta: Vec<f64>,
}

impl Theta {
    pub fn new(p: f64, beta: Vec<f64>) -> Self {
        Theta { p, beta }
    }
}

/// A truncation bound: `tau` for the right model, `rho` for the left one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Truncation {
    /// Largest (right model) or smallest (left model) uncensored duration.
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for Truncation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Truncation::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .map(Truncation::Fixed)
            .ok_or_else(|| Error::InvalidArgument(format!("bad truncation `{s}`")))
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::Auto => f.write_str("auto"),
            Truncation::Fixed(v) => write!(f, "{v}"),
        }
    }
}

/// Compact parameter set for the regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BetaBox {
    /// The same interval for every coordinate.
    Uniform {
        lower: f64,
        upper: f64,
    },
    PerCoordinate(Vec<(f64, f64)>),
}

impl Default for BetaBox {
    fn default() -> Self {
        BetaBox::Uniform {
            lower: -20.0,
            upper: 20.0,
        }
    }
}

impl BetaBox {
    /// `beta = 0` exactly.
    pub fn origin() -> Self {
        BetaBox::Uniform {
            lower: 0.0,
            upper: 0.0,
        }
    }

    pub fn bounds(&self, q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs: Vec<(f64, f64)> = match self {
            BetaBox::Uniform { lower, upper } => vec![(*lower, *upper); q],
            BetaBox::PerCoordinate(v) => {
                if v.len() != q {
                    return Err(Error::InvalidArgument(format!(
                        "coefficient box has {} coordinates, data has {q}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if pairs
            .iter()
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::InvalidArgument("malformed coefficient box".into()));
        }
        Ok(pairs.into_iter().unzip())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub tau: Truncation,
    pub rho: Truncation,
    pub beta_box: BetaBox,
    /// Lower bound for the estimate of `p`.
    pub p_floor: f64,
    /// Convergence threshold on the (projected) score norm.
    pub grad_tol: f64,
    /// Smallest accepted step, in sup norm.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Number of random starting points in addition to `beta = 0`.
    pub random_starts: usize,
    pub seed: u64,
    pub tie_jitter: Option<f64>,
    pub center_covariates: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tau: Truncation::Auto,
            rho: Truncation::Auto,
            beta_box: BetaBox::default(),
            p_floor: 1e-3,
            grad_tol: 1e-8,
            step_tol: 1e-14,
            max_iter: 200,
            random_starts: 4,
            seed: 0x5eed,
            tie_jitter: None,
            center_covariates: true,
        }
    }
}

impl FitConfig {
    /// The truncation setting relevant for `model`.
    pub fn truncation(&self, model: Model) -> Truncation {
        match model {
            Model::RightCs => self.tau,
            Model::LeftCs => self.rho,
        }
    }
}

/// Resolves the truncation point of the dataset's model.
///
/// Right model: `Auto` is the largest uncensored duration, and a fixed `tau`
/// needs at least one record with `x >= tau` and status 0 or 1. Left model:
/// `Auto` is the smallest uncensored duration, and a fixed `rho` needs at
/// least one record with `x <= rho` and status 0 or 2.
pub fn resolve_truncation(dataset: &Dataset, config: &FitConfig) -> Result<f64> {
    let model = dataset.model();
    let events = (0..dataset.n())
        .filter(|&i| dataset.status(i) == Status::Exact)
        .map(|i| dataset.x(i));
    match (model, config.truncation(model)) {
        (Model::RightCs, Truncation::Auto) => Ok(events.fold(f64::NEG_INFINITY, f64::max)),
        (Model::LeftCs, Truncation::Auto) => Ok(events.fold(f64::INFINITY, f64::min)),
        (Model::RightCs, Truncation::Fixed(tau)) => {
            let ok = tau.is_finite()
                && tau > 0.0
                && (0..dataset.n())
                    .any(|i| dataset.x(i) >= tau && dataset.status(i) != Status::Below);
            if ok {
                Ok(tau)
            } else {
                Err(Error::TruncationInfeasible {
                    value: tau,
                    reason: "no observation with x >= tau and status 0 or 1, so the \
                             empirical mass H0([tau,inf)) + H1([tau,inf)) is zero"
                        .into(),
                })
            }
        }
        (Model::LeftCs, Truncation::Fixed(rho)) => {
            let ok = rho.is_finite()
                && rho >= 0.0
                && (0..dataset.n())
                    .any(|i| dataset.x(i) <= rho && dataset.status(i) != Status::Above);
            if ok {
                Ok(rho)
            } else {
                Err(Error::TruncationInfeasible {
                    value: rho,
                    reason: "no observation with x <= rho and status 0 or 2, so the \
                             empirical mass H0([0,rho]) + H2([0,rho]) is zero"
                        .into(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate;

    fn data(x: &[f64], a: &[i64], model: Model) -> Dataset {
        validate(x.iter().zip(a).map(|(&x, &a)| (x, a, vec![x])), model).unwrap()
    }

    #[test]
    fn auto_right_is_largest_event() {
        let d = data(&[1.0, 2.0, 3.0], &[0, 0, 1], Model::RightCs);
        assert_eq!(resolve_truncation(&d, &FitConfig::default()).unwrap(), 2.0);
    }

    #[test]
    fn auto_left_is_smallest_event() {
        let d = data(&[1.0, 2.0, 3.0], &[1, 0, 0], Model::LeftCs);
        assert_eq!(resolve_truncation(&d, &FitConfig::default()).unwrap(), 2.0);
    }

    #[test]
    fn fixed_beyond_data_is_infeasible() {
        let d = data(&[1.0, 2.0, 3.0], &[0, 0, 1], Model::RightCs);
        let cfg = FitConfig {
            tau: Truncation::Fixed(5.0),
            ..FitConfig::default()
        };
        assert!(matches!(
            resolve_truncation(&d, &cfg),
            Err(Error::TruncationInfeasible { value, .. }) if value == 5.0
        ));
        let cfg = FitConfig {
            tau: Truncation::Fixed(3.0),
            ..FitConfig::default()
        };
        assert_eq!(resolve_truncation(&d, &cfg).unwrap(), 3.0);
    }

    #[test]
    fn fixed_left_needs_mass_below() {
        let d = data(&[1.0, 2.0, 3.0], &[1, 0, 0], Model::LeftCs);
        let cfg = FitConfig {
            rho: Truncation::Fixed(1.5),
            ..FitConfig::default()
        };
        assert!(resolve_truncation(&d, &cfg).is_err());
        let cfg = FitConfig {
            rho: Truncation::Fixed(2.0),
            ..FitConfig::default()
        };
        assert_eq!(resolve_truncation(&d, &cfg).unwrap(), 2.0);
    }

    #[test]
    fn parse_truncation() {
        assert_eq!("auto".parse::<Truncation>().unwrap(), Truncation::Auto);
        assert_eq!("2.5".parse::<Truncation>().unwrap(), Truncation::Fixed(2.5));
        assert!("-1".parse::<Truncation>().is_err());
        assert!("x".parse::<Truncation>().is_err());
    }
}
