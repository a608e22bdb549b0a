//! The fitting pipeline and the derived conditional curves.
//!
//! `p` is estimated by its closed-form ratio and held fixed; `beta`
//! maximizes the model's approximate log-likelihood over the coefficient box
//! (multi-start projected BFGS); the baseline cumulative hazard (right
//! model) or reverse hazard (left model) is then the plug-in estimate at the
//! fitted parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_truncation, FitConfig, Theta};
use crate::data::{Dataset, Model};
use crate::empirical::{cumulative_hazard, dot, reverse_hazard};
use crate::error::{Error, Result};
use crate::likelihood::{estimate_p_floored, evaluate};
use crate::optim::{maximize, Optimum, Options};
use crate::step::StepFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitWarning {
    /// The best run stopped with a projected score norm above tolerance.
    NonConvergence { score_norm: f64 },
    /// The maximizer lies on the boundary of the coefficient box.
    BoundaryMaximum { coordinates: Vec<usize> },
    /// The ratio estimate of `p` fell below the configured floor.
    PFloorApplied { raw: f64 },
    /// Current status terms with an empty integration window were dropped.
    DroppedTerms { count: usize },
    /// The covariate variance matrix is not positive definite.
    DegenerateDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub theta_hat: Theta,
    /// Cumulative hazard (right model) or reverse hazard increments (left).
    pub hazard: StepFunction,
    /// Resolved `tau` or `rho`.
    pub truncation: f64,
    pub loglik_at_max: f64,
    pub score_norm_at_max: f64,
    pub iterations: usize,
    pub dropped_terms: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn has_nonconvergence(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, FitWarning::NonConvergence { .. }))
    }

    /// Cumulative baseline hazard `Lambda(t)` (right model) or cumulative
    /// reverse hazard `R(t) = sum_{s > t} dR(s)` (left model).
    pub fn cumulative(&self, t: f64) -> f64 {
        match self.model {
            Model::RightCs => self.hazard.eval(t),
            Model::LeftCs => self.hazard.tail(t),
        }
    }
}

pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let data = match config.tie_jitter {
        Some(step) if step > 0.0 => dataset.jittered(step),
        _ => dataset.clone(),
    };
    fit_with_truncation(&data, config, resolve_truncation(&data, config)?)
}

/// [`fit`] with an already resolved truncation point.
pub fn fit_with_truncation(
    data: &Dataset,
    config: &FitConfig,
    truncation: f64,
) -> Result<FitResult> {
    let model = data.model();
    let q = data.q();
    let (lower, upper) = config.beta_box.bounds(q)?;
    let mut warnings = Vec::new();
    if !data.warnings().is_empty() {
        warnings.push(FitWarning::DegenerateDesign);
    }

    let (p_hat, floored) = estimate_p_floored(data, config.p_floor);
    if floored {
        warnings.push(FitWarning::PFloorApplied {
            raw: crate::likelihood::estimate_p(data),
        });
    }

    let work = if config.center_covariates {
        let mean = data.covariate_mean();
        data.with_covariate_shift(&mean.iter().map(|m| -m).collect::<Vec<_>>())
    } else {
        data.clone()
    };
    let objective = |beta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let r = evaluate(&work, model, p_hat, beta, truncation, true)?;
        Ok((r.value, r.gradient))
    };

    let opts = Options {
        grad_tol: config.grad_tol,
        step_tol: config.step_tol,
        max_iter: config.max_iter,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts = vec![vec![0.0; q]];
    for _ in 0..config.random_starts {
        starts.push(
            (0..q)
                .map(|j| {
                    if lower[j] < upper[j] {
                        rng.random_range(lower[j]..=upper[j])
                    } else {
                        lower[j]
                    }
                })
                .collect(),
        );
    }
    let mut best: Option<Optimum> = None;
    let mut first_error = None;
    for start in &starts {
        match maximize(objective, start, &lower, &upper, &opts) {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some(b) => o.value > b.value,
                };
                if better {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let best = match (best, first_error) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start"),
    };

    let report = evaluate(&work, model, p_hat, &best.x, truncation, true)?;
    let score_norm = report.gradient_norm();
    let bound_coords: Vec<usize> = (0..q)
        .filter(|&j| best.at_bound[j] && lower[j] < upper[j])
        .collect();
    if !best.converged {
        log::warn!(
            "fit did not converge: projected score norm {}",
            best.projected_norm
        );
        warnings.push(FitWarning::NonConvergence {
            score_norm: best.projected_norm,
        });
    }
    if !bound_coords.is_empty() {
        warnings.push(FitWarning::BoundaryMaximum {
            coordinates: bound_coords,
        });
    }
    if report.dropped_terms > 0 {
        warnings.push(FitWarning::DroppedTerms {
            count: report.dropped_terms,
        });
    }

    let theta_hat = Theta::new(p_hat, best.x.clone());
    let hazard = match model {
        Model::RightCs => cumulative_hazard(data, &theta_hat, truncation)?,
        Model::LeftCs => reverse_hazard(data, &theta_hat, truncation)?,
    };
    Ok(FitResult {
        model,
        theta_hat,
        hazard,
        truncation,
        loglik_at_max: report.value,
        score_norm_at_max: score_norm,
        iterations: best.iterations,
        dropped_terms: report.dropped_terms,
        converged: best.converged,
        warnings,
    })
}

/// A conditional survival (right model) or distribution (left model)
/// function evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCurve {
    pub z: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Jump times whose product-integral factor was negative and clamped at 0.
    pub clamped: Vec<f64>,
}

fn check_model(fit: &FitResult, model: Model, z: &[f64]) -> Result<f64> {
    if fit.model != model {
        return Err(Error::InvalidArgument(format!(
            "curve requires a {model} fit, got {}",
            fit.model
        )));
    }
    if z.len() != fit.theta_hat.beta.len() {
        return Err(Error::InvalidArgument(format!(
            "covariate vector has {} entries, expected {}",
            z.len(),
            fit.theta_hat.beta.len()
        )));
    }
    Ok(dot(&fit.theta_hat.beta, z).exp())
}

/// Product-integral factors `max(0, 1 - risk * dH)` along the jumps, and
/// the jump times where the clamp was active.
fn factors(hazard: &StepFunction, risk: f64) -> (Vec<f64>, Vec<f64>) {
    let mut clamped = Vec::new();
    let f = hazard
        .jumps()
        .map(|(t, d)| {
            let v = 1.0 - risk * d;
            if v < 0.0 {
                clamped.push(t);
                0.0
            } else {
                v
            }
        })
        .collect();
    (f, clamped)
}

/// `S(t | z) = prod_{s <= t} (1 - exp(beta'z) dLambda(s))` on `times`.
/// Beyond the truncation point the curve stays at its value at `tau`.
pub fn survival_curve(fit: &FitResult, z: &[f64], times: &[f64]) -> Result<ConditionalCurve> {
    let risk = check_model(fit, Model::RightCs, z)?;
    let (f, clamped) = factors(&fit.hazard, risk);
    let mut prefix = Vec::with_capacity(f.len() + 1);
    prefix.push(1.0);
    for v in &f {
        prefix.push(prefix.last().unwrap() * v);
    }
    let jt = fit.hazard.times();
    let values = times
        .iter()
        .map(|&t| prefix[jt.partition_point(|&s| s <= t)])
        .collect();
    if !clamped.is_empty() {
        log::warn!("survival curve clamped at {} jump(s)", clamped.len());
    }
    Ok(ConditionalCurve {
        z: z.to_vec(),
        times: times.to_vec(),
        values,
        clamped,
    })
}

/// Cure probability estimate `S(tau | z)`.
pub fn cure_rate(fit: &FitResult, z: &[f64]) -> Result<f64> {
    Ok(survival_curve(fit, z, &[fit.truncation])?.values[0])
}

/// `F(t | z) = prod_{s > t} (1 - exp(beta'z) dR(s))` on `times`. Times below
/// `rho` are evaluated at `rho`.
pub fn distribution_curve(fit: &FitResult, z: &[f64], times: &[f64]) -> Result<ConditionalCurve> {
    let risk = check_model(fit, Model::LeftCs, z)?;
    let (f, clamped) = factors(&fit.hazard, risk);
    let m = f.len();
    let mut suffix = vec![1.0; m + 1];
    for k in (0..m).rev() {
        suffix[k] = suffix[k + 1] * f[k];
    }
    let jt = fit.hazard.times();
    let values = times
        .iter()
        .map(|&t| suffix[jt.partition_point(|&s| s <= t.max(fit.truncation))])
        .collect();
    if !clamped.is_empty() {
        log::warn!("distribution curve clamped at {} jump(s)", clamped.len());
    }
    Ok(ConditionalCurve {
        z: z.to_vec(),
        times: times.to_vec(),
        values,
        clamped,
    })
}

/// Zero-lifetime probability estimate `F(rho | z)`.
pub fn zero_prob(fit: &FitResult, z: &[f64]) -> Result<f64> {
    Ok(distribution_curve(fit, z, &[fit.truncation])?.values[0])
}

/// Survival (right model) or distribution (left model) curve on `times`.
pub fn conditional_curve(fit: &FitResult, z: &[f64], times: &[f64]) -> Result<ConditionalCurve> {
    match fit.model {
        Model::RightCs => survival_curve(fit, z, times),
        Model::LeftCs => distribution_curve(fit, z, times),
    }
}
