//! Multiplier bootstrap by weighted refitting.
//!
//! Each replicate draws i.i.d. weights, rescales them to mean one, and
//! reruns the whole estimation pipeline on the weighted empirical measure
//! (weighted counts in the estimate of `p`, weighted counting processes and
//! risk sums). The truncation point of the base fit is kept.

use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FitConfig, Theta};
use crate::data::{Dataset, Model};
use crate::error::{Error, Result};
use crate::estimator::{conditional_curve, fit_with_truncation, FitResult};
use crate::simulate::scenario_rng;

/// Smallest replicate count accepted by [`confidence_intervals`].
pub const MIN_REPLICATES: usize = 50;
/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightLaw {
    #[default]
    Exponential,
    /// `1 + (xi - mean(xi))` with standard normal `xi`, floored at zero.
    Gaussian,
    /// All weights one.
    Unit,
}

impl std::str::FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exponential" => Ok(WeightLaw::Exponential),
            "gaussian" => Ok(WeightLaw::Gaussian),
            "unit" => Ok(WeightLaw::Unit),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight law `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub weight_law: WeightLaw,
    /// Covariate vectors at which conditional curves are resampled.
    pub curve_z: Vec<Vec<f64>>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 200,
            seed: 1,
            weight_law: WeightLaw::Exponential,
            curve_z: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub index: usize,
    /// `None` when the refit failed.
    pub theta: Option<Theta>,
    /// Cumulative hazard (or reverse hazard) on the draw grid.
    pub hazard: Vec<f64>,
    /// One curve per requested covariate vector, on the draw grid.
    pub curves: Vec<Vec<f64>>,
    pub converged: bool,
    /// Weights that had to be floored at zero.
    pub floored_weights: usize,
    pub error: Option<String>,
}

impl Replicate {
    /// Usable for inference: refit succeeded and converged.
    pub fn is_ok(&self) -> bool {
        self.theta.is_some() && self.converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierDraws {
    pub model: Model,
    pub seed: u64,
    pub weight_law: WeightLaw,
    /// Jump times of the base hazard estimate.
    pub grid: Vec<f64>,
    pub curve_z: Vec<Vec<f64>>,
    pub replicates: Vec<Replicate>,
}

impl MultiplierDraws {
    pub fn failed(&self) -> usize {
        self.replicates.iter().filter(|r| !r.is_ok()).count()
    }

    fn usable(&self) -> impl Iterator<Item = &Replicate> {
        self.replicates.iter().filter(|r| r.is_ok())
    }

    /// Standard deviations of the usable replicates of `p` and each `beta`
    /// coordinate.
    pub fn standard_errors(&self) -> (f64, Vec<f64>) {
        let rows: Vec<&Theta> = self.usable().filter_map(|r| r.theta.as_ref()).collect();
        let q = rows.first().map_or(0, |t| t.beta.len());
        let p = sample_sd(rows.iter().map(|t| t.p));
        let beta = (0..q)
            .map(|j| sample_sd(rows.iter().map(|t| t.beta[j])))
            .collect();
        (p, beta)
    }
}

pub(crate) fn sample_sd(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.len() < 2 {
        return f64::NAN;
    }
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Weights for replicate `index`, rescaled to mean one, and the number of
/// Gaussian weights floored at zero.
pub fn draw_weights(law: WeightLaw, n: usize, seed: u64, index: usize) -> (Vec<f64>, usize) {
    let mut rng = scenario_rng(seed, index as u64);
    let mut floored = 0;
    let mut w: Vec<f64> = match law {
        WeightLaw::Unit => return (vec![1.0; n], 0),
        WeightLaw::Exponential => (0..n).map(|_| Exp1.sample(&mut rng)).collect(),
        WeightLaw::Gaussian => {
            let xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mean = xi.iter().sum::<f64>() / n as f64;
            xi.iter()
                .map(|x| {
                    let v = 1.0 + (x - mean);
                    if v < 0.0 {
                        floored += 1;
                        0.0
                    } else {
                        v
                    }
                })
                .collect()
        }
    };
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter_mut().for_each(|v| *v /= mean);
    (w, floored)
}

/// Runs `config.replicates` weighted refits around `base`, in parallel, and
/// returns them in replicate order.
///
/// Fails with `BootstrapDegenerate` when more than a fifth of the replicates
/// fail or do not converge.
pub fn bootstrap(
    dataset: &Dataset,
    base: &FitResult,
    fit_config: &FitConfig,
    config: &BootstrapConfig,
) -> Result<MultiplierDraws> {
    let data = match fit_config.tie_jitter {
        Some(step) if step > 0.0 => dataset.jittered(step),
        _ => dataset.clone(),
    };
    for z in &config.curve_z {
        if z.len() != data.q() {
            return Err(Error::InvalidArgument(format!(
                "curve covariate vector has {} entries, data has {}",
                z.len(),
                data.q()
            )));
        }
    }
    let grid = base.hazard.times().to_vec();
    let replicates: Vec<Replicate> = (0..config.replicates)
        .into_par_iter()
        .map(|index| replicate(&data, base, fit_config, config, &grid, index))
        .collect();
    let draws = MultiplierDraws {
        model: data.model(),
        seed: config.seed,
        weight_law: config.weight_law,
        grid,
        curve_z: config.curve_z.clone(),
        replicates,
    };
    let floored: usize = draws.replicates.iter().map(|r| r.floored_weights).sum();
    if floored > 0 {
        log::warn!("{floored} negative bootstrap weights floored at zero");
    }
    let failed = draws.failed();
    if failed as f64 > MAX_FAILED_FRACTION * config.replicates as f64 {
        return Err(Error::BootstrapDegenerate {
            failed,
            total: config.replicates,
        });
    }
    if failed > 0 {
        log::warn!(
            "{failed} of {} bootstrap replicates failed",
            config.replicates
        );
    }
    Ok(draws)
}

fn replicate(
    data: &Dataset,
    base: &FitResult,
    fit_config: &FitConfig,
    config: &BootstrapConfig,
    grid: &[f64],
    index: usize,
) -> Replicate {
    let (weights, floored_weights) = draw_weights(config.weight_law, data.n(), config.seed, index);
    let outcome = data
        .with_weights(weights)
        .and_then(|d| fit_with_truncation(&d, fit_config, base.truncation));
    let fit = match outcome {
        Ok(f) => f,
        Err(e) => {
            return Replicate {
                index,
                theta: None,
                hazard: Vec::new(),
                curves: Vec::new(),
                converged: false,
                floored_weights,
                error: Some(e.to_string()),
            }
        }
    };
    let hazard = grid.iter().map(|&t| fit.cumulative(t)).collect();
    let curves = config
        .curve_z
        .iter()
        .map(|z| conditional_curve(&fit, z, grid).map(|c| c.values))
        .collect::<Result<Vec<_>>>();
    match curves {
        Ok(curves) => Replicate {
            index,
            converged: fit.converged,
            theta: Some(fit.theta_hat),
            hazard,
            curves,
            floored_weights,
            error: None,
        },
        Err(e) => Replicate {
            index,
            theta: None,
            hazard: Vec::new(),
            curves: Vec::new(),
            converged: false,
            floored_weights,
            error: Some(e.to_string()),
        },
    }
}

/// Sample quantile with linear interpolation between order statistics:
/// position `(m - 1) * prob` in the sorted sample.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let m = sorted.len();
    let h = (m - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed percentile interval of `values` at `level`.
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    (quantile(&v, alpha), quantile(&v, 1.0 - alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervals {
    pub level: f64,
    pub replicates_used: usize,
    pub p: (f64, f64),
    pub beta: Vec<(f64, f64)>,
    /// Pointwise intervals for the cumulative hazard on the draw grid.
    pub hazard: Vec<(f64, f64)>,
    /// Pointwise intervals for each resampled curve on the draw grid.
    pub curves: Vec<Vec<(f64, f64)>>,
}

/// Percentile intervals from the usable replicates.
pub fn confidence_intervals(draws: &MultiplierDraws, level: f64) -> Result<Intervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let usable: Vec<&Replicate> = draws.usable().collect();
    if usable.len() < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            available: usable.len(),
            required: MIN_REPLICATES,
        });
    }
    let theta = |r: &Replicate| r.theta.clone().expect("usable replicate");
    let q = theta(usable[0]).beta.len();
    let column = |f: &dyn Fn(&Replicate) -> f64| -> (f64, f64) {
        let v: Vec<f64> = usable.iter().map(|r| f(r)).collect();
        percentile_interval(&v, level)
    };
    Ok(Intervals {
        level,
        replicates_used: usable.len(),
        p: column(&|r| theta(r).p),
        beta: (0..q).map(|j| column(&|r| theta(r).beta[j])).collect(),
        hazard: (0..draws.grid.len())
            .map(|k| column(&|r| r.hazard[k]))
            .collect(),
        curves: (0..draws.curve_z.len())
            .map(|c| {
                (0..draws.grid.len())
                    .map(|k| column(&|r| r.curves[c][k]))
                    .collect()
            })
            .collect(),
    })
}
