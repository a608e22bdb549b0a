//! Monte Carlo study harness: repeated simulation and fitting across sample
//! sizes, with optional bootstrap coverage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap, confidence_intervals, sample_sd, BootstrapConfig, WeightLaw};
use crate::config::FitConfig;
use crate::data::Model;
use crate::error::{Error, Result};
use crate::estimator::{conditional_curve, FitResult};
use crate::simulate::{simulate_stream, ScenarioSpec};

/// Largest absolute deviation between the fitted cumulative (reverse)
/// hazard and a continuous monotone `truth` over the identified range:
/// `[0, tau]` for the right model, `[rho, inf)` for the left one. Both sides
/// of every jump are compared, which gives the exact supremum.
pub fn sup_hazard_error(fit: &FitResult, truth: impl Fn(f64) -> f64) -> f64 {
    let h = &fit.hazard;
    let mut points: Vec<f64> = h.times().to_vec();
    points.push(fit.truncation);
    points
        .into_iter()
        .map(|u| {
            let (at, before) = match fit.model {
                Model::RightCs => (h.eval(u), h.eval_left(u)),
                // the left limit at rho lies outside the identified range
                Model::LeftCs if u <= fit.truncation => (h.tail(u), h.tail(u)),
                Model::LeftCs => (h.tail(u), h.tail(u) + h.jump_at(u)),
            };
            let v = truth(u);
            (at - v).abs().max((before - v).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reps: usize,
    pub grid_n: Vec<usize>,
    pub fit: FitConfig,
    /// Bootstrap replicates per dataset; zero disables coverage.
    pub bootstrap_replicates: usize,
    pub weight_law: WeightLaw,
    pub level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            reps: 200,
            grid_n: vec![200, 500, 2000],
            fit: FitConfig::default(),
            bootstrap_replicates: 0,
            weight_law: WeightLaw::Exponential,
            level: 0.95,
        }
    }
}

/// Outcome of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub stream: u64,
    pub p_hat: f64,
    pub beta_hat: Vec<f64>,
    pub beta_error_norm: f64,
    pub sup_hazard_error: f64,
    /// `S_T(tau | 0)` (right model) or `F_T(rho | 0)` (left model).
    pub curve_at_truncation: f64,
    pub converged: bool,
    /// Per coordinate: whether the percentile interval covers `beta0`.
    pub covered: Vec<bool>,
    pub bootstrap_sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub reps: usize,
    pub failed: usize,
    pub mean_p: f64,
    pub bias_p: f64,
    pub sd_p: f64,
    pub bias_beta: Vec<f64>,
    pub sd_beta: Vec<f64>,
    pub mean_beta_error: f64,
    pub mean_sup_hazard_error: f64,
    pub mean_curve_at_truncation: f64,
    /// Empty without bootstrap.
    pub coverage: Vec<f64>,
    pub mean_bootstrap_sd: Vec<f64>,
}

/// Simulates, fits and (optionally) bootstraps one dataset of size `n`
/// drawn from stream `stream` of the scenario seed.
pub fn run_rep(
    spec: &ScenarioSpec,
    n: usize,
    stream: u64,
    config: &StudyConfig,
) -> Result<RepOutcome> {
    let mut s = spec.clone();
    s.n = n;
    let data = simulate_stream(&s, stream)?;
    let fit = crate::estimator::fit(&data, &config.fit)?;
    let beta0 = &spec.beta0;
    let beta_error_norm = fit
        .theta_hat
        .beta
        .iter()
        .zip(beta0)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let zero = vec![0.0; spec.q()];
    let curve_at_truncation = conditional_curve(&fit, &zero, &[fit.truncation])?.values[0];
    let (mut covered, mut bootstrap_sd) = (Vec::new(), Vec::new());
    if config.bootstrap_replicates > 0 {
        let boot = BootstrapConfig {
            replicates: config.bootstrap_replicates,
            seed: spec.seed ^ stream.rotate_left(17),
            weight_law: config.weight_law,
            curve_z: Vec::new(),
        };
        let draws = bootstrap(&data, &fit, &config.fit, &boot)?;
        let ci = confidence_intervals(&draws, config.level)?;
        covered = ci
            .beta
            .iter()
            .zip(beta0)
            .map(|((lo, hi), b)| lo <= b && b <= hi)
            .collect();
        bootstrap_sd = draws.standard_errors().1;
    }
    Ok(RepOutcome {
        stream,
        p_hat: fit.theta_hat.p,
        sup_hazard_error: sup_hazard_error(&fit, |t| spec.baseline_cumulative(t)),
        beta_hat: fit.theta_hat.beta,
        beta_error_norm,
        curve_at_truncation,
        converged: fit.converged,
        covered,
        bootstrap_sd,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = v.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

/// Summary of the successful replicates at one sample size.
pub fn summarize(spec: &ScenarioSpec, n: usize, outcomes: &[Result<RepOutcome>]) -> StudyRow {
    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let q = spec.q();
    let mean_p = mean(ok.iter().map(|o| o.p_hat));
    let with_boot: Vec<&&RepOutcome> = ok.iter().filter(|o| !o.covered.is_empty()).collect();
    StudyRow {
        n,
        reps: outcomes.len(),
        failed: outcomes.len() - ok.len(),
        mean_p,
        bias_p: mean_p - spec.p0,
        sd_p: sample_sd(ok.iter().map(|o| o.p_hat)),
        bias_beta: (0..q)
            .map(|j| mean(ok.iter().map(|o| o.beta_hat[j])) - spec.beta0[j])
            .collect(),
        sd_beta: (0..q)
            .map(|j| sample_sd(ok.iter().map(|o| o.beta_hat[j])))
            .collect(),
        mean_beta_error: mean(ok.iter().map(|o| o.beta_error_norm)),
        mean_sup_hazard_error: mean(ok.iter().map(|o| o.sup_hazard_error)),
        mean_curve_at_truncation: mean(ok.iter().map(|o| o.curve_at_truncation)),
        coverage: if with_boot.is_empty() {
            Vec::new()
        } else {
            (0..q)
                .map(|j| {
                    mean(
                        with_boot
                            .iter()
                            .map(|o| if o.covered[j] { 1.0 } else { 0.0 }),
                    )
                })
                .collect()
        },
        mean_bootstrap_sd: if with_boot.is_empty() {
            Vec::new()
        } else {
            (0..q)
                .map(|j| mean(with_boot.iter().map(|o| o.bootstrap_sd[j])))
                .collect()
        },
    }
}

/// Stream index of replicate `rep` at the `k`-th sample size.
pub fn stream_index(k: usize, rep: usize) -> u64 {
    ((k as u64) << 32) | rep as u64
}

/// Runs the study; replicates are processed in parallel and aggregated in
/// replicate order.
pub fn run_study(spec: &ScenarioSpec, config: &StudyConfig) -> Result<Vec<StudyRow>> {
    spec.check()?;
    if config.reps == 0 || config.grid_n.is_empty() {
        return Err(Error::InvalidArgument(
            "study needs reps > 0 and a sample size".into(),
        ));
    }
    let mut rows = Vec::new();
    for (k, &n) in config.grid_n.iter().enumerate() {
        let outcomes: Vec<Result<RepOutcome>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| run_rep(spec, n, stream_index(k, rep), config))
            .collect();
        for (rep, o) in outcomes.iter().enumerate() {
            if let Err(e) = o {
                log::warn!("n = {n}, replicate {rep}: {e}");
            }
        }
        rows.push(summarize(spec, n, &outcomes));
    }
    Ok(rows)
}
