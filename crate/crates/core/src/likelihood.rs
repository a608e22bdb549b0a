//! The closed-form estimate of `p`, the approximate log-likelihoods of both
//! models with their analytical scores, and the Kim-type full likelihood
//! used as a diagnostic.

use serde::{Deserialize, Serialize};

use crate::config::Theta;
use crate::data::{Dataset, Model, Status};
use crate::empirical::{dot, sweep};
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// Value, gradient in `beta` and bookkeeping of one likelihood evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub value: f64,
    /// Gradient with respect to `beta`; empty when not requested.
    pub gradient: Vec<f64>,
    /// Event term, current status term, compensator term.
    pub terms: [f64; 3],
    pub event_terms: usize,
    pub current_status_terms: usize,
    /// Current status records dropped because no event precedes them in the
    /// integration window (`V_i = 0`).
    pub dropped_terms: usize,
}

impl ScoreReport {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Ratio estimate of `p`: `#{A = 0} / #{A != 1}` for the right model and
/// `#{A = 0} / #{A != 2}` for the left model (weighted counts).
pub fn estimate_p(data: &Dataset) -> f64 {
    let excluded = match data.model() {
        Model::RightCs => Status::Above,
        Model::LeftCs => Status::Below,
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        let w = data.weight(i);
        match data.status(i) {
            Status::Exact => {
                num += w;
                den += w;
            }
            s if s != excluded => den += w,
            _ => {}
        }
    }
    num / den
}

/// [`estimate_p`] floored at `floor`. The flag reports whether the floor was
/// applied.
pub fn estimate_p_floored(data: &Dataset, floor: f64) -> (f64, bool) {
    let p = estimate_p(data);
    if !(p >= floor) {
        log::warn!("ratio estimate of p below floor {floor}; using the floor");
        (floor, true)
    } else {
        (p, false)
    }
}

/// `log(1 - exp(-v))` for `v > 0`.
pub fn log1mexp(v: f64) -> f64 {
    if v < std::f64::consts::LN_2 {
        (-(-v).exp_m1()).ln()
    } else {
        (-(-v).exp()).ln_1p()
    }
}

/// Evaluates the approximate log-likelihood of `model` at `(p, beta)` with
/// truncation `bound` (`tau` or `rho`), optionally with its gradient in
/// `beta`.
pub fn evaluate(
    data: &Dataset,
    model: Model,
    p: f64,
    beta: &[f64],
    bound: f64,
    with_gradient: bool,
) -> Result<ScoreReport> {
    if beta.len() != data.q() {
        return Err(Error::InvalidArgument(format!(
            "beta has {} coordinates, data has {}",
            beta.len(),
            data.q()
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 1]")));
    }
    let q = data.q();
    let nf = data.n() as f64;
    let sw = sweep(data, model, p, beta, bound, with_gradient)?;

    let mut compensator = 0.0;
    let mut grad3 = vec![0.0; if with_gradient { q } else { 0 }];
    for g in &sw.groups {
        compensator -= g.dn * g.e0one / g.e0p;
        if with_gradient {
            let d2 = g.e0p * g.e0p;
            for j in 0..q {
                grad3[j] -= g.dn * (g.e1one[j] * g.e0p - g.e1p[j] * g.e0one) / d2;
            }
        }
    }

    // current status records, visited along the integration direction
    let cs = model.current_status();
    let in_window = |t: f64| match model {
        Model::RightCs => t <= bound,
        Model::LeftCs => t >= bound,
    };
    let reached = |group_time: f64, x: f64| match model {
        Model::RightCs => group_time <= x,
        Model::LeftCs => group_time >= x,
    };
    let n = data.n();
    let order: Box<dyn Iterator<Item = usize>> = match model {
        Model::RightCs => Box::new(0..n),
        Model::LeftCs => Box::new((0..n).rev()),
    };
    let mut cum = 0.0;
    let mut cum_vec = vec![0.0; if with_gradient { q } else { 0 }];
    let mut next = 0;
    let mut cs_term = 0.0;
    let mut grad2 = vec![0.0; if with_gradient { q } else { 0 }];
    let mut cs_count = 0;
    let mut dropped = 0;
    for i in order {
        let w = data.weight(i);
        if data.status(i) != cs || w == 0.0 || !in_window(data.x(i)) {
            continue;
        }
        let x = data.x(i);
        while next < sw.groups.len() && reached(sw.groups[next].time, x) {
            let g = &sw.groups[next];
            cum += g.dn / g.e0p;
            if with_gradient {
                let d2 = g.e0p * g.e0p;
                for j in 0..q {
                    cum_vec[j] += g.dn * g.e1p[j] / d2;
                }
            }
            next += 1;
        }
        let z = data.z(i);
        let scale = (dot(beta, z) - sw.shift).exp();
        let v = scale * cum;
        if !(v > 0.0) {
            dropped += 1;
            continue;
        }
        cs_count += 1;
        cs_term += w / nf * log1mexp(v);
        if with_gradient {
            let ratio = w / nf / v.exp_m1();
            for j in 0..q {
                grad2[j] += ratio * scale * (z[j] * cum - cum_vec[j]);
            }
        }
    }
    if dropped > 0 {
        log::debug!("{dropped} current status terms dropped (no preceding event)");
    }

    let event_terms = (0..n)
        .filter(|&i| {
            data.status(i) == Status::Exact && data.weight(i) > 0.0 && in_window(data.x(i))
        })
        .count();
    let gradient = if with_gradient {
        (0..q)
            .map(|j| sw.event_grad[j] + grad2[j] + grad3[j])
            .collect()
    } else {
        Vec::new()
    };
    let terms = [sw.event_term, cs_term, compensator];
    Ok(ScoreReport {
        value: terms.iter().sum(),
        gradient,
        terms,
        event_terms,
        current_status_terms: cs_count,
        dropped_terms: dropped,
    })
}

/// Approximate log-likelihood of the right-censoring / current status model.
pub fn loglik_right(data: &Dataset, p: f64, beta: &[f64], tau: f64) -> Result<f64> {
    Ok(evaluate(data, Model::RightCs, p, beta, tau, false)?.value)
}

/// Approximate log-likelihood of the left-censoring / current status model.
pub fn loglik_left(data: &Dataset, p: f64, beta: &[f64], rho: f64) -> Result<f64> {
    Ok(evaluate(data, Model::LeftCs, p, beta, rho, false)?.value)
}

/// Gradient of [`loglik_right`] in `beta`.
pub fn score_right(data: &Dataset, p: f64, beta: &[f64], tau: f64) -> Result<Vec<f64>> {
    Ok(evaluate(data, Model::RightCs, p, beta, tau, true)?.gradient)
}

/// Gradient of [`loglik_left`] in `beta`.
pub fn score_left(data: &Dataset, p: f64, beta: &[f64], rho: f64) -> Result<Vec<f64>> {
    Ok(evaluate(data, Model::LeftCs, p, beta, rho, true)?.gradient)
}

/// Derivatives of the score, by central differences of the analytical score:
/// the `q x q` matrix `d U / d beta` (row `j` is the derivative of `U_j`) and
/// the vector `d U / d p`. Diagnostic only.
pub fn score_derivatives(
    data: &Dataset,
    model: Model,
    theta: &Theta,
    bound: f64,
    step: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let q = data.q();
    let score = |p: f64, beta: &[f64]| -> Result<Vec<f64>> {
        Ok(evaluate(data, model, p, beta, bound, true)?.gradient)
    };
    let mut d_beta = vec![vec![0.0; q]; q];
    for k in 0..q {
        let mut hi = theta.beta.clone();
        let mut lo = theta.beta.clone();
        hi[k] += step;
        lo[k] -= step;
        let (u_hi, u_lo) = (score(theta.p, &hi)?, score(theta.p, &lo)?);
        for j in 0..q {
            d_beta[j][k] = (u_hi[j] - u_lo[j]) / (2.0 * step);
        }
    }
    let (p_hi, p_lo) = if theta.p + step > 1.0 {
        (theta.p, theta.p - 2.0 * step)
    } else {
        (theta.p + step, theta.p - step)
    };
    let (u_hi, u_lo) = (score(p_hi, &theta.beta)?, score(p_lo, &theta.beta)?);
    let d_p = (0..q)
        .map(|j| (u_hi[j] - u_lo[j]) / (p_hi - p_lo))
        .collect();
    Ok((d_beta, d_p))
}

/// Log of the Kim-type likelihood
///
/// ```text
/// prod_i {exp(b'Z) dL(X) exp(-exp(b'Z) L(X-))}^{A=0}
///        {exp(-exp(b'Z) L(X))}^{A=1}
///        {1 - exp(-exp(b'Z) L(X))}^{A=2}
/// ```
///
/// with `L` a step function whose jump at an event time plays the role of
/// the hazard rate. Each factor is raised to the observation weight.
pub fn kim_loglik(data: &Dataset, beta: &[f64], hazard: &StepFunction) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..data.n() {
        let w = data.weight(i);
        if w == 0.0 {
            continue;
        }
        let x = data.x(i);
        let risk = dot(beta, data.z(i)).exp();
        total += w * match data.status(i) {
            Status::Exact => {
                let jump = hazard.jump_at(x);
                if jump <= 0.0 {
                    return Err(Error::MissingJumpAtEvent(i));
                }
                risk.ln() + jump.ln() - risk * hazard.eval_left(x)
            }
            Status::Above => -risk * hazard.eval(x),
            Status::Below => {
                let v = risk * hazard.eval(x);
                if !(v > 0.0) {
                    return Err(Error::DegenerateCurrentStatus(i));
                }
                log1mexp(v)
            }
        };
    }
    Ok(total)
}
