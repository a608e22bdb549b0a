//! Empirical functionals: counting processes, exponentially weighted risk
//! sums and the plug-in cumulative (reverse) hazards.
//!
//! Risk sets are closed: the right model uses `1(X >= t)` and the left model
//! `1(X <= t)`. Counting processes use `1(X <= t)`.

use crate::config::Theta;
use crate::data::{Dataset, Model, Status};
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// Normalized counting process `(1/n) sum_i w_i 1(X_i <= t, A_i = k)`.
pub fn counting_process(data: &Dataset, k: Status) -> StepFunction {
    let n = data.n() as f64;
    let mut times = Vec::new();
    let mut incs: Vec<f64> = Vec::new();
    for i in 0..data.n() {
        if data.status(i) != k || data.weight(i) == 0.0 {
            continue;
        }
        let x = data.x(i);
        if times.last() == Some(&x) {
            *incs.last_mut().unwrap() += data.weight(i) / n;
        } else {
            times.push(x);
            incs.push(data.weight(i) / n);
        }
    }
    StepFunction::from_parts(times, incs)
}

/// The exponentially weighted sums `(1/n) sum_i w_i exp(beta'Z_i) Z_i^l 1(.)`
/// split by status, at a single time point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSums {
    /// Order-0 sums indexed by status code.
    pub order0: [f64; 3],
    /// Order-1 (vector) sums indexed by status code.
    pub order1: [Vec<f64>; 3],
}

impl RiskSums {
    /// Sums over the right-model risk set `X_i >= t`.
    pub fn at_least(data: &Dataset, t: f64, beta: &[f64]) -> RiskSums {
        Self::collect(data, beta, |x| x >= t)
    }

    /// Sums over the left-model risk set `X_i <= t`.
    pub fn at_most(data: &Dataset, t: f64, beta: &[f64]) -> RiskSums {
        Self::collect(data, beta, |x| x <= t)
    }

    fn collect(data: &Dataset, beta: &[f64], in_set: impl Fn(f64) -> bool) -> RiskSums {
        let q = data.q();
        let n = data.n() as f64;
        let mut order0 = [0.0; 3];
        let mut order1 = [vec![0.0; q], vec![0.0; q], vec![0.0; q]];
        for i in 0..data.n() {
            if !in_set(data.x(i)) {
                continue;
            }
            let z = data.z(i);
            let r = data.weight(i) * dot(beta, z).exp() / n;
            let k = data.status(i).code() as usize;
            order0[k] += r;
            for (s, v) in order1[k].iter_mut().zip(z) {
                *s += r * v;
            }
        }
        RiskSums { order0, order1 }
    }

    /// `S_0 + p S_k` for order 0.
    pub fn combined0(&self, p: f64, weighted: Status) -> f64 {
        self.order0[0] + p * self.order0[weighted.code() as usize]
    }

    /// `S_0 + p S_k` for order 1.
    pub fn combined1(&self, p: f64, weighted: Status) -> Vec<f64> {
        let k = weighted.code() as usize;
        self.order1[0]
            .iter()
            .zip(&self.order1[k])
            .map(|(a, b)| a + p * b)
            .collect()
    }
}

/// Order-0 risk sum for a single status, `l = 0`.
pub fn risk_sum0(data: &Dataset, t: f64, beta: &[f64], k: Status) -> f64 {
    RiskSums::at_least(data, t, beta).order0[k.code() as usize]
}

/// Order-1 risk sum for a single status, `l = 1`.
pub fn risk_sum1(data: &Dataset, t: f64, beta: &[f64], k: Status) -> Vec<f64> {
    RiskSums::at_least(data, t, beta).order1[k.code() as usize].clone()
}

/// Combined order-0 risk at `t` for the dataset's model: `S_0 + p S_1` over
/// `X >= t` (right) or `F_0 + p F_2` over `X <= t` (left).
pub fn combined_risk0(data: &Dataset, t: f64, theta: &Theta) -> f64 {
    let model = data.model();
    sums_for(data, model, t, &theta.beta).combined0(theta.p, model.weighted_status())
}

/// Combined order-1 risk at `t`, see [`combined_risk0`].
pub fn combined_risk1(data: &Dataset, t: f64, theta: &Theta) -> Vec<f64> {
    let model = data.model();
    sums_for(data, model, t, &theta.beta).combined1(theta.p, model.weighted_status())
}

fn sums_for(data: &Dataset, model: Model, t: f64, beta: &[f64]) -> RiskSums {
    match model {
        Model::RightCs => RiskSums::at_least(data, t, beta),
        Model::LeftCs => RiskSums::at_most(data, t, beta),
    }
}

/// Plug-in baseline cumulative hazard: a jump of `dN(s) / E(s; p, beta)` at
/// every event time `s <= tau`.
pub fn cumulative_hazard(data: &Dataset, theta: &Theta, tau: f64) -> Result<StepFunction> {
    hazard_steps(data, Model::RightCs, theta, tau)
}

/// Plug-in baseline reverse hazard increments `dN(s) / L(s; p, beta)` at
/// every event time `s >= rho`. The cumulative reverse hazard at `t` is the
/// sum of increments strictly after `t`, [`StepFunction::tail`].
pub fn reverse_hazard(data: &Dataset, theta: &Theta, rho: f64) -> Result<StepFunction> {
    hazard_steps(data, Model::LeftCs, theta, rho)
}

fn hazard_steps(data: &Dataset, model: Model, theta: &Theta, bound: f64) -> Result<StepFunction> {
    let sw = sweep(data, model, theta.p, &theta.beta, bound, false)?;
    let scale = (-sw.shift).exp();
    let mut jumps: Vec<(f64, f64)> = sw
        .groups
        .iter()
        .map(|g| (g.time, g.dn / g.e0p * scale))
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (times, incs) = jumps.into_iter().unzip();
    Ok(StepFunction::from_parts(times, incs))
}

/// Quantities at one distinct event time inside the truncation window.
///
/// Risk sums are computed from `exp(beta'z - shift)`, see [`Sweep::shift`].
#[derive(Debug, Clone)]
pub(crate) struct EventGroup {
    pub time: f64,
    /// Weighted event mass divided by `n`.
    pub dn: f64,
    /// `E^(0)(t; p, beta)`.
    pub e0p: f64,
    /// `E^(0)(t; 1, beta)`.
    pub e0one: f64,
    pub e1p: Vec<f64>,
    pub e1one: Vec<f64>,
}

/// One pass over the data for a fixed `(p, beta)`.
///
/// All linear predictors are shifted by their maximum before
/// exponentiation. The likelihood is invariant under that shift; hazard
/// increments are multiplied back by `exp(-shift)`.
#[derive(Debug, Clone)]
pub(crate) struct Sweep {
    pub shift: f64,
    /// Event groups ordered along the integration direction: increasing time
    /// for the right model, decreasing time for the left model.
    pub groups: Vec<EventGroup>,
    /// `(1/n) sum_events w_i (eta_i - shift - log E(X_i))`.
    pub event_term: f64,
    /// `(1/n) sum_events w_i (Z_i - E1(X_i) / E0(X_i))`; empty unless
    /// first-order sums were requested.
    pub event_grad: Vec<f64>,
}

/// Computes risk sums at every event time inside the truncation window with
/// a single sweep along the risk-set direction (decreasing time for the
/// right model, increasing for the left one).
pub(crate) fn sweep(
    data: &Dataset,
    model: Model,
    p: f64,
    beta: &[f64],
    bound: f64,
    first_order: bool,
) -> Result<Sweep> {
    let n = data.n();
    let q = data.q();
    let nf = n as f64;
    let weighted = model.weighted_status();
    let shift = (0..n)
        .map(|i| dot(beta, data.z(i)))
        .fold(f64::NEG_INFINITY, f64::max);

    let in_window = |t: f64| match model {
        Model::RightCs => t <= bound,
        Model::LeftCs => t >= bound,
    };
    // risk-set order: the running sums cover every record already visited
    let at = |k: usize| match model {
        Model::RightCs => n - 1 - k,
        Model::LeftCs => k,
    };

    let mut a0 = 0.0;
    let mut a1 = 0.0;
    let mut b0 = vec![0.0; if first_order { q } else { 0 }];
    let mut b1 = b0.clone();
    let mut groups = Vec::new();
    let mut event_term = 0.0;
    let mut event_grad = vec![0.0; if first_order { q } else { 0 }];

    let mut k = 0;
    while k < n {
        let t = data.x(at(k));
        let mut end = k;
        let mut dn = 0.0;
        let mut eta_sum = 0.0;
        let mut z_sum = vec![0.0; if first_order { q } else { 0 }];
        while end < n && data.x(at(end)) == t {
            let i = at(end);
            let w = data.weight(i);
            end += 1;
            if w == 0.0 {
                continue;
            }
            let z = data.z(i);
            let eta = dot(beta, z) - shift;
            let r = w * eta.exp();
            let status = data.status(i);
            if status == Status::Exact {
                a0 += r;
                dn += w;
                eta_sum += w * eta;
                if first_order {
                    axpy(r, z, &mut b0);
                    axpy(w, z, &mut z_sum);
                }
            } else if status == weighted {
                a1 += r;
                if first_order {
                    axpy(r, z, &mut b1);
                }
            }
        }
        k = end;
        if dn == 0.0 || !in_window(t) {
            continue;
        }
        let e0p = (a0 + p * a1) / nf;
        if !(e0p > 0.0) {
            return Err(Error::ZeroRiskSet(t));
        }
        let dn = dn / nf;
        event_term += eta_sum / nf - dn * e0p.ln();
        let (e1p, e1one) = if first_order {
            let e1p: Vec<f64> = b0.iter().zip(&b1).map(|(u, v)| (u + p * v) / nf).collect();
            let e1one: Vec<f64> = b0.iter().zip(&b1).map(|(u, v)| (u + v) / nf).collect();
            for j in 0..q {
                event_grad[j] += z_sum[j] / nf - dn * e1p[j] / e0p;
            }
            (e1p, e1one)
        } else {
            (Vec::new(), Vec::new())
        };
        groups.push(EventGroup {
            time: t,
            dn,
            e0p,
            e0one: (a0 + a1) / nf,
            e1p,
            e1one,
        });
    }
    groups.reverse();
    Ok(Sweep {
        shift,
        groups,
        event_term,
        event_grad,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
