//! Independent reference implementations shared by the integration tests.
//! Everything here works on plain vectors and recomputes every sum from
//! scratch, trading speed for transparency.

#![allow(dead_code, clippy::needless_range_loop)]

use cscox_core::{validate, Dataset, Model, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain records `(x, a, z, w)`.
#[derive(Debug, Clone)]
pub struct Rows {
    pub x: Vec<f64>,
    pub a: Vec<u8>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<f64>,
}

impl Rows {
    pub fn from_dataset(d: &Dataset) -> Rows {
        Rows {
            x: d.durations().to_vec(),
            a: d.statuses().iter().map(|s| s.code()).collect(),
            z: (0..d.n()).map(|i| d.z(i).to_vec()).collect(),
            w: d.weights().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn to_dataset(&self, model: Model) -> Dataset {
        validate(
            (0..self.n()).map(|i| (self.x[i], self.a[i] as i64, self.z[i].clone())),
            model,
        )
        .unwrap()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Random records with continuous durations: `z` uniform on `[-1, 1]^q`,
/// exponential lifetime with rate `exp(beta'z)`, exponential censoring and
/// an independent Bernoulli(`p`) observation indicator.
pub fn random_rows(seed: u64, n: usize, q: usize, p: f64, model: Model) -> Rows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rows = Rows {
        x: Vec::new(),
        a: Vec::new(),
        z: Vec::new(),
        w: Vec::new(),
    };
    while rows.n() < n {
        let z: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rate = dot(&beta, &z).exp();
        let t = -rng.random::<f64>().ln() / rate;
        let c = -rng.random::<f64>().ln() / 0.7;
        let observed = rng.random::<f64>() < p;
        let (x, a) = match model {
            Model::RightCs if c < t => (c, 1),
            Model::RightCs if observed => (t, 0),
            Model::RightCs => (c, 2),
            Model::LeftCs if t < c => (c, 2),
            Model::LeftCs if observed => (t, 0),
            Model::LeftCs => (c, 1),
        };
        rows.x.push(x);
        rows.a.push(a);
        rows.z.push(z);
        rows.w.push(1.0);
    }
    if !rows.a.contains(&0) {
        rows.a[0] = 0;
    }
    rows
}

/// `E(t; p)` of the right model or `L(t; p)` of the left model.
fn risk(r: &Rows, model: Model, beta: &[f64], p: f64, t: f64) -> f64 {
    let n = r.n() as f64;
    (0..r.n())
        .map(|j| {
            let inside = match model {
                Model::RightCs => r.x[j] >= t,
                Model::LeftCs => r.x[j] <= t,
            };
            let weight = match (model, r.a[j]) {
                (_, 0) => 1.0,
                (Model::RightCs, 1) | (Model::LeftCs, 2) => p,
                _ => 0.0,
            };
            if inside {
                r.w[j] * weight * dot(beta, &r.z[j]).exp()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / n
}

/// The approximate log-likelihood written term by term, in `O(n^2)`.
/// Current status terms whose integral vanishes are skipped.
pub fn literal_loglik(r: &Rows, model: Model, p: f64, beta: &[f64], bound: f64) -> f64 {
    let n = r.n() as f64;
    let window = |t: f64| match model {
        Model::RightCs => t <= bound,
        Model::LeftCs => t >= bound,
    };
    let cs_code = match model {
        Model::RightCs => 2,
        Model::LeftCs => 1,
    };
    let mut total = 0.0;
    for i in 0..r.n() {
        if !window(r.x[i]) || r.w[i] == 0.0 {
            continue;
        }
        let eta = dot(beta, &r.z[i]);
        if r.a[i] == 0 {
            total += r.w[i] / n * (eta - risk(r, model, beta, p, r.x[i]).ln());
            total -=
                r.w[i] / n * risk(r, model, beta, 1.0, r.x[i]) / risk(r, model, beta, p, r.x[i]);
        } else if r.a[i] == cs_code {
            let mut v = 0.0;
            for j in 0..r.n() {
                let before = match model {
                    Model::RightCs => r.x[j] <= r.x[i],
                    Model::LeftCs => r.x[j] >= r.x[i],
                };
                if r.a[j] == 0 && before {
                    v += r.w[j] / n * eta.exp() / risk(r, model, beta, p, r.x[j]);
                }
            }
            if v > 0.0 {
                total += r.w[i] / n * (1.0 - (-v).exp()).ln();
            }
        }
    }
    total
}

/// Breslow-tie Cox log partial likelihood, its gradient and Hessian.
pub fn cox_partial(r: &Rows, beta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let q = beta.len();
    let mut value = 0.0;
    let mut grad = vec![0.0; q];
    let mut hess = vec![vec![0.0; q]; q];
    for i in 0..r.n() {
        if r.a[i] != 0 {
            continue;
        }
        let (mut s0, mut s1, mut s2) = (0.0, vec![0.0; q], vec![vec![0.0; q]; q]);
        for j in 0..r.n() {
            if r.x[j] >= r.x[i] {
                let e = r.w[j] * dot(beta, &r.z[j]).exp();
                s0 += e;
                for k in 0..q {
                    s1[k] += e * r.z[j][k];
                    for l in 0..q {
                        s2[k][l] += e * r.z[j][k] * r.z[j][l];
                    }
                }
            }
        }
        value += r.w[i] * (dot(beta, &r.z[i]) - s0.ln());
        for k in 0..q {
            grad[k] += r.w[i] * (r.z[i][k] - s1[k] / s0);
            for l in 0..q {
                hess[k][l] -= r.w[i] * (s2[k][l] / s0 - s1[k] * s1[l] / (s0 * s0));
            }
        }
    }
    (value, grad, hess)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let q = b.len();
    for c in 0..q {
        let piv = (c..q)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..q {
            let f = a[r][c] / a[c][c];
            for k in c..q {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; q];
    for r in (0..q).rev() {
        let s: f64 = (r + 1..q).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Newton-Raphson with step halving on the Cox partial likelihood.
pub fn cox_newton(r: &Rows, q: usize) -> Vec<f64> {
    let mut beta = vec![0.0; q];
    for _ in 0..100 {
        let (value, grad, hess) = cox_partial(r, &beta);
        if grad.iter().map(|g| g.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
        let neg: Vec<Vec<f64>> = hess
            .iter()
            .map(|row| row.iter().map(|v| -v).collect())
            .collect();
        let step = solve(neg, grad.clone());
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-15 {
            break;
        }
        // once the predicted gain is at rounding level the value can no
        // longer arbitrate, so the full step is taken
        let gain = dot(&grad, &step);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            if gain < 1e-10 * value.abs() || cox_partial(r, &cand).0 >= value || t < 1e-10 {
                beta = cand;
                break;
            }
            t /= 2.0;
        }
    }
    beta
}

/// Breslow baseline: `(time, cumulative)` at every distinct event time.
pub fn breslow(r: &Rows, beta: &[f64]) -> Vec<(f64, f64)> {
    let mut times: Vec<f64> = (0..r.n())
        .filter(|&i| r.a[i] == 0)
        .map(|i| r.x[i])
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cum = 0.0;
    times
        .into_iter()
        .map(|t| {
            let d: f64 = (0..r.n())
                .filter(|&i| r.a[i] == 0 && r.x[i] == t)
                .map(|i| r.w[i])
                .sum();
            let s: f64 = (0..r.n())
                .filter(|&j| r.x[j] >= t)
                .map(|j| r.w[j] * dot(beta, &r.z[j]).exp())
                .sum();
            cum += d / s;
            (t, cum)
        })
        .collect()
}

/// Nelson-Aalen estimator at every distinct event time.
pub fn nelson_aalen(x: &[f64], event: &[bool]) -> Vec<(f64, f64)> {
    let mut times: Vec<f64> = x
        .iter()
        .zip(event)
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cum = 0.0;
    times
        .into_iter()
        .map(|t| {
            let d = x.iter().zip(event).filter(|(&s, &e)| e && s == t).count() as f64;
            let y = x.iter().filter(|&&s| s >= t).count() as f64;
            cum += d / y;
            (t, cum)
        })
        .collect()
}

/// Reverse-time Nelson-Aalen: jumps `d(t) / #{x <= t}`, reported as the
/// increment at each distinct event time.
pub fn reverse_nelson_aalen(x: &[f64], event: &[bool]) -> Vec<(f64, f64)> {
    let mut times: Vec<f64> = x
        .iter()
        .zip(event)
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let d = x.iter().zip(event).filter(|(&s, &e)| e && s == t).count() as f64;
            let y = x.iter().filter(|&&s| s <= t).count() as f64;
            (t, d / y)
        })
        .collect()
}

/// Central finite difference of `f` in each coordinate.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let mut hi = at.to_vec();
            let mut lo = at.to_vec();
            hi[k] += h;
            lo[k] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor for near-zero references.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

pub fn status_of(code: u8) -> Status {
    Status::from_code(code as i64).unwrap()
}
