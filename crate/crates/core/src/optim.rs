//! Box-constrained quasi-Newton maximization.
//!
//! Projected BFGS: the inverse-Hessian approximation acts on the free
//! coordinates, coordinates held at a bound by an outward-pointing gradient
//! are frozen, and the step is found by projected backtracking.

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grad_tol: 1e-8,
            step_tol: 1e-14,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Norm of the gradient with components pointing out of the box removed.
    pub projected_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Coordinates that end on a bound of the box.
    pub at_bound: Vec<bool>,
}

/// Maximizes `f` over the box `[lower, upper]` from `start`.
///
/// `f` returns the objective and its gradient, or an error for points where
/// it is undefined. Undefined trial points are treated as failed steps; an
/// error at the starting point is returned.
pub fn maximize<E, F>(
    mut f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &Options,
) -> Result<Optimum, E>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    let q = start.len();
    let project = |x: &mut [f64]| {
        for j in 0..q {
            x[j] = x[j].clamp(lower[j], upper[j]);
        }
    };
    // minimize g = -f
    let mut x = start.to_vec();
    project(&mut x);
    let (v, gr) = f(&x)?;
    let mut fx = -v;
    let mut gx: Vec<f64> = gr.iter().map(|g| -g).collect();
    let mut h = identity(q);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let free = free_mask(&x, &gx, lower, upper);
        let pg = projected_norm(&gx, &free);
        if !pg.is_finite() {
            break;
        }
        if pg <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut d = vec![0.0; q];
        for r in 0..q {
            if !free[r] {
                continue;
            }
            for c in 0..q {
                if free[c] {
                    d[r] -= h[r * q + c] * gx[c];
                }
            }
        }
        let slope: f64 = d.iter().zip(&gx).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(q);
            fresh = true;
            for j in 0..q {
                d[j] = if free[j] { -gx[j] } else { 0.0 };
            }
        }
        let mut alpha = if fresh {
            (1.0 / norm(&d)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if step.iter().all(|s| s.abs() == 0.0) {
                break;
            }
            if let Ok((tv, tg)) = f(&trial) {
                let ft = -tv;
                let tg: Vec<f64> = tg.iter().map(|g| -g).collect();
                let decrease: f64 = step.iter().zip(&gx).map(|(s, g)| s * g).sum();
                let armijo = ft <= fx + 1e-4 * decrease;
                // below rounding noise in f, fall back on the gradient
                let noise = 1e-13 * (1.0 + fx.abs());
                let flat = (ft - fx).abs() <= noise
                    && projected_norm(&tg, &free_mask(&trial, &tg, lower, upper)) < pg;
                if ft.is_finite() && (armijo || flat) {
                    accepted = Some((trial, ft, tg, step));
                    break;
                }
            }
            alpha *= 0.5;
        }

        let Some((xn, fnew, gnew, s)) = accepted else {
            if fresh {
                break;
            }
            h = identity(q);
            fresh = true;
            continue;
        };
        let y: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let small_step = s.iter().all(|v| v.abs() <= opts.step_tol * (1.0 + v.abs()));
        let df = fx - fnew;
        x = xn;
        fx = fnew;
        gx = gnew;
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                // scale the initial approximation
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let gamma = sy / yy;
                h.iter_mut().for_each(|v| *v *= gamma);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        if small_step && df.abs() <= 1e-15 * (1.0 + fx.abs()) {
            break;
        }
    }

    let free = free_mask(&x, &gx, lower, upper);
    let projected = projected_norm(&gx, &free);
    converged = converged || projected <= opts.grad_tol;
    let at_bound = (0..q)
        .map(|j| x[j] <= lower[j] || x[j] >= upper[j])
        .collect();
    Ok(Optimum {
        x,
        value: -fx,
        gradient: gx.iter().map(|g| -g).collect(),
        projected_norm: projected,
        iterations,
        converged,
        at_bound,
    })
}

fn identity(q: usize) -> Vec<f64> {
    let mut h = vec![0.0; q * q];
    for j in 0..q {
        h[j * q + j] = 1.0;
    }
    h
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Coordinates not pinned to a bound by the gradient of the minimized
/// function.
fn free_mask(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|j| {
            if lower[j] == upper[j] {
                false
            } else if x[j] <= lower[j] {
                g[j] < 0.0
            } else if x[j] >= upper[j] {
                g[j] > 0.0
            } else {
                true
            }
        })
        .collect()
}

fn projected_norm(g: &[f64], free: &[bool]) -> f64 {
    g.iter()
        .zip(free)
        .filter(|(_, f)| **f)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let q = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..q)
        .map(|r| (0..q).map(|c| h[r * q + c] * y[c]).sum())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for r in 0..q {
        for c in 0..q {
            h[r * q + c] +=
                -rho * (hy[r] * s[c] + s[r] * hy[c]) + (rho * rho * yhy + rho) * s[r] * s[c];
        }
    }
}
