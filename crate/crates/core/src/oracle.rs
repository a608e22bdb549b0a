//! Population quantities of a simulation scenario by numerical
//! quadrature: sub-distribution masses, the risk denominator, and the
//! baseline cumulative (reverse) hazard recovered through its
//! representation as `int dH0 / e0`.

use serde::Serialize;

use crate::data::Model;
use crate::empirical::dot;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_piecewise, uniform_box_rule, Tolerance};
use crate::simulate::{CovariateLaw, ScenarioSpec};

/// Gauss–Legendre nodes per covariate coordinate.
const COVARIATE_NODES: usize = 16;
const MAX_COVARIATE_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationPoint {
    pub t: f64,
    /// Closed-form `Lambda0(t)` (right model) or `R0(t)` (left model).
    pub baseline_cumulative: f64,
    /// The same quantity through the `int dH0 / e0` representation.
    pub represented_cumulative: f64,
    /// `S_T(t | z)` (right model) or `F_T(t | z)` (left model).
    pub conditional: f64,
    /// Population risk denominator at `p0`: `e0(t)` or `l0(t)`.
    pub risk: f64,
    /// `H_k(t) = P(X <= t, A = k)`.
    pub masses: [f64; 3],
}

pub struct Population<'a> {
    spec: &'a ScenarioSpec,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    breaks: Vec<f64>,
    tol: Tolerance,
}

impl<'a> Population<'a> {
    pub fn new(spec: &'a ScenarioSpec) -> Result<Self> {
        spec.check()?;
        let q = spec.q();
        let (points, weights) = match &spec.covariates {
            CovariateLaw::Uniform(_) => {
                if COVARIATE_NODES
                    .checked_pow(q as u32)
                    .is_none_or(|m| m > MAX_COVARIATE_POINTS)
                {
                    return Err(Error::QuadratureFailure(format!(
                        "{q} uniform covariates exceed the tensor rule budget"
                    )));
                }
                let bounds: Vec<(f64, f64)> = (0..q)
                    .map(|j| spec.covariates.interval(j).expect("checked"))
                    .collect();
                uniform_box_rule(&bounds, COVARIATE_NODES)
            }
            CovariateLaw::Levels(levels) => {
                let mut points = vec![Vec::new()];
                for _ in 0..q {
                    points = points
                        .into_iter()
                        .flat_map(|p| {
                            levels.iter().map(move |&v| {
                                let mut p = p.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect();
                }
                let w = 1.0 / points.len() as f64;
                let n = points.len();
                (points, vec![w; n])
            }
        };
        let mut breaks = spec.baseline.breakpoints();
        if let Some(c) = &spec.censoring {
            breaks.extend(c.breakpoints());
        }
        breaks.extend(spec.followup);
        breaks.extend(spec.floor);
        Ok(Population {
            spec,
            points,
            weights,
            breaks,
            tol: Tolerance::default(),
        })
    }

    fn risk_score(&self, z: &[f64]) -> f64 {
        dot(&self.spec.beta0, z).exp()
    }

    fn censoring_survival(&self, c: f64) -> f64 {
        self.spec.censoring.as_ref().map_or(1.0, |l| l.survival(c))
    }

    fn censoring_density(&self, c: f64) -> f64 {
        self.spec.censoring.as_ref().map_or(0.0, |l| l.density(c))
    }

    /// Continuous density of `T` given `z` at `s > 0`.
    fn lifetime_density(&self, s: f64, z: &[f64]) -> f64 {
        self.risk_score(z) * self.spec.baseline_rate(s) * self.spec.conditional(s, z)
    }

    /// `P(C' >= s)` for the right model, where `C' = min(C, followup)`.
    fn right_censor_at_least(&self, s: f64) -> f64 {
        match self.spec.followup {
            Some(f) if s > f => 0.0,
            _ => self.censoring_survival(s),
        }
    }

    /// `P(C' <= s)` for the left model, where `C' = max(C, floor)`.
    fn left_censor_at_most(&self, s: f64) -> f64 {
        match self.spec.floor {
            Some(f) if s < f => 0.0,
            _ => 1.0 - self.censoring_survival(s),
        }
    }

    /// Sub-density of uncensored exact observations given `z`.
    fn h0_density(&self, s: f64, z: &[f64]) -> f64 {
        let c = match self.spec.model {
            Model::RightCs => self.right_censor_at_least(s),
            Model::LeftCs => self.left_censor_at_most(s),
        };
        if c == 0.0 {
            return 0.0;
        }
        self.spec.p0 * self.lifetime_density(s, z) * c
    }

    fn horizon(&self) -> f64 {
        self.spec.followup.unwrap_or(f64::INFINITY)
    }

    fn expect<F: FnMut(&[f64]) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut total = 0.0;
        for (z, w) in self.points.iter().zip(&self.weights) {
            total += w * f(z)?;
        }
        Ok(total)
    }

    /// Right model: `(P(X >= t, A = 0 | z), P(X >= t, A = 1 | z))`.
    /// Left model: `(P(X <= t, A = 0 | z), P(X <= t, A = 2 | z))`.
    fn risk_parts(&self, t: f64, z: &[f64]) -> Result<(f64, f64)> {
        let spec = self.spec;
        match spec.model {
            Model::RightCs => {
                let end = self.horizon();
                let exact = integrate_piecewise(
                    |s| self.h0_density(s, z),
                    t,
                    end,
                    &self.breaks,
                    &self.tol,
                )?;
                let mut censored = integrate_piecewise(
                    |c| self.censoring_density(c) * spec.conditional(c, z),
                    t,
                    end,
                    &self.breaks,
                    &self.tol,
                )?;
                if let Some(f) = spec.followup {
                    if t <= f {
                        censored += self.censoring_survival(f) * spec.conditional(f, z);
                    }
                }
                Ok((exact, censored))
            }
            Model::LeftCs => {
                let exact = integrate_piecewise(
                    |s| self.h0_density(s, z),
                    0.0,
                    t,
                    &self.breaks,
                    &self.tol,
                )?;
                let start = spec.floor.unwrap_or(0.0);
                let mut below = integrate_piecewise(
                    |c| self.censoring_density(c) * spec.conditional(c, z),
                    start,
                    t,
                    &self.breaks,
                    &self.tol,
                )?;
                if let Some(f) = spec.floor {
                    if t >= f {
                        below += (1.0 - self.censoring_survival(f)) * spec.conditional(f, z);
                    }
                }
                Ok((exact, below))
            }
        }
    }

    /// Risk denominator at the true parameters: `e0(t)` for the right model,
    /// `l0(t)` for the left model.
    pub fn risk(&self, t: f64) -> Result<f64> {
        let p0 = self.spec.p0;
        self.expect(|z| {
            let (exact, weighted) = self.risk_parts(t, z)?;
            Ok(self.risk_score(z) * (exact + p0 * weighted))
        })
    }

    /// `H0` sub-density, averaged over covariates.
    fn h0_marginal(&self, s: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * self.h0_density(s, z))
            .sum()
    }

    /// `Lambda0(t)` (right) or `R0(t)` (left) as `int dH0 / e0` over
    /// `[0, t]` or `(t, inf)`. Only the part of the time axis where the risk
    /// denominator is positive contributes.
    pub fn represented_cumulative(&self, t: f64) -> Result<f64> {
        let mut failure = None;
        let integrand = |s: f64| {
            let h = self.h0_marginal(s);
            if h == 0.0 {
                return 0.0;
            }
            match self.risk(s) {
                Ok(e) if e > 0.0 => h / e,
                Ok(_) => 0.0,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        };
        let value = match self.spec.model {
            Model::RightCs => integrate_piecewise(
                integrand,
                0.0,
                t.min(self.horizon()),
                &self.breaks,
                &self.tol,
            ),
            Model::LeftCs => {
                integrate_piecewise(integrand, t, f64::INFINITY, &self.breaks, &self.tol)
            }
        };
        match (value, failure) {
            (_, Some(err)) => Err(err),
            (v, None) => v,
        }
    }

    /// `[H0(t), H1(t), H2(t)]`.
    pub fn masses(&self, t: f64) -> Result<[f64; 3]> {
        let spec = self.spec;
        let p0 = spec.p0;
        let mut out = [0.0; 3];
        for (z, w) in self.points.iter().zip(&self.weights) {
            let exact =
                integrate_piecewise(|s| self.h0_density(s, z), 0.0, t, &self.breaks, &self.tol)?;
            // censoring-driven observation: right censored (right model) or
            // left censored (left model)
            let (censored, other) = match spec.model {
                Model::RightCs => {
                    let end = t.min(self.horizon());
                    let mut c = integrate_piecewise(
                        |c| self.censoring_density(c) * spec.conditional(c, z),
                        0.0,
                        end,
                        &self.breaks,
                        &self.tol,
                    )?;
                    if let Some(f) = spec.followup {
                        if t >= f {
                            c += self.censoring_survival(f) * spec.conditional(f, z);
                        }
                    }
                    (c, exact * (1.0 - p0) / p0)
                }
                Model::LeftCs => {
                    let (_, below) = self.risk_parts(t, z)?;
                    let start = spec.floor.unwrap_or(0.0);
                    let mut above = integrate_piecewise(
                        |c| self.censoring_density(c) * (1.0 - spec.conditional(c, z)),
                        start,
                        t,
                        &self.breaks,
                        &self.tol,
                    )?;
                    if let Some(f) = spec.floor {
                        if t >= f {
                            above +=
                                (1.0 - self.censoring_survival(f)) * (1.0 - spec.conditional(f, z));
                        }
                    }
                    (below, above * (1.0 - p0))
                }
            };
            out[0] += w * exact;
            match spec.model {
                Model::RightCs => {
                    out[1] += w * censored;
                    out[2] += w * other;
                }
                Model::LeftCs => {
                    out[1] += w * other;
                    out[2] += w * censored;
                }
            }
        }
        Ok(out)
    }

    /// `p` recovered from the total sub-distribution masses:
    /// `H0 / (H0 + H2)` (right) or `H0 / (H0 + H1)` (left).
    pub fn p_ratio(&self) -> Result<f64> {
        let m = self.masses(f64::INFINITY)?;
        let other = match self.spec.model {
            Model::RightCs => m[2],
            Model::LeftCs => m[1],
        };
        Ok(m[0] / (m[0] + other))
    }
}

pub fn population_oracle(spec: &ScenarioSpec, t: f64, z: &[f64]) -> Result<PopulationPoint> {
    if z.len() != spec.q() {
        return Err(Error::InvalidArgument(format!(
            "covariate vector has {} entries, scenario has {}",
            z.len(),
            spec.q()
        )));
    }
    let pop = Population::new(spec)?;
    Ok(PopulationPoint {
        t,
        baseline_cumulative: spec.baseline_cumulative(t),
        represented_cumulative: pop.represented_cumulative(t)?,
        conditional: spec.conditional(t, z),
        risk: pop.risk(t)?,
        masses: pop.masses(t)?,
    })
}
