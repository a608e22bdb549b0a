//! Latent-model data generators with known ground truth.
//!
//! Right model: `T` follows the proportional hazards law with baseline
//! cumulative hazard `Lambda0`, `C` is drawn independently (and optionally
//! stopped at an administrative follow-up time), and `Delta ~ Bernoulli(p0)`
//! decides whether an event before censoring is seen exactly (status 0) or
//! only as `T <= C` (status 2). Records with `C < T` are right censored
//! (status 1). The left model is the time-reversed construction driven by
//! the cumulative reverse hazard `R0`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::data::{validate, Dataset, Model};
use crate::error::{Error, Result};

/// A continuous lifetime law on `(0, inf)`, described by its cumulative
/// hazard `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Law {
    Exponential {
        rate: f64,
    },
    /// `H(t) = (t / scale)^shape`.
    Weibull {
        shape: f64,
        scale: f64,
    },
    /// Constant hazard `rates[k]` on `[breaks[k-1], breaks[k])`, with
    /// `rates.len() == breaks.len() + 1`.
    Piecewise {
        breaks: Vec<f64>,
        rates: Vec<f64>,
    },
}

impl Law {
    fn check(&self) -> Result<()> {
        let ok = match self {
            Law::Exponential { rate } => rate.is_finite() && *rate > 0.0,
            Law::Weibull { shape, scale } => {
                shape.is_finite() && scale.is_finite() && *shape > 0.0 && *scale > 0.0
            }
            Law::Piecewise { breaks, rates } => {
                rates.len() == breaks.len() + 1
                    && breaks.iter().all(|b| b.is_finite() && *b > 0.0)
                    && breaks.windows(2).all(|w| w[0] < w[1])
                    && rates.iter().all(|r| r.is_finite() && *r >= 0.0)
                    && *rates.last().unwrap() > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Scenario(format!("invalid law `{self}`")))
        }
    }

    pub fn cum_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Law::Exponential { rate } => rate * t,
            Law::Weibull { shape, scale } => (t / scale).powf(*shape),
            Law::Piecewise { breaks, rates } => {
                let mut h = 0.0;
                let mut lo = 0.0;
                for (k, &b) in breaks.iter().enumerate() {
                    if t <= b {
                        return h + rates[k] * (t - lo);
                    }
                    h += rates[k] * (b - lo);
                    lo = b;
                }
                h + rates[breaks.len()] * (t - lo)
            }
        }
    }

    pub fn hazard(&self, t: f64) -> f64 {
        match self {
            Law::Exponential { rate } => *rate,
            Law::Weibull { shape, scale } => {
                if t <= 0.0 {
                    if *shape < 1.0 {
                        f64::INFINITY
                    } else if *shape == 1.0 {
                        1.0 / scale
                    } else {
                        0.0
                    }
                } else {
                    shape / scale * (t / scale).powf(shape - 1.0)
                }
            }
            Law::Piecewise { breaks, rates } => rates[breaks.partition_point(|&b| b <= t)],
        }
    }

    /// Smallest `t` with `H(t) = y`.
    pub fn inv_cum_hazard(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y == f64::INFINITY {
            return f64::INFINITY;
        }
        match self {
            Law::Exponential { rate } => y / rate,
            Law::Weibull { shape, scale } => scale * y.powf(1.0 / shape),
            Law::Piecewise { breaks, rates } => {
                let mut h = 0.0;
                let mut lo = 0.0;
                for (k, &b) in breaks.iter().enumerate() {
                    let piece = rates[k] * (b - lo);
                    if h + piece >= y && rates[k] > 0.0 {
                        return lo + (y - h) / rates[k];
                    }
                    h += piece;
                    lo = b;
                }
                lo + (y - h) / rates[breaks.len()]
            }
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cum_hazard(t)).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        -(-self.cum_hazard(t)).exp_m1()
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.hazard(t) * self.survival(t)
        }
    }

    /// Inverse of the distribution function.
    pub fn quantile(&self, u: f64) -> f64 {
        self.inv_cum_hazard(-(-u).ln_1p())
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Law::Piecewise { breaks, .. } => breaks.clone(),
            _ => Vec::new(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y: f64 = Exp1.sample(rng);
        self.inv_cum_hazard(y)
    }
}

fn parse_args(body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Scenario(format!("bad number `{}`", v.trim())))
        })
        .collect()
}

fn split_call(s: &str) -> Result<(String, &str)> {
    let s = s.trim();
    let open = s
        .find('(')
        .ok_or_else(|| Error::Scenario(format!("expected `name(...)`, got `{s}`")))?;
    if !s.ends_with(')') {
        return Err(Error::Scenario(format!("unbalanced parentheses in `{s}`")));
    }
    Ok((
        s[..open].trim().to_ascii_lowercase(),
        &s[open + 1..s.len() - 1],
    ))
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = split_call(s)?;
        let law = match name.as_str() {
            "exponential" | "exp" => match parse_args(body)?[..] {
                [rate] => Law::Exponential { rate },
                _ => return Err(Error::Scenario("exponential takes one rate".into())),
            },
            "weibull" => match parse_args(body)?[..] {
                [shape, scale] => Law::Weibull { shape, scale },
                _ => return Err(Error::Scenario("weibull takes shape and scale".into())),
            },
            "piecewise" => {
                let (b, r) = body
                    .split_once(';')
                    .ok_or_else(|| Error::Scenario("piecewise takes `breaks; rates`".into()))?;
                let breaks = if b.trim().is_empty() {
                    Vec::new()
                } else {
                    parse_args(b)?
                };
                Law::Piecewise {
                    breaks,
                    rates: parse_args(r)?,
                }
            }
            other => return Err(Error::Scenario(format!("unknown law `{other}`"))),
        };
        law.check()?;
        Ok(law)
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Exponential { rate } => write!(f, "exponential({rate})"),
            Law::Weibull { shape, scale } => write!(f, "weibull({shape}, {scale})"),
            Law::Piecewise { breaks, rates } => {
                write!(f, "piecewise({}; {})", join(breaks), join(rates))
            }
        }
    }
}

impl TryFrom<String> for Law {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Law> for String {
    fn from(l: Law) -> String {
        l.to_string()
    }
}

/// Law of the covariate vector: independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CovariateLaw {
    /// Uniform on `[lo, hi]`, one interval per coordinate or one shared.
    Uniform(Vec<(f64, f64)>),
    /// Uniform over a finite set of levels, shared by every coordinate.
    Levels(Vec<f64>),
}

impl CovariateLaw {
    /// Support of coordinate `j`, as an interval for uniform laws.
    pub fn interval(&self, j: usize) -> Option<(f64, f64)> {
        match self {
            CovariateLaw::Uniform(v) if v.len() == 1 => Some(v[0]),
            CovariateLaw::Uniform(v) => v.get(j).copied(),
            CovariateLaw::Levels(_) => None,
        }
    }

    fn check(&self, q: usize) -> Result<()> {
        let ok = match self {
            CovariateLaw::Uniform(v) => {
                (v.len() == 1 || v.len() == q)
                    && v.iter()
                        .all(|(l, h)| l.is_finite() && h.is_finite() && l <= h)
            }
            CovariateLaw::Levels(v) => !v.is_empty() && v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Scenario(format!(
                "covariate law `{self}` does not fit {q} bounded coordinates"
            )))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, q: usize, rng: &mut R) -> Vec<f64> {
        (0..q)
            .map(|j| match self {
                CovariateLaw::Uniform(_) => {
                    let (lo, hi) = self.interval(j).expect("checked");
                    lo + (hi - lo) * rng.random::<f64>()
                }
                CovariateLaw::Levels(v) => v[rng.random_range(0..v.len())],
            })
            .collect()
    }
}

impl FromStr for CovariateLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = split_call(s)?;
        match name.as_str() {
            "uniform" => {
                let mut out = Vec::new();
                for part in body.split(';') {
                    match parse_args(part)?[..] {
                        [lo, hi] => out.push((lo, hi)),
                        _ => {
                            return Err(Error::Scenario(
                                "uniform takes `lo, hi` pairs separated by `;`".into(),
                            ))
                        }
                    }
                }
                Ok(CovariateLaw::Uniform(out))
            }
            "levels" => Ok(CovariateLaw::Levels(parse_args(body)?)),
            other => Err(Error::Scenario(format!("unknown covariate law `{other}`"))),
        }
    }
}

impl fmt::Display for CovariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateLaw::Uniform(v) => {
                let parts: Vec<String> = v.iter().map(|(l, h)| format!("{l}, {h}")).collect();
                write!(f, "uniform({})", parts.join("; "))
            }
            CovariateLaw::Levels(v) => write!(f, "levels({})", join(v)),
        }
    }
}

impl TryFrom<String> for CovariateLaw {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CovariateLaw> for String {
    fn from(l: CovariateLaw) -> String {
        l.to_string()
    }
}

/// A simulation scenario, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub model: Model,
    pub n: usize,
    pub p0: f64,
    pub beta0: Vec<f64>,
    /// Baseline law. Without a cure (zero) mass it is the law of `T` at
    /// `z = 0`.
    pub baseline: Law,
    /// Law of `C`; `None` means no random censoring.
    #[serde(default)]
    pub censoring: Option<Law>,
    pub covariates: CovariateLaw,
    /// Right model: `P(T = inf | z = 0)`.
    #[serde(default)]
    pub cure_mass: f64,
    /// Left model: `P(T = 0 | z = 0)`.
    #[serde(default)]
    pub zero_mass: f64,
    /// Right model: administrative end of study, `C <- min(C, followup)`.
    #[serde(default)]
    pub followup: Option<f64>,
    /// Left model: earliest inspection time, `C <- max(C, floor)`.
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn q(&self) -> usize {
        self.beta0.len()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string().trim().to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(m.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return bad("p0 must lie in (0, 1]");
        }
        if self.beta0.is_empty() || self.beta0.iter().any(|b| !b.is_finite()) {
            return bad("beta0 must be a nonempty finite vector");
        }
        self.baseline.check()?;
        if let Some(c) = &self.censoring {
            c.check()?;
        }
        self.covariates.check(self.q())?;
        for (name, v) in [("cure_mass", self.cure_mass), ("zero_mass", self.zero_mass)] {
            if !(0.0..1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1)"));
            }
        }
        match self.model {
            Model::RightCs if self.zero_mass != 0.0 || self.floor.is_some() => {
                bad("zero_mass and floor apply to the left model only")
            }
            Model::LeftCs if self.cure_mass != 0.0 || self.followup.is_some() => {
                bad("cure_mass and followup apply to the right model only")
            }
            _ => match self.followup.or(self.floor) {
                Some(v) if !(v.is_finite() && v > 0.0) => bad("followup/floor must be positive"),
                _ => Ok(()),
            },
        }
    }

    /// Baseline cumulative hazard `Lambda0(t)` (right model) or cumulative
    /// reverse hazard `R0(t)` (left model).
    pub fn baseline_cumulative(&self, t: f64) -> f64 {
        match self.model {
            Model::RightCs => {
                if self.cure_mass > 0.0 {
                    -self.cure_mass.ln() * self.baseline.cdf(t)
                } else {
                    self.baseline.cum_hazard(t)
                }
            }
            Model::LeftCs => {
                if self.zero_mass > 0.0 {
                    -self.zero_mass.ln() * self.baseline.survival(t)
                } else if t <= 0.0 {
                    f64::INFINITY
                } else {
                    -self.baseline.cdf(t).ln()
                }
            }
        }
    }

    /// Baseline hazard `lambda0(t)` (right) or reverse hazard `r0(t)` (left).
    pub fn baseline_rate(&self, t: f64) -> f64 {
        match self.model {
            Model::RightCs => {
                if self.cure_mass > 0.0 {
                    -self.cure_mass.ln() * self.baseline.density(t)
                } else {
                    self.baseline.hazard(t)
                }
            }
            Model::LeftCs => {
                if self.zero_mass > 0.0 {
                    -self.zero_mass.ln() * self.baseline.density(t)
                } else {
                    self.baseline.density(t) / self.baseline.cdf(t)
                }
            }
        }
    }

    /// `S_T(t | z)` (right model) or `F_T(t | z)` (left model).
    pub fn conditional(&self, t: f64, z: &[f64]) -> f64 {
        let risk = crate::empirical::dot(&self.beta0, z).exp();
        (-risk * self.baseline_cumulative(t)).exp()
    }

    /// Draws `T` given `z`: infinite for cured subjects (right model), zero
    /// for the atom at the origin (left model).
    fn sample_lifetime<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R) -> f64 {
        let risk = crate::empirical::dot(&self.beta0, z).exp();
        let y: f64 = Exp1.sample(rng);
        let target = y / risk;
        match self.model {
            Model::RightCs => {
                if self.cure_mass > 0.0 {
                    let u = target / -self.cure_mass.ln();
                    if u >= 1.0 {
                        f64::INFINITY
                    } else {
                        self.baseline.quantile(u)
                    }
                } else {
                    self.baseline.inv_cum_hazard(target)
                }
            }
            Model::LeftCs => {
                if self.zero_mass > 0.0 {
                    // S_base(t) = target / -ln(zero_mass)
                    let s = target / -self.zero_mass.ln();
                    if s >= 1.0 {
                        0.0
                    } else {
                        self.baseline.quantile(1.0 - s)
                    }
                } else {
                    // F_base(t) = exp(-target)
                    self.baseline.quantile((-target).exp())
                }
            }
        }
    }

    fn sample_censoring<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = match &self.censoring {
            Some(law) => law.sample(rng),
            None => f64::INFINITY,
        };
        match self.model {
            Model::RightCs => self.followup.map_or(c, |f| c.min(f)),
            Model::LeftCs => self.floor.map_or(c, |f| c.max(f)),
        }
    }
}

/// One draw of the latent variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRecord {
    pub t: f64,
    pub c: f64,
    pub delta: bool,
    pub z: Vec<f64>,
}

impl LatentRecord {
    /// Observed `(x, status)` under `model`.
    pub fn observe(&self, model: Model) -> (f64, i64) {
        match model {
            Model::RightCs => {
                if self.t <= self.c {
                    if self.delta {
                        (self.t, 0)
                    } else {
                        (self.c, 2)
                    }
                } else {
                    (self.c, 1)
                }
            }
            Model::LeftCs => {
                if self.c <= self.t {
                    if self.delta {
                        (self.t, 0)
                    } else {
                        (self.c, 1)
                    }
                } else {
                    (self.c, 2)
                }
            }
        }
    }
}

/// The generator's random stream: `stream` separates replicates sharing one
/// seed.
pub fn scenario_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn draw_latent<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    n: usize,
    rng: &mut R,
) -> Vec<LatentRecord> {
    (0..n)
        .map(|_| {
            let z = spec.covariates.sample(spec.q(), rng);
            let t = spec.sample_lifetime(&z, rng);
            let c = spec.sample_censoring(rng);
            let delta = rng.random::<f64>() < spec.p0;
            LatentRecord { t, c, delta, z }
        })
        .collect()
}

/// Simulates `spec.n` records from stream `stream` of `spec.seed`.
pub fn simulate_stream(spec: &ScenarioSpec, stream: u64) -> Result<Dataset> {
    spec.check()?;
    let mut rng = scenario_rng(spec.seed, stream);
    let records = draw_latent(spec, spec.n, &mut rng);
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let (x, a) = r.observe(spec.model);
        if !x.is_finite() {
            return Err(Error::Scenario(
                "an observation is infinite; add censoring, a followup or a floor".into(),
            ));
        }
        rows.push((x, a, r.z));
    }
    validate(rows, spec.model)
}

pub fn simulate(spec: &ScenarioSpec) -> Result<Dataset> {
    simulate_stream(spec, 0)
}

pub fn simulate_right(spec: &ScenarioSpec) -> Result<Dataset> {
    if spec.model != Model::RightCs {
        return Err(Error::Scenario("scenario is not a right-cs model".into()));
    }
    simulate(spec)
}

pub fn simulate_left(spec: &ScenarioSpec) -> Result<Dataset> {
    if spec.model != Model::LeftCs {
        return Err(Error::Scenario("scenario is not a left-cs model".into()));
    }
    simulate(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Status;
    use crate::likelihood::estimate_p;

    fn right_spec() -> ScenarioSpec {
        ScenarioSpec::from_toml(
            r#"
            model = "right-cs"
            n = 400
            p0 = 0.7
            beta0 = [0.5, -0.5]
            baseline = "weibull(1.5, 1)"
            censoring = "exponential(0.5)"
            covariates = "uniform(-1, 1)"
            followup = 2.0
            seed = 7
            "#,
        )
        .unwrap()
    }

    #[test]
    fn parse_laws() {
        assert_eq!(
            "weibull(1.5, 1.0)".parse::<Law>().unwrap(),
            Law::Weibull {
                shape: 1.5,
                scale: 1.0
            }
        );
        let p: Law = "piecewise(1, 2; 0.5, 1, 2)".parse().unwrap();
        assert_eq!(p.to_string().parse::<Law>().unwrap(), p);
        assert!("piecewise(1; 0.5)".parse::<Law>().is_err());
        assert!("weibull(-1, 1)".parse::<Law>().is_err());
        assert!("gamma(1)".parse::<Law>().is_err());
        let c: CovariateLaw = "uniform(-1, 1; 0, 2)".parse().unwrap();
        assert_eq!(c.interval(1), Some((0.0, 2.0)));
        assert_eq!(
            "levels(0, 1)".parse::<CovariateLaw>().unwrap(),
            CovariateLaw::Levels(vec![0.0, 1.0])
        );
    }

    #[test]
    fn piecewise_inverse() {
        let law: Law = "piecewise(1, 2; 0.5, 0, 2)".parse().unwrap();
        for &t in &[0.3, 0.999, 2.5, 7.0] {
            let h = law.cum_hazard(t);
            assert!((law.inv_cum_hazard(h) - t).abs() < 1e-12, "t = {t}");
        }
        // the flat piece maps to its left end
        assert_eq!(law.inv_cum_hazard(0.5), 1.0);
        assert_eq!(law.hazard(1.5), 0.0);
    }

    #[test]
    fn weibull_inverse_and_density() {
        let law = Law::Weibull {
            shape: 1.5,
            scale: 2.0,
        };
        for &t in &[0.1, 1.0, 3.0] {
            assert!((law.inv_cum_hazard(law.cum_hazard(t)) - t).abs() < 1e-12);
            let h = 1e-6;
            let numeric = (law.cdf(t + h) - law.cdf(t - h)) / (2.0 * h);
            assert!((numeric - law.density(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn scenario_round_trip() {
        let s = right_spec();
        assert_eq!(ScenarioSpec::from_toml(&s.to_toml()).unwrap(), s);
        assert!(ScenarioSpec::from_toml("model = \"right-cs\"").is_err());
        let mut bad = s.clone();
        bad.p0 = 0.0;
        assert!(bad.check().is_err());
        bad = s.clone();
        bad.zero_mass = 0.2;
        assert!(bad.check().is_err());
    }

    #[test]
    fn seed_determinism() {
        let s = right_spec();
        assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
        assert_ne!(simulate_stream(&s, 1).unwrap(), simulate(&s).unwrap());
    }

    #[test]
    fn full_observation_limit() {
        let mut s = right_spec();
        s.p0 = 1.0;
        s.censoring = None;
        s.followup = Some(1e6);
        let mut rng = scenario_rng(s.seed, 0);
        for r in draw_latent(&s, 500, &mut rng) {
            assert_eq!(r.observe(Model::RightCs), (r.t, 0));
        }
    }

    #[test]
    fn p_one_has_no_current_status_records() {
        let mut s = right_spec();
        s.p0 = 1.0;
        assert_eq!(simulate(&s).unwrap().count(Status::Below), 0);
        let mut l = left_spec();
        l.p0 = 1.0;
        assert_eq!(simulate(&l).unwrap().count(Status::Above), 0);
    }

    fn left_spec() -> ScenarioSpec {
        ScenarioSpec::from_toml(
            r#"
            model = "left-cs"
            n = 400
            p0 = 0.7
            beta0 = [0.5]
            baseline = "exponential(1)"
            censoring = "exponential(1)"
            covariates = "uniform(-1, 1)"
            zero_mass = 0.3
            seed = 3
            "#,
        )
        .unwrap()
    }

    #[test]
    fn status_ratio_converges_to_p0() {
        let mut s = right_spec();
        s.n = 100_000;
        assert!((estimate_p(&simulate(&s).unwrap()) - 0.7).abs() < 0.01);
        let mut l = left_spec();
        l.n = 100_000;
        assert!((estimate_p(&simulate(&l).unwrap()) - 0.7).abs() < 0.01);
    }

    #[test]
    fn zero_atom_frequency() {
        let mut l = left_spec();
        l.covariates = CovariateLaw::Levels(vec![0.4]);
        let mut rng = scenario_rng(11, 0);
        let draws = draw_latent(&l, 100_000, &mut rng);
        let freq = draws.iter().filter(|r| r.t == 0.0).count() as f64 / 1e5;
        let implied = l.conditional(0.0, &[0.4]);
        assert!((implied - 0.3f64.powf((0.2f64).exp())).abs() < 1e-12);
        assert!((freq - implied).abs() < 0.02, "{freq} vs {implied}");
    }

    #[test]
    fn cure_fraction_frequency() {
        let mut s = right_spec();
        s.baseline = Law::Exponential { rate: 1.0 };
        s.cure_mass = 0.3;
        s.covariates = CovariateLaw::Levels(vec![0.0]);
        let mut rng = scenario_rng(5, 0);
        let draws = draw_latent(&s, 100_000, &mut rng);
        let freq = draws.iter().filter(|r| r.t.is_infinite()).count() as f64 / 1e5;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn latent_lifetime_matches_conditional_law() {
        // Kolmogorov distance between the sample and S_T(.|z) at a fixed z
        let mut s = right_spec();
        s.covariates = CovariateLaw::Levels(vec![0.8]);
        let z = [0.8, 0.8];
        let mut rng = scenario_rng(2, 0);
        let mut t: Vec<f64> = draw_latent(&s, 20_000, &mut rng)
            .into_iter()
            .map(|r| r.t)
            .collect();
        t.sort_by(f64::total_cmp);
        let n = t.len() as f64;
        let d = t
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = 1.0 - s.conditional(v, &z);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        // 0.1% critical value 1.95 / sqrt(n)
        assert!(d < 1.95 / n.sqrt(), "{d}");
    }

    #[test]
    fn lifetime_and_censoring_ranks_are_independent() {
        // chi-square test on a 4 x 4 table of quartiles of T and C within
        // two covariate strata
        let mut s = right_spec();
        s.followup = None;
        s.covariates = CovariateLaw::Levels(vec![-1.0, 1.0]);
        let mut rng = scenario_rng(9, 0);
        let draws = draw_latent(&s, 10_000, &mut rng);
        let mut stat = 0.0;
        let mut df = 0;
        for level in [-1.0, 1.0] {
            let stratum: Vec<&LatentRecord> = draws.iter().filter(|r| r.z[0] == level).collect();
            let quartile = |v: Vec<f64>| -> Vec<usize> {
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                let m = sorted.len();
                v.iter()
                    .map(|x| (sorted.partition_point(|s| s < x) * 4 / m).min(3))
                    .collect()
            };
            let qt = quartile(stratum.iter().map(|r| r.t).collect());
            let qc = quartile(stratum.iter().map(|r| r.c).collect());
            let mut table = [[0.0f64; 4]; 4];
            for (a, b) in qt.iter().zip(&qc) {
                table[*a][*b] += 1.0;
            }
            let total = stratum.len() as f64;
            for a in 0..4 {
                for b in 0..4 {
                    let row: f64 = table[a].iter().sum();
                    let col: f64 = (0..4).map(|k| table[k][b]).sum();
                    let e = row * col / total;
                    stat += (table[a][b] - e).powi(2) / e;
                }
            }
            df += 9;
        }
        // 0.1% critical value of chi-square with 18 degrees of freedom
        assert_eq!(df, 18);
        assert!(stat < 42.31, "{stat}");
    }
}
