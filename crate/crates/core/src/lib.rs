//! Semiparametric Cox regression for survival data with current status
//! censoring.
//!
//! Two observation schemes are supported. In the right model a record is
//! either an exact lifetime, a right-censored time, or a current status
//! observation `T <= x`; in the left model the roles of right and left
//! censoring are exchanged. Each uncensored lifetime is observed exactly
//! with an unknown probability `p` and otherwise reported as censored.

// NaN must fall through the negated comparisons, and the numerics index
// several parallel arrays with one loop variable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bootstrap;
pub mod config;
pub mod data;
pub mod empirical;
pub mod error;
pub mod estimator;
pub mod io;
pub mod likelihood;
pub mod optim;
pub mod oracle;
pub mod quadrature;
pub mod simulate;
pub mod step;
pub mod study;

pub use bootstrap::{
    bootstrap, confidence_intervals, BootstrapConfig, Intervals, MultiplierDraws, Replicate,
    WeightLaw,
};
pub use config::{resolve_truncation, BetaBox, FitConfig, Theta, Truncation};
pub use data::{validate, DataWarning, Dataset, Model, Observation, Status};
pub use error::{Error, Result};
pub use estimator::{
    conditional_curve, cure_rate, distribution_curve, fit, survival_curve, zero_prob,
    ConditionalCurve, FitResult, FitWarning,
};
pub use io::{read_dataset, write_dataset, write_results, OutputOptions, ResultDocument};
pub use likelihood::{
    estimate_p, kim_loglik, loglik_left, loglik_right, score_left, score_right, ScoreReport,
};
pub use oracle::{population_oracle, Population, PopulationPoint};
pub use simulate::{
    simulate, simulate_left, simulate_right, simulate_stream, CovariateLaw, Law, ScenarioSpec,
};
pub use step::StepFunction;
pub use study::{run_study, StudyConfig, StudyRow};
