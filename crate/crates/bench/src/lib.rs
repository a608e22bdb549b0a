//! Fixtures shared by the benchmarks in `benches/`.

use cscox_core::{simulate, Dataset, ScenarioSpec};

const RIGHT: &str = include_str!("../../../scenarios/right.toml");
const LEFT: &str = include_str!("../../../scenarios/left.toml");

/// Truncation points used with the two bundled scenarios.
pub const TAU: f64 = 1.0;
pub const RHO: f64 = 0.5;

fn sized(text: &str, n: usize) -> Dataset {
    let mut spec = ScenarioSpec::from_toml(text).expect("bundled scenario parses");
    spec.n = n;
    simulate(&spec).expect("bundled scenario simulates")
}

/// A sample of size `n` from the bundled right current status scenario.
pub fn right_sample(n: usize) -> Dataset {
    sized(RIGHT, n)
}

/// A sample of size `n` from the bundled left current status scenario.
pub fn left_sample(n: usize) -> Dataset {
    sized(LEFT, n)
}
