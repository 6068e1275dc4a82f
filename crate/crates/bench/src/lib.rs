//! Shared setup for the benchmarks.

use chargeplan::dispatch::{EvLoadSet, OpfProblem, PenaltyWeights};
use chargeplan::fixtures::CASE30;
use chargeplan::network::{synthetic_grid, GridSpec, RoadNetwork};
use chargeplan::powerflow::PowerFlowOptions;
use chargeplan::{parse_matpower_case, GridCase};

pub fn case30() -> GridCase {
    parse_matpower_case(CASE30).expect("bundled case parses")
}

/// 30-bus problem with three stations drawing a day-shaped load.
pub fn problem(steps: usize) -> OpfProblem {
    let shape = |k: usize| (0..steps).map(|t| 5.0 + k as f64 + 3.0 * ((t as f64) / steps as f64 * std::f64::consts::TAU).sin()).collect();
    let ev = EvLoadSet::new((0..3).map(shape).collect(), 1440.0 / steps as f64, steps).expect("valid profiles");
    OpfProblem::new(case30(), ev, PenaltyWeights::default(), PowerFlowOptions::default()).expect("valid problem")
}

pub fn street_grid(rows: usize, cols: usize) -> RoadNetwork {
    synthetic_grid(&GridSpec {
        rows,
        cols,
        spacing_m: 1000.0,
        ..GridSpec::default()
    })
}
