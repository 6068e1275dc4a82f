//! EV charging demand simulation on a road network and grid-side charger
//! placement by a mixed-integer GA over AC power flow.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispatch;
pub mod fixtures;
pub mod grid;
pub mod miga;
pub mod network;
pub mod planner;
pub mod powerflow;
pub mod tripsim;
pub mod vehicle;

pub use dispatch::{DecisionVector, EvLoadSet, FitnessReport, OpfProblem, PenaltyWeights};
pub use grid::{parse_matpower_case, GridCase};
pub use miga::{Chromosome, GaConfig, GeneLayout};
pub use network::{RoadLink, RoadNetwork, RoadNode, Route, StationSite};
pub use planner::{PlanResult, PlannerConfig, PlannerError};
pub use powerflow::PowerFlowOptions;
pub use tripsim::{Action, ChargingEvent, ChargingProfile, SimParams, Trip, TripOutcome, TripRecord};
pub use vehicle::VehicleSpec;
