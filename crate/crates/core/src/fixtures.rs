//! Data files shipped with the crate.

/// 30-bus, 6-generator transmission case with quadratic costs.
pub const CASE30: &str = include_str!("../data/case30.m");

/// 6-bus, 3-generator case.
pub const CASE6WW: &str = include_str!("../data/case6ww.m");

/// Smallest legal case: slack generator, one 40 MW load, one x = 0.1 pu line.
pub const TWO_BUS: &str = include_str!("../data/two_bus.m");

/// Default fleet: four popular EV models (JSON array of vehicle specs).
pub const FLEET_JSON: &str = include_str!("../data/fleet.json");
