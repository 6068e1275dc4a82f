//! Transmission test cases: MATPOWER ingestion and the bus admittance matrix.

mod case;
mod matpower;
mod ybus;

pub use case::{BranchRecord, BusKind, BusRecord, CaseError, GenRecord, GridCase, QuadraticCost};
pub use matpower::{parse_matpower_case, to_matpower};
pub use ybus::{build_ybus, AdmittanceMatrix};
