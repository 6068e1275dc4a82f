use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("malformed `mpc.{block}` block (line {line}): {reason}")]
    MalformedBlock {
        block: String,
        line: usize,
        reason: String,
    },
    #[error("{what} references unknown bus {bus}")]
    UnknownBusReference { what: String, bus: usize },
    #[error("buses {first} and {second} are both marked as slack (type 3)")]
    MultipleSlackBuses { first: usize, second: usize },
    #[error("case has no slack bus")]
    NoSlackBus,
    #[error("unsupported cost model in gencost row {row}: {reason}")]
    UnsupportedCostModel { row: usize, reason: String },
    #[error("invalid {what}: {reason}")]
    InvalidRecord { what: String, reason: String },
    #[error("branch {from}-{to} has zero impedance")]
    ZeroImpedanceBranch { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Generator,
    Load,
}

impl BusKind {
    pub fn from_matpower(code: i64) -> Option<Self> {
        match code {
            3 => Some(BusKind::Slack),
            2 => Some(BusKind::Generator),
            1 => Some(BusKind::Load),
            _ => None,
        }
    }

    pub fn matpower_code(self) -> i64 {
        match self {
            BusKind::Slack => 3,
            BusKind::Generator => 2,
            BusKind::Load => 1,
        }
    }
}

/// One row of the bus table. Powers are in MW / MVAr as written in the case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: usize,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vmin: f64,
    pub vmax: f64,
    pub base_kv: f64,
}

/// Polynomial generator cost `a·P² + b·P + c` with `P` in MW.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticCost {
    /// Hourly cost in $/h at output `p_mw`.
    pub fn eval(&self, p_mw: f64) -> f64 {
        self.a * p_mw * p_mw + self.b * p_mw + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub bus: usize,
    /// Case dispatch (MW, MVAr).
    pub pg: f64,
    pub qg: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    /// Voltage setpoint; only used for the slack bus.
    pub vg: f64,
    pub in_service: bool,
    pub cost: QuadraticCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_total: f64,
    /// Off-nominal turns ratio as written; 0 means nominal.
    pub tap: f64,
    pub shift_deg: f64,
    pub in_service: bool,
}

impl BranchRecord {
    pub fn effective_tap(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub gens: Vec<GenRecord>,
    pub branches: Vec<BranchRecord>,
}

impl GridCase {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index_map(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Position of the slack bus in `buses`.
    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// In-service generators in case order.
    pub fn active_gens(&self) -> impl Iterator<Item = &GenRecord> {
        self.gens.iter().filter(|g| g.in_service)
    }

    /// The generator sitting on the slack bus.
    pub fn slack_gen(&self) -> &GenRecord {
        let id = self.buses[self.slack_index()].id;
        self.active_gens()
            .find(|g| g.bus == id)
            .expect("validated case has a slack generator")
    }

    /// In-service generators other than the slack unit, in case order.
    /// These are the dispatchable units of the decision vector.
    pub fn dispatchable_gens(&self) -> Vec<&GenRecord> {
        let slack = self.buses[self.slack_index()].id;
        self.active_gens().filter(|g| g.bus != slack).collect()
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        if !(self.base_mva > 0.0) {
            return Err(CaseError::InvalidRecord {
                what: "baseMVA".into(),
                reason: format!("must be positive, got {}", self.base_mva),
            });
        }
        let mut ids = HashMap::new();
        let mut slack: Option<usize> = None;
        for bus in &self.buses {
            if bus.id == 0 {
                return Err(CaseError::InvalidRecord {
                    what: "bus".into(),
                    reason: "bus ids must be positive".into(),
                });
            }
            if ids.insert(bus.id, ()).is_some() {
                return Err(CaseError::InvalidRecord {
                    what: format!("bus {}", bus.id),
                    reason: "duplicate bus id".into(),
                });
            }
            if bus.vmin > bus.vmax {
                return Err(CaseError::InvalidRecord {
                    what: format!("bus {}", bus.id),
                    reason: format!("Vmin {} exceeds Vmax {}", bus.vmin, bus.vmax),
                });
            }
            if bus.kind == BusKind::Slack {
                if let Some(first) = slack {
                    return Err(CaseError::MultipleSlackBuses {
                        first,
                        second: bus.id,
                    });
                }
                slack = Some(bus.id);
            }
        }
        let slack = slack.ok_or(CaseError::NoSlackBus)?;

        let mut gen_buses = HashMap::new();
        for (k, g) in self.gens.iter().enumerate() {
            if !ids.contains_key(&g.bus) {
                return Err(CaseError::UnknownBusReference {
                    what: format!("generator {}", k + 1),
                    bus: g.bus,
                });
            }
            if g.pmin > g.pmax || g.qmin > g.qmax {
                return Err(CaseError::InvalidRecord {
                    what: format!("generator at bus {}", g.bus),
                    reason: "lower limit exceeds upper limit".into(),
                });
            }
            if g.in_service && gen_buses.insert(g.bus, ()).is_some() {
                return Err(CaseError::InvalidRecord {
                    what: format!("generator at bus {}", g.bus),
                    reason: "more than one generator on a bus".into(),
                });
            }
        }
        if !gen_buses.contains_key(&slack) {
            return Err(CaseError::InvalidRecord {
                what: format!("slack bus {slack}"),
                reason: "slack bus hosts no in-service generator".into(),
            });
        }

        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains_key(&end) {
                    return Err(CaseError::UnknownBusReference {
                        what: format!("branch {}", k + 1),
                        bus: end,
                    });
                }
            }
            if br.from == br.to {
                return Err(CaseError::InvalidRecord {
                    what: format!("branch {}", k + 1),
                    reason: "from and to bus coincide".into(),
                });
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(CaseError::ZeroImpedanceBranch {
                    from: br.from,
                    to: br.to,
                });
            }
        }
        Ok(())
    }
}
