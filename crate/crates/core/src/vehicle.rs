//! Longitudinal vehicle dynamics: tractive force, power and per-link energy.
//!
//! Speeds are km/h everywhere except inside [`tractive_power`], where the
//! wheel power is formed with m/s.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Aerodynamic drag constant for `u` in km/h and force in N.
const DRAG_KMH: f64 = 21.15;

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("vehicle {name:?}: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("invalid drive state: {0}")]
    InvalidState(String),
    #[error("fleet file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("fleet is empty")]
    EmptyFleet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub name: String,
    /// Mass, kg.
    pub m: f64,
    #[serde(rename = "CD")]
    pub cd: f64,
    /// Frontal area, m².
    #[serde(rename = "A")]
    pub area: f64,
    /// Rolling friction coefficient.
    pub f: f64,
    /// Rotating-mass coefficient.
    pub delta: f64,
    /// Powertrain efficiency.
    pub eta: f64,
    #[serde(rename = "batteryKWh")]
    pub battery_kwh: f64,
    #[serde(rename = "iT")]
    pub i_t: f64,
    /// Wheel radius, m.
    #[serde(rename = "rWheel")]
    pub r_wheel: f64,
}

impl VehicleSpec {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let bad = |reason: &str| {
            Err(VehicleError::InvalidSpec {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.m > 0.0) {
            return bad("mass must be positive");
        }
        if !(self.cd > 0.0) || !(self.area > 0.0) {
            return bad("drag coefficient and frontal area must be positive");
        }
        if !(self.battery_kwh > 0.0) {
            return bad("battery capacity must be positive");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("efficiency must lie in (0, 1]");
        }
        if !(self.f >= 0.0) || !(self.delta >= 1.0) {
            return bad("friction must be non-negative and delta at least 1");
        }
        Ok(())
    }
}

pub fn parse_fleet(json: &str) -> Result<Vec<VehicleSpec>, VehicleError> {
    let fleet: Vec<VehicleSpec> = serde_json::from_str(json)?;
    if fleet.is_empty() {
        return Err(VehicleError::EmptyFleet);
    }
    for v in &fleet {
        v.validate()?;
    }
    Ok(fleet)
}

pub fn default_fleet() -> Vec<VehicleSpec> {
    parse_fleet(crate::fixtures::FLEET_JSON).expect("bundled fleet is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveState {
    /// Speed, km/h.
    pub u_kmh: f64,
    /// du/dt, m/s².
    pub accel: f64,
    /// Road slope, rad.
    pub theta: f64,
}

impl DriveState {
    pub fn cruise(u_kmh: f64, theta: f64) -> Self {
        Self {
            u_kmh,
            accel: 0.0,
            theta,
        }
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        if !(self.u_kmh >= 0.0) || !self.accel.is_finite() || !self.theta.is_finite() {
            return Err(VehicleError::InvalidState(format!("{self:?}")));
        }
        Ok(())
    }
}

/// The four resistance terms, all in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TractiveForce {
    pub rolling_n: f64,
    pub grade_n: f64,
    pub aero_n: f64,
    pub inertia_n: f64,
}

impl TractiveForce {
    pub fn total_n(&self) -> f64 {
        self.rolling_n + self.grade_n + self.aero_n + self.inertia_n
    }
}

pub fn tractive_force(spec: &VehicleSpec, state: &DriveState, g: f64) -> TractiveForce {
    let mg = spec.m * g;
    TractiveForce {
        rolling_n: mg * state.theta.cos() * spec.f,
        grade_n: mg * state.theta.sin(),
        aero_n: spec.cd * spec.area * state.u_kmh * state.u_kmh / DRAG_KMH,
        inertia_n: spec.delta * spec.m * state.accel,
    }
}

/// Recuperation setting. `None` draws nothing from the battery when the
/// wheels deliver power back.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regen(pub Option<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TractivePower {
    pub wheel_w: f64,
    /// Power drawn from the battery; negative only with regeneration on.
    pub battery_w: f64,
}

pub fn tractive_power(spec: &VehicleSpec, state: &DriveState, g: f64, regen: Regen) -> TractivePower {
    let wheel_w = tractive_force(spec, state, g).total_n() * state.u_kmh / 3.6;
    let battery_w = if wheel_w > 0.0 {
        wheel_w / spec.eta
    } else {
        match regen.0 {
            Some(eff) => wheel_w * eff,
            None => 0.0,
        }
    };
    TractivePower { wheel_w, battery_w }
}

/// Battery energy (kWh) for a steady-speed traversal of one link.
pub fn link_energy(
    spec: &VehicleSpec,
    length_m: f64,
    speed_kmh: f64,
    grade_rad: f64,
    g: f64,
    regen: Regen,
) -> f64 {
    let p = tractive_power(spec, &DriveState::cruise(speed_kmh, grade_rad), g, regen);
    let seconds = length_m / (speed_kmh / 3.6);
    p.battery_w * seconds / 3.6e6
}
