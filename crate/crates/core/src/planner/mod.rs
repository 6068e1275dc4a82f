//! Configuration, end-to-end orchestration and result files.

mod commands;
mod fixture;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dispatch::{DispatchError, PenaltyWeights};
use crate::grid::CaseError;
use crate::miga::{GaConfig, GaError};
use crate::network::{Metric, NetworkError};
use crate::powerflow::{PowerFlowError, PowerFlowOptions};
use crate::tripsim::{SimParams, TripError};
use crate::vehicle::{VehicleError, STANDARD_GRAVITY};

pub use commands::{
    build_problem, cmd_plan, cmd_simulate_demand, cmd_solve_opf, cmd_solve_pf, cmd_validate_case,
    evaluate_decision, load_plan_result, simulate_demand, solve_opf, CaseReport, DemandRun,
    Manifest, ManifestArtifact, OpfRun, PfReport, PlanResult, ARTIFACT_BUS_SERIES,
    ARTIFACT_DEMAND_SUMMARY, ARTIFACT_GA_HISTORY, ARTIFACT_MANIFEST, ARTIFACT_PLAN_RESULT,
    ARTIFACT_PROFILES,
};
pub use fixture::{write_desk_fixture, DeskFixture};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "CHARGEPLAN_CONFIG";

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Case {
        path: String,
        #[source]
        source: CaseError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Trip(#[from] TripError),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error("power flow did not converge: {0}")]
    NotConverged(String),
    #[error("stored objective {stored} does not match re-evaluated {recomputed}")]
    SelfCheck { stored: f64, recomputed: f64 },
}

impl PlannerError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PlannerError::PowerFlow(PowerFlowError::InvalidOptions(_)) => 1,
            PlannerError::Ga(GaError::InvalidConfig(_)) => 1,
            PlannerError::PowerFlow(_)
            | PlannerError::Ga(_)
            | PlannerError::NotConverged(_)
            | PlannerError::SelfCheck { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PlannerError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Single JSON document driving every command. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub case: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub links: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub trips: Option<PathBuf>,
    pub station_bus_map: Option<PathBuf>,
    /// Fleet JSON; the bundled four-model fleet when absent.
    pub fleet: Option<PathBuf>,
    /// Station profile CSV consumed by `solve-opf`.
    pub profiles: Option<PathBuf>,
    pub ev_fraction: f64,
    /// Seeds vehicle assignment.
    pub seed: u64,
    pub factor: f64,
    pub n_nearest: usize,
    pub metric: Metric,
    pub gravity: f64,
    pub regen: Option<f64>,
    /// Fitness time step, minutes.
    pub step_min: usize,
    /// Multiplier applied to station profiles before they reach the grid.
    pub profile_scale: f64,
    pub penalty: PenaltyWeights,
    pub power_flow: PowerFlowOptions,
    pub ga: GaConfig,
    /// Buses a station may be placed on; every bus when absent.
    pub candidate_buses: Option<Vec<usize>>,
    /// Demand/placement passes; values above 1 move each station to a road
    /// node already mapped to its chosen bus before re-simulating.
    pub feedback_iterations: usize,
    /// Fitness worker threads; all available cores when absent.
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            case: None,
            nodes: None,
            links: None,
            stations: None,
            trips: None,
            station_bus_map: None,
            fleet: None,
            profiles: None,
            ev_fraction: 1.0,
            seed: 1,
            factor: 0.8,
            n_nearest: 20,
            metric: Metric::Distance,
            gravity: STANDARD_GRAVITY,
            regen: None,
            step_min: 60,
            profile_scale: 1.0,
            penalty: PenaltyWeights::default(),
            power_flow: PowerFlowOptions::default(),
            ga: GaConfig::default(),
            candidate_buses: None,
            feedback_iterations: 1,
            workers: None,
            output_dir: None,
        }
    }
}

impl PlannerConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, PlannerError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|source| PlannerError::Json {
            path: "<config>".into(),
            source,
        })?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PlannerError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlannerError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| PlannerError::Json {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = std::path::absolute(base).map_err(|e| PlannerError::io(base, e))?;
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.case,
            &mut self.nodes,
            &mut self.links,
            &mut self.stations,
            &mut self.trips,
            &mut self.station_bus_map,
            &mut self.fleet,
            &mut self.profiles,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: String| Err(PlannerError::Config(m));
        if !(0.0..=1.0).contains(&self.ev_fraction) {
            return bad(format!("ev_fraction must lie in [0, 1], got {}", self.ev_fraction));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return bad(format!("factor must lie in (0, 1), got {}", self.factor));
        }
        if self.n_nearest == 0 {
            return bad("n_nearest must be at least 1".into());
        }
        if self.step_min == 0 || crate::tripsim::MINUTES_PER_DAY % self.step_min != 0 {
            return bad(format!("step_min {} must divide 1440", self.step_min));
        }
        if !(self.profile_scale >= 0.0 && self.profile_scale.is_finite()) {
            return bad(format!("profile_scale must be non-negative, got {}", self.profile_scale));
        }
        if self.feedback_iterations == 0 {
            return bad("feedback_iterations must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if let Some(r) = self.regen {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("regen efficiency must lie in [0, 1], got {r}"));
            }
        }
        self.ga.validate()?;
        self.power_flow.validate()?;
        Ok(())
    }

    /// Path of a required input, checked for existence.
    pub fn input(&self, key: &str) -> Result<&Path, PlannerError> {
        let p = match key {
            "case" => &self.case,
            "nodes" => &self.nodes,
            "links" => &self.links,
            "stations" => &self.stations,
            "trips" => &self.trips,
            "station_bus_map" => &self.station_bus_map,
            "profiles" => &self.profiles,
            "fleet" => &self.fleet,
            _ => return Err(PlannerError::Config(format!("unknown input `{key}`"))),
        };
        let p = p
            .as_deref()
            .ok_or_else(|| PlannerError::Config(format!("`{key}` is not set")))?;
        if !p.exists() {
            return Err(PlannerError::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{key} file not found")),
            ));
        }
        Ok(p)
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            factor: self.factor,
            n_nearest: self.n_nearest,
            gravity: self.gravity,
            regen: self.regen,
            metric: self.metric,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
