use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PlannerConfig, PlannerError};
use crate::dispatch::{DecisionVector, EvLoadSet, FitnessReport, OpfProblem};
use crate::grid::{build_ybus, parse_matpower_case, GridCase};
use crate::miga::{run_ga, GaOutcome};
use crate::network::{read_links_csv, read_nodes_csv, read_stations_csv, RoadNetwork, StationSite};
use crate::powerflow::{solve_newton, InjectionSpec};
use crate::tripsim::{
    aggregate_to_buses, assign_vehicles, generate_profiles, read_profiles_csv, read_station_bus_map,
    read_trips_csv, write_bus_series_csv, write_profiles_csv, BusLoadSeries, ChargingProfile,
    DemandSummary, Trip, TripOutcome, TripRecord, MINUTES_PER_DAY,
};
use crate::vehicle::{default_fleet, parse_fleet, VehicleSpec};

pub const ARTIFACT_PROFILES: &str = "station_profiles.csv";
pub const ARTIFACT_BUS_SERIES: &str = "bus_series.csv";
pub const ARTIFACT_DEMAND_SUMMARY: &str = "demand_summary.json";
pub const ARTIFACT_PLAN_RESULT: &str = "plan_result.json";
pub const ARTIFACT_GA_HISTORY: &str = "ga_history.csv";
pub const ARTIFACT_MANIFEST: &str = "manifest.json";

fn read_text(path: &Path) -> Result<String, PlannerError> {
    std::fs::read_to_string(path).map_err(|e| PlannerError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PlannerError> {
    std::fs::write(path, bytes).map_err(|e| PlannerError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PlannerError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| PlannerError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PlannerError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| PlannerError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn load_case(path: &Path) -> Result<GridCase, PlannerError> {
    parse_matpower_case(&read_text(path)?).map_err(|source| PlannerError::Case {
        path: path.display().to_string(),
        source,
    })
}

fn load_fleet(cfg: &PlannerConfig) -> Result<Vec<VehicleSpec>, PlannerError> {
    match &cfg.fleet {
        None => Ok(default_fleet()),
        Some(_) => Ok(parse_fleet(&read_text(cfg.input("fleet")?)?)?),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), PlannerError> {
    std::fs::create_dir_all(dir).map_err(|e| PlannerError::io(dir, e))
}

fn provenance(cfg: &PlannerConfig) -> Vec<String> {
    vec![
        format!("config_hash: {}", cfg.hash()),
        format!("seed: {}", cfg.seed),
        format!("ga_seed: {}", cfg.ga.seed),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub buses: usize,
    pub gens: usize,
    pub branches: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub slack_p_mw: f64,
    pub slack_q_mvar: f64,
}

/// Parses a case, builds its admittance matrix and solves the base flow.
pub fn cmd_validate_case(path: &Path) -> Result<CaseReport, PlannerError> {
    let case = load_case(path)?;
    let y = build_ybus(&case).map_err(|source| PlannerError::Case {
        path: path.display().to_string(),
        source,
    })?;
    let sol = solve_newton(&y, &InjectionSpec::from_case_dispatch(&case), &Default::default())?;
    let slack = case.slack_index();
    Ok(CaseReport {
        buses: case.n_bus(),
        gens: case.gens.len(),
        branches: case.branches.len(),
        converged: sol.converged,
        iterations: sol.iterations,
        max_mismatch: sol.max_mismatch,
        slack_p_mw: sol.slack_p * case.base_mva + case.buses[slack].pd,
        slack_q_mvar: sol.slack_q * case.base_mva + case.buses[slack].qd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfReport {
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub slack_p_mw: f64,
    pub slack_q_mvar: f64,
    pub vm: Vec<f64>,
    pub va_deg: Vec<f64>,
}

/// Base-case power flow with extra active loads `(bus id, MW)`.
pub fn cmd_solve_pf(path: &Path, extra_load: &[(usize, f64)]) -> Result<PfReport, PlannerError> {
    let mut case = load_case(path)?;
    for &(bus, mw) in extra_load {
        let i = case
            .bus_index(bus)
            .ok_or_else(|| PlannerError::Config(format!("extra load on unknown bus {bus}")))?;
        case.buses[i].pd += mw;
    }
    let y = build_ybus(&case).map_err(|source| PlannerError::Case {
        path: path.display().to_string(),
        source,
    })?;
    let sol = solve_newton(&y, &InjectionSpec::from_case_dispatch(&case), &Default::default())?;
    let slack = case.slack_index();
    Ok(PfReport {
        converged: sol.converged,
        iterations: sol.iterations,
        max_mismatch: sol.max_mismatch,
        slack_p_mw: sol.slack_p * case.base_mva + case.buses[slack].pd,
        slack_q_mvar: sol.slack_q * case.base_mva + case.buses[slack].qd,
        vm: sol.vm,
        va_deg: sol.va.iter().map(|a| a.to_degrees()).collect(),
    })
}

/// Everything produced by the transport half of the pipeline.
#[derive(Debug, Clone)]
pub struct DemandRun {
    pub stations: Vec<StationSite>,
    pub station_bus: BTreeMap<usize, usize>,
    pub trips: Vec<Trip>,
    pub outcomes: Vec<TripOutcome>,
    pub profiles: Vec<ChargingProfile>,
    pub bus_series: Vec<BusLoadSeries>,
    pub summary: DemandSummary,
}

struct DemandInputs {
    net: RoadNetwork,
    stations: Vec<StationSite>,
    station_bus: BTreeMap<usize, usize>,
    records: Vec<TripRecord>,
    fleet: Vec<VehicleSpec>,
}

fn load_demand_inputs(cfg: &PlannerConfig) -> Result<DemandInputs, PlannerError> {
    cfg.validate()?;
    let net = RoadNetwork::new(read_nodes_csv(cfg.input("nodes")?)?, read_links_csv(cfg.input("links")?)?)?;
    Ok(DemandInputs {
        stations: read_stations_csv(cfg.input("stations")?)?,
        station_bus: read_station_bus_map(cfg.input("station_bus_map")?)?,
        records: read_trips_csv(cfg.input("trips")?)?,
        fleet: load_fleet(cfg)?,
        net,
    })
}

fn run_demand(cfg: &PlannerConfig, inp: &DemandInputs, stations: Vec<StationSite>, station_bus: BTreeMap<usize, usize>) -> Result<DemandRun, PlannerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trips = assign_vehicles(&inp.records, &inp.fleet, cfg.ev_fraction, &mut rng)?;
    let (profiles, outcomes) = generate_profiles(&trips, &inp.net, &stations, &cfg.sim_params())?;
    let bus_series = aggregate_to_buses(&profiles, &station_bus, cfg.step_min)?;
    let summary = DemandSummary::new(trips.len(), &outcomes);
    Ok(DemandRun {
        stations,
        station_bus,
        trips,
        outcomes,
        profiles,
        bus_series,
        summary,
    })
}

/// Assigns vehicles, simulates every EV trip and builds station and bus
/// load profiles. Reads inputs only; writes nothing.
pub fn simulate_demand(cfg: &PlannerConfig) -> Result<DemandRun, PlannerError> {
    let inp = load_demand_inputs(cfg)?;
    run_demand(cfg, &inp, inp.stations.clone(), inp.station_bus.clone())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config_hash: String,
    seed: u64,
    #[serde(flatten)]
    summary: &'a DemandSummary,
}

fn write_demand_artifacts(cfg: &PlannerConfig, dir: &Path, run: &DemandRun) -> Result<(), PlannerError> {
    ensure_dir(dir)?;
    let head = provenance(cfg);
    write_profiles_csv(&dir.join(ARTIFACT_PROFILES), &run.profiles, &head)?;
    write_bus_series_csv(&dir.join(ARTIFACT_BUS_SERIES), &run.bus_series, &head)?;
    write_json(
        &dir.join(ARTIFACT_DEMAND_SUMMARY),
        &SummaryFile {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            summary: &run.summary,
        },
    )
}

/// [`simulate_demand`] plus the station-profile, bus-series and summary files.
pub fn cmd_simulate_demand(cfg: &PlannerConfig) -> Result<DemandRun, PlannerError> {
    let run = simulate_demand(cfg)?;
    write_demand_artifacts(cfg, &cfg.output_dir(), &run)?;
    Ok(run)
}

/// Dispatch/placement problem for the configured case with one placeable
/// station per profile.
pub fn build_problem(cfg: &PlannerConfig, profiles: &[ChargingProfile]) -> Result<OpfProblem, PlannerError> {
    cfg.validate()?;
    let case = load_case(cfg.input("case")?)?;
    let ev = if profiles.is_empty() {
        EvLoadSet::new(Vec::new(), cfg.step_min as f64, MINUTES_PER_DAY / cfg.step_min)?
    } else {
        let series: Vec<Vec<f64>> = profiles.iter().map(|p| p.series_kw.clone()).collect();
        EvLoadSet::from_minute_kw(&series, cfg.step_min)?.scaled(cfg.profile_scale)?
    };
    let problem = OpfProblem::new(case, ev, cfg.penalty, cfg.power_flow)?;
    Ok(match &cfg.candidate_buses {
        Some(b) => problem.with_candidate_buses(b.clone())?,
        None => problem,
    })
}

/// Outcome of the grid optimization; written as the plan result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub config_hash: String,
    pub seed: u64,
    pub ga_seed: u64,
    /// Station behind each placement entry.
    pub station_ids: Vec<usize>,
    pub best_placement: Vec<usize>,
    pub best_pg: Vec<f64>,
    pub best_qg: Vec<f64>,
    pub total_cost: f64,
    pub penalty: f64,
    pub objective: f64,
    pub feasible: bool,
    pub worst_voltage: Option<f64>,
    pub diverged_steps: usize,
    pub per_step_slack_p: Vec<Option<f64>>,
    pub generations: usize,
    pub evaluations: usize,
    pub ga_history: String,
}

impl PlanResult {
    pub fn decision(&self) -> DecisionVector {
        DecisionVector {
            pg: self.best_pg.clone(),
            qg: self.best_qg.clone(),
            placement: self.best_placement.clone(),
        }
    }

    /// Re-evaluates the stored decision and checks the objective matches.
    pub fn verify(&self, problem: &OpfProblem) -> Result<FitnessReport, PlannerError> {
        let r = problem.fitness(&self.decision())?;
        if r.objective().to_bits() != self.objective.to_bits() {
            return Err(PlannerError::SelfCheck {
                stored: self.objective,
                recomputed: r.objective(),
            });
        }
        Ok(r)
    }
}

/// Reads a plan result and re-verifies its objective against `problem`.
pub fn load_plan_result(path: &Path, problem: &OpfProblem) -> Result<PlanResult, PlannerError> {
    let r: PlanResult = read_json(path)?;
    r.verify(problem)?;
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct OpfRun {
    pub problem: OpfProblem,
    pub outcome: GaOutcome,
    pub report: FitnessReport,
    pub result: PlanResult,
}

/// Runs the GA over dispatch and placement for the given station profiles.
pub fn solve_opf(cfg: &PlannerConfig, profiles: &[ChargingProfile]) -> Result<OpfRun, PlannerError> {
    let problem = build_problem(cfg, profiles)?;
    let layout = problem.gene_layout();
    let run = || run_ga(&cfg.ga, &layout, |c| problem.objective(c));
    let outcome = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PlannerError::Config(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let x = problem.decode(&outcome.best);
    let report = problem.fitness(&x)?;
    let result = PlanResult {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        ga_seed: cfg.ga.seed,
        station_ids: profiles.iter().map(|p| p.station_id).collect(),
        best_placement: x.placement,
        best_pg: x.pg,
        best_qg: x.qg,
        total_cost: report.total_cost,
        penalty: report.penalty,
        objective: report.objective(),
        feasible: report.feasible,
        worst_voltage: report.worst_voltage.is_finite().then_some(report.worst_voltage),
        diverged_steps: report.diverged_steps,
        per_step_slack_p: report.per_step_slack_p.clone(),
        generations: outcome.history.len(),
        evaluations: outcome.evaluations,
        ga_history: ARTIFACT_GA_HISTORY.to_string(),
    };
    result.verify(&problem)?;
    Ok(OpfRun {
        problem,
        outcome,
        report,
        result,
    })
}

fn history_csv(cfg: &PlannerConfig, outcome: &GaOutcome) -> String {
    let mut text: String = provenance(cfg).iter().map(|c| format!("# {c}\n")).collect();
    text.push_str(&outcome.history.to_csv());
    text
}

fn write_opf_artifacts(cfg: &PlannerConfig, dir: &Path, run: &OpfRun) -> Result<(), PlannerError> {
    ensure_dir(dir)?;
    write_json(&dir.join(ARTIFACT_PLAN_RESULT), &run.result)?;
    write_bytes(&dir.join(ARTIFACT_GA_HISTORY), history_csv(cfg, &run.outcome).as_bytes())
}

/// Optimizes against the configured profile file and writes the plan
/// result and GA history.
pub fn cmd_solve_opf(cfg: &PlannerConfig) -> Result<OpfRun, PlannerError> {
    let profiles = read_profiles_csv(cfg.input("profiles")?)?;
    let run = solve_opf(cfg, &profiles)?;
    write_opf_artifacts(cfg, &cfg.output_dir(), &run)?;
    Ok(run)
}

/// Scores one decision vector against the configured profile file.
pub fn evaluate_decision(cfg: &PlannerConfig, x: &DecisionVector) -> Result<FitnessReport, PlannerError> {
    let profiles = read_profiles_csv(cfg.input("profiles")?)?;
    Ok(build_problem(cfg, &profiles)?.fitness(x)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestArtifact {
    pub name: String,
    pub file: String,
    pub sha256: String,
}

/// Links a plan's artifacts to the exact configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub ga_seed: u64,
    pub config: PlannerConfig,
    pub artifacts: Vec<ManifestArtifact>,
}

impl Manifest {
    /// The recorded config, writing into the manifest's own directory.
    pub fn load_config(path: &Path) -> Result<PlannerConfig, PlannerError> {
        let m: Manifest = read_json(path)?;
        let mut cfg = m.config;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.output_dir = Some(std::path::absolute(dir).map_err(|e| PlannerError::io(dir, e))?);
        if cfg.hash() != m.config_hash {
            return Err(PlannerError::Config(format!(
                "{}: config hash does not match its recorded config",
                path.display()
            )));
        }
        Ok(cfg)
    }
}

/// Moves each station to a road node already served by its chosen bus
/// (the lowest-id station mapped there) and remaps it to that bus.
fn feed_back(
    stations: &[StationSite],
    station_bus: &BTreeMap<usize, usize>,
    placement: &[usize],
) -> (Vec<StationSite>, BTreeMap<usize, usize>) {
    let mut by_id: Vec<&StationSite> = stations.iter().collect();
    by_id.sort_by_key(|s| s.id);
    let mut node_of_bus: BTreeMap<usize, usize> = BTreeMap::new();
    for s in by_id {
        if let Some(&b) = station_bus.get(&s.id) {
            node_of_bus.entry(b).or_insert(s.node);
        }
    }
    let mut map = station_bus.clone();
    let moved = stations
        .iter()
        .zip(placement)
        .map(|(s, &bus)| {
            map.insert(s.id, bus);
            StationSite {
                node: node_of_bus.get(&bus).copied().unwrap_or(s.node),
                ..s.clone()
            }
        })
        .collect();
    (moved, map)
}

/// Demand simulation followed by grid optimization, with every artifact
/// and a manifest written to the output directory.
pub fn cmd_plan(cfg: &PlannerConfig) -> Result<(DemandRun, OpfRun, Manifest), PlannerError> {
    let inp = load_demand_inputs(cfg)?;
    cfg.input("case")?;
    let (mut stations, mut map) = (inp.stations.clone(), inp.station_bus.clone());
    let mut iteration = 0;
    let (demand, opf) = loop {
        let demand = run_demand(cfg, &inp, stations, map)?;
        let opf = solve_opf(cfg, &demand.profiles)?;
        iteration += 1;
        if iteration >= cfg.feedback_iterations {
            break (demand, opf);
        }
        (stations, map) = feed_back(&demand.stations, &demand.station_bus, &opf.result.best_placement);
    };

    let dir: PathBuf = cfg.output_dir();
    write_demand_artifacts(cfg, &dir, &demand)?;
    write_opf_artifacts(cfg, &dir, &opf)?;
    let mut artifacts = Vec::new();
    for (name, file) in [
        ("station_profiles", ARTIFACT_PROFILES),
        ("bus_series", ARTIFACT_BUS_SERIES),
        ("demand_summary", ARTIFACT_DEMAND_SUMMARY),
        ("plan_result", ARTIFACT_PLAN_RESULT),
        ("ga_history", ARTIFACT_GA_HISTORY),
    ] {
        let path = dir.join(file);
        let bytes = std::fs::read(&path).map_err(|e| PlannerError::io(&path, e))?;
        artifacts.push(ManifestArtifact {
            name: name.into(),
            file: file.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        ga_seed: cfg.ga.seed,
        config: PlannerConfig {
            output_dir: None,
            ..cfg.clone()
        },
        artifacts,
    };
    write_json(&dir.join(ARTIFACT_MANIFEST), &manifest)?;
    Ok((demand, opf, manifest))
}
