use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chargeplan::miga::GaConfig;
use chargeplan::network::{read_links_csv, read_nodes_csv, shortest_path_by, Metric, RoadNetwork};
use chargeplan::planner::{
    cmd_plan, cmd_simulate_demand, cmd_solve_opf, cmd_solve_pf, cmd_validate_case, evaluate_decision,
    write_desk_fixture, DeskFixture, Manifest, PlannerConfig, PlannerError, CONFIG_ENV,
};
use chargeplan::tripsim::route_energy;
use chargeplan::vehicle::{
    default_fleet, link_energy, parse_fleet, tractive_force, tractive_power, DriveState, Regen, VehicleSpec,
};
use chargeplan::DecisionVector;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "chargeplan", version, about = "EV charging demand and grid-side charger placement")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a MATPOWER case and solve its base power flow.
    ValidateCase { case: PathBuf },
    /// Base-case power flow, optionally with extra active load.
    SolvePf {
        case: PathBuf,
        /// Extra load as BUS:MW; repeatable.
        #[arg(long = "load", value_parser = parse_load)]
        loads: Vec<(usize, f64)>,
    },
    /// Shortest route between two road nodes.
    Route {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        /// Also report per-link battery energy for this fleet vehicle.
        #[arg(long)]
        vehicle: Option<String>,
    },
    /// Tractive force, power and energy of one vehicle at a driving state.
    Energy {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        vehicle: String,
        #[arg(long, default_value_t = 100.0)]
        speed_kmh: f64,
        #[arg(long, default_value_t = 0.0)]
        accel: f64,
        /// Road slope, rad.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        grade: f64,
        /// Link length for the energy figure, m.
        #[arg(long, default_value_t = 1000.0)]
        length_m: f64,
    },
    /// Simulate trips and write station and bus load profiles.
    SimulateDemand {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Optimize dispatch and placement against a station profile file.
    SolveOpf {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Score this decision JSON ({"pg","qg","placement"}) instead of running the GA.
        #[arg(long)]
        decision: Option<PathBuf>,
    },
    /// Demand simulation followed by grid optimization.
    Plan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Rerun exactly what a previous manifest recorded; takes precedence
        /// over `--config`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write the seeded desk-scale scenario into a directory.
    GenerateFixture {
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        trips: usize,
        #[arg(long, default_value_t = 8)]
        stations: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        pop_size: Option<usize>,
        #[arg(long)]
        max_gen: Option<usize>,
    },
}

/// Config file plus per-key overrides. Flags win over the file, the file
/// over built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    links: Option<PathBuf>,
    #[arg(long)]
    stations: Option<PathBuf>,
    #[arg(long)]
    trips: Option<PathBuf>,
    #[arg(long)]
    station_bus_map: Option<PathBuf>,
    #[arg(long)]
    fleet: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    ev_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    n_nearest: Option<usize>,
    /// `distance` or `travel_time`.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    step_min: Option<usize>,
    #[arg(long)]
    profile_scale: Option<f64>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    max_gen: Option<usize>,
    #[arg(long)]
    ga_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    feedback_iterations: Option<usize>,
}

impl ConfigArgs {
    fn base(&self) -> Result<PlannerConfig, PlannerError> {
        match &self.config {
            Some(p) => PlannerConfig::from_file(p),
            None => Ok(PlannerConfig::default()),
        }
    }

    fn apply(&self, mut cfg: PlannerConfig) -> Result<PlannerConfig> {
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { cfg.$($field).+ = v.clone().into(); })*
            };
        }
        set!(
            case => case, nodes => nodes, links => links, stations => stations, trips => trips,
            station_bus_map => station_bus_map, fleet => fleet, profiles => profiles,
            output_dir => output_dir, ev_fraction => ev_fraction, seed => seed, factor => factor,
            n_nearest => n_nearest, step_min => step_min, profile_scale => profile_scale,
            pop_size => ga.pop_size, max_gen => ga.max_gen, ga_seed => ga.seed,
            workers => workers, feedback_iterations => feedback_iterations,
        );
        if let Some(m) = &self.metric {
            cfg.metric = parse_metric(m)?;
        }
        Ok(cfg)
    }

    fn load(&self) -> Result<PlannerConfig> {
        self.apply(self.base()?)
    }
}

fn parse_load(s: &str) -> Result<(usize, f64), String> {
    let (bus, mw) = s.split_once(':').ok_or("expected BUS:MW")?;
    Ok((
        bus.trim().parse().map_err(|e| format!("bus: {e}"))?,
        mw.trim().parse().map_err(|e| format!("MW: {e}"))?,
    ))
}

fn parse_metric(s: &str) -> Result<Metric> {
    serde_json::from_value(json!(s)).map_err(|_| anyhow!("unknown metric `{s}`; use distance or travel_time"))
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn fleet(cfg: &PlannerConfig) -> Result<Vec<VehicleSpec>> {
    Ok(match &cfg.fleet {
        None => default_fleet(),
        Some(_) => parse_fleet(&std::fs::read_to_string(cfg.input("fleet")?)?)?,
    })
}

fn vehicle(cfg: &PlannerConfig, name: &str) -> Result<VehicleSpec> {
    let fleet = fleet(cfg)?;
    let names: Vec<&str> = fleet.iter().map(|v| v.name.as_str()).collect();
    fleet
        .iter()
        .find(|v| v.name == name)
        .cloned()
        .ok_or_else(|| anyhow!("no vehicle `{name}` in the fleet (have: {})", names.join(", ")))
}

fn network(cfg: &PlannerConfig) -> Result<RoadNetwork> {
    let nodes = read_nodes_csv(cfg.input("nodes")?)?;
    let links = read_links_csv(cfg.input("links")?)?;
    Ok(RoadNetwork::new(nodes, links)?)
}

fn converged(ok: bool, what: &Path) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(PlannerError::NotConverged(what.display().to_string()).into())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::ValidateCase { case } => {
            let r = cmd_validate_case(&case)?;
            print(&r)?;
            converged(r.converged, &case)
        }
        Cmd::SolvePf { case, loads } => {
            let r = cmd_solve_pf(&case, &loads)?;
            print(&r)?;
            converged(r.converged, &case)
        }
        Cmd::Route { cfg, from, to, vehicle: name } => {
            let cfg = cfg.load()?;
            let net = network(&cfg)?;
            let mut route = shortest_path_by(&net, from, to, cfg.metric)?;
            let energy = match name {
                Some(n) => Some(route_energy(&net, &mut route, &vehicle(&cfg, &n)?, &cfg.sim_params())),
                None => None,
            };
            print(&json!({
                "nodes": route.node_seq,
                "length_m": route.total_length_m,
                "travel_min": route.travel_min(&net),
                "energy_kwh": energy,
                "per_link_energy_kwh": energy.map(|_| &route.per_link_energy_kwh),
            }))
        }
        Cmd::Energy { cfg, vehicle: name, speed_kmh, accel, grade, length_m } => {
            let cfg = cfg.load()?;
            let spec = vehicle(&cfg, &name)?;
            let state = DriveState { u_kmh: speed_kmh, accel, theta: grade };
            state.validate()?;
            let regen = Regen(cfg.regen);
            let force = tractive_force(&spec, &state, cfg.gravity);
            print(&json!({
                "vehicle": spec.name,
                "force_n": force.total_n(),
                "terms_n": force,
                "power": tractive_power(&spec, &state, cfg.gravity, regen),
                "link_energy_kwh": link_energy(&spec, length_m, speed_kmh, grade, cfg.gravity, regen),
            }))
        }
        Cmd::SimulateDemand { cfg } => {
            let cfg = cfg.load()?;
            let run = cmd_simulate_demand(&cfg)?;
            print(&json!({
                "output_dir": cfg.output_dir(),
                "config_hash": cfg.hash(),
                "summary": run.summary,
            }))
        }
        Cmd::SolveOpf { cfg, decision } => {
            let cfg = cfg.load()?;
            if let Some(path) = decision {
                let text = std::fs::read_to_string(&path).with_context(|| path.display().to_string())?;
                let x: DecisionVector =
                    serde_json::from_str(&text).with_context(|| format!("{}: not a decision vector", path.display()))?;
                let r = evaluate_decision(&cfg, &x)?;
                print(&json!({ "objective": r.objective(), "report": r }))
            } else {
                let run = cmd_solve_opf(&cfg)?;
                print(&json!({ "output_dir": cfg.output_dir(), "result": run.result }))
            }
        }
        Cmd::Plan { cfg: args, manifest } => {
            let cfg = match manifest {
                Some(m) => args.apply(Manifest::load_config(&m)?)?,
                None if args.config.is_none() => bail!("plan needs --config, --manifest or ${CONFIG_ENV}"),
                None => args.load()?,
            };
            let (demand, opf, _) = cmd_plan(&cfg)?;
            print(&json!({
                "output_dir": cfg.output_dir(),
                "config_hash": cfg.hash(),
                "summary": demand.summary,
                "station_ids": opf.result.station_ids,
                "placement": opf.result.best_placement,
                "total_cost": opf.result.total_cost,
                "objective": opf.result.objective,
                "feasible": opf.result.feasible,
            }))
        }
        Cmd::GenerateFixture { dir, trips, stations, seed, pop_size, max_gen } => {
            let base = DeskFixture::default();
            let fx = DeskFixture {
                trips,
                stations,
                seed,
                ga: GaConfig {
                    pop_size: pop_size.unwrap_or(base.ga.pop_size),
                    max_gen: max_gen.unwrap_or(base.ga.max_gen),
                    ..base.ga.clone()
                },
                ..base
            };
            let cfg = write_desk_fixture(&dir, &fx)?;
            print(&json!({ "config": cfg }))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<PlannerError>())
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
