use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PlannerConfig, PlannerError};
use crate::miga::GaConfig;
use crate::network::{synthetic_grid, synthetic_stations, write_links_csv, write_nodes_csv, write_stations_csv, GridSpec};
use crate::tripsim::{synthetic_trips, write_station_bus_map, write_trips_csv};

/// Seeded small-scale scenario: street grid, stations, morning trips and the
/// 30-bus case, plus a ready-to-run planner config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeskFixture {
    pub grid: GridSpec,
    pub stations: usize,
    pub trips: usize,
    pub seed: u64,
    pub profile_scale: f64,
    pub ga: GaConfig,
}

impl Default for DeskFixture {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            stations: 8,
            trips: 100,
            seed: 42,
            profile_scale: 100.0,
            ga: GaConfig {
                pop_size: 200,
                max_gen: 100,
                ..GaConfig::default()
            },
        }
    }
}

/// Writes the fixture into `dir` and returns the path of its config file.
pub fn write_desk_fixture(dir: &Path, fx: &DeskFixture) -> Result<PathBuf, PlannerError> {
    std::fs::create_dir_all(dir).map_err(|e| PlannerError::io(dir, e))?;
    let net = synthetic_grid(&fx.grid);
    let stations = synthetic_stations(&net, fx.stations, fx.seed);
    let trips = synthetic_trips(&net, fx.trips, fx.seed.wrapping_add(1));

    // stations sit on distinct load buses other than the slack
    let case_text = crate::fixtures::CASE30;
    let n_bus = crate::grid::parse_matpower_case(case_text)
        .expect("bundled case parses")
        .n_bus();
    let mut rng = ChaCha8Rng::seed_from_u64(fx.seed.wrapping_add(2));
    let buses = sample(&mut rng, n_bus - 1, stations.len().min(n_bus - 1)).into_vec();
    let map: BTreeMap<usize, usize> = stations
        .iter()
        .zip(buses.iter().cycle())
        .map(|(s, b)| (s.id, b + 2))
        .collect();

    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| PlannerError::io(&p, e))
    };
    write("case30.m", case_text)?;
    write_nodes_csv(&dir.join("nodes.csv"), net.nodes())?;
    write_links_csv(&dir.join("links.csv"), net.links())?;
    write_stations_csv(&dir.join("stations.csv"), &stations)?;
    write_trips_csv(&dir.join("trips.csv"), &trips)?;
    write_station_bus_map(&dir.join("station_bus.csv"), &map)?;

    let cfg = PlannerConfig {
        case: Some("case30.m".into()),
        nodes: Some("nodes.csv".into()),
        links: Some("links.csv".into()),
        stations: Some("stations.csv".into()),
        trips: Some("trips.csv".into()),
        station_bus_map: Some("station_bus.csv".into()),
        profiles: Some("out/station_profiles.csv".into()),
        seed: fx.seed,
        profile_scale: fx.profile_scale,
        ga: fx.ga.clone(),
        output_dir: Some("out".into()),
        ..PlannerConfig::default()
    };
    let path = dir.join("planner.json");
    let mut text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| PlannerError::io(&path, e))?;
    Ok(path)
}
