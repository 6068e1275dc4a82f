//! Directed road network, geodesic helpers, routing and charger-site
//! filtering.

pub(crate) mod io;
mod routing;
mod stations;
mod synthetic;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    read_links_csv, read_nodes_csv, read_stations_csv, write_links_csv, write_nodes_csv,
    write_stations_csv,
};
pub use routing::{
    distances_from, distances_to, shortest_path, shortest_path_by, Metric, Route,
};
pub use stations::{
    distance_to_route, filter_nearest_stations, select_station, select_station_by, StationChoice,
    StationSite, LEVEL2_KW,
};
pub use synthetic::{synthetic_grid, synthetic_stations, GridSpec};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance in metres between two points given in degrees.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("duplicate node id {0}")]
    DuplicateNode(usize),
    #[error("invalid node {id}: {reason}")]
    InvalidNode { id: usize, reason: String },
    #[error("invalid link {from}->{to}: {reason}")]
    InvalidLink { from: usize, to: usize, reason: String },
    #[error("no path from node {from} to node {to}")]
    Unreachable { from: usize, to: usize },
    #[error("no candidate station is reachable on both legs of trip {from}->{to}")]
    NoReachableCandidate { from: usize, to: usize },
    #[error("invalid station {id}: {reason}")]
    InvalidStation { id: usize, reason: String },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: usize,
    pub lat: f64,
    pub lon: f64,
    pub elev_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadLink {
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    pub speed_kmh: f64,
}

impl RoadLink {
    pub fn travel_min(&self) -> f64 {
        self.length_m / (self.speed_kmh / 3.6) / 60.0
    }
}

/// Immutable road graph with adjacency in both directions.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    links: Vec<RoadLink>,
    index: HashMap<usize, usize>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<RoadNode>, links: Vec<RoadLink>) -> Result<Self, NetworkError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
                return Err(NetworkError::InvalidNode {
                    id: n.id,
                    reason: format!("coordinates ({}, {}) out of range", n.lat, n.lon),
                });
            }
            if !n.elev_m.is_finite() {
                return Err(NetworkError::InvalidNode {
                    id: n.id,
                    reason: "elevation is not finite".into(),
                });
            }
            if index.insert(n.id, i).is_some() {
                return Err(NetworkError::DuplicateNode(n.id));
            }
        }
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for (k, l) in links.iter().enumerate() {
            let bad = |reason: &str| NetworkError::InvalidLink {
                from: l.from,
                to: l.to,
                reason: reason.to_string(),
            };
            let from = *index.get(&l.from).ok_or_else(|| bad("unknown from-node"))?;
            let to = *index.get(&l.to).ok_or_else(|| bad("unknown to-node"))?;
            if !(l.length_m > 0.0 && l.length_m.is_finite()) {
                return Err(bad("length must be positive"));
            }
            if !(l.speed_kmh > 0.0 && l.speed_kmh.is_finite()) {
                return Err(bad("speed must be positive"));
            }
            out_links[from].push(k);
            in_links[to].push(k);
        }
        Ok(Self {
            nodes,
            links,
            index,
            out_links,
            in_links,
        })
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[RoadLink] {
        &self.links
    }

    pub fn node(&self, id: usize) -> Result<&RoadNode, NetworkError> {
        self.pos(id).map(|i| &self.nodes[i])
    }

    pub fn contains(&self, id: usize) -> bool {
        self.index.contains_key(&id)
    }

    pub(crate) fn pos(&self, id: usize) -> Result<usize, NetworkError> {
        self.index.get(&id).copied().ok_or(NetworkError::UnknownNode(id))
    }

    pub(crate) fn out_links(&self, pos: usize) -> &[usize] {
        &self.out_links[pos]
    }

    pub(crate) fn in_links(&self, pos: usize) -> &[usize] {
        &self.in_links[pos]
    }

    /// Road slope of a link in radians, from the end-node elevations.
    pub fn grade(&self, link: &RoadLink) -> f64 {
        let rise = self.nodes[self.index[&link.to]].elev_m - self.nodes[self.index[&link.from]].elev_m;
        (rise / link.length_m).atan()
    }

    /// The same network with every link reversed.
    pub fn reversed(&self) -> Self {
        let links = self
            .links
            .iter()
            .map(|l| RoadLink {
                from: l.to,
                to: l.from,
                ..*l
            })
            .collect();
        Self::new(self.nodes.clone(), links).expect("reversal keeps a valid network")
    }
}
