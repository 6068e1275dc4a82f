use serde::{Deserialize, Serialize};

use super::routing::{distances_from, distances_to, Metric, Route};
use super::{haversine, NetworkError, RoadNetwork};

pub const LEVEL2_KW: f64 = 7.2;

fn default_power() -> f64 {
    LEVEL2_KW
}

fn default_plugs() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSite {
    pub id: usize,
    pub node: usize,
    /// Per-plug charging power, kW.
    #[serde(default = "default_power")]
    pub power_kw: f64,
    #[serde(default = "default_plugs")]
    pub plugs: u32,
}

impl StationSite {
    pub fn level2(id: usize, node: usize) -> Self {
        Self {
            id,
            node,
            power_kw: LEVEL2_KW,
            plugs: 1,
        }
    }

    pub fn validate(&self, net: &RoadNetwork) -> Result<(), NetworkError> {
        let bad = |reason: String| NetworkError::InvalidStation { id: self.id, reason };
        if !(self.power_kw > 0.0 && self.power_kw.is_finite()) {
            return Err(bad(format!("power {} kW must be positive", self.power_kw)));
        }
        if self.plugs < 1 {
            return Err(bad("needs at least one plug".into()));
        }
        if !net.contains(self.node) {
            return Err(bad(format!("sits on unknown node {}", self.node)));
        }
        Ok(())
    }
}

/// Great-circle distance from a station to the closest node of a route, m.
pub fn distance_to_route(net: &RoadNetwork, route: &Route, station: &StationSite) -> Result<f64, NetworkError> {
    let s = net.node(station.node)?;
    route.node_seq.iter().try_fold(f64::INFINITY, |best, &id| {
        let n = net.node(id)?;
        Ok(best.min(haversine(s.lat, s.lon, n.lat, n.lon)))
    })
}

/// The `n` stations closest to the route, nearest first, ties by id.
pub fn filter_nearest_stations(
    net: &RoadNetwork,
    route: &Route,
    stations: &[StationSite],
    n: usize,
) -> Result<Vec<StationSite>, NetworkError> {
    let mut ranked = stations
        .iter()
        .map(|s| Ok((distance_to_route(net, route, s)?, s)))
        .collect::<Result<Vec<_>, NetworkError>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    Ok(ranked.into_iter().take(n).map(|(_, s)| s.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationChoice {
    pub station: StationSite,
    /// Extra routed distance of going through the station, m.
    pub detour_m: f64,
    pub dist_to_station_m: f64,
    pub dist_from_station_m: f64,
}

/// Candidate with the smallest routed detour `o→M→d` versus `o→d`, ties by id.
pub fn select_station(
    net: &RoadNetwork,
    o: usize,
    d: usize,
    candidates: &[StationSite],
) -> Result<StationChoice, NetworkError> {
    select_station_by(net, o, d, candidates, Metric::Distance)
}

pub fn select_station_by(
    net: &RoadNetwork,
    o: usize,
    d: usize,
    candidates: &[StationSite],
    metric: Metric,
) -> Result<StationChoice, NetworkError> {
    let from_o = distances_from(net, o, metric)?;
    let to_d = distances_to(net, d, metric)?;
    let direct = from_o[net.pos(d)?];
    let mut best: Option<StationChoice> = None;
    for s in candidates {
        let m = net.pos(s.node)?;
        let (a, b) = (from_o[m], to_d[m]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        let mut detour = a + b - direct;
        // summation order differs between the three distances
        if detour < 1e-9 * direct.max(1.0) {
            detour = 0.0;
        }
        let better = match &best {
            None => true,
            Some(cur) => detour < cur.detour_m || (detour == cur.detour_m && s.id < cur.station.id),
        };
        if better {
            best = Some(StationChoice {
                station: s.clone(),
                detour_m: detour,
                dist_to_station_m: a,
                dist_from_station_m: b,
            });
        }
    }
    best.ok_or(NetworkError::NoReachableCandidate { from: o, to: d })
}
