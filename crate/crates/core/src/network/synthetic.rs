use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{haversine, RoadLink, RoadNetwork, RoadNode, StationSite};

/// Seeded rectangular street grid standing in for a real road network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Straight-line spacing between neighbouring nodes, m.
    pub spacing_m: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// Elevations are drawn uniformly from `[0, max_elev_m]`.
    pub max_elev_m: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 4,
            spacing_m: 70_000.0,
            origin_lat: 37.3,
            origin_lon: -122.2,
            max_elev_m: 150.0,
            seed: 7,
        }
    }
}

const SPEEDS_KMH: [f64; 3] = [80.0, 100.0, 110.0];

/// Nodes are numbered row-major from 1; every grid edge is a pair of
/// opposite links with the same length and speed.
pub fn synthetic_grid(spec: &GridSpec) -> RoadNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dlat = (spec.spacing_m / super::EARTH_RADIUS_M).to_degrees();
    let dlon = dlat / spec.origin_lat.to_radians().cos();
    let id = |r: usize, c: usize| r * spec.cols + c + 1;
    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            nodes.push(RoadNode {
                id: id(r, c),
                lat: spec.origin_lat + r as f64 * dlat,
                lon: spec.origin_lon + c as f64 * dlon,
                elev_m: rng.random_range(0.0..=spec.max_elev_m),
            });
        }
    }
    let mut links = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let mut nbrs = Vec::new();
            if c + 1 < spec.cols {
                nbrs.push(id(r, c + 1));
            }
            if r + 1 < spec.rows {
                nbrs.push(id(r + 1, c));
            }
            for b in nbrs {
                let (na, nb) = (&nodes[id(r, c) - 1], &nodes[b - 1]);
                let circuity: f64 = rng.random_range(1.0..1.3);
                let length_m = haversine(na.lat, na.lon, nb.lat, nb.lon) * circuity;
                let speed_kmh = SPEEDS_KMH[rng.random_range(0..SPEEDS_KMH.len())];
                for (from, to) in [(na.id, nb.id), (nb.id, na.id)] {
                    links.push(RoadLink {
                        from,
                        to,
                        length_m,
                        speed_kmh,
                    });
                }
            }
        }
    }
    RoadNetwork::new(nodes, links).expect("generated grid is valid")
}

/// `count` level-2 stations on distinct, randomly chosen nodes, ids from 1.
pub fn synthetic_stations(net: &RoadNetwork, count: usize, seed: u64) -> Vec<StationSite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = net.nodes().len();
    sample(&mut rng, n, count.min(n))
        .into_iter()
        .enumerate()
        .map(|(j, i)| StationSite::level2(j + 1, net.nodes()[i].id))
        .collect()
}
