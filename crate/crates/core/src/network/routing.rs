use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{NetworkError, RoadLink, RoadNetwork};

/// Edge weight used by the router.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Distance,
    TravelTime,
}

impl Metric {
    pub fn weight(self, link: &RoadLink) -> f64 {
        match self {
            Metric::Distance => link.length_m,
            Metric::TravelTime => link.travel_min(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub node_seq: Vec<usize>,
    pub total_length_m: f64,
    /// Battery energy per link, kWh; empty until filled by the caller.
    #[serde(default)]
    pub per_link_energy_kwh: Vec<f64>,
    #[serde(skip)]
    pub(crate) link_idx: Vec<usize>,
}

impl Route {
    /// Links traversed, in order.
    pub fn links<'a>(&'a self, net: &'a RoadNetwork) -> impl Iterator<Item = &'a RoadLink> + 'a {
        self.link_idx.iter().map(|&k| &net.links()[k])
    }

    pub fn travel_min(&self, net: &RoadNetwork) -> f64 {
        self.links(net).map(RoadLink::travel_min).sum()
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(net: &RoadNetwork, source: usize, metric: Metric, reverse: bool) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.nodes().len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        let adj = if reverse { net.in_links(v) } else { net.out_links(v) };
        for &k in adj {
            let l = &net.links()[k];
            let w = net.pos(if reverse { l.from } else { l.to }).expect("validated link");
            let nd = d + metric.weight(l);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist
}

/// Shortest distance from `source` to every node, indexed like `net.nodes()`.
pub fn distances_from(net: &RoadNetwork, source: usize, metric: Metric) -> Result<Vec<f64>, NetworkError> {
    Ok(dijkstra(net, net.pos(source)?, metric, false))
}

/// Shortest distance from every node to `target`, indexed like `net.nodes()`.
pub fn distances_to(net: &RoadNetwork, target: usize, metric: Metric) -> Result<Vec<f64>, NetworkError> {
    Ok(dijkstra(net, net.pos(target)?, metric, true))
}

fn tight(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0)
}

/// Minimum-length route; among equal-length routes the one with the
/// lexicographically smallest node-id sequence.
pub fn shortest_path(net: &RoadNetwork, o: usize, d: usize) -> Result<Route, NetworkError> {
    shortest_path_by(net, o, d, Metric::Distance)
}

pub fn shortest_path_by(net: &RoadNetwork, o: usize, d: usize, metric: Metric) -> Result<Route, NetworkError> {
    let (po, pd) = (net.pos(o)?, net.pos(d)?);
    let to_d = dijkstra(net, pd, metric, true);
    if !to_d[po].is_finite() {
        return Err(NetworkError::Unreachable { from: o, to: d });
    }
    let mut node_seq = vec![o];
    let mut link_idx = Vec::new();
    let mut v = po;
    while v != pd {
        // among links that stay on some shortest path, take the smallest
        // next node id, then the lightest parallel link
        let next = net
            .out_links(v)
            .iter()
            .filter_map(|&k| {
                let l = &net.links()[k];
                let w = net.pos(l.to).expect("validated link");
                let wt = metric.weight(l);
                tight(wt + to_d[w], to_d[v]).then_some((l.to, wt, k, w))
            })
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
            .expect("a node with finite distance has a tight out-link");
        node_seq.push(next.0);
        link_idx.push(next.2);
        v = next.3;
    }
    let total_length_m = link_idx.iter().map(|&k| net.links()[k].length_m).sum();
    Ok(Route {
        node_seq,
        total_length_m,
        per_link_energy_kwh: Vec::new(),
        link_idx,
    })
}
