//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use chargeplan::grid::AdmittanceMatrix;
use chargeplan::network::{RoadLink, RoadNetwork, RoadNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bus power injections by the textbook double sum
/// `P_i = V_i Σ_k V_k (G_ik cos θ_ik + B_ik sin θ_ik)` and its `Q` twin.
pub fn injections_trig(vm: &[f64], va: &[f64], y: &AdmittanceMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = vm.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let (g, b) = (y.g(i, k), y.b(i, k));
            let t = va[i] - va[k];
            p[i] += vm[i] * vm[k] * (g * t.cos() + b * t.sin());
            q[i] += vm[i] * vm[k] * (g * t.sin() - b * t.cos());
        }
    }
    (p, q)
}

/// Every simple path from `o` to `d` with its length.
pub fn all_simple_paths(net: &RoadNetwork, o: usize, d: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(net: &RoadNetwork, v: usize, d: usize, len: f64, path: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
        if v == d {
            out.push((len, path.clone()));
            return;
        }
        for l in net.links().iter().filter(|l| l.from == v) {
            if path.contains(&l.to) {
                continue;
            }
            path.push(l.to);
            walk(net, l.to, d, len + l.length_m, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(net, o, d, 0.0, &mut vec![o], &mut out);
    out
}

/// Shortest `o→d` length and the lexicographically first node sequence
/// among the shortest, by brute force.
pub fn brute_shortest(net: &RoadNetwork, o: usize, d: usize) -> Option<(f64, Vec<usize>)> {
    let mut paths = all_simple_paths(net, o, d);
    let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    paths.retain(|p| p.0 <= best + 1e-9);
    paths.sort_by(|a, b| a.1.cmp(&b.1));
    paths.into_iter().next()
}

/// Random directed graph on nodes `1..=n` with small integer link lengths.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> RoadNetwork {
    let nodes = (1..=n)
        .map(|id| RoadNode {
            id,
            lat: rng.random_range(-1.0..1.0),
            lon: rng.random_range(-1.0..1.0),
            elev_m: 0.0,
        })
        .collect();
    let mut links = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            if a != b && rng.random_bool(density) {
                links.push(RoadLink {
                    from: a,
                    to: b,
                    length_m: rng.random_range(1..=5) as f64,
                    speed_kmh: 50.0,
                });
            }
        }
    }
    RoadNetwork::new(nodes, links).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse CDF of Laplace(a, b).
pub fn laplace_quantile(a: f64, b: f64, p: f64) -> f64 {
    if p < 0.5 {
        a + b * (2.0 * p).ln()
    } else {
        a - b * (2.0 * (1.0 - p)).ln()
    }
}

/// Random connected case on buses `1..=n` (bus 1 slack) with light loads so
/// the flow converges. `extras` adds taps, phase shifts, shunts and line
/// charging.
pub fn random_case(seed: u64, n: usize, extras: bool) -> chargeplan::grid::GridCase {
    use chargeplan::grid::{BranchRecord, BusKind, BusRecord, GenRecord, GridCase, QuadraticCost};
    let mut r = rng(seed);
    let buses = (1..=n)
        .map(|id| BusRecord {
            id,
            kind: if id == 1 { BusKind::Slack } else { BusKind::Load },
            pd: if id == 1 { 0.0 } else { r.random_range(0.0..30.0) },
            qd: if id == 1 { 0.0 } else { r.random_range(-5.0..10.0) },
            gs: if extras { r.random_range(0.0..2.0) } else { 0.0 },
            bs: if extras { r.random_range(-5.0..5.0) } else { 0.0 },
            vmin: 0.9,
            vmax: 1.1,
            base_kv: 135.0,
        })
        .collect();
    let mut branches = Vec::new();
    let branch = |r: &mut ChaCha8Rng, from: usize, to: usize| BranchRecord {
        from,
        to,
        r: r.random_range(0.005..0.05),
        x: r.random_range(0.02..0.2),
        b_total: if extras { r.random_range(0.0..0.05) } else { 0.0 },
        tap: if extras && r.random_bool(0.3) { r.random_range(0.95..1.05) } else { 0.0 },
        shift_deg: if extras && r.random_bool(0.2) { r.random_range(-5.0..5.0) } else { 0.0 },
        in_service: true,
    };
    for k in 2..=n {
        let from = r.random_range(1..k);
        branches.push(branch(&mut r, from, k));
    }
    for _ in 0..n / 2 {
        let (a, b) = (r.random_range(1..=n), r.random_range(1..=n));
        if a != b {
            branches.push(branch(&mut r, a, b));
        }
    }
    let gens = vec![GenRecord {
        bus: 1,
        pg: 0.0,
        qg: 0.0,
        pmin: 0.0,
        pmax: 500.0,
        qmin: -300.0,
        qmax: 300.0,
        vg: 1.0,
        in_service: true,
        cost: QuadraticCost { a: 0.01, b: 10.0, c: 5.0 },
    }];
    GridCase {
        base_mva: 100.0,
        buses,
        gens,
        branches,
    }
}
