use rand::Rng;

use super::{Chromosome, GaConfig, GaError, GeneLayout};

/// Linear ranking pressure applied before universal sampling.
pub const SELECTION_PRESSURE: f64 = 1.5;

/// Linear rank weights for minimization. The worst individual gets
/// `2 − pressure`, the best `pressure`; tied fitness values share the
/// average of their ranks, so equal fitness means equal weight.
pub fn rank_weights(fitness: &[f64], pressure: f64) -> Vec<f64> {
    let n = fitness.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut order: Vec<usize> = (0..n).collect();
    // worst (largest cost) first
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    let mut rank = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && fitness[order[end]] == fitness[order[start]] {
            end += 1;
        }
        // ranks are 1-based; a tie group [start, end) shares the mean rank
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            rank[i] = shared;
        }
        start = end;
    }
    let span = (n - 1) as f64;
    rank.iter()
        .map(|r| 2.0 - pressure + 2.0 * (pressure - 1.0) * (r - 1.0) / span)
        .collect()
}

/// Stochastic universal sampling: `k` equally spaced pointers over the
/// cumulative weight wheel, the first at `offset · W/k` with `offset ∈ [0, 1)`.
pub fn sus_from_weights(weights: &[f64], k: usize, offset: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let spacing = total / k as f64;
    let mut picks = Vec::with_capacity(k);
    let mut idx = 0;
    let mut cum = weights[0];
    for i in 0..k {
        let pointer = (offset + i as f64) * spacing;
        while pointer >= cum && idx + 1 < weights.len() {
            idx += 1;
            cum += weights[idx];
        }
        picks.push(idx);
    }
    picks
}

/// Selects `k` parent indices from a minimization population.
pub fn sus_select<R: Rng + ?Sized>(
    fitness: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, GaError> {
    if fitness.is_empty() {
        return Err(GaError::EmptyPopulation);
    }
    if fitness.iter().any(|f| !f.is_finite()) {
        return Err(GaError::NonFiniteFitness);
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let weights = rank_weights(fitness, SELECTION_PRESSURE);
    let offset: f64 = rng.random();
    Ok(sus_from_weights(&weights, k, offset))
}

/// Laplace-distributed spread factor from uniforms `u ∈ (0, 1]`, `r ∈ [0, 1)`.
pub fn laplace_beta(a: f64, b: f64, u: f64, r: f64) -> f64 {
    if r <= 0.5 {
        a - b * u.ln()
    } else {
        a + b * u.ln()
    }
}

/// Offspring gene pair `x_i + β|x₁ − x₂|`, clamped to `[lo, hi]`.
pub fn laplace_gene(x1: f64, x2: f64, beta: f64, lo: f64, hi: f64) -> (f64, f64) {
    let spread = beta * (x1 - x2).abs();
    ((x1 + spread).clamp(lo, hi), (x2 + spread).clamp(lo, hi))
}

fn draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let r = rng.random::<f64>();
    laplace_beta(a, b, u, r)
}

pub fn laplace_crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    layout: &GeneLayout,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome), GaError> {
    if !p1.same_layout(p2) || p1.real.len() != layout.real.len() || p1.int.len() != layout.int.len()
    {
        return Err(GaError::LayoutMismatch);
    }
    let mut c1 = Chromosome::new(Vec::with_capacity(p1.real.len()), Vec::with_capacity(p1.int.len()));
    let mut c2 = c1.clone();
    for ((&x1, &x2), &(lo, hi)) in p1.real.iter().zip(&p2.real).zip(&layout.real) {
        let beta = draw_beta(cfg.laplace_a, cfg.laplace_b_real, rng);
        let (y1, y2) = laplace_gene(x1, x2, beta, lo, hi);
        c1.real.push(y1);
        c2.real.push(y2);
    }
    for ((&x1, &x2), &(lo, hi)) in p1.int.iter().zip(&p2.int).zip(&layout.int) {
        let beta = draw_beta(cfg.laplace_a, cfg.laplace_b_int, rng);
        let (y1, y2) = laplace_gene(x1 as f64, x2 as f64, beta, lo as f64, hi as f64);
        c1.int.push(truncate(y1, rng).clamp(lo, hi));
        c2.int.push(truncate(y2, rng).clamp(lo, hi));
    }
    Ok((c1, c2))
}

/// Power mutation with explicit uniforms `u1` (step) and `u2` (direction).
pub fn power_mutation_with(x: f64, lo: f64, hi: f64, index: f64, u1: f64, u2: f64) -> f64 {
    if lo == hi {
        return x;
    }
    let s = u1.powf(index);
    let t = (x - lo) / (hi - lo);
    let y = if u2 < t {
        x - s * (x - lo)
    } else {
        x + s * (hi - x)
    };
    y.clamp(lo, hi)
}

pub fn power_mutation<R: Rng + ?Sized>(x: f64, lo: f64, hi: f64, index: f64, rng: &mut R) -> f64 {
    let u1 = rng.random::<f64>();
    let u2 = rng.random::<f64>();
    power_mutation_with(x, lo, hi, index, u1, u2)
}

/// Randomized rounding: floor when `r ≤ 0.5`, ceiling otherwise.
pub fn truncate_with(x: f64, r: f64) -> i64 {
    if r <= 0.5 {
        x.floor() as i64
    } else {
        x.ceil() as i64
    }
}

pub fn truncate<R: Rng + ?Sized>(x: f64, rng: &mut R) -> i64 {
    truncate_with(x, rng.random::<f64>())
}
