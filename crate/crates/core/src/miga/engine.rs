use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{laplace_crossover, power_mutation, sus_select, truncate};
use super::{Chromosome, GaConfig, GaError, GeneLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best: Chromosome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaHistory {
    pub generations: Vec<GenerationRecord>,
}

impl GaHistory {
    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn best_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_fitness).collect()
    }

    /// `generation,best,mean` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best,mean\n");
        for g in &self.generations {
            out.push_str(&format!("{},{},{}\n", g.generation, g.best_fitness, g.mean_fitness));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub best: Chromosome,
    pub history: GaHistory,
    pub evaluations: usize,
}

fn random_chromosome<R: Rng + ?Sized>(layout: &GeneLayout, rng: &mut R) -> Chromosome {
    let real = layout
        .real
        .iter()
        .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect();
    let int = layout
        .int
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..=hi))
        .collect();
    Chromosome::new(real, int)
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn evaluate<F>(pop: &mut [Chromosome], fitness: &F) -> usize
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    let pending: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].fitness.is_none()).collect();
    let values: Vec<f64> = pending.par_iter().map(|&i| sanitize(fitness(&pop[i]))).collect();
    for (&i, v) in pending.iter().zip(values) {
        pop[i].fitness = Some(v);
    }
    pending.len()
}

fn fit(c: &Chromosome) -> f64 {
    c.fitness.expect("population is evaluated")
}

fn argmin(pop: &[Chromosome]) -> usize {
    (0..pop.len())
        .min_by(|&a, &b| fit(&pop[a]).total_cmp(&fit(&pop[b])).then(a.cmp(&b)))
        .expect("non-empty population")
}

fn mutate<R: Rng + ?Sized>(
    c: &mut Chromosome,
    layout: &GeneLayout,
    cfg: &GaConfig,
    rng: &mut R,
) -> bool {
    let mut changed = false;
    for (x, &(lo, hi)) in c.real.iter_mut().zip(&layout.real) {
        if rng.random::<f64>() < cfg.pm {
            *x = power_mutation(*x, lo, hi, cfg.pm_index_real, rng);
            changed = true;
        }
    }
    for (x, &(lo, hi)) in c.int.iter_mut().zip(&layout.int) {
        if rng.random::<f64>() < cfg.pm {
            let y = power_mutation(*x as f64, lo as f64, hi as f64, cfg.pm_index_int, rng);
            *x = truncate(y, rng).clamp(lo, hi);
            changed = true;
        }
    }
    changed
}

/// Runs the generational loop and returns the lowest-fitness chromosome ever
/// evaluated. Fitness is minimized; NaN is treated as +∞.
///
/// Fitness calls run on the rayon pool and never touch the evolution RNG, so
/// a fixed seed reproduces the run exactly regardless of thread count.
pub fn run_ga<F>(cfg: &GaConfig, layout: &GeneLayout, fitness: F) -> Result<GaOutcome, GaError>
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    cfg.validate()?;
    layout.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pop: Vec<Chromosome> = (0..cfg.pop_size)
        .map(|_| random_chromosome(layout, &mut rng))
        .collect();
    let mut evaluations = evaluate(&mut pop, &fitness);
    let mut best = pop[argmin(&pop)].clone();
    let mut history = GaHistory::default();

    for generation in 1..=cfg.max_gen {
        let costs: Vec<f64> = pop.iter().map(|c| fit(c).min(f64::MAX)).collect();

        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let mut elites = ranked[..cfg.elite_count].to_vec();
        elites.sort_unstable();

        let n_offspring = cfg.pop_size - cfg.elite_count;
        let mut parents = sus_select(&costs, n_offspring, &mut rng)?;
        parents.shuffle(&mut rng);

        let mut next: Vec<Chromosome> = elites.iter().map(|&i| pop[i].clone()).collect();
        for pair in parents.chunks(2) {
            let mut children = if pair.len() == 2 && rng.random::<f64>() < cfg.pc {
                let (a, b) = laplace_crossover(&pop[pair[0]], &pop[pair[1]], layout, cfg, &mut rng)?;
                vec![a, b]
            } else {
                pair.iter().map(|&i| pop[i].clone()).collect()
            };
            for child in &mut children {
                if mutate(child, layout, cfg, &mut rng) {
                    child.fitness = None;
                }
            }
            next.extend(children);
        }
        pop = next;
        evaluations += evaluate(&mut pop, &fitness);

        let i = argmin(&pop);
        if fit(&pop[i]) < fit(&best) {
            best = pop[i].clone();
        }
        let mean = pop.iter().map(fit).sum::<f64>() / pop.len() as f64;
        history.generations.push(GenerationRecord {
            generation,
            best_fitness: fit(&pop[i]),
            mean_fitness: mean,
            best: pop[i].clone(),
        });
    }

    Ok(GaOutcome {
        best,
        history,
        evaluations,
    })
}
