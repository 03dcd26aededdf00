//! Real-coded genetic algorithm (minimization).
//!
//! Each generation keeps the elite unchanged and selects one parent per
//! remaining slot. The crossover share of those parents is paired into
//! convex-crossover children; the rest are copied and uniformly mutated.

pub mod benchmarks;
mod operators;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use operators::{
    convex_crossover, mix, rank_uniform, tournament, uniform_mutation, CrossoverMode, Selection,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub crossover_fraction: f64,
    /// Per-gene probability of a uniform redraw.
    pub mutation_probability: f64,
    pub max_generations: usize,
    pub elite_count: usize,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub crossover_mode: CrossoverMode,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            crossover_fraction: 0.7,
            mutation_probability: 0.5,
            max_generations: 50,
            elite_count: 2,
            selection: Selection::default(),
            crossover_mode: CrossoverMode::Scalar,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("ga.population", "need at least 2 individuals"));
        }
        if self.elite_count < 1 || self.elite_count >= self.population {
            return Err(Error::config(
                "ga.elite_count",
                "must be at least 1 and below the population size",
            ));
        }
        if let Selection::Tournament { size: 0 } = self.selection {
            return Err(Error::config("ga.selection.size", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return Err(Error::config("ga.crossover_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::config("ga.mutation_probability", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub best: Individual,
    /// Generation 0 is the initial population.
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("GA needs at least one gene"));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("gene {i} has invalid bounds [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn evaluate<F>(fitness: &F, genomes: Vec<Vec<f64>>) -> Result<Vec<Individual>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    genomes
        .into_par_iter()
        .map(|genes| {
            let f = fitness(&genes)?;
            if f.is_nan() {
                return Err(Error::invalid("fitness evaluated to NaN"));
            }
            Ok(Individual { genes, fitness: f })
        })
        .collect()
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    GenerationStats {
        generation,
        best: pop[0].fitness,
        mean: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
    }
}

fn sort_population(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
}

pub fn evolve<F>(fitness: F, bounds: &[(f64, f64)], cfg: &GaConfig) -> Result<Evolution>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    evolve_seeded(fitness, bounds, cfg, &[])
}

/// Like [`evolve`], with `initial` genomes injected into the first
/// population (clamped to bounds; the rest is drawn uniformly).
pub fn evolve_seeded<F>(
    fitness: F,
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    initial: &[Vec<f64>],
) -> Result<Evolution>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    use rand::Rng;

    cfg.validate()?;
    check_bounds(bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut genomes: Vec<Vec<f64>> = initial
        .iter()
        .take(cfg.population)
        .map(|g| {
            if g.len() != bounds.len() {
                return Err(Error::invalid(format!(
                    "seed genome has {} genes, expected {}",
                    g.len(),
                    bounds.len()
                )));
            }
            Ok(g.iter()
                .zip(bounds)
                .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
                .collect())
        })
        .collect::<Result<_>>()?;
    while genomes.len() < cfg.population {
        genomes.push(
            bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                .collect(),
        );
    }

    let mut pop = evaluate(&fitness, genomes)?;
    let mut evaluations = pop.len();
    sort_population(&mut pop);
    let mut history = vec![stats(0, &pop)];

    let n_offspring = cfg.population - cfg.elite_count;
    let n_cross = ((cfg.crossover_fraction * n_offspring as f64).round() as usize) & !1;

    for generation in 1..=cfg.max_generations {
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let parents = cfg.selection.select(&fit, n_offspring, &mut rng);
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(n_offspring);
        for pair in parents[..n_cross].chunks_exact(2) {
            let (ca, cb) = convex_crossover(
                &pop[pair[0]].genes,
                &pop[pair[1]].genes,
                cfg.crossover_mode,
                &mut rng,
            );
            offspring.push(ca);
            offspring.push(cb);
        }
        for &p in &parents[n_cross..] {
            let mut child = pop[p].genes.clone();
            uniform_mutation(&mut child, bounds, cfg.mutation_probability, &mut rng);
            offspring.push(child);
        }

        let children = evaluate(&fitness, offspring)?;
        evaluations += children.len();
        pop.truncate(cfg.elite_count);
        pop.extend(children);
        sort_population(&mut pop);
        history.push(stats(generation, &pop));
    }

    Ok(Evolution {
        best: pop.swap_remove(0),
        history,
        evaluations,
    })
}
