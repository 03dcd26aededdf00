//! Direct optimization of the raw `alpha` schedule with perfect foresight:
//! a GA narrows the search, then coordinate-wise golden-section descent
//! refines the incumbent. The result is the reference that policy-based
//! controllers are measured against.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{simulate, CommunityData, ForecastSource, Policy, SimulationRun};
use crate::domain::RecConfig;
use crate::error::{Error, Result};
use crate::ga::{evolve_seeded, GaConfig};
use crate::refine::{coordinate_descent, RefineOptions};

/// Constant schedules always injected into the first GA population.
pub const FIXED_ALPHA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    /// Slot-major schedule, `alphas[t * n + i]`.
    pub alphas: Vec<f64>,
    pub objective: f64,
    /// Incumbent objective after the GA stage.
    pub stage1_objective: f64,
    pub sweeps: usize,
    pub evaluations: usize,
}

impl SimulationRun {
    /// The `alpha` actually applied per node and slot, slot-major.
    pub fn alpha_schedule(&self) -> Vec<f64> {
        self.results
            .iter()
            .flat_map(|r| r.nodes.iter().map(|n| n.alpha))
            .collect()
    }
}

fn schedule_objective(
    data: &CommunityData,
    cfg: &RecConfig,
    window: &Range<usize>,
    alphas: &[f64],
) -> Result<f64> {
    Ok(simulate(
        data,
        cfg,
        window.clone(),
        Policy::Schedule(alphas),
        ForecastSource::Actual,
        None,
    )?
    .objective)
}

/// Optimizes the `n x window` schedule. `warm_starts` (for example the
/// schedule a trained model applied) join the constant schedules of
/// [`FIXED_ALPHA_GRID`] in the first population; since the GA keeps its
/// elite and the refinement only accepts improvements, the result is never
/// worse than any of them.
pub fn benchmark_optimize(
    data: &CommunityData,
    cfg: &RecConfig,
    window: Range<usize>,
    ga: &GaConfig,
    warm_starts: &[Vec<f64>],
    refine: &RefineOptions,
) -> Result<BenchmarkResult> {
    let dim = data.n() * window.len();
    if dim == 0 {
        return Err(Error::invalid("benchmark needs a non-empty window"));
    }
    let mut seeds: Vec<Vec<f64>> = FIXED_ALPHA_GRID.iter().map(|&a| vec![a; dim]).collect();
    seeds.extend(warm_starts.iter().cloned());
    if seeds.len() > ga.population {
        return Err(Error::invalid(format!(
            "{} warm starts do not fit a population of {}",
            seeds.len(),
            ga.population
        )));
    }
    let bounds = vec![(0.0, 1.0); dim];
    let fitness = |a: &[f64]| schedule_objective(data, cfg, &window, a);
    let stage1 = evolve_seeded(fitness, &bounds, ga, &seeds)?;
    log::info!("benchmark stage 1: {:.6}", stage1.best.fitness);

    let refined = coordinate_descent(fitness, &stage1.best.genes, &bounds, refine)?;
    log::info!(
        "benchmark stage 2: {:.6} after {} sweeps",
        refined.value,
        refined.sweeps
    );
    Ok(BenchmarkResult {
        alphas: refined.x,
        objective: refined.value,
        stage1_objective: stage1.best.fitness,
        sweeps: refined.sweeps,
        evaluations: stage1.evaluations + refined.evaluations,
    })
}
