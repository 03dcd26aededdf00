use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{simulate, CommunityData, ForecastSource, Policy};
use crate::domain::{RecConfig, POWER_EPS, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::fuzzy::{decode, gene_bounds, EncodingParams, FisFile};
use crate::ga::{evolve, GaConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub window_start: usize,
    pub window_end: usize,
    /// Whether the window holds both a slot without PV and the day's PV peak.
    pub covers_extremes: bool,
    pub repeats: usize,
    /// Seed of each repeat's GA run.
    pub seeds: Vec<u64>,
    /// Final best fitness of each repeat, EUR.
    pub finals: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of `finals` (0 for a single repeat).
    pub std_dev: f64,
    pub best_fitness: f64,
    pub best: FisFile,
    pub evaluations: usize,
}

/// True when `window` contains a slot where the community produces nothing
/// and the slot of peak community generation of the day(s) it spans.
pub fn window_covers_extremes(data: &CommunityData, window: &Range<usize>) -> bool {
    if window.is_empty() || window.end > data.slots() {
        return false;
    }
    let has_dark = window.clone().any(|k| data.total_generation(k) <= POWER_EPS);
    let first_day = window.start / SLOTS_PER_DAY * SLOTS_PER_DAY;
    let last_day_end = ((window.end - 1) / SLOTS_PER_DAY + 1) * SLOTS_PER_DAY;
    let span = first_day..last_day_end.min(data.slots());
    let peak = span
        .map(|k| (k, data.total_generation(k)))
        .fold((0, f64::NEG_INFINITY), |best, (k, g)| if g > best.1 { (k, g) } else { best });
    has_dark && peak.1 > POWER_EPS && window.contains(&peak.0)
}

/// Training window on `day`: 48 slots starting at the last slot without
/// community generation before sunrise, so that it spans darkness and the
/// midday peak. Falls back to 06:00-18:00 on a day without generation.
pub fn default_training_window(data: &CommunityData, day: usize) -> Result<Range<usize>> {
    const LEN: usize = SLOTS_PER_DAY / 2;
    let start = day * SLOTS_PER_DAY;
    let end = start + SLOTS_PER_DAY;
    if end > data.slots() {
        return Err(Error::invalid(format!(
            "training day {day} is not in the data ({} slots)",
            data.slots()
        )));
    }
    let first_light = (start..end).find(|&k| data.total_generation(k) > POWER_EPS);
    let from = match first_light {
        Some(k) => k.saturating_sub(1).max(start).min(end - LEN),
        None => start + SLOTS_PER_DAY / 4,
    };
    Ok(from..from + LEN)
}

/// GA fitness: community objective over `window` with the decoded genome
/// deciding on perfect foresight.
pub fn fitness_window<'a>(
    data: &'a CommunityData,
    cfg: &'a RecConfig,
    window: Range<usize>,
    encoding: &'a EncodingParams,
) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |genes: &[f64]| {
        let model = decode(genes, encoding)?;
        let run = simulate(
            data,
            cfg,
            window.clone(),
            Policy::Fis(&model),
            ForecastSource::Actual,
            None,
        )?;
        Ok(run.objective)
    }
}

/// Trains the shared fuzzy model `repeats` times (seeds `ga.seed + r`) on
/// `window` and keeps the best result.
pub fn train_fis(
    data: &CommunityData,
    cfg: &RecConfig,
    window: Range<usize>,
    ga: &GaConfig,
    repeats: usize,
    encoding: &EncodingParams,
) -> Result<TrainingReport> {
    if repeats == 0 {
        return Err(Error::invalid("training needs at least one repeat"));
    }
    encoding.validate()?;
    let covers_extremes = window_covers_extremes(data, &window);
    if !covers_extremes {
        log::warn!(
            "training window {}..{} does not span both a no-PV slot and the PV peak",
            window.start,
            window.end
        );
    }
    let bounds = gene_bounds(encoding);
    let fitness = fitness_window(data, cfg, window.clone(), encoding);

    let mut seeds = Vec::with_capacity(repeats);
    let mut finals = Vec::with_capacity(repeats);
    let mut evaluations = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..repeats {
        let seed = ga.seed.wrapping_add(r as u64);
        let evo = evolve(&fitness, &bounds, &ga.with_seed(seed))?;
        log::info!("training repeat {r} (seed {seed}): best {:.6}", evo.best.fitness);
        seeds.push(seed);
        finals.push(evo.best.fitness);
        evaluations += evo.evaluations;
        if best.as_ref().map_or(true, |(f, _)| evo.best.fitness < *f) {
            best = Some((evo.best.fitness, evo.best.genes));
        }
    }
    let (best_fitness, genome) = best.expect("at least one repeat");
    let mean = finals.iter().sum::<f64>() / repeats as f64;
    let std_dev = if repeats > 1 {
        (finals.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(TrainingReport {
        window_start: window.start,
        window_end: window.end,
        covers_extremes,
        repeats,
        seeds,
        finals,
        mean,
        std_dev,
        best_fitness,
        best: FisFile::new(genome, *encoding)?,
        evaluations,
    })
}
