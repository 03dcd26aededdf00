use rand::Rng;
use serde::{Deserialize, Serialize};

/// How the convex crossover draws its mixing coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossoverMode {
    /// Independent coefficient per gene.
    PerGene,
    /// One coefficient for the whole pair (child lies on the parents' segment).
    #[default]
    Scalar,
}

/// Children `r a + (1 - r) b` and `(1 - r) a + r b`, `r ~ U[0, 1]`.
pub fn convex_crossover<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    mode: CrossoverMode,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), b.len());
    let scalar = rng.gen::<f64>();
    let mut ca = Vec::with_capacity(a.len());
    let mut cb = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        let r = match mode {
            CrossoverMode::PerGene => rng.gen::<f64>(),
            CrossoverMode::Scalar => scalar,
        };
        ca.push(mix(x, y, r));
        cb.push(mix(y, x, r));
    }
    (ca, cb)
}

/// `r x + (1 - r) y`, kept inside `[min(x, y), max(x, y)]` despite rounding.
pub fn mix(x: f64, y: f64, r: f64) -> f64 {
    let v = r * x + (1.0 - r) * y;
    v.clamp(x.min(y), x.max(y))
}

/// Redraws each gene uniformly within its bounds with probability `p`.
/// Returns how many genes were redrawn.
pub fn uniform_mutation<R: Rng + ?Sized>(
    genes: &mut [f64],
    bounds: &[(f64, f64)],
    p: f64,
    rng: &mut R,
) -> usize {
    let mut changed = 0;
    for (g, &(lo, hi)) in genes.iter_mut().zip(bounds) {
        if rng.gen::<f64>() < p {
            *g = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            changed += 1;
        }
    }
    changed
}

/// Parent selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Selection {
    /// `size` uniform draws with replacement; the fittest wins.
    Tournament { size: usize },
    /// Rank scaling (expectation proportional to `1/sqrt(rank)`) sampled by
    /// stochastic universal sampling, then shuffled.
    RankUniform,
}

impl Default for Selection {
    fn default() -> Self {
        Selection::RankUniform
    }
}

impl Selection {
    /// Draws `count` parent indices from a population sorted best-first.
    pub fn select<R: Rng + ?Sized>(self, fitness: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
        match self {
            Selection::Tournament { size } => {
                (0..count).map(|_| tournament(fitness, size, rng)).collect()
            }
            Selection::RankUniform => rank_uniform(fitness.len(), count, rng),
        }
    }
}

/// Stochastic universal sampling over rank-scaled expectations; assumes the
/// population is sorted best-first.
pub fn rank_uniform<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;

    if count == 0 {
        return Vec::new();
    }
    let weights: Vec<f64> = (1..=n).map(|r| 1.0 / (r as f64).sqrt()).collect();
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let mut pointer = rng.gen::<f64>() * step;
    let mut out = Vec::with_capacity(count);
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        while out.len() < count && pointer < cum {
            out.push(i);
            pointer += step;
        }
    }
    // rounding can leave the last pointer just past the end
    while out.len() < count {
        out.push(n - 1);
    }
    out.shuffle(rng);
    out
}

/// Tournament of `size` uniform draws (with replacement) on fitness, lower
/// wins; returns the winner's index.
pub fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let j = rng.gen_range(0..fitness.len());
        if fitness[j] < fitness[best] {
            best = j;
        }
    }
    best
}
