//! Standard test objectives used to validate the GA on its own.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{evolve, Evolution, GaConfig};
use crate::error::{Error, Result};

/// Schwefel offset per dimension that moves the optimum value to zero.
const SCHWEFEL_OFFSET: f64 = 418.982_887_272_433_9;
const SCHWEFEL_ARGMIN: f64 = 420.968_746_359_982;

/// Dimension the suite is run at.
pub const SUITE_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Rosenbrock,
    Schwefel,
    Griewank,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Sphere,
        Benchmark::Rastrigin,
        Benchmark::Rosenbrock,
        Benchmark::Schwefel,
        Benchmark::Griewank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Schwefel => "schwefel",
            Benchmark::Griewank => "griewank",
        }
    }

    /// Canonical search box per coordinate.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Benchmark::Sphere | Benchmark::Rastrigin => (-5.12, 5.12),
            Benchmark::Rosenbrock => (-2.048, 2.048),
            Benchmark::Schwefel => (-500.0, 500.0),
            Benchmark::Griewank => (-600.0, 600.0),
        }
    }

    pub fn bounds(self, dim: usize) -> Vec<(f64, f64)> {
        vec![self.domain(); dim]
    }

    pub fn argmin(self, dim: usize) -> Vec<f64> {
        let v = match self {
            Benchmark::Rosenbrock => 1.0,
            Benchmark::Schwefel => SCHWEFEL_ARGMIN,
            _ => 0.0,
        };
        vec![v; dim]
    }

    /// Known minimum value (zero for all functions here).
    pub fn optimum(self) -> f64 {
        0.0
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Benchmark::Schwefel => {
                SCHWEFEL_OFFSET * x.len() as f64
                    - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
            }
            Benchmark::Griewank => {
                let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + sum - prod
            }
        }
    }

    /// One GA run on the suite dimension with `cfg` reseeded to `seed`.
    pub fn run(self, cfg: &GaConfig, seed: u64) -> Result<Evolution> {
        evolve(|x| Ok(self.eval(x)), &self.bounds(SUITE_DIM), &cfg.with_seed(seed))
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown benchmark {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_zero() {
        for b in Benchmark::ALL {
            let v = b.eval(&b.argmin(2));
            assert!(v.abs() < 1e-9, "{b}: {v}");
        }
        assert_eq!(Benchmark::Sphere.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(Benchmark::Rastrigin.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(Benchmark::Griewank.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn positive_away_from_optimum() {
        for b in Benchmark::ALL {
            let mut x = b.argmin(2);
            x[0] += 0.5;
            assert!(b.eval(&x) > 0.0, "{b}");
        }
    }

    #[test]
    fn names_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!("ackley".parse::<Benchmark>().is_err());
    }
}
