//! Derivative-free local refinement: coordinate-wise golden-section descent
//! inside a box.
//!
//! Each coordinate is searched over its whole interval with a golden-section
//! search, both endpoints are evaluated as well (clamps make many objectives
//! flat or kinked at the bounds), and the best point replaces the incumbent
//! only if it is strictly better. The incumbent value therefore never
//! increases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Stop after this many full sweeps over the coordinates.
    pub max_sweeps: usize,
    /// Stop when one sweep improves the objective by less than this.
    pub min_improvement: f64,
    /// Final bracket width of each golden-section search.
    pub tolerance: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            min_improvement: 1e-6,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub x: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub fn coordinate_descent<F>(
    mut f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &RefineOptions,
) -> Result<Refined>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if x0.len() != bounds.len() {
        return Err(Error::invalid(format!(
            "start point has {} coordinates, bounds have {}",
            x0.len(),
            bounds.len()
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("refinement tolerance must be > 0"));
    }
    let mut x: Vec<f64> = x0
        .iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
        .collect();
    let mut value = f(&x)?;
    let mut evaluations = 1;
    let mut sweeps = 0;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let sweep_start = value;
        for j in 0..x.len() {
            let (lo, hi) = bounds[j];
            if hi <= lo {
                continue;
            }
            let mut probe = x.clone();
            let mut eval = |v: f64, probe: &mut Vec<f64>| -> Result<f64> {
                probe[j] = v;
                evaluations += 1;
                f(probe)
            };

            let mut best = (x[j], value);
            for v in [lo, hi] {
                let fv = eval(v, &mut probe)?;
                if fv < best.1 {
                    best = (v, fv);
                }
            }
            let (mut a, mut b) = (lo, hi);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = eval(c, &mut probe)?;
            let mut fd = eval(d, &mut probe)?;
            while b - a > opts.tolerance {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = eval(c, &mut probe)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = eval(d, &mut probe)?;
                }
            }
            for (v, fv) in [(c, fc), (d, fd)] {
                if fv < best.1 {
                    best = (v, fv);
                }
            }
            if best.1 < value {
                x[j] = best.0;
                value = best.1;
            }
        }
        if sweep_start - value < opts.min_improvement {
            break;
        }
    }
    Ok(Refined {
        x,
        value,
        sweeps,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_reaches_minimum() {
        let target = [0.3, -1.2, 2.0];
        let r = coordinate_descent(
            |x| Ok(x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()),
            &[0.0, 0.0, 0.0],
            &[(-5.0, 5.0); 3],
            &RefineOptions::default(),
        )
        .unwrap();
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert!(r.sweeps <= 3, "{}", r.sweeps);
    }

    #[test]
    fn optimum_on_a_bound_is_found() {
        let r = coordinate_descent(
            |x| Ok(x[0]),
            &[0.5],
            &[(0.0, 1.0)],
            &RefineOptions::default(),
        )
        .unwrap();
        assert_eq!(r.x, vec![0.0]);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn never_worsens_the_start() {
        // multimodal: golden section may land in a worse basin
        let f = |x: &[f64]| Ok((8.0 * x[0]).sin() + (5.0 * x[1]).cos());
        let x0 = [0.59, 0.63];
        let start = f(&x0).unwrap();
        let r = coordinate_descent(f, &x0, &[(0.0, 1.0); 2], &RefineOptions::default()).unwrap();
        assert!(r.value <= start);
    }

    #[test]
    fn coupled_objective_improves_monotonically() {
        let rosen = |x: &[f64]| Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2));
        let opts = RefineOptions {
            max_sweeps: 5,
            ..RefineOptions::default()
        };
        let short = coordinate_descent(rosen, &[-1.0, 1.0], &[(-2.0, 2.0); 2], &opts).unwrap();
        let long =
            coordinate_descent(rosen, &[-1.0, 1.0], &[(-2.0, 2.0); 2], &RefineOptions::default())
                .unwrap();
        assert!(long.value <= short.value);
        assert!(short.value < rosen(&[-1.0, 1.0]).unwrap());
    }
}
