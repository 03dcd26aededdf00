//! 30-gene encoding of the single-input Mamdani system.
//!
//! Layout:
//!
//! | genes   | meaning                                             |
//! |---------|-----------------------------------------------------|
//! | 0..10   | input term set, `(g', g'')` for VL, L, M, H, VH     |
//! | 10..20  | output term set, same order                         |
//! | 20..25  | rule weights, one per input term                    |
//! | 25..30  | rule consequents, rounded to an output term 1..=5   |
//!
//! Shoulders: `g'` scales the distance of the zero-membership foot from the
//! domain edge (default 0.25), `g''` places the edge of the unit core as a
//! fraction of that distance. Triangles: `g'` scales the left half-width and
//! `g''` the right half-width of a base of length `L_tr` centred on the
//! default vertex; `g''` also places the peak between the two feet.

use serde::{Deserialize, Serialize};

use super::membership::Membership;
use super::{FisModel, Rule, Term, TermSet, TERM_COUNT};
use crate::error::{Error, Result};

pub const GENOME_LEN: usize = 30;
pub const SHAPE_GENES: usize = 2 * TERM_COUNT;
const OUTPUT_OFFSET: usize = SHAPE_GENES;
const WEIGHT_OFFSET: usize = 2 * SHAPE_GENES;
const CONSEQUENT_OFFSET: usize = WEIGHT_OFFSET + TERM_COUNT;

/// Geometry constants of the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingParams {
    /// Default base length of the inner triangles.
    pub l_tr: f64,
    /// Default foot of the left shoulder.
    pub gamma0: f64,
    /// Default foot of the right shoulder.
    pub theta0: f64,
    /// Points in the centroid discretization of `[0, 1]`.
    pub resolution: usize,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            l_tr: 0.2,
            gamma0: 0.25,
            theta0: 0.75,
            resolution: 1001,
        }
    }
}

impl EncodingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_tr > 0.0 && self.l_tr <= 1.0) {
            return Err(Error::config("fis.l_tr", "must lie in (0, 1]"));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0 && self.theta0 > 0.0 && self.theta0 < 1.0) {
            return Err(Error::config("fis.gamma0/theta0", "must lie in (0, 1)"));
        }
        if self.resolution < 3 {
            return Err(Error::config("fis.resolution", "need at least 3 points"));
        }
        Ok(())
    }

    /// Centres of the Low, Medium and High triangles.
    fn inner_centres(&self) -> [f64; 3] {
        [0.25, 0.5, 0.75]
    }
}

/// Per-gene `(lo, hi)` bounds for the given encoding.
pub fn gene_bounds(params: &EncodingParams) -> Vec<(f64, f64)> {
    let shoulder = [(0.04, 4.00), (0.01, 0.99)];
    let inner = [(0.01, 1.0 / params.l_tr), (0.01, 1.99)];
    let mut b = Vec::with_capacity(GENOME_LEN);
    for _ in 0..2 {
        b.extend_from_slice(&shoulder);
        for _ in 0..3 {
            b.extend_from_slice(&inner);
        }
        b.extend_from_slice(&shoulder);
    }
    b.extend(std::iter::repeat((0.0, 1.0)).take(TERM_COUNT));
    b.extend(std::iter::repeat((0.5, 5.5)).take(TERM_COUNT));
    debug_assert_eq!(b.len(), GENOME_LEN);
    b
}

/// Genome that decodes to the evenly spaced default partition with the
/// identity rule base (term `i` maps to term `i`) at full weight.
pub fn default_genome() -> Vec<f64> {
    let mut g = Vec::with_capacity(GENOME_LEN);
    for _ in 0..2 {
        g.extend_from_slice(&[1.0, 0.5]);
        for _ in 0..3 {
            g.extend_from_slice(&[1.0, 1.0]);
        }
        g.extend_from_slice(&[1.0, 0.5]);
    }
    g.extend(std::iter::repeat(1.0).take(TERM_COUNT));
    g.extend((1..=TERM_COUNT).map(|c| c as f64));
    g
}

fn check_bounds(genome: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if genome.len() != GENOME_LEN {
        return Err(Error::invalid(format!(
            "genome has {} genes, expected {GENOME_LEN}",
            genome.len()
        )));
    }
    for (index, (&value, &(lo, hi))) in genome.iter().zip(bounds).enumerate() {
        if !(value >= lo && value <= hi) {
            return Err(Error::GeneOutOfBounds { index, value, lo, hi });
        }
    }
    Ok(())
}

/// Left shoulder abscissas `(gamma, beta)`: foot and core end.
pub fn left_shoulder_abscissas(g1: f64, g2: f64, params: &EncodingParams) -> (f64, f64) {
    let gamma = g1 * params.gamma0;
    let beta = g2 * gamma;
    (gamma, beta)
}

/// Right shoulder abscissas `(theta, lambda)`: foot and core start.
pub fn right_shoulder_abscissas(g1: f64, g2: f64, params: &EncodingParams) -> (f64, f64) {
    let theta = 1.0 - g1 * (1.0 - params.theta0);
    let lambda = theta + g2 * (1.0 - theta);
    (theta, lambda)
}

/// Triangle abscissas `(phi, xi, omega)`: left foot, right foot, peak.
pub fn triangle_abscissas(g1: f64, g2: f64, centre: f64, params: &EncodingParams) -> (f64, f64, f64) {
    let l = params.l_tr;
    let phi0 = centre - l / 2.0;
    let xi0 = centre + l / 2.0;
    let phi = phi0 - (g1 / 2.0 * l - l / 2.0);
    let xi = xi0 + (g2 / 2.0 * l - l / 2.0);
    let omega = phi + g2 * (xi - phi) / 2.0;
    (phi, xi, omega)
}

fn decode_term_set(genes: &[f64], params: &EncodingParams) -> TermSet {
    let centres = params.inner_centres();
    let mut terms = [Membership::Triangle {
        left: 0.0,
        peak: 0.0,
        right: 0.0,
    }; TERM_COUNT];

    let (gamma, beta) = left_shoulder_abscissas(genes[0], genes[1], params);
    terms[0] = Membership::left_shoulder_normalized(beta, gamma);
    for (i, &c) in centres.iter().enumerate() {
        let (phi, xi, omega) = triangle_abscissas(genes[2 + 2 * i], genes[3 + 2 * i], c, params);
        terms[1 + i] = Membership::triangle_normalized(phi, omega, xi);
    }
    let (theta, lambda) = right_shoulder_abscissas(genes[8], genes[9], params);
    terms[4] = Membership::right_shoulder_normalized(theta, lambda);
    TermSet { terms }
}

/// Output term selected by a consequent gene.
pub fn consequent_term(gene: f64) -> Term {
    let idx = (gene.round() as i64).clamp(1, TERM_COUNT as i64) as usize - 1;
    Term::ALL[idx]
}

/// Decodes an in-bounds genome into a model.
pub fn decode(genome: &[f64], params: &EncodingParams) -> Result<FisModel> {
    params.validate()?;
    check_bounds(genome, &gene_bounds(params))?;
    let input = decode_term_set(&genome[..OUTPUT_OFFSET], params);
    let output = decode_term_set(&genome[OUTPUT_OFFSET..WEIGHT_OFFSET], params);
    let rules = std::array::from_fn(|i| Rule {
        antecedent: Term::ALL[i],
        consequent: consequent_term(genome[CONSEQUENT_OFFSET + i]),
        weight: genome[WEIGHT_OFFSET + i],
    });
    FisModel::new(input, output, rules, params.resolution)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn p() -> EncodingParams {
        EncodingParams::default()
    }

    #[test]
    fn unit_gain_reproduces_default_foot() {
        let (gamma, beta) = left_shoulder_abscissas(1.0, 0.5, &p());
        assert_eq!(gamma, 0.25);
        assert_eq!(beta, 0.125);
    }

    #[test]
    fn right_shoulder_fixture() {
        let (theta, lambda) = right_shoulder_abscissas(1.0, 0.5, &p());
        assert_relative_eq!(theta, 0.75, epsilon = 1e-15);
        assert_relative_eq!(lambda, 0.875, epsilon = 1e-15);
        let (theta, lambda) = right_shoulder_abscissas(2.0, 0.2, &p());
        assert_relative_eq!(theta, 0.5, epsilon = 1e-15);
        assert_relative_eq!(lambda, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn triangle_defaults_and_scaling() {
        let (phi, xi, omega) = triangle_abscissas(1.0, 1.0, 0.25, &p());
        assert_relative_eq!(phi, 0.15, epsilon = 1e-15);
        assert_relative_eq!(xi, 0.35, epsilon = 1e-15);
        assert_relative_eq!(omega, 0.25, epsilon = 1e-15);
        // g' = 2 doubles the left half-width, g'' = 0.5 halves the right one
        let (phi, xi, omega) = triangle_abscissas(2.0, 0.5, 0.5, &p());
        assert_relative_eq!(phi, 0.3, epsilon = 1e-15);
        assert_relative_eq!(xi, 0.55, epsilon = 1e-15);
        assert_relative_eq!(omega, 0.3 + 0.5 * 0.25 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn default_genome_decodes_to_even_partition() {
        let m = decode(&default_genome(), &p()).unwrap();
        let abs: Vec<Vec<f64>> = m.input.terms.iter().map(|t| t.abscissas()).collect();
        let expect = [
            vec![0.125, 0.25],
            vec![0.15, 0.25, 0.35],
            vec![0.4, 0.5, 0.6],
            vec![0.65, 0.75, 0.85],
            vec![0.75, 0.875],
        ];
        for (a, e) in abs.iter().zip(&expect) {
            for (x, y) in a.iter().zip(e) {
                assert_relative_eq!(*x, *y, epsilon = 1e-12);
            }
        }
        assert_eq!(m.input, m.output);
        for (i, r) in m.rules.iter().enumerate() {
            assert_eq!(r.antecedent, Term::ALL[i]);
            assert_eq!(r.consequent, Term::ALL[i]);
            assert_eq!(r.weight, 1.0);
        }
    }

    #[test]
    fn rejects_out_of_bounds() {
        let mut g = default_genome();
        g[0] = 5.0;
        assert!(matches!(
            decode(&g, &p()),
            Err(Error::GeneOutOfBounds { index: 0, .. })
        ));
        assert!(decode(&g[..29], &p()).is_err());
        let mut g = default_genome();
        g[22] = 1.2;
        assert!(decode(&g, &p()).is_err());
    }

    #[test]
    fn consequent_rounding() {
        assert_eq!(consequent_term(0.5), Term::VeryLow);
        assert_eq!(consequent_term(1.49), Term::VeryLow);
        assert_eq!(consequent_term(1.5), Term::Low);
        assert_eq!(consequent_term(5.5), Term::VeryHigh);
    }

    fn arb_genome() -> impl Strategy<Value = Vec<f64>> {
        let bounds = gene_bounds(&EncodingParams::default());
        bounds
            .into_iter()
            .map(|(lo, hi)| (lo..=hi).boxed())
            .collect::<Vec<_>>()
    }

    proptest! {
        #[test]
        fn decoded_terms_are_well_formed(g in arb_genome()) {
            let m = decode(&g, &p()).unwrap();
            for set in [&m.input, &m.output] {
                for t in &set.terms {
                    let a = t.abscissas();
                    prop_assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
                    prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
                }
                prop_assert_eq!(set.terms[0].eval(0.0), 1.0);
                prop_assert_eq!(set.terms[4].eval(1.0), 1.0);
            }
            let again = decode(&g, &p()).unwrap();
            prop_assert_eq!(m, again);
        }
    }
}
