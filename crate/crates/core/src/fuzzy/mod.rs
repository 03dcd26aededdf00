//! Single-input single-output Mamdani inference: SoE in, `alpha` out.
//!
//! Both universes are `[0, 1]` and partitioned by five terms. Each rule
//! fires with strength `membership(soe) * weight`, clips its consequent
//! (min implication), rules aggregate by max, and the crisp output is the
//! centroid of the aggregate. The centroid integrals run over a uniform grid
//! refined with every output breakpoint; within each cell the clip points
//! and crossings of the aggregate are located, so the piecewise-linear
//! aggregate is integrated exactly and narrow terms are never stepped over.

mod genome;
mod listing;
mod membership;

use serde::{Deserialize, Serialize};

pub use genome::{
    consequent_term, decode, default_genome, gene_bounds, left_shoulder_abscissas,
    right_shoulder_abscissas, triangle_abscissas, EncodingParams, GENOME_LEN, SHAPE_GENES,
};
pub use membership::{Membership, MIN_TRIANGLE_WIDTH};

use crate::error::{Error, Result};

pub const TERM_COUNT: usize = 5;

/// Output used when no rule fires.
pub const FALLBACK_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl Term {
    pub const ALL: [Term; TERM_COUNT] = [
        Term::VeryLow,
        Term::Low,
        Term::Medium,
        Term::High,
        Term::VeryHigh,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Term::VeryLow => "VeryLow",
            Term::Low => "Low",
            Term::Medium => "Medium",
            Term::High => "High",
            Term::VeryHigh => "VeryHigh",
        }
    }

    pub fn from_label(s: &str) -> Option<Term> {
        Term::ALL.into_iter().find(|t| t.label() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    pub terms: [Membership; TERM_COUNT],
}

impl TermSet {
    pub fn get(&self, term: Term) -> &Membership {
        &self.terms[term.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Term,
    pub consequent: Term,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference {
    pub alpha: f64,
    /// True when no rule fired and [`FALLBACK_ALPHA`] was returned.
    pub fallback: bool,
}

/// Decoded, immutable fuzzy system.
#[derive(Debug, Clone)]
pub struct FisModel {
    pub input: TermSet,
    pub output: TermSet,
    pub rules: [Rule; TERM_COUNT],
    resolution: usize,
    /// Uniform grid plus the output breakpoints, ascending.
    grid: Vec<f64>,
    /// Output memberships sampled on `grid`, term-major.
    output_samples: Vec<f64>,
}

impl PartialEq for FisModel {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input
            && self.output == other.output
            && self.rules == other.rules
            && self.resolution == other.resolution
    }
}

impl FisModel {
    pub fn new(
        input: TermSet,
        output: TermSet,
        rules: [Rule; TERM_COUNT],
        resolution: usize,
    ) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::invalid("centroid resolution must be at least 3"));
        }
        for r in &rules {
            if !(0.0..=1.0).contains(&r.weight) {
                return Err(Error::invalid(format!("rule weight {} outside [0, 1]", r.weight)));
            }
        }
        let step = 1.0 / (resolution - 1) as f64;
        let mut grid: Vec<f64> = (0..resolution).map(|j| j as f64 * step).collect();
        grid.extend(
            output
                .terms
                .iter()
                .flat_map(Membership::abscissas)
                .filter(|x| (0.0..=1.0).contains(x)),
        );
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut output_samples = Vec::with_capacity(TERM_COUNT * grid.len());
        for mf in &output.terms {
            output_samples.extend(grid.iter().map(|&x| mf.eval(x)));
        }
        Ok(Self {
            input,
            output,
            rules,
            resolution,
            grid,
            output_samples,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Same model with a different centroid discretization.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.input.clone(), self.output.clone(), self.rules, resolution)
    }

    /// Firing strength per output term (max over rules sharing a consequent).
    fn consequent_strengths(&self, soe: f64) -> [f64; TERM_COUNT] {
        let mut s = [0.0; TERM_COUNT];
        for r in &self.rules {
            let fire = self.input.get(r.antecedent).eval(soe) * r.weight;
            let slot = &mut s[r.consequent.index()];
            if fire > *slot {
                *slot = fire;
            }
        }
        s
    }

    pub fn infer_detailed(&self, soe: f64) -> Result<Inference> {
        if !(0.0..=1.0).contains(&soe) {
            return Err(Error::invalid(format!("FIS input {soe} outside [0, 1]")));
        }
        let strengths = self.consequent_strengths(soe);
        let active: Vec<(usize, f64)> = strengths
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, s)| s > 0.0)
            .collect();
        if active.is_empty() {
            return Ok(Inference {
                alpha: FALLBACK_ALPHA,
                fallback: true,
            });
        }

        let (num, den) = self.centroid_moments(&active);
        if den <= 0.0 {
            return Ok(Inference {
                alpha: FALLBACK_ALPHA,
                fallback: true,
            });
        }
        Ok(Inference {
            alpha: (num / den).clamp(0.0, 1.0),
            fallback: false,
        })
    }

    /// First and zeroth moments of the clipped, max-aggregated output.
    ///
    /// Every output term is linear between consecutive grid points. Inside
    /// a cell the aggregate can still bend where a term meets its clip
    /// level or where the largest term changes; those points are located
    /// and the pieces between them integrated exactly.
    fn centroid_moments(&self, active: &[(usize, f64)]) -> (f64, f64) {
        let n = self.grid.len();
        let raw = |t: usize, j: usize| self.output_samples[t * n + j];
        // aggregate value at grid point `j` and the index of the leading term
        let at = |j: usize| {
            let (mut mu, mut lead) = (f64::NEG_INFINITY, 0);
            for (a, &(t, s)) in active.iter().enumerate() {
                let v = raw(t, j).min(s);
                if v > mu {
                    (mu, lead) = (v, a);
                }
            }
            (mu, lead)
        };

        let mut num = 0.0;
        let mut den = 0.0;
        let mut piece = |x0: f64, m0: f64, x1: f64, m1: f64| {
            let h = x1 - x0;
            num += h / 6.0 * (x0 * (2.0 * m0 + m1) + x1 * (m0 + 2.0 * m1));
            den += h / 2.0 * (m0 + m1);
        };
        let (mut mu_a, mut lead_a) = at(0);
        for j in 1..n {
            let (mu_b, lead_b) = at(j);
            let (xa, xb) = (self.grid[j - 1], self.grid[j]);
            let clip_inside = active.iter().any(|&(t, s)| (raw(t, j - 1) - s) * (raw(t, j) - s) < 0.0);
            if !clip_inside && lead_a == lead_b {
                // one term leads throughout and nothing bends: a single line
                piece(xa, mu_a, xb, mu_b);
            } else {
                self.split_cell(active, j, &mut piece);
            }
            (mu_a, lead_a) = (mu_b, lead_b);
        }
        (num, den)
    }

    /// Integrates cell `j - 1 .. j` piece by piece when the aggregate bends
    /// inside it.
    fn split_cell(&self, active: &[(usize, f64)], j: usize, piece: &mut impl FnMut(f64, f64, f64, f64)) {
        let n = self.grid.len();
        let raw = |t: usize, j: usize| self.output_samples[t * n + j];
        let (xa, xb) = (self.grid[j - 1], self.grid[j]);
        let h = xb - xa;
        let value = |t: usize, s: f64, x: f64| {
            let (ra, rb) = (raw(t, j - 1), raw(t, j));
            (ra + (rb - ra) * (x - xa) / h).min(s)
        };
        let mu = |x: f64| active.iter().map(|&(t, s)| value(t, s, x)).fold(0.0f64, f64::max);

        let mut cuts: Vec<f64> = Vec::with_capacity(TERM_COUNT + 2);
        cuts.push(xa);
        for &(t, s) in active {
            let (ra, rb) = (raw(t, j - 1), raw(t, j));
            if (ra - s) * (rb - s) < 0.0 {
                cuts.push(xa + (s - ra) / (rb - ra) * h);
            }
        }
        cuts.push(xb);
        cuts.sort_by(f64::total_cmp);

        for w in 0..cuts.len() - 1 {
            let (p, q) = (cuts[w], cuts[w + 1]);
            if q <= p {
                continue;
            }
            // each clipped term is a line on [p, q]; split where two cross
            let mut inner: Vec<f64> = Vec::new();
            for (a, &(ta, sa)) in active.iter().enumerate() {
                for &(tb, sb) in &active[a + 1..] {
                    let dp = value(ta, sa, p) - value(tb, sb, p);
                    let dq = value(ta, sa, q) - value(tb, sb, q);
                    if dp * dq < 0.0 {
                        inner.push(p + dp / (dp - dq) * (q - p));
                    }
                }
            }
            inner.sort_by(f64::total_cmp);
            let (mut x0, mut m0) = (p, mu(p));
            for x1 in inner.into_iter().chain(std::iter::once(q)) {
                let m1 = mu(x1);
                piece(x0, m0, x1, m1);
                (x0, m0) = (x1, m1);
            }
        }
    }

    pub fn infer(&self, soe: f64) -> Result<f64> {
        self.infer_detailed(soe).map(|i| i.alpha)
    }
}

/// On-disk form of a trained model: the genome plus its encoding constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisFile {
    pub encoding: EncodingParams,
    pub genome: Vec<f64>,
    /// Human-readable listing of the decoded model; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub listing: Option<String>,
}

impl FisFile {
    pub fn new(genome: Vec<f64>, encoding: EncodingParams) -> Result<Self> {
        let model = decode(&genome, &encoding)?;
        Ok(Self {
            encoding,
            genome,
            listing: Some(model.to_listing()),
        })
    }

    pub fn model(&self) -> Result<FisModel> {
        decode(&self.genome, &self.encoding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_model() -> FisModel {
        decode(&default_genome(), &EncodingParams::default()).unwrap()
    }

    /// Trapezoidal-rule centroid of a membership on a fine grid.
    fn centroid_oracle(mu: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..=n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            num += w * x * mu(x);
            den += w * mu(x);
        }
        num / den
    }

    #[test]
    fn symmetric_model_midpoint() {
        let a = default_model().infer(0.5).unwrap();
        assert!((a - 0.5).abs() < 1e-3, "{a}");
    }

    #[test]
    fn single_rule_gives_consequent_centroid() {
        let mut m = default_model();
        for (i, r) in m.rules.iter_mut().enumerate() {
            r.weight = if i == 0 { 1.0 } else { 0.0 };
        }
        m.rules[0].consequent = Term::VeryHigh;
        let m = FisModel::new(m.input, m.output, m.rules, 1001).unwrap();
        let out = *m.output.get(Term::VeryHigh);
        let expected = centroid_oracle(|x| out.eval(x), 200_000);
        let a = m.infer(0.05).unwrap();
        assert!((a - expected).abs() < 1e-3, "{a} vs {expected}");
    }

    #[test]
    fn zero_activation_falls_back() {
        // default partition leaves (0.35, 0.4) uncovered
        let inf = default_model().infer_detailed(0.37).unwrap();
        assert!(inf.fallback);
        assert_eq!(inf.alpha, FALLBACK_ALPHA);
    }

    #[test]
    fn rejects_out_of_range_input() {
        assert!(default_model().infer(1.01).is_err());
        assert!(default_model().infer(-0.01).is_err());
    }

    #[test]
    fn fis_file_round_trip() {
        let f = FisFile::new(default_genome(), EncodingParams::default()).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: FisFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.model().unwrap(), default_model());
    }
}
