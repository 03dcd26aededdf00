//! Plain-text export/import of a decoded model.
//!
//! ```text
//! resolution 1001
//! input VeryLow left-shoulder 0.125 0.25
//! input Low triangle 0.15 0.25 0.35
//! ...
//! output VeryHigh right-shoulder 0.75 0.875
//! if SoE is VeryLow then alpha is VeryHigh (0.17)
//! ```
//!
//! Numbers are printed in shortest round-trip form, so import is exact.

use super::{FisModel, Membership, Rule, Term, TermSet, TERM_COUNT};
use crate::error::{Error, Result};

impl FisModel {
    pub fn to_listing(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("resolution {}\n", self.resolution()));
        for (side, set) in [("input", &self.input), ("output", &self.output)] {
            for (term, mf) in Term::ALL.iter().zip(&set.terms) {
                let abs: Vec<String> = mf.abscissas().iter().map(|v| v.to_string()).collect();
                out.push_str(&format!(
                    "{side} {} {} {}\n",
                    term.label(),
                    mf.shape_name(),
                    abs.join(" ")
                ));
            }
        }
        for r in &self.rules {
            out.push_str(&format!(
                "if SoE is {} then alpha is {} ({})\n",
                r.antecedent.label(),
                r.consequent.label(),
                r.weight
            ));
        }
        out
    }

    pub fn from_listing(text: &str) -> Result<FisModel> {
        let mut resolution = None;
        let mut input: [Option<Membership>; TERM_COUNT] = [None; TERM_COUNT];
        let mut output: [Option<Membership>; TERM_COUNT] = [None; TERM_COUNT];
        let mut rules: Vec<Rule> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |m: String| Error::Listing { line, message: m };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = l.split_whitespace().collect();
            match words[0] {
                "resolution" => {
                    let v = words
                        .get(1)
                        .and_then(|w| w.parse::<usize>().ok())
                        .ok_or_else(|| err("resolution needs an integer".into()))?;
                    resolution = Some(v);
                }
                side @ ("input" | "output") => {
                    if words.len() < 3 {
                        return Err(err("expected: <side> <term> <shape> <abscissas>".into()));
                    }
                    let term = Term::from_label(words[1])
                        .ok_or_else(|| err(format!("unknown term {}", words[1])))?;
                    let nums = words[3..]
                        .iter()
                        .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad number {w}"))))
                        .collect::<Result<Vec<f64>>>()?;
                    if nums.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(err("abscissas must lie in [0, 1]".into()));
                    }
                    if nums.windows(2).any(|w| w[0] > w[1]) {
                        return Err(err("abscissas must be non-decreasing".into()));
                    }
                    let mf = match (words[2], nums.as_slice()) {
                        ("left-shoulder", &[a, b]) => Membership::LeftShoulder {
                            core_end: a,
                            foot: b,
                        },
                        ("triangle", &[a, b, c]) => Membership::Triangle {
                            left: a,
                            peak: b,
                            right: c,
                        },
                        ("right-shoulder", &[a, b]) => Membership::RightShoulder {
                            foot: a,
                            core_start: b,
                        },
                        (shape, n) => {
                            return Err(err(format!(
                                "shape {shape} with {} abscissas is not supported",
                                n.len()
                            )))
                        }
                    };
                    let slot = if side == "input" {
                        &mut input[term.index()]
                    } else {
                        &mut output[term.index()]
                    };
                    if slot.replace(mf).is_some() {
                        return Err(err(format!("{side} term {} defined twice", term.label())));
                    }
                }
                "if" => rules.push(parse_rule(&words).map_err(err)?),
                other => return Err(err(format!("unexpected keyword {other}"))),
            }
        }

        let missing = |what: &str| Error::Listing {
            line: 0,
            message: format!("missing {what}"),
        };
        let collect = |set: [Option<Membership>; TERM_COUNT], side: &str| -> Result<TermSet> {
            let mut terms = [Membership::Triangle {
                left: 0.0,
                peak: 0.0,
                right: 0.0,
            }; TERM_COUNT];
            for (i, m) in set.into_iter().enumerate() {
                terms[i] = m.ok_or_else(|| missing(&format!("{side} term {}", Term::ALL[i].label())))?;
            }
            Ok(TermSet { terms })
        };
        let input = collect(input, "input")?;
        let output = collect(output, "output")?;

        if rules.len() != TERM_COUNT {
            return Err(missing(&format!("rules: found {}, need {TERM_COUNT}", rules.len())));
        }
        let mut ordered = rules.clone();
        ordered.sort_by_key(|r| r.antecedent.index());
        if ordered.iter().enumerate().any(|(i, r)| r.antecedent.index() != i) {
            return Err(missing("one rule per input term"));
        }
        let rules: [Rule; TERM_COUNT] = std::array::from_fn(|i| ordered[i]);
        FisModel::new(
            input,
            output,
            rules,
            resolution.ok_or_else(|| missing("resolution"))?,
        )
    }
}

fn parse_rule(words: &[&str]) -> std::result::Result<Rule, String> {
    // if SoE is <T> then alpha is <T> (<w>)
    if words.len() != 9
        || words[1] != "SoE"
        || words[2] != "is"
        || words[4] != "then"
        || words[5] != "alpha"
        || words[6] != "is"
    {
        return Err("expected: if SoE is <term> then alpha is <term> (<weight>)".into());
    }
    let term = |w: &str| Term::from_label(w).ok_or_else(|| format!("unknown term {w}"));
    let weight = words[8]
        .strip_prefix('(')
        .and_then(|w| w.strip_suffix(')'))
        .and_then(|w| w.parse::<f64>().ok())
        .ok_or_else(|| format!("bad weight {}", words[8]))?;
    if !(0.0..=1.0).contains(&weight) {
        return Err(format!("weight {weight} outside [0, 1]"));
    }
    Ok(Rule {
        antecedent: term(words[3])?,
        consequent: term(words[7])?,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::super::{decode, gene_bounds, EncodingParams};
    use super::*;

    #[test]
    fn listing_is_readable() {
        let m = decode(&super::super::default_genome(), &EncodingParams::default()).unwrap();
        let text = m.to_listing();
        assert!(text.contains("if SoE is VeryLow then alpha is VeryLow (1)"));
        assert!(text.contains("input Low triangle"));
        assert!(text.starts_with("resolution 1001\n"));
    }

    #[test]
    fn listing_errors_carry_line_numbers() {
        let bad = "resolution 1001\ninput Nope triangle 0 0.1 0.2\n";
        match FisModel::from_listing(bad) {
            Err(Error::Listing { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(FisModel::from_listing("resolution 1001\n").is_err());
    }

    fn arb_genome() -> impl Strategy<Value = Vec<f64>> {
        gene_bounds(&EncodingParams::default())
            .into_iter()
            .map(|(lo, hi)| (lo..=hi).boxed())
            .collect::<Vec<_>>()
    }

    proptest! {
        #[test]
        fn listing_round_trip(g in arb_genome()) {
            let m = decode(&g, &EncodingParams::default()).unwrap();
            let back = FisModel::from_listing(&m.to_listing()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
