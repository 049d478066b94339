//! Exact covering probability for one codebook given the common and side
//! sequences.
//!
//! With `k = 1` the codewords are i.i.d. given `u_0^n`, so
//! `P{∃m typical | u_0^n, u_2^n} = 1 - (1 - q)^M` where `q` is the
//! probability that a single codeword is typical. Typicality of a codeword
//! only depends on how many times it takes each symbol within each class of
//! positions sharing the same `(u_0, u_2)` pair, so `q` is a finite sum over
//! those conditional compositions.

use crate::dist::{GenerationLaw, VarSet};
use crate::error::{Error, Result};
use crate::typicality::{TypicalityTester, TYPICALITY_SLACK};

/// `1 - (1 - q)^M` from `ln q` and `ln M`, accurate for tiny `q` and huge `M`.
pub fn cover_from_single(ln_q: f64, ln_m: f64) -> f64 {
    if ln_q == f64::NEG_INFINITY || ln_m == f64::NEG_INFINITY {
        return 0.0;
    }
    // ln(-ln(1 - q)); for small q this is ln q to double precision.
    let ln_hazard = if ln_q < -30.0 {
        ln_q
    } else {
        (-(-ln_q.exp()).ln_1p()).ln()
    };
    let x = (ln_m + ln_hazard).exp();
    -(-x).exp_m1()
}

struct Class {
    count: usize,
    /// `ln p(a | u_0)` per codeword symbol.
    ln_row: Vec<f64>,
    /// `-ln p(u_T)` per tracked subset and codeword symbol.
    weights: Vec<Vec<f64>>,
}

/// `ln q`, the log-probability that one codeword drawn from the law is
/// jointly typical with `common` and `side`. Only `k = 1` is supported.
///
/// Errors when the number of conditional compositions exceeds `guard`.
pub fn ln_single_codeword_typical(
    law: &GenerationLaw,
    tester: &TypicalityTester,
    common: &[usize],
    side: &[usize],
    delta: f64,
    guard: f64,
) -> Result<f64> {
    if law.k() != 1 {
        return Err(Error::Unsupported("collapsed sampling needs k = 1".into()));
    }
    let n = common.len();
    let sizes = law.sizes();
    let (a0, a1, a2) = (sizes[0], sizes[1], sizes[2]);

    let views: [&[usize]; 3] = [common, &[], side];
    if !tester.is_typical_on(&views, VarSet::from_iter([0, 2]), delta) {
        return Ok(f64::NEG_INFINITY);
    }

    let tracked: Vec<VarSet> = VarSet::all(3)
        .nonempty_subsets()
        .filter(|t| t.contains(1))
        .collect();

    let mut counts = vec![0usize; a0 * a2];
    for (&u0, &u2) in common.iter().zip(side) {
        counts[u0 * a2 + u2] += 1;
    }
    let mut classes = Vec::new();
    let mut states = 1f64;
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let (u0, u2) = (c / a2, c % a2);
        let row = law.row(1, u0).expect("u0 observed with positive mass");
        let support = row.iter().filter(|&&w| w > 0.0).count();
        states *= binomial(count + support - 1, support - 1);
        classes.push(Class {
            count,
            ln_row: row.iter().map(|w| w.ln()).collect(),
            weights: tracked
                .iter()
                .map(|&t| {
                    (0..a1)
                        .map(|a| tester.neg_ln_prob(t, &[u0, a, u2]))
                        .collect()
                })
                .collect(),
        });
    }
    if states > guard {
        return Err(Error::GuardExceeded { states, guard });
    }

    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let bounds: Vec<(f64, f64)> = tracked
        .iter()
        .map(|&t| {
            let h = tester.entropy(t);
            let tol = delta + TYPICALITY_SLACK;
            (h - tol, h + tol)
        })
        .collect();

    let mut acc = LogSum::default();
    let mut sums = vec![0.0; tracked.len()];
    let mut comp = vec![0usize; a1];
    enumerate(
        &classes,
        0,
        0.0,
        &mut sums,
        &mut comp,
        &ln_fact,
        &mut |ln_prob, sums| {
            let typical = sums
                .iter()
                .zip(&bounds)
                .all(|(s, (lo, hi))| {
                    let rate = s / n as f64;
                    rate >= *lo && rate <= *hi
                });
            if typical {
                acc.add(ln_prob);
            }
        },
    );
    Ok(acc.ln())
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Default)]
struct LogSum {
    max: Option<f64>,
    terms: Vec<f64>,
}

impl LogSum {
    fn add(&mut self, x: f64) {
        self.max = Some(self.max.map_or(x, |m| m.max(x)));
        self.terms.push(x);
    }

    fn ln(&self) -> f64 {
        match self.max {
            None => f64::NEG_INFINITY,
            Some(m) => m + self.terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln(),
        }
    }
}

/// Walks all compositions class by class, accumulating the log-probability
/// and the per-subset log-likelihood sums.
fn enumerate(
    classes: &[Class],
    idx: usize,
    ln_prob: f64,
    sums: &mut Vec<f64>,
    comp: &mut Vec<usize>,
    ln_fact: &[f64],
    visit: &mut dyn FnMut(f64, &[f64]),
) {
    let Some(class) = classes.get(idx) else {
        visit(ln_prob, sums);
        return;
    };
    compositions(class, 0, class.count, comp, &mut |comp| {
        let mut lp = ln_prob + ln_fact[class.count];
        let saved = sums.clone();
        for (a, &x) in comp.iter().enumerate() {
            if x == 0 {
                continue;
            }
            lp += x as f64 * class.ln_row[a] - ln_fact[x];
            for (s, w) in sums.iter_mut().zip(&class.weights) {
                *s += x as f64 * w[a];
            }
        }
        enumerate(classes, idx + 1, lp, sums, &mut vec![0; comp.len()], ln_fact, visit);
        sums.copy_from_slice(&saved);
    });
}

/// Compositions of `remaining` over the symbols `from..` with positive mass.
fn compositions(class: &Class, from: usize, remaining: usize, comp: &mut Vec<usize>, f: &mut dyn FnMut(&Vec<usize>)) {
    let a = comp.len();
    // Last symbol with positive mass takes whatever is left.
    let last = (0..a).rev().find(|&s| class.ln_row[s].is_finite()).unwrap_or(0);
    if from == last {
        comp[from] = remaining;
        f(comp);
        comp[from] = 0;
        return;
    }
    if !class.ln_row[from].is_finite() {
        comp[from] = 0;
        compositions(class, from + 1, remaining, comp, f);
        return;
    }
    for x in 0..=remaining {
        comp[from] = x;
        compositions(class, from + 1, remaining - x, comp, f);
    }
    comp[from] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::typical_set;
    use crate::dist::{decode_sequence, JointPmf};

    #[test]
    fn cover_probability_limits() {
        assert_eq!(cover_from_single(f64::NEG_INFINITY, 10.0), 0.0);
        assert_eq!(cover_from_single(-1.0, f64::NEG_INFINITY), 0.0);
        assert!((cover_from_single(0.5f64.ln(), 2f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(cover_from_single(-136.0, 347.0), 1.0);
        assert!(cover_from_single(-136.0, 27.0) < 1e-40);
        assert_eq!(cover_from_single(0.0, 0.0), 1.0);
    }

    #[test]
    fn single_codeword_probability_matches_enumeration() {
        let p = JointPmf::from_table(
            vec![0.1, 0.05, 0.05, 0.2, 0.15, 0.1, 0.05, 0.3],
            vec![2, 2, 2],
        )
        .unwrap();
        let law = p.generation_law();
        let tester = TypicalityTester::new(&p);
        let (n, delta) = (4, 0.25);
        let (pn, f) = typical_set(&p, n, delta).unwrap();
        let law_n = pn.generation_law();
        for u0 in 0..16 {
            for u2 in 0..16 {
                if law_n.common()[u0] == 0.0 {
                    continue;
                }
                let row = law_n.row(1, u0).unwrap();
                let brute: f64 = (0..16)
                    .filter(|&u1| f.contains_index(pn.index(&[u0, u1, u2])))
                    .map(|u1| row[u1])
                    .sum();
                let c = decode_sequence(u0, 2, n);
                let s = decode_sequence(u2, 2, n);
                let ln_q = ln_single_codeword_typical(&law, &tester, &c, &s, delta, 1e7).unwrap();
                assert!((ln_q.exp() - brute).abs() < 1e-12, "{u0} {u2}: {} vs {brute}", ln_q.exp());
            }
        }
    }
}
