//! Weak joint typicality.
//!
//! A tuple of length-`n` sequences is weakly `δ`-typical when, for every
//! nonempty subset `T` of the variables, the empirical log-likelihood rate
//! `-(1/n) ln p(u_T^n)` lies within `δ` of `H(U_T)`.

use rand::Rng;
use serde::Serialize;

use crate::dist::{JointPmf, VarSet};
use crate::error::{Error, Result};

/// Absolute slack added to `δ` when comparing rates with entropies, so that
/// rates that equal the entropy in exact arithmetic are never rejected
/// because of rounding.
pub const TYPICALITY_SLACK: f64 = 1e-10;

/// Length-`n` sequences for some of the `k + 2` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceTuple {
    n: usize,
    present: VarSet,
    seqs: Vec<Vec<usize>>,
}

impl SequenceTuple {
    /// Sequences for every variable, in variable order.
    pub fn new(seqs: Vec<Vec<usize>>) -> Result<Self> {
        let num_vars = seqs.len();
        Self::partial(num_vars, seqs.into_iter().enumerate().collect())
    }

    /// Sequences for a subset of `num_vars` variables.
    pub fn partial(num_vars: usize, entries: Vec<(usize, Vec<usize>)>) -> Result<Self> {
        let mut seqs = vec![Vec::new(); num_vars];
        let mut present = VarSet::EMPTY;
        let mut n = None;
        for (v, seq) in entries {
            if v >= num_vars || present.contains(v) {
                return Err(Error::BadSequences(format!("variable {v} repeated or out of range")));
            }
            match n {
                None => n = Some(seq.len()),
                Some(len) if len != seq.len() => {
                    return Err(Error::BadSequences(format!(
                        "variable {v} has length {} but expected {len}",
                        seq.len()
                    )))
                }
                _ => {}
            }
            present = present.with(v);
            seqs[v] = seq;
        }
        let n = n.unwrap_or(0);
        if n == 0 {
            return Err(Error::BadSequences("sequences must be nonempty".into()));
        }
        Ok(SequenceTuple { n, present, seqs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn present(&self) -> VarSet {
        self.present
    }

    pub fn seq(&self, var: usize) -> &[usize] {
        &self.seqs[var]
    }

    pub fn views(&self) -> Vec<&[usize]> {
        self.seqs.iter().map(Vec::as_slice).collect()
    }

    fn check_against(&self, p: &JointPmf, needed: VarSet) -> Result<()> {
        if self.seqs.len() != p.num_vars() {
            return Err(Error::BadSequences(format!(
                "{} variables given, distribution has {}",
                self.seqs.len(),
                p.num_vars()
            )));
        }
        if !needed.is_subset_of(self.present) {
            return Err(Error::BadSequences(format!(
                "sequences for {} are missing",
                needed.minus(self.present)
            )));
        }
        for v in self.present.iter() {
            let a = p.sizes()[v];
            if self.seqs[v].iter().any(|&s| s >= a) {
                return Err(Error::BadSequences(format!(
                    "symbol of variable {v} outside alphabet of size {a}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetRate {
    pub subset: VarSet,
    pub empirical_rate: f64,
    pub entropy: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalityVerdict {
    pub typical: bool,
    pub per_subset: Vec<SubsetRate>,
    pub worst_subset: VarSet,
}

#[derive(Debug, Clone)]
struct SubsetTable {
    /// Stride of each variable inside the marginal table (0 if absent).
    projection: Vec<usize>,
    neg_ln: Vec<f64>,
    entropy: f64,
}

/// Marginal log-likelihood tables for every nonempty variable subset of one
/// distribution, reusable across many typicality tests.
#[derive(Debug, Clone)]
pub struct TypicalityTester {
    num_vars: usize,
    /// Indexed by subset bitmask; entry 0 is unused.
    tables: Vec<SubsetTable>,
}

impl TypicalityTester {
    pub fn new(p: &JointPmf) -> Self {
        let num_vars = p.num_vars();
        let mut tables = Vec::with_capacity(1 << num_vars);
        tables.push(SubsetTable {
            projection: vec![0; num_vars],
            neg_ln: vec![0.0],
            entropy: 0.0,
        });
        for bits in 1..(1u32 << num_vars) {
            let m = p.marginal_any(VarSet::from_bits(bits));
            tables.push(SubsetTable {
                projection: m.projection().to_vec(),
                neg_ln: m
                    .probs()
                    .iter()
                    .map(|&x| if x > 0.0 { -x.ln() } else { f64::INFINITY })
                    .collect(),
                entropy: m.entropy(),
            });
        }
        TypicalityTester { num_vars, tables }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn entropy(&self, set: VarSet) -> f64 {
        self.tables[set.bits() as usize].entropy
    }

    /// `-ln p(u_T)` for the projection of a full symbol tuple.
    pub fn neg_ln_prob(&self, set: VarSet, tuple: &[usize]) -> f64 {
        let t = &self.tables[set.bits() as usize];
        let idx: usize = set.iter().map(|v| tuple[v] * t.projection[v]).sum();
        t.neg_ln[idx]
    }

    /// `-(1/n) Σ_i ln p(u_{T,i})`, `+∞` if some position has probability 0.
    /// `seqs` holds one slice per variable; only members of `set` are read.
    pub fn rate(&self, seqs: &[&[usize]], set: VarSet) -> f64 {
        let t = &self.tables[set.bits() as usize];
        let members: Vec<(&[usize], usize)> = set
            .iter()
            .map(|v| (seqs[v], t.projection[v]))
            .collect();
        let n = members[0].0.len();
        let mut total = 0.0;
        for i in 0..n {
            let idx: usize = members.iter().map(|(s, stride)| s[i] * stride).sum();
            total += t.neg_ln[idx];
        }
        total / n as f64
    }

    /// Whether `set`'s rate is within `δ` of its entropy.
    pub fn subset_ok(&self, seqs: &[&[usize]], set: VarSet, delta: f64) -> bool {
        let dev = (self.rate(seqs, set) - self.entropy(set)).abs();
        dev <= delta + TYPICALITY_SLACK
    }

    /// Typicality restricted to the nonempty subsets of `scope`, stopping
    /// at the first violation.
    pub fn is_typical_on(&self, seqs: &[&[usize]], scope: VarSet, delta: f64) -> bool {
        scope
            .nonempty_subsets()
            .all(|t| self.subset_ok(seqs, t, delta))
    }

    /// Full verdict over all nonempty subsets of all variables.
    pub fn verdict(&self, seqs: &[&[usize]], delta: f64) -> TypicalityVerdict {
        let mut per_subset = Vec::with_capacity((1 << self.num_vars) - 1);
        let mut worst = (VarSet::EMPTY, f64::NEG_INFINITY);
        for set in VarSet::all(self.num_vars).nonempty_subsets() {
            let empirical_rate = self.rate(seqs, set);
            let entropy = self.entropy(set);
            let deviation = (empirical_rate - entropy).abs();
            if deviation > worst.1 {
                worst = (set, deviation);
            }
            per_subset.push(SubsetRate {
                subset: set,
                empirical_rate,
                entropy,
                deviation,
            });
        }
        TypicalityVerdict {
            typical: worst.1 <= delta + TYPICALITY_SLACK,
            per_subset,
            worst_subset: worst.0,
        }
    }
}

/// Empirical log-likelihood rate of `U_T` in nats.
pub fn empirical_rate(seqs: &SequenceTuple, p: &JointPmf, set: VarSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySubset(set));
    }
    seqs.check_against(p, set)?;
    let m = p.marginal(set)?;
    let views = seqs.views();
    let n = seqs.n();
    let mut total = 0.0;
    for i in 0..n {
        let idx: usize = set.iter().map(|v| views[v][i] * m.projection()[v]).sum();
        let q = m.probs()[idx];
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        total -= q.ln();
    }
    Ok(total / n as f64)
}

/// Tests membership in the weakly typical set `A_δ^(n)` of `p`.
pub fn is_weakly_typical(seqs: &SequenceTuple, p: &JointPmf, delta: f64) -> Result<TypicalityVerdict> {
    seqs.check_against(p, p.all_vars())?;
    Ok(TypicalityTester::new(p).verdict(&seqs.views(), delta))
}

/// Typicality test on the variables `{0} ∪ S ∪ {k+1}` for a nonempty
/// codebook subset `S`. Sequences of the other codebooks are not needed.
pub fn projected_typical(seqs: &SequenceTuple, p: &JointPmf, subset: VarSet, delta: f64) -> Result<bool> {
    if subset.is_empty() {
        return Err(Error::EmptySubset(subset));
    }
    if !subset.is_subset_of(VarSet::codebooks(p.k())) {
        return Err(Error::SubsetOutOfRange {
            set: subset,
            num_vars: p.num_vars(),
        });
    }
    let scope = subset.with(0).with(p.side());
    seqs.check_against(p, scope)?;
    Ok(TypicalityTester::new(p).is_typical_on(&seqs.views(), scope, delta))
}

/// Draws `n` i.i.d. tuples from `p`.
pub fn sample_sequences<R: Rng + ?Sized>(p: &JointPmf, n: usize, rng: &mut R) -> SequenceTuple {
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &x in p.probs() {
        acc += x;
        cdf.push(acc);
    }
    let last = p.probs().iter().rposition(|&x| x > 0.0).unwrap_or(0);
    let mut seqs = vec![Vec::with_capacity(n); p.num_vars()];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        for (v, s) in p.tuple(idx).into_iter().enumerate() {
            seqs[v].push(s);
        }
    }
    SequenceTuple::new(seqs).expect("n >= 1 and consistent lengths")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dsbs() -> JointPmf {
        JointPmf::from_fn(vec![1, 2, 2], |t| if t[1] == t[2] { 0.45 } else { 0.05 }).unwrap()
    }

    #[test]
    fn uniform_rate_is_ln2() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let s = SequenceTuple::new(vec![vec![0, 1, 1], vec![1, 1, 0], vec![0, 0, 0]]).unwrap();
        let r = empirical_rate(&s, &p, VarSet::single(1)).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-15);
        let v = is_weakly_typical(&s, &p, 0.0).unwrap();
        assert!(v.typical);
        assert_eq!(v.per_subset.len(), 7);
    }

    #[test]
    fn zero_probability_symbol_gives_infinite_rate() {
        let p = JointPmf::from_table(vec![0.5, 0.0, 0.0, 0.5], vec![1, 2, 2]).unwrap();
        let s = SequenceTuple::new(vec![vec![0, 0], vec![0, 1], vec![0, 0]]).unwrap();
        let r = empirical_rate(&s, &p, VarSet::from_iter([1, 2])).unwrap();
        assert_eq!(r, f64::INFINITY);
        let v = is_weakly_typical(&s, &p, 1e6).unwrap();
        assert!(!v.typical);
        assert_eq!(v.worst_subset, VarSet::from_iter([1, 2]));
    }

    #[test]
    fn bernoulli_quarter_rate() {
        let p = JointPmf::from_table(vec![0.75, 0.25], vec![1, 2, 1]).unwrap();
        let s = SequenceTuple::new(vec![vec![0, 0], vec![1, 0], vec![0, 0]]).unwrap();
        let r = empirical_rate(&s, &p, VarSet::single(1)).unwrap();
        let expected = -0.5 * (0.25f64.ln() + 0.75f64.ln());
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.836988).abs() < 1e-6);
    }

    #[test]
    fn huge_delta_accepts_positive_tuple() {
        let p = dsbs();
        let s = SequenceTuple::new(vec![vec![0; 3], vec![0, 1, 1], vec![1, 1, 0]]).unwrap();
        assert!(is_weakly_typical(&s, &p, 1e9).unwrap().typical);
    }

    #[test]
    fn dsbs_draws_are_mostly_typical() {
        let p = dsbs();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tester = TypicalityTester::new(&p);
        let hits = (0..1000)
            .filter(|_| {
                let s = sample_sequences(&p, 100, &mut rng);
                tester.verdict(&s.views(), 0.2).typical
            })
            .count();
        assert!(hits >= 950, "{hits}");
    }

    #[test]
    fn projection_accepts_what_full_test_rejects() {
        // k = 2, U_0 constant, side variable constant; U_1 and U_2 are
        // individually uniform but U_2 = U_1 under p.
        let p = JointPmf::from_fn(vec![1, 2, 2, 1], |t| if t[1] == t[2] { 0.5 } else { 0.0 })
            .unwrap();
        let s = SequenceTuple::new(vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 0]]).unwrap();
        assert!(projected_typical(&s, &p, VarSet::single(1), 0.1).unwrap());
        assert!(projected_typical(&s, &p, VarSet::single(2), 0.1).unwrap());
        assert!(!is_weakly_typical(&s, &p, 0.1).unwrap().typical);
        assert!(!projected_typical(&s, &p, VarSet::from_iter([1, 2]), 0.1).unwrap());

        // Only U_0, U_1, U_3 needed for the {1} projection.
        let part = SequenceTuple::partial(4, vec![(0, vec![0, 0]), (1, vec![0, 1]), (3, vec![0, 0])])
            .unwrap();
        assert!(projected_typical(&part, &p, VarSet::single(1), 0.1).unwrap());
        assert!(projected_typical(&part, &p, VarSet::single(2), 0.1).is_err());
    }

    #[test]
    fn rejects_malformed_sequences() {
        let p = dsbs();
        assert!(SequenceTuple::new(vec![vec![0], vec![0, 1], vec![0]]).is_err());
        let s = SequenceTuple::new(vec![vec![0], vec![2], vec![0]]).unwrap();
        assert!(is_weakly_typical(&s, &p, 0.1).is_err());
    }
}
