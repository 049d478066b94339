//! Exact covering-failure probability `P{Z = 0}` by enumeration of the
//! codebooks.
//!
//! Works on an explicit block distribution `p^n` whose symbols are whole
//! sequences. Given `(u_0, u_{k+1})`, codebooks `1..k-1` are enumerated
//! codeword by codeword; only the set of symbols each one contains matters.
//! The last codebook is handled in closed form: if `w` is the mass of the
//! symbols completing a tuple in `F`, it misses with probability
//! `(1 - w)^{M_k}`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bounds::{typical_set, EventSet};
use crate::dist::{advance, JointPmf, VarSet};
use crate::error::{Error, Result};

type Presence = BTreeMap<Vec<usize>, f64>;

/// Distribution of the set of distinct symbols among `m` i.i.d. draws from
/// `row`, restricted to its support.
fn presence_distribution(row: &[f64], m: u64) -> Presence {
    let support: Vec<usize> = (0..row.len()).filter(|&a| row[a] > 0.0).collect();
    let mut out = Presence::new();
    let sizes = vec![support.len(); m as usize];
    let mut pos = vec![0usize; m as usize];
    loop {
        let mut w = 1.0;
        let mut set: Vec<usize> = pos.iter().map(|&i| support[i]).collect();
        for &a in &set {
            w *= row[a];
        }
        set.sort_unstable();
        set.dedup();
        *out.entry(set).or_insert(0.0) += w;
        if !advance(&mut pos, &sizes) {
            return out;
        }
    }
}

fn support_len(row: &[f64]) -> f64 {
    row.iter().filter(|&&w| w > 0.0).count() as f64
}

/// `P{Z = 0}`, the probability that no index tuple `m` puts
/// `(U_0, U_1(m_1), ..., U_k(m_k), U_{k+1})` in `F`, for the block
/// distribution `block` with `counts[j-1]` codewords in codebook `j`.
///
/// The enumeration visits `Σ_{(u_0, u_{k+1})} ∏_{j<k} |supp p(·|u_0)|^{M_j}`
/// codebook states; more than `guard` is an error.
pub fn exact_oracle(block: &JointPmf, counts: &[u64], event: &EventSet, guard: f64) -> Result<f64> {
    let k = block.k();
    if counts.len() != k {
        return Err(Error::Unsupported(format!("{} codebook sizes for k = {k}", counts.len())));
    }
    event.check_shape(block)?;
    if counts.contains(&0) {
        return Ok(1.0);
    }
    let side = block.side();
    let law = block.generation_law();
    let outer = block.marginal(VarSet::from_iter([0, side]))?;
    let pairs: Vec<(usize, usize, f64)> = outer
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i / block.sizes()[side], i % block.sizes()[side], w))
        .collect();

    let mut states = 0.0;
    for &(u0, _, _) in &pairs {
        states += (1..k)
            .map(|j| support_len(law.row(j, u0).expect("u0 has mass")).powf(counts[j - 1] as f64))
            .product::<f64>();
    }
    if states > guard {
        return Err(Error::GuardExceeded { states, guard });
    }

    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|&(u0, us, w)| w * miss_given(block, &law, counts, event, u0, us))
        .collect();
    Ok(terms.iter().sum::<f64>().clamp(0.0, 1.0))
}

fn miss_given(
    block: &JointPmf,
    law: &crate::dist::GenerationLaw,
    counts: &[u64],
    event: &EventSet,
    u0: usize,
    us: usize,
) -> f64 {
    let k = block.k();
    let last = law.row(k, u0).expect("u0 has mass");
    let presences: Vec<Vec<(Vec<usize>, f64)>> = (1..k)
        .map(|j| {
            presence_distribution(law.row(j, u0).expect("u0 has mass"), counts[j - 1])
                .into_iter()
                .collect()
        })
        .collect();
    let lens: Vec<usize> = presences.iter().map(Vec::len).collect();
    let mut pos = vec![0usize; k - 1];
    let mut tuple = vec![0usize; k + 2];
    tuple[0] = u0;
    tuple[k + 1] = us;
    let mut total = 0.0;
    loop {
        let weight: f64 = pos.iter().zip(&presences).map(|(&i, p)| p[i].1).product();
        let sets: Vec<&[usize]> = pos.iter().zip(&presences).map(|(&i, p)| p[i].0.as_slice()).collect();
        let good: f64 = (0..last.len())
            .filter(|&a| last[a] > 0.0)
            .filter(|&a| {
                tuple[k] = a;
                completes(block, event, &sets, &mut tuple)
            })
            .map(|a| last[a])
            .sum();
        let miss = (counts[k - 1] as f64 * (-good.min(1.0)).ln_1p()).exp();
        total += weight * miss;
        if !advance(&mut pos, &lens) {
            return total;
        }
    }
}

/// Whether some choice of symbols from `sets` for codebooks `1..k-1`
/// puts `tuple` in the event.
fn completes(block: &JointPmf, event: &EventSet, sets: &[&[usize]], tuple: &mut [usize]) -> bool {
    if sets.is_empty() {
        return event.contains_index(block.index(tuple));
    }
    let lens: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let mut pos = vec![0usize; sets.len()];
    loop {
        for (j, (&i, s)) in pos.iter().zip(sets).enumerate() {
            tuple[j + 1] = s[i];
        }
        if event.contains_index(block.index(tuple)) {
            return true;
        }
        if !advance(&mut pos, &lens) {
            return false;
        }
    }
}

/// [`exact_oracle`] for the `δ`-typical set of `p^n`.
pub fn typical_set_oracle(p: &JointPmf, n: usize, counts: &[u64], delta: f64, guard: f64) -> Result<f64> {
    let (block, event) = typical_set(p, n, delta)?;
    exact_oracle(&block, counts, &event, guard)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn independent_bits() -> JointPmf {
        JointPmf::from_table(vec![1.0 / 32.0; 32], vec![1, 2, 2, 8]).unwrap()
    }

    #[test]
    fn presence_of_two_fair_draws() {
        let d = presence_distribution(&[0.5, 0.5], 2);
        assert_eq!(d[&vec![0]], 0.25);
        assert_eq!(d[&vec![1]], 0.25);
        assert_eq!(d[&vec![0, 1]], 0.5);
    }

    #[test]
    fn single_point_event() {
        // F = {u_1 = u_2 = 0}: each codebook must contain a 0, 3/4 each.
        let p = independent_bits();
        let f = EventSet::from_predicate(&p, |t| t[1] == 0 && t[2] == 0);
        let v = exact_oracle(&p, &[2, 2], &f, 1e6).unwrap();
        assert!((v - 0.4375).abs() < 1e-15, "{v}");
    }

    #[test]
    fn equality_event() {
        // F = {u_1 = u_2}: fails only when the codebooks are constant and
        // different, probability 2 * (1/4)^2.
        let p = independent_bits();
        let f = EventSet::from_predicate(&p, |t| t[1] == t[2]);
        let v = exact_oracle(&p, &[2, 2], &f, 1e6).unwrap();
        assert!((v - 0.125).abs() < 1e-15, "{v}");
    }

    #[test]
    fn single_codebook_matching_bits() {
        let p = JointPmf::from_table(vec![0.25; 4], vec![1, 2, 2]).unwrap();
        let f = EventSet::from_predicate(&p, |t| t[1] == t[2]);
        assert_eq!(exact_oracle(&p, &[2], &f, 1e6).unwrap(), 0.25);
        assert_eq!(exact_oracle(&p, &[1], &f, 1e6).unwrap(), 0.5);
    }

    #[test]
    fn full_and_empty_events() {
        let p = independent_bits();
        assert_eq!(exact_oracle(&p, &[1, 3], &EventSet::full(&p), 1e6).unwrap(), 0.0);
        assert_eq!(exact_oracle(&p, &[1, 3], &EventSet::empty(&p), 1e6).unwrap(), 1.0);
        assert_eq!(exact_oracle(&p, &[0, 3], &EventSet::full(&p), 1e6).unwrap(), 1.0);
    }

    #[test]
    fn guard_is_enforced() {
        let p = independent_bits();
        let err = exact_oracle(&p, &[30, 1], &EventSet::full(&p), 1e3).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }));
    }
}
