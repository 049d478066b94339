use crate::dist::{JointPmf, VarSet};
use crate::typicality::TypicalityTester;

use super::generator::Instance;

/// Returns the lexicographically first `m` (1-based) whose codeword tuple is
/// weakly `δ`-typical together with the common and side sequences.
pub fn search_typical_tuple(inst: &Instance, p: &JointPmf, delta: f64) -> Option<Vec<u64>> {
    search_with(inst, &TypicalityTester::new(p), delta)
}

/// Same as [`search_typical_tuple`] with prebuilt marginal tables.
///
/// Subsets that involve no codeword are checked once, subsets involving a
/// single codebook filter that codebook up front, and only the remaining
/// cross-codebook subsets are evaluated per candidate tuple.
pub fn search_with(inst: &Instance, tester: &TypicalityTester, delta: f64) -> Option<Vec<u64>> {
    let k = inst.k();
    let side = k + 1;
    if inst.codebooks.iter().any(Vec::is_empty) {
        return None;
    }
    let mut views: Vec<&[usize]> = vec![&[]; k + 2];
    views[0] = &inst.common;
    views[side] = &inst.side;

    let fixed = VarSet::from_iter([0, side]);
    if !tester.is_typical_on(&views, fixed, delta) {
        return None;
    }

    let mut survivors: Vec<Vec<u64>> = Vec::with_capacity(k);
    for j in 1..=k {
        let scope = fixed.with(j);
        let single: Vec<VarSet> = scope
            .nonempty_subsets()
            .filter(|t| t.contains(j))
            .collect();
        let mut keep = Vec::new();
        for (idx, cw) in inst.codebooks[j - 1].iter().enumerate() {
            views[j] = cw;
            if single.iter().all(|&t| tester.subset_ok(&views, t, delta)) {
                keep.push(idx as u64 + 1);
            }
        }
        if keep.is_empty() {
            return None;
        }
        survivors.push(keep);
    }

    let codebooks = VarSet::codebooks(k);
    let cross: Vec<VarSet> = VarSet::all(k + 2)
        .nonempty_subsets()
        .filter(|t| t.intersection(codebooks).len() >= 2)
        .collect();
    let lens: Vec<usize> = survivors.iter().map(Vec::len).collect();
    let mut pos = vec![0usize; k];
    loop {
        for j in 1..=k {
            views[j] = inst.codeword(j, survivors[j - 1][pos[j - 1]]);
        }
        if cross.iter().all(|&t| tester.subset_ok(&views, t, delta)) {
            return Some(pos.iter().zip(&survivors).map(|(&i, s)| s[i]).collect());
        }
        if !crate::dist::advance(&mut pos, &lens) {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::generator::TrialSeed;

    fn instance(common: Vec<usize>, side: Vec<usize>, codebooks: Vec<Vec<Vec<usize>>>) -> Instance {
        Instance {
            n: common.len(),
            seed: TrialSeed::from(0),
            common,
            side,
            codebooks,
        }
    }

    #[test]
    fn empty_codebook_has_no_witness() {
        let p = JointPmf::from_table(vec![0.0625; 16], vec![2, 2, 2, 2]).unwrap();
        let inst = instance(vec![0], vec![0], vec![vec![vec![1]], vec![]]);
        assert_eq!(search_typical_tuple(&inst, &p, 1e9), None);
    }

    #[test]
    fn huge_delta_takes_first_candidate() {
        let p = JointPmf::from_fn(vec![2, 2, 2, 2], |t| 0.0625 + if t[1] == t[2] { 0.01 } else { -0.01 })
            .unwrap();
        let inst = instance(
            vec![0, 1],
            vec![1, 1],
            vec![vec![vec![0, 1], vec![1, 1]], vec![vec![1, 0], vec![0, 0]]],
        );
        assert_eq!(search_typical_tuple(&inst, &p, 1e9), Some(vec![1, 1]));
    }

    #[test]
    fn finds_the_only_typical_tuple() {
        // U_0, U_3 constant; U_2 = U_1 under p, each uniform. Only a pair of
        // identical codewords is typical at small δ.
        let p = JointPmf::from_fn(vec![1, 2, 2, 1], |t| if t[1] == t[2] { 0.5 } else { 0.0 })
            .unwrap();
        let inst = instance(
            vec![0, 0],
            vec![0, 0],
            vec![
                vec![vec![0, 1], vec![1, 0], vec![0, 0]],
                vec![vec![1, 0], vec![1, 1]],
            ],
        );
        // Exhaustive check of all 6 tuples.
        let tester = TypicalityTester::new(&p);
        let mut typical = Vec::new();
        for m1 in 1..=3u64 {
            for m2 in 1..=2u64 {
                let views: Vec<&[usize]> = vec![
                    &inst.common,
                    inst.codeword(1, m1),
                    inst.codeword(2, m2),
                    &inst.side,
                ];
                if tester.verdict(&views, 0.01).typical {
                    typical.push(vec![m1, m2]);
                }
            }
        }
        assert_eq!(typical, vec![vec![2, 1]]);
        assert_eq!(search_typical_tuple(&inst, &p, 0.01), Some(vec![2, 1]));
    }
}
