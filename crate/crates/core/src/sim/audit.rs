//! Exact check that a stream layout produces codewords with the intended
//! pairwise law.
//!
//! For every pair of index tuples `m, m'` and every `(u_0, u_{k+1})`, the
//! joint law of `(U_S(m), U_S(m'))` given `(u_0, u_{k+1})` must equal
//! `∏_j p(u_j|u_0) ∏_{j∉S} p(u'_j|u_0) [u_S = u'_S]` where `S` holds the
//! codebooks with `m_j = m'_j`. At block length 1 each stream contributes a
//! single uniform draw, so the joint law of everything reading a stream is
//! a finite set of intervals and can be enumerated exactly.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::dist::{advance, GenerationLaw, JointPmf};
use crate::error::{Error, Result};

use super::generator::{inverse_cdf, Role, StreamLayout};

const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditWorst {
    pub u0: usize,
    pub side: usize,
    pub m: Vec<u64>,
    pub m_prime: Vec<u64>,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub max_abs_error: f64,
    /// Conditioning pairs `(u_0, u_{k+1})` with positive mass.
    pub pairs_checked: usize,
    /// Ordered index-tuple pairs `(m, m')`.
    pub patterns: usize,
    pub worst: Option<AuditWorst>,
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// The row a role draws from once `u_0` is known.
fn role_row(law: &GenerationLaw, role: Role, u0: usize) -> &[f64] {
    match role {
        Role::Common => law.common(),
        Role::Side => law.row(law.k() + 1, u0).expect("u0 has mass"),
        Role::Codeword { j, .. } => law.row(j, u0).expect("u0 has mass"),
        Role::Outcome => unreachable!("outcome draws are not audited"),
    }
}

/// Joint law of `roles` (common first) restricted to `U_0 = u0`, keyed by
/// the symbols of `roles[1..]`.
fn joint_given_common(
    law: &GenerationLaw,
    layout: &dyn StreamLayout,
    roles: &[Role],
    u0: usize,
) -> HashMap<Vec<usize>, f64> {
    let mut streams: BTreeMap<Role, Vec<usize>> = BTreeMap::new();
    for (i, &r) in roles.iter().enumerate() {
        streams.entry(layout.stream(r)).or_default().push(i);
    }
    let common_cdf = cumulative(law.common());
    let common_lo = if u0 == 0 { 0.0 } else { common_cdf[u0 - 1] };
    let common_hi = common_cdf[u0];

    // Per stream: list of (symbols of its readers, cell width).
    let mut per_stream: Vec<(Vec<usize>, Vec<(Vec<usize>, f64)>)> = Vec::new();
    for readers in streams.values() {
        let (lo, hi) = if readers.contains(&0) { (common_lo, common_hi) } else { (0.0, 1.0) };
        let mut cuts = vec![lo, hi];
        for &i in readers {
            cuts.extend(cumulative(role_row(law, roles[i], u0)).into_iter().filter(|&c| c > lo && c < hi));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let cells = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let syms = readers.iter().map(|&i| inverse_cdf(role_row(law, roles[i], u0), mid)).collect();
                (syms, w[1] - w[0])
            })
            .collect();
        per_stream.push((readers.clone(), cells));
    }

    let lens: Vec<usize> = per_stream.iter().map(|(_, c)| c.len()).collect();
    let mut pos = vec![0usize; lens.len()];
    let mut out = HashMap::new();
    let mut symbols = vec![0usize; roles.len()];
    loop {
        let mut w = 1.0;
        for ((readers, cells), &i) in per_stream.iter().zip(&pos) {
            let (syms, width) = &cells[i];
            w *= width;
            for (&r, &s) in readers.iter().zip(syms) {
                symbols[r] = s;
            }
        }
        *out.entry(symbols[1..].to_vec()).or_insert(0.0) += w;
        if !advance(&mut pos, &lens) {
            return out;
        }
    }
}

/// Checks the pairwise codeword law produced by `layout` against the
/// generation law of `p`, for all index pairs with the given codebook sizes.
pub fn assumption_audit(p: &JointPmf, counts: &[u64], layout: &dyn StreamLayout, guard: f64) -> Result<AuditReport> {
    let k = p.k();
    if counts.len() != k {
        return Err(Error::Unsupported(format!("{} codebook sizes for k = {k}", counts.len())));
    }
    let law = p.generation_law();
    let sizes = p.sizes();
    let tuples: f64 = counts.iter().map(|&m| m as f64).product();
    let cells: f64 = sizes[0] as f64 * sizes[k + 1] as f64 * sizes[1..=k].iter().map(|&a| (a * a) as f64).product::<f64>();
    let states = tuples * tuples * cells;
    if states > guard {
        return Err(Error::GuardExceeded { states, guard });
    }
    if counts.contains(&0) {
        return Ok(AuditReport { passed: true, max_abs_error: 0.0, pairs_checked: 0, patterns: 0, worst: None });
    }

    let index_sizes: Vec<usize> = counts.iter().map(|&m| m as usize).collect();
    let mut index_tuples = Vec::new();
    let mut pos = vec![0usize; k];
    loop {
        index_tuples.push(pos.iter().map(|&i| i as u64 + 1).collect::<Vec<u64>>());
        if !advance(&mut pos, &index_sizes) {
            break;
        }
    }

    let mut report = AuditReport {
        passed: true,
        max_abs_error: 0.0,
        pairs_checked: 0,
        patterns: index_tuples.len() * index_tuples.len(),
        worst: None,
    };
    // Symbol space of (u_side, u_1..u_k, u'_1..u'_k).
    let mut sym_sizes = vec![sizes[k + 1]];
    sym_sizes.extend_from_slice(&sizes[1..=k]);
    sym_sizes.extend_from_slice(&sizes[1..=k]);

    for u0 in (0..sizes[0]).filter(|&u| law.common()[u] > 0.0) {
        let side_row = law.row(k + 1, u0).expect("u0 has mass");
        report.pairs_checked += side_row.iter().filter(|&&w| w > 0.0).count();
        for m in &index_tuples {
            for mp in &index_tuples {
                let mut roles = vec![Role::Common, Role::Side];
                roles.extend((1..=k).map(|j| Role::Codeword { j, m: m[j - 1] }));
                roles.extend((1..=k).map(|j| Role::Codeword { j, m: mp[j - 1] }));
                let joint = joint_given_common(&law, layout, &roles, u0);
                let mut side_mass = vec![0.0; sizes[k + 1]];
                for (syms, w) in &joint {
                    side_mass[syms[0]] += w;
                }
                let mut syms = vec![0usize; 1 + 2 * k];
                loop {
                    let us = syms[0];
                    if side_row[us] > 0.0 {
                        let actual = joint.get(&syms).copied().unwrap_or(0.0) / side_mass[us].max(f64::MIN_POSITIVE);
                        let mut expected = 1.0;
                        for j in 1..=k {
                            let (a, b) = (syms[j], syms[k + j]);
                            let row = law.row(j, u0).expect("u0 has mass");
                            expected *= row[a];
                            if m[j - 1] == mp[j - 1] {
                                if a != b {
                                    expected = 0.0;
                                }
                            } else {
                                expected *= row[b];
                            }
                        }
                        let err = (actual - expected).abs();
                        if err > report.max_abs_error {
                            report.max_abs_error = err;
                            report.worst = Some(AuditWorst {
                                u0,
                                side: us,
                                m: m.clone(),
                                m_prime: mp.clone(),
                                error: err,
                            });
                        }
                    }
                    if !advance(&mut syms, &sym_sizes) {
                        break;
                    }
                }
            }
        }
    }
    report.passed = report.max_abs_error <= AUDIT_TOLERANCE;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::generator::{AliasedCodewords, IndependentStreams};

    fn law() -> JointPmf {
        JointPmf::from_fn(vec![2, 2, 3, 2], |t| {
            let base = [0.4, 0.6][t[0]] * [0.3, 0.7][t[1]] * [0.2, 0.3, 0.5][t[2]];
            base * if t[3] == (t[1] + t[2]) % 2 { 0.8 } else { 0.2 }
        })
        .unwrap()
    }

    #[test]
    fn independent_layout_passes() {
        let r = assumption_audit(&law(), &[2, 2], &IndependentStreams, 1e7).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.patterns, 16);
        assert_eq!(r.pairs_checked, 4);
    }

    #[test]
    fn aliased_layout_fails() {
        let r = assumption_audit(&law(), &[2, 2], &AliasedCodewords, 1e7).unwrap();
        assert!(!r.passed);
        let w = r.worst.unwrap();
        assert!(w.m.iter().zip(&w.m_prime).any(|(a, b)| a != b));
    }
}
