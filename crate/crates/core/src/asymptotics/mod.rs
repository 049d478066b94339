//! Asymptotic constants, rate-region tests and atypicality exponents.
//!
//! With `F = A_δ^(n)` the log-likelihood ratios are bracketed within
//! `2n(|S|+1)δ` of `n (Σ_{j∈S} H(U_j|U_0) - H(U_S | ·))`, which gives the
//! constants below. The direct condition for a nonempty proper `S` is
//! `Σ_{j∈S} R_j > Σ_{j∈S} H(U_j|U_0) - H(U_S|U_0,U_{k+1}) + (8k - 2|S| + 10)δ`
//! and for `S = [k]` the slack is `2(k+1)δ`. The converse slack is
//! `-2(|S|+1)δ` for every `S`.

mod chernoff;

pub use chernoff::{
    chernoff_exponent, golden_section_max, log_mgf, ChernoffExponent, ExponentKind, Tail, T_MAX,
};

use serde::Serialize;

use crate::bounds::SubsetConstants;
use crate::dist::{JointPmf, VarSet};
use crate::error::{Error, Result};

/// Nonnegative rates in nats per symbol, one per codebook.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RateTuple(Vec<f64>);

impl RateTuple {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(&r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Unsupported(format!("rate {r} must be finite and nonnegative")));
        }
        Ok(RateTuple(rates))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn sum_over(&self, subset: VarSet) -> f64 {
        subset.iter().map(|j| self.0[j - 1]).sum()
    }
}

/// `Σ_{j∈S} H(U_j | U_0) - H(U_S | U_0, U_{k+1})`.
pub fn subset_information(p: &JointPmf, subset: VarSet) -> Result<f64> {
    let sum: f64 = subset
        .iter()
        .map(|j| p.cond_entropy(VarSet::single(j), VarSet::single(0)))
        .sum::<Result<f64>>()?;
    let joint = p.cond_entropy(subset, VarSet::from_iter([0, p.side()]))?;
    Ok(sum - joint)
}

/// The constants that are admissible for `F = A_δ^(n)`.
pub fn asymptotic_constants(p: &JointPmf, n: usize, delta: f64) -> Result<SubsetConstants> {
    if n == 0 {
        return Err(Error::NonPositive(0.0));
    }
    if !(delta >= 0.0) {
        return Err(Error::Unsupported(format!("delta {delta} must be nonnegative")));
    }
    let k = p.k();
    let nf = n as f64;
    let codebooks = VarSet::codebooks(k);
    let common_side = VarSet::from_iter([0, p.side()]);
    let h_given_common: Vec<f64> = (1..=k)
        .map(|j| p.cond_entropy(VarSet::single(j), VarSet::single(0)))
        .collect::<Result<_>>()?;
    let sum_h = |s: VarSet| s.iter().map(|j| h_given_common[j - 1]).sum::<f64>();

    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for s in codebooks.nonempty_subsets() {
        let slack = 2.0 * (s.len() as f64 + 1.0) * delta;
        let h_s = p.cond_entropy(s, common_side)?;
        alpha.push(nf * (sum_h(s) - h_s - slack));
        let h_s_rest = p.cond_entropy(s, common_side.union(codebooks.minus(s)))?;
        beta.push(nf * (sum_h(s) - h_s_rest - slack));
    }
    let gamma = nf
        * (sum_h(codebooks) - p.cond_entropy(codebooks, common_side)?
            + 2.0 * (k as f64 + 1.0) * delta);
    Ok(SubsetConstants::new(k, alpha, beta, gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSlack {
    pub subset: VarSet,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub satisfied: bool,
    pub per_subset: Vec<SubsetSlack>,
    pub binding_subset: VarSet,
}

fn region_check(
    p: &JointPmf,
    rates: &RateTuple,
    rhs_slack: impl Fn(VarSet) -> f64,
    strict: bool,
) -> Result<RegionVerdict> {
    let k = p.k();
    if rates.k() != k {
        return Err(Error::Unsupported(format!("{} rates for k = {k}", rates.k())));
    }
    let mut per_subset = Vec::with_capacity((1 << k) - 1);
    for s in VarSet::codebooks(k).nonempty_subsets() {
        let lhs = rates.sum_over(s);
        let rhs = subset_information(p, s)? + rhs_slack(s);
        per_subset.push(SubsetSlack {
            subset: s,
            lhs,
            rhs,
            slack: lhs - rhs,
        });
    }
    let binding = per_subset
        .iter()
        .fold(&per_subset[0], |b, x| if x.slack < b.slack { x } else { b });
    let binding_subset = binding.subset;
    let satisfied = per_subset
        .iter()
        .all(|x| if strict { x.slack > 0.0 } else { x.slack >= 0.0 });
    Ok(RegionVerdict {
        satisfied,
        per_subset,
        binding_subset,
    })
}

/// Coefficient of `δ` in the direct condition for `S`.
pub fn direct_slack_coefficient(k: usize, subset: VarSet) -> f64 {
    if subset == VarSet::codebooks(k) {
        2.0 * (k as f64 + 1.0)
    } else {
        8.0 * k as f64 - 2.0 * subset.len() as f64 + 10.0
    }
}

/// Sufficient condition for covering with probability tending to one.
pub fn direct_check(p: &JointPmf, rates: &RateTuple, delta: f64) -> Result<RegionVerdict> {
    let k = p.k();
    region_check(p, rates, |s| direct_slack_coefficient(k, s) * delta, true)
}

/// Necessary condition for covering with probability tending to one.
pub fn converse_check(p: &JointPmf, rates: &RateTuple, delta: f64) -> Result<RegionVerdict> {
    region_check(p, rates, |s| -2.0 * (s.len() as f64 + 1.0) * delta, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub rates: Vec<f64>,
    pub direct: bool,
    pub converse: bool,
}

/// Evaluates both checks on the Cartesian product of per-codebook rate
/// grids; rows are in lexicographic order (first codebook slowest).
pub fn boundary_scan(p: &JointPmf, delta: f64, grid: &[Vec<f64>]) -> Result<Vec<ScanRow>> {
    if grid.len() != p.k() {
        return Err(Error::Unsupported(format!("{} grid axes for k = {}", grid.len(), p.k())));
    }
    if grid.iter().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::new();
    let mut pos = vec![0usize; grid.len()];
    let lens: Vec<usize> = grid.iter().map(Vec::len).collect();
    loop {
        let rates: Vec<f64> = pos.iter().zip(grid).map(|(&i, axis)| axis[i]).collect();
        let r = RateTuple::new(rates.clone())?;
        rows.push(ScanRow {
            direct: direct_check(p, &r, delta)?.satisfied,
            converse: converse_check(p, &r, delta)?.satisfied,
            rates,
        });
        if !crate::dist::advance(&mut pos, &lens) {
            break;
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetExponent {
    pub subset: VarSet,
    pub entropy: f64,
    pub upper: ChernoffExponent,
    pub lower: ChernoffExponent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub epsilon: f64,
    pub scope: VarSet,
    pub per_subset: Vec<SubsetExponent>,
    /// Minimum over subsets and tails; `+∞` when every tail is flagged.
    pub overall: f64,
    /// Union-bound constant `2 (2^m - 1)` for `m` variables in scope.
    pub prefactor: f64,
}

impl ExponentReport {
    /// `prefactor · e^{-n I(ε)}`.
    pub fn bound(&self, n: usize) -> f64 {
        if n == 0 {
            return self.prefactor;
        }
        if self.overall == f64::INFINITY {
            return 0.0;
        }
        self.prefactor * (-(n as f64) * self.overall).exp()
    }
}

/// Chernoff exponents of every nonempty subset of `scope`.
pub fn exponent_report(p: &JointPmf, scope: VarSet, epsilon: f64) -> Result<ExponentReport> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositive(epsilon));
    }
    if scope.is_empty() {
        return Err(Error::EmptySubset(scope));
    }
    let mut per_subset = Vec::new();
    let mut overall = f64::INFINITY;
    for s in scope.nonempty_subsets() {
        let upper = chernoff_exponent(p, s, epsilon, Tail::Upper)?;
        let lower = chernoff_exponent(p, s, epsilon, Tail::Lower)?;
        overall = overall.min(upper.effective()).min(lower.effective());
        per_subset.push(SubsetExponent {
            subset: s,
            entropy: p.entropy(s)?,
            upper,
            lower,
        });
    }
    let m = scope.len() as i32;
    Ok(ExponentReport {
        epsilon,
        scope,
        per_subset,
        overall,
        prefactor: 2.0 * (2f64.powi(m) - 1.0),
    })
}

/// Upper bound on `P{not weakly ε-typical}` at blocklength `n`, over all
/// `k + 2` variables.
pub fn atypicality_bound(p: &JointPmf, epsilon: f64, n: usize) -> Result<f64> {
    Ok(exponent_report(p, p.all_vars(), epsilon)?.bound(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub epsilon: f64,
    pub exponent: f64,
    /// Set when the exponent is infinite or `e^{-nI/2}` underflows and the
    /// smallest positive double is returned instead.
    pub flagged: bool,
}

/// `ε_n = min(1/2, e^{-n I(δ) / 2})`, so that `P{(A_δ^(n))^c} / ε_n` still
/// decays at rate `I(δ)/2`.
pub fn epsilon_schedule(p: &JointPmf, delta: f64, n: usize) -> Result<EpsilonSchedule> {
    let report = exponent_report(p, p.all_vars(), delta)?;
    let exponent = report.overall;
    if exponent <= 0.0 {
        return Err(Error::DegenerateExponent);
    }
    if n == 0 {
        return Ok(EpsilonSchedule {
            epsilon: 0.5,
            exponent,
            flagged: false,
        });
    }
    let raw = (-(n as f64) * exponent / 2.0).exp();
    if raw == 0.0 {
        return Ok(EpsilonSchedule {
            epsilon: f64::MIN_POSITIVE,
            exponent,
            flagged: true,
        });
    }
    Ok(EpsilonSchedule {
        epsilon: raw.min(0.5),
        exponent,
        flagged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs(cross: f64) -> JointPmf {
        JointPmf::from_fn(vec![1, 2, 2], |t| {
            if t[1] == t[2] {
                (1.0 - cross) / 2.0
            } else {
                cross / 2.0
            }
        })
        .unwrap()
    }

    fn independent() -> JointPmf {
        JointPmf::from_fn(vec![2, 2, 3, 2], |t| {
            [0.4, 0.6][t[0]] * [0.3, 0.7][t[1]] * [0.2, 0.5, 0.3][t[2]] * [0.9, 0.1][t[3]]
        })
        .unwrap()
    }

    #[test]
    fn independent_constants_are_pure_slack() {
        let p = independent();
        let (n, delta) = (10, 0.01);
        let c = asymptotic_constants(&p, n, delta).unwrap();
        for e in c.entries() {
            let want = -2.0 * n as f64 * (e.subset.len() as f64 + 1.0) * delta;
            assert!((e.alpha - want).abs() < 1e-12);
        }
        assert!((c.gamma() - 2.0 * 10.0 * 3.0 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn k1_alpha_is_mutual_information() {
        let p = dsbs(0.1);
        let c = asymptotic_constants(&p, 7, 0.0).unwrap();
        let i = p
            .mutual_information(VarSet::single(1), VarSet::single(2), VarSet::EMPTY)
            .unwrap();
        assert!((c.alpha(VarSet::single(1)) - 7.0 * i).abs() < 1e-12);
        assert!((i - 0.368064).abs() < 1e-6, "{i}");
        let c = asymptotic_constants(&p, 100, 0.01).unwrap();
        assert!((c.alpha(VarSet::single(1)) - 100.0 * (i - 0.04)).abs() < 1e-10);
    }

    #[test]
    fn k1_thresholds() {
        let p = dsbs(0.1);
        let i = subset_information(&p, VarSet::single(1)).unwrap();
        let d = direct_check(&p, &RateTuple::new(vec![i + 1e-9]).unwrap(), 0.0).unwrap();
        assert!(d.satisfied);
        let d = direct_check(&p, &RateTuple::new(vec![i - 1e-9]).unwrap(), 0.0).unwrap();
        assert!(!d.satisfied);
        let delta = 0.02;
        let c = converse_check(&p, &RateTuple::new(vec![i - 4.0 * delta]).unwrap(), delta).unwrap();
        assert!(c.satisfied);
        assert!((c.per_subset[0].rhs - (i - 4.0 * delta)).abs() < 1e-15);
        let c = converse_check(&p, &RateTuple::new(vec![i - 4.0 * delta - 1e-9]).unwrap(), delta)
            .unwrap();
        assert!(!c.satisfied);
    }

    #[test]
    fn independent_law_any_positive_rate() {
        let p = independent();
        let r = RateTuple::new(vec![1e-6, 1e-6]).unwrap();
        assert!(direct_check(&p, &r, 0.0).unwrap().satisfied);
    }

    #[test]
    fn large_delta_passes_converse() {
        let p = dsbs(0.1);
        let r = RateTuple::new(vec![0.0]).unwrap();
        assert!(converse_check(&p, &r, 1.0).unwrap().satisfied);
    }

    #[test]
    fn scan_flips_once() {
        let p = dsbs(0.1);
        let grid: Vec<f64> = (0..41).map(|i| i as f64 * 0.02).collect();
        let rows = boundary_scan(&p, 0.0, &[grid]).unwrap();
        let flips = rows.windows(2).filter(|w| w[0].direct != w[1].direct).count();
        assert_eq!(flips, 1);
        let single = boundary_scan(&p, 0.0, &[vec![0.5]]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(boundary_scan(&p, 0.0, &[vec![]]), Err(Error::EmptyGrid));
    }

    #[test]
    fn atypicality_bound_edge_cases() {
        let uniform = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        assert_eq!(atypicality_bound(&uniform, 0.1, 10).unwrap(), 0.0);
        let p = dsbs(0.1);
        assert_eq!(atypicality_bound(&p, 0.1, 0).unwrap(), 2.0 * 7.0);
        assert!(atypicality_bound(&p, 0.0, 10).is_err());
    }

    #[test]
    fn schedule_edge_cases() {
        let p = dsbs(0.1);
        assert_eq!(epsilon_schedule(&p, 0.2, 0).unwrap().epsilon, 0.5);
        let uniform = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let s = epsilon_schedule(&uniform, 0.2, 10).unwrap();
        assert!(s.flagged);
        assert_eq!(s.epsilon, f64::MIN_POSITIVE);
    }

    #[test]
    fn schedule_ratio_decreases() {
        let p = dsbs(0.1);
        let ratios: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| {
                let e = epsilon_schedule(&p, 0.2, n).unwrap();
                atypicality_bound(&p, 0.2, n).unwrap() / e.epsilon
            })
            .collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
    }
}
