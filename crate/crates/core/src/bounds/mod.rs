//! One-shot bounds on `P{Z = 0}`, the probability that no codeword tuple
//! lands in the event set `F`.
//!
//! Given per-subset constants `α_S`, `β_S` and `γ` that bracket the
//! log-likelihood ratio `ln p(u_S | ·) / ∏_{j∈S} p(u_j | u_0)` on `F`:
//!
//! ```text
//! lower:      1 - min_S |M_S| e^{-α_S}
//! Chebyshev:  P{F^c}/ε + e^γ / ((1-ε)|M|)
//!               + Σ_{∅⊂S⊂[k]} e^{-α_S - 2β_{S^c} + 2γ} / ((1-ε)² |M_S|)
//! ```
//!
//! The Cauchy–Schwarz variant replaces the conditional Chebyshev term
//! `c = E[Z²]/E[Z]² - 1` by `1 - E[Z]²/E[Z²] = c / (1 + c)`, with the same
//! moment bounds and the same good/bad split.

mod event;

pub use event::{event_probability, good_set, typical_set, EventSet, GoodSet};

use serde::Serialize;

use crate::dist::{JointPmf, VarSet};
use crate::error::{Error, Result};

/// Codebook sizes `M_1, ..., M_k`, kept as logarithms so that sizes such as
/// `e^{nR}` for large `n` stay representable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodebookSizes {
    ln_sizes: Vec<f64>,
    exact: Option<Vec<u64>>,
}

/// Largest count kept exactly (integers up to 2^53 are exact in f64).
const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0;

impl CodebookSizes {
    pub fn from_counts(counts: &[u64]) -> Self {
        CodebookSizes {
            ln_sizes: counts.iter().map(|&m| (m as f64).ln()).collect(),
            exact: Some(counts.to_vec()),
        }
    }

    /// `M_j = ⌈e^{n R_j}⌉`.
    pub fn from_rates(rates: &[f64], n: usize) -> Result<Self> {
        let mut ln_sizes = Vec::with_capacity(rates.len());
        let mut exact = Some(Vec::with_capacity(rates.len()));
        for &r in rates {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Unsupported(format!("rate {r} must be finite and nonnegative")));
            }
            let x = n as f64 * r;
            let m = x.exp();
            if m < EXACT_LIMIT {
                // Shave the last ulp so that exact integers are not bumped up.
                let count = (m * (1.0 - 1e-14)).ceil().max(1.0);
                ln_sizes.push(count.ln());
                if let Some(e) = exact.as_mut() {
                    e.push(count as u64);
                }
            } else {
                ln_sizes.push(x);
                exact = None;
            }
        }
        Ok(CodebookSizes { ln_sizes, exact })
    }

    pub fn k(&self) -> usize {
        self.ln_sizes.len()
    }

    pub fn ln_size(&self, j: usize) -> f64 {
        self.ln_sizes[j - 1]
    }

    /// `ln |M_S| = Σ_{j∈S} ln M_j`, with `|M_∅| = 1`.
    pub fn ln_subset(&self, subset: VarSet) -> f64 {
        subset.iter().map(|j| self.ln_sizes[j - 1]).sum()
    }

    /// Exact counts when every `M_j` is at most 2^53.
    pub fn exact(&self) -> Option<&[u64]> {
        self.exact.as_deref()
    }

    pub fn any_empty(&self) -> bool {
        self.ln_sizes.contains(&f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetConstant {
    pub subset: VarSet,
    pub alpha: f64,
    pub beta: f64,
}

/// `α_S`, `β_S` for every nonempty codebook subset `S ⊆ [k]`, and `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetConstants {
    k: usize,
    entries: Vec<SubsetConstant>,
    gamma: f64,
}

impl SubsetConstants {
    /// `entries` are in increasing bitmask order of the subsets.
    pub fn new(k: usize, alpha: Vec<f64>, beta: Vec<f64>, gamma: f64) -> Self {
        let entries = VarSet::codebooks(k)
            .nonempty_subsets()
            .zip(alpha.into_iter().zip(beta))
            .map(|(subset, (alpha, beta))| SubsetConstant { subset, alpha, beta })
            .collect::<Vec<_>>();
        assert_eq!(entries.len(), (1 << k) - 1, "one alpha and beta per subset");
        SubsetConstants { k, entries, gamma }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn slot(subset: VarSet) -> usize {
        (subset.bits() >> 1) as usize - 1
    }

    pub fn alpha(&self, subset: VarSet) -> f64 {
        self.entries[Self::slot(subset)].alpha
    }

    pub fn beta(&self, subset: VarSet) -> f64 {
        self.entries[Self::slot(subset)].beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn entries(&self) -> &[SubsetConstant] {
        &self.entries
    }
}

/// Log-likelihood ratios on a (possibly n-fold) distribution.
struct RatioTables {
    p0: Vec<f64>,
    p0_side: Vec<f64>,
    /// `p(u_0, u_j)` for `j = 1..=k`, each indexed `u0 * |U_j| + u_j`.
    p0j: Vec<Vec<f64>>,
}

impl RatioTables {
    fn new(p: &JointPmf) -> Result<Self> {
        let side = p.side();
        Ok(RatioTables {
            p0: p.marginal(VarSet::single(0))?.probs().to_vec(),
            p0_side: p.marginal(VarSet::from_iter([0, side]))?.probs().to_vec(),
            p0j: (1..=p.k())
                .map(|j| Ok(p.marginal(VarSet::from_iter([0, j]))?.probs().to_vec()))
                .collect::<Result<_>>()?,
        })
    }

    /// `Σ_{j∈S} ln p(u_j | u_0)`.
    fn ln_product(&self, p: &JointPmf, t: &[usize], subset: VarSet) -> Result<f64> {
        let p0 = self.p0[t[0]];
        if p0 <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        let mut acc = 0.0;
        for j in subset.iter() {
            let pj = self.p0j[j - 1][t[0] * p.sizes()[j] + t[j]];
            if pj <= 0.0 {
                return Err(Error::ZeroDenominator);
            }
            acc += (pj / p0).ln();
        }
        Ok(acc)
    }

    fn ln_p0_side(&self, p: &JointPmf, t: &[usize]) -> Result<f64> {
        let q = self.p0_side[t[0] * p.sizes()[p.side()] + t[p.side()]];
        if q <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(q.ln())
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// The tightest admissible constants for `F`: `α_S` is the minimum of its
/// ratio over the projection `F_S`, `β_S` the minimum over `F` and `γ` the
/// maximum over `F`.
pub fn tightest_constants(p: &JointPmf, event: &EventSet) -> Result<SubsetConstants> {
    event.check_shape(p)?;
    if event.is_empty() {
        return Err(Error::EmptyEvent);
    }
    let k = p.k();
    let side = p.side();
    let tables = RatioTables::new(p)?;
    let codebooks = VarSet::codebooks(k);
    let members: Vec<Vec<usize>> = event.member_indices().map(|i| p.tuple(i)).collect();

    let mut gamma = f64::NEG_INFINITY;
    for t in &members {
        let num = ln_or_neg_inf(p.prob(t)) - tables.ln_p0_side(p, t)?;
        gamma = gamma.max(num - tables.ln_product(p, t, codebooks)?);
    }

    let mut alpha = Vec::with_capacity((1 << k) - 1);
    let mut beta = Vec::with_capacity((1 << k) - 1);
    for subset in codebooks.nonempty_subsets() {
        // α_S over the projection F_S: visit each projected tuple once.
        let proj_vars = subset.with(0).with(side);
        let marg = p.marginal(proj_vars)?;
        let mut seen = vec![false; marg.probs().len()];
        let mut a = f64::INFINITY;
        for t in &members {
            let idx = marg.project_index(t);
            if std::mem::replace(&mut seen[idx], true) {
                continue;
            }
            let num = ln_or_neg_inf(marg.probs()[idx]) - tables.ln_p0_side(p, t)?;
            a = a.min(num - tables.ln_product(p, t, subset)?);
        }
        alpha.push(a);

        // β_S over F, conditioning on u_0, u_{S^c}, u_{k+1}.
        let rest = p.marginal(codebooks.minus(subset).with(0).with(side))?;
        let mut b = f64::INFINITY;
        for t in &members {
            let denom = rest.prob_of_full(t);
            if denom <= 0.0 {
                return Err(Error::ZeroDenominator);
            }
            let num = ln_or_neg_inf(p.prob(t)) - denom.ln();
            b = b.min(num - tables.ln_product(p, t, subset)?);
        }
        beta.push(b);
    }
    Ok(SubsetConstants::new(k, alpha, beta, gamma))
}

/// Largest violation of the three defining inequalities of the constants on
/// `F` (0 when admissible). Used to audit constants from other sources.
pub fn admissibility_violation(p: &JointPmf, event: &EventSet, c: &SubsetConstants) -> Result<f64> {
    let tight = tightest_constants(p, event)?;
    let mut worst: f64 = 0.0;
    for (t, given) in tight.entries().iter().zip(c.entries()) {
        worst = worst.max(given.alpha - t.alpha).max(given.beta - t.beta);
    }
    Ok(worst.max(tight.gamma() - c.gamma()))
}

/// `e^x`, mapping NaN (from `∞ - ∞`) to `+∞`, the conservative reading for
/// an upper-bound term.
fn exp_conservative(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.exp()
    }
}

fn check_k(sizes: &CodebookSizes, c: &SubsetConstants) -> Result<()> {
    if sizes.k() != c.k() {
        return Err(Error::Unsupported(format!(
            "{} codebook sizes for constants with k = {}",
            sizes.k(),
            c.k()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetTerm {
    pub subset: VarSet,
    pub value: f64,
}

/// `|M_S| e^{-α_S}` for each nonempty `S`.
pub fn lower_bound_terms(sizes: &CodebookSizes, c: &SubsetConstants) -> Vec<SubsetTerm> {
    c.entries()
        .iter()
        .map(|e| {
            let ln_m = sizes.ln_subset(e.subset);
            let value = if ln_m == f64::NEG_INFINITY {
                0.0
            } else {
                exp_conservative(ln_m - e.alpha)
            };
            SubsetTerm {
                subset: e.subset,
                value,
            }
        })
        .collect()
}

/// `1 - min_S |M_S| e^{-α_S}`, before clamping.
pub fn lower_bound_raw(sizes: &CodebookSizes, c: &SubsetConstants) -> Result<f64> {
    check_k(sizes, c)?;
    let min = lower_bound_terms(sizes, c)
        .iter()
        .map(|t| t.value)
        .fold(f64::INFINITY, f64::min);
    Ok(1.0 - min)
}

/// Lower bound on `P{Z = 0}`, clamped at 0.
pub fn lower_bound(sizes: &CodebookSizes, c: &SubsetConstants) -> Result<f64> {
    Ok(lower_bound_raw(sizes, c)?.max(0.0))
}

/// Terms of the upper bounds for one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperTerms {
    /// `P{F^c} / ε`, covering the bad set.
    pub bad_set: f64,
    /// `e^γ / ((1-ε)|M|)`.
    pub full: f64,
    /// `e^{-α_S - 2β_{S^c} + 2γ} / ((1-ε)² |M_S|)` for each nonempty proper `S`.
    pub cross: Vec<SubsetTerm>,
    /// Conditional Chebyshev bound `c = full + Σ cross`.
    pub conditional_chebyshev: f64,
    /// Conditional Cauchy–Schwarz bound `c / (1 + c)`.
    pub conditional_cauchy_schwarz: f64,
}

pub fn upper_terms(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<UpperTerms> {
    check_k(sizes, c)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    if sizes.any_empty() {
        return Err(Error::EmptyCodebook);
    }
    let k = c.k();
    let all = VarSet::codebooks(k);
    let ln_one_minus = (1.0 - epsilon).ln();
    let gamma = c.gamma();
    let full = exp_conservative(gamma - sizes.ln_subset(all) - ln_one_minus);
    let cross: Vec<SubsetTerm> = all
        .nonempty_subsets()
        .filter(|&s| s != all)
        .map(|s| {
            let x = -c.alpha(s) - 2.0 * c.beta(all.minus(s)) + 2.0 * gamma
                - sizes.ln_subset(s)
                - 2.0 * ln_one_minus;
            SubsetTerm {
                subset: s,
                value: exp_conservative(x),
            }
        })
        .collect();
    let cheb = full + cross.iter().map(|t| t.value).sum::<f64>();
    let cs = if cheb.is_infinite() { 1.0 } else { cheb / (1.0 + cheb) };
    Ok(UpperTerms {
        bad_set: p_fc / epsilon,
        full,
        cross,
        conditional_chebyshev: cheb,
        conditional_cauchy_schwarz: cs,
    })
}

/// Chebyshev upper bound on `P{Z = 0}` before clamping.
pub fn upper_bound_chebyshev_raw(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<f64> {
    let t = upper_terms(sizes, c, epsilon, p_fc)?;
    Ok(t.bad_set + t.conditional_chebyshev)
}

/// Chebyshev upper bound on `P{Z = 0}`, clamped at 1.
pub fn upper_bound_chebyshev(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<f64> {
    Ok(upper_bound_chebyshev_raw(sizes, c, epsilon, p_fc)?.min(1.0))
}

pub fn upper_bound_cauchy_schwarz_raw(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<f64> {
    let t = upper_terms(sizes, c, epsilon, p_fc)?;
    Ok(t.bad_set + t.conditional_cauchy_schwarz)
}

/// Cauchy–Schwarz upper bound on `P{Z = 0}`, clamped at 1.
pub fn upper_bound_cauchy_schwarz(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<f64> {
    Ok(upper_bound_cauchy_schwarz_raw(sizes, c, epsilon, p_fc)?.min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    pub p_f_complement: f64,
    pub lower_raw: f64,
    pub lower: f64,
    pub upper_chebyshev_raw: f64,
    pub upper_chebyshev: f64,
    pub upper_cauchy_schwarz_raw: f64,
    pub upper_cauchy_schwarz: f64,
    pub lower_terms: Vec<SubsetTerm>,
    pub upper_terms: UpperTerms,
}

pub fn bounds_report(sizes: &CodebookSizes, c: &SubsetConstants, epsilon: f64, p_fc: f64) -> Result<BoundsReport> {
    let lower_raw = lower_bound_raw(sizes, c)?;
    let terms = upper_terms(sizes, c, epsilon, p_fc)?;
    let cheb = terms.bad_set + terms.conditional_chebyshev;
    let cs = terms.bad_set + terms.conditional_cauchy_schwarz;
    Ok(BoundsReport {
        epsilon,
        p_f_complement: p_fc,
        lower_raw,
        lower: lower_raw.max(0.0),
        upper_chebyshev_raw: cheb,
        upper_chebyshev: cheb.min(1.0),
        upper_cauchy_schwarz_raw: cs,
        upper_cauchy_schwarz: cs.min(1.0),
        lower_terms: lower_bound_terms(sizes, c),
        upper_terms: terms,
    })
}

/// Reports over a grid of `ε`, with the minimizing `ε` of each upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSweep {
    pub reports: Vec<BoundsReport>,
    pub best_chebyshev_epsilon: f64,
    pub best_chebyshev: f64,
    pub best_cauchy_schwarz_epsilon: f64,
    pub best_cauchy_schwarz: f64,
}

pub fn sweep_epsilon(sizes: &CodebookSizes, c: &SubsetConstants, p_fc: f64, grid: &[f64]) -> Result<EpsilonSweep> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let reports = grid
        .iter()
        .map(|&e| bounds_report(sizes, c, e, p_fc))
        .collect::<Result<Vec<_>>>()?;
    let argmin = |f: fn(&BoundsReport) -> f64| {
        reports
            .iter()
            .fold((f64::NAN, f64::INFINITY), |best, r| {
                if f(r) < best.1 {
                    (r.epsilon, f(r))
                } else {
                    best
                }
            })
    };
    let (ce, cv) = argmin(|r| r.upper_chebyshev_raw);
    let (se, sv) = argmin(|r| r.upper_cauchy_schwarz_raw);
    Ok(EpsilonSweep {
        best_chebyshev_epsilon: ce,
        best_chebyshev: cv.min(1.0),
        best_cauchy_schwarz_epsilon: se,
        best_cauchy_schwarz: sv.min(1.0),
        reports,
    })
}

/// `ε ∈ {0.1, 0.2, ..., 0.9}`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(k: usize) -> SubsetConstants {
        let m = (1 << k) - 1;
        SubsetConstants::new(k, vec![0.0; m], vec![0.0; m], 0.0)
    }

    #[test]
    fn lower_bound_vanishes_at_threshold() {
        let c = SubsetConstants::new(1, vec![2f64.ln()], vec![0.0], 0.0);
        let lb = lower_bound(&CodebookSizes::from_counts(&[2]), &c).unwrap();
        assert!(lb.abs() < 1e-15);
    }

    #[test]
    fn lower_bound_is_one_without_codewords() {
        let c = zeros(2);
        assert_eq!(lower_bound(&CodebookSizes::from_counts(&[0, 0]), &c).unwrap(), 1.0);
        // Infinite alpha with an empty codebook is still a sure miss.
        let c = SubsetConstants::new(1, vec![f64::NEG_INFINITY], vec![0.0], 0.0);
        assert_eq!(lower_bound(&CodebookSizes::from_counts(&[0]), &c).unwrap(), 1.0);
    }

    #[test]
    fn chebyshev_two_term_evaluation() {
        let c = zeros(1);
        let m = CodebookSizes::from_counts(&[4]);
        let ub = upper_bound_chebyshev(&m, &c, 0.5, 0.0).unwrap();
        assert!((ub - 0.5).abs() < 1e-15);
        let ub = upper_bound_chebyshev_raw(&m, &c, 0.3, 1.0).unwrap();
        assert!(ub >= 1.0 / 0.3);
        assert_eq!(upper_bound_chebyshev(&m, &c, 0.3, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn upper_bound_errors() {
        let c = zeros(1);
        let m = CodebookSizes::from_counts(&[4]);
        assert_eq!(
            upper_bound_chebyshev(&m, &c, 1.0, 0.0),
            Err(Error::EpsilonOutOfRange(1.0))
        );
        assert_eq!(
            upper_bound_cauchy_schwarz(&CodebookSizes::from_counts(&[0]), &c, 0.5, 0.0),
            Err(Error::EmptyCodebook)
        );
    }

    #[test]
    fn cauchy_schwarz_degenerate_single_codeword() {
        let c = zeros(1);
        let m = CodebookSizes::from_counts(&[1]);
        let t = upper_terms(&m, &c, 1e-12, 0.0).unwrap();
        assert!((t.conditional_cauchy_schwarz - 0.5).abs() < 1e-9);
        assert!((t.conditional_chebyshev - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cross_terms_use_complement_beta() {
        // k = 2: S = {1} pairs with β_{2}, S = {2} with β_{1}.
        let c = SubsetConstants::new(2, vec![1.0, 2.0, 0.0], vec![0.5, 0.25, 0.0], 0.0);
        let m = CodebookSizes::from_counts(&[1, 1]);
        let t = upper_terms(&m, &c, 0.5, 0.0).unwrap();
        assert_eq!(t.cross.len(), 2);
        assert!((t.cross[0].value - (-1.0f64 - 0.5).exp() * 4.0).abs() < 1e-12);
        assert!((t.cross[1].value - (-2.0f64 - 1.0).exp() * 4.0).abs() < 1e-12);
    }

    #[test]
    fn rates_to_sizes() {
        let m = CodebookSizes::from_rates(&[4f64.ln() / 2.0], 2).unwrap();
        assert_eq!(m.exact(), Some(&[4u64][..]));
        let big = CodebookSizes::from_rates(&[0.9], 400).unwrap();
        assert!(big.exact().is_none());
        assert!((big.ln_size(1) - 360.0).abs() < 1e-9);
    }

    #[test]
    fn tightest_constants_vanish_for_independent_law() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let f = EventSet::from_predicate(&p, |t| t[1] == t[2]);
        let c = tightest_constants(&p, &f).unwrap();
        assert!(c.gamma().abs() < 1e-12);
        assert!(c.entries().iter().all(|e| e.alpha.abs() < 1e-12 && e.beta.abs() < 1e-12));
    }

    #[test]
    fn tightest_constants_on_singleton_agree() {
        let raw = [0.05, 0.1, 0.2, 0.15, 0.1, 0.05, 0.3, 0.05];
        let p = JointPmf::from_table(raw.to_vec(), vec![2, 2, 2]).unwrap();
        let f = EventSet::from_members(&p, &[vec![1, 1, 0]]).unwrap();
        let c = tightest_constants(&p, &f).unwrap();
        // ln p(u1 | u0, u2) / p(u1 | u0) at (1, 1, 0).
        let exact = (0.3f64 / 0.4 / (0.35 / 0.5)).ln();
        assert!((c.gamma() - exact).abs() < 1e-12);
        assert!((c.alpha(VarSet::single(1)) - exact).abs() < 1e-12);
        assert!((c.beta(VarSet::single(1)) - exact).abs() < 1e-12);
    }

    #[test]
    fn empty_event_has_no_constants() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        assert_eq!(
            tightest_constants(&p, &EventSet::empty(&p)),
            Err(Error::EmptyEvent)
        );
    }

    #[test]
    fn sweep_picks_minimum() {
        let c = zeros(1);
        let m = CodebookSizes::from_counts(&[4]);
        let s = sweep_epsilon(&m, &c, 0.01, &default_epsilon_grid()).unwrap();
        assert_eq!(s.reports.len(), 9);
        let min = s
            .reports
            .iter()
            .map(|r| r.upper_chebyshev_raw)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(s.best_chebyshev, min.min(1.0));
    }
}
