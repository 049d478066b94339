use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::CodebookSizes;
use crate::dist::{GenerationLaw, JointPmf};
use crate::error::{Error, Result};
use crate::typicality::TypicalityTester;

use super::collapsed::{cover_from_single, ln_single_codeword_typical};
use super::generator::{draw_common, draw_conditional, generate_instance, IndependentStreams, Role, TrialSeed};
use super::search::search_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Explicit codebooks when small enough, otherwise collapsed if `k = 1`.
    Auto,
    /// Draw every codeword and search for a typical tuple.
    Explicit,
    /// `k = 1` only: exact covering probability given the common and side
    /// sequences, followed by one Bernoulli draw.
    Collapsed,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub strategy: Strategy,
    /// Budget on drawn symbols (explicit) or enumerated compositions
    /// (collapsed) per trial.
    pub guard: f64,
    /// `Auto` uses explicit codebooks while `∏ M_j` stays at or below this.
    pub explicit_limit: f64,
    pub keep_records: bool,
    pub confidence: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            strategy: Strategy::Auto,
            guard: 1e7,
            explicit_limit: 65_536.0,
            keep_records: false,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub covered: bool,
    /// First typical tuple, explicit strategy only.
    pub witness: Option<Vec<u64>>,
    /// Conditional covering probability, collapsed strategy only.
    pub cover_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEstimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub seed: u64,
    pub strategy: Strategy,
    pub records: Vec<TrialRecord>,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn resolve(law: &GenerationLaw, n: usize, sizes: &CodebookSizes, opts: &SimOptions) -> Result<Strategy> {
    let explicit_ok = |counts: &[u64]| -> Result<()> {
        let symbols = counts.iter().map(|&m| m as f64).sum::<f64>() * n as f64;
        if symbols > opts.guard {
            return Err(Error::GuardExceeded { states: symbols, guard: opts.guard });
        }
        Ok(())
    };
    match opts.strategy {
        Strategy::Explicit => {
            let counts = sizes
                .exact()
                .ok_or_else(|| Error::Unsupported("codebooks too large to draw explicitly".into()))?;
            explicit_ok(counts)?;
            Ok(Strategy::Explicit)
        }
        Strategy::Collapsed => {
            if law.k() != 1 {
                return Err(Error::Unsupported("collapsed sampling needs k = 1".into()));
            }
            Ok(Strategy::Collapsed)
        }
        Strategy::Auto => {
            if let Some(counts) = sizes.exact() {
                let product: f64 = counts.iter().map(|&m| m as f64).product();
                if product <= opts.explicit_limit && explicit_ok(counts).is_ok() {
                    return Ok(Strategy::Explicit);
                }
            }
            if law.k() == 1 {
                return Ok(Strategy::Collapsed);
            }
            let states = (0..law.k()).map(|j| sizes.ln_size(j + 1)).sum::<f64>().exp();
            Err(Error::GuardExceeded { states, guard: opts.explicit_limit })
        }
    }
}

/// Monte Carlo estimate of `P{some codeword tuple is jointly typical}`.
///
/// Trial `t` uses the seed `(seed, t)`, so the estimate does not depend on
/// how trials are split across threads.
#[allow(clippy::too_many_arguments)]
pub fn estimate_cover_probability(
    law: &GenerationLaw,
    p: &JointPmf,
    n: usize,
    sizes: &CodebookSizes,
    delta: f64,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<CoverEstimate> {
    if n == 0 {
        return Err(Error::NonPositive(0.0));
    }
    if sizes.k() != law.k() || p.k() != law.k() {
        return Err(Error::Unsupported(format!(
            "{} codebook sizes for k = {}",
            sizes.k(),
            law.k()
        )));
    }
    let strategy = resolve(law, n, sizes, opts)?;
    let tester = TypicalityTester::new(p);
    let ln_m = sizes.ln_size(1);

    let run = |trial: u64| -> Result<TrialRecord> {
        let ts = TrialSeed { master: seed, trial };
        match strategy {
            Strategy::Collapsed => {
                let layout = IndependentStreams;
                let common = draw_common(law, n, ts, &layout);
                let side = draw_conditional(law, 2, &common, Role::Side, ts, &layout);
                let ln_q = ln_single_codeword_typical(law, &tester, &common, &side, delta, opts.guard)?;
                let q = cover_from_single(ln_q, ln_m);
                let u: f64 = ts.stream(Role::Outcome).random();
                Ok(TrialRecord {
                    trial,
                    covered: u < q,
                    witness: None,
                    cover_probability: Some(q),
                })
            }
            _ => {
                let counts = sizes.exact().expect("explicit strategy has exact sizes");
                let inst = generate_instance(law, n, counts, ts)?;
                let witness = search_with(&inst, &tester, delta);
                Ok(TrialRecord {
                    trial,
                    covered: witness.is_some(),
                    witness,
                    cover_probability: None,
                })
            }
        }
    };

    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    let successes = records.iter().filter(|r| r.covered).count() as u64;
    let (ci_low, ci_high) = wilson_interval(successes, trials, opts.confidence);
    Ok(CoverEstimate {
        trials,
        successes,
        p_hat: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        ci_low,
        ci_high,
        confidence: opts.confidence,
        seed,
        strategy,
        records: if opts.keep_records { records } else { Vec::new() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 5/10 at 95%: center 0.5, half-width z*sqrt(0.025 + z^2/400)/(1 + z^2/10).
        let (lo, hi) = wilson_interval(5, 10, 0.95);
        assert!((lo - 0.236_593).abs() < 1e-5, "{lo}");
        assert!((hi - 0.763_407).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(0, 20, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.161_125).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn strategies_resolve() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let law = p.generation_law();
        let opts = SimOptions::default();
        let small = CodebookSizes::from_counts(&[4]);
        assert_eq!(resolve(&law, 10, &small, &opts).unwrap(), Strategy::Explicit);
        let huge = CodebookSizes::from_rates(&[2.0], 100).unwrap();
        assert_eq!(resolve(&law, 100, &huge, &opts).unwrap(), Strategy::Collapsed);
        let forced = SimOptions { strategy: Strategy::Explicit, ..SimOptions::default() };
        assert!(resolve(&law, 100, &huge, &forced).is_err());
    }

    #[test]
    fn zero_codewords_never_cover() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let law = p.generation_law();
        for strategy in [Strategy::Explicit, Strategy::Collapsed] {
            let opts = SimOptions { strategy, ..SimOptions::default() };
            let est = estimate_cover_probability(&law, &p, 5, &CodebookSizes::from_counts(&[0]), 0.1, 50, 1, &opts)
                .unwrap();
            assert_eq!(est.successes, 0);
        }
    }

    #[test]
    fn uniform_law_always_covers() {
        // Every sequence is typical under the uniform law.
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let law = p.generation_law();
        let est = estimate_cover_probability(
            &law,
            &p,
            6,
            &CodebookSizes::from_counts(&[1]),
            0.01,
            40,
            2,
            &SimOptions { keep_records: true, ..SimOptions::default() },
        )
        .unwrap();
        assert_eq!(est.successes, 40);
        assert!(est.records.iter().all(|r| r.witness == Some(vec![1])));
    }
}
