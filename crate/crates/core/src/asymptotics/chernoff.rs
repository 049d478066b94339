//! Chernoff exponents for the empirical log-likelihood of a variable subset.
//!
//! For `X = ln 1/p(U_T)` the upper-tail exponent at slack `ε` is
//! `sup_{t>0} [t (H + ε) - ln E e^{tX}]` and the lower-tail exponent is
//! `sup_{t>0} [t (ε - H) - ln E e^{-tX}]`. Both objectives are concave in
//! `t`, vanish at 0 and have slope `ε` there.

use serde::Serialize;

use crate::dist::{JointPmf, VarSet};
use crate::error::{Error, Result};

/// Upper end of the `t` bracket.
pub const T_MAX: f64 = 1e6;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    /// Maximizer found inside the bracket.
    Finite,
    /// The tail event is impossible; the exponent is `+∞`.
    Unbounded,
    /// The objective still increased at [`T_MAX`]; `value` is its value there.
    Capped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffExponent {
    pub value: f64,
    pub t_star: f64,
    pub kind: ExponentKind,
}

impl ChernoffExponent {
    /// Value used in comparisons: flagged exponents count as `+∞`.
    pub fn effective(&self) -> f64 {
        match self.kind {
            ExponentKind::Finite => self.value,
            ExponentKind::Unbounded | ExponentKind::Capped => f64::INFINITY,
        }
    }
}

/// `ln Σ_{u_T: p > 0} p(u_T)^{1-t}`, the log-MGF of `ln 1/p(U_T)` at `t`.
pub fn log_mgf(p: &JointPmf, set: VarSet, t: f64) -> Result<f64> {
    let m = p.marginal(set)?;
    let ln_p: Vec<f64> = m.probs().iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    Ok(log_sum_exp(ln_p.iter().map(|&l| (1.0 - t) * l)))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// The tilted objective `f(t) = t a - ln Σ_i w_i e^{t y_i}` for a finite
/// distribution with log-weights `ln_w` on points `y`.
struct Objective {
    ln_w: Vec<f64>,
    y: Vec<f64>,
    a: f64,
}

impl Objective {
    fn for_tail(p: &JointPmf, set: VarSet, epsilon: f64, tail: Tail) -> Result<Self> {
        let m = p.marginal(set)?;
        let h = m.entropy();
        let ln_w: Vec<f64> = m.probs().iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
        let (y, a) = match tail {
            Tail::Upper => (ln_w.iter().map(|l| -l).collect(), h + epsilon),
            Tail::Lower => (ln_w.clone(), epsilon - h),
        };
        Ok(Objective { ln_w, y, a })
    }

    fn value(&self, t: f64) -> f64 {
        let terms = self.ln_w.iter().zip(&self.y).map(move |(l, y)| l + t * y);
        t * self.a - log_sum_exp(terms)
    }

    /// `f'(t) = a - E_t[Y]` under the tilted weights.
    fn slope(&self, t: f64) -> f64 {
        let z: Vec<f64> = self.ln_w.iter().zip(&self.y).map(|(l, y)| l + t * y).collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (zi, yi) in z.iter().zip(&self.y) {
            let w = (zi - max).exp();
            num += w * yi;
            den += w;
        }
        self.a - num / den
    }

    fn y_max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if hi - lo <= tol * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Chernoff exponent of the given tail of the empirical log-likelihood of
/// `U_T` at slack `ε > 0`.
pub fn chernoff_exponent(p: &JointPmf, set: VarSet, epsilon: f64, tail: Tail) -> Result<ChernoffExponent> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositive(epsilon));
    }
    let obj = Objective::for_tail(p, set, epsilon, tail)?;
    // Threshold beyond the largest attainable value: the tail is empty.
    if obj.a > obj.y_max() + 1e-12 {
        return Ok(ChernoffExponent {
            value: f64::INFINITY,
            t_star: f64::INFINITY,
            kind: ExponentKind::Unbounded,
        });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while obj.slope(hi) > 0.0 {
        if hi >= T_MAX {
            return Ok(ChernoffExponent {
                value: obj.value(T_MAX),
                t_star: T_MAX,
                kind: ExponentKind::Capped,
            });
        }
        lo = hi;
        hi = (hi * 2.0).min(T_MAX);
    }
    let t_star = golden_section_max(|t| obj.value(t), lo, hi, 1e-12);
    Ok(ChernoffExponent {
        value: obj.value(t_star).max(0.0),
        t_star,
        kind: ExponentKind::Finite,
    })
}
