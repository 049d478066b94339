use serde::Serialize;

use crate::dist::{decode_sequence, JointPmf, VarSet};
use crate::error::{Error, Result};
use crate::typicality::TypicalityTester;

/// An explicitly enumerated subset `F` of the product alphabet of a
/// [`JointPmf`] (which may itself be an n-fold extension).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSet {
    sizes: Vec<usize>,
    members: Vec<bool>,
}

impl EventSet {
    pub fn from_predicate(p: &JointPmf, mut f: impl FnMut(&[usize]) -> bool) -> Self {
        let members = (0..p.len()).map(|i| f(&p.tuple(i))).collect();
        EventSet {
            sizes: p.sizes().to_vec(),
            members,
        }
    }

    pub fn full(p: &JointPmf) -> Self {
        Self::from_predicate(p, |_| true)
    }

    pub fn empty(p: &JointPmf) -> Self {
        Self::from_predicate(p, |_| false)
    }

    /// Event given by a list of member tuples.
    pub fn from_members(p: &JointPmf, members: &[Vec<usize>]) -> Result<Self> {
        let mut set = Self::empty(p);
        for t in members {
            if t.len() != p.num_vars() || t.iter().zip(p.sizes()).any(|(&s, &a)| s >= a) {
                return Err(Error::BadSequences(format!("member {t:?} outside the alphabet")));
            }
            set.members[p.index(t)] = true;
        }
        Ok(set)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.members[index]
    }

    pub fn member_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn complement(&self) -> Self {
        EventSet {
            sizes: self.sizes.clone(),
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    pub(crate) fn check_shape(&self, p: &JointPmf) -> Result<()> {
        if self.sizes != p.sizes() {
            return Err(Error::ShapeMismatch {
                expected: p.len(),
                actual: self.members.len(),
            });
        }
        Ok(())
    }

    /// Membership table of the projection of `F` onto `vars`, indexed like
    /// `p.marginal(vars)`.
    pub fn projection(&self, p: &JointPmf, vars: VarSet) -> Result<Vec<bool>> {
        self.check_shape(p)?;
        let m = p.marginal(vars)?;
        let mut out = vec![false; m.probs().len()];
        for i in self.member_indices() {
            out[m.project_index(&p.tuple(i))] = true;
        }
        Ok(out)
    }
}

/// The weakly typical set `A_δ^(n)` of `p`, as an event over the n-fold
/// extension `p^n`, which is returned alongside.
pub fn typical_set(p: &JointPmf, n: usize, delta: f64) -> Result<(JointPmf, EventSet)> {
    let power = p.power(n)?;
    let tester = TypicalityTester::new(p);
    let all = p.all_vars();
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new(); p.num_vars()];
    let event = EventSet::from_predicate(&power, |tuple| {
        for (v, &code) in tuple.iter().enumerate() {
            seqs[v] = decode_sequence(code, p.sizes()[v], n);
        }
        let views: Vec<&[usize]> = seqs.iter().map(Vec::as_slice).collect();
        tester.is_typical_on(&views, all, delta)
    });
    Ok((power, event))
}

/// `P{(U_0, U_[k], U_{k+1}) ∈ F}` under `p`.
pub fn event_probability(p: &JointPmf, event: &EventSet) -> Result<f64> {
    event.check_shape(p)?;
    Ok(event.member_indices().map(|i| p.probs()[i]).sum())
}

/// Pairs `(u_0, u_{k+1})` whose slice of `F` has conditional mass at least
/// `1 - ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodSet {
    pub epsilon: f64,
    pub members: Vec<(usize, usize)>,
    pub prob_outside: f64,
}

pub fn good_set(p: &JointPmf, event: &EventSet, epsilon: f64) -> Result<GoodSet> {
    event.check_shape(p)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let side = p.side();
    let pair = p.marginal(VarSet::from_iter([0, side]))?;
    let side_size = p.sizes()[side];
    let mut inside = vec![0.0; pair.probs().len()];
    for i in event.member_indices() {
        let t = p.tuple(i);
        inside[t[0] * side_size + t[side]] += p.probs()[i];
    }
    let mut members = Vec::new();
    let mut prob_outside = 0.0;
    for (idx, (&mass, &hit)) in pair.probs().iter().zip(&inside).enumerate() {
        if mass > 0.0 && hit / mass >= 1.0 - epsilon - 1e-12 {
            members.push((idx / side_size, idx % side_size));
        } else {
            prob_outside += mass;
        }
    }
    Ok(GoodSet {
        epsilon,
        members,
        prob_outside,
    })
}
