use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::GenerationLaw;
use crate::error::{Error, Result};

/// Who consumes a random stream within one instance. Codeword indices `m`
/// are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Common,
    Side,
    /// Bernoulli draw of the collapsed sampler.
    Outcome,
    Codeword { j: usize, m: u64 },
}

impl Role {
    fn stream_id(self) -> u64 {
        match self {
            Role::Common => 0,
            Role::Side => 1,
            Role::Outcome => 2,
            Role::Codeword { j, m } => ((j as u64) << 48) | (m & ((1 << 48) - 1)),
        }
    }
}

/// Decides which random stream each role reads. The shipped layout gives
/// every role its own stream; other layouts exist to exercise the audit.
pub trait StreamLayout: Sync {
    fn stream(&self, role: Role) -> Role;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IndependentStreams;

impl StreamLayout for IndependentStreams {
    fn stream(&self, role: Role) -> Role {
        role
    }
}

/// Negative control: codeword 2 of every codebook replays codeword 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct AliasedCodewords;

impl StreamLayout for AliasedCodewords {
    fn stream(&self, role: Role) -> Role {
        match role {
            Role::Codeword { j, m: 2 } => Role::Codeword { j, m: 1 },
            other => other,
        }
    }
}

/// Master seed plus trial index; every draw of an instance is a function of
/// this pair and the role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub master: u64,
    pub trial: u64,
}

impl From<u64> for TrialSeed {
    fn from(master: u64) -> Self {
        TrialSeed { master, trial: 0 }
    }
}

impl TrialSeed {
    fn instance_key(self) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.trial);
        rng.random()
    }

    /// The random stream for `role`, independent of every other role.
    pub fn stream(self, role: Role) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.instance_key());
        rng.set_stream(role.stream_id());
        rng
    }
}

/// Smallest symbol whose cumulative mass exceeds `u`; the last symbol with
/// positive mass absorbs rounding at the top.
pub fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (s, &w) in row.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = s;
            if u < acc {
                return s;
            }
        }
    }
    last
}

/// One realization of the random experiment: the common and side
/// sequences and every codebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub seed: TrialSeed,
    pub common: Vec<usize>,
    pub side: Vec<usize>,
    /// `codebooks[j - 1][m - 1]` is codeword `m` of codebook `j`.
    pub codebooks: Vec<Vec<Vec<usize>>>,
}

impl Instance {
    pub fn k(&self) -> usize {
        self.codebooks.len()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.codebooks.iter().map(|c| c.len() as u64).collect()
    }

    pub fn codeword(&self, j: usize, m: u64) -> &[usize] {
        &self.codebooks[j - 1][(m - 1) as usize]
    }
}

/// Draws the common sequence from `p(u_0)`.
pub(crate) fn draw_common(law: &GenerationLaw, n: usize, seed: TrialSeed, layout: &dyn StreamLayout) -> Vec<usize> {
    let mut rng = seed.stream(layout.stream(Role::Common));
    (0..n).map(|_| inverse_cdf(law.common(), rng.random())).collect()
}

/// Draws variable `var` position-wise from `p(u_var | u_0)`.
pub(crate) fn draw_conditional(
    law: &GenerationLaw,
    var: usize,
    common: &[usize],
    role: Role,
    seed: TrialSeed,
    layout: &dyn StreamLayout,
) -> Vec<usize> {
    let mut rng = seed.stream(layout.stream(role));
    common
        .iter()
        .map(|&u0| {
            let row = law.row(var, u0).expect("u0 drawn with positive mass");
            inverse_cdf(row, rng.random())
        })
        .collect()
}

/// Generates an instance with the shipped independent-stream layout.
pub fn generate_instance(law: &GenerationLaw, n: usize, counts: &[u64], seed: impl Into<TrialSeed>) -> Result<Instance> {
    generate_instance_with(law, n, counts, seed.into(), &IndependentStreams)
}

pub fn generate_instance_with(
    law: &GenerationLaw,
    n: usize,
    counts: &[u64],
    seed: TrialSeed,
    layout: &dyn StreamLayout,
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::NonPositive(0.0));
    }
    let k = law.k();
    if counts.len() != k {
        return Err(Error::Unsupported(format!("{} codebook sizes for k = {k}", counts.len())));
    }
    let common = draw_common(law, n, seed, layout);
    let side = draw_conditional(law, k + 1, &common, Role::Side, seed, layout);
    let codebooks = (1..=k)
        .map(|j| {
            (1..=counts[j - 1])
                .map(|m| draw_conditional(law, j, &common, Role::Codeword { j, m }, seed, layout))
                .collect()
        })
        .collect();
    Ok(Instance {
        n,
        seed,
        common,
        side,
        codebooks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::JointPmf;

    #[test]
    fn point_mass_law_gives_unique_instance() {
        let mut t = vec![0.0; 12];
        // (u0, u1, u2) = (1, 2, 0)
        t[10] = 1.0;
        let p = JointPmf::from_table(t, vec![2, 3, 2]).unwrap();
        let inst = generate_instance(&p.generation_law(), 5, &[3], 9).unwrap();
        assert!(inst.common.iter().all(|&s| s == 1));
        assert!(inst.side.iter().all(|&s| s == 0));
        assert!(inst.codebooks[0].iter().flatten().all(|&s| s == 2));
    }

    #[test]
    fn same_seed_same_instance() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let law = p.generation_law();
        let a = generate_instance(&law, 20, &[4], 77).unwrap();
        let b = generate_instance(&law, 20, &[4], 77).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&law, 20, &[4], 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn codeword_reproducible_in_isolation() {
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let law = p.generation_law();
        let small = generate_instance(&law, 16, &[2], 5).unwrap();
        let big = generate_instance(&law, 16, &[9], 5).unwrap();
        assert_eq!(small.codeword(1, 2), big.codeword(1, 2));
    }

    #[test]
    fn symbol_frequencies_match_law() {
        // k = 1, uniform law, n = 10^4: every frequency within 3 sigma.
        let p = JointPmf::from_table(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        let n = 10_000;
        let inst = generate_instance(&p.generation_law(), n, &[1], 3).unwrap();
        let sigma = (n as f64 * 0.25).sqrt();
        for seq in [&inst.common, &inst.side, &inst.codebooks[0][0]] {
            let ones = seq.iter().filter(|&&s| s == 1).count() as f64;
            assert!((ones - n as f64 / 2.0).abs() < 3.0 * sigma, "{ones}");
        }
    }

    #[test]
    fn inverse_cdf_skips_zero_mass() {
        assert_eq!(inverse_cdf(&[0.0, 0.5, 0.5], 0.0), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 0.999_999_999_999), 1);
        assert_eq!(inverse_cdf(&[0.3, 0.7], 0.3), 1);
    }
}
