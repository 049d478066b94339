#![allow(dead_code)]

use covering::JointPmf;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalizes nonnegative weights into a table; `None` when all vanish.
pub fn normalized(weights: Vec<f64>, sizes: Vec<usize>) -> Option<JointPmf> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    JointPmf::from_table(weights.iter().map(|w| w / total).collect(), sizes).ok()
}

/// Joint laws with the given alphabet sizes; roughly one entry in five is 0.
pub fn pmf_with_sizes(sizes: Vec<usize>) -> impl Strategy<Value = JointPmf> {
    let len: usize = sizes.iter().product();
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], len)
        .prop_filter_map("all-zero table", move |w| normalized(w, sizes.clone()))
}

/// Joint laws with `k ∈ {1, 2}` and alphabets of size 1..=3.
pub fn small_pmf() -> impl Strategy<Value = JointPmf> {
    (1usize..=2)
        .prop_flat_map(|k| prop::collection::vec(1usize..=3, k + 2))
        .prop_flat_map(pmf_with_sizes)
}

/// Full-support joint law drawn from a seeded generator.
pub fn random_positive_pmf(sizes: &[usize], seed: u64) -> JointPmf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: usize = sizes.iter().product();
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    normalized(w, sizes.to_vec()).unwrap()
}

/// Doubly symmetric binary pair with a constant common variable.
pub fn dsbs(crossover: f64) -> JointPmf {
    let a = (1.0 - crossover) / 2.0;
    let b = crossover / 2.0;
    JointPmf::from_table(vec![a, b, b, a], vec![1, 2, 2]).unwrap()
}
