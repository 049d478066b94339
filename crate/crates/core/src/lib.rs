//! Joint typicality of random codebooks: entropies of finite joint laws,
//! weak typicality tests, finite-length covering bounds, asymptotic rate
//! conditions and Monte Carlo experiments.
//!
//! Variable 0 is the common variable, variables `1..=k` index the
//! codebooks and variable `k + 1` is the side variable. All logarithms are
//! natural.

pub mod asymptotics;
pub mod bounds;
pub mod dist;
pub mod error;
pub mod sim;
pub mod typicality;

pub use bounds::{CodebookSizes, EventSet, SubsetConstants};
pub use dist::{GenerationLaw, JointPmf, VarSet};
pub use error::{Error, Result};
pub use typicality::TypicalityTester;
