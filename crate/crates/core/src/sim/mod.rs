//! Random codebook experiments: instance generation, typical-tuple search,
//! Monte Carlo estimates and exact oracles.

mod audit;
mod collapsed;
mod estimate;
mod generator;
mod oracle;
mod search;
mod snapshot;

pub use audit::{assumption_audit, AuditReport, AuditWorst};
pub use collapsed::{cover_from_single, ln_single_codeword_typical};
pub use estimate::{estimate_cover_probability, wilson_interval, CoverEstimate, SimOptions, Strategy, TrialRecord};
pub use generator::{
    generate_instance, generate_instance_with, inverse_cdf, AliasedCodewords, IndependentStreams, Instance, Role,
    StreamLayout, TrialSeed,
};
pub use oracle::{exact_oracle, typical_set_oracle};
pub use search::{search_typical_tuple, search_with};
pub use snapshot::{parse_snapshot, write_snapshot};
