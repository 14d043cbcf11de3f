//! Random generation under the three strategies, plus sample statistics.

mod census;
mod engine;
mod stats;
mod value;

pub use engine::{
    sample_derive, sample_dragen, sample_megadeth, sample_rng, sample_spec, BudgetExhausted,
    Sample, Sampler,
};
pub use stats::{empirical_stats, SampleStats};
pub use value::{AtomValue, Token, Value};
