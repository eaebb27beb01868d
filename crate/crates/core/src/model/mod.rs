//! Product spaces of independent finite discrete variables, statistics on
//! them, and the tabulated representation every other module works on.
//!
//! Joint outcomes are enumerated in mixed radix with coordinate 0 varying
//! fastest: outcome `ω` has support index `(ω / stride_i) % radix_i` in
//! coordinate `i`, where `stride_0 = 1` and `stride_{i+1} = stride_i * radix_i`.

mod distribution;
pub(crate) mod space;
mod statistic;
mod table;

pub use distribution::{DiscreteDistribution, PROBABILITY_TOLERANCE};
pub use space::{ProductSpace, DEFAULT_OUTCOME_CAP};
pub use statistic::{Evaluator, Monomial, Statistic};
pub use table::{expectation, tabulate, variance, FieldTable};
