//! Exact and Monte Carlo iterated-jackknife variance bounds for functions of
//! independent discrete random variables.

pub mod bounds;
pub mod cli;
pub mod combinatorics;
pub mod conditional;
pub mod error;
pub mod hoeffding;
pub mod index_set;
pub mod instances;
pub mod jackknife;
pub mod mc;
pub mod model;

pub use bounds::BoundsReport;
pub use conditional::CondExpCache;
pub use error::{Error, Result};
pub use hoeffding::HoeffdingDecomposition;
pub use index_set::IndexSet;
pub use jackknife::JackknifeSpectrum;
pub use mc::{McConfig, McEstimate};
pub use model::{
    expectation, tabulate, variance, DiscreteDistribution, FieldTable, Monomial, ProductSpace,
    Statistic,
};
