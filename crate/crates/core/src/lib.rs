//! Key management for heterogeneous sensor networks with deployment
//! knowledge: a symmetric bivariate polynomial between group heads and
//! PRF-derived pairwise keys inside each deployment group.

pub mod analysis;
pub mod baselines;
pub mod deployment;
pub mod error;
pub mod gfpoly;
pub mod node;
pub mod prfkeys;
pub mod protocol;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use node::{LinkId, NodeId, NodeKind};

/// Exact rational scalar for the closed forms.
pub type Exact = num_rational::BigRational;
pub type ConnectivityClosedForm = analysis::ClosedForm<f64>;
pub type ExactClosedForm = analysis::ClosedForm<Exact>;
