//! Distribution property testing and estimation under dual access
//! (SAMP + EVAL) and cumulative dual access (SAMP + CEVAL).
//!
//! Every algorithm here talks to the unknown distribution only through an
//! oracle from [`oracle`], which counts each query. The exact quantities in
//! [`distribution`] and the certified fixtures in [`hard_instances`] are the
//! ground truth the algorithms are measured against.

pub mod chernoff;
pub mod distribution;
pub mod entropy;
pub mod equivalence;
pub mod error;
pub mod hard_instances;
pub mod harness;
pub mod oracle;
pub mod support;
pub mod tolerant;

pub use distribution::{ExplicitDistribution, PrefixCdf};
pub use equivalence::{Decision, Verdict};
pub use error::{Error, Result};
pub use oracle::{CumulativeDualOracle, DualOracle, NoiseModel, QueryStats};
