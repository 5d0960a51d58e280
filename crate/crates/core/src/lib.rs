//! Implicitly constrained least squares (ICLS) semi-supervised classification.
//!
//! The crate provides:
//!
//! - [`supervised`]: the plain least squares classifier (closed-form fit,
//!   empirical risk, 0.5-threshold classification).
//! - [`icls`]: the semi-supervised classifier that minimizes the supervised
//!   squared loss over the set of solutions reachable by soft labelings
//!   `y_u in [0,1]^U` of the unlabeled data, via a box-constrained QP.
//! - [`baselines`]: self-learning, updated-second-moment (USM) and oracle
//!   reference learners.
//! - [`theory1d`]: the univariate no-intercept setting with a known feature
//!   density, where clipping the supervised slope to the constraint interval
//!   provably never increases the true risk.
//! - [`bench`]: dataset ingestion, seeded learning-curve and cross-validation
//!   protocols, and result serialization.
//! - [`selfcheck`]: an executable battery of the numerical contracts above,
//!   also reachable through the `icls selfcheck` CLI command.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod icls;
pub mod linalg;
pub mod selfcheck;
pub mod supervised;
pub mod theory1d;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
