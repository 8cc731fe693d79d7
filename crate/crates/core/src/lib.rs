//! Bhattacharyya-bound linear discriminant analysis.
//!
//! Two discriminant criteria that trade pairwise class-mean separation
//! against within-class spread with a data-derived weight:
//!
//! * L2BLDA, solved by one symmetric eigendecomposition ([`spectral::solve_l2blda`]);
//! * L1BLDA, the L1-norm variant, solved by scaled ADMM with an
//!   orthogonality-constrained W-step ([`admm::solve_l1blda`]).
//!
//! Classical LDA and PCA are provided as baselines, together with a
//! 1-nearest-neighbor evaluation harness ([`eval`], [`bench`]).

pub mod admm;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod procrustes;
pub mod projection;
pub mod scatter;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use projection::{Method, ProjectionMatrix};
