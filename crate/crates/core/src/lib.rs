//! Hypergeometric solutions of the rational quantized Knizhnik-Zamolodchikov
//! equations, built from gamma-function master functions, discrete
//! cohomology and Mellin-Barnes integrals, with cross-checks against exact
//! identities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexfn;
pub mod config;
pub mod contour;
pub mod error;
pub mod homology;
pub mod master;
pub mod qkz;
pub mod reduction;
pub mod report;
pub mod suite;

pub use complexfn::Complex;
pub use config::{CheckKind, RunConfig};
pub use contour::{IntegralResult, QuadratureSpec};
pub use error::{Error, Result};
pub use homology::SolutionMatrix;
pub use master::ParameterSet;
pub use reduction::{CohomologyClass, ExactMatrix, ExactParams, GaussianRational, RationalFunction, Reducer};
pub use report::Report;
pub use suite::{run_suite, SuiteOutcome};
