//! Exact reduction engines: the discrete cohomology of `D_p` and its
//! classical twisted de Rham counterpart.

pub mod classical;
pub mod discrete;
pub mod gaussian;
pub mod linalg;
pub mod ratfunc;

pub use classical::{classical_reduce, gauss_manin, ClassicalClass};
pub use discrete::{apply_dp, beta_matrix, reduce, CohomologyClass, ConnectionMatrix, ExactParams, Reducer};
pub use gaussian::GaussianRational;
pub use linalg::ExactMatrix;
pub use ratfunc::RationalFunction;
