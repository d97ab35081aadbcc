//! Certified lower bounds on the bottom of the spectrum of Laplace-type
//! operators in terms of ball-intersection fractions, together with the
//! finite-difference eigenvalue solvers used to check them.

pub mod error;
pub mod geometry;
pub mod heisenberg;
pub mod lemma;
pub mod bounds;
pub mod eigensolver;
pub mod report;

pub use error::{Error, Result};
