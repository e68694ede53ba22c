//! Certification of s-goodness for linear measurement operators acting on
//! matrices, together with the tools needed to exercise it: G-number lower
//! and upper bounds, RIP estimates, a nuclear-norm minimization solver and
//! recovery experiments.

pub mod error;
pub mod goodness;
pub mod matrix;
pub mod measure;
pub mod operator;
pub mod recovery;
pub mod rip;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, SvdFactors};
pub use measure::{Beta, MeasurementNorm};
pub use operator::LinearTransformation;
