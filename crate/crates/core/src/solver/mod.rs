//! Nuclear norm minimization, its optimality certificate, and the small LP
//! solver used by the G-number bounds.

mod certificate;
mod lp;
mod nnm;

pub use certificate::{subgradient_certificate, SubgradientCertificate};
pub use lp::{lp_solve, max_over_restricted_null, LpProblem, LpSolution, LpStatus, VarDomain};
pub use nnm::{solve_equality, solve_noisy, NnmConfig, NnmProblem, NnmSolution};
