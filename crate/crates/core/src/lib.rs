//! Numerical laboratory for the complex Monge-Ampère equation det(u_{ij̄}) = ψ
//! on convex domains of C² ≅ R⁴, the power transform v = −√(−u/2), and
//! exact certificates for the constant-rank algebra of that transform.

pub mod cli;
pub mod congruence;
pub mod convex_bodies;
pub mod convexity_audit;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ma_operator;
pub mod rank_certificates;
pub mod report;
pub mod solver;
pub mod symfun;

pub use error::{Error, Result};
pub use linalg::SymmetricMatrix;
