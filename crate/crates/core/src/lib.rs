//! Frictionless contact solvers built on a displacement-force splitting.
//!
//! Each iteration solves the fixed stiffness system `K U = F - B^T lambda`
//! with a factorization computed once, updates the contact forces with an
//! Uzawa or penalty rule, optionally accelerates the dual sequence, and
//! projects it back onto `lambda >= 0`.

pub mod accel;
pub mod driver;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod problems;
pub mod updates;

pub use error::{Error, Result};
