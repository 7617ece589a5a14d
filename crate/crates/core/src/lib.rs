//! Numerical toolkit for elliptic Ruijsenaars-Schneider and Calogero-Moser
//! systems: special functions, Cauchy determinant identities, Lax matrices,
//! Hamiltonian flows, moment-map reductions and degeneration limits.

// `!(x > 0.0)` also rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::result_large_err)]

pub mod cauchy;
pub mod dynamics;
pub mod elliptic;
mod error;
pub mod lax;
pub mod limits;
pub mod linalg;
pub mod reductions;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use elliptic::{Lattice, LatticeKind};
