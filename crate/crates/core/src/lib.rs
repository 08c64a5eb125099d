//! Exact toolkit for local zeta functions `Z(s, χ, f/g)` of non-degenerate
//! pairs of polynomials over `ℚ_p`.

pub mod arith;
pub mod cyclo;
pub mod error;
pub mod fan;
pub mod lattice;
pub mod newton;
pub mod oracle;
pub mod pipeline;
pub mod poles;
pub mod poly;
pub mod residue;
pub mod upoly;
pub mod zeta;

pub use error::{Error, Result};
