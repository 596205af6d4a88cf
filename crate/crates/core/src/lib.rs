//! Exact-arithmetic workbench for the genus-zero relative Gromov-Witten
//! algebra of the pair (P^n, P^{n-1}).
//!
//! Everything is computed over the rationals with no floating point:
//! cohomology of the ambient space and the divisor, the ring of
//! insertions with contact orders of both signs, bipartite localization
//! graphs and their symbolic obstruction classes, the small quantum
//! product (monoid-algebra oracle and constraint solver), and the
//! quantized Virasoro-type operators with their genus-zero constraints.

pub mod cohomology;
pub mod cycleclasses;
pub mod error;
pub mod givental;
pub mod graphs;
pub mod insertions;
pub mod json;
pub mod linalg;
pub mod quantum;
pub mod rat;

pub use error::{Error, Result};
pub use rat::Rat;
