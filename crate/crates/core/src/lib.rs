//! Large-deviation toolkit for the upper tail of induced 4-cycle counts in
//! the binomial random graph `G(n,p)`.
//!
//! The count `X` uses the subset convention: every 4-set contributes one per
//! cycle pairing whose four cycle pairs are edges and whose two diagonals are
//! not, so `E[X] = 3 C(n,4) p^4 (1-p)^2`. All logarithms are natural.

pub mod cli;
pub mod cores;
pub mod error;
pub mod extremal;
pub mod graph;
pub mod meanfield;
pub mod montecarlo;
pub mod rates;
pub mod subcube;
pub mod varsolve;

pub use error::{Error, Result};
pub use graph::{Pattern, SimpleGraph};
