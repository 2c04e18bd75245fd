//! Exact computer algebra for single-scale Dyson-Schwinger equations.
//!
//! Green functions are computed three ways: by fixed-point iteration of the
//! analytic equation, by summing decorated trees weighted with the recursive
//! Feynman rules, and by the closed-form binary tubing expansion.

pub mod cocycle;
pub mod dse;
pub mod error;
pub mod hopf;
pub mod poly;
pub mod series;
pub mod trees;
pub mod tubings;

pub use error::{Error, Result};
pub use poly::{Monomial, Poly, Rational, Symbol};
pub use series::{Coefficient, XSeries};
