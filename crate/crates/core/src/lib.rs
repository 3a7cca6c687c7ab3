//! Variationally optimized product formulas for simulating spin-chain
//! time evolution.
//!
//! The crate builds dense Hamiltonians for small chains, splits them into
//! internally commuting blocks, and approximates `e^{−iHt}` by products of
//! block exponentials whose coefficients follow variational equations of
//! motion instead of the fixed Trotter–Suzuki values.

pub mod analytic;
pub mod circuit;
pub mod error;
pub mod models;
pub mod operator;
pub mod reference;
pub mod variational;

pub use error::{Error, Result};
