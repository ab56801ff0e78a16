//! Counting positive eigenvalues of radial Schrödinger operators `Δ − W`
//! with two-scale potentials `W = V₀ + ε² V₁(ε ·)`.
//!
//! The counts come from winding numbers of compactified Prüfer-angle flows
//! ([`odeflow`], [`manifolds`], [`spectrum`]) and are cross-checked by a
//! finite-difference Sturm-sequence count ([`oracle`]).

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod manifolds;
pub mod odeflow;
pub mod oracle;
pub mod potentials;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
