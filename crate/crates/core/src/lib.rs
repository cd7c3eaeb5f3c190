//! Nonequilibrium steady states of a linearly biased open Holstein chain.
//!
//! The crate is split by concern:
//! - [`fockspace`]: truncated zero/one-exciton basis and ladder operators
//! - [`holstein`]: Hamiltonian, Wannier–Stark analysis, spectra and avoided crossings
//! - [`lindblad`]: secular, partial-secular and full generators, steady states, propagation
//! - [`kinetics`]: the coarse-grained kinetic model, its analytic steady states and rate fitting

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fockspace;
pub mod holstein;
pub mod kinetics;
mod linalg;
pub mod lindblad;

pub use error::{Error, Result};
