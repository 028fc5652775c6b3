//! Chattering bang-bang controls for the one-dimensional heat equation.
//!
//! The crate builds a power series `P(z) = sum_m beta_m z^{alpha_m}` whose
//! coefficients are harmonic reciprocals arranged in sign-alternating blocks
//! ([`builder`]), evaluates and inspects its partial sums ([`series`]), turns
//! it into a terminal datum for the Neumann heat equation ([`spectral`]),
//! and assembles a boundary control problem whose optimal control is
//! bang-bang with a number of switches that grows without bound as the
//! truncation level increases ([`instance`]). A Crank-Nicolson solver
//! ([`fd`]) serves as an independent check of the spectral forward solve.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builder;
pub mod cli;
pub mod error;
pub mod exponents;
pub mod fd;
pub mod instance;
pub mod precision;
pub mod quadrature;
pub mod sequence;
pub mod series;
pub mod spectral;

pub use builder::{init_builder, run, run_with, BuilderConfig, BuilderState};
pub use error::{Error, Result};
pub use exponents::ExponentSpec;
pub use sequence::{Block, ChatterSequence, SequenceDocument, Term};
