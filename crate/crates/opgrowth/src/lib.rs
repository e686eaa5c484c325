//! Operator growth in charge-conserving quantum automaton circuits and
//! low-density bounds on chaos.
//!
//! The crate has three layers:
//! - stochastic: automaton circuits on bitstring states ([`circuit`],
//!   [`lattice`]), Monte Carlo correlators ([`observables`]), and rate / front
//!   extraction ([`analysis`]);
//! - exact: the μ̄-weighted operator inner product, size distributions, and
//!   Liouvillian block-norm bounds at small N ([`opsize`]);
//! - theory: closed-form large-N chaos exponents and butterfly velocities
//!   ([`syk`]).
//!
//! [`runner`] ties the layers to the command-line interface.

pub mod analysis;
pub mod circuit;
pub mod config;
pub mod error;
pub mod lattice;
pub mod manifest;
pub mod observables;
pub mod opsize;
pub mod plot;
pub mod runner;
pub mod stream;
pub mod syk;

pub use error::{Error, Result};
