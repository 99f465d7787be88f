//! Synthesis of non-orthogonal OFDM pilot sets with an exactly-zero
//! time-domain tail and suppressed auto/cross-correlation side peaks.
//!
//! * [`subspace`] builds the zero-tail operators from the IFFT partition.
//! * [`correlation`] holds the side-peak costs and their gradients.
//! * [`optimizer`] runs the alternating min-max search.
//! * [`papr`] adds the time-domain PAPR reduction passes.
//! * [`evaluator`] measures finished sets.
//! * [`config`] and [`io`] cover configuration and persistence.

pub mod config;
pub mod correlation;
pub mod error;
pub mod evaluator;
pub mod io;
pub mod optimizer;
pub mod papr;
pub mod subspace;

pub use error::{Error, Result};
