//! Discrete-time oversampled Zak-OTFS transceiver chain.
//!
//! Pulse design on a delay-Doppler lattice (rectangular, root-raised-cosine,
//! prolate spheroidal and IOTA-orthogonalized prolate windows), a sparse
//! doubly-dispersive channel, embedded-pilot estimation, LMMSE detection and
//! Monte-Carlo sweeps over all of it.

pub mod channel;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod fft;
pub mod lattice;
pub mod pulse;
pub mod quad;
pub mod sim;
pub mod transceiver;
pub mod window;

/// Double-precision complex sample.
#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex<f64>;

pub use error::{Error, Result};
