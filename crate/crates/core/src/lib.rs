//! # Factor-graph iterative MIMO detection and its error-functions-aided analysis
//!
//! This crate implements a belief-propagation MIMO detector on the factor
//! graph of a V-BLAST spatial-multiplexing link, together with the
//! error-functions-aided analysis (EF-AA): a deterministic per-channel
//! recursion that predicts the detector's mutual-information convergence from
//! erf/erfc closed forms instead of Monte-Carlo histograms.
//!
//! The crate is organized in layers:
//!
//! * [`numerics`]: erf/erfc kernels, the J curve fit between LLR variance
//!   and mutual information, and quadrature oracles,
//! * [`channel`]: Rayleigh channel sampling, SNR calibration, and the
//!   complex-to-real block expansion,
//! * [`modem`]: BPSK/QPSK bit mapping and hard decisions,
//! * [`detector`]: the message-passing detector itself,
//! * [`efaa`]: the analytical variance recursion mirroring the detector,
//! * [`harness`]: seeded Monte-Carlo experiments and CSV emission.
//!
//! Algorithmic code is generic over the scalar type through the [`Real`]
//! trait (`f32` or `f64`); the aliases below pin the double-precision
//! instantiation that the harness and command-line front end use.

pub mod channel;
pub mod detector;
pub mod efaa;
mod error;
pub mod grid;
pub mod harness;
pub mod modem;
pub mod numerics;
mod real;

pub use error::{Error, Result};
pub use modem::ModulationScheme;
pub use real::Real;

/// Double-precision channel realization.
pub type Channel64 = channel::ChannelRealization<f64>;
/// Double-precision real-domain channel.
pub type RealChannel64 = channel::RealChannel<f64>;
/// Double-precision message grid.
pub type Grid64 = grid::Grid<f64>;
/// Double-precision detector state.
pub type MessageGrid64 = detector::MessageGrid<f64>;
/// Double-precision detection result.
pub type DetectionResult64 = detector::DetectionResult<f64>;
/// Double-precision EF-AA state.
pub type EfaaState64 = efaa::EfaaState<f64>;
/// Double-precision AMI trace.
pub type AmiTrace64 = efaa::AmiTrace<f64>;
