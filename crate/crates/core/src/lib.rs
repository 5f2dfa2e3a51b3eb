//! Distortion exponents of layered transmission over MIMO block-fading channels.
//!
//! A complex Gaussian source is quantized and sent over an `L`-block
//! Rayleigh-fading MIMO channel with `b` channel uses per source sample
//! (the bandwidth ratio). At high SNR the end-to-end expected distortion
//! decays as `ED ≈ SNR^{-Δ}`; the decay rate `Δ` is the *distortion
//! exponent*. This crate computes `Δ` for the classic transmission
//! strategies and cross-checks the closed forms with a seeded Monte Carlo
//! simulator:
//!
//! - an upper bound from informed-transmitter channel capacity,
//! - single-layer source + channel coding at the optimal multiplexing gain,
//! - layered source coding with time-sharing (LS), finitely or infinitely
//!   many layers,
//! - hybrid layered coding with an uncoded analog tail (HLS),
//! - broadcast-strategy superposition with successive decoding (BS).
//!
//! Everything is driven by the diversity–multiplexing tradeoff (DMT) of the
//! channel, a piecewise-linear, convex, decreasing curve `d*(r)`. The layer
//! solvers intersect lines with this curve analytically, so results are
//! exact up to floating point; no iterative root finding is involved.
//!
//! Organization:
//!
//! - [`channel`]: channel descriptions, the DMT curve, and the successive-
//!   decoding diversity of superposed layers.
//! - [`exponents`]: closed-form distortion exponents for every scheme.
//! - [`staircase`]: finite-layer allocation solvers (the KKT "staircase"
//!   for LS/HLS and the geometric gain assignment for BS).
//! - [`montecarlo`]: seeded, shard-stable outage simulation and empirical
//!   exponent fits.
//! - [`exact`]: closed-form finite-SNR expected distortion for
//!   single-antenna channels (used as a simulation oracle and by the
//!   optimizer).
//! - [`optimizer`]: exhaustive finite-SNR search over rate/share/power
//!   grids.

pub mod channel;
pub mod exact;
pub mod exponents;
pub mod montecarlo;
pub mod optimizer;
pub mod staircase;

pub use channel::{ChannelSpec, DmtCurve};
pub use exponents::{ExponentResult, Layers, Scheme};
pub use montecarlo::{MonteCarloEstimate, SimulationConfig};
pub use staircase::LayerAllocation;

/// Errors reported by the library.
///
/// The distinction between variants matters to callers: range and domain
/// errors indicate invalid questions (a caller bug or bad user input),
/// while [`Error::Infeasible`] flags a simulation that is well-posed
/// asymptotically but cannot run at the requested finite SNR.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Antenna or block counts that do not describe a channel.
    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),

    /// A numeric argument fell outside its documented interval.
    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A scheme was asked for outside the region where it is defined
    /// (e.g. HLS below the minimum bandwidth ratio for its analog part).
    #[error("domain precondition violated: {0}")]
    Domain(String),

    /// A layer allocation that breaks the scheme's structural invariants.
    #[error("invalid allocation: {0}")]
    Allocation(String),

    /// The simulation cannot be carried out at the requested finite SNR
    /// (e.g. superposition power levels fail to decrease).
    #[error("simulation infeasible: {0}")]
    Infeasible(String),

    /// An empirical estimate could not be formed from the data given.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A search grid larger than the safety guard.
    #[error("search grid has {points} candidates, exceeding the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
