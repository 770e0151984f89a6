//! Multiuser downlink scheduling over time-correlated Rayleigh fading.
//!
//! The crate evaluates random-coding error exponents of a Gauss–Markov
//! fading channel, optimizes rate and codeword length per user, compares
//! three user-selection strategies, and provides the closed-form asymptotic
//! throughput laws they are measured against.
//!
//! * [`fading`]: channel densities, the scaled Bessel function and samplers.
//! * [`exponent`]: error exponents, frame-error bound and throughput.
//! * [`optimizer`]: the single-user rate / length fixed point.
//! * [`scheduler`]: strategies I–III and an exhaustive reference.
//! * [`asymptotics`]: scaling laws and the expected `log(1/α_max)`.
//! * [`harness`]: seeded Monte-Carlo sweeps, validation and output.

pub mod asymptotics;
pub mod error;
pub mod exponent;
pub mod fading;
pub mod harness;
pub mod optimizer;
pub mod quadrature;
pub mod rng;
pub mod scheduler;
pub mod stats;

use serde::Serialize;

pub use error::{Error, Result};
pub use exponent::{
    exponent_exact_mc, exponent_exact_mc_parallel, exponent_theorem1, frame_throughput,
    pe_upper_bound, ExponentEstimate, ExponentMethod, LinkDesign,
};
pub use fading::{
    i0_scaled, initial_density, sample_initial, sample_trace, transition_density,
    AlphaDistribution, ChannelTrace, FadingParams,
};
pub use harness::{run_sweep, Execution, ExponentMode, SweepConfig, SweepResult};
pub use optimizer::{
    optimal_rho, rho_from_length, solve_operating_point, OperatingPoint, OptimalityInputs,
};
pub use rng::{substream, SimRng};
pub use scheduler::{Population, ScheduleOutcome, Strategy, UserState};

/// A leading-order value together with a flag for parameters outside the
/// regime where it is expected to be accurate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approximation {
    pub value: f64,
    pub low_accuracy: bool,
}
