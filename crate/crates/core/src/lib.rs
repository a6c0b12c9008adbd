//! Secure downlink beamforming for a multi-antenna access point assisted by a
//! reconfigurable intelligent surface (RIS), when only the second-order
//! statistics of the eavesdropper's channels are known.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] builds user-side channels and eavesdropper statistics from a
//!   planar geometry and Rician fading parameters.
//! * [`objective`] evaluates rates, the deterministic lower bound on the
//!   ergodic secrecy rate (LESR) and the augmented Lagrangian used by the
//!   solver, together with the quadratic-form parameterisations per block.
//! * [`solver`] is the double-loop penalty-dual solver: an outer loop updating
//!   multipliers and the penalty, and an inner block loop of Armijo-backtracked
//!   gradient steps on the phase vector and projected steps on the beamformer.
//! * [`baselines`] holds the reference schemes.
//! * [`monte_carlo`] estimates the ergodic secrecy rate by sampling.
//! * [`config`], [`sweep`] and [`validate`] drive experiments and oracle checks.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod error;
pub mod monte_carlo;
pub mod objective;
pub mod rng;
pub mod solver;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense real column vector.
pub type RVec = nalgebra::DVector<f64>;
