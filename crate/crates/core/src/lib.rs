//! Maximin space-filling designs on bounded, possibly indicator-only domains.
//!
//! The crate is organised around the pieces of a computer-experiment workflow:
//!
//! * [`domain`]: bounded input regions given by a bounding box and a membership
//!   oracle, with rejection sampling, empirical covariance, volume and Gaussian-mass
//!   utilities.
//! * [`design`]: point sets, the maximin criterion with its tie-break, the Monte Carlo
//!   covering-radius estimate and an incremental pairwise-distance cache.
//! * [`annealer`]: three simulated-annealing chains that maximise the minimum
//!   inter-point distance (constrained proposal with exact density ratio, unconstrained
//!   proposal, constrained proposal with plain Metropolis acceptance).
//! * [`baselines`]: uniform, Latin hypercube (plain, maximin, truncated) and Sobol'
//!   comparison designs.
//! * [`kernel`]: kernel interpolation / Kriging with optional polynomial trend, power
//!   function, likelihood-based parameter fitting and error metrics.
//! * [`io`]: design CSV/JSON, trace JSON-lines and domain spec files.

pub mod annealer;
pub mod baselines;
pub mod design;
pub mod domain;
mod error;
pub mod io;
pub mod kernel;
pub mod rng;

pub use error::{Error, Result};
