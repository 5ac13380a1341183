//! Analytical and simulated performance of IEEE 802.15.6 CSMA/CA in a
//! beacon-mode intra-WBAN star.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] and [`model`]: configuration types and closed-form quantities
//!   (windows, airtimes, packet error rate, lock probability).
//! * [`solver`]: the coupled per-priority Markov-chain system and its damped
//!   fixed-point solution.
//! * [`metrics`]: reliability, normalized throughput, energy and access delay.
//! * [`sim`]: a slot-level discrete-event simulation of the backoff procedure,
//!   used as an independent check on the analytical model.
//! * [`sweep`]: configuration files, parameter sweeps, CSV output and
//!   model-versus-simulation comparison.

pub mod error;
pub mod params;
pub mod model;
pub mod solver;
pub mod metrics;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{Mechanism, PhyMacConfig, Scenario, Traffic, UserPriorityParams, NUM_UPS};
pub use solver::{solve_fixed_point, SolutionState};
