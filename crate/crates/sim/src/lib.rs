//! Monte Carlo harness for covariance-surrogate antenna position optimization:
//! configuration, seeded trials, parameter sweeps, the multi-block loop,
//! beampatterns, the theory report and run manifests.

pub mod beampattern;
pub mod complexity;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod theory_suite;
pub mod timescale;
pub mod trial;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{Result, SimError};
pub use sweep::{run_sweep, Axis, SweepResult};
pub use trial::{run_trial, TrialRecord};
