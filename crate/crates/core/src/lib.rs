//! Covariance-surrogate optimization of movable-antenna positions for
//! anti-jamming MVDR receivers.
//!
//! The crate is `no_std` with `alloc`. It provides the physical model
//! ([`model`]), the spacing/aperture feasible set and its exact projection
//! ([`geometry`]), the surrogate objective with closed-form derivatives
//! ([`objective`]), the projected trust-region optimizer ([`trsolver`]),
//! comparison methods ([`baselines`]) and numerical checks of the supporting
//! bounds ([`theory`]).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod stats;
pub mod theory;
pub mod trsolver;

pub use error::{Error, Result};
pub use geometry::{Apv, ConstraintSystem, GeometryConfig};
pub use linalg::{CMatrix, CVector, RMatrix, RVector, C64};
pub use model::{
    BeamformerWeights, DesiredPaths, FactorizedCovariance, JammerSet, ScenarioConfig,
    SnapshotBlock, SymbolBlock, SymbolLaw,
};
pub use objective::{Objective, PointModel, SurrogateContext};
pub use trsolver::{TrustRegionConfig, TrOutcome};
