use thiserror::Error;

/// Errors raised by the model, geometry and optimizer layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("infeasible geometry: aperture {aperture} cannot hold {antennas} antennas at spacing {spacing}")]
    InfeasibleGeometry {
        antennas: usize,
        spacing: f64,
        aperture: f64,
    },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("position vector is infeasible (constraint row {row} violated by {excess:e})")]
    InfeasiblePoint { row: usize, excess: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("desired channel is zero; MVDR beamformer undefined")]
    ZeroChannel,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
