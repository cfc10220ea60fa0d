use thiserror::Error;

/// Errors produced by the network model, beamformer designs and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} index {value} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient (smallest/largest singular value = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("zero-pattern constraint system is singular in slot {slot}")]
    SingularConstraints { slot: usize },

    #[error("free vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("objective became non-finite at iteration {iteration} (slot {slot:?})")]
    NonFinite { iteration: usize, slot: Option<usize> },

    #[error("cannot scale an all-zero beamformer to the relay power budget")]
    ZeroBeamformer,

    #[error("receiver and source must differ (both are user {0})")]
    SelfLink(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
