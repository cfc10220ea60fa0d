//! Relay beamforming for multi-way relay networks with partial zero-forcing.
//!
//! `N` single-antenna users exchange messages through an `M`-antenna
//! amplify-and-forward relay: one multiple-access slot, then `N - 1`
//! broadcast slots, each with its own relay beamformer `G^(n)`. Users remove
//! their own and previously decoded symbols, so the relay only has to
//! null the remaining interference.

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod linksim;
pub mod metrics;
pub mod model;
pub mod pzf;
pub mod qam;

pub use baselines::{baseline_set, relay_power, BeamformerSet, Design};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use linksim::{simulate_block, simulate_ser, trial_rng, DecisionMode, LinkSettings, SerPoint, SerResult};
pub use metrics::{rate_report, rate_report_with, sinr, Cancellation, RateReport, SinrMode};
pub use model::{
    generate_channel, zero_pattern, ChannelMatrix, ChannelModel, DecodingOrder, NetworkConfig, Schedule,
    Strategy, ZeroPattern,
};
pub use pzf::{
    optimize, optimize_joint, optimize_reduced, optimize_separate, Mode, Objective, OptimizerConfig,
    ProbeScaling, PzfOutcome, PzfProblem, StopRule,
};
pub use qam::Qam;
