//! Experiment harness for PZF relay beamforming: configuration files,
//! figure presets, Monte Carlo sweeps and CSV output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{
    parse_config, parse_raw, preset, ConfigError, ExperimentKind, ExperimentSpec, RawConfig, PRESETS,
};
pub use output::{config_hash, metadata, write_csv, Row, VERSION};
pub use run::{rate_point, run_experiment, RatePoint, Summary};
