//! Shared fixtures for the benchmarks.

use pzf_core::{generate_channel, trial_rng, ChannelMatrix, NetworkConfig};

/// Homogeneous `N`-user, `M`-antenna network at `snr_db` and one channel draw.
pub fn fixture(n: usize, m: usize, snr_db: f64, seed: u64) -> (NetworkConfig, ChannelMatrix) {
    let config = NetworkConfig::new(n, m)
        .and_then(|c| c.at_snr_db(snr_db))
        .expect("valid benchmark network");
    let h = generate_channel(&config, &mut trial_rng(seed, 0));
    (config, h)
}
