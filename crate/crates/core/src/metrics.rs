//! SINR, pairwise rates, common rates and network sum-rate.

use crate::baselines::BeamformerSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{ChannelMatrix, NetworkConfig};

/// Which interference terms a receiver is able to remove before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinrMode {
    /// Every symbol other than the desired one is interference.
    NoCancel,
    /// Self-interference and symbols decoded before slot `n` are subtracted.
    WithCancel(usize),
}

/// Cancellation model used by [`rate_report_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cancellation {
    None,
    #[default]
    Successive,
}

/// Per-pair, per-source and network rates in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `pair_rates[k-1][i-1]` is the rate from source `i` to receiver `k`.
    /// The diagonal is zero.
    pub pair_rates: Vec<Vec<f64>>,
    pub common_rates: Vec<f64>,
    pub sum_rate: f64,
}

/// SINR at receiver `k` for the symbol of user `i` under beamformer `g` (1-based).
pub fn sinr(
    h: &ChannelMatrix,
    g: &CMatrix,
    k: usize,
    i: usize,
    config: &NetworkConfig,
    mode: SinrMode,
) -> Result<f64> {
    config.check_channel(h)?;
    let n = config.n_users();
    let m = config.m_antennas();
    if g.nrows() != m || g.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "beamformer is {}x{}, expected {m}x{m}",
            g.nrows(),
            g.ncols()
        )));
    }
    let hk = h.user(k)?;
    h.user(i)?;
    if k == i {
        return Err(Error::SelfLink(k));
    }
    let excluded: Vec<usize> = match mode {
        SinrMode::NoCancel => vec![],
        SinrMode::WithCancel(slot) => {
            let mut v = config.schedule().decoded(k, slot)?;
            v.push(k);
            v
        }
    };
    let row = hk.transpose() * g;
    let hm = h.as_matrix();
    let powers = config.user_powers();
    let mut desired = 0.0;
    let mut interference = 0.0;
    for j in 1..=n {
        let gain = (&row * hm.column(j - 1))[(0, 0)].norm_sqr() * powers[j - 1];
        if j == i {
            desired = gain;
        } else if !excluded.contains(&j) {
            interference += gain;
        }
    }
    let relay_noise = row.norm_squared();
    Ok(desired / (interference + relay_noise + 1.0))
}

/// Rates with successive interference cancellation at every receiver.
pub fn rate_report(h: &ChannelMatrix, gs: &BeamformerSet, config: &NetworkConfig) -> Result<RateReport> {
    rate_report_with(h, gs, config, Cancellation::Successive)
}

pub fn rate_report_with(
    h: &ChannelMatrix,
    gs: &BeamformerSet,
    config: &NetworkConfig,
    cancellation: Cancellation,
) -> Result<RateReport> {
    config.check_channel(h)?;
    let n = config.n_users();
    let m = config.m_antennas();
    if gs.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} beamformers given for {} BC slots",
            gs.len(),
            n - 1
        )));
    }
    if gs.matrices()[0].nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "beamformers are {0}x{0}, relay has {m} antennas",
            gs.matrices()[0].nrows()
        )));
    }
    let schedule = config.schedule();
    let powers = config.user_powers();
    let hm = h.as_matrix();
    let ht = hm.transpose();
    let mut pair_rates = vec![vec![0.0; n]; n];
    for (slot, g) in gs.matrices().iter().enumerate() {
        let htg = &ht * g;
        let a = &htg * hm;
        for k in 0..n {
            let i = schedule.target0(k, slot);
            let relay_noise: f64 = htg.row(k).iter().map(|z| z.norm_sqr()).sum();
            let interference: f64 = (0..n)
                .filter(|&j| j != i)
                .filter(|&j| match cancellation {
                    Cancellation::None => true,
                    Cancellation::Successive => !schedule.cancellable0(k, j, slot),
                })
                .map(|j| powers[j] * a[(k, j)].norm_sqr())
                .sum();
            let gamma = powers[i] * a[(k, i)].norm_sqr() / (interference + relay_noise + 1.0);
            pair_rates[k][i] = (1.0 + gamma).log2();
        }
    }
    let common_rates: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&k| k != i)
                .map(|k| pair_rates[k][i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let sum_rate = (n - 1) as f64 / n as f64 * common_rates.iter().sum::<f64>();
    Ok(RateReport {
        pair_rates,
        common_rates,
        sum_rate,
    })
}
