//! Symbol-level Monte Carlo simulation of one MAC slot followed by the
//! `N - 1` BC slots, with successive interference cancellation at the users.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::BeamformerSet;
use crate::error::{Error, Result};
use crate::model::{generate_channel, unit_noise, ChannelMatrix, NetworkConfig};
use crate::qam::Qam;

/// Which symbols a receiver subtracts before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionMode {
    /// Its own decisions from earlier slots, so errors propagate.
    Realistic,
    /// The true symbols.
    GenieAided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSettings {
    pub constellation: Qam,
    /// Multiplies the standard deviation of relay and user noise; 1 is the
    /// physical model, 0 a noiseless diagnostic.
    pub noise_scale: f64,
}

impl Default for LinkSettings {
    fn default() -> Self {
        LinkSettings {
            constellation: Qam::default(),
            noise_scale: 1.0,
        }
    }
}

/// One detection of `source`'s symbol at `receiver` in `slot` (all 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeEvent {
    pub receiver: usize,
    pub source: usize,
    pub slot: usize,
    pub error: bool,
}

/// Detections of one block under both decision modes, driven by the same
/// symbols and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub realistic: Vec<DecodeEvent>,
    pub genie: Vec<DecodeEvent>,
}

impl BlockOutcome {
    pub fn events(&self, mode: DecisionMode) -> &[DecodeEvent] {
        match mode {
            DecisionMode::Realistic => &self.realistic,
            DecisionMode::GenieAided => &self.genie,
        }
    }
}

/// Transmits one block of random symbols over `h` with beamformers `gs`.
///
/// The relay noise is received once in the MAC slot and forwarded in every BC
/// slot; user noise is fresh per slot. A zero effective gain to the target
/// counts as an error.
pub fn simulate_block<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    gs: &BeamformerSet,
    config: &NetworkConfig,
    settings: &LinkSettings,
    rng: &mut R,
) -> Result<BlockOutcome> {
    config.check_channel(h)?;
    let n = config.n_users();
    if gs.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} beamformers given for {} BC slots",
            gs.len(),
            n - 1
        )));
    }
    let qam = &settings.constellation;
    let hm = h.as_matrix();
    let powers = config.user_powers();
    let schedule = config.schedule();

    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..qam.order())).collect();
    let symbols: Vec<Complex64> = labels
        .iter()
        .zip(powers)
        .map(|(&l, &p)| qam.point(l) * p.sqrt())
        .collect();
    let s = crate::linalg::CVector::from_vec(symbols.clone());
    let relay_rx = hm * &s + unit_noise(hm.nrows(), rng) * Complex64::new(settings.noise_scale, 0.0);

    // decisions[k][j]: receiver k's estimate of s_j
    let mut decisions = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut realistic = Vec::with_capacity(n * (n - 1));
    let mut genie = Vec::with_capacity(n * (n - 1));
    for (slot, g) in gs.matrices().iter().enumerate() {
        let forwarded = g * &relay_rx;
        let user_noise = unit_noise(n, rng);
        for k in 0..n {
            let hk = hm.column(k);
            let row = hk.transpose() * g;
            let r = (hk.transpose() * &forwarded)[(0, 0)] + user_noise[k] * settings.noise_scale;
            let t = schedule.target0(k, slot);
            let gain = (&row * hm.column(t))[(0, 0)];
            let mut known = Complex64::new(0.0, 0.0);
            let mut truth = Complex64::new(0.0, 0.0);
            for j in (0..n).filter(|&j| j != t && schedule.cancellable0(k, j, slot)) {
                let a = (&row * hm.column(j))[(0, 0)];
                truth += a * symbols[j];
                known += a * if j == k { symbols[k] } else { decisions[k][j] };
            }
            let scale = gain * powers[t].sqrt();
            let detect = |residual: Complex64| (scale.norm() > 0.0).then(|| qam.nearest(residual / scale));
            let event = |label: Option<usize>| DecodeEvent {
                receiver: k + 1,
                source: t + 1,
                slot: slot + 1,
                error: label != Some(labels[t]),
            };
            let decided = detect(r - known);
            decisions[k][t] = decided.map_or(Complex64::new(0.0, 0.0), |l| qam.point(l) * powers[t].sqrt());
            realistic.push(event(decided));
            genie.push(event(detect(r - truth)));
        }
    }
    Ok(BlockOutcome { realistic, genie })
}

/// Symbol error rates of one decision mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SerResult {
    pub mode: DecisionMode,
    /// SER of the symbols each user receives, indexed by receiver.
    pub per_user_ser: Vec<f64>,
    /// Errors over all decode events.
    pub aggregate_ser: f64,
    pub errors: u64,
    pub events: u64,
    /// Blocks simulated (channel draws whose beamformer design succeeded).
    pub trials: u64,
    /// Channel draws skipped because the beamformer design failed.
    pub failures: u64,
    /// Standard error of the aggregate SER from the spread of per-block SERs.
    pub trial_std_error: f64,
}

impl SerResult {
    /// Binomial standard error of the aggregate SER.
    pub fn std_error(&self) -> f64 {
        if self.events == 0 {
            return 0.0;
        }
        let p = self.aggregate_ser;
        (p * (1.0 - p) / self.events as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerPoint {
    pub snr_db: f64,
    pub realistic: SerResult,
    pub genie: SerResult,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    errors: [Vec<u64>; 2],
    events: [Vec<u64>; 2],
    /// Sum over blocks of (errors in block)^2.
    squared: [u64; 2],
    trials: u64,
    failures: u64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            errors: [vec![0; n], vec![0; n]],
            events: [vec![0; n], vec![0; n]],
            squared: [0; 2],
            trials: 0,
            failures: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for m in 0..2 {
            self.squared[m] += other.squared[m];
            for (a, b) in self.errors[m].iter_mut().zip(&other.errors[m]) {
                *a += b;
            }
            for (a, b) in self.events[m].iter_mut().zip(&other.events[m]) {
                *a += b;
            }
        }
        self.trials += other.trials;
        self.failures += other.failures;
        self
    }

    fn result(&self, m: usize, mode: DecisionMode) -> SerResult {
        let errors: u64 = self.errors[m].iter().sum();
        let events: u64 = self.events[m].iter().sum();
        let rate = |e: u64, n: u64| if n == 0 { 0.0 } else { e as f64 / n as f64 };
        let trial_std_error = if self.trials < 2 || events == 0 {
            0.0
        } else {
            // every block has the same number of decode events
            let t = self.trials as f64;
            let per_block = events as f64 / t;
            let mean = errors as f64 / events as f64;
            let second = self.squared[m] as f64 / (per_block * per_block);
            let var = ((second - t * mean * mean) / (t - 1.0)).max(0.0);
            (var / t).sqrt()
        };
        SerResult {
            mode,
            per_user_ser: self.errors[m]
                .iter()
                .zip(&self.events[m])
                .map(|(&e, &n)| rate(e, n))
                .collect(),
            aggregate_ser: rate(errors, events),
            errors,
            events,
            trials: self.trials,
            failures: self.failures,
            trial_std_error,
        }
    }
}

/// Random stream of trial `trial` under `seed`; shared by every SNR point and
/// design so comparisons are paired.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// SER versus SNR. Every trial draws a channel, asks `design` for the
/// beamformers and simulates one block. Trials run in parallel and the
/// result does not depend on the thread count.
pub fn simulate_ser<F>(
    config: &NetworkConfig,
    design: F,
    snr_grid: &[f64],
    trials: u64,
    seed: u64,
    settings: &LinkSettings,
) -> Result<Vec<SerPoint>>
where
    F: Fn(&ChannelMatrix, &NetworkConfig) -> Result<BeamformerSet> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is needed".into()));
    }
    let n = config.n_users();
    snr_grid
        .iter()
        .map(|&snr_db| {
            let cfg = config.at_snr_db(snr_db)?;
            let tally = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(seed, trial);
                    let h = generate_channel(&cfg, &mut rng);
                    let mut t = Tally::new(n);
                    let Ok(gs) = design(&h, &cfg) else {
                        t.failures = 1;
                        return t;
                    };
                    let outcome = simulate_block(&h, &gs, &cfg, settings, &mut rng)
                        .expect("beamformers match the configuration");
                    for (m, events) in [&outcome.realistic, &outcome.genie].into_iter().enumerate() {
                        let mut block = 0u64;
                        for e in events {
                            t.events[m][e.receiver - 1] += 1;
                            t.errors[m][e.receiver - 1] += e.error as u64;
                            block += e.error as u64;
                        }
                        t.squared[m] = block * block;
                    }
                    t.trials = 1;
                    t
                })
                .reduce(|| Tally::new(n), Tally::merge);
            Ok(SerPoint {
                snr_db,
                realistic: tally.result(0, DecisionMode::Realistic),
                genie: tally.result(1, DecisionMode::GenieAided),
            })
        })
        .collect()
}
