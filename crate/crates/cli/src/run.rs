//! Experiment orchestration.
//!
//! Trial `t` of every grid point draws its channel from the same random
//! stream, so designs, SNR points and schedules are compared on paired
//! channels. Trials run in parallel; results are reduced in trial order.

use log::{info, warn};
use pzf_core::{
    baseline_set, generate_channel, optimize, rate_report, simulate_ser, trial_rng, BeamformerSet,
    ChannelMatrix, Design, LinkSettings, NetworkConfig, Result,
};
use rayon::prelude::*;

use crate::config::{reduced_designs, ExperimentKind, ExperimentSpec, OptimizerSettings};
use crate::output::{config_hash, Row};

/// Mean and standard error of per-trial values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub failures: u64,
}

impl Summary {
    pub fn from_values(values: &[f64], failures: u64) -> Self {
        let n = values.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let stderr = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Summary {
            mean,
            stderr,
            trials: n as u64,
            failures,
        }
    }
}

/// Beamformers of `design` and, for PZF, the total ascent iterations.
pub fn design_beamformers(
    design: Design,
    h: &ChannelMatrix,
    config: &NetworkConfig,
    optimizer: &OptimizerSettings,
) -> Result<(BeamformerSet, Option<usize>)> {
    match optimizer.for_design(design) {
        Some(opt) => {
            let outcome = optimize(h, config, opt)?;
            Ok((outcome.beamformers, Some(outcome.report.total_iterations())))
        }
        None => Ok((baseline_set(h, config, design)?, None)),
    }
}

struct TrialResult {
    sum_rate: f64,
    iterations: Option<usize>,
}

fn evaluate(
    design: Design,
    h: &ChannelMatrix,
    config: &NetworkConfig,
    optimizer: &OptimizerSettings,
) -> Result<TrialResult> {
    let (gs, iterations) = design_beamformers(design, h, config, optimizer)?;
    let sum_rate = rate_report(h, &gs, config)?.sum_rate;
    if !sum_rate.is_finite() {
        return Err(pzf_core::Error::InvalidConfig(format!(
            "{design} gave a non-finite sum-rate"
        )));
    }
    Ok(TrialResult { sum_rate, iterations })
}

/// Per-design sum-rate and iteration summaries at one grid point.
pub struct RatePoint {
    pub design: Design,
    pub sum_rate: Summary,
    pub iterations: Option<Summary>,
}

/// Sum-rates of `designs` over `trials` paired channel draws on `config`.
pub fn rate_point(
    config: &NetworkConfig,
    designs: &[Design],
    trials: u64,
    seed: u64,
    optimizer: &OptimizerSettings,
) -> Vec<RatePoint> {
    let per_trial: Vec<Vec<Option<TrialResult>>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let h = generate_channel(config, &mut trial_rng(seed, trial));
            designs
                .iter()
                .map(|&d| match evaluate(d, &h, config, optimizer) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        warn!("trial {trial}: {d} failed: {e}");
                        None
                    }
                })
                .collect()
        })
        .collect();
    designs
        .iter()
        .enumerate()
        .map(|(j, &design)| {
            let ok: Vec<&TrialResult> = per_trial.iter().filter_map(|t| t[j].as_ref()).collect();
            let failures = trials - ok.len() as u64;
            let rates: Vec<f64> = ok.iter().map(|r| r.sum_rate).collect();
            let iterations = design.is_pzf().then(|| {
                let its: Vec<f64> = ok.iter().filter_map(|r| r.iterations).map(|i| i as f64).collect();
                Summary::from_values(&its, failures)
            });
            RatePoint {
                design,
                sum_rate: Summary::from_values(&rates, failures),
                iterations,
            }
        })
        .collect()
}

struct RowContext<'a> {
    spec: &'a ExperimentSpec,
    hash: String,
    rows: Vec<Row>,
}

impl RowContext<'_> {
    fn push(&mut self, design: String, snr_db: f64, config: &NetworkConfig, metric: &str, s: Summary) {
        self.rows.push(Row {
            experiment: self.spec.kind.name().to_string(),
            design,
            snr_db,
            n_users: config.n_users(),
            m_antennas: config.m_antennas(),
            metric_name: metric.to_string(),
            mean: s.mean,
            stderr: s.stderr,
            trials: s.trials,
            failures: s.failures,
            seed: self.spec.seed,
            config_hash: self.hash.clone(),
        });
    }

    fn rates(&mut self, base: &NetworkConfig, snr_db: f64, designs: &[Design], suffix: &str) -> Result<()> {
        let config = base.at_snr_db(snr_db)?;
        info!(
            "{}: N = {}, M = {}, {snr_db} dB{suffix}",
            self.spec.kind.name(),
            config.n_users(),
            config.m_antennas()
        );
        let spec = self.spec;
        for p in rate_point(&config, designs, spec.trials, spec.seed, &spec.optimizer) {
            let label = format!("{}{suffix}", p.design);
            self.push(label.clone(), snr_db, &config, "sum_rate", p.sum_rate);
            if let Some(it) = p.iterations {
                self.push(label, snr_db, &config, "iterations", it);
            }
        }
        Ok(())
    }
}

/// Runs the experiment and returns its rows in grid order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let mut ctx = RowContext {
        spec,
        hash: config_hash(spec),
        rows: Vec::new(),
    };
    match spec.kind {
        ExperimentKind::SumRateSweep => {
            for &snr in &spec.snr_grid {
                ctx.rates(&spec.network, snr, &spec.designs, "")?;
            }
        }
        ExperimentKind::UserCountSweep => {
            for net in &spec.user_sweep {
                for &snr in &spec.snr_grid {
                    ctx.rates(net, snr, &spec.designs, "")?;
                }
            }
        }
        ExperimentKind::SchedulingCompare => {
            for &snr in &spec.snr_grid {
                for s in &spec.schedules {
                    ctx.rates(&s.network, snr, &spec.designs, &format!(":{}", s.name))?;
                }
            }
        }
        ExperimentKind::ReducedAntennaCompare => {
            for net in &spec.reduced_networks {
                let designs = reduced_designs(&spec.designs, net);
                for &snr in &spec.snr_grid {
                    ctx.rates(net, snr, &designs, "")?;
                }
            }
        }
        ExperimentKind::SerSweep => ser_rows(&mut ctx)?,
    }
    Ok(ctx.rows)
}

fn ser_rows(ctx: &mut RowContext<'_>) -> Result<()> {
    let spec = ctx.spec;
    let settings = LinkSettings {
        constellation: spec.qam.clone(),
        ..LinkSettings::default()
    };
    let mut curves = Vec::with_capacity(spec.designs.len());
    for &design in &spec.designs {
        info!("ser: {design}");
        let points = simulate_ser(
            &spec.network,
            |h, cfg| design_beamformers(design, h, cfg, &spec.optimizer).map(|(gs, _)| gs),
            &spec.snr_grid,
            spec.trials,
            spec.seed,
            &settings,
        )?;
        curves.push((design, points));
    }
    for (idx, &snr) in spec.snr_grid.iter().enumerate() {
        let config = spec.network.at_snr_db(snr)?;
        for (design, points) in &curves {
            let p = &points[idx];
            for (metric, r) in [("ser", &p.realistic), ("ser_genie", &p.genie)] {
                let s = Summary {
                    mean: r.aggregate_ser,
                    stderr: r.trial_std_error,
                    trials: r.trials,
                    failures: r.failures,
                };
                ctx.push(design.to_string(), snr, &config, metric, s);
            }
        }
    }
    Ok(())
}
