//! Experiment configuration files.
//!
//! A configuration is a TOML document. Unknown keys are rejected, omitted
//! keys take the defaults below, and the resolved document (defaults filled
//! in) is what gets hashed and written next to the results.
//!
//! ```toml
//! experiment = "sumrate"          # sumrate | ser | sweep-users | schedule-compare | reduced-compare
//! designs = ["ZF", "PZF-Separate"] # ZF, MMSE, RZF, MF, PZF-Joint, PZF-Separate, PZF-Reduced
//! snr_db = [0.0, 10.0, 20.0]
//! trials = 100                    # default 100
//! seed = 0                        # default 0
//! rzf_alpha = 1.0                 # default 1.0 (RZF equals MMSE)
//!
//! [network]
//! users = 3
//! antennas = 3
//! user_powers = [1.0, 1.0, 1.0]   # default all 1
//! relay_power = 1.0               # default 1
//! channel = "homogeneous"         # or "heterogeneous" with distances and path_loss_exponent
//! decoding_order = "clockwise"    # or "counter-clockwise"
//! strategy = "unicast"            # or "hybrid" with unicast_source and multicast_order
//!
//! [optimizer]                     # all optional
//! probe_scaling = "printed"       # printed | clamped | exact | unit
//! improvement_threshold = 0.05
//! max_iterations = 1000
//! joint_step = 0.01
//! separate_step = 0.03
//! reduced_step = 0.03
//! fd_step = 1e-5
//!
//! [ser]
//! qam_order = 4
//!
//! [sweep]                         # sweep-users only
//! users = [3, 4, 5, 6, 7, 8]
//!
//! [[schedules]]                   # schedule-compare only
//! name = "hybrid-1"
//! strategy = "hybrid"
//! unicast_source = 1
//! multicast_order = [2, 3]
//!
//! [reduced]                       # reduced-compare only
//! networks = [[3, 3], [3, 2]]     # (users, antennas)
//! ```

use std::path::PathBuf;

use pzf_core::{
    ChannelModel, DecodingOrder, Design, NetworkConfig, OptimizerConfig, ProbeScaling, Qam, StopRule,
    Strategy,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown preset `{0}` (expected fig4, fig5, fig6, fig9, fig10 or fig12)")]
    UnknownPreset(String),
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(rename = "sumrate")]
    SumRateSweep,
    #[serde(rename = "ser")]
    SerSweep,
    #[serde(rename = "sweep-users")]
    UserCountSweep,
    #[serde(rename = "schedule-compare")]
    SchedulingCompare,
    #[serde(rename = "reduced-compare")]
    ReducedAntennaCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SumRateSweep => "sumrate",
            ExperimentKind::SerSweep => "ser",
            ExperimentKind::UserCountSweep => "sweep-users",
            ExperimentKind::SchedulingCompare => "schedule-compare",
            ExperimentKind::ReducedAntennaCompare => "reduced-compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignName {
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "RZF")]
    Rzf,
    #[serde(rename = "MF")]
    Mf,
    #[serde(rename = "PZF-Joint")]
    PzfJoint,
    #[serde(rename = "PZF-Separate")]
    PzfSeparate,
    #[serde(rename = "PZF-Reduced")]
    PzfReduced,
}

impl DesignName {
    fn design(self, rzf_alpha: f64) -> Design {
        match self {
            DesignName::Zf => Design::Zf,
            DesignName::Mmse => Design::Mmse,
            DesignName::Rzf => Design::Rzf(rzf_alpha),
            DesignName::Mf => Design::Mf,
            DesignName::PzfJoint => Design::PzfJoint,
            DesignName::PzfSeparate => Design::PzfSeparate,
            DesignName::PzfReduced => Design::PzfReduced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Homogeneous,
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderName {
    Clockwise,
    CounterClockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Unicast,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingName {
    Printed,
    Clamped,
    Exact,
    Unit,
}

fn default_trials() -> u64 {
    100
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// The configuration document as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: ExperimentKind,
    pub designs: Vec<DesignName>,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "one")]
    pub rzf_alpha: f64,
    pub network: NetworkSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub ser: SerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedules: Vec<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub users: usize,
    pub antennas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_powers: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub relay_power: f64,
    #[serde(default = "homogeneous")]
    pub channel: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    #[serde(default = "two")]
    pub path_loss_exponent: f64,
    #[serde(default = "clockwise")]
    pub decoding_order: OrderName,
    #[serde(default = "unicast")]
    pub strategy: StrategyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unicast_source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multicast_order: Option<Vec<usize>>,
}

fn homogeneous() -> ChannelKind {
    ChannelKind::Homogeneous
}

fn clockwise() -> OrderName {
    OrderName::Clockwise
}

fn unicast() -> StrategyName {
    StrategyName::Unicast
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "printed")]
    pub probe_scaling: ScalingName,
    #[serde(default = "five_percent")]
    pub improvement_threshold: f64,
    #[serde(default = "thousand")]
    pub max_iterations: usize,
    #[serde(default = "joint_step")]
    pub joint_step: f64,
    #[serde(default = "separate_step")]
    pub separate_step: f64,
    #[serde(default = "separate_step")]
    pub reduced_step: f64,
    #[serde(default = "fd_step")]
    pub fd_step: f64,
}

fn printed() -> ScalingName {
    ScalingName::Printed
}

fn five_percent() -> f64 {
    0.05
}

fn thousand() -> usize {
    1000
}

fn joint_step() -> f64 {
    OptimizerConfig::joint().step_size
}

fn separate_step() -> f64 {
    OptimizerConfig::separate().step_size
}

fn fd_step() -> f64 {
    OptimizerConfig::separate().fd_step
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            probe_scaling: printed(),
            improvement_threshold: five_percent(),
            max_iterations: thousand(),
            joint_step: joint_step(),
            separate_step: separate_step(),
            reduced_step: separate_step(),
            fd_step: fd_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerSection {
    #[serde(default = "four")]
    pub qam_order: usize,
}

fn four() -> usize {
    4
}

impl Default for SerSection {
    fn default() -> Self {
        SerSection { qam_order: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub name: String,
    pub strategy: StrategyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unicast_source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multicast_order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoding_order: Option<OrderName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSection {
    pub networks: Vec<[usize; 2]>,
}

/// Optimizer settings for each PZF variant.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub joint: OptimizerConfig,
    pub separate: OptimizerConfig,
    pub reduced: OptimizerConfig,
}

impl OptimizerSettings {
    pub fn for_design(&self, design: Design) -> Option<&OptimizerConfig> {
        match design {
            Design::PzfJoint => Some(&self.joint),
            Design::PzfSeparate => Some(&self.separate),
            Design::PzfReduced => Some(&self.reduced),
            _ => None,
        }
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            joint: OptimizerConfig::joint(),
            separate: OptimizerConfig::separate(),
            reduced: OptimizerConfig::reduced(),
        }
    }
}

/// A named broadcast schedule for scheduling comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSchedule {
    pub name: String,
    pub network: NetworkConfig,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub network: NetworkConfig,
    pub designs: Vec<Design>,
    pub snr_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub optimizer: OptimizerSettings,
    pub qam: Qam,
    /// `sweep-users`: one network per user count.
    pub user_sweep: Vec<NetworkConfig>,
    /// `schedule-compare`: one network per schedule.
    pub schedules: Vec<NamedSchedule>,
    /// `reduced-compare`: one network per (users, antennas) pair.
    pub reduced_networks: Vec<NetworkConfig>,
    resolved: RawConfig,
}

impl ExperimentSpec {
    /// The configuration with all defaults filled in.
    pub fn resolved(&self) -> &RawConfig {
        &self.resolved
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    parse_raw(text)?.validate()
}

/// Parses a configuration document without validating its invariants.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    Ok(toml::from_str(text)?)
}

fn order(o: OrderName) -> DecodingOrder {
    match o {
        OrderName::Clockwise => DecodingOrder::Clockwise,
        OrderName::CounterClockwise => DecodingOrder::CounterClockwise,
    }
}

fn strategy(
    field: &str,
    kind: StrategyName,
    unicast_source: Option<usize>,
    multicast_order: &Option<Vec<usize>>,
) -> Result<Strategy, ConfigError> {
    match kind {
        StrategyName::Unicast => {
            if unicast_source.is_some() || multicast_order.is_some() {
                return Err(invalid(
                    field,
                    "unicast_source and multicast_order only apply to the hybrid strategy",
                ));
            }
            Ok(Strategy::Unicast)
        }
        StrategyName::Hybrid => Ok(Strategy::HybridUniMulticast {
            unicast_source: unicast_source
                .ok_or_else(|| invalid(field, "hybrid strategy needs unicast_source"))?,
            multicast_order: multicast_order
                .clone()
                .ok_or_else(|| invalid(field, "hybrid strategy needs multicast_order"))?,
        }),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl RawConfig {
    /// Fills defaults that depend on other fields.
    pub fn resolve(mut self) -> Self {
        let n = self.network.users;
        self.network.user_powers.get_or_insert_with(|| vec![1.0; n]);
        self
    }

    fn network_config(
        &self,
        users: usize,
        antennas: usize,
        field: &str,
    ) -> Result<NetworkConfig, ConfigError> {
        let net = &self.network;
        let powers = match &net.user_powers {
            Some(p) if p.len() == users => p.clone(),
            Some(p) if p.iter().all(|v| *v == p[0]) && !p.is_empty() => vec![p[0]; users],
            Some(p) => {
                return Err(invalid(
                    "network.user_powers",
                    format!("{} powers given for {users} users", p.len()),
                ))
            }
            None => vec![1.0; users],
        };
        let channel = match net.channel {
            ChannelKind::Homogeneous => {
                if net.distances.is_some() {
                    return Err(invalid(
                        "network.distances",
                        "only used with heterogeneous channels",
                    ));
                }
                ChannelModel::Homogeneous { variance: 1.0 }
            }
            ChannelKind::Heterogeneous => {
                let d = net
                    .distances
                    .clone()
                    .ok_or_else(|| invalid("network.distances", "heterogeneous channels need distances"))?;
                ChannelModel::heterogeneous(d, 1.0, net.path_loss_exponent)
                    .map_err(|e| invalid("network.distances", e))?
            }
        };
        let strat = strategy(
            "network.strategy",
            net.strategy,
            net.unicast_source,
            &net.multicast_order,
        )?;
        NetworkConfig::from_parts(
            users,
            antennas,
            powers,
            net.relay_power,
            channel,
            strat,
            order(net.decoding_order),
        )
        .map_err(|e| invalid(field, e))
    }

    /// Checks every invariant and builds the experiment.
    pub fn validate(self) -> Result<ExperimentSpec, ConfigError> {
        let raw = self.resolve();
        if raw.designs.is_empty() {
            return Err(invalid("designs", "at least one design is needed"));
        }
        if raw.snr_db.is_empty() {
            return Err(invalid("snr_db", "at least one SNR point is needed"));
        }
        if let Some(s) = raw.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(invalid("snr_db", format!("SNR values must be finite, got {s}")));
        }
        if raw.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        positive("rzf_alpha", raw.rzf_alpha)?;
        positive("network.path_loss_exponent", raw.network.path_loss_exponent)?;

        let network = raw.network_config(raw.network.users, raw.network.antennas, "network")?;
        let designs: Vec<Design> = raw.designs.iter().map(|d| d.design(raw.rzf_alpha)).collect();
        let optimizer = raw.optimizer_settings()?;
        let qam = Qam::new(raw.ser.qam_order).map_err(|e| invalid("ser.qam_order", e))?;

        let mut user_sweep = Vec::new();
        let mut schedules = Vec::new();
        let mut reduced_networks = Vec::new();
        let kind = raw.experiment;
        match kind {
            ExperimentKind::SumRateSweep | ExperimentKind::SerSweep => {
                check_designs(&designs, &network)?;
            }
            ExperimentKind::UserCountSweep => {
                let sweep = raw
                    .sweep
                    .as_ref()
                    .ok_or_else(|| invalid("sweep", "sweep-users needs a [sweep] table"))?;
                if sweep.users.is_empty() {
                    return Err(invalid("sweep.users", "at least one user count is needed"));
                }
                if raw.network.channel == ChannelKind::Heterogeneous {
                    return Err(invalid(
                        "network.channel",
                        "user sweeps need homogeneous channels",
                    ));
                }
                if raw.network.strategy == StrategyName::Hybrid {
                    return Err(invalid(
                        "network.strategy",
                        "user sweeps need the unicast strategy",
                    ));
                }
                for &n in &sweep.users {
                    let net = raw.network_config(n, raw.network.antennas, "sweep.users")?;
                    check_designs(&designs, &net)?;
                    user_sweep.push(net);
                }
            }
            ExperimentKind::SchedulingCompare => {
                if raw.schedules.is_empty() {
                    return Err(invalid(
                        "schedules",
                        "schedule-compare needs [[schedules]] entries",
                    ));
                }
                for (idx, s) in raw.schedules.iter().enumerate() {
                    let field = format!("schedules[{idx}]");
                    if raw.schedules[..idx].iter().any(|o| o.name == s.name) {
                        return Err(invalid(&field, format!("duplicate schedule name `{}`", s.name)));
                    }
                    let strat = strategy(&field, s.strategy, s.unicast_source, &s.multicast_order)?;
                    let mut net = network
                        .clone()
                        .with_strategy(strat)
                        .map_err(|e| invalid(&field, e))?;
                    if let Some(o) = s.decoding_order {
                        net = net
                            .with_decoding_order(order(o))
                            .map_err(|e| invalid(&field, e))?;
                    }
                    check_designs(&designs, &net)?;
                    schedules.push(NamedSchedule {
                        name: s.name.clone(),
                        network: net,
                    });
                }
            }
            ExperimentKind::ReducedAntennaCompare => {
                let reduced = raw
                    .reduced
                    .as_ref()
                    .ok_or_else(|| invalid("reduced", "reduced-compare needs a [reduced] table"))?;
                if reduced.networks.is_empty() {
                    return Err(invalid("reduced.networks", "at least one network is needed"));
                }
                for &[n, m] in &reduced.networks {
                    let net = raw.network_config(n, m, "reduced.networks")?;
                    if reduced_designs(&designs, &net).is_empty() {
                        return Err(invalid(
                            "reduced.networks",
                            format!("no requested design applies to N = {n}, M = {m}"),
                        ));
                    }
                    reduced_networks.push(net);
                }
            }
        }
        if kind != ExperimentKind::UserCountSweep && raw.sweep.is_some() {
            return Err(invalid("sweep", "only used by sweep-users"));
        }
        if kind != ExperimentKind::SchedulingCompare && !raw.schedules.is_empty() {
            return Err(invalid("schedules", "only used by schedule-compare"));
        }
        if kind != ExperimentKind::ReducedAntennaCompare && raw.reduced.is_some() {
            return Err(invalid("reduced", "only used by reduced-compare"));
        }

        Ok(ExperimentSpec {
            kind,
            network,
            designs,
            snr_grid: raw.snr_db.clone(),
            trials: raw.trials,
            seed: raw.seed,
            output: raw.output.clone(),
            optimizer,
            qam,
            user_sweep,
            schedules,
            reduced_networks,
            resolved: raw,
        })
    }

    fn optimizer_settings(&self) -> Result<OptimizerSettings, ConfigError> {
        let o = &self.optimizer;
        let scaling = match o.probe_scaling {
            ScalingName::Printed => ProbeScaling::Printed,
            ScalingName::Clamped => ProbeScaling::ClampedAtOne,
            ScalingName::Exact => ProbeScaling::Exact,
            ScalingName::Unit => ProbeScaling::Unit,
        };
        let stop = StopRule::RelativeImprovement {
            threshold: o.improvement_threshold,
            max_iterations: o.max_iterations,
        };
        let build = |mut c: OptimizerConfig, step: f64, field: &str| {
            c.step_size = step;
            c.fd_step = o.fd_step;
            c.stop = stop;
            c.probe_scaling = scaling;
            c.validate().map_err(|e| invalid(field, e))?;
            Ok::<_, ConfigError>(c)
        };
        Ok(OptimizerSettings {
            joint: build(OptimizerConfig::joint(), o.joint_step, "optimizer.joint_step")?,
            separate: build(
                OptimizerConfig::separate(),
                o.separate_step,
                "optimizer.separate_step",
            )?,
            reduced: build(
                OptimizerConfig::reduced(),
                o.reduced_step,
                "optimizer.reduced_step",
            )?,
        })
    }
}

/// Designs that need at least as many antennas as users.
fn needs_full_relay(design: Design) -> bool {
    matches!(design, Design::Zf | Design::PzfJoint | Design::PzfSeparate)
}

fn check_designs(designs: &[Design], net: &NetworkConfig) -> Result<(), ConfigError> {
    let (n, m) = (net.n_users(), net.m_antennas());
    for &d in designs {
        if m < n && needs_full_relay(d) {
            return Err(invalid(
                "designs",
                format!("{d} needs at least as many antennas as users (N = {n}, M = {m})"),
            ));
        }
    }
    Ok(())
}

/// Designs run on `net` in a reduced-antenna comparison. With `M = N - 1`
/// every PZF variant becomes PZF-Reduced and full-relay baselines drop out.
pub fn reduced_designs(designs: &[Design], net: &NetworkConfig) -> Vec<Design> {
    let reduced = net.m_antennas() < net.n_users();
    let mut out: Vec<Design> = Vec::new();
    for &d in designs {
        let d = match d {
            _ if reduced && d.is_pzf() => Design::PzfReduced,
            _ if reduced && needs_full_relay(d) => continue,
            d => d,
        };
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = ["fig4", "fig5", "fig6", "fig9", "fig10", "fig12"];

fn grid(from: i32, to: i32, step: i32) -> Vec<f64> {
    (from..=to).step_by(step as usize).map(f64::from).collect()
}

fn base(experiment: ExperimentKind, designs: Vec<DesignName>, snr_db: Vec<f64>, trials: u64) -> RawConfig {
    RawConfig {
        experiment,
        designs,
        snr_db,
        trials,
        seed: 1,
        output: None,
        rzf_alpha: 1.0,
        network: NetworkSection {
            users: 3,
            antennas: 3,
            user_powers: None,
            relay_power: 1.0,
            channel: ChannelKind::Homogeneous,
            distances: None,
            path_loss_exponent: 2.0,
            decoding_order: OrderName::Clockwise,
            strategy: StrategyName::Unicast,
            unicast_source: None,
            multicast_order: None,
        },
        optimizer: OptimizerSection::default(),
        ser: SerSection::default(),
        sweep: None,
        schedules: Vec::new(),
        reduced: None,
    }
    .resolve()
}

fn hybrid(name: &str, unicast_source: usize, multicast_order: Vec<usize>) -> ScheduleSection {
    ScheduleSection {
        name: name.into(),
        strategy: StrategyName::Hybrid,
        unicast_source: Some(unicast_source),
        multicast_order: Some(multicast_order),
        decoding_order: None,
    }
}

/// Configuration reproducing one of the figure experiments.
pub fn preset(name: &str) -> Result<RawConfig, ConfigError> {
    use DesignName::*;
    let raw = match name {
        "fig4" => base(
            ExperimentKind::SumRateSweep,
            vec![Zf, Mmse, Mf, PzfJoint, PzfSeparate],
            grid(0, 30, 5),
            500,
        ),
        "fig5" => {
            let mut r = base(
                ExperimentKind::UserCountSweep,
                vec![Zf, PzfSeparate],
                vec![20.0],
                200,
            );
            r.network.antennas = 8;
            r.sweep = Some(SweepSection {
                users: (3..=8).collect(),
            });
            r
        }
        "fig6" => base(
            ExperimentKind::SerSweep,
            vec![Zf, Mf, PzfSeparate],
            grid(0, 20, 5),
            100_000,
        ),
        "fig9" => {
            let mut r = base(
                ExperimentKind::SchedulingCompare,
                vec![Zf, PzfSeparate],
                grid(0, 30, 5),
                300,
            );
            r.schedules = vec![
                ScheduleSection {
                    name: "unicast".into(),
                    strategy: StrategyName::Unicast,
                    unicast_source: None,
                    multicast_order: None,
                    decoding_order: None,
                },
                hybrid("hybrid", 1, vec![2, 3]),
            ];
            r
        }
        "fig10" => {
            let mut r = base(
                ExperimentKind::SchedulingCompare,
                vec![Zf, PzfSeparate],
                grid(0, 30, 5),
                300,
            );
            r.network.channel = ChannelKind::Heterogeneous;
            r.network.distances = Some(vec![1.0, 1.0, 2.0]);
            r.schedules = vec![
                hybrid("hybrid-1", 1, vec![2, 3]),
                hybrid("hybrid-2", 1, vec![3, 2]),
            ];
            r
        }
        "fig12" => {
            let mut r = base(
                ExperimentKind::ReducedAntennaCompare,
                vec![PzfSeparate],
                grid(0, 30, 5),
                300,
            );
            r.reduced = Some(ReducedSection {
                networks: vec![[3, 3], [3, 2], [4, 4], [4, 3]],
            });
            r
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "sumrate"
designs = ["ZF"]
snr_db = [10.0]

[network]
users = 3
antennas = 3
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.designs, vec![Design::Zf]);
        assert_eq!(spec.network.user_powers(), &[1.0, 1.0, 1.0]);
        assert_eq!(spec.network.relay_power(), 1.0);
        assert_eq!(spec.qam.order(), 4);
        assert_eq!(spec.optimizer, OptimizerSettings::default());
        assert_eq!(spec.resolved().network.user_powers, Some(vec![1.0; 3]));
    }

    #[test]
    fn too_few_antennas_is_rejected() {
        let text = MINIMAL.replace("antennas = 3", "antennas = 1");
        let err = parse_config(&text).unwrap_err();
        assert!(
            matches!(err, ConfigError::Invalid { ref field, .. } if field == "network"),
            "{err}"
        );
        assert!(err.to_string().contains("N-1"));
    }

    #[test]
    fn unknown_key_is_reported_with_its_line() {
        let text = MINIMAL.replace("antennas = 3", "antennas = 3\nantenas = 4");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("antenas"), "{msg}");
        assert!(msg.contains("line 9"), "{msg}");
    }

    #[test]
    fn empty_lists_and_zero_trials_are_rejected() {
        for (from, to, field) in [
            (r#"designs = ["ZF"]"#, "designs = []", "designs"),
            ("snr_db = [10.0]", "snr_db = []", "snr_db"),
            ("snr_db = [10.0]", "snr_db = [10.0]\ntrials = 0", "trials"),
        ] {
            let err = parse_config(&MINIMAL.replace(from, to)).unwrap_err();
            assert!(
                matches!(err, ConfigError::Invalid { field: ref f, .. } if f == field),
                "{err}"
            );
        }
    }

    #[test]
    fn zf_needs_a_full_relay() {
        let text = MINIMAL.replace("antennas = 3", "antennas = 2");
        assert!(parse_config(&text).is_err());
        let text = text.replace(r#"designs = ["ZF"]"#, r#"designs = ["PZF-Reduced", "MF"]"#);
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn hybrid_fields_are_checked() {
        let text = format!("{MINIMAL}strategy = \"hybrid\"\nunicast_source = 1\n");
        assert!(parse_config(&text)
            .unwrap_err()
            .to_string()
            .contains("multicast_order"));
        let text = format!("{MINIMAL}strategy = \"hybrid\"\nunicast_source = 1\nmulticast_order = [2, 2]\n");
        assert!(parse_config(&text).is_err());
        let text = format!("{MINIMAL}strategy = \"hybrid\"\nunicast_source = 1\nmulticast_order = [3, 2]\n");
        assert!(parse_config(&text).is_ok());
        let text = format!("{MINIMAL}unicast_source = 1\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn fig4_preset_is_the_unit_power_three_user_network() {
        let spec = preset("fig4").unwrap().validate().unwrap();
        assert_eq!(spec.kind, ExperimentKind::SumRateSweep);
        assert_eq!((spec.network.n_users(), spec.network.m_antennas()), (3, 3));
        assert_eq!(spec.network.relay_power(), 1.0);
        assert_eq!(spec.network.user_powers(), &[1.0, 1.0, 1.0]);
        assert!(matches!(
            spec.network.channel_model(),
            ChannelModel::Homogeneous { .. }
        ));
    }

    #[test]
    fn fig5_preset_sweeps_users_with_eight_antennas() {
        let spec = preset("fig5").unwrap().validate().unwrap();
        let counts: Vec<(usize, usize)> = spec
            .user_sweep
            .iter()
            .map(|c| (c.n_users(), c.m_antennas()))
            .collect();
        assert_eq!(counts, (3..=8).map(|n| (n, 8)).collect::<Vec<_>>());
        assert_eq!(spec.snr_grid, vec![20.0]);
    }

    #[test]
    fn fig10_preset_has_two_hybrid_schedules() {
        let spec = preset("fig10").unwrap().validate().unwrap();
        assert_eq!(spec.schedules.len(), 2);
        let net = spec.network.at_snr_db(0.0).unwrap();
        let v = net.channel_variances();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        assert!((v[2] - 0.25).abs() < 1e-12);
        match spec.schedules[1].network.strategy() {
            Strategy::HybridUniMulticast { multicast_order, .. } => assert_eq!(multicast_order, &vec![3, 2]),
            s => panic!("unexpected {s:?}"),
        }
    }

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESETS {
            let raw = preset(name).unwrap();
            let text = toml::to_string(&raw).unwrap();
            assert_eq!(parse_raw(&text).unwrap(), raw, "{name}");
            raw.validate().unwrap();
        }
        assert!(matches!(preset("fig7"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn reduced_comparison_maps_pzf_designs() {
        let spec = preset("fig12").unwrap().validate().unwrap();
        let d = [Design::Zf, Design::PzfSeparate, Design::PzfJoint];
        assert_eq!(reduced_designs(&d, &spec.reduced_networks[0]), d.to_vec());
        assert_eq!(
            reduced_designs(&d, &spec.reduced_networks[1]),
            vec![Design::PzfReduced]
        );
    }

    #[test]
    fn tables_outside_their_experiment_are_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nusers = [3]\n");
        assert!(parse_config(&text).is_err());
    }
}
