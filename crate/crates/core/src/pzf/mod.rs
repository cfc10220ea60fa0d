//! Partial zero-forcing (PZF) beamformer synthesis.
//!
//! PZF only forces to zero the interference a receiver cannot remove on its
//! own: symbols it has neither transmitted nor decoded in an earlier slot.
//! The remaining entries of each equivalent channel are free and are chosen by
//! a modified gradient ascent on the sum-rate, started from the ZF solution so
//! the result is never worse than ZF.
//!
//! * [`optimize_joint`] ascends all slots at once on the network objective.
//! * [`optimize_separate`] ascends each slot's own sum-rate in turn.
//! * [`optimize_reduced`] handles `M = N - 1`, where no equivalent-channel
//!   parameterization exists and the beamformer entries are optimized
//!   directly with the pattern constraints eliminated.

mod ascent;
mod free;
mod problem;
mod reduced;

use std::io::{self, Write};

use num_complex::Complex64;

use crate::baselines::{relay_power, BeamformerSet, Design};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{ChannelMatrix, NetworkConfig, Schedule};

pub use free::{pack, total_free, unpack, FreeVector};
pub use problem::{a_to_g, Objective, PzfProblem};
pub use reduced::{ReducedProblem, ReducedSlot};

/// When an ascent run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once an iteration improves the objective by less than
    /// `threshold` times the improvement of the first iteration.
    RelativeImprovement { threshold: f64, max_iterations: usize },
    /// Stop once the modified gradient's norm drops below `tolerance`.
    GradientNorm { tolerance: f64, max_iterations: usize },
}

impl StopRule {
    pub fn max_iterations(&self) -> usize {
        match *self {
            StopRule::RelativeImprovement { max_iterations, .. }
            | StopRule::GradientNorm { max_iterations, .. } => max_iterations,
        }
    }
}

/// How probe points of the modified gradient are brought back to the power budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeScaling {
    /// Divide by `alpha = phi(probe) / P_R` unconditionally.
    #[default]
    Printed,
    /// Divide by `max(1, alpha)`, i.e. only shrink probes that exceed the budget.
    ClampedAtOne,
    /// Divide by `sqrt(alpha)`, which puts every probe exactly on the budget.
    Exact,
    /// No scaling; the plain forward-difference gradient.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Joint,
    Separate,
    ReducedAntenna,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub mode: Mode,
    pub step_size: f64,
    /// Relative finite-difference step; the probe is `fd_step * max(1, |x_m|)`.
    pub fd_step: f64,
    pub stop: StopRule,
    pub probe_scaling: ProbeScaling,
    /// Step halvings tried before a non-improving iteration ends the run.
    pub max_halvings: u32,
    pub record_trace: bool,
}

impl OptimizerConfig {
    fn with_mode(mode: Mode, step_size: f64) -> Self {
        OptimizerConfig {
            mode,
            step_size,
            fd_step: 1e-5,
            stop: StopRule::RelativeImprovement {
                threshold: 0.05,
                max_iterations: 1000,
            },
            probe_scaling: ProbeScaling::Printed,
            max_halvings: 20,
            record_trace: false,
        }
    }

    pub fn joint() -> Self {
        Self::with_mode(Mode::Joint, 0.01)
    }

    pub fn separate() -> Self {
        Self::with_mode(Mode::Separate, 0.03)
    }

    pub fn reduced() -> Self {
        Self::with_mode(Mode::ReducedAntenna, 0.03)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.step_size) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if !positive(self.fd_step) {
            return Err(Error::InvalidConfig(format!(
                "finite-difference step must be positive, got {}",
                self.fd_step
            )));
        }
        let (threshold, max_iterations) = match self.stop {
            StopRule::RelativeImprovement {
                threshold,
                max_iterations,
            } => (threshold, max_iterations),
            StopRule::GradientNorm {
                tolerance,
                max_iterations,
            } => (tolerance, max_iterations),
        };
        if !positive(threshold) {
            return Err(Error::InvalidConfig(format!(
                "stopping threshold must be positive, got {threshold}"
            )));
        }
        if max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One committed iterate (iteration 0 is the starting point).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// BC slot of a per-slot run, `None` for the joint run.
    pub slot: Option<usize>,
    pub iteration: usize,
    pub objective: f64,
    /// Largest relay power over the blocks being optimized.
    pub power: f64,
    pub gradient_norm: f64,
    /// Step size actually taken after any halvings.
    pub step: f64,
}

/// Writes trace rows as CSV with a header.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "slot,iteration,objective,power,gradient_norm,step")?;
    for r in rows {
        let slot = r.slot.map(|s| s.to_string()).unwrap_or_else(|| "joint".into());
        writeln!(
            out,
            "{slot},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.iteration, r.objective, r.power, r.gradient_norm, r.step
        )?;
    }
    Ok(())
}

/// Summary of an optimizer run. Joint runs have one entry per vector,
/// separate and reduced runs one per slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizationReport {
    pub iterations: Vec<usize>,
    pub initial_objective: Vec<f64>,
    pub final_objective: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

impl OptimizationReport {
    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct PzfOutcome {
    pub beamformers: BeamformerSet,
    pub report: OptimizationReport,
}

/// Per-slot rates and relay power of one block of free parameters.
pub(crate) trait SlotModel {
    fn n_users(&self) -> usize;
    fn schedule(&self) -> &Schedule;
    fn relay_power(&self) -> f64;
    /// Interference-free rate of every receiver's target in `slot`.
    fn rates(&self, slot: usize, x: &[Complex64], out: &mut [f64]);
    fn power(&self, slot: usize, x: &[Complex64]) -> f64;
}

pub(crate) fn check_objective(objective: Objective, n_users: usize) -> Result<()> {
    if let Objective::Slot(n) = objective {
        if n == 0 || n >= n_users {
            return Err(Error::IndexOutOfRange {
                what: "slot",
                value: n,
                max: n_users - 1,
            });
        }
    }
    Ok(())
}

pub(crate) fn slot_rate_table<M: SlotModel + ?Sized>(model: &M, blocks: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    blocks
        .iter()
        .enumerate()
        .map(|(slot, x)| {
            let mut out = vec![0.0; model.n_users()];
            model.rates(slot, x, &mut out);
            out
        })
        .collect()
}

pub(crate) fn aggregate(schedule: &Schedule, objective: Objective, rates: &[Vec<f64>]) -> f64 {
    aggregate_with(schedule, objective, rates, None)
}

/// Objective value from a per-slot rate table, optionally with one slot's
/// rates swapped for `swap`.
pub(crate) fn aggregate_with(
    schedule: &Schedule,
    objective: Objective,
    rates: &[Vec<f64>],
    swap: Option<(usize, &[f64])>,
) -> f64 {
    let get = |slot: usize, k: usize| match swap {
        Some((s, r)) if s == slot => r[k],
        _ => rates[slot][k],
    };
    let n = schedule.n_users();
    match objective {
        Objective::Slot(slot) => (0..n).map(|k| get(slot - 1, k)).sum(),
        Objective::Joint => (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&k| k != i)
                    .map(|k| get(schedule.slot0(k, i), k))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum(),
    }
}

impl PzfProblem {
    /// Modified gradient of `objective` at `x`: length `W` for the joint
    /// objective, `U_n` for slot `n`.
    pub fn modified_gradient(
        &self,
        x: &FreeVector,
        objective: Objective,
        opt: &OptimizerConfig,
    ) -> Result<Vec<Complex64>> {
        check_objective(objective, self.n_users())?;
        let rates = slot_rate_table(self, x.slots());
        let grad = ascent::modified_gradient(self, x.slots(), &rates, objective, opt);
        Ok(grad.into_iter().flatten().collect())
    }

    /// Scales an equivalent channel so the relay spends exactly `P_R`.
    pub fn scale_equivalent(&self, a: &CMatrix) -> Result<CMatrix> {
        let p = self.equivalent_power(a);
        if p <= 0.0 || !p.is_finite() {
            return Err(Error::ZeroBeamformer);
        }
        Ok(a * Complex64::new((self.relay_power() / p).sqrt(), 0.0))
    }

    fn finish(&self, x: &FreeVector, design: Design) -> Result<BeamformerSet> {
        let gs = self
            .equivalent_channels(x)
            .iter()
            .map(|a| self.beamformer(a))
            .collect();
        BeamformerSet::new(gs, design)
    }
}

/// Multiplies `g` by the positive real factor that makes the relay power `P_R`.
pub fn scale_to_power(g: &CMatrix, h: &ChannelMatrix, config: &NetworkConfig) -> Result<CMatrix> {
    config.check_channel(h)?;
    let p = relay_power(g, h.as_matrix(), config.user_powers())?;
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::ZeroBeamformer);
    }
    Ok(g * Complex64::new((config.relay_power() / p).sqrt(), 0.0))
}

fn prepare(opt: &OptimizerConfig) -> Result<Option<Vec<TraceRow>>> {
    opt.validate()?;
    Ok(opt.record_trace.then(Vec::new))
}

/// Joint modified gradient ascent over all equivalent channels, started at ZF.
pub fn optimize_joint(
    h: &ChannelMatrix,
    config: &NetworkConfig,
    opt: &OptimizerConfig,
) -> Result<PzfOutcome> {
    let mut trace = prepare(opt)?;
    let problem = PzfProblem::new(h, config)?;
    let start = problem.zf_point();
    let run = ascent::ascend(
        &problem,
        Objective::Joint,
        start.into_slots(),
        opt,
        trace.as_mut(),
    )?;
    let x = FreeVector::from_slots(run.blocks, problem.pattern())?;
    Ok(PzfOutcome {
        beamformers: problem.finish(&x, Design::PzfJoint)?,
        report: OptimizationReport {
            iterations: vec![run.iterations],
            initial_objective: vec![run.initial],
            final_objective: vec![run.value],
            trace: trace.unwrap_or_default(),
        },
    })
}

/// Slot-by-slot modified gradient ascent on each slot's sum-rate, started at ZF.
pub fn optimize_separate(
    h: &ChannelMatrix,
    config: &NetworkConfig,
    opt: &OptimizerConfig,
) -> Result<PzfOutcome> {
    let mut trace = prepare(opt)?;
    let problem = PzfProblem::new(h, config)?;
    let mut blocks = problem.zf_point().into_slots();
    let mut report = OptimizationReport::default();
    for n in 1..config.n_users() {
        let run = ascent::ascend(&problem, Objective::Slot(n), blocks, opt, trace.as_mut())?;
        blocks = run.blocks;
        report.iterations.push(run.iterations);
        report.initial_objective.push(run.initial);
        report.final_objective.push(run.value);
    }
    report.trace = trace.unwrap_or_default();
    let x = FreeVector::from_slots(blocks, problem.pattern())?;
    Ok(PzfOutcome {
        beamformers: problem.finish(&x, Design::PzfSeparate)?,
        report,
    })
}

/// PZF for a relay with one antenna fewer than users (`M = N - 1`).
pub fn optimize_reduced(
    h: &ChannelMatrix,
    config: &NetworkConfig,
    opt: &OptimizerConfig,
) -> Result<PzfOutcome> {
    let mut trace = prepare(opt)?;
    let problem = ReducedProblem::new(h, config)?;
    let mut blocks = problem.initial_point()?;
    let mut report = OptimizationReport::default();
    for n in 1..config.n_users() {
        let run = ascent::ascend(&problem, Objective::Slot(n), blocks, opt, trace.as_mut())?;
        blocks = run.blocks;
        report.iterations.push(run.iterations);
        report.initial_objective.push(run.initial);
        report.final_objective.push(run.value);
    }
    report.trace = trace.unwrap_or_default();
    let gs = blocks
        .iter()
        .enumerate()
        .map(|(slot, y)| problem.beamformer(slot + 1, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(PzfOutcome {
        beamformers: BeamformerSet::new(gs, Design::PzfReduced)?,
        report,
    })
}

/// Dispatches on `opt.mode`.
pub fn optimize(h: &ChannelMatrix, config: &NetworkConfig, opt: &OptimizerConfig) -> Result<PzfOutcome> {
    match opt.mode {
        Mode::Joint => optimize_joint(h, config, opt),
        Mode::Separate => optimize_separate(h, config, opt),
        Mode::ReducedAntenna => optimize_reduced(h, config, opt),
    }
}
