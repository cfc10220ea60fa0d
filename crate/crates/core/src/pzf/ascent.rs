//! Modified gradient ascent shared by the joint, separate and reduced-antenna
//! optimizers.
//!
//! The ascent works on per-slot blocks of free parameters. A [`SlotModel`]
//! turns a block into per-receiver rates and a relay power; the objective
//! combines the per-slot rate tables.

use num_complex::Complex64;

use super::{aggregate_with, Objective, OptimizerConfig, ProbeScaling, SlotModel, StopRule, TraceRow};
use crate::error::{Error, Result};

pub(crate) struct RunOutcome {
    pub blocks: Vec<Vec<Complex64>>,
    pub initial: f64,
    pub value: f64,
    pub iterations: usize,
}

pub(crate) fn active_slots(objective: Objective, n_slots: usize) -> Vec<usize> {
    match objective {
        Objective::Joint => (0..n_slots).collect(),
        Objective::Slot(n) => vec![n - 1],
    }
}

/// Rescales a block by the positive real factor that puts it on the power budget.
pub(crate) fn scale_block<M: SlotModel + ?Sized>(model: &M, slot: usize, x: &mut [Complex64]) -> Result<()> {
    let p = model.power(slot, x);
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::ZeroBeamformer);
    }
    let s = (model.relay_power() / p).sqrt();
    x.iter_mut().for_each(|z| *z *= s);
    Ok(())
}

fn rate_table<M: SlotModel + ?Sized>(model: &M, blocks: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
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

/// The modified gradient: one-sided differences whose probe points are divided
/// by `phi(probe) / P_R` before the objective is evaluated. Blocks outside the
/// objective's active slots are returned empty.
pub(crate) fn modified_gradient<M: SlotModel + ?Sized>(
    model: &M,
    blocks: &[Vec<Complex64>],
    rates: &[Vec<f64>],
    objective: Objective,
    opt: &OptimizerConfig,
) -> Vec<Vec<Complex64>> {
    let schedule = model.schedule();
    let base = aggregate_with(schedule, objective, rates, None);
    let mut grad: Vec<Vec<Complex64>> = vec![Vec::new(); blocks.len()];
    let mut probe_rates = vec![0.0; model.n_users()];
    for slot in active_slots(objective, blocks.len()) {
        let block = &blocks[slot];
        let mut probe = block.clone();
        let mut d = Vec::with_capacity(block.len());
        for l in 0..block.len() {
            let eps = opt.fd_step * block[l].norm().max(1.0);
            let mut parts = [0.0; 2];
            for (part, dir) in [Complex64::new(eps, 0.0), Complex64::new(0.0, eps)]
                .into_iter()
                .enumerate()
            {
                probe.copy_from_slice(block);
                probe[l] += dir;
                let alpha = match opt.probe_scaling {
                    ProbeScaling::Unit => 1.0,
                    ProbeScaling::Printed => model.power(slot, &probe) / model.relay_power(),
                    ProbeScaling::Exact => (model.power(slot, &probe) / model.relay_power()).sqrt(),
                    ProbeScaling::ClampedAtOne => (model.power(slot, &probe) / model.relay_power()).max(1.0),
                };
                if alpha > 0.0 && alpha.is_finite() && alpha != 1.0 {
                    let inv = 1.0 / alpha;
                    probe.iter_mut().for_each(|z| *z *= inv);
                }
                model.rates(slot, &probe, &mut probe_rates);
                let f = aggregate_with(schedule, objective, rates, Some((slot, &probe_rates)));
                parts[part] = (f - base) / eps;
            }
            d.push(Complex64::new(parts[0], parts[1]));
        }
        grad[slot] = d;
    }
    grad
}

fn norm(grad: &[Vec<Complex64>]) -> f64 {
    grad.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Runs the move-rescale-accept loop from `blocks`, which must already be on
/// the power budget. Steps that would lower the objective are halved up to
/// `opt.max_halvings` times and never committed.
pub(crate) fn ascend<M: SlotModel + ?Sized>(
    model: &M,
    objective: Objective,
    mut blocks: Vec<Vec<Complex64>>,
    opt: &OptimizerConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<RunOutcome> {
    let schedule = model.schedule();
    let slots = active_slots(objective, blocks.len());
    let trace_slot = match objective {
        Objective::Joint => None,
        Objective::Slot(n) => Some(n),
    };
    let mut rates = rate_table(model, &blocks);
    let mut value = aggregate_with(schedule, objective, &rates, None);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            iteration: 0,
            slot: trace_slot,
        });
    }
    let initial = value;
    let max_iterations = opt.stop.max_iterations();
    let mut iterations = 0;
    let mut first_gain = None;

    let record = |trace: &mut Option<&mut Vec<TraceRow>>,
                  iteration: usize,
                  objective_value: f64,
                  blocks: &[Vec<Complex64>],
                  gradient_norm: f64,
                  step: f64| {
        if let Some(rows) = trace.as_deref_mut() {
            let power = slots
                .iter()
                .map(|&s| model.power(s, &blocks[s]))
                .fold(0.0, f64::max);
            rows.push(TraceRow {
                slot: trace_slot,
                iteration,
                objective: objective_value,
                power,
                gradient_norm,
                step,
            });
        }
    };

    while iterations < max_iterations {
        let grad = modified_gradient(model, &blocks, &rates, objective, opt);
        let gnorm = norm(&grad);
        if iterations == 0 {
            record(&mut trace, 0, value, &blocks, gnorm, 0.0);
        }
        if let StopRule::GradientNorm { tolerance, .. } = opt.stop {
            if gnorm < tolerance {
                break;
            }
        }
        if gnorm == 0.0 {
            break;
        }

        let mut step = opt.step_size;
        let mut accepted = None;
        for _ in 0..=opt.max_halvings {
            let mut candidate = blocks.clone();
            let mut ok = true;
            for &s in &slots {
                for (x, d) in candidate[s].iter_mut().zip(&grad[s]) {
                    *x += d * step;
                }
                if scale_block(model, s, &mut candidate[s]).is_err() {
                    ok = false;
                }
            }
            if ok {
                let mut cand_rates = rates.clone();
                for &s in &slots {
                    model.rates(s, &candidate[s], &mut cand_rates[s]);
                }
                let cand_value = aggregate_with(schedule, objective, &cand_rates, None);
                if !cand_value.is_finite() {
                    return Err(Error::NonFinite {
                        iteration: iterations + 1,
                        slot: trace_slot,
                    });
                }
                if cand_value >= value {
                    accepted = Some((candidate, cand_rates, cand_value));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((candidate, cand_rates, cand_value)) = accepted else {
            break;
        };
        let gain = cand_value - value;
        blocks = candidate;
        rates = cand_rates;
        value = cand_value;
        iterations += 1;
        record(&mut trace, iterations, value, &blocks, gnorm, step);

        if let StopRule::RelativeImprovement { threshold, .. } = opt.stop {
            let first = *first_gain.get_or_insert(gain);
            if gain <= threshold * first {
                break;
            }
        }
    }

    Ok(RunOutcome {
        blocks,
        initial,
        value,
        iterations,
    })
}
