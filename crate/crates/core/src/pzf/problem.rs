//! Optimization over the equivalent channels `A^(n) = H^T G^(n) H` for `M >= N`.
//!
//! With `H` of full column rank, `G = (H^T)^+ A H^+` reproduces `A` exactly
//! and every quantity the optimizer needs reduces to `N x N` algebra:
//!
//! * `|h_k^T G|^2 = a_k Q a_k^H` with `Q = (H^H H)^-1`,
//! * `tr{G (H P_s H^H + I) G^H} = tr{A (P_s + Q) A^H conj(Q)}`.

use num_complex::Complex64;

use super::free::{from_flat, pack_slot, to_flat, unpack_slot_into, FreeVector};
use super::SlotModel;
use crate::error::{Error, Result};
use crate::linalg::{ensure_full_rank, hpd_inverse, pinv, CMatrix};
use crate::model::{ChannelMatrix, NetworkConfig, Schedule, ZeroPattern};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// What the ascent maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `sum_i min_{k != i} R_{k,i}` over all slots at once.
    Joint,
    /// `sum_k R_{k, target(k, n)}` of one BC slot `n` (1-based).
    Slot(usize),
}

/// `G = (H^T)^+ A H^+`.
pub fn a_to_g(a: &CMatrix, h: &ChannelMatrix) -> Result<CMatrix> {
    let hm = h.as_matrix();
    let n = hm.ncols();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "equivalent channel is {}x{}, expected {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if hm.nrows() < n {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    Ok(pinv(&hm.transpose())? * a * pinv(hm)?)
}

/// Channel-dependent quantities shared by every objective and gradient
/// evaluation of one channel realization.
#[derive(Debug, Clone)]
pub struct PzfProblem {
    n: usize,
    powers: Vec<f64>,
    relay_power: f64,
    schedule: Schedule,
    pattern: ZeroPattern,
    q: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    h_pinv: CMatrix,
    ht_pinv: CMatrix,
}

impl PzfProblem {
    pub fn new(h: &ChannelMatrix, config: &NetworkConfig) -> Result<Self> {
        config.check_channel(h)?;
        let hm = h.as_matrix();
        let n = config.n_users();
        if config.m_antennas() < n {
            return Err(Error::InvalidConfig(format!(
                "equivalent-channel optimization needs M >= N, got M = {} and N = {n}",
                config.m_antennas()
            )));
        }
        ensure_full_rank(hm)?;
        let q = hpd_inverse(&(hm.adjoint() * hm))?;
        let q_flat = to_flat(&q);
        let b: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let extra = if idx / n == idx % n {
                    config.user_powers()[idx / n]
                } else {
                    0.0
                };
                q_flat[idx] + extra
            })
            .collect();
        let c = q_flat.iter().map(|z| z.conj()).collect();
        Ok(PzfProblem {
            n,
            powers: config.user_powers().to_vec(),
            relay_power: config.relay_power(),
            schedule: config.schedule().clone(),
            pattern: ZeroPattern::from_schedule(config.schedule()),
            q: q_flat,
            b,
            c,
            h_pinv: pinv(hm)?,
            ht_pinv: pinv(&hm.transpose())?,
        })
    }

    pub fn pattern(&self) -> &ZeroPattern {
        &self.pattern
    }

    pub fn n_users(&self) -> usize {
        self.n
    }

    /// `G = (H^T)^+ A H^+` using the cached pseudoinverses.
    pub fn beamformer(&self, a: &CMatrix) -> CMatrix {
        &self.ht_pinv * a * &self.h_pinv
    }

    /// Relay power spent by an equivalent channel `A`.
    pub fn equivalent_power(&self, a: &CMatrix) -> f64 {
        self.flat_power(&to_flat(a))
    }

    /// The ZF point: `A^(n)` is the slot's selection matrix scaled to `P_R`.
    pub fn zf_point(&self) -> FreeVector {
        let slots = (0..self.n - 1)
            .map(|slot| {
                let sel = self.schedule.selection_matrix(slot + 1).expect("slot in range");
                let flat = to_flat(&sel);
                let scale = (self.relay_power / self.flat_power(&flat)).sqrt();
                let scaled: Vec<Complex64> = flat.iter().map(|z| z * scale).collect();
                pack_slot(&scaled, self.pattern.mask0(slot))
            })
            .collect();
        FreeVector::from_slots(slots, &self.pattern).expect("pattern-consistent")
    }

    /// Equivalent channels for a free vector.
    pub fn equivalent_channels(&self, x: &FreeVector) -> Vec<CMatrix> {
        x.slots()
            .iter()
            .enumerate()
            .map(|(slot, xs)| from_flat(&self.expand(slot, xs), self.n))
            .collect()
    }

    /// Interference-free objective `f(x)` after partial zero-forcing and
    /// successive cancellation.
    pub fn objective(&self, x: &FreeVector, objective: Objective) -> Result<f64> {
        super::check_objective(objective, self.n)?;
        let rates = super::slot_rate_table(self, x.slots());
        Ok(super::aggregate(&self.schedule, objective, &rates))
    }

    fn expand(&self, slot: usize, x: &[Complex64]) -> Vec<Complex64> {
        let mut a = vec![ZERO; self.n * self.n];
        unpack_slot_into(x, self.pattern.mask0(slot), &mut a);
        a
    }

    fn flat_power(&self, a: &[Complex64]) -> f64 {
        let n = self.n;
        // AB = A (P_s + Q)
        let mut ab = vec![ZERO; n * n];
        for i in 0..n {
            for l in 0..n {
                let ail = a[i * n + l];
                if ail == ZERO {
                    continue;
                }
                for j in 0..n {
                    ab[i * n + j] += ail * self.b[l * n + j];
                }
            }
        }
        // tr{AB A^H C} = sum_ij (AB A^H)_ij C_ji
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for l in 0..n {
                    s += ab[i * n + l] * a[j * n + l].conj();
                }
                total += (s * self.c[j * n + i]).re;
            }
        }
        total.max(0.0)
    }
}

impl SlotModel for PzfProblem {
    fn n_users(&self) -> usize {
        self.n
    }

    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn relay_power(&self) -> f64 {
        self.relay_power
    }

    fn rates(&self, slot: usize, x: &[Complex64], out: &mut [f64]) {
        let n = self.n;
        let a = self.expand(slot, x);
        for (k, rate) in out.iter_mut().enumerate() {
            let row = &a[k * n..(k + 1) * n];
            let t = self.schedule.target0(k, slot);
            let mut relay_noise = ZERO;
            for (l, &rl) in row.iter().enumerate() {
                if rl == ZERO {
                    continue;
                }
                let q = &self.q[l * n..(l + 1) * n];
                let s: Complex64 = q.iter().zip(row).map(|(a, b)| a * b.conj()).sum();
                relay_noise += rl * s;
            }
            let gamma = self.powers[t] * row[t].norm_sqr() / (relay_noise.re.max(0.0) + 1.0);
            *rate = gamma.ln_1p() / std::f64::consts::LN_2;
        }
    }

    fn power(&self, slot: usize, x: &[Complex64]) -> f64 {
        self.flat_power(&self.expand(slot, x))
    }
}
