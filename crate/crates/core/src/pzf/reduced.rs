//! PZF for `M = N - 1`, where `H^T G H` cannot take arbitrary values and the
//! optimization runs on `g = vec(G)` directly.
//!
//! Each forced zero `(i, j)` is the linear constraint
//! `sum_ab h_{a,i} h_{b,j} g_ab = 0`. The first `M^2 - Z_n` entries of `g`
//! stay free (`y`); the last `Z_n` (`r`) are eliminated as
//! `r = -C_r^-1 C_y y`, so every `y` satisfies the pattern exactly.

use num_complex::Complex64;

use super::SlotModel;
use crate::error::{Error, Result};
use crate::linalg::{diag, ensure_full_rank, pinv, CMatrix, CVector};
use crate::model::{ChannelMatrix, NetworkConfig, Schedule, ZeroPattern};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Elimination map of one slot: `g = E y`.
#[derive(Debug, Clone)]
pub struct ReducedSlot {
    expansion: CMatrix,
}

impl ReducedSlot {
    /// Number of free complex parameters.
    pub fn dim(&self) -> usize {
        self.expansion.ncols()
    }

    /// Row-major `vec(G)` for free parameters `y`.
    pub fn expand(&self, y: &[Complex64]) -> Vec<Complex64> {
        let e = &self.expansion;
        (0..e.nrows())
            .map(|r| (0..e.ncols()).map(|c| e[(r, c)] * y[c]).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    n: usize,
    m: usize,
    powers: Vec<f64>,
    relay_power: f64,
    schedule: Schedule,
    h: CMatrix,
    covariance: CMatrix,
    slots: Vec<ReducedSlot>,
}

impl ReducedProblem {
    pub fn new(h: &ChannelMatrix, config: &NetworkConfig) -> Result<Self> {
        config.check_channel(h)?;
        let hm = h.as_matrix().clone();
        let n = config.n_users();
        let m = config.m_antennas();
        ensure_full_rank(&hm)?;
        let pattern = ZeroPattern::from_schedule(config.schedule());
        let mut slots = Vec::with_capacity(n - 1);
        for slot in 1..n {
            let tuples: Vec<(usize, usize)> = pattern
                .tuples()
                .into_iter()
                .filter(|&(_, _, s)| s == slot)
                .map(|(i, j, _)| (i - 1, j - 1))
                .collect();
            let z = tuples.len();
            if z >= m * m {
                return Err(Error::InvalidConfig(format!(
                    "slot {slot} forces {z} zeros but the relay has only {} coefficients",
                    m * m
                )));
            }
            let d = m * m - z;
            let mut expansion = CMatrix::zeros(m * m, d);
            for c in 0..d {
                expansion[(c, c)] = Complex64::new(1.0, 0.0);
            }
            if z > 0 {
                let coeff = CMatrix::from_fn(z, m * m, |row, col| {
                    let (i, j) = tuples[row];
                    hm[(col / m, i)] * hm[(col % m, j)]
                });
                let c_y = coeff.columns(0, d).into_owned();
                let c_r = coeff.columns(d, z).into_owned();
                if ensure_full_rank(&c_r).is_err() {
                    return Err(Error::SingularConstraints { slot });
                }
                let inv = c_r.try_inverse().ok_or(Error::SingularConstraints { slot })?;
                let r = -(inv * c_y);
                expansion.view_mut((d, 0), (z, d)).copy_from(&r);
            }
            slots.push(ReducedSlot { expansion });
        }
        let covariance = &hm * diag(config.user_powers()) * hm.adjoint() + CMatrix::identity(m, m);
        Ok(ReducedProblem {
            n,
            m,
            powers: config.user_powers().to_vec(),
            relay_power: config.relay_power(),
            schedule: config.schedule().clone(),
            h: hm,
            covariance,
            slots,
        })
    }

    /// Elimination map of 1-based slot `n`.
    pub fn slot(&self, n: usize) -> &ReducedSlot {
        &self.slots[n - 1]
    }

    /// Beamformer for 1-based slot `n` and free parameters `y`.
    pub fn beamformer(&self, n: usize, y: &[Complex64]) -> Result<CMatrix> {
        let s = self.slots.get(n.wrapping_sub(1)).ok_or(Error::IndexOutOfRange {
            what: "slot",
            value: n,
            max: self.n - 1,
        })?;
        if y.len() != s.dim() {
            return Err(Error::LengthMismatch {
                expected: s.dim(),
                got: y.len(),
            });
        }
        Ok(CMatrix::from_row_slice(self.m, self.m, &s.expand(y)))
    }

    /// Starting point: the minimum-norm `y` whose target gains
    /// `A_{k, target(k)}` best fit 1 in least squares, scaled to `P_R`.
    pub fn initial_point(&self) -> Result<Vec<Vec<Complex64>>> {
        let (n, m) = (self.n, self.m);
        let mut blocks = Vec::with_capacity(n - 1);
        for (slot, s) in self.slots.iter().enumerate() {
            let fit = CMatrix::from_fn(n, s.dim(), |k, c| {
                let t = self.schedule.target0(k, slot);
                (0..m * m)
                    .map(|ab| self.h[(ab / m, k)] * self.h[(ab % m, t)] * s.expansion[(ab, c)])
                    .sum()
            });
            let ones = CVector::from_element(n, Complex64::new(1.0, 0.0));
            let y = pinv(&fit)? * ones;
            let mut y: Vec<Complex64> = y.iter().copied().collect();
            super::ascent::scale_block(self, slot, &mut y)?;
            blocks.push(y);
        }
        Ok(blocks)
    }

    fn products(&self, slot: usize, y: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (n, m) = (self.n, self.m);
        let g = self.slots[slot].expand(y);
        // H^T G, N x M
        let mut htg = vec![ZERO; n * m];
        for k in 0..n {
            for b in 0..m {
                htg[k * m + b] = (0..m).map(|a| self.h[(a, k)] * g[a * m + b]).sum();
            }
        }
        (g, htg)
    }
}

impl SlotModel for ReducedProblem {
    fn n_users(&self) -> usize {
        self.n
    }

    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn relay_power(&self) -> f64 {
        self.relay_power
    }

    fn rates(&self, slot: usize, y: &[Complex64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let (_, htg) = self.products(slot, y);
        for (k, rate) in out.iter_mut().enumerate() {
            let row = &htg[k * m..(k + 1) * m];
            let t = self.schedule.target0(k, slot);
            let gain = |j: usize| -> f64 {
                let a: Complex64 = (0..m).map(|b| row[b] * self.h[(b, j)]).sum();
                self.powers[j] * a.norm_sqr()
            };
            let interference: f64 = (0..n)
                .filter(|&j| j != t && !self.schedule.cancellable0(k, j, slot))
                .map(gain)
                .sum();
            let relay_noise: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            let gamma = gain(t) / (interference + relay_noise + 1.0);
            *rate = gamma.ln_1p() / std::f64::consts::LN_2;
        }
    }

    fn power(&self, slot: usize, y: &[Complex64]) -> f64 {
        let m = self.m;
        let g = self.slots[slot].expand(y);
        // tr{G R G^H} = sum_a g_a R g_a^H over rows g_a
        let mut total = 0.0;
        for a in 0..m {
            let ga = &g[a * m..(a + 1) * m];
            for i in 0..m {
                let s: Complex64 = (0..m).map(|j| self.covariance[(i, j)] * ga[j].conj()).sum();
                total += (ga[i] * s).re;
            }
        }
        total.max(0.0)
    }
}
