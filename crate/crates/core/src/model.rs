//! Network configuration, channel generation and the index arithmetic of the
//! multi-way relaying protocol.
//!
//! Users and BC slots are 1-based wherever they cross the public API, so that
//! `decode_target(k, n)` reads exactly like `mod_N(k + n - 1) + 1`. Internally
//! everything is stored 0-based.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Statistical model of the user-to-relay channels.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Every entry of `H` is `CN(0, variance)`.
    Homogeneous { variance: f64 },
    /// Column `i` of `H` is `CN(0, (psi / d_i)^exponent)`.
    Heterogeneous {
        distances: Vec<f64>,
        psi: f64,
        exponent: f64,
    },
}

impl ChannelModel {
    pub fn homogeneous(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "channel variance must be positive and finite, got {variance}"
            )));
        }
        Ok(ChannelModel::Homogeneous { variance })
    }

    pub fn heterogeneous(distances: Vec<f64>, psi: f64, exponent: f64) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::InvalidConfig("no user distances given".into()));
        }
        if let Some(d) = distances.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "distances must be positive and finite, got {d}"
            )));
        }
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "path-loss constant must be positive, got {psi}"
            )));
        }
        if !exponent.is_finite() {
            return Err(Error::InvalidConfig("path-loss exponent must be finite".into()));
        }
        let model = ChannelModel::Heterogeneous {
            distances,
            psi,
            exponent,
        };
        if model.variances().iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig(
                "derived channel variances must be positive and finite".into(),
            ));
        }
        Ok(model)
    }

    /// Heterogeneous model whose first user sees `snr` (linear) at the relay,
    /// i.e. `psi` is picked so that `(psi / d_1)^exponent = snr`.
    pub fn heterogeneous_with_reference_snr(distances: Vec<f64>, snr: f64, exponent: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::InvalidConfig(format!("SNR must be positive, got {snr}")));
        }
        if exponent == 0.0 {
            return Err(Error::InvalidConfig(
                "path-loss exponent must be non-zero to place the reference SNR".into(),
            ));
        }
        let d1 = *distances
            .first()
            .ok_or_else(|| Error::InvalidConfig("no user distances given".into()))?;
        Self::heterogeneous(distances, d1 * snr.powf(1.0 / exponent), exponent)
    }

    /// Per-user channel variances. For the homogeneous model the single value
    /// is repeated by [`NetworkConfig::channel_variances`].
    fn variances(&self) -> Vec<f64> {
        match self {
            ChannelModel::Homogeneous { variance } => vec![*variance],
            ChannelModel::Heterogeneous {
                distances,
                psi,
                exponent,
            } => distances.iter().map(|d| (psi / d).powf(*exponent)).collect(),
        }
    }
}

/// How the relay distributes symbols over the BC slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Unicast,
    /// One fixed symbol is unicast to a rotating receiver while
    /// `multicast_order[n-1]` is multicast in slot `n`.
    HybridUniMulticast {
        unicast_source: usize,
        multicast_order: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodingOrder {
    #[default]
    Clockwise,
    CounterClockwise,
}

/// Which symbol each user decodes in each BC slot.
///
/// For unicast this follows the clockwise or counter-clockwise relation; for
/// hybrid uni/multicasting the multicast symbol of slot `n` is decoded by every
/// user except its own source, which decodes the unicast symbol instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    n_users: usize,
    // targets[n][k] = i, 0-based
    targets: Vec<Vec<usize>>,
    // slots[k][i] = n, 0-based; meaningless on the diagonal
    slots: Vec<Vec<usize>>,
}

impl Schedule {
    fn build(n_users: usize, strategy: &Strategy, order: DecodingOrder) -> Result<Self> {
        let n = n_users;
        let targets: Vec<Vec<usize>> = match strategy {
            Strategy::Unicast => (1..n)
                .map(|slot| {
                    (0..n)
                        .map(|k| match order {
                            DecodingOrder::Clockwise => (k + slot) % n,
                            DecodingOrder::CounterClockwise => (k + n - slot) % n,
                        })
                        .collect()
                })
                .collect(),
            Strategy::HybridUniMulticast {
                unicast_source,
                multicast_order,
            } => {
                let u = unicast_source - 1;
                multicast_order
                    .iter()
                    .map(|&m| {
                        let m = m - 1;
                        (0..n).map(|k| if k == m { u } else { m }).collect()
                    })
                    .collect()
            }
        };

        let mut slots = vec![vec![usize::MAX; n]; n];
        for (slot, row) in targets.iter().enumerate() {
            for (k, &i) in row.iter().enumerate() {
                if i == k || slots[k][i] != usize::MAX {
                    return Err(Error::InvalidConfig(format!(
                        "schedule does not deliver each symbol exactly once (user {} in slot {})",
                        k + 1,
                        slot + 1
                    )));
                }
                slots[k][i] = slot;
            }
        }
        Ok(Schedule {
            n_users,
            targets,
            slots,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_slots(&self) -> usize {
        self.n_users - 1
    }

    fn check_user(&self, what: &'static str, k: usize) -> Result<()> {
        if k == 0 || k > self.n_users {
            return Err(Error::IndexOutOfRange {
                what,
                value: k,
                max: self.n_users,
            });
        }
        Ok(())
    }

    fn check_slot(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_slots() {
            return Err(Error::IndexOutOfRange {
                what: "slot",
                value: n,
                max: self.n_slots(),
            });
        }
        Ok(())
    }

    /// Source decoded by receiver `k` in slot `n` (1-based).
    pub fn target(&self, k: usize, n: usize) -> Result<usize> {
        self.check_user("receiver", k)?;
        self.check_slot(n)?;
        Ok(self.targets[n - 1][k - 1] + 1)
    }

    /// Sources already decoded by `k` before slot `n` (1-based, in decoding order).
    pub fn decoded(&self, k: usize, n: usize) -> Result<Vec<usize>> {
        self.check_user("receiver", k)?;
        self.check_slot(n)?;
        Ok((0..n - 1).map(|q| self.targets[q][k - 1] + 1).collect())
    }

    /// Slot in which receiver `k` decodes source `i` (1-based).
    pub fn slot_of(&self, k: usize, i: usize) -> Result<usize> {
        self.check_user("receiver", k)?;
        self.check_user("source", i)?;
        if k == i {
            return Err(Error::SelfLink(k));
        }
        Ok(self.slots[k - 1][i - 1] + 1)
    }

    pub(crate) fn target0(&self, k: usize, slot: usize) -> usize {
        self.targets[slot][k]
    }

    pub(crate) fn slot0(&self, k: usize, i: usize) -> usize {
        self.slots[k][i]
    }

    /// True when receiver `k` can remove `j` itself in `slot` (own symbol or
    /// decoded earlier). 0-based.
    pub(crate) fn cancellable0(&self, k: usize, j: usize, slot: usize) -> bool {
        j == k || self.slots[k][j] < slot
    }

    /// The 0/1 matrix with a one at `(k, target(k, n))`; the ZF target for slot `n`.
    pub fn selection_matrix(&self, n: usize) -> Result<CMatrix> {
        self.check_slot(n)?;
        let mut t = CMatrix::zeros(self.n_users, self.n_users);
        for k in 0..self.n_users {
            t[(k, self.targets[n - 1][k])] = Complex64::new(1.0, 0.0);
        }
        Ok(t)
    }
}

/// Validated network description. Immutable once built; the `with_*`
/// methods return a re-validated copy.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    n_users: usize,
    m_antennas: usize,
    user_powers: Vec<f64>,
    relay_power: f64,
    channel_model: ChannelModel,
    strategy: Strategy,
    decoding_order: DecodingOrder,
    schedule: Schedule,
}

impl NetworkConfig {
    /// Unit powers, unit-variance homogeneous channels, clockwise unicast.
    pub fn new(n_users: usize, m_antennas: usize) -> Result<Self> {
        Self::from_parts(
            n_users,
            m_antennas,
            vec![1.0; n_users],
            1.0,
            ChannelModel::Homogeneous { variance: 1.0 },
            Strategy::Unicast,
            DecodingOrder::Clockwise,
        )
    }

    pub fn from_parts(
        n_users: usize,
        m_antennas: usize,
        user_powers: Vec<f64>,
        relay_power: f64,
        channel_model: ChannelModel,
        strategy: Strategy,
        decoding_order: DecodingOrder,
    ) -> Result<Self> {
        if n_users < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 users, got {n_users}"
            )));
        }
        if m_antennas + 1 < n_users {
            return Err(Error::InvalidConfig(format!(
                "relay needs at least N-1 = {} antennas, got {m_antennas}",
                n_users - 1
            )));
        }
        if user_powers.len() != n_users {
            return Err(Error::InvalidConfig(format!(
                "{} user powers given for {n_users} users",
                user_powers.len()
            )));
        }
        if let Some(p) = user_powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "user powers must be positive, got {p}"
            )));
        }
        if !(relay_power > 0.0 && relay_power.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "relay power must be positive, got {relay_power}"
            )));
        }
        match &channel_model {
            ChannelModel::Homogeneous { variance } => {
                ChannelModel::homogeneous(*variance)?;
            }
            ChannelModel::Heterogeneous {
                distances,
                psi,
                exponent,
            } => {
                if distances.len() != n_users {
                    return Err(Error::InvalidConfig(format!(
                        "{} distances given for {n_users} users",
                        distances.len()
                    )));
                }
                ChannelModel::heterogeneous(distances.clone(), *psi, *exponent)?;
            }
        }
        if let Strategy::HybridUniMulticast {
            unicast_source,
            multicast_order,
        } = &strategy
        {
            if *unicast_source == 0 || *unicast_source > n_users {
                return Err(Error::InvalidConfig(format!(
                    "unicast source {unicast_source} is not a user"
                )));
            }
            let mut expected: Vec<usize> = (1..=n_users).filter(|u| u != unicast_source).collect();
            let mut got = multicast_order.clone();
            got.sort_unstable();
            expected.sort_unstable();
            if got != expected {
                return Err(Error::InvalidConfig(format!(
                    "multicast order {multicast_order:?} must be a permutation of {expected:?}"
                )));
            }
        }
        let schedule = Schedule::build(n_users, &strategy, decoding_order)?;
        Ok(NetworkConfig {
            n_users,
            m_antennas,
            user_powers,
            relay_power,
            channel_model,
            strategy,
            decoding_order,
            schedule,
        })
    }

    fn rebuild(self) -> Result<Self> {
        Self::from_parts(
            self.n_users,
            self.m_antennas,
            self.user_powers,
            self.relay_power,
            self.channel_model,
            self.strategy,
            self.decoding_order,
        )
    }

    pub fn with_user_powers(mut self, powers: Vec<f64>) -> Result<Self> {
        self.user_powers = powers;
        self.rebuild()
    }

    pub fn with_relay_power(mut self, p: f64) -> Result<Self> {
        self.relay_power = p;
        self.rebuild()
    }

    pub fn with_channel_model(mut self, model: ChannelModel) -> Result<Self> {
        self.channel_model = model;
        self.rebuild()
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Result<Self> {
        self.strategy = strategy;
        self.rebuild()
    }

    pub fn with_decoding_order(mut self, order: DecodingOrder) -> Result<Self> {
        self.decoding_order = order;
        self.rebuild()
    }

    /// Same network with the channel strength set from an SNR in dB: the
    /// common variance for homogeneous channels, user 1's variance for
    /// heterogeneous ones.
    pub fn at_snr_db(&self, snr_db: f64) -> Result<Self> {
        let snr = 10f64.powf(snr_db / 10.0);
        let model = match &self.channel_model {
            ChannelModel::Homogeneous { .. } => ChannelModel::homogeneous(snr)?,
            ChannelModel::Heterogeneous {
                distances, exponent, ..
            } => ChannelModel::heterogeneous_with_reference_snr(distances.clone(), snr, *exponent)?,
        };
        self.clone().with_channel_model(model)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn m_antennas(&self) -> usize {
        self.m_antennas
    }

    pub fn user_powers(&self) -> &[f64] {
        &self.user_powers
    }

    pub fn relay_power(&self) -> f64 {
        self.relay_power
    }

    pub fn channel_model(&self) -> &ChannelModel {
        &self.channel_model
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn decoding_order(&self) -> DecodingOrder {
        self.decoding_order
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Variance of every entry in column `i` of `H`, for all users.
    pub fn channel_variances(&self) -> Vec<f64> {
        match &self.channel_model {
            ChannelModel::Homogeneous { variance } => vec![*variance; self.n_users],
            model => model.variances(),
        }
    }

    pub(crate) fn check_channel(&self, h: &ChannelMatrix) -> Result<()> {
        let m = h.as_matrix();
        if m.nrows() != self.m_antennas || m.ncols() != self.n_users {
            return Err(Error::DimensionMismatch(format!(
                "channel is {}x{}, configuration expects {}x{}",
                m.nrows(),
                m.ncols(),
                self.m_antennas,
                self.n_users
            )));
        }
        Ok(())
    }
}

/// The `M x N` matrix of reciprocal user-relay channels; column `i` is `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(CMatrix);

impl ChannelMatrix {
    pub fn new(h: CMatrix) -> Result<Self> {
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConfig("channel has non-finite entries".into()));
        }
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::DimensionMismatch("empty channel matrix".into()));
        }
        Ok(ChannelMatrix(h))
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn n_users(&self) -> usize {
        self.0.ncols()
    }

    pub fn m_antennas(&self) -> usize {
        self.0.nrows()
    }

    /// Channel vector of user `i`, 1-based.
    pub fn user(&self, i: usize) -> Result<CVector> {
        if i == 0 || i > self.n_users() {
            return Err(Error::IndexOutOfRange {
                what: "user",
                value: i,
                max: self.n_users(),
            });
        }
        Ok(self.0.column(i - 1).into_owned())
    }
}

/// Draws `h_{m,i} ~ CN(0, sigma_i^2)` independently for every antenna and user.
pub fn generate_channel<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> ChannelMatrix {
    let variances = config.channel_variances();
    let (m, n) = (config.m_antennas(), config.n_users());
    let mut h = CMatrix::zeros(m, n);
    // column-major fill keeps the draw order independent of nalgebra internals
    for (i, var) in variances.iter().enumerate() {
        let scale = (var / 2.0).sqrt();
        for row in 0..m {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            h[(row, i)] = Complex64::new(re * scale, im * scale);
        }
    }
    ChannelMatrix(h)
}

/// Draws a length-`len` vector of `CN(0, 1)` noise samples.
pub fn unit_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_iterator(
        len,
        (0..len).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        }),
    )
}

/// Source decoded by receiver `k` in BC slot `n` (1-based).
pub fn decode_target(k: usize, n: usize, config: &NetworkConfig) -> Result<usize> {
    config.schedule().target(k, n)
}

/// Indices of the symbols receiver `k` has decoded before slot `n`.
pub fn decoded_set(k: usize, n: usize, config: &NetworkConfig) -> Result<Vec<usize>> {
    config.schedule().decoded(k, n)
}

/// Positions of the equivalent-channel entries that partial zero-forcing
/// forces to zero: interference from symbols a receiver has neither sent nor
/// decoded yet, other than its current target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroPattern {
    n_users: usize,
    // zero[slot][k * n + j]
    zero: Vec<Vec<bool>>,
}

impl ZeroPattern {
    pub fn from_schedule(schedule: &Schedule) -> Self {
        let n = schedule.n_users();
        let zero = (0..schedule.n_slots())
            .map(|slot| {
                let mut mask = vec![false; n * n];
                for k in 0..n {
                    let target = schedule.target0(k, slot);
                    for j in 0..n {
                        mask[k * n + j] = j != target && !schedule.cancellable0(k, j, slot);
                    }
                }
                mask
            })
            .collect();
        ZeroPattern { n_users: n, zero }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_slots(&self) -> usize {
        self.zero.len()
    }

    /// Whether `(i, j, n)` belongs to the pattern (1-based).
    pub fn contains(&self, i: usize, j: usize, n: usize) -> bool {
        (1..=self.n_users).contains(&i)
            && (1..=self.n_users).contains(&j)
            && (1..=self.n_slots()).contains(&n)
            && self.zero[n - 1][(i - 1) * self.n_users + (j - 1)]
    }

    /// All `(receiver, interferer, slot)` triples, 1-based, sorted by slot then row-major.
    pub fn tuples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n_users;
        let mut out = Vec::new();
        for (slot, mask) in self.zero.iter().enumerate() {
            for (idx, _) in mask.iter().enumerate().filter(|(_, z)| **z) {
                out.push((idx / n + 1, idx % n + 1, slot + 1));
            }
        }
        out
    }

    /// Number of forced zeros in slot `n` (1-based).
    pub fn zeros_in_slot(&self, n: usize) -> usize {
        self.zero[n - 1].iter().filter(|z| **z).count()
    }

    /// Number of free entries of `A^(n)` (1-based slot).
    pub fn free_in_slot(&self, n: usize) -> usize {
        self.n_users * self.n_users - self.zeros_in_slot(n)
    }

    pub(crate) fn mask0(&self, slot: usize) -> &[bool] {
        &self.zero[slot]
    }
}

pub fn zero_pattern(config: &NetworkConfig) -> ZeroPattern {
    ZeroPattern::from_schedule(config.schedule())
}

/// `n`-th power of the permutation obtained by circularly shifting the
/// columns of `I_N` one position to the right.
pub fn permutation_matrix(n_users: usize, power: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n_users, n_users);
    for k in 0..n_users {
        p[(k, (k + power) % n_users)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// Signals received by all users in one BC slot:
/// `H^T G H s + H^T G z_relay + z_users`.
pub fn received_signal(
    h: &ChannelMatrix,
    g: &CMatrix,
    symbols: &CVector,
    relay_noise: &CVector,
    user_noise: &CVector,
) -> Result<CVector> {
    let hm = h.as_matrix();
    let (m, n) = (hm.nrows(), hm.ncols());
    if g.nrows() != m || g.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "beamformer is {}x{}, expected {m}x{m}",
            g.nrows(),
            g.ncols()
        )));
    }
    if symbols.len() != n || user_noise.len() != n || relay_noise.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "symbols/user noise must have length {n} and relay noise {m}, got {}/{}/{}",
            symbols.len(),
            user_noise.len(),
            relay_noise.len()
        )));
    }
    let relay_rx = hm * symbols + relay_noise;
    Ok(hm.transpose() * (g * relay_rx) + user_noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> NetworkConfig {
        NetworkConfig::new(n, n).unwrap()
    }

    #[test]
    fn decode_target_examples() {
        let c3 = cfg(3);
        assert_eq!(decode_target(1, 1, &c3).unwrap(), 2);
        assert_eq!(decode_target(3, 2, &c3).unwrap(), 2);
        let ccw = cfg(3)
            .with_decoding_order(DecodingOrder::CounterClockwise)
            .unwrap();
        assert_eq!(decode_target(1, 1, &ccw).unwrap(), 3);
    }

    #[test]
    fn decode_target_matches_modular_formula() {
        for n_users in 2..=8 {
            let cw = cfg(n_users);
            let ccw = cfg(n_users)
                .with_decoding_order(DecodingOrder::CounterClockwise)
                .unwrap();
            let n = n_users as i64;
            for k in 1..=n_users {
                for slot in 1..n_users {
                    let (ki, si) = (k as i64, slot as i64);
                    let cw_i = ((ki + si - 1).rem_euclid(n) + 1) as usize;
                    let ccw_i = ((ki - si - 1).rem_euclid(n) + 1) as usize;
                    assert_eq!(decode_target(k, slot, &cw).unwrap(), cw_i);
                    assert_eq!(decode_target(k, slot, &ccw).unwrap(), ccw_i);
                    assert_ne!(cw_i, k);
                }
            }
        }
    }

    #[test]
    fn out_of_range_indices_are_rejected() {
        let c3 = cfg(3);
        assert!(matches!(
            decode_target(0, 1, &c3),
            Err(Error::IndexOutOfRange { what: "receiver", .. })
        ));
        assert!(matches!(
            decode_target(1, 3, &c3),
            Err(Error::IndexOutOfRange { what: "slot", .. })
        ));
        assert!(decoded_set(4, 1, &c3).is_err());
    }

    #[test]
    fn decoded_set_examples() {
        assert!(decoded_set(1, 1, &cfg(3)).unwrap().is_empty());
        assert_eq!(decoded_set(1, 2, &cfg(3)).unwrap(), vec![2]);
        assert_eq!(decoded_set(2, 3, &cfg(4)).unwrap(), vec![3, 4]);
    }

    #[test]
    fn protocol_visits_every_other_source_once() {
        for n_users in 2..=8 {
            for order in [DecodingOrder::Clockwise, DecodingOrder::CounterClockwise] {
                let c = cfg(n_users).with_decoding_order(order).unwrap();
                for k in 1..=n_users {
                    let mut seen: Vec<usize> = (1..n_users)
                        .map(|slot| decode_target(k, slot, &c).unwrap())
                        .collect();
                    seen.sort_unstable();
                    let expected: Vec<usize> = (1..=n_users).filter(|&i| i != k).collect();
                    assert_eq!(seen, expected);
                }
            }
        }
    }

    #[test]
    fn unicast_pattern_first_slot_n3() {
        let p = zero_pattern(&cfg(3));
        let slot1: Vec<_> = p.tuples().into_iter().filter(|t| t.2 == 1).collect();
        assert_eq!(slot1, vec![(1, 3, 1), (2, 1, 1), (3, 2, 1)]);
        assert_eq!(p.zeros_in_slot(2), 0);
    }

    #[test]
    fn unicast_pattern_matches_modular_definition() {
        for n_users in 2..=8usize {
            let p = zero_pattern(&cfg(n_users));
            let n = n_users as i64;
            for slot in 1..n_users {
                assert_eq!(p.zeros_in_slot(slot), (n_users - slot - 1) * n_users);
                for i in 1..=n_users {
                    let expected: Vec<usize> = (1..(n_users - slot) as i64)
                        .map(|q| ((i as i64 + q + slot as i64 - 1).rem_euclid(n) + 1) as usize)
                        .collect();
                    for j in 1..=n_users {
                        assert_eq!(p.contains(i, j, slot), expected.contains(&j), "{i},{j},{slot}");
                    }
                    assert!(!p.contains(i, i, slot));
                }
            }
            assert_eq!(p.zeros_in_slot(n_users - 1), 0);
        }
    }

    #[test]
    fn unicast_partition_of_users() {
        for n_users in 2..=7 {
            let c = cfg(n_users);
            let p = zero_pattern(&c);
            for k in 1..=n_users {
                for slot in 1..n_users {
                    let mut all: Vec<usize> = decoded_set(k, slot, &c).unwrap();
                    all.push(decode_target(k, slot, &c).unwrap());
                    all.push(k);
                    all.extend((1..=n_users).filter(|&j| p.contains(k, j, slot)));
                    all.sort_unstable();
                    assert_eq!(all, (1..=n_users).collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn hybrid_pattern_first_slot_n3() {
        let c = cfg(3)
            .with_strategy(Strategy::HybridUniMulticast {
                unicast_source: 1,
                multicast_order: vec![2, 3],
            })
            .unwrap();
        let p = zero_pattern(&c);
        let slot1: Vec<_> = p.tuples().into_iter().filter(|t| t.2 == 1).collect();
        assert_eq!(slot1, vec![(1, 3, 1), (2, 3, 1), (3, 1, 1)]);
        assert_eq!(p.zeros_in_slot(2), 0);
        // u1 and u3 decode s2, u2 decodes s1 in slot 1
        assert_eq!(decode_target(1, 1, &c).unwrap(), 2);
        assert_eq!(decode_target(2, 1, &c).unwrap(), 1);
        assert_eq!(decode_target(3, 1, &c).unwrap(), 2);
        assert_eq!(decode_target(3, 2, &c).unwrap(), 1);
    }

    #[test]
    fn hybrid_order_must_be_permutation() {
        let bad = cfg(3).with_strategy(Strategy::HybridUniMulticast {
            unicast_source: 1,
            multicast_order: vec![2, 2],
        });
        assert!(bad.is_err());
        let bad = cfg(3).with_strategy(Strategy::HybridUniMulticast {
            unicast_source: 1,
            multicast_order: vec![1, 2],
        });
        assert!(bad.is_err());
    }

    #[test]
    fn permutation_powers() {
        assert_eq!(permutation_matrix(4, 0), CMatrix::identity(4, 4));
        assert_eq!(permutation_matrix(3, 3), CMatrix::identity(3, 3));
        let p = permutation_matrix(3, 1);
        let ones: Vec<_> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| p[(r, c)].re == 1.0)
            .map(|(r, c)| (r + 1, c + 1))
            .collect();
        assert_eq!(ones, vec![(1, 2), (2, 3), (3, 1)]);
        let p2 = &p * &p;
        assert_eq!(p2, permutation_matrix(3, 2));
        assert_eq!(cfg(3).schedule().selection_matrix(1).unwrap(), p);
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(1, 3).is_err());
        assert!(NetworkConfig::new(3, 1).is_err());
        assert!(NetworkConfig::new(3, 2).is_ok());
        assert!(ChannelModel::homogeneous(0.0).is_err());
        assert!(ChannelModel::heterogeneous(vec![1.0, -1.0], 1.0, 2.0).is_err());
        assert!(cfg(3).with_relay_power(0.0).is_err());
        assert!(cfg(3).with_user_powers(vec![1.0, 1.0]).is_err());
        assert!(cfg(3)
            .with_channel_model(ChannelModel::heterogeneous(vec![1.0, 2.0], 1.0, 2.0).unwrap())
            .is_err());
    }

    #[test]
    fn heterogeneous_variances_follow_path_loss() {
        let d1 = 1.5;
        let model = ChannelModel::heterogeneous(vec![d1, 2.0 * d1, 4.0 * d1], d1, 2.0).unwrap();
        let c = cfg(3).with_channel_model(model).unwrap();
        let v = c.channel_variances();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[1] - 0.25).abs() < 1e-15);
        assert!((v[2] - 0.0625).abs() < 1e-15);

        let snr = 100.0;
        let model = ChannelModel::heterogeneous_with_reference_snr(vec![1.0, 1.0, 2.0], snr, 2.0).unwrap();
        let v = cfg(3).with_channel_model(model).unwrap().channel_variances();
        assert!((v[0] - snr).abs() < 1e-9 && (v[1] - snr).abs() < 1e-9);
        assert!((v[2] - snr / 4.0).abs() < 1e-9);
    }

    #[test]
    fn channel_entry_variance_matches_model() {
        let c = NetworkConfig::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Complex64> = (0..100_000)
            .map(|_| generate_channel(&c, &mut rng).as_matrix()[(0, 0)])
            .collect();
        let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
        let var = samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (samples.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.03, "sample variance {var}");
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn channel_generation_is_reproducible() {
        let c = cfg(4);
        let a = generate_channel(&c, &mut ChaCha8Rng::seed_from_u64(99));
        let b = generate_channel(&c, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
        let d = generate_channel(&c, &mut ChaCha8Rng::seed_from_u64(100));
        assert_ne!(a, d);
    }

    #[test]
    fn received_signal_noiseless_and_linear() {
        let c = cfg(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = generate_channel(&c, &mut rng);
        let zeros3 = CVector::zeros(3);
        let s1 = unit_noise(3, &mut rng);
        let s2 = unit_noise(3, &mut rng);

        let out = received_signal(&h, &CMatrix::zeros(3, 3), &s1, &zeros3, &zeros3).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));

        let g = unit_noise(9, &mut rng).reshape_generic(nalgebra::Dyn(3), nalgebra::Dyn(3));
        let r1 = received_signal(&h, &g, &s1, &zeros3, &zeros3).unwrap();
        let r2 = received_signal(&h, &g, &s2, &zeros3, &zeros3).unwrap();
        let r12 = received_signal(&h, &g, &(&s1 + &s2), &zeros3, &zeros3).unwrap();
        assert!((r12 - r1 - r2).norm() < 1e-12);

        assert!(received_signal(&h, &CMatrix::zeros(2, 2), &s1, &zeros3, &zeros3).is_err());
    }
}
