//! Closed-form transceive beamformers `G = G_TX S G_RX`, where `S` is the
//! slot's selection matrix (the permutation `P^n` for unicast).
//!
//! Every design is scaled so the relay transmits at exactly `P_R`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{diag, ensure_full_rank, hpd_inverse, CMatrix};
use crate::model::{ChannelMatrix, NetworkConfig};

/// Which design produced a [`BeamformerSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    Zf,
    Mmse,
    /// Regularized ZF with the given receive-side regularization.
    Rzf(f64),
    Mf,
    PzfJoint,
    PzfSeparate,
    PzfReduced,
}

impl Design {
    pub fn is_pzf(&self) -> bool {
        matches!(self, Design::PzfJoint | Design::PzfSeparate | Design::PzfReduced)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::Zf => write!(f, "ZF"),
            Design::Mmse => write!(f, "MMSE"),
            Design::Rzf(_) => write!(f, "RZF"),
            Design::Mf => write!(f, "MF"),
            Design::PzfJoint => write!(f, "PZF-Joint"),
            Design::PzfSeparate => write!(f, "PZF-Separate"),
            Design::PzfReduced => write!(f, "PZF-Reduced"),
        }
    }
}

/// The `N-1` relay matrices used in the BC phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    matrices: Vec<CMatrix>,
    design: Design,
}

impl BeamformerSet {
    pub fn new(matrices: Vec<CMatrix>, design: Design) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::DimensionMismatch("empty beamformer set".into()));
        };
        let m = first.nrows();
        if matrices.iter().any(|g| g.nrows() != m || g.ncols() != m) {
            return Err(Error::DimensionMismatch(
                "all beamformers must be square with the same size".into(),
            ));
        }
        Ok(BeamformerSet { matrices, design })
    }

    /// All-zero beamformers, mostly useful as a degenerate reference.
    pub fn zeros(config: &NetworkConfig, design: Design) -> Self {
        let m = config.m_antennas();
        BeamformerSet {
            matrices: vec![CMatrix::zeros(m, m); config.n_users() - 1],
            design,
        }
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// Beamformer of BC slot `n` (1-based).
    pub fn slot(&self, n: usize) -> Result<&CMatrix> {
        if n == 0 || n > self.matrices.len() {
            return Err(Error::IndexOutOfRange {
                what: "slot",
                value: n,
                max: self.matrices.len(),
            });
        }
        Ok(&self.matrices[n - 1])
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Relay transmit power `tr{G (H P_s H^H + I_M) G^H}`.
pub fn relay_power(g: &CMatrix, h: &CMatrix, user_powers: &[f64]) -> Result<f64> {
    let m = h.nrows();
    if g.nrows() != m || g.ncols() != m || user_powers.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "G is {}x{}, H is {}x{}, {} user powers",
            g.nrows(),
            g.ncols(),
            m,
            h.ncols(),
            user_powers.len()
        )));
    }
    let cov = received_covariance(h, user_powers);
    Ok(power_with_covariance(g, &cov))
}

/// `H P_s H^H + I_M`, the covariance of the relay's received signal.
pub(crate) fn received_covariance(h: &CMatrix, user_powers: &[f64]) -> CMatrix {
    let m = h.nrows();
    h * diag(user_powers) * h.adjoint() + CMatrix::identity(m, m)
}

pub(crate) fn power_with_covariance(g: &CMatrix, cov: &CMatrix) -> f64 {
    // tr{G C G^H} = sum_ab conj(G_ab) (G C)_ab
    let gc = g * cov;
    g.iter()
        .zip(gc.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum::<f64>()
        .max(0.0)
}

fn normalized(g0: CMatrix, h: &CMatrix, user_powers: &[f64], relay_power_budget: f64) -> Result<CMatrix> {
    let p = relay_power(&g0, h, user_powers)?;
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::ZeroBeamformer);
    }
    Ok(g0 * Complex64::new((relay_power_budget / p).sqrt(), 0.0))
}

fn check_selection(h: &CMatrix, selection: &CMatrix) -> Result<()> {
    let n = h.ncols();
    if selection.nrows() != n || selection.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "selection matrix is {}x{}, expected {n}x{n}",
            selection.nrows(),
            selection.ncols()
        )));
    }
    Ok(())
}

/// ZF transceive beamformer for an explicit selection matrix:
/// `(1/p) H^* (H^T H^*)^-1 S (H^H H)^-1 H^H`.
pub fn zf_transceive(
    h: &CMatrix,
    user_powers: &[f64],
    relay_power_budget: f64,
    selection: &CMatrix,
) -> Result<CMatrix> {
    check_selection(h, selection)?;
    ensure_full_rank(h)?;
    if h.nrows() < h.ncols() {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let gram = h.adjoint() * h;
    let rx = hpd_inverse(&gram)? * h.adjoint();
    let gram_t = h.transpose() * h.conjugate();
    let tx = h.conjugate() * hpd_inverse(&gram_t)?;
    normalized(tx * selection * rx, h, user_powers, relay_power_budget)
}

/// Receive filter shared by MMSE, RZF and MF: `P_s H^H (H P_s H^H + alpha I)^-1`.
fn regularized_receive(h: &CMatrix, user_powers: &[f64], alpha: f64) -> Result<CMatrix> {
    let m = h.nrows();
    let ps = diag(user_powers);
    let cov = h * &ps * h.adjoint() + CMatrix::identity(m, m) * Complex64::new(alpha, 0.0);
    Ok(ps * h.adjoint() * hpd_inverse(&cov)?)
}

/// RZF transceive beamformer; `alpha = 1` is the MMSE design.
pub fn rzf_transceive(
    h: &CMatrix,
    user_powers: &[f64],
    relay_power_budget: f64,
    selection: &CMatrix,
    alpha: f64,
) -> Result<CMatrix> {
    check_selection(h, selection)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "RZF regularization must be positive, got {alpha}"
        )));
    }
    let m = h.nrows();
    let n = h.ncols() as f64;
    let rx = regularized_receive(h, user_powers, alpha)?;
    let reg =
        h.conjugate() * h.transpose() + CMatrix::identity(m, m) * Complex64::new(n / relay_power_budget, 0.0);
    let tx = hpd_inverse(&reg)? * h.conjugate();
    normalized(tx * selection * rx, h, user_powers, relay_power_budget)
}

/// MF transceive beamformer: `G_TX = H^*` with the MMSE receive filter.
pub fn mf_transceive(
    h: &CMatrix,
    user_powers: &[f64],
    relay_power_budget: f64,
    selection: &CMatrix,
) -> Result<CMatrix> {
    check_selection(h, selection)?;
    let rx = regularized_receive(h, user_powers, 1.0)?;
    normalized(h.conjugate() * selection * rx, h, user_powers, relay_power_budget)
}

fn slot_inputs(h: &ChannelMatrix, config: &NetworkConfig, n: usize) -> Result<CMatrix> {
    config.check_channel(h)?;
    config.schedule().selection_matrix(n)
}

pub fn zf_beamformer(h: &ChannelMatrix, config: &NetworkConfig, n: usize) -> Result<CMatrix> {
    let sel = slot_inputs(h, config, n)?;
    zf_transceive(h.as_matrix(), config.user_powers(), config.relay_power(), &sel)
}

pub fn mmse_beamformer(h: &ChannelMatrix, config: &NetworkConfig, n: usize) -> Result<CMatrix> {
    rzf_beamformer(h, config, n, 1.0)
}

pub fn rzf_beamformer(h: &ChannelMatrix, config: &NetworkConfig, n: usize, alpha: f64) -> Result<CMatrix> {
    let sel = slot_inputs(h, config, n)?;
    rzf_transceive(
        h.as_matrix(),
        config.user_powers(),
        config.relay_power(),
        &sel,
        alpha,
    )
}

pub fn mf_beamformer(h: &ChannelMatrix, config: &NetworkConfig, n: usize) -> Result<CMatrix> {
    let sel = slot_inputs(h, config, n)?;
    mf_transceive(h.as_matrix(), config.user_powers(), config.relay_power(), &sel)
}

/// Builds all `N-1` matrices of a closed-form design.
///
/// PZF designs are iterative and live in [`crate::pzf`].
pub fn baseline_set(h: &ChannelMatrix, config: &NetworkConfig, design: Design) -> Result<BeamformerSet> {
    let matrices = (1..config.n_users())
        .map(|n| match design {
            Design::Zf => zf_beamformer(h, config, n),
            Design::Mmse => mmse_beamformer(h, config, n),
            Design::Rzf(alpha) => rzf_beamformer(h, config, n, alpha),
            Design::Mf => mf_beamformer(h, config, n),
            other => Err(Error::InvalidConfig(format!(
                "{other} is not a closed-form design"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    BeamformerSet::new(matrices, design)
}
