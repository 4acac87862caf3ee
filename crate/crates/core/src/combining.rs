//! Receive combining and the SINR / sum-rate objective.
//!
//! Noise is normalized out: `p_bar[i] = P_i / sigma^2`, so the
//! interference-plus-noise covariance of user `k` is
//! `C_k = I + sum_{i != k} p_bar[i] h_i h_i^H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{channels_at, ArrayConfig, ChannelVector, PathSet};
use crate::error::{GmaError, Result};

/// Per-user transmit power normalized by the noise power (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    p_bar: Vec<f64>,
}

impl LinkPowers {
    pub fn new(p_bar: Vec<f64>) -> Result<Self> {
        if let Some(p) = p_bar.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(GmaError::InvalidPower(format!("{p} is not a finite non-negative power")));
        }
        Ok(Self { p_bar })
    }

    /// Equal normalized power for `k` users.
    pub fn uniform(k: usize, p_bar: f64) -> Result<Self> {
        Self::new(vec![p_bar; k])
    }

    /// From transmit powers and the noise power, both in dBm.
    pub fn from_dbm(p_tx_dbm: &[f64], noise_dbm: f64) -> Result<Self> {
        Self::new(p_tx_dbm.iter().map(|p| 10f64.powf((p - noise_dbm) / 10.0)).collect())
    }

    pub fn p_bar(&self) -> &[f64] {
        &self.p_bar
    }

    pub fn len(&self) -> usize {
        self.p_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_bar.is_empty()
    }

    pub fn all_zero(&self) -> bool {
        self.p_bar.iter().all(|&p| p == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.p_bar.iter().map(|p| p * c).collect())
    }
}

/// Noise power in dBm for a noise density (dBm/Hz) over a bandwidth (Hz).
pub fn noise_power_dbm(n0_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    n0_dbm_hz + 10.0 * bandwidth_hz.log10()
}

/// A unit-norm receive combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    weights: Vec<Complex64>,
}

impl Combiner {
    /// Normalizes `weights` to unit norm.
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        let norm = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GmaError::DegenerateChannel);
        }
        Ok(Self { weights: weights.into_iter().map(|w| w / norm).collect() })
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }
}

/// `p_bar * ||h||^2`, the SNR under maximal-ratio combining.
pub fn mrc_snr(h: &ChannelVector, p_bar: f64) -> f64 {
    p_bar * h.norm_sqr()
}

fn check_lengths(channels: &[ChannelVector], powers: &LinkPowers) -> Result<usize> {
    if channels.len() != powers.len() {
        return Err(GmaError::DimensionMismatch { expected: powers.len(), got: channels.len() });
    }
    let n = channels.first().map(|h| h.len()).unwrap_or(0);
    if let Some(h) = channels.iter().find(|h| h.len() != n) {
        return Err(GmaError::DimensionMismatch { expected: n, got: h.len() });
    }
    Ok(n)
}

/// `C_k = I + sum_{i != k} p_bar[i] h_i h_i^H`.
pub fn interference_covariance(
    k: usize,
    channels: &[ChannelVector],
    powers: &LinkPowers,
) -> Result<DMatrix<Complex64>> {
    let n = check_lengths(channels, powers)?;
    if k >= channels.len() {
        return Err(GmaError::UserIndex { k, users: channels.len() });
    }
    let mut c = DMatrix::<Complex64>::identity(n, n);
    for (i, (h, &p)) in channels.iter().zip(powers.p_bar()).enumerate() {
        if i == k || p == 0.0 {
            continue;
        }
        for r in 0..n {
            let hr = h.entries[r] * p;
            for s in 0..n {
                c[(r, s)] += hr * h.entries[s].conj();
            }
        }
    }
    Ok(c)
}

/// Solves `C x = h` through a Cholesky factorization of the Hermitian
/// positive-definite `C`.
fn solve_hpd(c: &DMatrix<Complex64>, h: &[Complex64]) -> Result<DVector<Complex64>> {
    let chol = c.clone().cholesky().ok_or(GmaError::NotPositiveDefinite)?;
    Ok(chol.solve(&DVector::from_column_slice(h)))
}

/// `v = C^{-1} h / ||C^{-1} h||`, the maximizer of the SINR quotient.
pub fn mmse_combiner(h: &ChannelVector, c: &DMatrix<Complex64>) -> Result<Combiner> {
    if c.nrows() != h.len() || c.ncols() != h.len() {
        return Err(GmaError::DimensionMismatch { expected: h.len(), got: c.nrows() });
    }
    if h.norm_sqr() == 0.0 {
        return Err(GmaError::DegenerateChannel);
    }
    let x = solve_hpd(c, &h.entries)?;
    Combiner::new(x.iter().copied().collect())
}

/// SINR of user `k` for an arbitrary combiner:
/// `p_bar_k |v^H h_k|^2 / (sum_{i != k} p_bar_i |v^H h_i|^2 + ||v||^2)`.
pub fn combiner_sinr(k: usize, v: &Combiner, channels: &[ChannelVector], powers: &LinkPowers) -> Result<f64> {
    let n = check_lengths(channels, powers)?;
    if k >= channels.len() {
        return Err(GmaError::UserIndex { k, users: channels.len() });
    }
    if v.weights.len() != n {
        return Err(GmaError::DimensionMismatch { expected: n, got: v.weights.len() });
    }
    let project = |h: &ChannelVector| -> f64 {
        v.weights.iter().zip(&h.entries).map(|(w, x)| w.conj() * x).sum::<Complex64>().norm_sqr()
    };
    let mut denom: f64 = v.weights.iter().map(|w| w.norm_sqr()).sum();
    for (i, (h, &p)) in channels.iter().zip(powers.p_bar()).enumerate() {
        if i != k {
            denom += p * project(h);
        }
    }
    Ok(powers.p_bar()[k] * project(&channels[k]) / denom)
}

/// `p_bar_k h_k^H C_k^{-1} h_k` for channels already realized.
pub fn sinr_of(k: usize, channels: &[ChannelVector], powers: &LinkPowers) -> Result<f64> {
    let c = interference_covariance(k, channels, powers)?;
    let h = &channels[k].entries;
    let x = solve_hpd(&c, h)?;
    let q: Complex64 = h.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(powers.p_bar()[k] * q.re.max(0.0))
}

/// SINR of user `k` at `(y, eta)` under the MMSE combiner.
pub fn sinr(
    k: usize,
    y: f64,
    eta: usize,
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
) -> Result<f64> {
    let channels = channels_at(y, eta, users, cfg)?;
    sinr_of(k, &channels, powers)
}

/// `sum_k log2(1 + gamma_k)` for realized channels.
pub fn sum_rate_of(channels: &[ChannelVector], powers: &LinkPowers) -> Result<f64> {
    check_lengths(channels, powers)?;
    let mut rate = 0.0;
    for k in 0..channels.len() {
        rate += (1.0 + sinr_of(k, channels, powers)?).log2();
    }
    Ok(rate)
}

/// Achievable sum rate at `(y, eta)` in bits/s/Hz.
pub fn sum_rate(y: f64, eta: usize, users: &[PathSet], powers: &LinkPowers, cfg: &ArrayConfig) -> Result<f64> {
    let channels = channels_at(y, eta, users, cfg)?;
    sum_rate_of(&channels, powers)
}

/// Optimization objective: SNR for a single user, sum rate otherwise.
pub fn objective_of(channels: &[ChannelVector], powers: &LinkPowers) -> Result<f64> {
    if channels.len() == 1 {
        check_lengths(channels, powers)?;
        Ok(mrc_snr(&channels[0], powers.p_bar()[0]))
    } else {
        sum_rate_of(channels, powers)
    }
}

/// Objective at `(y, eta)`; see [`objective_of`].
pub fn objective(y: f64, eta: usize, users: &[PathSet], powers: &LinkPowers, cfg: &ArrayConfig) -> Result<f64> {
    let channels = channels_at(y, eta, users, cfg)?;
    objective_of(&channels, powers)
}
