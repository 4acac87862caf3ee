//! Array geometry, sparse steering vectors and multipath channel synthesis.
//!
//! The physical array holds `M` elements spaced `d` apart. Activating every
//! `eta`-th element yields an `N`-element uniform sparse array whose bottom
//! element sits at the reference position `y` on the movable axis. For a plane
//! wave arriving from angle `theta`, element `n` sees the phase
//! `2*pi/lambda * y * sin(theta) + 2*pi * n * eta * d_bar * sin(theta)`
//! with `d_bar = d / lambda`.
//!
//! Every channel in the crate is produced by [`synthesize`], so the grouped
//! array, the independently movable baseline and the optimizers' path
//! matrices all round identically for the same geometry.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GmaError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in meters for a frequency in Hz.
pub fn wavelength(f_carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / f_carrier_hz
}

/// A length given either in meters or in carrier wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Spacing {
    Meters(f64),
    Wavelengths(f64),
}

impl Spacing {
    pub fn resolve(self, lambda: f64) -> f64 {
        match self {
            Spacing::Meters(m) => m,
            Spacing::Wavelengths(w) => w * lambda,
        }
    }
}

/// Physical array and movable-region geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayConfig {
    m: usize,
    n: usize,
    d: f64,
    lambda: f64,
    y_min: f64,
    y_max: f64,
    contain_aperture: bool,
    fpa_position: Option<f64>,
}

impl ArrayConfig {
    /// Half-wavelength spaced array with `m` physical elements and `n` RF
    /// chains, movable over `[y_min, y_max]`.
    pub fn new(m: usize, n: usize, lambda: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if n < 2 || m < n {
            return Err(GmaError::DegenerateArray { m, n });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(GmaError::InvalidGeometry(format!("wavelength {lambda} must be positive")));
        }
        if !(y_min.is_finite() && y_max.is_finite()) || y_min > y_max {
            return Err(GmaError::InvalidGeometry(format!(
                "movable region [{y_min}, {y_max}] is not well ordered"
            )));
        }
        Ok(Self {
            m,
            n,
            d: lambda / 2.0,
            lambda,
            y_min,
            y_max,
            contain_aperture: false,
            fpa_position: None,
        })
    }

    /// Overrides the physical element spacing.
    pub fn with_spacing(mut self, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(GmaError::InvalidGeometry(format!("spacing {d} must be positive")));
        }
        self.d = d;
        Ok(self)
    }

    /// When set, the whole sparse array (not just its reference element) must
    /// stay inside the movable region: `y + (N-1)*eta*d <= y_max`.
    pub fn with_aperture_containment(mut self, contain: bool) -> Self {
        self.contain_aperture = contain;
        self
    }

    /// Reference position of the fixed compact baseline. Defaults to `y_min`.
    pub fn with_fpa_position(mut self, y: f64) -> Result<Self> {
        if !(self.y_min..=self.y_max).contains(&y) {
            return Err(GmaError::PositionOutOfRegion { y, y_min: self.y_min, y_max: self.y_max });
        }
        self.fpa_position = Some(y);
        Ok(self)
    }

    /// Same geometry with a different movable region.
    pub fn with_region(&self, y_min: f64, y_max: f64) -> Result<Self> {
        let mut cfg = ArrayConfig::new(self.m, self.n, self.lambda, y_min, y_max)?;
        cfg.d = self.d;
        cfg.contain_aperture = self.contain_aperture;
        if let Some(p) = self.fpa_position {
            cfg = cfg.with_fpa_position(p)?;
        }
        Ok(cfg)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Normalized spacing `d / lambda`.
    pub fn d_bar(&self) -> f64 {
        self.d / self.lambda
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn contains_aperture(&self) -> bool {
        self.contain_aperture
    }

    /// Physical array dimension `(M-1) d`.
    pub fn aperture(&self) -> f64 {
        (self.m - 1) as f64 * self.d
    }

    pub fn eta_max(&self) -> usize {
        (self.m - 1) / (self.n - 1)
    }

    pub fn fpa_position(&self) -> f64 {
        self.fpa_position.unwrap_or(self.y_min)
    }

    /// Largest admissible reference position at sparsity `eta`.
    pub fn y_upper(&self, eta: usize) -> f64 {
        if self.contain_aperture {
            self.y_max - ((self.n - 1) * eta) as f64 * self.d
        } else {
            self.y_max
        }
    }

    /// Sparsity levels with a non-empty position range, ascending.
    pub fn feasible_etas(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.eta_max()).filter(move |&eta| self.y_upper(eta) >= self.y_min)
    }

    pub fn check_eta(&self, eta: usize) -> Result<()> {
        let eta_max = self.eta_max();
        if eta == 0 || eta > eta_max {
            return Err(GmaError::SparsityOutOfRange { eta, eta_max });
        }
        Ok(())
    }

    pub fn check_position(&self, y: f64, eta: usize) -> Result<()> {
        let hi = self.y_upper(eta);
        if !(y >= self.y_min && y <= hi) {
            return Err(GmaError::PositionOutOfRegion { y, y_min: self.y_min, y_max: hi });
        }
        Ok(())
    }

    /// Offsets of the active elements from the reference element, in
    /// wavelengths.
    pub(crate) fn sparse_offsets(&self, eta: usize) -> Vec<f64> {
        let d_bar = self.d_bar();
        (0..self.n).map(|n| (n * eta) as f64 * d_bar).collect()
    }
}

/// One propagation path: complex gain and angle of arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    pub aoa: f64,
}

impl Path {
    pub fn new(gain: Complex64, aoa: f64) -> Result<Self> {
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(GmaError::InvalidPath(format!("gain {gain} is not finite")));
        }
        if !(aoa >= -std::f64::consts::FRAC_PI_2 && aoa <= std::f64::consts::FRAC_PI_2) {
            return Err(GmaError::InvalidPath(format!("angle {aoa} outside [-pi/2, pi/2]")));
        }
        Ok(Self { gain, aoa })
    }
}

/// The multipath description of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet(Vec<Path>);

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(GmaError::EmptyPaths);
        }
        Ok(Self(paths))
    }

    /// Builds a path set from `(gain, aoa)` pairs, validating each path.
    pub fn from_pairs(pairs: &[(Complex64, f64)]) -> Result<Self> {
        let paths = pairs.iter().map(|&(g, a)| Path::new(g, a)).collect::<Result<Vec<_>>>()?;
        Self::new(paths)
    }

    pub fn paths(&self) -> &[Path] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of path amplitudes, `sum_l |alpha_l|`.
    pub fn total_amplitude(&self) -> f64 {
        self.0.iter().map(|p| p.gain.norm()).sum()
    }

    /// Copy with every gain multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|p| Path { gain: p.gain * factor, aoa: p.aoa }).collect())
    }
}

/// A channel realized for a particular `(y, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    pub y: f64,
    pub eta: usize,
}

impl ChannelVector {
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `floor((M-1)/(N-1))`, the largest sparsity whose aperture fits the
/// physical array.
pub fn max_sparsity(m: usize, n: usize) -> Result<usize> {
    if n < 2 || m < n {
        return Err(GmaError::DegenerateArray { m, n });
    }
    Ok((m - 1) / (n - 1))
}

#[inline]
pub(crate) fn offset_phase(offset_wl: f64, sin_theta: f64) -> Complex64 {
    Complex64::cis(TAU * offset_wl * sin_theta)
}

#[inline]
pub(crate) fn position_phase(y: f64, sin_theta: f64, lambda: f64) -> Complex64 {
    Complex64::cis(TAU / lambda * y * sin_theta)
}

/// Response of the sparse array alone, anchored at its reference element.
pub fn sparse_steering(eta: usize, theta: f64, cfg: &ArrayConfig) -> Result<Vec<Complex64>> {
    cfg.check_eta(eta)?;
    let s = theta.sin();
    Ok(cfg.sparse_offsets(eta).into_iter().map(|u| offset_phase(u, s)).collect())
}

/// Response of the sparse array with its reference element at `y`.
pub fn steering(y: f64, eta: usize, theta: f64, cfg: &ArrayConfig) -> Result<Vec<Complex64>> {
    cfg.check_eta(eta)?;
    cfg.check_position(y, eta)?;
    let s = theta.sin();
    let shift = position_phase(y, s, cfg.lambda());
    Ok(cfg.sparse_offsets(eta).into_iter().map(|u| shift * offset_phase(u, s)).collect())
}

/// Channel of one user seen by elements at `origin + offsets[n] * lambda`.
///
/// Entry `n` is accumulated as `sum_l (alpha_l * a_ln) * f_l` in path order,
/// which is the same arithmetic as the `A(eta) f(y)` product.
pub(crate) fn synthesize(origin: f64, offsets_wl: &[f64], paths: &PathSet, lambda: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); offsets_wl.len()];
    for p in paths.paths() {
        let s = p.aoa.sin();
        let f = position_phase(origin, s, lambda);
        for (h, &u) in out.iter_mut().zip(offsets_wl) {
            *h += (p.gain * offset_phase(u, s)) * f;
        }
    }
    out
}

/// Channel `h(y, eta) = sum_l alpha_l a(y, eta; theta_l)`.
pub fn channel_vector(y: f64, eta: usize, paths: &PathSet, cfg: &ArrayConfig) -> Result<ChannelVector> {
    if paths.is_empty() {
        return Err(GmaError::EmptyPaths);
    }
    cfg.check_eta(eta)?;
    cfg.check_position(y, eta)?;
    let entries = synthesize(y, &cfg.sparse_offsets(eta), paths, cfg.lambda());
    if entries.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
        return Err(GmaError::InvalidPath("channel has non-finite entries".into()));
    }
    Ok(ChannelVector { entries, y, eta })
}

/// Channels of every user at a common `(y, eta)`.
pub fn channels_at(y: f64, eta: usize, users: &[PathSet], cfg: &ArrayConfig) -> Result<Vec<ChannelVector>> {
    users.iter().map(|p| channel_vector(y, eta, p, cfg)).collect()
}
