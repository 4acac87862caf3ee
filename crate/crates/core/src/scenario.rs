//! Seeded scenario generation.
//!
//! Users are placed uniformly (by area) in a disk; each user sees `L_k`
//! scatterers with distances and angles drawn uniformly from the configured
//! ranges. Path gains follow
//! `alpha_{k,l} = sqrt(beta_k / L_k) exp(j phi_{k,l})` with
//! `beta_k = (lambda / (4 pi r_k))^2` at the user's distance `r_k` from the
//! array and `phi_{k,l}` uniform on `[0, 2 pi)`.
//!
//! Randomness comes from ChaCha20 keyed by the master seed; trial `t` reads
//! stream `t`, so trials are independent of each other and of the order in
//! which they run. Within a trial the draws are, per user: radius fraction,
//! polar angle, then per path: scatterer distance, AoA, gain phase.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{wavelength, ArrayConfig, Path, PathSet};
use crate::combining::{noise_power_dbm, LinkPowers};
use crate::error::{GmaError, Result};

/// Transmit power: one value for every user, or one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Uniform(f64),
    PerUser(Vec<f64>),
}

impl PowerSpec {
    pub fn expand(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            PowerSpec::Uniform(p) => Ok(vec![*p; k]),
            PowerSpec::PerUser(v) if v.len() == k => Ok(v.clone()),
            PowerSpec::PerUser(v) => Err(GmaError::InvalidParams(format!(
                "p_tx_dbm lists {} users, scenario has {k}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Carrier frequency, Hz.
    pub f_carrier: f64,
    #[serde(rename = "K")]
    pub users: usize,
    /// Center of the user disk, meters.
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(rename = "L_k")]
    pub paths_per_user: usize,
    pub r_range: [f64; 2],
    pub theta_range: [f64; 2],
    pub p_tx_dbm: PowerSpec,
    pub n0_dbm_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(rename = "N")]
    pub rf_chains: usize,
    #[serde(rename = "M")]
    pub elements: usize,
    /// Movable region `[y_min, y_max]`; when absent it is
    /// `[0, region_scale * (M - 1) d]`.
    pub region: Option<[f64; 2]>,
    pub region_scale: f64,
    pub contain_aperture: bool,
    pub fpa_position: Option<f64>,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            f_carrier: 28e9,
            users: 5,
            center: [100.0, 0.0],
            radius: 50.0,
            paths_per_user: 5,
            r_range: [0.0, 75.0],
            theta_range: [-FRAC_PI_2, FRAC_PI_2],
            p_tx_dbm: PowerSpec::Uniform(10.0),
            n0_dbm_hz: -174.0,
            bandwidth_hz: 1e6,
            rf_chains: 4,
            elements: 128,
            region: None,
            region_scale: 8.0,
            contain_aperture: false,
            fpa_position: None,
            seed: 0,
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(GmaError::InvalidParams(format!("{name} must be finite")))
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_carrier", self.f_carrier),
            ("radius", self.radius),
            ("n0_dbm_hz", self.n0_dbm_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("region_scale", self.region_scale),
            ("center[0]", self.center[0]),
            ("center[1]", self.center[1]),
        ] {
            finite(name, v)?;
        }
        if self.f_carrier <= 0.0 || self.bandwidth_hz <= 0.0 {
            return Err(GmaError::InvalidParams("carrier and bandwidth must be positive".into()));
        }
        if self.users == 0 || self.paths_per_user == 0 {
            return Err(GmaError::InvalidParams("need at least one user and one path".into()));
        }
        if self.radius < 0.0 {
            return Err(GmaError::InvalidParams(format!("radius {} is negative", self.radius)));
        }
        let [r0, r1] = self.r_range;
        if !(r0.is_finite() && r1.is_finite() && 0.0 <= r0 && r0 <= r1) {
            return Err(GmaError::InvalidParams(format!("r_range [{r0}, {r1}] is not well ordered")));
        }
        let [t0, t1] = self.theta_range;
        if !(t0 >= -FRAC_PI_2 && t0 <= t1 && t1 <= FRAC_PI_2) {
            return Err(GmaError::InvalidParams(format!("theta_range [{t0}, {t1}] outside [-pi/2, pi/2]")));
        }
        if self.region_scale < 0.0 {
            return Err(GmaError::InvalidParams("region_scale is negative".into()));
        }
        for p in self.p_tx_dbm.expand(self.users)? {
            if p.is_nan() || p == f64::INFINITY {
                return Err(GmaError::InvalidParams(format!("transmit power {p} dBm")));
            }
        }
        self.array_config()?;
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.f_carrier)
    }

    pub fn noise_dbm(&self) -> f64 {
        noise_power_dbm(self.n0_dbm_hz, self.bandwidth_hz)
    }

    pub fn array_config(&self) -> Result<ArrayConfig> {
        let lambda = self.wavelength();
        let base = ArrayConfig::new(self.elements, self.rf_chains, lambda, 0.0, 0.0)?;
        let [y0, y1] = self.region.unwrap_or([0.0, self.region_scale * base.aperture()]);
        let mut cfg = base.with_region(y0, y1)?.with_aperture_containment(self.contain_aperture);
        if let Some(p) = self.fpa_position {
            cfg = cfg.with_fpa_position(p)?;
        }
        Ok(cfg)
    }

    pub fn powers(&self) -> Result<LinkPowers> {
        LinkPowers::from_dbm(&self.p_tx_dbm.expand(self.users)?, self.noise_dbm())
    }

    /// Short digest of the canonical JSON encoding.
    pub fn params_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub distance: f64,
    pub aoa: f64,
}

/// One seeded realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<PathSet>,
    pub user_positions: Vec<[f64; 2]>,
    pub scatterers: Vec<Vec<Scatterer>>,
    pub powers: LinkPowers,
    pub cfg: ArrayConfig,
    pub master_seed: u64,
    pub trial: u64,
    pub params_hash: String,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random stream for one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Trial 0 of the master seed in `params`.
pub fn sample_scenario(params: &ScenarioParams) -> Result<Scenario> {
    sample_trial(params, 0)
}

pub fn sample_trial(params: &ScenarioParams, trial: u64) -> Result<Scenario> {
    params.validate()?;
    let cfg = params.array_config()?;
    let lambda = cfg.lambda();
    let mut rng = trial_rng(params.seed, trial);
    let l = params.paths_per_user;
    let mut users = Vec::with_capacity(params.users);
    let mut user_positions = Vec::with_capacity(params.users);
    let mut scatterers = Vec::with_capacity(params.users);
    for _ in 0..params.users {
        let rho = params.radius * rng.random::<f64>().sqrt();
        let phi = uniform(&mut rng, 0.0, TAU);
        let q = [params.center[0] + rho * phi.cos(), params.center[1] + rho * phi.sin()];
        let r_k = q[0].hypot(q[1]);
        let beta = (lambda / (4.0 * PI * r_k)).powi(2);
        let amp = (beta / l as f64).sqrt();
        let mut paths = Vec::with_capacity(l);
        let mut sc = Vec::with_capacity(l);
        for _ in 0..l {
            let distance = uniform(&mut rng, params.r_range[0], params.r_range[1]);
            let aoa = uniform(&mut rng, params.theta_range[0], params.theta_range[1]);
            let phase = uniform(&mut rng, 0.0, TAU);
            paths.push(Path::new(Complex64::from_polar(amp, phase), aoa)?);
            sc.push(Scatterer { distance, aoa });
        }
        users.push(PathSet::new(paths)?);
        user_positions.push(q);
        scatterers.push(sc);
    }
    Ok(Scenario {
        users,
        user_positions,
        scatterers,
        powers: params.powers()?,
        cfg,
        master_seed: params.seed,
        trial,
        params_hash: params.params_hash(),
    })
}
