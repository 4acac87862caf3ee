#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};

use gma_core::array::{ArrayConfig, Path, PathSet};
use gma_core::scenario::{sample_trial, Scenario, ScenarioParams};
use num_complex::Complex64;
use proptest::prelude::*;

/// Channel straight from the plane-wave model, element by element.
pub fn reference_channel(y: f64, eta: usize, paths: &PathSet, cfg: &ArrayConfig) -> Vec<Complex64> {
    (0..cfg.n())
        .map(|n| {
            let pos = y + (n * eta) as f64 * cfg.d();
            paths
                .paths()
                .iter()
                .map(|p| p.gain * Complex64::cis(TAU / cfg.lambda() * pos * p.aoa.sin()))
                .sum()
        })
        .collect()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Single-user two-path instance from the default geometry.
pub fn two_path(trial: u64) -> Scenario {
    let p = ScenarioParams { users: 1, paths_per_user: 2, seed: 77, ..Default::default() };
    sample_trial(&p, trial).unwrap()
}

pub fn default_scenario(trial: u64) -> Scenario {
    sample_trial(&ScenarioParams { seed: 77, ..Default::default() }, trial).unwrap()
}

/// Unit-wavelength array with a region of `span` wavelengths.
pub fn unit_cfg(m: usize, n: usize, span: f64) -> ArrayConfig {
    ArrayConfig::new(m, n, 1.0, 0.0, span).unwrap()
}

pub fn path_strategy() -> impl Strategy<Value = Path> {
    (0.05f64..2.0, 0.0..TAU, -FRAC_PI_2..=FRAC_PI_2)
        .prop_map(|(a, ph, th)| Path::new(Complex64::from_polar(a, ph), th).unwrap())
}

pub fn paths_strategy(max_paths: usize) -> impl Strategy<Value = PathSet> {
    prop::collection::vec(path_strategy(), 1..=max_paths).prop_map(|v| PathSet::new(v).unwrap())
}
