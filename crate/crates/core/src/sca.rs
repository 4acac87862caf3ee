//! Single-user joint position and sparsity optimization.
//!
//! With one user the MRC combiner is optimal and the SNR is
//! `p_bar * ||A(eta) f(y)||^2`, where column `l` of `A(eta)` is
//! `alpha_l * a_bar(eta; theta_l)` and `f_l(y) = exp(j 2pi/lambda y sin(theta_l))`.
//!
//! For fixed `eta`, the position is refined by successive convex
//! approximation. Linearizing the convex map `f -> ||A f||^2` at `f(y_j)`
//! gives the minorant `2 g(y) - ||A f(y_j)||^2` with
//! `g(y) = Re{ b^H f(y) }` and `b = A^H A f(y_j)`. Since
//! `g''(y) <= xi = (2pi/lambda)^2 sum_i |b_i|`, the quadratic
//! `g(y_j) + g'(y_j)(y - y_j) - xi/2 (y - y_j)^2` lower-bounds `g`, and its
//! maximizer over the region is `clamp(y_j + g'(y_j)/xi, y_min, y_max)`.
//! Each step therefore never decreases the objective.
//!
//! For fixed `y` the sparsity is found by enumerating `1..=eta_max`, and the
//! two steps alternate until the fractional increase drops below `epsilon`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{offset_phase, position_phase, ArrayConfig, PathSet, Spacing};
use crate::error::{GmaError, Result};
use crate::grid::grid_points;
use crate::solution::GmaSolution;

/// `A(eta)`: column `l` is `alpha_l * a_bar(eta; theta_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    rows: usize,
    /// Column-major, `cols[l * rows + n]`.
    cols: Vec<Complex64>,
    sin_theta: Vec<f64>,
    eta: usize,
}

impl PathMatrix {
    pub(crate) fn build(eta: usize, paths: &PathSet, cfg: &ArrayConfig) -> Self {
        let offsets = cfg.sparse_offsets(eta);
        let rows = offsets.len();
        let mut cols = Vec::with_capacity(rows * paths.len());
        let mut sin_theta = Vec::with_capacity(paths.len());
        for p in paths.paths() {
            let s = p.aoa.sin();
            sin_theta.push(s);
            cols.extend(offsets.iter().map(|&u| p.gain * offset_phase(u, s)));
        }
        Self { rows, cols, sin_theta, eta }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn paths(&self) -> usize {
        self.sin_theta.len()
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn column(&self, l: usize) -> &[Complex64] {
        &self.cols[l * self.rows..(l + 1) * self.rows]
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    /// `A f`.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.rows];
        for (l, fl) in f.iter().enumerate() {
            for (hn, a) in h.iter_mut().zip(self.column(l)) {
                *hn += *a * *fl;
            }
        }
        h
    }

    /// `A^H x`.
    pub fn adjoint_apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.paths())
            .map(|l| self.column(l).iter().zip(x).map(|(a, v)| a.conj() * v).sum())
            .collect()
    }

    /// `f(y)` for this matrix's angles.
    pub fn phases(&self, y: f64, lambda: f64) -> Vec<Complex64> {
        self.sin_theta.iter().map(|&s| position_phase(y, s, lambda)).collect()
    }

    /// `||A f(y)||^2`.
    pub fn objective(&self, y: f64, lambda: f64) -> f64 {
        self.apply(&self.phases(y, lambda)).iter().map(|h| h.norm_sqr()).sum()
    }
}

/// `A(eta)` for a user's paths.
pub fn path_matrix(eta: usize, paths: &PathSet, cfg: &ArrayConfig) -> Result<PathMatrix> {
    cfg.check_eta(eta)?;
    if paths.is_empty() {
        return Err(GmaError::EmptyPaths);
    }
    Ok(PathMatrix::build(eta, paths, cfg))
}

/// `f(y)`: entry `l` is `exp(j 2pi/lambda y sin(theta_l))`.
pub fn phase_vector(y: f64, paths: &PathSet, cfg: &ArrayConfig) -> Vec<Complex64> {
    paths.paths().iter().map(|p| position_phase(y, p.aoa.sin(), cfg.lambda())).collect()
}

/// Expansion of the SCA surrogate around the iterate `y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub y_j: f64,
    /// `A^H A f(y_j)`.
    pub b: Vec<Complex64>,
    pub g_prime: f64,
    pub xi: f64,
    /// `||A f(y_j)||^2`.
    pub objective: f64,
    pub iteration: usize,
    wavenumber: f64,
    sin_theta: Vec<f64>,
}

impl ScaState {
    pub fn at(y_j: f64, a: &PathMatrix, lambda: f64, iteration: usize) -> Self {
        let h = a.apply(&a.phases(y_j, lambda));
        let objective = h.iter().map(|x| x.norm_sqr()).sum();
        let b = a.adjoint_apply(&h);
        let wavenumber = TAU / lambda;
        let xi = wavenumber * wavenumber * b.iter().map(|x| x.norm()).sum::<f64>();
        let mut state = Self {
            y_j,
            b,
            g_prime: 0.0,
            xi,
            objective,
            iteration,
            wavenumber,
            sin_theta: a.sin_theta().to_vec(),
        };
        state.g_prime = state.g_prime_at(y_j);
        state
    }

    /// `conj(b_i) f_i(y) = |b_i| exp(j(k y sin(theta_i) - arg b_i))`.
    fn rotated(&self, y: f64) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.b.iter().zip(&self.sin_theta).map(move |(b, &s)| {
            (s, b.conj() * Complex64::cis(self.wavenumber * y * s))
        })
    }

    /// `g(y) = Re{ b^H f(y) } = sum_i |b_i| cos(k y sin(theta_i) - arg b_i)`.
    pub fn g(&self, y: f64) -> f64 {
        self.rotated(y).map(|(_, z)| z.re).sum()
    }

    /// `g'(y) = -k sum_i |b_i| sin(theta_i) sin(k y sin(theta_i) - arg b_i)`.
    pub fn g_prime_at(&self, y: f64) -> f64 {
        -self.wavenumber * self.rotated(y).map(|(s, z)| s * z.im).sum::<f64>()
    }

    /// `g''(y) = -k^2 sum_i |b_i| sin^2(theta_i) cos(k y sin(theta_i) - arg b_i)`.
    pub fn g_second_at(&self, y: f64) -> f64 {
        -self.wavenumber * self.wavenumber * self.rotated(y).map(|(s, z)| s * s * z.re).sum::<f64>()
    }

    /// Quadratic minorant of `g` expanded at `y_j`.
    pub fn quadratic_bound(&self, y: f64) -> f64 {
        let dy = y - self.y_j;
        self.g(self.y_j) + self.g_prime * dy - 0.5 * self.xi * dy * dy
    }

    /// Minorant of the objective: `2 g(y) - ||A f(y_j)||^2`.
    pub fn linear_bound(&self, y: f64) -> f64 {
        2.0 * self.g(y) - self.objective
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.xi > 0.0)
    }
}

/// Result of one surrogate maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaStep {
    /// Maximizer of the quadratic surrogate over the region.
    Ascent(f64),
    /// `b = 0`: the surrogate is flat and the iterate is returned unchanged.
    Flat(f64),
}

impl ScaStep {
    pub fn position(self) -> f64 {
        match self {
            ScaStep::Ascent(y) | ScaStep::Flat(y) => y,
        }
    }
}

/// `clamp(y_j + g'(y_j) / xi, lo, hi)`.
pub fn surrogate_step(state: &ScaState, lo: f64, hi: f64) -> ScaStep {
    if state.is_degenerate() {
        return ScaStep::Flat(state.y_j);
    }
    let target = state.y_j + state.g_prime / state.xi;
    ScaStep::Ascent(target.clamp(lo, hi))
}

/// How the alternating procedure picks its starting sparsity level(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaInit {
    /// Largest aperture, `eta_max`.
    MaxSparsity,
    Fixed(usize),
    /// Run the alternating procedure from every sparsity level and keep the
    /// best result.
    EveryLevel,
    /// Scan the coarse `(y, eta)` grid (positions spaced by
    /// `multistart_grid_step`, every level), rank the levels by their best
    /// coarse value and start from the `top` best.
    CoarseScan { top: usize },
}

/// Stopping rules and initialization for the alternating optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Fractional objective increase below which a loop stops.
    pub epsilon: f64,
    pub max_sca_iters: usize,
    pub max_alt_iters: usize,
    /// Coarse grid used to seed each position subproblem; `None` disables it.
    pub multistart_grid_step: Option<Spacing>,
    pub eta_init: EtaInit,
    /// Seed each position subproblem from the incumbent position too.
    pub warm_start: bool,
    /// Compare the compact array at the baseline position against the first
    /// round's result.
    pub inject_compact: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_sca_iters: 200,
            max_alt_iters: 50,
            multistart_grid_step: Some(Spacing::Wavelengths(0.25)),
            eta_init: EtaInit::CoarseScan { top: 3 },
            warm_start: true,
            inject_compact: true,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(GmaError::InvalidParams(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.eta_init == (EtaInit::CoarseScan { top: 0 }) {
            return Err(GmaError::InvalidParams("coarse_scan.top must be at least 1".into()));
        }
        if self.max_sca_iters == 0 || self.max_alt_iters == 0 {
            return Err(GmaError::InvalidParams("iteration caps must be at least 1".into()));
        }
        if let Some(step) = self.multistart_grid_step {
            let s = step.resolve(1.0);
            if !(s.is_finite() && s > 0.0) {
                return Err(GmaError::InvalidParams("multistart grid step must be positive".into()));
            }
        }
        Ok(())
    }

    /// Starting levels. `coarse_values(eta, ys)` evaluates the objective at
    /// the given positions and is only called for [`EtaInit::CoarseScan`].
    pub(crate) fn resolve_eta0(
        &self,
        cfg: &ArrayConfig,
        mut coarse_values: impl FnMut(usize, &[f64]) -> Vec<f64>,
    ) -> Result<Vec<usize>> {
        let feasible: Vec<usize> = cfg.feasible_etas().collect();
        let top = *feasible.last().ok_or_else(|| {
            GmaError::InvalidGeometry("no sparsity level fits the movable region".into())
        })?;
        match self.eta_init {
            EtaInit::MaxSparsity => Ok(vec![top]),
            EtaInit::Fixed(eta) => {
                cfg.check_eta(eta)?;
                if !feasible.contains(&eta) {
                    return Err(GmaError::InvalidParams(format!("initial sparsity {eta} does not fit")));
                }
                Ok(vec![eta])
            }
            EtaInit::EveryLevel => Ok(feasible),
            EtaInit::CoarseScan { top: count } => {
                let step = self
                    .multistart_grid_step
                    .unwrap_or(Spacing::Wavelengths(0.25))
                    .resolve(cfg.lambda());
                let mut remaining: Vec<(usize, f64)> = feasible
                    .iter()
                    .map(|&eta| {
                        let ys = grid_points(cfg.y_min(), cfg.y_upper(eta), step);
                        let best = coarse_values(eta, &ys).into_iter().fold(f64::NEG_INFINITY, f64::max);
                        (eta, best)
                    })
                    .collect();
                let mut ranked = Vec::with_capacity(count);
                while ranked.len() < count {
                    let Some(pick) = pick_level(&remaining) else { break };
                    remaining.retain(|l| l.0 != pick.0);
                    ranked.push(pick);
                }
                Ok(ranked.into_iter().take(count).map(|(eta, _)| eta).collect())
            }
        }
    }
}

/// Relative gap under which two objective values count as tied. Flat
/// objectives (a single path, say) differ across levels only by rounding,
/// and ties should still resolve toward the smaller level.
pub(crate) const TIE_TOL: f64 = 1e-12;

/// Smallest level whose value is within [`TIE_TOL`] of the best, from
/// `(eta, value)` pairs in ascending `eta` order.
pub(crate) fn pick_level(levels: &[(usize, f64)]) -> Option<(usize, f64)> {
    let top = levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    levels.iter().copied().find(|&(_, v)| v >= top - TIE_TOL * top.abs())
}

/// Whether a move to level `e` with value `v` should replace the incumbent:
/// a clear improvement, or no loss at a smaller level.
pub(crate) fn accept_level(v: f64, e: usize, value: f64, eta: usize) -> bool {
    v > value + TIE_TOL * value.abs() || (v >= value && e < eta)
}

#[inline]
pub(crate) fn stalled(prev: f64, next: f64, epsilon: f64) -> bool {
    next - prev <= epsilon * prev
}

/// Output of a single SCA run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub y: f64,
    /// `||A f(y)||^2` at the returned position.
    pub objective: f64,
    /// Objective at every accepted iterate, starting with `y0`.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn run_sca(a: &PathMatrix, y0: f64, lo: f64, hi: f64, settings: &OptimizerSettings, lambda: f64) -> ScaOutcome {
    let mut state = ScaState::at(y0, a, lambda, 0);
    let mut trace = vec![state.objective];
    let mut iterations = 0;
    while iterations < settings.max_sca_iters {
        let y_next = match surrogate_step(&state, lo, hi) {
            ScaStep::Flat(_) => break,
            ScaStep::Ascent(y) => y,
        };
        iterations += 1;
        let next = ScaState::at(y_next, a, lambda, iterations);
        // The minorant guarantees ascent; a decrease can only be rounding.
        if next.objective < state.objective {
            break;
        }
        let done = stalled(state.objective, next.objective, settings.epsilon);
        trace.push(next.objective);
        state = next;
        if done {
            break;
        }
    }
    ScaOutcome { y: state.y_j, objective: state.objective, trace, iterations }
}

/// SCA for the position subproblem at fixed `eta`, started from `y0`.
pub fn optimize_position_sca(
    eta: usize,
    paths: &PathSet,
    y0: f64,
    settings: &OptimizerSettings,
    cfg: &ArrayConfig,
) -> Result<ScaOutcome> {
    settings.validate()?;
    cfg.check_position(y0, eta)?;
    let a = path_matrix(eta, paths, cfg)?;
    Ok(run_sca(&a, y0, cfg.y_min(), cfg.y_upper(eta), settings, cfg.lambda()))
}

/// Enumerates the sparsity levels at fixed `y`; ties go to the smaller level.
pub fn optimize_sparsity(y: f64, paths: &PathSet, cfg: &ArrayConfig) -> Result<(usize, f64)> {
    if paths.is_empty() {
        return Err(GmaError::EmptyPaths);
    }
    cfg.check_position(y, 1)?;
    let mut cache = MatrixCache::new(paths, cfg);
    cache.best_eta(y).ok_or_else(|| GmaError::PositionOutOfRegion { y, y_min: cfg.y_min(), y_max: cfg.y_max() })
}

struct MatrixCache<'a> {
    paths: &'a PathSet,
    cfg: &'a ArrayConfig,
    mats: Vec<Option<PathMatrix>>,
    evals: usize,
}

impl<'a> MatrixCache<'a> {
    fn new(paths: &'a PathSet, cfg: &'a ArrayConfig) -> Self {
        Self { paths, cfg, mats: vec![None; cfg.eta_max() + 1], evals: 0 }
    }

    fn get(&mut self, eta: usize) -> &PathMatrix {
        let (paths, cfg) = (self.paths, self.cfg);
        self.mats[eta].get_or_insert_with(|| PathMatrix::build(eta, paths, cfg))
    }

    fn eval(&mut self, eta: usize, y: f64) -> f64 {
        self.evals += 1;
        let lambda = self.cfg.lambda();
        self.get(eta).objective(y, lambda)
    }

    fn best_eta(&mut self, y: f64) -> Option<(usize, f64)> {
        let etas: Vec<usize> = self.cfg.feasible_etas().filter(|&e| y <= self.cfg.y_upper(e)).collect();
        let levels: Vec<(usize, f64)> = etas.into_iter().map(|e| (e, self.eval(e, y))).collect();
        pick_level(&levels)
    }

    /// Position subproblem: SCA from the incumbent and from the best coarse
    /// grid point, keeping the incumbent if neither improves on it.
    fn position_step(&mut self, eta: usize, incumbent: f64, settings: &OptimizerSettings) -> (f64, f64, usize) {
        let (lo, hi) = (self.cfg.y_min(), self.cfg.y_upper(eta));
        let lambda = self.cfg.lambda();
        let inc = incumbent.clamp(lo, hi);
        let inc_value = self.eval(eta, inc);
        let mut starts = Vec::with_capacity(2);
        if settings.warm_start {
            starts.push(inc);
        }
        if let Some(step) = settings.multistart_grid_step {
            let mut best: Option<(f64, f64)> = None;
            for y in grid_points(lo, hi, step.resolve(lambda)) {
                let v = self.eval(eta, y);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((y, v));
                }
            }
            if let Some((y, _)) = best {
                starts.push(y);
            }
        }
        if starts.is_empty() {
            starts.push(inc);
        }
        let mut best = (inc, inc_value);
        let mut iterations = 0;
        for y0 in starts {
            let a = self.get(eta).clone();
            let run = run_sca(&a, y0, lo, hi, settings, lambda);
            self.evals += run.iterations + 1;
            iterations += run.iterations;
            if run.objective > best.1 {
                best = (run.y, run.objective);
            }
        }
        (best.0, best.1, iterations)
    }
}

struct AlternatingRun {
    y: f64,
    eta: usize,
    value: f64,
    trace: Vec<f64>,
    inner: Vec<usize>,
}

fn alternate_from(eta0: usize, cache: &mut MatrixCache<'_>, settings: &OptimizerSettings) -> AlternatingRun {
    let cfg = cache.cfg;
    let y_fpa = cfg.fpa_position();
    let mut y = y_fpa.clamp(cfg.y_min(), cfg.y_upper(eta0));
    let mut eta = eta0;
    let mut value = cache.eval(eta, y);
    let mut trace = vec![value];
    let mut inner = Vec::new();
    for round in 1..=settings.max_alt_iters {
        let prev = value;
        let (y_new, v, iters) = cache.position_step(eta, y, settings);
        inner.push(iters);
        y = y_new;
        value = v;
        if round == 1 && settings.inject_compact {
            let anchor = cache.eval(1, y_fpa);
            if anchor > value {
                y = y_fpa;
                eta = 1;
                value = anchor;
            }
        }
        if let Some((e, v)) = cache.best_eta(y) {
            if accept_level(v, e, value, eta) {
                eta = e;
                value = v;
            }
        }
        trace.push(value);
        if stalled(prev, value, settings.epsilon) {
            break;
        }
    }
    AlternatingRun { y, eta, value, trace, inner }
}

/// Alternating optimization of `(y, eta)` for a single user.
///
/// Returns the SNR `p_bar * ||h(y*, eta*)||^2` as the objective.
pub fn optimize_single_user(
    paths: &PathSet,
    p_bar: f64,
    settings: &OptimizerSettings,
    cfg: &ArrayConfig,
) -> Result<GmaSolution> {
    settings.validate()?;
    if paths.is_empty() {
        return Err(GmaError::EmptyPaths);
    }
    if !(p_bar.is_finite() && p_bar >= 0.0) {
        return Err(GmaError::InvalidPower(format!("{p_bar} is not a finite non-negative power")));
    }
    let mut cache = MatrixCache::new(paths, cfg);
    let starts = settings.resolve_eta0(cfg, |eta, ys| ys.iter().map(|&y| cache.eval(eta, y)).collect())?;
    let mut best: Option<AlternatingRun> = None;
    for eta0 in starts {
        let run = alternate_from(eta0, &mut cache, settings);
        if best.as_ref().is_none_or(|b| run.value > b.value + TIE_TOL * b.value.abs()) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one feasible sparsity level");
    Ok(GmaSolution {
        y_star: best.y,
        eta_star: best.eta,
        objective: p_bar * best.value,
        trace: best.trace.iter().map(|v| p_bar * v).collect(),
        evals: cache.evals,
        rounds: best.inner.len(),
        inner_iterations: best.inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn cfg() -> ArrayConfig {
        ArrayConfig::new(128, 4, 1.0, 0.0, 20.0).unwrap()
    }

    fn unit(phase: f64) -> Complex64 {
        Complex64::from_polar(1.0, phase)
    }

    #[test]
    fn path_matrix_single_broadside_column() {
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.0)]).unwrap();
        let a = path_matrix(3, &paths, &cfg()).unwrap();
        assert_eq!(a.paths(), 1);
        assert!(a.column(0).iter().all(|&x| x == Complex64::new(1.0, 0.0)));
        assert!(path_matrix(43, &paths, &cfg()).is_err());
    }

    #[test]
    fn path_matrix_columns_are_scaled_steering() {
        let c = cfg();
        let paths = PathSet::from_pairs(&[(unit(0.4) * 2.0, 0.3), (unit(-1.0), -0.8)]).unwrap();
        let a = path_matrix(1, &paths, &c).unwrap();
        for (l, p) in paths.paths().iter().enumerate() {
            let s = crate::array::sparse_steering(1, p.aoa, &c).unwrap();
            for (x, y) in a.column(l).iter().zip(&s) {
                assert!((x - p.gain * y).norm() < 1e-12);
            }
            let norm: f64 = a.column(l).iter().map(|x| x.norm_sqr()).sum();
            assert!((norm - p.gain.norm_sqr() * 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_vector_examples() {
        let c = cfg();
        let paths = PathSet::from_pairs(&[(unit(0.0), FRAC_PI_2), (unit(0.0), 0.0)]).unwrap();
        assert!(phase_vector(0.0, &paths, &c).iter().all(|&f| f == Complex64::new(1.0, 0.0)));
        let f = phase_vector(0.5, &paths, &c);
        assert!((f[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(f[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn stationary_point_is_fixed() {
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.5)]).unwrap();
        let a = path_matrix(2, &paths, &cfg()).unwrap();
        let st = ScaState::at(3.0, &a, 1.0, 0);
        assert!(st.g_prime.abs() < 1e-9);
        assert!((surrogate_step(&st, 0.0, 20.0).position() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn step_clamps_to_upper_bound() {
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.5), (unit(1.0), -0.2)]).unwrap();
        let a = path_matrix(2, &paths, &cfg()).unwrap();
        let st = (0..200)
            .map(|i| ScaState::at(i as f64 * 0.01, &a, 1.0, 0))
            .find(|s| s.g_prime > 1e-3)
            .unwrap();
        let y = surrogate_step(&st, 0.0, st.y_j).position();
        assert_eq!(y, st.y_j);
        let st = (0..200)
            .map(|i| ScaState::at(i as f64 * 0.01, &a, 1.0, 0))
            .find(|s| s.g_prime < -1e-3)
            .unwrap();
        assert_eq!(surrogate_step(&st, st.y_j, 20.0).position(), st.y_j);
    }

    #[test]
    fn cancelled_paths_are_flat() {
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.5), (-unit(0.0), 0.5)]).unwrap();
        let a = path_matrix(2, &paths, &cfg()).unwrap();
        let st = ScaState::at(1.0, &a, 1.0, 0);
        assert!(st.is_degenerate());
        assert_eq!(surrogate_step(&st, 0.0, 20.0), ScaStep::Flat(1.0));
        let out = optimize_position_sca(2, &paths, 1.0, &OptimizerSettings::default(), &cfg()).unwrap();
        assert_eq!(out.y, 1.0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn single_path_position_is_immediate() {
        let paths = PathSet::from_pairs(&[(unit(0.7) * 1.5, 0.9)]).unwrap();
        let out = optimize_position_sca(5, &paths, 2.0, &OptimizerSettings::default(), &cfg()).unwrap();
        assert!((out.y - 2.0).abs() < 1e-12);
        assert!((out.objective - 2.25 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn sparsity_search_ties_and_singleton() {
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.3)]).unwrap();
        let (eta, v) = optimize_sparsity(1.0, &paths, &cfg()).unwrap();
        assert_eq!(eta, 1);
        assert!((v - 4.0).abs() < 1e-12);
        let c = ArrayConfig::new(5, 4, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(c.eta_max(), 1);
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.3), (unit(1.0), -0.4)]).unwrap();
        assert_eq!(optimize_sparsity(1.0, &paths, &c).unwrap().0, 1);
    }

    #[test]
    fn single_path_algorithm_converges_in_one_round() {
        let paths = PathSet::from_pairs(&[(unit(0.2) * 0.5, -0.6)]).unwrap();
        let sol = optimize_single_user(&paths, 10.0, &OptimizerSettings::default(), &cfg()).unwrap();
        assert_eq!(sol.rounds, 1);
        assert!((sol.objective - 10.0 * 0.25 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn settings_validation() {
        let s = OptimizerSettings { epsilon: 0.0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = OptimizerSettings { max_alt_iters: 0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = OptimizerSettings { eta_init: EtaInit::Fixed(99), ..Default::default() };
        let paths = PathSet::from_pairs(&[(unit(0.0), 0.3)]).unwrap();
        assert!(optimize_single_user(&paths, 1.0, &s, &cfg()).is_err());
    }
}
