//! Sum-rate maximization over `(y, eta)` for several users.
//!
//! The position subproblem is a one-dimensional grid search with local
//! refinement, the sparsity subproblem an enumeration of every level. Both
//! always include the incumbent point, so the alternating trace never
//! decreases. Grid evaluations run in parallel and are reduced in index
//! order, which keeps results independent of scheduling.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{ArrayConfig, ChannelVector, PathSet};
use crate::combining::{objective_of, LinkPowers};
use crate::error::{GmaError, Result};
use crate::grid::{grid_points, refine_points};
pub use crate::grid::GridSpec;
use crate::sca::{accept_level, pick_level, stalled, OptimizerSettings, PathMatrix, TIE_TOL};
use crate::solution::GmaSolution;

/// Caches `A_k(eta)` for every user and evaluates the objective.
pub(crate) struct Evaluator<'a> {
    users: &'a [PathSet],
    powers: &'a LinkPowers,
    cfg: &'a ArrayConfig,
    cache: Vec<Option<Vec<PathMatrix>>>,
    pub(crate) evals: usize,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(users: &'a [PathSet], powers: &'a LinkPowers, cfg: &'a ArrayConfig) -> Result<Self> {
        if users.is_empty() {
            return Err(GmaError::InvalidParams("at least one user is required".into()));
        }
        if users.len() != powers.len() {
            return Err(GmaError::DimensionMismatch { expected: users.len(), got: powers.len() });
        }
        if users.iter().any(|u| u.is_empty()) {
            return Err(GmaError::EmptyPaths);
        }
        Ok(Self { users, powers, cfg, cache: vec![None; cfg.eta_max() + 1], evals: 0 })
    }

    fn mats(&mut self, eta: usize) -> &[PathMatrix] {
        let (users, cfg) = (self.users, self.cfg);
        self.cache[eta].get_or_insert_with(|| users.iter().map(|p| PathMatrix::build(eta, p, cfg)).collect())
    }

    fn value(mats: &[PathMatrix], powers: &LinkPowers, y: f64, lambda: f64) -> f64 {
        let phases: Vec<Vec<Complex64>> = mats.iter().map(|a| a.phases(y, lambda)).collect();
        Self::value_with(mats, powers, y, &phases)
    }

    fn value_with(mats: &[PathMatrix], powers: &LinkPowers, y: f64, phases: &[Vec<Complex64>]) -> f64 {
        let channels: Vec<ChannelVector> = mats
            .iter()
            .zip(phases)
            .map(|(a, f)| ChannelVector { entries: a.apply(f), y, eta: a.eta() })
            .collect();
        objective_of(&channels, powers).unwrap_or(f64::NEG_INFINITY)
    }

    pub(crate) fn eval(&mut self, eta: usize, y: f64) -> f64 {
        self.evals += 1;
        let (powers, lambda) = (self.powers, self.cfg.lambda());
        Self::value(self.mats(eta), powers, y, lambda)
    }

    pub(crate) fn eval_many(&mut self, eta: usize, ys: &[f64]) -> Vec<f64> {
        self.evals += ys.len();
        let (powers, lambda) = (self.powers, self.cfg.lambda());
        let mats = self.mats(eta);
        ys.par_iter().map(|&y| Self::value(mats, powers, y, lambda)).collect()
    }

    /// Objective over `ys x etas`, skipping positions past `y_upper(eta)`.
    /// The phase vectors depend only on `y`, so they are shared across levels.
    pub(crate) fn eval_grid(&mut self, etas: &[usize], ys: &[f64]) -> Vec<Vec<f64>> {
        let (powers, cfg) = (self.powers, self.cfg);
        for &eta in etas {
            self.mats(eta);
        }
        let by_level: Vec<(usize, &[PathMatrix])> =
            etas.iter().map(|&e| (e, self.cache[e].as_deref().expect("built above"))).collect();
        let per_y: Vec<Vec<Option<f64>>> = ys
            .par_iter()
            .map(|&y| {
                let phases: Vec<Vec<Complex64>> =
                    by_level[0].1.iter().map(|a| a.phases(y, cfg.lambda())).collect();
                by_level
                    .iter()
                    .map(|(e, mats)| (y <= cfg.y_upper(*e)).then(|| Self::value_with(mats, powers, y, &phases)))
                    .collect()
            })
            .collect();
        let out: Vec<Vec<f64>> =
            (0..etas.len()).map(|i| per_y.iter().filter_map(|row| row[i]).collect()).collect();
        self.evals += out.iter().map(Vec::len).sum::<usize>();
        out
    }

    /// Exhaustive sparsity search at `y`; ties go to the smaller level.
    pub(crate) fn best_eta(&mut self, y: f64) -> Option<(usize, f64)> {
        let cfg = self.cfg;
        let levels: Vec<(usize, f64)> =
            cfg.feasible_etas().filter(|&e| y <= cfg.y_upper(e)).map(|e| (e, self.eval(e, y))).collect();
        pick_level(&levels)
    }

    /// Grid search with refinement at fixed `eta`; returns `(y, value, levels)`.
    pub(crate) fn position_search(&mut self, eta: usize, grid: &GridSpec, incumbent: Option<f64>) -> (f64, f64, usize) {
        let cfg = self.cfg;
        let (lo, hi) = (cfg.y_min(), cfg.y_upper(eta));
        let mut step = grid.step.resolve(cfg.lambda());
        let pts = grid_points(lo, hi, step);
        let vals = self.eval_many(eta, &pts);
        let mut best = first_max(&pts, &vals);
        let mut levels = 0;
        for _ in 0..grid.refine_levels {
            let pts = refine_points(best.0, step, grid.refine_factor, lo, hi);
            let vals = self.eval_many(eta, &pts);
            let cand = first_max(&pts, &vals);
            if cand.1 > best.1 {
                best = cand;
            }
            step /= grid.refine_factor as f64;
            levels += 1;
        }
        if let Some(y) = incumbent.filter(|y| (lo..=hi).contains(y)) {
            let v = self.eval(eta, y);
            if v > best.1 {
                best = (y, v);
            }
        }
        (best.0, best.1, levels)
    }
}

pub(crate) fn first_max(pts: &[f64], vals: &[f64]) -> (f64, f64) {
    let mut best = (pts[0], vals[0]);
    for (&y, &v) in pts.iter().zip(vals).skip(1) {
        if v > best.1 {
            best = (y, v);
        }
    }
    best
}

/// Best position for fixed `eta`: grid search with refinement, plus the
/// incumbent if given.
pub fn grid_position_search(
    eta: usize,
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    grid: &GridSpec,
    incumbent: Option<f64>,
) -> Result<(f64, f64)> {
    grid.validate()?;
    cfg.check_eta(eta)?;
    cfg.check_position(cfg.y_min(), eta)?;
    let mut ev = Evaluator::new(users, powers, cfg)?;
    let (y, v, _) = ev.position_search(eta, grid, incumbent);
    Ok((y, v))
}

/// Best sparsity level at fixed `y`; ties go to the smaller level.
pub fn sparsity_search(y: f64, users: &[PathSet], powers: &LinkPowers, cfg: &ArrayConfig) -> Result<(usize, f64)> {
    cfg.check_position(y, 1)?;
    let mut ev = Evaluator::new(users, powers, cfg)?;
    ev.best_eta(y).ok_or(GmaError::PositionOutOfRegion { y, y_min: cfg.y_min(), y_max: cfg.y_max() })
}

/// Alternating search over `(y, eta)`; see [`optimize_multiuser_from`].
pub fn optimize_multiuser(
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    grid: &GridSpec,
    settings: &OptimizerSettings,
) -> Result<GmaSolution> {
    optimize_multiuser_from(users, powers, cfg, grid, settings, &[])
}

/// Alternating search over `(y, eta)`.
///
/// After the first position search, the compact array at the baseline
/// position (when `inject_compact` is set) and every point in `starts` are
/// compared against the incumbent, so the result is never worse than any of
/// them.
pub fn optimize_multiuser_from(
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    grid: &GridSpec,
    settings: &OptimizerSettings,
    starts: &[(f64, usize)],
) -> Result<GmaSolution> {
    settings.validate()?;
    grid.validate()?;
    let mut ev = Evaluator::new(users, powers, cfg)?;
    for &(y, eta) in starts {
        cfg.check_eta(eta)?;
        cfg.check_position(y, eta)?;
    }
    let y_fpa = cfg.fpa_position();
    if powers.all_zero() {
        let v = ev.eval(1, y_fpa);
        return Ok(GmaSolution {
            y_star: y_fpa,
            eta_star: 1,
            objective: v,
            trace: vec![v],
            evals: ev.evals,
            rounds: 0,
            inner_iterations: vec![],
        });
    }

    let mut best: Option<(f64, usize, f64, Vec<f64>, Vec<usize>)> = None;
    for eta0 in settings.resolve_eta0(cfg, |eta, ys| ev.eval_many(eta, ys))? {
        let mut y = y_fpa.clamp(cfg.y_min(), cfg.y_upper(eta0));
        let mut eta = eta0;
        let mut value = ev.eval(eta, y);
        let mut trace = vec![value];
        let mut inner = Vec::new();
        for round in 1..=settings.max_alt_iters {
            let prev = value;
            let (y_new, v, levels) = ev.position_search(eta, grid, Some(y));
            inner.push(levels);
            y = y_new;
            value = v;
            if round == 1 {
                let anchors = settings.inject_compact.then_some((y_fpa, 1)).into_iter().chain(starts.iter().copied());
                for (ya, ea) in anchors {
                    let va = ev.eval(ea, ya);
                    if va > value {
                        (y, eta, value) = (ya, ea, va);
                    }
                }
            }
            if let Some((e, v)) = ev.best_eta(y) {
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
        if best.as_ref().is_none_or(|b| value > b.2 + TIE_TOL * b.2.abs()) {
            best = Some((y, eta, value, trace, inner));
        }
    }
    let (y_star, eta_star, objective, trace, inner_iterations) = best.expect("at least one sparsity level");
    let rounds = inner_iterations.len();
    Ok(GmaSolution { y_star, eta_star, objective, trace, evals: ev.evals, rounds, inner_iterations })
}
