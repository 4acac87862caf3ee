//! Comparison schemes: the fixed compact array (FPA), independently movable
//! antennas (MA) and the exhaustive two-dimensional search over `(y, eta)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{offset_phase, position_phase, synthesize, ArrayConfig, ChannelVector, PathSet, Spacing};
use crate::combining::{objective, objective_of, LinkPowers};
use crate::error::{GmaError, Result};
use crate::grid::{grid_points, refine_points, GridSpec};
use crate::multiuser::{first_max, Evaluator};
use crate::sca::{stalled, OptimizerSettings, PathMatrix};

const FEAS_TOL: f64 = 1e-9;

/// Element positions of independently movable antennas.
///
/// Stored as a reference position plus per-element offsets in wavelengths,
/// so a layout built from a grouped-array configuration reproduces that
/// configuration's channel exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaLayout {
    origin: f64,
    offsets_wl: Vec<f64>,
    lambda: f64,
}

/// Interval the MA elements may occupy: `[y_min, y_max + (M-1) d]`.
pub fn ma_span(cfg: &ArrayConfig) -> (f64, f64) {
    (cfg.y_min(), cfg.y_max() + cfg.aperture())
}

impl MaLayout {
    /// Elements of the sparse array at `(y, eta)`: `y + n * eta * d`.
    pub fn from_gma(y: f64, eta: usize, cfg: &ArrayConfig) -> Result<Self> {
        cfg.check_eta(eta)?;
        cfg.check_position(y, eta)?;
        Ok(Self { origin: y, offsets_wl: cfg.sparse_offsets(eta), lambda: cfg.lambda() })
    }

    /// The compact half-wavelength array at the baseline position.
    pub fn compact(cfg: &ArrayConfig) -> Result<Self> {
        Self::from_gma(cfg.fpa_position(), 1, cfg)
    }

    pub fn from_positions(positions: &[f64], cfg: &ArrayConfig) -> Result<Self> {
        let origin = *positions.first().ok_or_else(|| GmaError::InfeasibleLayout("no elements".into()))?;
        let lambda = cfg.lambda();
        let layout = Self { origin, offsets_wl: positions.iter().map(|p| (p - origin) / lambda).collect(), lambda };
        layout.validate(cfg)?;
        Ok(layout)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.offsets_wl.iter().map(|u| self.origin + u * self.lambda).collect()
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn offsets_wl(&self) -> &[f64] {
        &self.offsets_wl
    }

    /// Sorted, at least `lambda/2` apart and inside [`ma_span`].
    pub fn validate(&self, cfg: &ArrayConfig) -> Result<()> {
        if self.offsets_wl.len() != cfg.n() {
            return Err(GmaError::DimensionMismatch { expected: cfg.n(), got: self.offsets_wl.len() });
        }
        for w in self.offsets_wl.windows(2) {
            if w[1] - w[0] < 0.5 - FEAS_TOL {
                return Err(GmaError::InfeasibleLayout(format!(
                    "adjacent elements {} wavelengths apart (< 1/2)",
                    w[1] - w[0]
                )));
            }
        }
        let (lo, hi) = ma_span(cfg);
        let tol = FEAS_TOL * cfg.lambda();
        let pos = self.positions();
        if pos[0] < lo - tol || pos[pos.len() - 1] > hi + tol {
            return Err(GmaError::InfeasibleLayout(format!("elements leave the span [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn channels(&self, users: &[PathSet]) -> Vec<ChannelVector> {
        users
            .iter()
            .map(|p| ChannelVector { entries: synthesize(self.origin, &self.offsets_wl, p, self.lambda), y: self.origin, eta: 0 })
            .collect()
    }

    /// Objective (SNR or sum rate) with these element positions.
    pub fn metric(&self, users: &[PathSet], powers: &LinkPowers) -> Result<f64> {
        objective_of(&self.channels(users), powers)
    }
}

/// Objective of the compact array at the baseline position.
pub fn fpa_metric(users: &[PathSet], powers: &LinkPowers, cfg: &ArrayConfig) -> Result<f64> {
    objective(cfg.fpa_position(), 1, users, powers, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaOutcome {
    pub layout: MaLayout,
    pub metric: f64,
    /// Metric after initialization and after every sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub evals: usize,
}

/// Per-user path terms with the origin phase folded in.
struct UserTerms {
    terms: Vec<(Complex64, f64, Complex64)>,
}

impl UserTerms {
    fn new(paths: &PathSet, origin: f64, lambda: f64) -> Self {
        let terms = paths
            .paths()
            .iter()
            .map(|p| {
                let s = p.aoa.sin();
                (p.gain, s, position_phase(origin, s, lambda))
            })
            .collect();
        Self { terms }
    }

    /// Same accumulation order as the full channel synthesis.
    fn entry(&self, offset_wl: f64) -> Complex64 {
        let mut h = Complex64::new(0.0, 0.0);
        for &(g, s, f) in &self.terms {
            h += (g * offset_phase(offset_wl, s)) * f;
        }
        h
    }
}

/// Cyclic coordinate ascent over the element positions.
///
/// Each element in turn is moved over a grid of the interval left free by
/// its neighbours (keeping `lambda/2` gaps), with local refinement; a move
/// is accepted only if it strictly improves the metric. Sweeps stop when the
/// fractional improvement falls below `settings.epsilon` or after
/// `settings.max_alt_iters` sweeps.
pub fn ma_optimize(
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    grid: &GridSpec,
    init: &MaLayout,
    settings: &OptimizerSettings,
) -> Result<MaOutcome> {
    grid.validate()?;
    settings.validate()?;
    if users.len() != powers.len() {
        return Err(GmaError::DimensionMismatch { expected: users.len(), got: powers.len() });
    }
    let (span_lo, span_hi) = ma_span(cfg);
    let lambda = cfg.lambda();
    let needed = (cfg.n() - 1) as f64 * lambda / 2.0;
    if span_hi - span_lo < needed - FEAS_TOL * lambda {
        return Err(GmaError::InfeasibleLayout(format!(
            "span {} m cannot hold {} elements at lambda/2",
            span_hi - span_lo,
            cfg.n()
        )));
    }
    if (init.lambda - lambda).abs() > 0.0 {
        return Err(GmaError::InfeasibleLayout("layout built for a different wavelength".into()));
    }
    init.validate(cfg)?;

    let mut layout = init.clone();
    let terms: Vec<UserTerms> = users.iter().map(|p| UserTerms::new(p, layout.origin, lambda)).collect();
    let mut channels = layout.channels(users);
    let mut metric = objective_of(&channels, powers)?;
    let mut trace = vec![metric];
    let mut evals = 1;
    let lo_u = (span_lo - layout.origin) / lambda;
    let hi_u = (span_hi - layout.origin) / lambda;
    let base_step = grid.step.resolve(lambda) / lambda;
    let n_el = cfg.n();

    let eval_at = |channels: &[ChannelVector], n: usize, u: f64| -> f64 {
        let mut trial = channels.to_vec();
        for (ch, t) in trial.iter_mut().zip(&terms) {
            ch.entries[n] = t.entry(u);
        }
        objective_of(&trial, powers).unwrap_or(f64::NEG_INFINITY)
    };

    let mut sweeps = 0;
    for _ in 0..settings.max_alt_iters {
        let prev = metric;
        for n in 0..n_el {
            let a = if n > 0 { layout.offsets_wl[n - 1] + 0.5 } else { lo_u };
            let b = if n + 1 < n_el { layout.offsets_wl[n + 1] - 0.5 } else { hi_u };
            if b < a {
                continue;
            }
            let pts = grid_points(a, b, base_step);
            let vals: Vec<f64> = pts.par_iter().map(|&u| eval_at(&channels, n, u)).collect();
            evals += pts.len();
            let mut best = first_max(&pts, &vals);
            let mut step = base_step;
            for _ in 0..grid.refine_levels {
                let pts = refine_points(best.0, step, grid.refine_factor, a, b);
                let vals: Vec<f64> = pts.par_iter().map(|&u| eval_at(&channels, n, u)).collect();
                evals += pts.len();
                let cand = first_max(&pts, &vals);
                if cand.1 > best.1 {
                    best = cand;
                }
                step /= grid.refine_factor as f64;
            }
            if best.1 > metric {
                layout.offsets_wl[n] = best.0;
                for (ch, t) in channels.iter_mut().zip(&terms) {
                    ch.entries[n] = t.entry(best.0);
                }
                metric = best.1;
            }
        }
        sweeps += 1;
        trace.push(metric);
        if stalled(prev, metric, settings.epsilon) {
            break;
        }
    }
    Ok(MaOutcome { layout, metric, trace, sweeps, evals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub y: f64,
    pub eta: usize,
    pub metric: f64,
    pub evals: usize,
}

/// Best `(y, eta)` over the product of a uniform position grid and every
/// sparsity level. Ties go to the smaller level, then the smaller position.
pub fn exhaustive_oracle(
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    fine_step: Spacing,
) -> Result<OracleResult> {
    let step = fine_step.resolve(cfg.lambda());
    if !(step.is_finite() && step > 0.0) {
        return Err(GmaError::InvalidParams(format!("oracle step {step} must be positive")));
    }
    let mut ev = Evaluator::new(users, powers, cfg)?;
    let ys = grid_points(cfg.y_min(), cfg.y_max(), step);
    let etas: Vec<usize> = cfg.feasible_etas().collect();
    if users.len() == 1 {
        return Ok(single_user_oracle(&users[0], powers.p_bar()[0], cfg, &ys, &etas));
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for &eta in &etas {
        let hi = cfg.y_upper(eta);
        let pts: Vec<f64> = ys.iter().copied().filter(|&y| y <= hi).collect();
        let vals = ev.eval_many(eta, &pts);
        let (y, v) = first_max(&pts, &vals);
        if best.is_none_or(|b| v > b.2) {
            best = Some((y, eta, v));
        }
    }
    let (y, eta, metric) = best.expect("feasible sparsity level");
    Ok(OracleResult { y, eta, metric, evals: ev.evals })
}

/// Quadratic form `Re{ f^H G f }` with `G = A^H A` Hermitian.
fn gram_form(gram: &[Complex64], l: usize, f: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..l {
        acc += gram[i * l + i].re * f[i].norm_sqr();
        for j in i + 1..l {
            acc += 2.0 * (f[i].conj() * gram[i * l + j] * f[j]).re;
        }
    }
    acc
}

fn single_user_oracle(paths: &PathSet, p_bar: f64, cfg: &ArrayConfig, ys: &[f64], etas: &[usize]) -> OracleResult {
    let l = paths.len();
    let grams: Vec<Vec<Complex64>> = etas
        .iter()
        .map(|&eta| {
            let a = PathMatrix::build(eta, paths, cfg);
            let mut g = vec![Complex64::new(0.0, 0.0); l * l];
            for i in 0..l {
                for j in 0..l {
                    g[i * l + j] = a.column(i).iter().zip(a.column(j)).map(|(x, y)| x.conj() * y).sum();
                }
            }
            g
        })
        .collect();
    let uppers: Vec<f64> = etas.iter().map(|&e| cfg.y_upper(e)).collect();
    let sins: Vec<f64> = paths.paths().iter().map(|p| p.aoa.sin()).collect();
    let lambda = cfg.lambda();
    // per position: best (eta index, value)
    let per_y: Vec<Option<(usize, f64)>> = ys
        .par_iter()
        .map(|&y| {
            let f: Vec<Complex64> = sins.iter().map(|&s| position_phase(y, s, lambda)).collect();
            let mut best: Option<(usize, f64)> = None;
            for (i, g) in grams.iter().enumerate() {
                if y > uppers[i] {
                    continue;
                }
                let v = gram_form(g, l, &f);
                if best.is_none_or(|b| v > b.1) {
                    best = Some((i, v));
                }
            }
            best
        })
        .collect();
    let mut best: Option<(usize, usize, f64)> = None;
    for (yi, cand) in per_y.iter().enumerate() {
        if let Some((ei, v)) = *cand {
            let better = match best {
                None => true,
                Some((_, be, bv)) => v > bv || (v == bv && ei < be),
            };
            if better {
                best = Some((yi, ei, v));
            }
        }
    }
    let (yi, ei, _) = best.expect("feasible grid point");
    let (y, eta) = (ys[yi], etas[ei]);
    let h = synthesize(y, &cfg.sparse_offsets(eta), paths, lambda);
    let metric = p_bar * h.iter().map(|x| x.norm_sqr()).sum::<f64>();
    OracleResult { y, eta, metric, evals: ys.len() * etas.len() }
}
