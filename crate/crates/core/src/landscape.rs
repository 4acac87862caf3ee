use serde::Serialize;

use crate::array::{ArrayConfig, PathSet};
use crate::combining::LinkPowers;
use crate::error::{GmaError, Result};
use crate::multiuser::Evaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandscapePoint {
    pub y: f64,
    pub eta: usize,
    pub metric: f64,
}

/// Unit of [`Landscape::gap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapUnit {
    /// `10 log10(max / min)` of a single-user SNR.
    Decibel,
    /// `max - min` of a sum rate.
    BitsPerHz,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub points: Vec<LandscapePoint>,
    pub max: LandscapePoint,
    pub min: LandscapePoint,
    pub gap: f64,
    pub unit: GapUnit,
}

/// Objective over the product `y_grid x eta_set`, skipping positions that
/// are infeasible at a given sparsity.
pub fn landscape(
    users: &[PathSet],
    powers: &LinkPowers,
    cfg: &ArrayConfig,
    y_grid: &[f64],
    eta_set: &[usize],
) -> Result<Landscape> {
    if y_grid.is_empty() || eta_set.is_empty() {
        return Err(GmaError::InvalidParams("landscape grids must be non-empty".into()));
    }
    for &eta in eta_set {
        cfg.check_eta(eta)?;
    }
    for &y in y_grid {
        if !(cfg.y_min()..=cfg.y_max()).contains(&y) {
            return Err(GmaError::PositionOutOfRegion { y, y_min: cfg.y_min(), y_max: cfg.y_max() });
        }
    }
    let mut ev = Evaluator::new(users, powers, cfg)?;
    let mut points = Vec::with_capacity(y_grid.len() * eta_set.len());
    for (&eta, vals) in eta_set.iter().zip(ev.eval_grid(eta_set, y_grid)) {
        let ys = y_grid.iter().copied().filter(|&y| y <= cfg.y_upper(eta));
        points.extend(ys.zip(vals).map(|(y, metric)| LandscapePoint { y, eta, metric }));
    }
    let first = *points
        .first()
        .ok_or_else(|| GmaError::InvalidParams("no feasible landscape point".into()))?;
    let (mut max, mut min) = (first, first);
    for p in &points[1..] {
        if p.metric > max.metric {
            max = *p;
        }
        if p.metric < min.metric {
            min = *p;
        }
    }
    let unit = if users.len() == 1 { GapUnit::Decibel } else { GapUnit::BitsPerHz };
    let gap = match unit {
        GapUnit::Decibel => 10.0 * (max.metric / min.metric).log10(),
        GapUnit::BitsPerHz => max.metric - min.metric,
    };
    Ok(Landscape { points, max, min, gap, unit })
}
