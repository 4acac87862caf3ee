use serde::{Deserialize, Serialize};

use crate::array::Spacing;
use crate::error::{GmaError, Result};

/// Resolution of a one-dimensional position search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub step: Spacing,
    /// Local refinement rounds around the best point.
    pub refine_levels: usize,
    /// Step shrink per refinement round.
    pub refine_factor: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step: Spacing::Wavelengths(1.0 / 16.0), refine_levels: 2, refine_factor: 8 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.step.resolve(1.0);
        if !(s.is_finite() && s > 0.0) {
            return Err(GmaError::InvalidParams(format!("grid step {s} must be positive")));
        }
        if self.refine_factor < 2 {
            return Err(GmaError::InvalidParams("refine_factor must be at least 2".into()));
        }
        Ok(())
    }

    /// A plain grid without refinement.
    pub fn flat(step: Spacing) -> Self {
        Self { step, refine_levels: 0, refine_factor: 2 }
    }
}

/// `lo, lo + step, ...` up to `hi`, with `hi` appended when the last step
/// falls short of it. Point `i` is always `lo + i * step`.
pub fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).filter(|&y| y <= hi).collect();
    let last = *pts.last().unwrap_or(&lo);
    if hi - last > 1e-9 * step {
        pts.push(hi);
    }
    pts
}

/// Points `center + m * step` for `m = -factor..=factor` that lie in `[lo, hi]`.
pub(crate) fn refine_points(center: f64, step: f64, factor: usize, lo: f64, hi: f64) -> Vec<f64> {
    let fine = step / factor as f64;
    let f = factor as i64;
    (-f..=f)
        .map(|m| center + m as f64 * fine)
        .filter(|&y| y >= lo && y <= hi)
        .collect()
}
