//! Monte-Carlo experiment driver: configuration, trial runners, CSV output
//! and re-evaluation of stored results.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::Spacing;
use crate::baselines::{exhaustive_oracle, fpa_metric, ma_optimize, ma_span, MaLayout};
use crate::combining::objective;
use crate::error::{GmaError, Result};
use crate::grid::{grid_points, GridSpec};
use crate::landscape::{landscape, Landscape};
use crate::multiuser::optimize_multiuser_from;
use crate::sca::{optimize_single_user, OptimizerSettings};
use crate::scenario::{sample_trial, Scenario, ScenarioParams};
use crate::solution::GmaSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gma,
    Fpa,
    Ma,
    Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Gma, Scheme::Fpa, Scheme::Ma, Scheme::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gma => "gma",
            Scheme::Fpa => "fpa",
            Scheme::Ma => "ma",
            Scheme::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = GmaError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| GmaError::Config(format!("unknown scheme {s:?} (expected gma, fpa, ma, oracle)")))
    }
}

/// Parses a comma-separated scheme list such as `"gma,fpa"`.
pub fn parse_scheme_list(s: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        if item.trim().is_empty() {
            return Err(GmaError::Config(format!("empty entry in scheme list {s:?}")));
        }
        let scheme: Scheme = item.parse()?;
        if out.contains(&scheme) {
            return Err(GmaError::Config(format!("scheme {scheme} listed twice")));
        }
        out.push(scheme);
    }
    Ok(out)
}

/// Which optimizer produces the GMA result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    /// One user (the scenario is forced to `K = 1`), SCA position updates.
    SingleUser,
    /// Grid-search position updates for any `K`.
    MultiUser,
    /// Region and array-size sweep with the multi-user optimizer.
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Region lengths as multiples of `D_max = (d_max_elements - 1) d`.
    pub y_over_dmax: Vec<f64>,
    pub m_values: Vec<usize>,
    pub d_max_elements: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { y_over_dmax: vec![1.0, 2.0, 4.0, 8.0], m_values: vec![32, 64, 128], d_max_elements: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSpec {
    pub y_step: Spacing,
    /// Sparsity levels to evaluate; all feasible levels when absent.
    pub etas: Option<Vec<usize>>,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        Self { y_step: Spacing::Wavelengths(1.0 / 16.0), etas: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioParams,
    pub optimizer: OptimizerSettings,
    /// Position grid of the multi-user optimizer.
    pub grid: GridSpec,
    /// Per-element grid of the MA baseline.
    pub ma_grid: GridSpec,
    /// Oracle grid step; `lambda/1000` for one user, `lambda/16` otherwise.
    pub oracle_step: Option<Spacing>,
    pub trials: u64,
    /// Explicit trial indices; overrides `trials`.
    pub seeds: Option<Vec<u64>>,
    pub schemes: Option<Vec<Scheme>>,
    /// When false, `wall_ms` is written as 0 so repeated runs produce
    /// identical files.
    pub record_wall_time: bool,
    pub sweep: SweepSpec,
    pub landscape: LandscapeSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            optimizer: OptimizerSettings::default(),
            grid: GridSpec::default(),
            ma_grid: GridSpec::default(),
            oracle_step: None,
            trials: 200,
            seeds: None,
            schemes: None,
            record_wall_time: true,
            sweep: SweepSpec::default(),
            landscape: LandscapeSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.optimizer.validate()?;
        self.grid.validate()?;
        self.ma_grid.validate()?;
        if let Some(step) = self.oracle_step {
            let s = step.resolve(1.0);
            if !(s.is_finite() && s > 0.0) {
                return Err(GmaError::Config("oracle_step must be positive".into()));
            }
        }
        let s = self.landscape.y_step.resolve(1.0);
        if !(s.is_finite() && s > 0.0) {
            return Err(GmaError::Config("landscape.y_step must be positive".into()));
        }
        let sw = &self.sweep;
        if sw.d_max_elements < 2 || sw.m_values.iter().any(|&m| m < self.scenario.rf_chains) {
            return Err(GmaError::Config("sweep array sizes must hold N elements".into()));
        }
        if sw.y_over_dmax.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(GmaError::Config("sweep region ratios must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Trial indices to run.
    pub fn trial_ids(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| (0..self.trials).collect())
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        self.schemes.clone().unwrap_or_else(|| vec![Scheme::Gma, Scheme::Fpa])
    }

    /// Scenario parameters as used by `kind`.
    pub fn scenario_for(&self, kind: RunKind) -> ScenarioParams {
        let mut p = self.scenario.clone();
        if kind == RunKind::SingleUser {
            p.users = 1;
            if let crate::scenario::PowerSpec::PerUser(v) = &p.p_tx_dbm {
                p.p_tx_dbm = crate::scenario::PowerSpec::Uniform(v.first().copied().unwrap_or(0.0));
            }
        }
        p
    }

    fn oracle_step_for(&self, users: usize) -> Spacing {
        self.oracle_step.unwrap_or(if users == 1 {
            Spacing::Wavelengths(1e-3)
        } else {
            Spacing::Wavelengths(1.0 / 16.0)
        })
    }

    /// Scenario parameters for one sweep cell.
    pub fn sweep_params(&self, m: usize, y_over_dmax: f64) -> Result<ScenarioParams> {
        let mut p = self.scenario.clone();
        p.elements = m;
        let lambda = p.wavelength();
        let d = lambda / 2.0;
        let d_max = (self.sweep.d_max_elements - 1) as f64 * d;
        p.region = Some([0.0, y_over_dmax * d_max]);
        p.validate()?;
        Ok(p)
    }
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub scheme: Scheme,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "M")]
    pub elements: usize,
    #[serde(rename = "N")]
    pub rf_chains: usize,
    /// Region length over `D`; over `D_max` for sweep rows.
    #[serde(rename = "Y_over_D")]
    pub y_over_d: f64,
    pub eta_max: usize,
    /// Reference position; the first element for MA rows.
    pub y_star: f64,
    /// Sparsity level; 0 for MA rows.
    pub eta_star: usize,
    pub metric: f64,
    pub evals: usize,
    pub wall_ms: u64,
    #[serde(skip)]
    pub layout: Option<MaLayout>,
}

pub const CSV_HEADER: [&str; 12] =
    ["seed", "scheme", "K", "M", "N", "Y_over_D", "eta_max", "y_star", "eta_star", "metric", "evals", "wall_ms"];

pub fn write_trial_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a results CSV, requiring the exact header written by
/// [`write_trial_csv`].
pub fn read_trial_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(GmaError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let r: TrialRecord = row?;
        if !r.metric.is_finite() || !r.y_star.is_finite() || !r.y_over_d.is_finite() {
            return Err(GmaError::Csv(format!("non-finite value in row for seed {}", r.seed)));
        }
        out.push(r);
    }
    Ok(out)
}

fn elapsed_ms(start: Instant, record: bool) -> u64 {
    if record {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

struct RowContext<'a> {
    scenario: &'a Scenario,
    seed: u64,
    y_over_d: f64,
    record_wall_time: bool,
}

impl RowContext<'_> {
    fn row(&self, scheme: Scheme, y: f64, eta: usize, metric: f64, evals: usize, start: Instant) -> TrialRecord {
        let cfg = &self.scenario.cfg;
        TrialRecord {
            seed: self.seed,
            scheme,
            users: self.scenario.users.len(),
            elements: cfg.m(),
            rf_chains: cfg.n(),
            y_over_d: self.y_over_d,
            eta_max: cfg.eta_max(),
            y_star: y,
            eta_star: eta,
            metric,
            evals,
            wall_ms: elapsed_ms(start, self.record_wall_time),
            layout: None,
        }
    }
}

fn solve_gma(
    config: &ExperimentConfig,
    kind: RunKind,
    sc: &Scenario,
    starts: &[(f64, usize)],
) -> Result<GmaSolution> {
    match kind {
        RunKind::SingleUser => optimize_single_user(&sc.users[0], sc.powers.p_bar()[0], &config.optimizer, &sc.cfg),
        RunKind::MultiUser | RunKind::Sweep => {
            optimize_multiuser_from(&sc.users, &sc.powers, &sc.cfg, &config.grid, &config.optimizer, starts)
        }
    }
}

/// Runs every scheme on one trial; rows follow the order of `schemes`.
pub fn run_trial(config: &ExperimentConfig, kind: RunKind, trial: u64, schemes: &[Scheme]) -> Result<Vec<TrialRecord>> {
    let params = config.scenario_for(kind);
    let sc = sample_trial(&params, trial)?;
    let ctx = RowContext {
        scenario: &sc,
        seed: trial,
        y_over_d: (sc.cfg.y_max() - sc.cfg.y_min()) / sc.cfg.aperture(),
        record_wall_time: config.record_wall_time,
    };
    let mut gma: Option<(GmaSolution, u64)> = None;
    let mut rows = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let start = Instant::now();
        match scheme {
            Scheme::Gma | Scheme::Ma if gma.is_none() => {
                let sol = solve_gma(config, kind, &sc, &[])?;
                gma = Some((sol, elapsed_ms(start, config.record_wall_time)));
            }
            _ => {}
        }
        let row = match scheme {
            Scheme::Gma => {
                let (sol, ms) = gma.as_ref().expect("solved above");
                TrialRecord { wall_ms: *ms, ..ctx.row(scheme, sol.y_star, sol.eta_star, sol.objective, sol.evals, start) }
            }
            Scheme::Fpa => {
                let v = fpa_metric(&sc.users, &sc.powers, &sc.cfg)?;
                ctx.row(scheme, sc.cfg.fpa_position(), 1, v, 1, start)
            }
            Scheme::Ma => {
                let (sol, _) = gma.as_ref().expect("solved above");
                let init = MaLayout::from_gma(sol.y_star, sol.eta_star, &sc.cfg)?;
                let out = ma_optimize(&sc.users, &sc.powers, &sc.cfg, &config.ma_grid, &init, &config.optimizer)?;
                let first = out.layout.positions()[0];
                TrialRecord { layout: Some(out.layout), ..ctx.row(scheme, first, 0, out.metric, out.evals, start) }
            }
            Scheme::Oracle => {
                let step = config.oracle_step_for(sc.users.len());
                let o = exhaustive_oracle(&sc.users, &sc.powers, &sc.cfg, step)?;
                ctx.row(scheme, o.y, o.eta, o.metric, o.evals, start)
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Runs all configured trials. Trials are independent and run in
/// parallel; output order is by trial, then scheme.
pub fn run_experiment(config: &ExperimentConfig, kind: RunKind, schemes: &[Scheme]) -> Result<Vec<TrialRecord>> {
    if kind == RunKind::Sweep {
        return run_sweep(config);
    }
    config.validate()?;
    let ids = config.trial_ids();
    let per_trial: Vec<Result<Vec<TrialRecord>>> =
        ids.par_iter().map(|&t| run_trial(config, kind, t, schemes)).collect();
    let mut out = Vec::new();
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

/// Region and array-size sweep (GMA and FPA rows).
///
/// Cells are visited with `M` ascending and the region ascending; each cell
/// is warm-started from the solutions of the cells with the next smaller
/// region and the next smaller `M`. Both are feasible in the current cell
/// and the channel at a given `(y, eta)` does not depend on `M` or on the
/// region, so the per-trial GMA rate is non-decreasing along both axes.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let mut ms = config.sweep.m_values.clone();
    ms.sort_unstable();
    ms.dedup();
    let mut ratios = config.sweep.y_over_dmax.clone();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let cells: Vec<(usize, f64, ScenarioParams)> = ms
        .iter()
        .flat_map(|&m| ratios.iter().map(move |&r| (m, r)))
        .map(|(m, r)| config.sweep_params(m, r).map(|p| (m, r, p)))
        .collect::<Result<_>>()?;
    let ids = config.trial_ids();
    let per_trial: Vec<Result<Vec<TrialRecord>>> = ids
        .par_iter()
        .map(|&trial| {
            let mut rows = Vec::with_capacity(cells.len() * 2);
            let mut solved: Vec<(usize, f64, f64, usize)> = Vec::new();
            for (i, (m, ratio, params)) in cells.iter().enumerate() {
                let sc = sample_trial(params, trial)?;
                let mut starts = Vec::new();
                if i % ratios.len() > 0 {
                    let (_, _, y, eta) = solved[i - 1];
                    starts.push((y, eta));
                }
                if i >= ratios.len() {
                    let (_, _, y, eta) = solved[i - ratios.len()];
                    starts.push((y, eta));
                }
                let ctx = RowContext { scenario: &sc, seed: trial, y_over_d: *ratio, record_wall_time: config.record_wall_time };
                let start = Instant::now();
                let sol = solve_gma(config, RunKind::Sweep, &sc, &starts)?;
                rows.push(ctx.row(Scheme::Gma, sol.y_star, sol.eta_star, sol.objective, sol.evals, start));
                let start = Instant::now();
                let v = fpa_metric(&sc.users, &sc.powers, &sc.cfg)?;
                rows.push(ctx.row(Scheme::Fpa, sc.cfg.fpa_position(), 1, v, 1, start));
                solved.push((*m, *ratio, sol.y_star, sol.eta_star));
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

/// Mean metric of one scheme in one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMean {
    pub scheme: Scheme,
    pub elements: usize,
    pub y_over_d: f64,
    pub mean: f64,
    pub count: usize,
}

/// Means grouped by `(scheme, M, Y_over_D)`, in first-appearance order.
pub fn cell_means(records: &[TrialRecord]) -> Vec<CellMean> {
    let mut out: Vec<CellMean> = Vec::new();
    for r in records {
        match out
            .iter_mut()
            .find(|c| c.scheme == r.scheme && c.elements == r.elements && c.y_over_d == r.y_over_d)
        {
            Some(c) => {
                c.mean += r.metric;
                c.count += 1;
            }
            None => out.push(CellMean {
                scheme: r.scheme,
                elements: r.elements,
                y_over_d: r.y_over_d,
                mean: r.metric,
                count: 1,
            }),
        }
    }
    for c in &mut out {
        c.mean /= c.count as f64;
    }
    out
}

/// Recomputes a record's metric from its seed and stored decision.
pub fn reevaluate(config: &ExperimentConfig, kind: RunKind, record: &TrialRecord) -> Result<f64> {
    let params = match kind {
        RunKind::Sweep => config.sweep_params(record.elements, record.y_over_d)?,
        _ => config.scenario_for(kind),
    };
    let sc = sample_trial(&params, record.seed)?;
    match record.scheme {
        Scheme::Ma => {
            let layout = record
                .layout
                .as_ref()
                .ok_or_else(|| GmaError::Config("MA record carries no layout".into()))?;
            layout.validate(&sc.cfg)?;
            layout.metric(&sc.users, &sc.powers)
        }
        _ => objective(record.y_star, record.eta_star, &sc.users, &sc.powers, &sc.cfg),
    }
}

/// Landscapes of the configured trials.
pub fn run_landscape(config: &ExperimentConfig, kind: RunKind) -> Result<Vec<(u64, Landscape)>> {
    config.validate()?;
    let params = config.scenario_for(kind);
    config
        .trial_ids()
        .par_iter()
        .map(|&t| {
            let sc = sample_trial(&params, t)?;
            let cfg = &sc.cfg;
            let ys = grid_points(cfg.y_min(), cfg.y_max(), config.landscape.y_step.resolve(cfg.lambda()));
            let etas = config.landscape.etas.clone().unwrap_or_else(|| cfg.feasible_etas().collect());
            Ok((t, landscape(&sc.users, &sc.powers, cfg, &ys, &etas)?))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct LayoutEntry<'a> {
    seed: u64,
    y_over_d: f64,
    elements: usize,
    layout: &'a MaLayout,
    positions: Vec<f64>,
}

/// Run metadata written next to a results CSV.
pub fn metadata_json(config: &ExperimentConfig, kind: RunKind, records: &[TrialRecord]) -> Result<serde_json::Value> {
    let params = config.scenario_for(kind);
    let cfg = params.array_config()?;
    let (ma_lo, ma_hi) = ma_span(&cfg);
    let layouts: Vec<LayoutEntry> = records
        .iter()
        .filter_map(|r| {
            r.layout.as_ref().map(|l| LayoutEntry {
                seed: r.seed,
                y_over_d: r.y_over_d,
                elements: r.elements,
                layout: l,
                positions: l.positions(),
            })
        })
        .collect();
    Ok(serde_json::json!({
        "mode": kind,
        "master_seed": params.seed,
        "params_hash": params.params_hash(),
        "trials": config.trial_ids(),
        "seeding": "ChaCha20 keyed by master_seed; trial t reads stream t",
        "path_gain_model": "alpha = sqrt(beta_k / L_k) exp(j phi), beta_k = (lambda / (4 pi r_k))^2, phi ~ U[0, 2 pi)",
        "noise_power_dbm": params.noise_dbm(),
        "wavelength_m": cfg.lambda(),
        "aperture_m": cfg.aperture(),
        "fpa_position_m": cfg.fpa_position(),
        "ma_span_m": [ma_lo, ma_hi],
        "config": config,
        "ma_layouts": layouts,
    }))
}

/// Reads MA layouts back from [`metadata_json`] output into matching records.
pub fn attach_layouts(records: &mut [TrialRecord], metadata: &serde_json::Value) -> Result<()> {
    #[derive(Deserialize)]
    struct Entry {
        seed: u64,
        y_over_d: f64,
        elements: usize,
        layout: MaLayout,
    }
    let entries: Vec<Entry> = serde_json::from_value(metadata.get("ma_layouts").cloned().unwrap_or_default())?;
    for e in entries {
        if let Some(r) = records.iter_mut().find(|r| {
            r.scheme == Scheme::Ma && r.seed == e.seed && r.y_over_d == e.y_over_d && r.elements == e.elements
        }) {
            r.layout = Some(e.layout);
        }
    }
    Ok(())
}
