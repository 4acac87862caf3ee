use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gma_core::array::Spacing;
use gma_core::experiment::{
    cell_means, metadata_json, parse_scheme_list, run_experiment, run_landscape, write_trial_csv, ExperimentConfig,
    RunKind, Scheme, TrialRecord,
};
use gma_core::landscape::GapUnit;

#[derive(Parser)]
#[command(name = "gma", version, about = "Group movable antenna position/sparsity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Objective over the (y, eta) grid for each trial.
    Landscape(Common),
    /// One user, SCA-based alternating optimization.
    SingleUser(Common),
    /// K users with MMSE combining, grid-based alternating optimization.
    MultiUser(Common),
    /// Mean sum rate over region size and array size.
    Sweep(Common),
    /// All schemes (GMA, FPA, MA, oracle) side by side.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials (trial indices 0..n).
    #[arg(long)]
    seeds: Option<u64>,
    /// Output CSV; metadata goes next to it as <name>.meta.json. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated schemes: gma, fpa, ma, oracle.
    #[arg(long)]
    scheme: Option<String>,
    /// Position grid step in meters.
    #[arg(long)]
    grid_step: Option<f64>,
}

impl Common {
    fn load(&self, landscape: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_json_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.scenario.seed = s;
        }
        if let Some(n) = self.seeds {
            cfg.trials = n;
            cfg.seeds = None;
        }
        if let Some(list) = &self.scheme {
            cfg.schemes = Some(parse_scheme_list(list)?);
        }
        if let Some(step) = self.grid_step {
            if !(step.is_finite() && step > 0.0) {
                bail!("--grid-step must be a positive length in meters");
            }
            if landscape {
                cfg.landscape.y_step = Spacing::Meters(step);
            } else {
                cfg.grid.step = Spacing::Meters(step);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn metadata_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn emit(out: Option<&Path>, body: &[u8], meta: &serde_json::Value) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, body).with_context(|| format!("writing {}", p.display()))?;
            let m = metadata_path(p);
            fs::write(&m, serde_json::to_string_pretty(meta)? + "\n")
                .with_context(|| format!("writing {}", m.display()))?;
        }
        None => io::stdout().write_all(body)?,
    }
    Ok(())
}

fn with_timestamp(mut meta: serde_json::Value) -> serde_json::Value {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    meta["generated_unix_s"] = secs.into();
    meta
}

fn summarize(records: &[TrialRecord]) {
    for c in cell_means(records) {
        let unit = if records.first().is_some_and(|r| r.users == 1) { "SNR (dB)" } else { "rate (bit/s/Hz)" };
        let shown = if unit == "SNR (dB)" { 10.0 * c.mean.log10() } else { c.mean };
        eprintln!(
            "{:>6}  M={:<4} Y/D={:<5} mean {unit} {shown:.3}  ({} trials)",
            c.scheme, c.elements, c.y_over_d, c.count
        );
    }
}

fn run_trials(common: &Common, kind: RunKind, all_schemes: bool) -> Result<()> {
    let mut cfg = common.load(false)?;
    let kind = if kind == RunKind::MultiUser && all_schemes && cfg.scenario.users == 1 {
        RunKind::SingleUser
    } else {
        kind
    };
    if all_schemes && cfg.schemes.is_none() {
        cfg.schemes = Some(Scheme::ALL.to_vec());
    }
    let records = run_experiment(&cfg, kind, &cfg.schemes())?;
    let mut body = Vec::new();
    write_trial_csv(&records, &mut body)?;
    emit(common.out.as_deref(), &body, &with_timestamp(metadata_json(&cfg, kind, &records)?))?;
    summarize(&records);
    Ok(())
}

fn run_landscape_cmd(common: &Common) -> Result<()> {
    let cfg = common.load(true)?;
    let kind = if cfg.scenario.users == 1 { RunKind::SingleUser } else { RunKind::MultiUser };
    let scapes = run_landscape(&cfg, kind)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "y", "eta", "metric"])?;
    for (seed, l) in &scapes {
        for p in &l.points {
            w.write_record([seed.to_string(), p.y.to_string(), p.eta.to_string(), p.metric.to_string()])?;
        }
        let unit = match l.unit {
            GapUnit::Decibel => "dB",
            GapUnit::BitsPerHz => "bit/s/Hz",
        };
        eprintln!(
            "seed {seed}: gap {:.3} {unit}; max at y={:.6} m eta={}, min at y={:.6} m eta={}",
            l.gap, l.max.y, l.max.eta, l.min.y, l.min.eta
        );
    }
    let body = w.into_inner().context("flushing landscape csv")?;
    let mut meta = metadata_json(&cfg, kind, &[])?;
    meta["gaps"] = scapes.iter().map(|(s, l)| serde_json::json!({"seed": s, "gap": l.gap, "unit": l.unit})).collect();
    emit(common.out.as_deref(), &body, &with_timestamp(meta))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Landscape(c) => run_landscape_cmd(&c),
        Command::SingleUser(c) => run_trials(&c, RunKind::SingleUser, false),
        Command::MultiUser(c) => run_trials(&c, RunKind::MultiUser, false),
        Command::Sweep(c) => run_trials(&c, RunKind::Sweep, false),
        Command::Compare(c) => run_trials(&c, RunKind::MultiUser, true),
    }
}
