mod common;

use common::*;
use gma_core::array::{ArrayConfig, PathSet, Spacing};
use gma_core::baselines::{exhaustive_oracle, fpa_metric, ma_optimize, ma_span, MaLayout};
use gma_core::combining::{objective, LinkPowers};
use gma_core::grid::{grid_points, GridSpec};
use gma_core::multiuser::optimize_multiuser;
use gma_core::sca::{optimize_single_user, OptimizerSettings};
use gma_core::scenario::trial_rng;
use num_complex::Complex64;
use rand::Rng;

fn check_layout(layout: &MaLayout, cfg: &ArrayConfig) {
    let pos = layout.positions();
    let (lo, hi) = ma_span(cfg);
    assert_eq!(pos.len(), cfg.n());
    for w in pos.windows(2) {
        assert!(w[1] - w[0] >= cfg.lambda() / 2.0 * (1.0 - 1e-9), "{pos:?}");
    }
    assert!(pos[0] >= lo - 1e-12 && *pos.last().unwrap() <= hi + 1e-12);
    layout.validate(cfg).unwrap();
}

#[test]
fn fpa_is_compact_array_at_reference() {
    let sc = default_scenario(3);
    let v = fpa_metric(&sc.users, &sc.powers, &sc.cfg).unwrap();
    assert_eq!(v, objective(sc.cfg.fpa_position(), 1, &sc.users, &sc.powers, &sc.cfg).unwrap());
    let cfg = unit_cfg(32, 4, 5.0);
    let users = vec![PathSet::from_pairs(&[(Complex64::from_polar(1.0, 0.3), 0.2)]).unwrap()];
    let p = LinkPowers::uniform(1, 7.0).unwrap();
    assert!(rel(fpa_metric(&users, &p, &cfg).unwrap(), 28.0) < 1e-12);
}

#[test]
fn ma_from_gma_start_never_loses() {
    let grid = GridSpec::default();
    let settings = OptimizerSettings::default();
    for trial in 0..4 {
        let sc = default_scenario(trial);
        let cfg = &sc.cfg;
        let gma = optimize_multiuser(&sc.users, &sc.powers, cfg, &grid, &settings).unwrap();
        let init = MaLayout::from_gma(gma.y_star, gma.eta_star, cfg).unwrap();
        check_layout(&init, cfg);
        assert_eq!(init.metric(&sc.users, &sc.powers).unwrap(), gma.objective);
        let ma = ma_optimize(&sc.users, &sc.powers, cfg, &grid, &init, &settings).unwrap();
        check_layout(&ma.layout, cfg);
        assert!(ma.metric >= gma.objective);
        assert!(ma.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(ma.metric, ma.layout.metric(&sc.users, &sc.powers).unwrap());
    }
}

#[test]
fn ma_single_path_is_layout_independent() {
    let cfg = unit_cfg(32, 4, 6.0);
    let alpha = Complex64::from_polar(0.6, 2.0);
    let users = vec![PathSet::from_pairs(&[(alpha, -0.7)]).unwrap()];
    let p = LinkPowers::uniform(1, 2.0).unwrap();
    let init = MaLayout::from_positions(&[0.0, 3.0, 9.0, 20.0], &cfg).unwrap();
    let out = ma_optimize(&users, &p, &cfg, &GridSpec::default(), &init, &OptimizerSettings::default()).unwrap();
    assert!(rel(out.metric, 2.0 * alpha.norm_sqr() * 4.0) < 1e-12);
}

/// Sorted positions with `lambda/2` gaps, uniformly spread over the span.
fn random_layout(rng: &mut impl Rng, cfg: &ArrayConfig) -> MaLayout {
    let (lo, hi) = ma_span(cfg);
    let gap = cfg.lambda() / 2.0;
    let slack = hi - lo - (cfg.n() - 1) as f64 * gap;
    let mut u: Vec<f64> = (0..cfg.n()).map(|_| rng.random_range(0.0..slack)).collect();
    u.sort_by(f64::total_cmp);
    let pos: Vec<f64> = u.iter().enumerate().map(|(i, x)| lo + x + i as f64 * gap).collect();
    MaLayout::from_positions(&pos, cfg).unwrap()
}

#[test]
fn ma_competes_with_random_restarts() {
    let grid = GridSpec::default();
    let settings = OptimizerSettings::default();
    for trial in 0..3 {
        let sc = two_path(trial);
        let cfg = &sc.cfg;
        let gma = optimize_single_user(&sc.users[0], sc.powers.p_bar()[0], &settings, cfg).unwrap();
        let init = MaLayout::from_gma(gma.y_star, gma.eta_star, cfg).unwrap();
        let ma = ma_optimize(&sc.users, &sc.powers, cfg, &grid, &init, &settings).unwrap();
        let mut rng = trial_rng(99, trial);
        let best_restart = (0..20)
            .map(|_| {
                let start = random_layout(&mut rng, cfg);
                ma_optimize(&sc.users, &sc.powers, cfg, &grid, &start, &settings).unwrap().metric
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(ma.metric >= 0.99 * best_restart, "trial {trial}: {} vs {best_restart}", ma.metric);
    }
}

#[test]
fn oracle_dominates_sampled_grid_points() {
    for trial in 0..3 {
        let sc = default_scenario(trial);
        let cfg = &sc.cfg;
        let step = Spacing::Wavelengths(0.25);
        let o = exhaustive_oracle(&sc.users, &sc.powers, cfg, step).unwrap();
        assert_eq!(o.metric, objective(o.y, o.eta, &sc.users, &sc.powers, cfg).unwrap());
        let ys = grid_points(cfg.y_min(), cfg.y_max(), step.resolve(cfg.lambda()));
        let mut rng = trial_rng(5, trial);
        for _ in 0..1000 {
            let y = ys[rng.random_range(0..ys.len())];
            let eta = rng.random_range(1..=cfg.eta_max());
            assert!(objective(y, eta, &sc.users, &sc.powers, cfg).unwrap() <= o.metric);
        }
    }
}

#[test]
fn single_user_oracle_spot_check() {
    for trial in 0..5 {
        let sc = two_path(trial);
        let o = exhaustive_oracle(&sc.users, &sc.powers, &sc.cfg, Spacing::Wavelengths(1e-3)).unwrap();
        let direct = sc.powers.p_bar()[0] * norm_sqr(&reference_channel(o.y, o.eta, &sc.users[0], &sc.cfg));
        assert!(rel(o.metric, direct) < 1e-12);
    }
}

#[test]
fn optimizers_do_not_exceed_oracle() {
    let settings = OptimizerSettings::default();
    for trial in 0..3 {
        // Multi-user, same unrefined grid: a subset of the oracle's domain.
        let sc = default_scenario(trial);
        let step = Spacing::Wavelengths(0.25);
        let o = exhaustive_oracle(&sc.users, &sc.powers, &sc.cfg, step).unwrap();
        let sol = optimize_multiuser(&sc.users, &sc.powers, &sc.cfg, &GridSpec::flat(step), &settings).unwrap();
        assert!(sol.objective <= o.metric + 1e-9);

        // Single user: SCA is continuous, so allow the largest gain a point
        // can have over its nearest grid point, k^2 N (sum |alpha|)^2 P step^2 / 4.
        let sc = two_path(trial);
        let cfg = &sc.cfg;
        let h = 1e-3 * cfg.lambda();
        let o = exhaustive_oracle(&sc.users, &sc.powers, cfg, Spacing::Meters(h)).unwrap();
        let a = optimize_single_user(&sc.users[0], sc.powers.p_bar()[0], &settings, cfg).unwrap();
        let k = std::f64::consts::TAU / cfg.lambda();
        let slack = k * k * 4.0 * sc.users[0].total_amplitude().powi(2) * sc.powers.p_bar()[0] * h * h / 4.0;
        assert!(a.objective <= o.metric + slack + 1e-9, "trial {trial}");
    }
}

#[test]
fn oracle_singleton_domain() {
    let cfg = ArrayConfig::new(4, 4, 1.0, 0.3, 0.3).unwrap();
    let users = vec![PathSet::from_pairs(&[(Complex64::new(1.0, 0.0), 0.2), (Complex64::new(0.0, 1.0), -0.9)]).unwrap()];
    let p = LinkPowers::uniform(1, 1.0).unwrap();
    let o = exhaustive_oracle(&users, &p, &cfg, Spacing::Meters(0.1)).unwrap();
    assert_eq!((o.y, o.eta), (0.3, 1));
    assert_eq!(o.metric, objective(0.3, 1, &users, &p, &cfg).unwrap());
}
