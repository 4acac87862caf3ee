mod common;

use common::*;
use gma_core::array::{channels_at, ChannelVector};
use gma_core::combining::{
    combiner_sinr, interference_covariance, mmse_combiner, mrc_snr, objective, sinr, sinr_of, sum_rate, sum_rate_of,
    Combiner, LinkPowers,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cvec() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)), 4)
}

fn channels(raw: &[Vec<Complex64>]) -> Vec<ChannelVector> {
    raw.iter().map(|e| ChannelVector { entries: e.clone(), y: 0.0, eta: 1 }).collect()
}

fn powers_strategy(k: usize) -> impl Strategy<Value = LinkPowers> {
    prop::collection::vec(0.01f64..100.0, k).prop_map(|p| LinkPowers::new(p).unwrap())
}

/// `P_k |v^H h_k|^2 / (sum_{i != k} P_i |v^H h_i|^2 + ||v||^2)`.
fn quotient(k: usize, v: &[Complex64], hs: &[ChannelVector], p: &[f64]) -> f64 {
    let gain = |h: &ChannelVector| v.iter().zip(&h.entries).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
    let interf: f64 = (0..hs.len()).filter(|&i| i != k).map(|i| p[i] * gain(&hs[i])).sum();
    p[k] * gain(&hs[k]) / (interf + norm_sqr(v))
}

fn random_unit(rng: &mut impl Rng, n: usize) -> Combiner {
    Combiner::new((0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .unwrap()
}

#[test]
fn mrc_examples() {
    let ones = ChannelVector { entries: vec![Complex64::new(1.0, 0.0); 4], y: 0.0, eta: 1 };
    assert_eq!(mrc_snr(&ones, 1.0), 4.0);
    let zero = ChannelVector { entries: vec![Complex64::new(0.0, 0.0); 4], y: 0.0, eta: 1 };
    assert_eq!(mrc_snr(&zero, 3.0), 0.0);
}

#[test]
fn default_scenario_sum_rate_is_sum_of_user_rates() {
    let sc = default_scenario(3);
    let cfg = &sc.cfg;
    let (y, eta) = (0.4 * cfg.y_max(), 17);
    let direct: f64 = (0..sc.users.len())
        .map(|k| (1.0 + sinr(k, y, eta, &sc.users, &sc.powers, cfg).unwrap()).log2())
        .sum();
    let r = sum_rate(y, eta, &sc.users, &sc.powers, cfg).unwrap();
    assert!(rel(r, direct) < 1e-12);
    assert_eq!(objective(y, eta, &sc.users, &sc.powers, cfg).unwrap(), r);
}

#[test]
fn all_zero_channels_give_zero_rate() {
    let hs = channels(&vec![vec![Complex64::new(0.0, 0.0); 4]; 3]);
    let p = LinkPowers::uniform(3, 5.0).unwrap();
    assert_eq!(sum_rate_of(&hs, &p).unwrap(), 0.0);
}

#[test]
fn unit_sinr_is_one_bit() {
    let h = channels(&[vec![Complex64::new(0.5, 0.0); 4]]);
    let p = LinkPowers::new(vec![1.0]).unwrap();
    assert!((sum_rate_of(&h, &p).unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn covariance_matches_triple_loop(raw in prop::collection::vec(cvec(), 3), p in powers_strategy(3), k in 0usize..3) {
        let hs = channels(&raw);
        let c = interference_covariance(k, &hs, &p).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                let mut x = if r == s { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                for i in (0..3).filter(|&i| i != k) {
                    x += p.p_bar()[i] * raw[i][r] * raw[i][s].conj();
                }
                prop_assert!((c[(r, s)] - x).norm() < 1e-12 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn covariance_hermitian_and_at_least_identity(raw in prop::collection::vec(cvec(), 3), p in powers_strategy(3), k in 0usize..3) {
        let c = interference_covariance(k, &channels(&raw), &p).unwrap();
        let asym = (&c - c.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(asym < 1e-12);
        let eig = DMatrix::from_fn(4, 4, |r, s| c[(r, s)]).symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l >= 1.0 - 1e-9), "{eig:?}");
    }

    #[test]
    fn quotient_at_mmse_equals_closed_form(raw in prop::collection::vec(cvec(), 3), p in powers_strategy(3), k in 0usize..3) {
        let hs = channels(&raw);
        prop_assume!(hs[k].norm_sqr() > 1e-6);
        let c = interference_covariance(k, &hs, &p).unwrap();
        let v = mmse_combiner(&hs[k], &c).unwrap();
        prop_assert!((norm_sqr(v.weights()) - 1.0).abs() < 1e-12);
        let closed = sinr_of(k, &hs, &p).unwrap();
        prop_assert!(rel(quotient(k, v.weights(), &hs, p.p_bar()), closed) < 1e-9);
        prop_assert!(rel(combiner_sinr(k, &v, &hs, &p).unwrap(), closed) < 1e-9);
    }

    #[test]
    fn mmse_beats_random_combiners(raw in prop::collection::vec(cvec(), 3), p in powers_strategy(3), seed in any::<u64>()) {
        let hs = channels(&raw);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..3 {
            prop_assume!(hs[k].norm_sqr() > 1e-6);
            let best = sinr_of(k, &hs, &p).unwrap();
            for _ in 0..1000 {
                let v = random_unit(&mut rng, 4);
                prop_assert!(quotient(k, v.weights(), &hs, p.p_bar()) <= best * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sum_rate_ignores_user_order(raw in prop::collection::vec(cvec(), 4), p in prop::collection::vec(0.01f64..100.0, 4), rot in 1usize..4) {
        let hs = channels(&raw);
        let r = sum_rate_of(&hs, &LinkPowers::new(p.clone()).unwrap()).unwrap();
        let mut hs2 = hs.clone();
        let mut p2 = p.clone();
        hs2.rotate_left(rot);
        p2.rotate_left(rot);
        hs2.swap(0, 3);
        p2.swap(0, 3);
        let r2 = sum_rate_of(&hs2, &LinkPowers::new(p2).unwrap()).unwrap();
        prop_assert!((r - r2).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn single_user_snr_scales_exactly(raw in cvec(), p in 0.01f64..100.0, e in 0i32..6) {
        let hs = channels(&[raw]);
        let c = 2f64.powi(e);
        let base = sinr_of(0, &hs, &LinkPowers::new(vec![p]).unwrap()).unwrap();
        let scaled = sinr_of(0, &hs, &LinkPowers::new(vec![p]).unwrap().scaled(c).unwrap()).unwrap();
        prop_assert_eq!(scaled, c * base);
        prop_assert_eq!(base, mrc_snr(&hs[0], p));
    }

    #[test]
    fn geometric_channels_are_consistent(trial in 0u64..50, frac in 0.0f64..1.0, eta in 1usize..=42) {
        let sc = default_scenario(trial);
        let y = frac * sc.cfg.y_max();
        let hs = channels_at(y, eta, &sc.users, &sc.cfg).unwrap();
        for k in 0..hs.len() {
            let c = interference_covariance(k, &hs, &sc.powers).unwrap();
            let v = mmse_combiner(&hs[k], &c).unwrap();
            let closed = sinr_of(k, &hs, &sc.powers).unwrap();
            prop_assert!(rel(quotient(k, v.weights(), &hs, sc.powers.p_bar()), closed) < 1e-9);
        }
    }
}
