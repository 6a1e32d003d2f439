//! Invariants of the deterministic evaluators.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use wiener_tau::fields::{kdv_residual, kp_residual, kp_residual_of, u1, u1_of};
use wiener_tau::kps::run_kps_check;
use wiener_tau::matcore::{cayley, cayley_inverse};
use wiener_tau::mc::closed_form::{det_formula_area03, det_formula_area04, det_formula_continued, det_formula_thm01};
use wiener_tau::mc::ComplexEstimate;
use wiener_tau::tau::{apply_trivial_factor, tau_derivative, tau_det, tau_subset_sum};
use wiener_tau::tolerances::*;
use wiener_tau::{AreaSpec, PhasePoint, SolitonParams, SubsetExpansion, TauFunction, TrivialFactor};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn point() -> impl Strategy<Value = PhasePoint> {
    prop::collection::vec(-2.5f64..2.5, 3).prop_map(|x| PhasePoint::new(x).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn determinant_equals_subset_sum(seed in any::<u64>(), n in 1usize..=6, x in point()) {
        let s = common::params(&mut common::rng(seed), n);
        let (a, b) = (tau_det(&s, &x).unwrap(), tau_subset_sum(&s, &x).unwrap());
        prop_assert!(rel(a, b) <= TAU_ORACLE_RTOL, "{a} vs {b}");
    }

    #[test]
    fn ordered_params_give_positive_tau(seed in any::<u64>(), n in 1usize..=6, x in point()) {
        let s = common::params(&mut common::rng(seed), n);
        prop_assert!(tau_det(&s, &x).unwrap() > 0.0);
        prop_assert!(tau_subset_sum(&s, &x).unwrap() >= 1.0);
    }

    #[test]
    fn x1_shift_is_a_weight_rescaling(seed in any::<u64>(), n in 1usize..=4, x in point(), d in -1.0f64..1.0) {
        let s = common::params(&mut common::rng(seed), n);
        let m: Vec<f64> = (0..n).map(|i| s.m()[i] * (s.rate(i, 1) * d).exp()).collect();
        let t = s.with_weights(m).unwrap();
        let (a, b) = (tau_det(&s, &x.shifted(1, d)).unwrap(), tau_det(&t, &x).unwrap());
        prop_assert!(rel(a, b) <= TAU_ORACLE_RTOL);
    }

    #[test]
    fn first_derivatives_match_central_differences(seed in any::<u64>(), n in 1usize..=4, x in point(), l in 1usize..=3) {
        let s = common::params(&mut common::rng(seed), n);
        let mut alpha = [0u32; 3];
        alpha[l - 1] = 1;
        let exact = tau_derivative(&s, &x, &alpha).unwrap();
        let h = 1e-4;
        let fd = (tau_det(&s, &x.shifted(l, h)).unwrap() - tau_det(&s, &x.shifted(l, -h)).unwrap()) / (2.0 * h);
        prop_assert!((exact - fd).abs() <= FINITE_DIFFERENCE_RTOL * exact.abs().max(1.0), "{exact} vs {fd}");
    }

    #[test]
    fn kp_residual_vanishes(seed in any::<u64>(), n in 1usize..=4, x in point()) {
        let s = common::params(&mut common::rng(seed), n);
        prop_assert!(kp_residual(&s, &x).unwrap().relative() <= PDE_RESIDUAL_RTOL);
    }

    #[test]
    fn kdv_residual_vanishes(seed in any::<u64>(), n in 1usize..=3, x in -8.0f64..8.0, t in -2.0f64..2.0) {
        let sd = common::scattering(&mut common::rng(seed), n);
        prop_assert!(kdv_residual(&sd, x, t).unwrap().relative() <= PDE_RESIDUAL_RTOL);
    }

    #[test]
    fn trivial_factor_leaves_u_and_kp_unchanged(
        seed in any::<u64>(),
        c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        rates in prop::collection::vec(-2.0f64..2.0, 3),
        x in point(),
    ) {
        let s = common::params(&mut common::rng(seed), 3);
        let tau = apply_trivial_factor(SubsetExpansion::new(&s).unwrap(), TrivialFactor::new(c, rates).unwrap());
        prop_assert!((u1_of(&tau, &x).unwrap() - u1(&s, &x).unwrap()).abs() <= TRIVIAL_FACTOR_ATOL);
        prop_assert!(kp_residual_of(&tau, &x).unwrap().relative() <= PDE_RESIDUAL_RTOL);
        let inner = SubsetExpansion::new(&s).unwrap().value(&x).unwrap();
        prop_assert!(rel(tau.value(&x).unwrap() / inner, c * tau.factor().rates.iter().enumerate().map(|(l, r)| r * x.get(l + 1)).sum::<f64>().exp()) < 1e-12);
    }

    #[test]
    fn kps_chain_holds(seed in any::<u64>(), n in 1usize..=3, x in point()) {
        let s = common::params_in(&mut common::rng(seed), n, (1.0, 3.0), (-3.0, -1.0));
        prop_assert!(run_kps_check(&s, &x, None).unwrap().passed);
    }

    #[test]
    fn cayley_round_trip(seed in any::<u64>(), n in 1usize..=4) {
        let s = common::params_in(&mut common::rng(seed), n, (1.0, 3.0), (-3.0, -1.0));
        let p = s.cauchy_matrix();
        let back = cayley_inverse(&cayley(&p).unwrap()).unwrap();
        prop_assert!(back.distance(&p) < 1e-12);
    }

    #[test]
    fn continued_formula_flips_a(seed in any::<u64>(), n in 1usize..=4) {
        let spec = common::area_spec(&mut common::rng(seed), n, 0.45, false);
        let neg = AreaSpec::new(
            spec.lambda().to_vec(),
            (0..n * n).map(|k| -spec.a_entry(k / n, k % n)).collect(),
        ).unwrap();
        let (a, b) = (det_formula_continued(&spec).unwrap(), det_formula_thm01(&neg).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn block_formula_matches_factored_formula(seed in any::<u64>(), n in 1usize..=3, sigma in 0.05f64..1.0) {
        let spec = common::area_spec(&mut common::rng(seed), n, 0.45, true);
        let a = det_formula_area03(&spec, sigma).unwrap();
        let b = det_formula_area04(&spec, sigma).unwrap();
        prop_assert!((Complex64::new(a, 0.0) - b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn estimate_merge_is_order_free(xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..60), cut in 0usize..60) {
        let cut = cut.min(xs.len());
        let mut whole = ComplexEstimate::default();
        let (mut left, mut right) = (ComplexEstimate::default(), ComplexEstimate::default());
        for (k, &(re, im)) in xs.iter().enumerate() {
            whole.push(Complex64::new(re, im));
            if k < cut { left.push(Complex64::new(re, im)) } else { right.push(Complex64::new(re, im)) }
        }
        left.merge(&right);
        prop_assert_eq!(left.count(), whole.count());
        prop_assert!((left.mean() - whole.mean()).norm() < 1e-12);
        prop_assert!((left.stderr_re() - whole.stderr_re()).abs() < 1e-12);
    }
}

#[test]
fn invalid_params_are_rejected() {
    assert!(SolitonParams::new(vec![1.0], vec![0.5], vec![0.5]).is_err());
    assert!(SolitonParams::new(vec![-1.0], vec![1.0], vec![0.5]).is_err());
    assert!(SolitonParams::new(vec![1.0, 1.0], vec![1.0], vec![0.5]).is_err());
}
