//! Moderate-size Monte Carlo checks of the estimators' statistical contracts.

mod common;

use num_complex::Complex64;
use wiener_tau::mc::area::levy_mc;
use wiener_tau::mc::closed_form::{det_formula_continued, det_formula_thm01, levy_unconditional};
use wiener_tau::mc::estimate::{z_between, z_score};
use wiener_tau::mc::paths::brownian_moments;
use wiener_tau::mc::planar::{splus_moments_2d, splus_moments_2n};
use wiener_tau::mc::{mc_char, prop4_check, realize_2d};
use wiener_tau::{AreaSpec, PathEnsembleConfig, StepBasis};

const Z: f64 = wiener_tau::tolerances::Z_MAX;

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

#[test]
fn brownian_endpoint_moments() {
    let m = brownian_moments(3, &PathEnsembleConfig::new(256, 20_000, 1)).unwrap();
    for c in 0..3 {
        assert!(z_score(m.mean[c].mean, 0.0, m.mean[c].stderr()).abs() <= Z);
        assert!(z_score(m.second[c].mean, 1.0, m.second[c].stderr()).abs() <= Z);
    }
}

#[test]
fn levy_area_characteristic_function() {
    let out = levy_mc(0.5, &PathEnsembleConfig::new(512, 20_000, 2)).unwrap();
    let (zr, zi) = out.estimate.z_scores(Complex64::new(levy_unconditional(0.5, 1.0), 0.0));
    assert!(zr.abs() <= Z && zi.abs() <= Z, "{zr} {zi}");
}

#[test]
fn diagonal_case_is_one_over_cosh() {
    let spec = AreaSpec::new(vec![0.3], vec![0.0]).unwrap();
    let target = Complex64::new(1.0 / 0.3f64.cosh(), 0.0);
    assert!((det_formula_thm01(&spec).unwrap() - target).norm() < 1e-15);
    let out = mc_char(&spec, i(), &PathEnsembleConfig::new(512, 20_000, 3)).unwrap();
    let (zr, zi) = out.estimate.z_scores(target);
    assert!(zr.abs() <= Z && zi.abs() <= Z, "{zr} {zi}");
}

#[test]
fn antithetic_pairs_keep_the_target() {
    let spec = common::area_spec(&mut common::rng(4), 2, 0.45, false);
    let target = det_formula_continued(&spec).unwrap();
    let cfg = PathEnsembleConfig::new(512, 20_000, 4).with_antithetic(true);
    let out = mc_char(&spec, i(), &cfg).unwrap();
    let (zr, zi) = out.estimate.z_scores(target);
    assert!(zr.abs() <= Z && zi.abs() <= Z, "{zr} {zi}");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = common::area_spec(&mut common::rng(5), 2, 0.45, false);
    let cfg = PathEnsembleConfig::new(256, 5_000, 5);
    let a = mc_char(&spec, i(), &cfg).unwrap();
    for w in [Some(1), Some(3)] {
        let b = mc_char(&spec, i(), &cfg.clone().with_workers(w)).unwrap();
        assert_eq!(a, b);
    }
    assert_ne!(a, mc_char(&spec, i(), &PathEnsembleConfig::new(256, 5_000, 6)).unwrap());
}

#[test]
fn doubling_steps_moves_the_estimate_less_than_noise() {
    let spec = common::area_spec(&mut common::rng(6), 1, 0.45, false);
    let a = mc_char(&spec, i(), &PathEnsembleConfig::new(512, 20_000, 7)).unwrap().estimate;
    let b = mc_char(&spec, i(), &PathEnsembleConfig::new(1024, 20_000, 8)).unwrap().estimate;
    let z = z_between(a.mean().re, a.stderr_re(), b.mean().re, b.stderr_re());
    assert!(z.abs() <= Z, "{z}");
}

#[test]
fn ou_reduction_without_coupling() {
    let spec = AreaSpec::new(vec![0.25], vec![0.0]).unwrap();
    let r = prop4_check(&spec, &PathEnsembleConfig::new(512, 20_000, 9)).unwrap();
    assert!(r.passes_printed(Z), "{r:?}");
    assert!((r.det_printed - r.det_continued).abs() < 1e-15);
}

#[test]
fn single_block_planar_realization() {
    let spec = AreaSpec::new(vec![0.3], vec![0.2]).unwrap();
    let out = realize_2d(&spec, &StepBasis::canonical(1), &PathEnsembleConfig::new(512, 20_000, 10)).unwrap();
    let (zr, zi) = out.estimate.z_scores(det_formula_continued(&spec).unwrap());
    assert!(zr.abs() <= Z && zi.abs() <= Z, "{zr} {zi}");
}

#[test]
fn planar_splus_has_the_moments_of_independent_motions() {
    let cfg = PathEnsembleConfig::new(512, 20_000, 11);
    for basis in [StepBasis::canonical(2), StepBasis::random(2, 12)] {
        let (m2, s2) = splus_moments_2d(&basis, &cfg).unwrap();
        let (mn, sn) = splus_moments_2n(2, &cfg.clone().with_workers(Some(1))).unwrap();
        for k in 0..m2.len() {
            assert!(z_between(m2[k].mean, m2[k].stderr(), mn[k].mean, mn[k].stderr()).abs() <= Z);
            assert!(z_between(s2[k].mean, s2[k].stderr(), sn[k].mean, sn[k].stderr()).abs() <= Z);
        }
    }
}

#[test]
fn planar_and_full_dimension_estimators_agree() {
    let mut r = common::rng(13);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let n = 1 + k % 2;
        let spec = common::area_spec(&mut r, n, 0.45, false);
        let cfg = PathEnsembleConfig::new(512, 5_000, 100 + k as u64);
        let a = realize_2d(&spec, &StepBasis::random(n, k as u64), &cfg).unwrap().estimate;
        let b = mc_char(&spec, i(), &cfg).unwrap().estimate;
        let z_re = z_between(a.mean().re, a.stderr_re(), b.mean().re, b.stderr_re());
        let z_im = z_between(a.mean().im, a.stderr_im(), b.mean().im, b.stderr_im());
        worst = worst.max(z_re.abs()).max(z_im.abs());
    }
    assert!(worst <= Z, "{worst}");
}
