//! Command runners. Each check writes one JSON report into the output directory.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wiener_tau::fields::{field_grid, kdv_residual, kp_residual};
use wiener_tau::kps::{run_kps_check, KpsReport};
use wiener_tau::mc::quadrature::gaussian_expectation_2d;
use wiener_tau::mc::{
    det_formula_area04, det_formula_continued, det_formula_thm01, levy_conditional, levy_mc, levy_unconditional,
    mc_char, prop4_check, realize_2d, McOutcome,
};
use wiener_tau::tau::{apply_trivial_factor, phase, tau_det};
use wiener_tau::tolerances::QUADRATURE_ORDER;
use wiener_tau::{
    AreaSpec, PathEnsembleConfig, PhasePoint, StepBasis, SubsetExpansion, TauFunction, VerificationReport,
};

use crate::config::{Command, Equation, RunConfig, Suite};

/// Name and verdict of one written report.
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub summary: String,
}

pub fn run(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let text = serde_json::to_string_pretty(cfg)?;
    std::fs::write(cfg.out.join("effective_config.json"), text)?;
    match cfg.command {
        Command::TauEval => tau_eval(cfg),
        Command::Field => field(cfg),
        Command::Residual => residual(cfg),
        Command::McVerify => mc_verify(cfg),
        Command::KpsCheck => kps_check(cfg),
    }
}

fn write<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let path = out.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(value)?).with_context(|| format!("cannot write {}", path.display()))
}

fn report(out: &Path, r: &VerificationReport, file: &str) -> Result<Outcome> {
    write(out, file, r)?;
    Ok(Outcome {
        name: file.into(),
        passed: r.passed,
        summary: format!(
            "estimate {:.6}{:+.6}i, target {:.6}{:+.6}i, z/rel ({:+.3}, {:+.3})",
            r.estimate_re, r.estimate_im, r.target_re, r.target_im, r.z_re, r.z_im
        ),
    })
}

#[derive(Serialize)]
struct Derivative {
    alpha: Vec<u32>,
    value: f64,
}

#[derive(Serialize)]
struct TauEvalOutput {
    tau_det: f64,
    tau_subset_sum: f64,
    /// `C e^{<c,x>} τ` when a trivial factor is configured.
    with_factor: Option<f64>,
    derivatives: Vec<Derivative>,
    report: VerificationReport,
}

fn tau_eval(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let b = cfg.tau_eval.as_ref().expect("resolved");
    let det = tau_det(&b.params, &b.point)?;
    let sub = SubsetExpansion::new(&b.params)?;
    let sum = sub.value(&b.point)?;
    let (with_factor, derivatives) = match &b.trivial_factor {
        Some(f) => {
            let t = apply_trivial_factor(sub, f.clone());
            (Some(t.value(&b.point)?), derivatives(&t, &b.point, &b.derivatives)?)
        }
        None => (None, derivatives(&sub, &b.point, &b.derivatives)?),
    };
    let r = VerificationReport::deterministic(
        "tau_eval",
        b.params.n(),
        b,
        Complex64::new(det, 0.0),
        Complex64::new(sum, 0.0),
        cfg.tolerances.tau_oracle_rtol,
    );
    let out = TauEvalOutput {
        tau_det: det,
        tau_subset_sum: sum,
        with_factor,
        derivatives,
        report: r.clone(),
    };
    write(&cfg.out, "tau_eval", &out)?;
    Ok(vec![Outcome {
        name: "tau_eval".into(),
        passed: r.passed,
        summary: format!("tau {det:.15e} (subset sum {sum:.15e}, rel {:.2e})", r.z_re),
    }])
}

fn derivatives<T: TauFunction>(tau: &T, x: &PhasePoint, alphas: &[Vec<u32>]) -> Result<Vec<Derivative>> {
    alphas
        .iter()
        .map(|a| {
            Ok(Derivative {
                alpha: a.clone(),
                value: tau.derivative(x, a)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct FieldOutput {
    csv: String,
    points: usize,
    max: f64,
    argmax: usize,
    min: f64,
    finite: bool,
}

fn field(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let b = cfg.field.as_ref().expect("resolved");
    let grid = field_grid(&b.source, &b.grid)?;
    let path = cfg.out.join(&b.output);
    grid.write_csv(&path).with_context(|| format!("cannot write {}", path.display()))?;
    let (argmax, max) = grid
        .values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let min = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let finite = grid.values.iter().all(|v| v.is_finite());
    let out = FieldOutput {
        csv: b.output.clone(),
        points: grid.values.len(),
        max,
        argmax,
        min,
        finite,
    };
    write(&cfg.out, "field", &out)?;
    Ok(vec![Outcome {
        name: "field".into(),
        passed: finite,
        summary: format!("{} points, max {max:.12} at index {argmax}, min {min:.3e}", out.points),
    }])
}

#[derive(Serialize)]
struct ResidualOutput {
    equation: &'static str,
    points: usize,
    max_relative: f64,
    mean_relative: f64,
    tolerance: f64,
    passed: bool,
}

fn residual(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let b = cfg.residual.as_ref().expect("resolved");
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let h = b.half_width;
    let mut rel = Vec::with_capacity(b.points);
    let name = match &b.equation {
        Equation::Kp { params } => {
            let mut tries = 0usize;
            while rel.len() < b.points {
                tries += 1;
                anyhow::ensure!(
                    tries <= 1000 * b.points.max(1),
                    "no points with |ξ| ≤ {} found in [-{h}, {h}]^3",
                    b.max_phase
                );
                let x = PhasePoint::new((0..3).map(|_| rng.random_range(-h..=h)).collect())?;
                let ok = (0..params.n()).all(|i| phase(params, &x, i).is_ok_and(|p| p.abs() <= b.max_phase));
                if ok {
                    rel.push(kp_residual(params, &x)?.relative());
                }
            }
            "kp"
        }
        Equation::Kdv { scattering } => {
            for _ in 0..b.points {
                let x = rng.random_range(-h..=h);
                let t = rng.random_range(-h / 4.0..=h / 4.0);
                rel.push(kdv_residual(scattering, x, t)?.relative());
            }
            "kdv"
        }
    };
    let max = rel.iter().copied().fold(0.0, f64::max);
    let mean = rel.iter().sum::<f64>() / rel.len().max(1) as f64;
    let tol = cfg.tolerances.pde_residual_rtol;
    let out = ResidualOutput {
        equation: name,
        points: rel.len(),
        max_relative: max,
        mean_relative: mean,
        tolerance: tol,
        passed: max <= tol,
    };
    write(&cfg.out, "residual", &out)?;
    Ok(vec![Outcome {
        name: "residual".into(),
        passed: out.passed,
        summary: format!("{name}: {} points, max rel {max:.3e}, mean rel {mean:.3e} (tol {tol:.0e})", rel.len()),
    }])
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn timed<T>(f: impl FnOnce() -> wiener_tau::Result<T>) -> Result<(T, u64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_millis() as u64))
}

fn mc_report(name: &str, spec: &AreaSpec, o: &McOutcome, target: Complex64, cfg: &RunConfig, ms: u64) -> VerificationReport {
    VerificationReport::monte_carlo(
        name,
        spec.n(),
        spec,
        &o.estimate,
        target,
        &cfg.ensemble,
        cfg.tolerances.z_max,
        o.warnings.clone(),
    )
    .with_wall_ms(ms)
}

fn mc_verify(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let b = cfg.mc_verify.as_ref().expect("resolved");
    let all = b.suite == Suite::All;
    let ens: &PathEnsembleConfig = &cfg.ensemble;
    let z_max = cfg.tolerances.z_max;
    let mut reports: Vec<(String, VerificationReport)> = vec![];

    if all || b.suite == Suite::Levy {
        let xi = b.levy_xi;
        let (o, ms) = timed(|| levy_mc(xi, ens))?;
        let target = Complex64::new(levy_unconditional(xi, 1.0), 0.0);
        let r = VerificationReport::monte_carlo("levy_mc", 1, &xi, &o.estimate, target, ens, z_max, o.warnings.clone());
        reports.push(("levy_mc".into(), r.with_wall_ms(ms)));
        let failure = std::cell::RefCell::new(None);
        let q = gaussian_expectation_2d(QUADRATURE_ORDER, |x, y| {
            levy_conditional(xi, 1.0, x, y).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            })
        });
        if let Some(e) = failure.into_inner() {
            return Err(e.into());
        }
        let mut r = VerificationReport::deterministic(
            "levy_conditional_quadrature",
            1,
            &xi,
            Complex64::new(q, 0.0),
            target,
            cfg.tolerances.quadrature_atol,
        );
        // absolute error, not relative
        r.z_re = (q - target.re).abs();
        r.passed = r.z_re <= cfg.tolerances.quadrature_atol;
        reports.push(("levy_conditional_quadrature".into(), r));
    }

    if all || b.suite == Suite::Thm01 {
        let (o, ms) = timed(|| mc_char(&b.spec, i(), ens))?;
        let printed = det_formula_thm01(&b.spec)?;
        let continued = det_formula_continued(&b.spec)?;
        reports.push(("thm01_printed".into(), mc_report("thm01_printed", &b.spec, &o, printed, cfg, ms)));
        reports.push(("thm01_continued".into(), mc_report("thm01_continued", &b.spec, &o, continued, cfg, ms)));
    }

    if all || b.suite == Suite::Area04 {
        let (o, ms) = timed(|| mc_char(&b.area04_spec, Complex64::new(b.sigma, 0.0), ens))?;
        let target = det_formula_area04(&b.area04_spec, b.sigma)?;
        reports.push(("area04".into(), mc_report("area04", &b.area04_spec, &o, target, cfg, ms)));
    }

    if all || b.suite == Suite::Prop4 {
        let spec = &b.prop4_spec;
        let (rep, ms) = timed(|| prop4_check(spec, ens))?;
        let area = (rep.area.estimate.mean().re, rep.area.estimate.stderr_re());
        let ou = (rep.ou_value, rep.ou_stderr);
        let w = rep.warnings();
        let n = spec.n();
        let cmp = |name: &str, a, b| VerificationReport::comparison(name, n, spec, a, b, ens, z_max, w.clone()).with_wall_ms(ms);
        let mut area_im = mc_report("prop4_area_im", spec, &rep.area, Complex64::new(area.0, 0.0), cfg, ms);
        area_im.passed = rep.z_area_im.abs() <= z_max;
        reports.push(("prop4_area_vs_ou".into(), cmp("prop4_area_vs_ou", area, ou)));
        reports.push(("prop4_area_printed".into(), cmp("prop4_area_printed", area, (rep.det_printed, 0.0))));
        reports.push(("prop4_ou_printed".into(), cmp("prop4_ou_printed", ou, (rep.det_printed, 0.0))));
        reports.push(("prop4_area_continued".into(), cmp("prop4_area_continued", area, (rep.det_continued, 0.0))));
        reports.push(("prop4_ou_continued".into(), cmp("prop4_ou_continued", ou, (rep.det_continued, 0.0))));
        reports.push(("prop4_area_im".into(), area_im));
        let mut diag = cmp(
            "prop4_ou_without_half",
            (rep.ou_value_without_half, rep.ou_stderr_without_half),
            area,
        );
        diag.warnings.push("diagnostic: OU value with the exponent's ½ dropped; not a pass criterion".into());
        write(&cfg.out, "prop4_ou_without_half", &diag)?;
        write(&cfg.out, "prop4_full", &rep)?;
    }

    if all || b.suite == Suite::Realize2d {
        let n = b.spec.n();
        let printed = det_formula_thm01(&b.spec)?;
        let continued = det_formula_continued(&b.spec)?;
        for (tag, basis) in [("canonical", StepBasis::canonical(n)), ("random", StepBasis::random(n, b.basis_seed))] {
            let (o, ms) = timed(|| realize_2d(&b.spec, &basis, ens))?;
            for (kind, target) in [("printed", printed), ("continued", continued)] {
                let name = format!("realize2d_{tag}_{kind}");
                let r = mc_report(&name, &b.spec, &o, target, cfg, ms);
                reports.push((name, r));
            }
        }
    }

    reports.iter().map(|(file, r)| report(&cfg.out, r, file)).collect()
}

#[derive(Serialize)]
struct KpsOutput {
    points: Vec<PhasePoint>,
    reports: Vec<KpsReport>,
    /// Largest chain error over all points.
    max_rel_error: f64,
    tolerance: f64,
    /// Monte Carlo z-scores, where it ran, against both sign conventions.
    /// Reported only; the verdict is the deterministic chain.
    z_printed: Vec<f64>,
    z_continued: Vec<f64>,
    passed: bool,
}

fn kps_check(cfg: &RunConfig) -> Result<Vec<Outcome>> {
    let b = cfg.kps_check.as_ref().expect("resolved");
    let points = if b.points.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
        let h = b.half_width;
        (0..b.random_points)
            .map(|_| PhasePoint::new((0..3).map(|_| rng.random_range(-h..=h)).collect()))
            .collect::<wiener_tau::Result<Vec<_>>>()?
    } else {
        b.points.clone()
    };
    let mc = b.monte_carlo.then_some(&cfg.ensemble);
    let reports = points
        .iter()
        .map(|x| run_kps_check(&b.params, x, mc))
        .collect::<wiener_tau::Result<Vec<_>>>()?;
    let tol = cfg.tolerances.kps_rtol;
    let max = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let z_printed: Vec<f64> = reports.iter().filter_map(|r| r.mc.as_ref().map(|m| m.z_printed)).collect();
    let z_continued: Vec<f64> = reports.iter().filter_map(|r| r.mc.as_ref().map(|m| m.z_continued)).collect();
    let out = KpsOutput {
        points,
        max_rel_error: max,
        tolerance: tol,
        passed: max <= tol,
        z_printed,
        z_continued,
        reports,
    };
    write(&cfg.out, "kps_check", &out)?;
    let mut summary = format!("{} points, max chain rel err {max:.3e} (tol {tol:.0e})", out.points.len());
    if b.monte_carlo {
        let worst = |z: &[f64]| z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        summary += &format!(
            "; MC at {} points, max |z| printed {:.2}, continued {:.2}",
            out.z_printed.len(),
            worst(&out.z_printed),
            worst(&out.z_continued)
        );
    }
    Ok(vec![Outcome {
        name: "kps_check".into(),
        passed: out.passed,
        summary,
    }])
}
