//! Ornstein–Uhlenbeck reduction for symmetric `A`.
//!
//! For symmetric `A` the area functional at `z = i` reduces, via Itô's
//! formula and a Girsanov change of measure, to the OU process
//! `dξ = Λ^{1/2} dB + ΛA ξ dt` with `X = ⟨(Λ - AΛA)ξ, ξ⟩`:
//!
//! `E[exp Ŝ(i)] = (E[exp(-½ ∫₀¹ X ds)])² e^{tr ΛA}`.
//!
//! The ½ comes from the Itô step; [`Prop4Report`] also carries the value
//! without it for comparison.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::area::{mc_char, AreaSpec, McOutcome, HALVING_WARN_Z};
use crate::mc::closed_form::{det_formula_continued, det_formula_thm01};
use crate::mc::estimate::{z_between, z_score, RealEstimate};
use crate::mc::paths::{run_ensemble, Path, PathEnsembleConfig};

pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct OUSpec {
    n: usize,
    sqrt_lambda: Vec<f64>,
    /// `ΛA`, row-major.
    drift: Vec<f64>,
    /// `Λ - AΛA`, row-major.
    q: Vec<f64>,
    trace_lambda_a: f64,
}

impl OUSpec {
    pub fn new(spec: &AreaSpec) -> Result<Self> {
        if !spec.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidParams(
                "the OU reduction needs a symmetric A".into(),
            ));
        }
        let n = spec.n();
        let l = spec.lambda();
        let a = |i: usize, j: usize| spec.a_entry(i, j);
        let drift: Vec<f64> = (0..n * n).map(|k| l[k / n] * a(k / n, k % n)).collect();
        let q = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let ala: f64 = (0..n).map(|m| a(i, m) * l[m] * a(m, j)).sum();
                if i == j { l[i] - ala } else { -ala }
            })
            .collect();
        Ok(Self {
            n,
            sqrt_lambda: l.iter().map(|v| v.sqrt()).collect(),
            trace_lambda_a: (0..n).map(|i| drift[i * n + i]).sum(),
            drift,
            q,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn quadratic_form(&self) -> &[f64] {
        &self.q
    }

    pub fn trace_lambda_a(&self) -> f64 {
        self.trace_lambda_a
    }

    fn x(&self, xi: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.q[i * n + j] * xi[i] * xi[j];
            }
        }
        s
    }

    /// Euler–Maruyama from `ξ_0 = 0`; returns `(∫ X ds, ξ_{1/2}, ξ_1)` with
    /// the time integral by the trapezoid rule.
    fn integrate(&self, path: &Path) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let steps = path.steps();
        let dt = path.dt();
        let mut xi = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut mid = vec![0.0; n];
        let mut x_prev = 0.0;
        let mut integral = 0.0;
        for k in 0..steps {
            for i in 0..n {
                let d: f64 = (0..n).map(|j| self.drift[i * n + j] * xi[j]).sum();
                next[i] = xi[i] + d * dt + self.sqrt_lambda[i] * path.increments(i)[k];
            }
            std::mem::swap(&mut xi, &mut next);
            let x = self.x(&xi);
            integral += 0.5 * dt * (x_prev + x);
            x_prev = x;
            if k + 1 == steps / 2 {
                mid.copy_from_slice(&xi);
            }
        }
        (integral, mid, xi)
    }
}

/// Exact variance of the scalar OU `dξ = √λ dB + d ξ dt` at time `t`.
pub fn ou_variance(lambda: f64, d: f64, t: f64) -> f64 {
    if d.abs() < 1e-12 {
        lambda * t
    } else {
        lambda * ((2.0 * d * t).exp() - 1.0) / (2.0 * d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuSummary {
    /// `E[exp(-½ ∫ X ds)]`.
    pub laplace_half: RealEstimate,
    /// `E[exp(-∫ X ds)]`.
    pub laplace_full: RealEstimate,
    pub mean_end: Vec<RealEstimate>,
    /// `E[(ξ^i_1)²]` (the mean is zero, so this is the variance).
    pub second_end: Vec<RealEstimate>,
    pub second_mid: Vec<RealEstimate>,
    pub coarse_laplace_half: RealEstimate,
    pub warnings: Vec<String>,
}

pub fn simulate_ou(spec: &OUSpec, config: &PathEnsembleConfig) -> Result<OuSummary> {
    config.validate()?;
    let n = spec.n;
    let width = 3 + 3 * n;
    let est = run_ensemble(config, n, width, |path, out| {
        let (int, mid, end) = spec.integrate(path);
        out[0] = (-0.5 * int).exp();
        out[1] = (-int).exp();
        for i in 0..n {
            out[2 + i] = end[i];
            out[2 + n + i] = end[i] * end[i];
            out[2 + 2 * n + i] = mid[i] * mid[i];
        }
        let (coarse, _, _) = spec.integrate(&path.coarsen());
        out[width - 1] = (-0.5 * coarse).exp();
    })?;
    let mut s = OuSummary {
        laplace_half: est[0],
        laplace_full: est[1],
        mean_end: est[2..2 + n].to_vec(),
        second_end: est[2 + n..2 + 2 * n].to_vec(),
        second_mid: est[2 + 2 * n..2 + 3 * n].to_vec(),
        coarse_laplace_half: est[width - 1],
        warnings: vec![],
    };
    let diff = (s.laplace_half.mean - s.coarse_laplace_half.mean).abs();
    if diff > HALVING_WARN_Z * s.laplace_half.stderr() && diff > 0.0 {
        s.warnings.push(format!(
            "discretization: halving the step moves the OU estimate by {diff:.2e}, more than {HALVING_WARN_Z} stderr"
        ));
    }
    Ok(s)
}

/// Three-way comparison for symmetric `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop4Report {
    pub area: McOutcome,
    pub ou: OuSummary,
    /// `(E[exp(-½∫X)])² e^{tr ΛA}` and its delta-method standard error.
    pub ou_value: f64,
    pub ou_stderr: f64,
    /// Same without the ½ in the exponent.
    pub ou_value_without_half: f64,
    pub ou_stderr_without_half: f64,
    /// `det(cosh Λ + A sinh Λ)^{-1}`.
    pub det_printed: f64,
    /// `det(cosh Λ - A sinh Λ)^{-1}`.
    pub det_continued: f64,
    pub z_area_ou: f64,
    pub z_area_printed: f64,
    pub z_ou_printed: f64,
    pub z_area_continued: f64,
    pub z_ou_continued: f64,
    /// Imaginary part of the area estimate against 0.
    pub z_area_im: f64,
}

impl Prop4Report {
    /// Area MC, OU MC and `det(cosh Λ + A sinh Λ)^{-1}` pairwise within `z_max`.
    pub fn passes_printed(&self, z_max: f64) -> bool {
        [self.z_area_ou, self.z_area_printed, self.z_ou_printed, self.z_area_im]
            .iter()
            .all(|z| z.abs() <= z_max)
    }

    /// Same with `det(cosh Λ - A sinh Λ)^{-1}` as the determinant.
    pub fn passes_continued(&self, z_max: f64) -> bool {
        [self.z_area_ou, self.z_area_continued, self.z_ou_continued, self.z_area_im]
            .iter()
            .all(|z| z.abs() <= z_max)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.area.warnings.iter().chain(&self.ou.warnings).cloned().collect()
    }
}

pub fn prop4_check(spec: &AreaSpec, config: &PathEnsembleConfig) -> Result<Prop4Report> {
    let ou_spec = OUSpec::new(spec)?;
    let area = mc_char(spec, Complex64::new(0.0, 1.0), config)?;
    // independent draws for the OU side
    let ou_config = PathEnsembleConfig {
        seed: config.seed ^ 0x9e37_79b9_7f4a_7c15,
        ..config.clone()
    };
    let ou = simulate_ou(&ou_spec, &ou_config)?;
    let e = ou_spec.trace_lambda_a().exp();
    let (h, f) = (ou.laplace_half, ou.laplace_full);
    let ou_value = h.mean * h.mean * e;
    let ou_stderr = 2.0 * h.mean.abs() * h.stderr() * e;
    let det_printed = det_formula_thm01(spec)?.re;
    let det_continued = det_formula_continued(spec)?.re;
    let (a, sa) = (area.estimate.mean().re, area.estimate.stderr_re());
    Ok(Prop4Report {
        z_area_ou: z_between(a, sa, ou_value, ou_stderr),
        z_area_printed: z_score(a, det_printed, sa),
        z_ou_printed: z_score(ou_value, det_printed, ou_stderr),
        z_area_continued: z_score(a, det_continued, sa),
        z_ou_continued: z_score(ou_value, det_continued, ou_stderr),
        z_area_im: z_score(area.estimate.mean().im, 0.0, area.estimate.stderr_im()),
        ou_value_without_half: f.mean * f.mean * e,
        ou_stderr_without_half: 2.0 * f.mean.abs() * f.stderr() * e,
        area,
        ou,
        ou_value,
        ou_stderr,
        det_printed,
        det_continued,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_a() {
        let s = AreaSpec::new(vec![0.2, 0.2], vec![0.0, 0.1, 0.0, 0.0]).unwrap();
        assert!(OUSpec::new(&s).is_err());
    }

    #[test]
    fn derived_matrices() {
        let s = AreaSpec::new(vec![0.5, 2.0], vec![0.1, 0.2, 0.2, 0.3]).unwrap();
        let o = OUSpec::new(&s).unwrap();
        assert!((o.drift()[1] - 0.5 * 0.2).abs() < 1e-15);
        // (Λ - AΛA)_{00} = 0.5 - (0.1·0.5·0.1 + 0.2·2·0.2)
        assert!((o.quadratic_form()[0] - (0.5 - 0.005 - 0.08)).abs() < 1e-15);
        assert!((o.trace_lambda_a() - (0.05 + 0.6)).abs() < 1e-15);
    }

    #[test]
    fn brownian_special_case() {
        let s = AreaSpec::new(vec![1.0, 1.0], vec![0.0; 4]).unwrap();
        let o = OUSpec::new(&s).unwrap();
        let r = simulate_ou(&o, &PathEnsembleConfig::new(256, 20_000, 4)).unwrap();
        for i in 0..2 {
            assert!(r.mean_end[i].mean.abs() < 3.0 * r.mean_end[i].stderr());
            assert!((r.second_end[i].mean - 1.0).abs() < 3.0 * r.second_end[i].stderr());
            assert!((r.second_mid[i].mean - 0.5).abs() < 3.0 * r.second_mid[i].stderr());
        }
    }

    #[test]
    fn scalar_variance() {
        let s = AreaSpec::new(vec![1.0], vec![0.6]).unwrap();
        let o = OUSpec::new(&s).unwrap();
        let r = simulate_ou(&o, &PathEnsembleConfig::new(1024, 20_000, 8)).unwrap();
        let exact = ou_variance(1.0, 0.6, 1.0);
        assert!((r.second_end[0].mean - exact).abs() < 3.0 * r.second_end[0].stderr());
    }
}
