//! Closed-form targets for the Monte Carlo checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{DiagFn, Mat, POLE_TOL};
use crate::mc::area::AreaSpec;

fn diag_complex(values: &[Complex64]) -> Mat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { Complex64::new(0.0, 0.0) })
}

/// `det(cosh Λ + A sinh Λ)^{-1}`.
pub fn det_formula_thm01(spec: &AreaSpec) -> Result<Complex64> {
    let lambda = spec.lambda();
    let cosh = crate::matcore::diag_map(lambda, DiagFn::Cosh)?;
    let sinh = crate::matcore::diag_map(lambda, DiagFn::Sinh)?;
    let m = &cosh + &(&spec.a() * &sinh);
    Ok(m.det_nonsingular()?.inv())
}

/// `det(cos σΛ + (σC⁺ + i C⁻) sin σΛ)^{-1}` for complex `σ`.
pub fn det_formula_area04_at(spec: &AreaSpec, sigma: Complex64) -> Result<Complex64> {
    let arg: Vec<Complex64> = spec.lambda().iter().map(|&l| sigma * l).collect();
    let cos = diag_complex(&arg.iter().map(|z| z.cos()).collect::<Vec<_>>());
    let sin = diag_complex(&arg.iter().map(|z| z.sin()).collect::<Vec<_>>());
    let coupling = &spec.c_plus().scale(sigma) + &spec.c_minus().scale(Complex64::new(0.0, 1.0));
    let m = &cos + &(&coupling * &sin);
    Ok(m.det_nonsingular()?.inv())
}

/// The real-`σ` formula.
pub fn det_formula_area04(spec: &AreaSpec, sigma: f64) -> Result<Complex64> {
    det_formula_area04_at(spec, Complex64::new(sigma, 0.0))
}

/// The real-`σ` formula continued to `σ = i`: `det(cosh Λ - A sinh Λ)^{-1}`.
///
/// This, not [`det_formula_thm01`], is what `E[exp Ŝ(i)]` converges to for
/// the functional as defined; the two agree when `A = 0`.
pub fn det_formula_continued(spec: &AreaSpec) -> Result<Complex64> {
    det_formula_area04_at(spec, Complex64::new(0.0, 1.0))
}

/// `Π_l σλ_l / sin σλ_l · det(M(σ) + C(σ))^{-1/2}` before the block
/// factorization; real `σ` with `M + C` of positive determinant.
pub fn det_formula_area03(spec: &AreaSpec, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let n = spec.n();
    let mut prefactor = 1.0;
    let mut m_diag = Vec::with_capacity(n);
    for &l in spec.lambda() {
        let x = sigma * l;
        let cot = DiagFn::Cot.apply(x)?;
        prefactor *= x / x.sin();
        m_diag.push(x * cot);
    }
    let (kp, km) = (spec.k_plus(), spec.k_minus());
    let mc = Mat::from_real_fn(2 * n, 2 * n, |r, c| {
        let (bi, bj) = (r / n, c / n);
        let (i, j) = (r % n, c % n);
        let m = if r == c { m_diag[i] } else { 0.0 };
        let k = match (bi, bj) {
            (0, 0) | (1, 1) => sigma * sigma * kp[i * n + j],
            (0, 1) => sigma * km[i * n + j],
            _ => -sigma * km[i * n + j],
        };
        m + k
    });
    let d = mc.det_nonsingular()?.re;
    if d <= 0.0 {
        return Err(Error::Domain(format!(
            "det(M + C) = {d:e} is not positive at sigma = {sigma}"
        )));
    }
    Ok(prefactor / d.sqrt())
}

fn x_over_sin(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x / x.sin()
    }
}

fn x_cot_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        -x * x / 3.0
    } else {
        x * x.cos() / x.sin() - 1.0
    }
}

/// `E[exp(σ Σ λ_l S^l) | W_1]` for endpoints `(W^{l,1}_1, W^{l,2}_1)`.
pub fn lsaf2_conditional(lambda: &[f64], sigma: f64, w1: &[f64], w2: &[f64]) -> Result<f64> {
    if w1.len() != lambda.len() || w2.len() != lambda.len() {
        return Err(Error::Dimension("one endpoint pair per lambda".into()));
    }
    let mut v = 1.0;
    for l in 0..lambda.len() {
        let x = sigma * lambda[l];
        let near = (x / std::f64::consts::PI).round();
        if near != 0.0 && x.sin().abs() < POLE_TOL {
            return Err(Error::Pole { value: x });
        }
        v *= x_over_sin(x) * (-0.5 * (w1[l] * w1[l] + w2[l] * w2[l]) * x_cot_minus_one(x)).exp();
    }
    Ok(v)
}

/// `E[exp(i ξ S_t)] = 1 / cosh(ξ t / 2)` with the half-area `S_t`.
pub fn levy_unconditional(xi: f64, t: f64) -> f64 {
    1.0 / (0.5 * xi * t).cosh()
}

/// `E[exp(i ξ S_1) | W_1 = (x, y)]`. Only `t = 1` is supported.
pub fn levy_conditional(xi: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if t != 1.0 {
        return Err(Error::Domain(format!(
            "conditional area formula is implemented at t = 1 only, got t = {t}"
        )));
    }
    let a = 0.5 * xi;
    let (ratio, acoth) = if a.abs() < 1e-4 {
        (1.0 - a * a / 6.0, 1.0 + a * a / 3.0)
    } else {
        (a / a.sinh(), a / a.tanh())
    };
    Ok(ratio * (0.5 * (x * x + y * y) * (1.0 - acoth)).exp())
}
