//! Stochastic areas and the quadratic functional `Ŝ_{A,Λ}(z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{spectral_norm, Mat};
use crate::mc::estimate::ComplexEstimate;
use crate::mc::paths::{run_ensemble, Path, PathEnsembleConfig};

/// Default operating envelope: `max λ ≤ 0.3` or `‖C⁺‖₂ ≤ 0.5`.
pub const ENVELOPE_LAMBDA_MAX: f64 = 0.3;
pub const ENVELOPE_C_PLUS_MAX: f64 = 0.5;
/// Relative standard error above which an estimate is flagged.
pub const VARIANCE_WARN_RATIO: f64 = 0.2;
/// Fine/coarse discrepancy, in standard errors, above which bias is flagged.
pub const HALVING_WARN_Z: f64 = 3.0;

/// `(Λ, A)` with derived symmetric and skew parts `C^± = (A ± Aᵀ)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAreaSpec", into = "RawAreaSpec")]
pub struct AreaSpec {
    lambda: Vec<f64>,
    a: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawAreaSpec {
    lambda: Vec<f64>,
    a: Vec<Vec<f64>>,
}

impl TryFrom<RawAreaSpec> for AreaSpec {
    type Error = Error;
    fn try_from(r: RawAreaSpec) -> Result<Self> {
        AreaSpec::from_rows(r.lambda, &r.a)
    }
}

impl From<AreaSpec> for RawAreaSpec {
    fn from(s: AreaSpec) -> Self {
        let n = s.n();
        RawAreaSpec {
            a: s.a.chunks(n.max(1)).map(|r| r.to_vec()).collect(),
            lambda: s.lambda,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub max_lambda: f64,
    pub c_plus_norm: f64,
    pub within: bool,
}

impl AreaSpec {
    /// `a` is row-major `n × n`.
    pub fn new(lambda: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(Error::InvalidParams("area spec needs n >= 1".into()));
        }
        if a.len() != n * n {
            return Err(Error::Dimension(format!(
                "A has {} entries, expected {n} x {n}",
                a.len()
            )));
        }
        if lambda.iter().chain(&a).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("area spec".into()));
        }
        if let Some(l) = lambda.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidParams(format!("lambda[{l}] must be positive")));
        }
        Ok(Self { lambda, a })
    }

    pub fn from_rows(lambda: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = lambda.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("A must be {n} x {n}")));
        }
        Self::new(lambda, rows.concat())
    }

    pub fn from_mat(lambda: Vec<f64>, a: &Mat) -> Result<Self> {
        if a.entries().iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidParams("A must be real".into()));
        }
        Self::new(lambda, a.real_part())
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn a_entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n() + j]
    }

    pub fn a(&self) -> Mat {
        Mat::from_real_fn(self.n(), self.n(), |i, j| self.a_entry(i, j))
    }

    pub fn c_plus(&self) -> Mat {
        Mat::from_real_fn(self.n(), self.n(), |i, j| {
            0.5 * (self.a_entry(i, j) + self.a_entry(j, i))
        })
    }

    pub fn c_minus(&self) -> Mat {
        Mat::from_real_fn(self.n(), self.n(), |i, j| {
            0.5 * (self.a_entry(i, j) - self.a_entry(j, i))
        })
    }

    /// `Λ^{1/2} C^+ Λ^{1/2}`, row-major.
    pub fn k_plus(&self) -> Vec<f64> {
        self.sandwich(|i, j| 0.5 * (self.a_entry(i, j) + self.a_entry(j, i)))
    }

    /// `Λ^{1/2} C^- Λ^{1/2}`, row-major.
    pub fn k_minus(&self) -> Vec<f64> {
        self.sandwich(|i, j| 0.5 * (self.a_entry(i, j) - self.a_entry(j, i)))
    }

    fn sandwich(&self, c: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let n = self.n();
        let s: Vec<f64> = self.lambda.iter().map(|l| l.sqrt()).collect();
        (0..n * n).map(|k| s[k / n] * c(k / n, k % n) * s[k % n]).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| (self.a_entry(i, j) - self.a_entry(j, i)).abs() <= tol))
    }

    pub fn envelope(&self) -> Envelope {
        let max_lambda = self.lambda.iter().fold(0.0f64, |a, &b| a.max(b));
        let c_plus_norm = spectral_norm(&self.c_plus());
        Envelope {
            max_lambda,
            c_plus_norm,
            within: max_lambda <= ENVELOPE_LAMBDA_MAX || c_plus_norm <= ENVELOPE_C_PLUS_MAX,
        }
    }

    pub(crate) fn envelope_warning(&self) -> Option<String> {
        let e = self.envelope();
        (!e.within).then(|| {
            format!(
                "outside the integrability envelope: max lambda = {:.3} > {ENVELOPE_LAMBDA_MAX} and ||C+|| = {:.3} > {ENVELOPE_C_PLUS_MAX}",
                e.max_lambda, e.c_plus_norm
            )
        })
    }
}

/// Left-endpoint Itô sum `Σ_k (W²_{t_k} ΔW¹_k - W¹_{t_k} ΔW²_k)`, no ½.
pub fn area_of_increments(dw1: &[f64], dw2: &[f64]) -> Result<f64> {
    if dw1.len() != dw2.len() {
        return Err(Error::Grid(format!(
            "components have {} and {} steps",
            dw1.len(),
            dw2.len()
        )));
    }
    Ok(area_unchecked(dw1, dw2))
}

fn area_unchecked(dw1: &[f64], dw2: &[f64]) -> f64 {
    let (mut w1, mut w2, mut s) = (0.0, 0.0, 0.0);
    for (&a, &b) in dw1.iter().zip(dw2) {
        s += w2 * a - w1 * b;
        w1 += a;
        w2 += b;
    }
    s
}

/// Area of a planar path.
pub fn stochastic_area(path: &Path) -> Result<f64> {
    if path.dim() != 2 {
        return Err(Error::Dimension(format!(
            "stochastic area needs a 2D path, got {} components",
            path.dim()
        )));
    }
    Ok(area_unchecked(path.increments(0), path.increments(1)))
}

/// Precomputed pieces of `Ŝ` for one spec.
#[derive(Clone, Debug)]
pub(crate) struct SHat {
    n: usize,
    lambda: Vec<f64>,
    k_plus: Vec<f64>,
    k_minus: Vec<f64>,
}

impl SHat {
    pub(crate) fn new(spec: &AreaSpec) -> Self {
        Self {
            n: spec.n(),
            lambda: spec.lambda.clone(),
            k_plus: spec.k_plus(),
            k_minus: spec.k_minus(),
        }
    }

    /// `(Σ λ_l S^l + ⟨K⁻ W¹, W²⟩, Σ_i ⟨K⁺ Wⁱ, Wⁱ⟩)`: the parts linear and
    /// quadratic in `z`.
    pub(crate) fn parts(&self, path: &Path) -> (f64, f64) {
        let n = self.n;
        let mut lin = 0.0;
        // n ≤ MAX_AREA_DIM is checked before an SHat is used
        let mut e1 = [0.0; MAX_AREA_DIM];
        let mut e2 = [0.0; MAX_AREA_DIM];
        for l in 0..n {
            let (d1, d2) = (path.increments(2 * l), path.increments(2 * l + 1));
            lin += self.lambda[l] * area_unchecked(d1, d2);
            e1[l] = d1.iter().sum();
            e2[l] = d2.iter().sum();
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                // ⟨K u, v⟩ = Σ_ij K_ij u_j v_i
                lin += self.k_minus[i * n + j] * e1[j] * e2[i];
                quad += self.k_plus[i * n + j] * (e1[j] * e1[i] + e2[j] * e2[i]);
            }
        }
        (lin, quad)
    }

    pub(crate) fn eval(&self, path: &Path, z: Complex64) -> Complex64 {
        let (lin, quad) = self.parts(path);
        z * lin - 0.5 * z * z * quad
    }
}

/// Largest `n` the path functionals accept.
pub const MAX_AREA_DIM: usize = 16;

fn check_path(path: &Path, spec: &AreaSpec) -> Result<()> {
    if spec.n() > MAX_AREA_DIM {
        return Err(Error::Capacity {
            what: "area dimension",
            got: spec.n(),
            max: MAX_AREA_DIM,
        });
    }
    if path.dim() != 2 * spec.n() {
        return Err(Error::Dimension(format!(
            "Ŝ with n = {} needs {} components, got {}",
            spec.n(),
            2 * spec.n(),
            path.dim()
        )));
    }
    Ok(())
}

/// `Ŝ_{A,Λ}(z)` on one `2n`-dimensional path; component `2l` is `W^{l,1}`,
/// component `2l + 1` is `W^{l,2}`.
pub fn s_hat(path: &Path, spec: &AreaSpec, z: Complex64) -> Result<Complex64> {
    check_path(path, spec)?;
    Ok(SHat::new(spec).eval(path, z))
}

/// Monte Carlo estimate with its halved-step companion and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub estimate: ComplexEstimate,
    /// Same draws, evaluated on the grid with half the steps.
    pub coarse: ComplexEstimate,
    pub warnings: Vec<String>,
}

impl McOutcome {
    pub(crate) fn from_outputs(est: &[crate::mc::estimate::RealEstimate]) -> Self {
        let mut out = Self {
            estimate: ComplexEstimate::from_parts(est[0], est[1]),
            coarse: ComplexEstimate::from_parts(est[2], est[3]),
            warnings: vec![],
        };
        out.diagnose();
        out
    }

    fn diagnose(&mut self) {
        let (f, c) = (self.estimate, self.coarse);
        let m = f.mean().norm();
        let s = f.stderr_re().max(f.stderr_im());
        if m > 0.0 && s / m > VARIANCE_WARN_RATIO {
            self.warnings.push(format!(
                "variance blow-up: stderr/|mean| = {:.3} > {VARIANCE_WARN_RATIO}",
                s / m
            ));
        }
        let dre = (f.mean().re - c.mean().re).abs();
        let dim = (f.mean().im - c.mean().im).abs();
        if dre > HALVING_WARN_Z * f.stderr_re() && dre > 0.0
            || dim > HALVING_WARN_Z * f.stderr_im() && dim > 0.0
        {
            self.warnings.push(format!(
                "discretization: halving the step moves the estimate by ({dre:.2e}, {dim:.2e}), more than {HALVING_WARN_Z} stderr"
            ));
        }
    }

    pub(crate) fn with_warning(mut self, w: Option<String>) -> Self {
        if let Some(w) = w {
            self.warnings.insert(0, w);
        }
        self
    }
}

/// Runs a complex functional on fine and coarse paths.
pub(crate) fn complex_ensemble<F>(config: &PathEnsembleConfig, dim: usize, f: F) -> Result<McOutcome>
where
    F: Fn(&Path) -> Complex64 + Sync,
{
    let est = run_ensemble(config, dim, 4, |path, out| {
        let v = f(path);
        let c = f(&path.coarsen());
        out.copy_from_slice(&[v.re, v.im, c.re, c.im]);
    })?;
    Ok(McOutcome::from_outputs(&est))
}

/// `E[exp Ŝ(z)]` by Monte Carlo over `2n`-dimensional Brownian paths.
pub fn mc_char(spec: &AreaSpec, z: Complex64, config: &PathEnsembleConfig) -> Result<McOutcome> {
    config.validate()?;
    check_path(&Path::zeros(2 * spec.n(), 1), spec)?;
    let s = SHat::new(spec);
    Ok(complex_ensemble(config, 2 * spec.n(), |p| s.eval(p, z).exp())?
        .with_warning(spec.envelope_warning()))
}

/// `E[exp(i ξ S_1)]` with the half-area `S_1 = S / 2`.
pub fn levy_mc(xi: f64, config: &PathEnsembleConfig) -> Result<McOutcome> {
    config.validate()?;
    complex_ensemble(config, 2, |p| {
        let s = 0.5 * area_unchecked(p.increments(0), p.increments(1));
        Complex64::new(0.0, xi * s).exp()
    })
}

/// [`levy_mc`] for several `ξ` on one shared ensemble.
pub fn levy_mc_many(xis: &[f64], config: &PathEnsembleConfig) -> Result<Vec<McOutcome>> {
    config.validate()?;
    let est = run_ensemble(config, 2, 4 * xis.len(), |p, out| {
        let s = 0.5 * area_unchecked(p.increments(0), p.increments(1));
        let c = p.coarsen();
        let sc = 0.5 * area_unchecked(c.increments(0), c.increments(1));
        for (k, &xi) in xis.iter().enumerate() {
            let (v, w) = (Complex64::new(0.0, xi * s).exp(), Complex64::new(0.0, xi * sc).exp());
            out[4 * k..4 * k + 4].copy_from_slice(&[v.re, v.im, w.re, w.im]);
        }
    })?;
    Ok(est.chunks(4).map(McOutcome::from_outputs).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_path_has_zero_area() {
        assert_eq!(stochastic_area(&Path::zeros(2, 8)).unwrap(), 0.0);
    }

    #[test]
    fn swapping_components_flips_sign() {
        let mut p = Path::sample(2, 256, 3, 4);
        let s = stochastic_area(&p).unwrap();
        p.swap_components(0, 1);
        assert!((stochastic_area(&p).unwrap() + s).abs() < 1e-14);
    }

    #[test]
    fn mismatched_grids_rejected() {
        assert!(matches!(area_of_increments(&[0.1; 4], &[0.1; 5]), Err(Error::Grid(_))));
    }

    #[test]
    fn unit_square_loop() {
        // right, up, left, down: counter-clockwise unit square, Itô sum −2 × area
        let dw1 = [1.0, 0.0, -1.0, 0.0];
        let dw2 = [0.0, 1.0, 0.0, -1.0];
        assert_eq!(area_of_increments(&dw1, &dw2).unwrap(), -2.0);
    }

    fn spec2() -> AreaSpec {
        AreaSpec::from_rows(vec![0.2, 0.3], &[vec![0.1, 0.3], vec![-0.2, 0.05]]).unwrap()
    }

    #[test]
    fn derived_parts_reconstruct() {
        let s = spec2();
        assert!((&s.c_plus() + &s.c_minus()).distance(&s.a()) < 1e-15);
        assert!(s.c_plus().distance(&s.c_plus().transpose()) < 1e-15);
        assert!(s.c_minus().distance(&-&s.c_minus().transpose()) < 1e-15);
        assert!(s.envelope().within);
    }

    #[test]
    fn s_hat_special_cases() {
        let s = spec2();
        let p = Path::sample(4, 256, 1, 0);
        assert_eq!(s_hat(&p, &s, Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(s_hat(&p, &s, Complex64::new(0.2, 0.0)).unwrap().im, 0.0);
        let free = AreaSpec::new(vec![0.2, 0.3], vec![0.0; 4]).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let direct = 0.2 * area_of_increments(p.increments(0), p.increments(1)).unwrap()
            + 0.3 * area_of_increments(p.increments(2), p.increments(3)).unwrap();
        assert!((s_hat(&p, &free, z).unwrap() - z * direct).norm() < 1e-14);
        assert!(s_hat(&Path::zeros(3, 8), &s, z).is_err());
    }

    #[test]
    fn envelope_flags_large_specs() {
        let s = AreaSpec::new(vec![1.0], vec![2.0]).unwrap();
        assert!(!s.envelope().within);
        assert!(s.envelope_warning().is_some());
    }

    #[test]
    fn serde_round_trip() {
        let s = spec2();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AreaSpec>(&j).unwrap(), s);
        assert!(serde_json::from_str::<AreaSpec>(r#"{"lambda":[-1.0],"a":[[0.0]]}"#).is_err());
    }
}
