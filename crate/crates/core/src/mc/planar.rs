//! The area functional realized on a single planar Brownian motion.
//!
//! An orthonormal basis `e^1..e^n` of `ℝⁿ` gives step functions
//! `f_i = √n Σ_l e^i_l 1_{[(l-1)/n, l/n)}`; the `n` independent planes of
//! the `2n`-dimensional construction become the `n` time blocks of one
//! plane. Per sample everything is accumulated in one pass with `O(n)` work
//! per step.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::area::{complex_ensemble, AreaSpec, McOutcome};
use crate::mc::estimate::RealEstimate;
use crate::mc::paths::{run_ensemble, Path, PathEnsembleConfig};

pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Orthonormal basis; row `i` is `e^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StepBasis {
    n: usize,
    e: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for StepBasis {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        StepBasis::from_vectors(&rows)
    }
}

impl From<StepBasis> for Vec<Vec<f64>> {
    fn from(b: StepBasis) -> Self {
        b.e.chunks(b.n).map(|r| r.to_vec()).collect()
    }
}

impl StepBasis {
    pub fn canonical(n: usize) -> Self {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        Self { n, e }
    }

    /// Gram–Schmidt applied to a Gaussian random matrix.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut e: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if gram_schmidt(n, &mut e) {
                return Self { n, e };
            }
        }
    }

    pub fn from_vectors(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("basis must be n vectors of length n".into()));
        }
        let b = Self { n, e: rows.concat() };
        let err = b.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidParams(format!(
                "basis is not orthonormal: Gram error {err:e}"
            )));
        }
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.e[i * self.n..(i + 1) * self.n]
    }

    /// `max |Gram - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let dot: f64 = self.vector(i).iter().zip(self.vector(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `f_i(t)` on block `l`: `√n e^i_l`.
    fn step_value(&self, i: usize, l: usize) -> f64 {
        (self.n as f64).sqrt() * self.e[i * self.n + l]
    }
}

fn gram_schmidt(n: usize, e: &mut [f64]) -> bool {
    for i in 0..n {
        for _ in 0..2 {
            for j in 0..i {
                let dot: f64 = (0..n).map(|k| e[i * n + k] * e[j * n + k]).sum();
                for k in 0..n {
                    e[i * n + k] -= dot * e[j * n + k];
                }
            }
        }
        let norm = (0..n).map(|k| e[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return false;
        }
        for k in 0..n {
            e[i * n + k] /= norm;
        }
    }
    true
}

/// Per-block coefficient tables for [`PlanarFunctional`].
#[derive(Clone, Debug)]
struct PlanarFunctional {
    n: usize,
    /// `f[l][i]`.
    f: Vec<Vec<f64>>,
    /// `g[l][j] = Σ_i λ⁻_{ij} f_i`, `h[l][i] = Σ_j λ⁻_{ij} f_j`.
    g: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    lambda_plus: Vec<f64>,
}

impl PlanarFunctional {
    fn new(spec: &AreaSpec, basis: &StepBasis) -> Self {
        let n = spec.n();
        let km = spec.k_minus();
        // λ⁻ = Λ^{1/2}(I + C⁻)Λ^{1/2}
        let lm = |i: usize, j: usize| km[i * n + j] + if i == j { spec.lambda()[i] } else { 0.0 };
        let f: Vec<Vec<f64>> = (0..n)
            .map(|l| (0..n).map(|i| basis.step_value(i, l)).collect())
            .collect();
        let g = f
            .iter()
            .map(|fl| (0..n).map(|j| (0..n).map(|i| lm(i, j) * fl[i]).sum()).collect())
            .collect();
        let h = f
            .iter()
            .map(|fl| (0..n).map(|i| (0..n).map(|j| lm(i, j) * fl[j]).sum()).collect())
            .collect();
        Self {
            n,
            f,
            g,
            h,
            lambda_plus: spec.k_plus(),
        }
    }

    /// `(Σ λ⁻_{ij} S⁻_{ij}, Σ λ⁺_{ij} S⁺_{ij})` on a planar path.
    fn sums(&self, path: &Path) -> (f64, f64) {
        let n = self.n;
        let block = path.steps() / n;
        let (d1, d2) = (path.increments(0), path.increments(1));
        let mut i1 = vec![0.0; n];
        let mut i2 = vec![0.0; n];
        let mut minus = 0.0;
        for l in 0..n {
            let (f, g, h) = (&self.f[l], &self.g[l], &self.h[l]);
            for k in l * block..(l + 1) * block {
                let (a, b) = (d1[k], d2[k]);
                let mut gi2 = 0.0;
                let mut hi1 = 0.0;
                for i in 0..n {
                    gi2 += g[i] * i2[i];
                    hi1 += h[i] * i1[i];
                }
                minus += a * gi2 - b * hi1;
                for i in 0..n {
                    i1[i] += f[i] * a;
                    i2[i] += f[i] * b;
                }
            }
        }
        let mut plus = 0.0;
        for i in 0..n {
            for j in 0..n {
                plus += self.lambda_plus[i * n + j] * (i1[i] * i1[j] + i2[i] * i2[j]);
            }
        }
        (minus, plus)
    }

    /// `∫ f_i dW^a` for `a = 1, 2`.
    fn step_integrals(&self, path: &Path) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let block = path.steps() / n;
        let mut i1 = vec![0.0; n];
        let mut i2 = vec![0.0; n];
        for l in 0..n {
            let r = l * block..(l + 1) * block;
            let b1: f64 = path.increments(0)[r.clone()].iter().sum();
            let b2: f64 = path.increments(1)[r].iter().sum();
            for i in 0..n {
                i1[i] += self.f[l][i] * b1;
                i2[i] += self.f[l][i] * b2;
            }
        }
        (i1, i2)
    }
}

fn check(spec: &AreaSpec, basis: &StepBasis, config: &PathEnsembleConfig) -> Result<()> {
    if basis.n() != spec.n() {
        return Err(Error::Dimension(format!(
            "basis has n = {}, spec has n = {}",
            basis.n(),
            spec.n()
        )));
    }
    config.validate_blocks(spec.n())
}

/// `E[exp(i Σ λ⁻_{ij} S⁻_{ij} + ½ Σ λ⁺_{ij} S⁺_{ij})]` over one planar
/// Brownian motion. Needs `steps` to be a multiple of `2n`.
pub fn realize_2d(spec: &AreaSpec, basis: &StepBasis, config: &PathEnsembleConfig) -> Result<McOutcome> {
    check(spec, basis, config)?;
    let fun = PlanarFunctional::new(spec, basis);
    Ok(complex_ensemble(config, 2, |p| {
        let (minus, plus) = fun.sums(p);
        Complex64::new(0.5 * plus, minus).exp()
    })?
    .with_warning(spec.envelope_warning()))
}

/// `(Σ λ⁻ S⁻, Σ λ⁺ S⁺)` on a single planar path.
pub fn planar_sums(spec: &AreaSpec, basis: &StepBasis, path: &Path) -> Result<(f64, f64)> {
    if basis.n() != spec.n() {
        return Err(Error::Dimension("basis and spec sizes differ".into()));
    }
    if path.dim() != 2 || !path.steps().is_multiple_of(spec.n()) {
        return Err(Error::Grid(format!(
            "need a planar path whose {} steps split into {} blocks",
            path.steps(),
            spec.n()
        )));
    }
    Ok(PlanarFunctional::new(spec, basis).sums(path))
}

/// Pairs `i ≤ j` in the order used by the moment estimators.
pub fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// First and second moments of `S⁺_{ij}` (`i ≤ j`), planar construction.
/// Returns `(E[S⁺], E[(S⁺)²])`, one entry per [`upper_pairs`].
pub fn splus_moments_2d(
    basis: &StepBasis,
    config: &PathEnsembleConfig,
) -> Result<(Vec<RealEstimate>, Vec<RealEstimate>)> {
    let n = basis.n();
    config.validate_blocks(n)?;
    let dummy = AreaSpec::new(vec![1.0; n], vec![0.0; n * n])?;
    let fun = PlanarFunctional::new(&dummy, basis);
    let pairs = upper_pairs(n);
    let m = pairs.len();
    let est = run_ensemble(config, 2, 2 * m, |p, out| {
        let (i1, i2) = fun.step_integrals(p);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let s = i1[i] * i1[j] + i2[i] * i2[j];
            out[k] = s;
            out[m + k] = s * s;
        }
    })?;
    Ok((est[..m].to_vec(), est[m..].to_vec()))
}

/// Same moments for `Σ_a W^{i,a}_1 W^{j,a}_1` from `2n` independent motions.
pub fn splus_moments_2n(
    n: usize,
    config: &PathEnsembleConfig,
) -> Result<(Vec<RealEstimate>, Vec<RealEstimate>)> {
    config.validate()?;
    let pairs = upper_pairs(n);
    let m = pairs.len();
    let est = run_ensemble(config, 2 * n, 2 * m, |p, out| {
        let w1: Vec<f64> = (0..n).map(|l| p.endpoint(2 * l)).collect();
        let w2: Vec<f64> = (0..n).map(|l| p.endpoint(2 * l + 1)).collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let s = w1[i] * w1[j] + w2[i] * w2[j];
            out[k] = s;
            out[m + k] = s * s;
        }
    })?;
    Ok((est[..m].to_vec(), est[m..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::area::stochastic_area;

    #[test]
    fn random_basis_is_orthonormal() {
        for n in 1..6 {
            let b = StepBasis::random(n, n as u64);
            assert!(b.orthonormality_error() < ORTHONORMAL_TOL);
        }
        assert!(StepBasis::from_vectors(&[vec![1.0, 0.0], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn one_block_reduces_to_the_area() {
        let spec = AreaSpec::new(vec![0.7], vec![0.0]).unwrap();
        let p = Path::sample(2, 256, 1, 3);
        let (minus, plus) = planar_sums(&spec, &StepBasis::canonical(1), &p).unwrap();
        assert!((minus - 0.7 * stochastic_area(&p).unwrap()).abs() < 1e-13);
        assert_eq!(plus, 0.0);
    }

    #[test]
    fn misaligned_grid_rejected() {
        let spec = AreaSpec::new(vec![0.2; 3], vec![0.0; 9]).unwrap();
        let r = realize_2d(&spec, &StepBasis::canonical(3), &PathEnsembleConfig::new(4096, 1000, 0));
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn canonical_basis_matches_block_construction() {
        // With T = I, S⁺_{ij} is n times the product of block increments.
        let spec = AreaSpec::new(vec![0.3, 0.2], vec![0.2, 0.1, 0.1, -0.3]).unwrap();
        let p = Path::sample(2, 512, 2, 0);
        let (_, plus) = planar_sums(&spec, &StepBasis::canonical(2), &p).unwrap();
        let kp = spec.k_plus();
        let blk = |c: usize, l: usize| {
            p.increments(c)[l * 256..(l + 1) * 256].iter().sum::<f64>() * 2f64.sqrt()
        };
        let mut expect = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                expect += kp[i * 2 + j] * (blk(0, i) * blk(0, j) + blk(1, i) * blk(1, j));
            }
        }
        assert!((plus - expect).abs() < 1e-12);
    }
}
