//! Kotani's covariance kernel for discrete measures and the Ikeda–Taniguchi
//! OU construction of the same Gaussian process.
//!
//! Both sides are implemented as given. With `σ_± = 2a² Σ c_i² δ_{-p_i²}`
//! the kernel comes out exactly `a` times the direct covariance of
//! `√a ⟨c, ξ^p⟩`; [`kernel_ratio`] reports that ratio instead of smoothing
//! over it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::estimate::RealEstimate;
use crate::mc::paths::{run_ensemble, PathEnsembleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub mass: f64,
    pub location: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidParams(format!("atom mass {} must be positive", a.mass)));
            }
            if !(a.location < 0.0 && a.location.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "atom location {} must be negative",
                    a.location
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `(σ_+, σ_-)`: mass `2a²c_i²` at `-p_i²`, split by the sign of `p_i`.
pub fn scattering_measure(a: f64, c: &[f64], p: &[f64]) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if c.len() != p.len() {
        return Err(Error::Dimension("c and p lengths differ".into()));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParams("a must be positive".into()));
    }
    let (mut plus, mut minus) = (vec![], vec![]);
    for (&ci, &pi) in c.iter().zip(p) {
        if pi == 0.0 {
            return Err(Error::InvalidParams("p_i = 0 has no atom".into()));
        }
        let atom = Atom {
            mass: 2.0 * a * a * ci * ci,
            location: -pi * pi,
        };
        if pi > 0.0 { plus.push(atom) } else { minus.push(atom) }
    }
    Ok((DiscreteMeasure::new(plus)?, DiscreteMeasure::new(minus)?))
}

/// `C(u, v; σ)` for discrete `σ_±`.
pub fn kotani_kernel(u: f64, v: f64, plus: &DiscreteMeasure, minus: &DiscreteMeasure) -> f64 {
    let (s, d) = (u + v, (u - v).abs());
    let part = |m: &DiscreteMeasure, f: &dyn Fn(f64) -> f64| -> f64 {
        m.atoms
            .iter()
            .map(|at| {
                let r = (-at.location).sqrt();
                0.25 * at.mass / r * f(r)
            })
            .sum()
    };
    part(plus, &|r| (r * s).exp() - (r * d).exp()) + part(minus, &|r| (-r * d).exp() - (-r * s).exp())
}

/// `Cov(ξ_u, ξ_v)` for the scalar OU `dξ = dW + p ξ dt`, `ξ_0 = 0`.
pub fn ou_covariance(p: f64, u: f64, v: f64) -> f64 {
    let (s, d) = (u + v, (u - v).abs());
    if p.abs() < 1e-12 {
        0.5 * (s - d)
    } else {
        ((p * s).exp() - (p * d).exp()) / (2.0 * p)
    }
}

/// `E[X_u X_v]` for `X = √a ⟨c, ξ^p⟩` with independent OU components.
pub fn ikeda_taniguchi_covariance(u: f64, v: f64, a: f64, c: &[f64], p: &[f64]) -> f64 {
    a * c.iter().zip(p).map(|(ci, &pi)| ci * ci * ou_covariance(pi, u, v)).sum::<f64>()
}

/// Kotani kernel over the direct covariance; `None` where both vanish.
pub fn kernel_ratio(u: f64, v: f64, a: f64, c: &[f64], p: &[f64]) -> Result<Option<f64>> {
    let (plus, minus) = scattering_measure(a, c, p)?;
    let k = kotani_kernel(u, v, &plus, &minus);
    let d = ikeda_taniguchi_covariance(u, v, a, c, p);
    Ok((d != 0.0).then(|| k / d))
}

/// Monte Carlo `q(x) = -4 ∂²_x log E[exp(-½ ∫₀ˣ X_y² dy)]` on `points`
/// equally spaced interior points of `(0, x_max)`; a shape diagnostic only.
pub fn ism_gauss1_curve(
    a: f64,
    c: &[f64],
    p: &[f64],
    x_max: f64,
    points: usize,
    config: &PathEnsembleConfig,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if c.len() != p.len() || c.is_empty() {
        return Err(Error::Dimension("c and p must be non-empty and equal length".into()));
    }
    if !(x_max > 0.0) || points == 0 || points + 1 >= config.steps {
        return Err(Error::Config("need x_max > 0 and 0 < points < steps - 1".into()));
    }
    let n = c.len();
    let steps = config.steps;
    let dt = x_max / steps as f64;
    let scale = x_max.sqrt();
    // checkpoints k·stride for k = 0..=points+1
    let stride = steps / (points + 1);
    let marks = points + 2;
    let est: Vec<RealEstimate> = run_ensemble(config, n, marks, |path, out| {
        let mut xi = vec![0.0; n];
        let mut integral = 0.0;
        let mut x_prev = 0.0;
        out[0] = 1.0;
        for k in 0..steps {
            let mut x = 0.0;
            for i in 0..n {
                xi[i] += p[i] * xi[i] * dt + scale * path.increments(i)[k];
                x += c[i] * xi[i];
            }
            let x2 = a * x * x;
            integral += 0.5 * dt * (x_prev + x2);
            x_prev = x2;
            if (k + 1) % stride == 0 && (k + 1) / stride < marks {
                out[(k + 1) / stride] = (-0.5 * integral).exp();
            }
        }
    })?;
    let h = stride as f64 * dt;
    let logs: Vec<f64> = est.iter().map(|e| e.mean.ln()).collect();
    Ok((1..=points)
        .map(|k| {
            let q = -4.0 * (logs[k + 1] - 2.0 * logs[k] + logs[k - 1]) / (h * h);
            (k as f64 * h, q)
        })
        .collect())
}
