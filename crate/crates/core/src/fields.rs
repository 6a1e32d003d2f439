//! Soliton fields `u = 2 ∂²_{x1} log τ`, PDE residuals and field grids.
//!
//! All derivatives come from the Taylor jet of `log τ` (see
//! [`SubsetExpansion::log_jet`]), which is exact up to rounding.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tau::{PhasePoint, SolitonParams, SubsetExpansion, TauFunction};

/// Scattering data `(η_j, m_j)` of a reflectionless Schrödinger potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScattering", into = "RawScattering")]
pub struct ScatteringData {
    eta: Vec<f64>,
    m: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawScattering {
    eta: Vec<f64>,
    m: Vec<f64>,
}

impl TryFrom<RawScattering> for ScatteringData {
    type Error = Error;
    fn try_from(r: RawScattering) -> Result<Self> {
        ScatteringData::new(r.eta, r.m)
    }
}

impl From<ScatteringData> for RawScattering {
    fn from(s: ScatteringData) -> Self {
        RawScattering { eta: s.eta, m: s.m }
    }
}

impl ScatteringData {
    pub fn new(eta: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if eta.len() != m.len() {
            return Err(Error::InvalidParams("eta and m lengths differ".into()));
        }
        if eta.iter().chain(&m).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams("eta and m must be positive".into()));
        }
        for i in 0..eta.len() {
            for j in (i + 1)..eta.len() {
                if eta[i] == eta[j] {
                    return Err(Error::InvalidParams(format!("eta[{i}] equals eta[{j}]")));
                }
            }
        }
        Ok(Self { eta, m })
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// KdV reduction: `p = η`, `q = -η`, same weights; `x = x_1`, `t = x_3`.
    pub fn to_soliton_params(&self) -> SolitonParams {
        SolitonParams::new(
            self.m.clone(),
            self.eta.clone(),
            self.eta.iter().map(|e| -e).collect(),
        )
        .expect("positive distinct eta give admissible params")
    }
}

/// `(x, t) ↦ (x_1, x_2, x_3) = (x, 0, t)`.
pub fn kdv_point(x: f64, t: f64) -> PhasePoint {
    PhasePoint::new(vec![x, 0.0, t]).expect("finite point")
}

/// `2 ∂²_{x1} log τ` for any tau function.
pub fn u1_of<T: TauFunction>(tau: &T, x: &PhasePoint) -> Result<f64> {
    let jet = tau.log_jet(x, 1, 2)?;
    Ok(2.0 * jet.derivative(&[2]))
}

pub fn u1(params: &SolitonParams, x: &PhasePoint) -> Result<f64> {
    u1_of(&SubsetExpansion::new(params)?, x)
}

/// Absolute residual together with the size of the largest individual term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(signed: &[f64]) -> Self {
        let absolute = signed.iter().sum::<f64>().abs();
        let scale = signed.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        Self { absolute, scale }
    }

    /// Residual relative to the local term scale; zero when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.absolute
        } else {
            self.absolute / self.scale
        }
    }
}

/// KP equation `(3/4) u_{22} = ∂_1 (u_3 - (3/2) u u_1 - (1/4) u_{111})` for
/// `u = 2 ∂²_1 log τ`, written as a sum of five terms that should cancel.
pub fn kp_residual_of<T: TauFunction>(tau: &T, x: &PhasePoint) -> Result<Residual> {
    if x.order() < 3 {
        return Err(Error::InvalidParams(format!(
            "KP residual needs at least 3 times, got {}",
            x.order()
        )));
    }
    let f = tau.log_jet(x, 3, 6)?;
    let u = 2.0 * f.derivative(&[2]);
    let u_1 = 2.0 * f.derivative(&[3]);
    let u_11 = 2.0 * f.derivative(&[4]);
    let u_1111 = 2.0 * f.derivative(&[6]);
    let u_22 = 2.0 * f.derivative(&[2, 2]);
    let u_13 = 2.0 * f.derivative(&[3, 0, 1]);
    Ok(Residual::from_terms(&[
        0.75 * u_22,
        -u_13,
        1.5 * u_1 * u_1,
        1.5 * u * u_11,
        0.25 * u_1111,
    ]))
}

pub fn kp_residual(params: &SolitonParams, x: &PhasePoint) -> Result<Residual> {
    kp_residual_of(&SubsetExpansion::new(params)?, x)
}

pub fn reflectionless_potential(sd: &ScatteringData, x: f64, t: f64) -> Result<f64> {
    u1(&sd.to_soliton_params(), &kdv_point(x, t))
}

/// `2 η² sech²(η x + η³ t + ½ ln(m / 2η))`.
pub fn one_soliton(eta: f64, m: f64, x: f64, t: f64) -> f64 {
    let theta = eta * x + eta.powi(3) * t + 0.5 * (m / (2.0 * eta)).ln();
    2.0 * eta * eta / theta.cosh().powi(2)
}

/// KdV `u_t = ¼ u_xxx + (3/2) u u_x`.
pub fn kdv_residual(sd: &ScatteringData, x: f64, t: f64) -> Result<Residual> {
    let tau = SubsetExpansion::new(&sd.to_soliton_params())?;
    let f = tau.log_jet(&kdv_point(x, t), 3, 5)?;
    let u = 2.0 * f.derivative(&[2]);
    let u_x = 2.0 * f.derivative(&[3]);
    let u_xxx = 2.0 * f.derivative(&[5]);
    let u_t = 2.0 * f.derivative(&[2, 0, 1]);
    Ok(Residual::from_terms(&[u_t, -0.25 * u_xxx, -1.5 * u * u_x]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// `x1`, `x2`, ... for KP fields; `x` or `t` for KdV fields.
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, count: usize) -> Self {
        Self {
            name: name.into(),
            min,
            max,
            count,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!("axis {}: bounds must be finite", self.name)));
        }
        match self.count {
            0 => Err(Error::Config(format!("axis {}: count must be positive", self.name))),
            1 if self.min != self.max => Err(Error::Config(format!(
                "axis {}: a single-point axis needs min == max",
                self.name
            ))),
            1 => Ok(()),
            _ if self.max <= self.min => Err(Error::Config(format!(
                "axis {}: max must exceed min",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
        }
    }
}

/// What to evaluate on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    /// `u_1` of a KP soliton; axes vary times of `base`.
    Kp { params: SolitonParams, base: PhasePoint },
    /// Reflectionless potential `u(t, x)`; absent axes default to 0.
    Kdv { scattering: ScatteringData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub axes: Vec<Axis>,
    /// Row-major over `axes` (first axis slowest).
    pub values: Vec<f64>,
}

enum Slot {
    Time(usize),
    X,
    T,
}

fn resolve(source: &FieldSource, axis: &Axis) -> Result<Slot> {
    match source {
        FieldSource::Kp { .. } => axis
            .name
            .strip_prefix('x')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&l| (1..=crate::jet::MAX_VARS).contains(&l))
            .map(Slot::Time)
            .ok_or_else(|| Error::Config(format!("unknown KP axis {:?} (expected x1..x6)", axis.name))),
        FieldSource::Kdv { .. } => match axis.name.as_str() {
            "x" => Ok(Slot::X),
            "t" => Ok(Slot::T),
            other => Err(Error::Config(format!("unknown KdV axis {other:?} (expected x or t)"))),
        },
    }
}

pub fn field_grid(source: &FieldSource, spec: &GridSpec) -> Result<FieldGrid> {
    if spec.axes.is_empty() {
        return Err(Error::Config("grid needs at least one axis".into()));
    }
    let mut slots = Vec::with_capacity(spec.axes.len());
    for (i, axis) in spec.axes.iter().enumerate() {
        axis.validate()?;
        if spec.axes[..i].iter().any(|a| a.name == axis.name) {
            return Err(Error::Config(format!("axis {} appears twice", axis.name)));
        }
        slots.push(resolve(source, axis)?);
    }
    let total = spec
        .axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
        .ok_or_else(|| Error::Config("grid too large".into()))?;

    let tau = match source {
        FieldSource::Kp { params, .. } => SubsetExpansion::new(params)?,
        FieldSource::Kdv { scattering } => SubsetExpansion::new(&scattering.to_soliton_params())?,
    };
    let point = |flat: usize| -> PhasePoint {
        let mut rem = flat;
        let mut coords = vec![0.0; spec.axes.len()];
        for (c, axis) in coords.iter_mut().zip(&spec.axes).rev() {
            *c = axis.value(rem % axis.count);
            rem /= axis.count;
        }
        match source {
            FieldSource::Kp { base, .. } => {
                let mut p = base.clone();
                for (slot, c) in slots.iter().zip(&coords) {
                    if let Slot::Time(l) = slot {
                        p = p.extended(*l);
                        let delta = c - p.get(*l);
                        p = p.shifted(*l, delta);
                    }
                }
                p
            }
            FieldSource::Kdv { .. } => {
                let (mut x, mut t) = (0.0, 0.0);
                for (slot, c) in slots.iter().zip(&coords) {
                    match slot {
                        Slot::X => x = *c,
                        Slot::T => t = *c,
                        Slot::Time(_) => {}
                    }
                }
                kdv_point(x, t)
            }
        }
    };
    let values = (0..total)
        .into_par_iter()
        .map(|k| u1_of(&tau, &point(k)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FieldGrid {
        axes: spec.axes.clone(),
        values,
    })
}

impl FieldGrid {
    /// Header of axis names then `u`; one row per point, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.axes {
            out.push_str(&a.name);
            out.push(',');
        }
        out.push_str("u\n");
        for (flat, v) in self.values.iter().enumerate() {
            let mut rem = flat;
            let mut idx = vec![0; self.axes.len()];
            for (i, a) in idx.iter_mut().zip(&self.axes).rev() {
                *i = rem % a.count;
                rem /= a.count;
            }
            for (i, a) in idx.iter().zip(&self.axes) {
                let _ = write!(out, "{:.16e},", a.value(*i));
            }
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tau::{apply_trivial_factor, TrivialFactor};

    fn one() -> SolitonParams {
        SolitonParams::new(vec![2.0], vec![1.0], vec![-1.0]).unwrap()
    }

    #[test]
    fn u1_peak_and_decay() {
        assert!((u1(&one(), &PhasePoint::zeros(3)).unwrap() - 2.0).abs() < 1e-14);
        for x in [-40.0, 40.0] {
            let v = u1(&one(), &PhasePoint::new(vec![x]).unwrap()).unwrap();
            assert!(v.abs() < 1e-30);
        }
    }

    #[test]
    fn empty_tau_has_zero_residuals() {
        let s = SolitonParams::empty();
        let r = kp_residual(&s, &PhasePoint::zeros(3)).unwrap();
        assert_eq!(r.absolute, 0.0);
        let sd = ScatteringData::new(vec![], vec![]).unwrap();
        assert_eq!(kdv_residual(&sd, 0.3, 0.1).unwrap().absolute, 0.0);
    }

    #[test]
    fn kp_needs_three_times() {
        assert!(kp_residual(&one(), &PhasePoint::zeros(2)).is_err());
    }

    #[test]
    fn kp_residual_small_for_two_solitons() {
        let s = SolitonParams::new(vec![1.0, 0.5], vec![0.7, 1.3], vec![-0.9, -0.4]).unwrap();
        let x = PhasePoint::new(vec![0.2, -0.5, 0.3]).unwrap();
        let r = kp_residual(&s, &x).unwrap();
        assert!(r.relative() < 1e-10, "{r:?}");
    }

    #[test]
    fn kp_negative_control() {
        let s = SolitonParams::new(vec![1.0, 0.5], vec![0.7, 1.3], vec![-0.9, -0.4]).unwrap();
        let mut e = SubsetExpansion::new(&s).unwrap();
        e.perturb_term(0b11, 1.5).unwrap();
        let r = kp_residual_of(&e, &PhasePoint::zeros(3)).unwrap();
        assert!(r.relative() > 1e-2, "{r:?}");
    }

    #[test]
    fn one_soliton_matches_closed_form() {
        let sd = ScatteringData::new(vec![0.8], vec![1.7]).unwrap();
        for (x, t) in [(0.0, 0.0), (-1.3, 0.4), (2.0, -0.7)] {
            let u = reflectionless_potential(&sd, x, t).unwrap();
            let c = one_soliton(0.8, 1.7, x, t);
            assert!((u - c).abs() < 1e-12, "{u} vs {c}");
            assert!(kdv_residual(&sd, x, t).unwrap().relative() < 1e-10);
        }
    }

    #[test]
    fn trivial_factor_leaves_u1() {
        let s = SolitonParams::new(vec![1.0, 0.5], vec![0.7, 1.3], vec![-0.9, -0.4]).unwrap();
        let e = SubsetExpansion::new(&s).unwrap();
        let w = apply_trivial_factor(e.clone(), TrivialFactor::new(4.0, vec![1.0, -2.0, 0.5]).unwrap());
        let x = PhasePoint::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert!((u1_of(&w, &x).unwrap() - u1_of(&e, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn grid_ordering_and_csv() {
        let src = FieldSource::Kdv {
            scattering: ScatteringData::new(vec![1.0], vec![2.0]).unwrap(),
        };
        let spec = GridSpec {
            axes: vec![Axis::new("t", 0.0, 1.0, 2), Axis::new("x", -1.0, 1.0, 3)],
        };
        let g = field_grid(&src, &spec).unwrap();
        assert_eq!(g.values.len(), 6);
        // second row: t = 0, x = 0 is the peak
        assert!((g.values[1] - 2.0).abs() < 1e-14);
        assert!((g.values[4] - reflectionless_potential(&ScatteringData::new(vec![1.0], vec![2.0]).unwrap(), 0.0, 1.0).unwrap()).abs() < 1e-15);
        let csv = g.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x,u"));
        let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], 0.0);
        assert_eq!(row[1], 0.0);
        assert_eq!(row[2], g.values[1]);
    }

    #[test]
    fn single_point_grid() {
        let src = FieldSource::Kp {
            params: one(),
            base: PhasePoint::zeros(3),
        };
        let spec = GridSpec {
            axes: vec![Axis::new("x1", 0.0, 0.0, 1)],
        };
        let g = field_grid(&src, &spec).unwrap();
        assert_eq!(g.values.len(), 1);
        assert!((g.values[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bad_grids_rejected() {
        let src = FieldSource::Kp {
            params: one(),
            base: PhasePoint::zeros(3),
        };
        for axes in [
            vec![],
            vec![Axis::new("x1", 1.0, 0.0, 5)],
            vec![Axis::new("x1", 0.0, 1.0, 1)],
            vec![Axis::new("y", 0.0, 1.0, 3)],
            vec![Axis::new("x1", 0.0, 1.0, 3), Axis::new("x1", 0.0, 1.0, 3)],
        ] {
            assert!(matches!(field_grid(&src, &GridSpec { axes }), Err(Error::Config(_))));
        }
    }

    #[test]
    fn symmetric_about_peak() {
        let src = FieldSource::Kp {
            params: one(),
            base: PhasePoint::zeros(3),
        };
        let g = field_grid(&src, &GridSpec { axes: vec![Axis::new("x1", -3.0, 3.0, 61)] }).unwrap();
        for k in 0..61 {
            assert!((g.values[k] - g.values[60 - k]).abs() < 1e-9);
        }
    }
}
