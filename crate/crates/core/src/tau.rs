//! KP soliton tau functions.
//!
//! Two evaluators are provided for the same function: the determinant
//! `det(I + G(x))` and the expansion over subsets `J ⊂ {1..n}`. Expanding the
//! determinant by principal minors (each a Cauchy determinant) shows that the
//! subset weights are `m̃_i = m_i / (p_i - q_i)`; [`tau_subset_sum`] uses those
//! so the two agree identically.
//!
//! Times beyond the truncation order of a [`PhasePoint`] are zero.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::dd::{self, DdMat};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::matcore::Mat;

/// Largest `n` accepted by the subset expansion (2^n terms).
pub const MAX_SUBSET_SOLITONS: usize = 20;
/// Largest total derivative order.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// Scattering-type data `(m_i, p_i, q_i)` of an n-soliton tau function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSolitonParams", into = "RawSolitonParams")]
pub struct SolitonParams {
    m: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawSolitonParams {
    m: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl TryFrom<RawSolitonParams> for SolitonParams {
    type Error = Error;
    fn try_from(raw: RawSolitonParams) -> Result<Self> {
        SolitonParams::new(raw.m, raw.p, raw.q)
    }
}

impl From<SolitonParams> for RawSolitonParams {
    fn from(s: SolitonParams) -> Self {
        RawSolitonParams { m: s.m, p: s.p, q: s.q }
    }
}

impl SolitonParams {
    pub fn new(m: Vec<f64>, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let n = m.len();
        if p.len() != n || q.len() != n {
            return Err(Error::InvalidParams(format!(
                "m, p, q must have equal lengths (got {}, {}, {})",
                n,
                p.len(),
                q.len()
            )));
        }
        if m.iter().chain(&p).chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("soliton parameters".into()));
        }
        if let Some(i) = m.iter().position(|&mi| mi <= 0.0) {
            return Err(Error::InvalidParams(format!("m[{i}] = {} must be positive", m[i])));
        }
        for i in 0..n {
            for j in 0..n {
                if p[i] == q[j] {
                    return Err(Error::InvalidParams(format!("p[{i}] equals q[{j}]")));
                }
                if i < j && p[i] == p[j] {
                    return Err(Error::InvalidParams(format!("p[{i}] equals p[{j}]")));
                }
                if i < j && q[i] == q[j] {
                    return Err(Error::InvalidParams(format!("q[{i}] equals q[{j}]")));
                }
            }
        }
        Ok(Self { m, p, q })
    }

    pub fn empty() -> Self {
        Self {
            m: vec![],
            p: vec![],
            q: vec![],
        }
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Subset-expansion weights `m_i / (p_i - q_i)`.
    pub fn effective_weights(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.m[i] / (self.p[i] - self.q[i])).collect()
    }

    /// Same `p`, `q` with the weights replaced.
    pub fn with_weights(&self, m: Vec<f64>) -> Result<Self> {
        Self::new(m, self.p.clone(), self.q.clone())
    }

    /// `min_{i,j} |p_i - q_j|`.
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for &pi in &self.p {
            for &qj in &self.q {
                g = g.min((pi - qj).abs());
            }
        }
        g
    }

    /// Rate of soliton `i` in time `x_l` (1-based `l`): `p_i^l - q_i^l`.
    pub fn rate(&self, i: usize, l: usize) -> f64 {
        self.p[i].powi(l as i32) - self.q[i].powi(l as i32)
    }

    /// Cauchy matrix `P_ij = 1 / (p_i - q_j)`.
    pub fn cauchy_matrix(&self) -> Mat {
        Mat::from_real_fn(self.n(), self.n(), |i, j| 1.0 / (self.p[i] - self.q[j]))
    }
}

/// Truncated KP time vector `(x_1, ..., x_L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PhasePoint {
    x: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PhasePoint {
    type Error = Error;
    fn try_from(x: Vec<f64>) -> Result<Self> {
        PhasePoint::new(x)
    }
}

impl From<PhasePoint> for Vec<f64> {
    fn from(p: PhasePoint) -> Self {
        p.x
    }
}

impl PhasePoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParams("phase point needs at least one time".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase point".into()));
        }
        Ok(Self { x })
    }

    /// Origin with truncation order `l`.
    pub fn zeros(l: usize) -> Self {
        Self { x: vec![0.0; l.max(1)] }
    }

    pub fn order(&self) -> usize {
        self.x.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.x
    }

    /// `x_l` for 1-based `l`; zero beyond the truncation.
    pub fn get(&self, l: usize) -> f64 {
        self.x.get(l - 1).copied().unwrap_or(0.0)
    }

    /// Copy extended with zeros to at least `l` times.
    pub fn extended(&self, l: usize) -> Self {
        let mut x = self.x.clone();
        if x.len() < l {
            x.resize(l, 0.0);
        }
        Self { x }
    }

    /// Copy with `x_l += delta` (1-based `l`), extending if needed.
    pub fn shifted(&self, l: usize, delta: f64) -> Self {
        let mut out = self.extended(l);
        out.x[l - 1] += delta;
        out
    }
}

/// Multiplier `C exp(<c, x>)`; tau functions stay tau functions under it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrivialFactor {
    pub constant: f64,
    pub rates: Vec<f64>,
}

impl TrivialFactor {
    pub fn new(constant: f64, rates: Vec<f64>) -> Result<Self> {
        if constant == 0.0 || !constant.is_finite() {
            return Err(Error::InvalidParams("trivial factor constant must be nonzero".into()));
        }
        if rates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trivial factor rates".into()));
        }
        Ok(Self { constant, rates })
    }

    fn exponent(&self, x: &PhasePoint) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .map(|(l, c)| c * x.get(l + 1))
            .sum()
    }
}

/// Phase `ξ_i = Σ_l (p_i^l - q_i^l) x_l` (0-based soliton index).
pub fn phase(params: &SolitonParams, x: &PhasePoint, i: usize) -> Result<f64> {
    if i >= params.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: params.n(),
        });
    }
    Ok((1..=x.order()).map(|l| params.rate(i, l) * x.get(l)).sum())
}

fn phases(params: &SolitonParams, x: &PhasePoint) -> Vec<f64> {
    (0..params.n())
        .map(|i| (1..=x.order()).map(|l| params.rate(i, l) * x.get(l)).sum())
        .collect()
}

/// The matrix `G(x)` with entries `sqrt(m_i m_j) / (p_i - q_j) exp((ξ_i + ξ_j)/2)`.
pub fn g_matrix(params: &SolitonParams, x: &PhasePoint) -> Mat {
    let xi = phases(params, x);
    let n = params.n();
    Mat::from_real_fn(n, n, |i, j| {
        (params.m[i] * params.m[j]).sqrt() / (params.p[i] - params.q[j])
            * (0.5 * (xi[i] + xi[j])).exp()
    })
}

/// `det(I + G(x))` by elimination.
///
/// With `d_i = sqrt(m_i) e^{ξ_i/2}`, `I + G = S⁻¹ M S⁻¹` where `s_i = min(1, 1/d_i)`
/// and `M = S² + T P T`, `t_i = min(1, d_i)`, so no entry of `M` is
/// `e^{ξ}`-sized. The Cauchy block of `M` is badly conditioned when nodes are
/// close, so `M` is built and eliminated in double-double arithmetic. Rounding
/// `s` and `t` only perturbs the diagonal, to which the determinant (a sum of
/// positive principal-minor terms) is insensitive.
pub fn tau_det(params: &SolitonParams, x: &PhasePoint) -> Result<f64> {
    let n = params.n();
    let half_log_d: Vec<f64> = phases(params, x)
        .iter()
        .zip(&params.m)
        .map(|(xi, m)| 0.5 * (xi + m.ln()))
        .collect();
    let s: Vec<f64> = half_log_d.iter().map(|&l| (-l.max(0.0)).exp()).collect();
    let t: Vec<f64> = half_log_d.iter().map(|&l| l.min(0.0).exp()).collect();
    let m = DdMat::from_fn(n, |i, j| {
        let off = dd::div(TwoFloat::new_mul(t[i], t[j]), TwoFloat::new_sub(params.p[i], params.q[j]));
        if i == j {
            off + TwoFloat::new_mul(s[i], s[i])
        } else {
            off
        }
    });
    let det = dd::to_f64(m.det()?);
    let big: f64 = half_log_d.iter().map(|l| 2.0 * l.max(0.0)).sum();
    Ok(det * big.exp())
}

/// One term of the subset expansion: `sign * exp(log_weight + Σ_{i∈J} ξ_i)`.
#[derive(Clone, Debug)]
struct SubsetTerm {
    members: u32,
    sign: f64,
    log_weight: f64,
}

/// Subset expansion of a tau function, prepared once per parameter set.
#[derive(Clone, Debug)]
pub struct SubsetExpansion {
    params: SolitonParams,
    terms: Vec<SubsetTerm>,
}

impl SubsetExpansion {
    pub fn new(params: &SolitonParams) -> Result<Self> {
        let n = params.n();
        if n > MAX_SUBSET_SOLITONS {
            return Err(Error::Capacity {
                what: "solitons in the subset expansion",
                got: n,
                max: MAX_SUBSET_SOLITONS,
            });
        }
        let w = params.effective_weights();
        let (p, q) = (params.p(), params.q());
        // pair interaction (p_i - p_k)(q_i - q_k) / ((p_i - q_k)(q_i - p_k)), i < k
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for k in (i + 1)..n {
                pair[i * n + k] = (p[i] - p[k]) * (q[i] - q[k]) / ((p[i] - q[k]) * (q[i] - p[k]));
            }
        }
        let mut terms = Vec::with_capacity(1 << n);
        for mask in 0u32..(1u32 << n) {
            let mut sign = 1.0;
            let mut log_weight = 0.0;
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    continue;
                }
                sign *= w[i].signum();
                log_weight += w[i].abs().ln();
                for k in (i + 1)..n {
                    if mask & (1 << k) != 0 {
                        let a = pair[i * n + k];
                        sign *= a.signum();
                        log_weight += a.abs().ln();
                    }
                }
            }
            terms.push(SubsetTerm {
                members: mask,
                sign,
                log_weight,
            });
        }
        Ok(Self {
            params: params.clone(),
            terms,
        })
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    /// Multiplies the coefficient of one subset term (bitmask of members) by
    /// `factor`. Anything but `factor = 1` breaks the tau-function structure;
    /// used as a negative control.
    pub fn perturb_term(&mut self, members: u32, factor: f64) -> Result<()> {
        let term = self
            .terms
            .iter_mut()
            .find(|t| t.members == members)
            .ok_or_else(|| Error::InvalidParams(format!("no subset term {members:#b}")))?;
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidParams("perturbation factor must be positive".into()));
        }
        term.log_weight += factor.ln();
        Ok(())
    }

    /// Exponent of each term at `x`, with the largest one.
    fn exponents(&self, x: &PhasePoint) -> (Vec<f64>, usize) {
        let xi = phases(&self.params, x);
        let mut best = 0;
        let mut ex = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.iter().enumerate() {
            let mut e = term.log_weight;
            for (i, v) in xi.iter().enumerate() {
                if term.members & (1 << i) != 0 {
                    e += v;
                }
            }
            if e > ex.get(best).copied().unwrap_or(f64::NEG_INFINITY) {
                best = t;
            }
            ex.push(e);
        }
        (ex, best)
    }

    fn subset_rate(&self, members: u32, l: usize) -> f64 {
        (0..self.params.n())
            .filter(|i| members & (1 << i) != 0)
            .map(|i| self.params.rate(i, l))
            .sum()
    }

    /// `ln|∂^α τ(x)|` and its sign, never overflowing.
    pub fn log_abs_derivative(&self, x: &PhasePoint, alpha: &[u32]) -> Result<(f64, f64)> {
        let order: u32 = alpha.iter().sum();
        if order as usize > MAX_DERIVATIVE_ORDER {
            return Err(Error::Capacity {
                what: "derivative order",
                got: order as usize,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        let (ex, best) = self.exponents(x);
        let shift = ex[best];
        let mut sum = 0.0;
        for (term, e) in self.terms.iter().zip(&ex) {
            let mut poly = 1.0;
            for (l0, &a) in alpha.iter().enumerate() {
                if a > 0 {
                    poly *= self.subset_rate(term.members, l0 + 1).powi(a as i32);
                }
            }
            sum += term.sign * poly * (e - shift).exp();
        }
        Ok((shift + sum.abs().ln(), sum.signum()))
    }

    pub fn value(&self, x: &PhasePoint) -> Result<f64> {
        self.derivative(x, &[])
    }

    pub fn derivative(&self, x: &PhasePoint, alpha: &[u32]) -> Result<f64> {
        let (la, s) = self.log_abs_derivative(x, alpha)?;
        Ok(if s == 0.0 { 0.0 } else { s * la.exp() })
    }

    /// Taylor jet of `ln τ(x + h)` in the first `vars` times.
    ///
    /// The dominant term `e^{E*}` is divided out before taking the logarithm;
    /// it is an exponential of an affine function of `x`, so it only enters the
    /// constant and linear coefficients, and the remaining ratio is O(1).
    pub fn log_jet(&self, x: &PhasePoint, vars: usize, degree: usize) -> Result<Jet> {
        let (ex, best) = self.exponents(x);
        let shift = ex[best];
        let lead: Vec<f64> = (1..=vars)
            .map(|l| self.subset_rate(self.terms[best].members, l))
            .collect();
        let mut ratio = Jet::zero(vars, degree)?;
        let mut rates = vec![0.0; vars];
        for (term, e) in self.terms.iter().zip(&ex) {
            let w = term.sign * (e - shift).exp();
            if w == 0.0 {
                continue;
            }
            for (l0, r) in rates.iter_mut().enumerate() {
                *r = self.subset_rate(term.members, l0 + 1) - lead[l0];
            }
            ratio.add_exponential(w, &rates);
        }
        if !(ratio.constant_term() > 0.0) {
            return Err(Error::Domain(format!(
                "tau is not positive at {:?}",
                x.times()
            )));
        }
        let mut out = ratio.ln()?;
        let c0 = out.constant_term();
        out.set_coeff(&[], c0 + shift)?;
        for (l0, r) in lead.iter().enumerate() {
            let mut alpha = vec![0; l0 + 1];
            alpha[l0] = 1;
            let c = out.coeff(&alpha);
            out.set_coeff(&alpha, c + r)?;
        }
        Ok(out)
    }
}

/// Subset-sum form with weights `m_i / (p_i - q_i)`.
pub fn tau_subset_sum(params: &SolitonParams, x: &PhasePoint) -> Result<f64> {
    SubsetExpansion::new(params)?.value(x)
}

/// Exact `∂^α τ(x)` from the subset form; `alpha[l-1]` is the order in `x_l`.
pub fn tau_derivative(params: &SolitonParams, x: &PhasePoint, alpha: &[u32]) -> Result<f64> {
    SubsetExpansion::new(params)?.derivative(x, alpha)
}

/// Anything that can be evaluated and differentiated as a tau function.
pub trait TauFunction {
    fn value(&self, x: &PhasePoint) -> Result<f64>;

    fn derivative(&self, x: &PhasePoint, alpha: &[u32]) -> Result<f64>;

    /// Taylor jet of `ln τ(x + h)` in the first `vars` KP times.
    fn log_jet(&self, x: &PhasePoint, vars: usize, degree: usize) -> Result<Jet>;
}

impl TauFunction for SubsetExpansion {
    fn value(&self, x: &PhasePoint) -> Result<f64> {
        SubsetExpansion::value(self, x)
    }

    fn derivative(&self, x: &PhasePoint, alpha: &[u32]) -> Result<f64> {
        SubsetExpansion::derivative(self, x, alpha)
    }

    fn log_jet(&self, x: &PhasePoint, vars: usize, degree: usize) -> Result<Jet> {
        SubsetExpansion::log_jet(self, x, vars, degree)
    }
}

/// `C e^{<c,x>} τ(x)` for a wrapped tau function.
#[derive(Clone, Debug)]
pub struct WithTrivialFactor<T> {
    inner: T,
    factor: TrivialFactor,
}

pub fn apply_trivial_factor<T: TauFunction>(tau: T, factor: TrivialFactor) -> WithTrivialFactor<T> {
    WithTrivialFactor { inner: tau, factor }
}

impl<T> WithTrivialFactor<T> {
    pub fn inner(&self) -> &T {
        &self.inner
    }

    pub fn factor(&self) -> &TrivialFactor {
        &self.factor
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl<T: TauFunction> TauFunction for WithTrivialFactor<T> {
    fn value(&self, x: &PhasePoint) -> Result<f64> {
        Ok(self.factor.constant * self.factor.exponent(x).exp() * self.inner.value(x)?)
    }

    fn derivative(&self, x: &PhasePoint, alpha: &[u32]) -> Result<f64> {
        // Leibniz: ∂^α (e^{<c,x>} τ) = e^{<c,x>} Σ_{β≤α} C(α,β) c^{α-β} ∂^β τ
        let mut beta = vec![0u32; alpha.len()];
        let mut total = 0.0;
        loop {
            let mut coef = 1.0;
            for (l, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
                let c = self.factor.rates.get(l).copied().unwrap_or(0.0);
                coef *= binomial(a, b) * c.powi((a - b) as i32);
            }
            if coef != 0.0 {
                total += coef * self.inner.derivative(x, &beta)?;
            }
            // odometer over β ≤ α
            let mut l = 0;
            loop {
                if l == alpha.len() {
                    return Ok(self.factor.constant * self.factor.exponent(x).exp() * total);
                }
                if beta[l] < alpha[l] {
                    beta[l] += 1;
                    break;
                }
                beta[l] = 0;
                l += 1;
            }
        }
    }

    /// Jet of `ln |C e^{<c,x>} τ|`; a negative `C` only flips the sign of
    /// the function, not its logarithmic derivatives.
    fn log_jet(&self, x: &PhasePoint, vars: usize, degree: usize) -> Result<Jet> {
        let mut jet = self.inner.log_jet(x, vars, degree)?;
        let c0 = jet.constant_term() + self.factor.constant.abs().ln() + self.factor.exponent(x);
        jet.set_coeff(&[], c0)?;
        for l0 in 0..vars.min(self.factor.rates.len()) {
            let mut alpha = vec![0; l0 + 1];
            alpha[l0] = 1;
            let c = jet.coeff(&alpha);
            jet.set_coeff(&alpha, c + self.factor.rates[l0])?;
        }
        Ok(jet)
    }
}
