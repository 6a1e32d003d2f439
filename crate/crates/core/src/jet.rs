//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] stores `f(x + h)` as a polynomial in `h` up to a fixed total
//! degree. Coefficients are Taylor coefficients (`∂^α f / α!`), so products
//! and compositions are plain polynomial arithmetic.

use crate::error::{Error, Result};

/// Largest supported number of jet variables.
pub const MAX_VARS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    vars: usize,
    degree: usize,
    // Dense over exponent tuples encoded in base (degree + 1); tuples whose
    // total degree exceeds `degree` stay zero.
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(vars: usize, degree: usize) -> Result<Self> {
        if vars == 0 || vars > MAX_VARS {
            return Err(Error::Capacity {
                what: "jet variables",
                got: vars,
                max: MAX_VARS,
            });
        }
        let len = (degree + 1).pow(vars as u32);
        Ok(Self {
            vars,
            degree,
            coeffs: vec![0.0; len],
        })
    }

    pub fn constant(vars: usize, degree: usize, c: f64) -> Result<Self> {
        let mut j = Self::zero(vars, degree)?;
        j.coeffs[0] = c;
        Ok(j)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn base(&self) -> usize {
        self.degree + 1
    }

    fn decode(&self, mut idx: usize, out: &mut [usize; MAX_VARS]) -> usize {
        let b = self.base();
        let mut total = 0;
        for slot in out.iter_mut().take(self.vars) {
            *slot = idx % b;
            total += *slot;
            idx /= b;
        }
        total
    }

    fn encode(&self, alpha: &[usize]) -> Option<usize> {
        let b = self.base();
        let total: usize = alpha.iter().sum();
        if alpha.len() > self.vars || total > self.degree {
            return None;
        }
        // missing trailing exponents are zero
        let mut idx = 0;
        for &a in alpha.iter().rev() {
            idx = idx * b + a;
        }
        Some(idx)
    }

    /// Taylor coefficient `∂^α f / α!`; zero beyond the truncation.
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        self.encode(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    /// Partial derivative `∂^α f` at the expansion point.
    pub fn derivative(&self, alpha: &[usize]) -> f64 {
        let fact: f64 = alpha.iter().map(|&a| factorial(a)).product();
        self.coeff(alpha) * fact
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn set_coeff(&mut self, alpha: &[usize], value: f64) -> Result<()> {
        let i = self
            .encode(alpha)
            .ok_or_else(|| Error::Dimension(format!("monomial {alpha:?} outside the jet")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Adds `weight * exp(rates · h)` to the jet.
    pub fn add_exponential(&mut self, weight: f64, rates: &[f64]) {
        let b = self.base();
        // powers[v][k] = rate_v^k / k!
        let mut powers = vec![vec![1.0; b]; self.vars];
        for (v, pw) in powers.iter_mut().enumerate() {
            let r = rates.get(v).copied().unwrap_or(0.0);
            for k in 1..b {
                pw[k] = pw[k - 1] * r / k as f64;
            }
        }
        let mut alpha = [0usize; MAX_VARS];
        for idx in 0..self.coeffs.len() {
            if self.decode(idx, &mut alpha) > self.degree {
                continue;
            }
            let mut c = weight;
            for v in 0..self.vars {
                c *= powers[v][alpha[v]];
            }
            self.coeffs[idx] += c;
        }
    }

    fn check_compatible(&self, other: &Jet) {
        assert_eq!(
            (self.vars, self.degree),
            (other.vars, other.degree),
            "jet shape mismatch"
        );
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let mut out = Jet {
            vars: self.vars,
            degree: self.degree,
            coeffs: vec![0.0; self.coeffs.len()],
        };
        let b = self.base();
        let mut ea = [0usize; MAX_VARS];
        let mut eb = [0usize; MAX_VARS];
        for (ia, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let da = self.decode(ia, &mut ea);
            if da > self.degree {
                continue;
            }
            for (ib, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let db = other.decode(ib, &mut eb);
                if da + db > self.degree {
                    continue;
                }
                let mut idx = 0;
                for v in (0..self.vars).rev() {
                    idx = idx * b + ea[v] + eb[v];
                }
                out.coeffs[idx] += ca * cb;
            }
        }
        out
    }

    /// Natural logarithm; requires a positive constant term.
    pub fn ln(&self) -> Result<Jet> {
        let c0 = self.coeffs[0];
        if !(c0 > 0.0) {
            return Err(Error::Domain(format!(
                "logarithm of a jet with constant term {c0:e}"
            )));
        }
        // ln f = ln c0 + ln(1 + e), e = f/c0 - 1 has no constant term, so the
        // series terminates at the truncation degree.
        let mut e = self.scale(1.0 / c0);
        e.coeffs[0] = 0.0;
        let mut out = Jet::constant(self.vars, self.degree, c0.ln())?;
        let mut power = e.clone();
        for k in 1..=self.degree {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(sign / k as f64));
            if k < self.degree {
                power = power.mul(&e);
            }
        }
        Ok(out)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
