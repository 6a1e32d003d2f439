//! Small dense complex matrices.
//!
//! Everything here is sized for the handful-of-solitons regime (n up to a
//! dozen or so). Real matrices are stored as complex with zero imaginary part.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// Distance from a pole of `cot` below which [`diag_map`] refuses to evaluate.
pub const POLE_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(rows, cols, |r, c| Complex64::new(f(r, c), 0.0))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Self::from_real_fn(rows, cols, |r, c| entries[r * cols + c]))
    }

    /// Builds a real matrix from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_real(n, cols, &flat)
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Assembles `[[a, b], [c, d]]` from four equally sized square blocks.
    pub fn block2x2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<Self> {
        let n = a.square_dim()?;
        for blk in [b, c, d] {
            if blk.rows != n || blk.cols != n {
                return Err(Error::Dimension("blocks must share one size".into()));
            }
        }
        Ok(Self::from_fn(2 * n, 2 * n, |r, col| {
            let blk = match (r < n, col < n) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => c,
                (false, false) => d,
            };
            blk[(r % n, col % n)]
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn square_dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Real parts as row-major `f64`.
    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn try_mul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product for real vectors against the real part.
    pub fn mul_real_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)].re * v[c]).sum())
            .collect()
    }

    fn lu(&self) -> Result<Lu> {
        let n = self.square_dim()?;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs();
        let mut smallest = (usize::MAX, f64::INFINITY);
        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|r| (r, a[r * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag < smallest.1 {
                smallest = (k, mag);
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            if pivot.norm() == 0.0 {
                continue;
            }
            for r in (k + 1)..n {
                let f = a[r * n + k] / pivot;
                a[r * n + k] = f;
                for c in (k + 1)..n {
                    let t = a[k * n + c];
                    a[r * n + c] -= f * t;
                }
            }
        }
        Ok(Lu {
            n,
            a,
            perm,
            sign,
            scale,
            smallest,
        })
    }

    /// Determinant by partially pivoted elimination. The empty matrix has determinant 1.
    pub fn det(&self) -> Result<Complex64> {
        let lu = self.lu()?;
        let mut d = Complex64::new(lu.sign, 0.0);
        for k in 0..lu.n {
            d *= lu.a[k * lu.n + k];
        }
        Ok(d)
    }

    /// Determinant that fails with a singularity error instead of returning ~0.
    pub fn det_nonsingular(&self) -> Result<Complex64> {
        let lu = self.lu()?;
        lu.check_regular()?;
        let mut d = Complex64::new(lu.sign, 0.0);
        for k in 0..lu.n {
            d *= lu.a[k * lu.n + k];
        }
        Ok(d)
    }

    pub fn inverse(&self) -> Result<Mat> {
        let lu = self.lu()?;
        lu.check_regular()?;
        let n = lu.n;
        let mut inv = Mat::zeros(n, n);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = if lu.perm[i] == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            lu.solve_in_place(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

struct Lu {
    n: usize,
    a: Vec<Complex64>,
    perm: Vec<usize>,
    sign: f64,
    scale: f64,
    smallest: (usize, f64),
}

impl Lu {
    fn check_regular(&self) -> Result<()> {
        if self.n > 0 && self.smallest.1 < SINGULAR_PIVOT_RTOL * self.scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular {
                pivot: self.smallest.0,
                magnitude: self.smallest.1,
            });
        }
        Ok(())
    }

    fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.a[i * n + k] * b[k];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.a[i * n + k] * b[k];
            }
            b[i] = s / self.a[i * n + i];
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.try_mul(rhs).expect("shape mismatch")
    }
}

/// Cayley transform `(I - P)(I + P)^{-1}`.
pub fn cayley(p: &Mat) -> Result<Mat> {
    let n = p.square_dim()?;
    let id = Mat::identity(n);
    let inv = (&id + p).inverse()?;
    Ok(&(&id - p) * &inv)
}

/// Inverse Cayley map `(I + A)^{-1}(I - A)`.
pub fn cayley_inverse(a: &Mat) -> Result<Mat> {
    let n = a.square_dim()?;
    let id = Mat::identity(n);
    let inv = (&id + a).inverse()?;
    Ok(&inv * &(&id - a))
}

/// Scalar maps available to [`diag_map`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagFn {
    Cosh,
    Sinh,
    Cos,
    Sin,
    Cot,
    Exp,
    NegExp,
}

impl DiagFn {
    pub fn apply(self, x: f64) -> Result<f64> {
        Ok(match self {
            DiagFn::Cosh => x.cosh(),
            DiagFn::Sinh => x.sinh(),
            DiagFn::Cos => x.cos(),
            DiagFn::Sin => x.sin(),
            DiagFn::Exp => x.exp(),
            DiagFn::NegExp => (-x).exp(),
            DiagFn::Cot => {
                let s = x.sin();
                if s.abs() < POLE_TOL {
                    return Err(Error::Pole { value: x });
                }
                x.cos() / s
            }
        })
    }
}

/// Diagonal matrix `diag(f(λ_1), ..., f(λ_n))`.
pub fn diag_map(lambda: &[f64], f: DiagFn) -> Result<Mat> {
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("diagonal argument".into()));
    }
    let vals = lambda.iter().map(|&l| f.apply(l)).collect::<Result<Vec<_>>>()?;
    Ok(Mat::diag_real(&vals))
}

/// Spectral norm of a real matrix through power iteration on `MᵀM`.
pub fn spectral_norm(m: &Mat) -> f64 {
    let n = m.cols();
    if n == 0 {
        return 0.0;
    }
    let mt = m.transpose();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let w = mt.mul_real_vec(&m.mul_real_vec(&v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / norm).collect();
        if (norm - est).abs() <= 1e-15 * norm {
            est = norm;
            break;
        }
        est = norm;
    }
    est.sqrt()
}
