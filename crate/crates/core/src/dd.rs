//! Small dense real matrices in double-double arithmetic, for determinants
//! that cancel badly in `f64` (ill-conditioned Cauchy blocks).

use std::ops::{Add, Mul, Sub};

use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// `a / b` by long division on the leading parts; `TwoFloat`'s own quotient
/// drops the low word for some operands.
pub(crate) fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let q3 = (r - b * q2).hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

pub(crate) fn to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

/// Square, row-major.
#[derive(Clone, Debug)]
pub(crate) struct DdMat {
    n: usize,
    a: Vec<TwoFloat>,
}

impl DdMat {
    pub(crate) fn from_fn(n: usize, f: impl Fn(usize, usize) -> TwoFloat) -> Self {
        Self {
            n,
            a: (0..n * n).map(|k| f(k / n, k % n)).collect(),
        }
    }

    pub(crate) fn identity(n: usize) -> Self {
        Self::diag(&vec![TwoFloat::from(1.0); n])
    }

    pub(crate) fn diag(d: &[TwoFloat]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { TwoFloat::from(0.0) })
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> TwoFloat {
        self.a[i * self.n + j]
    }

    /// Determinant by partially pivoted elimination.
    pub(crate) fn det(&self) -> Result<TwoFloat> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut det = TwoFloat::from(1.0);
        for c in 0..n {
            let r = pivot_row(&a, n, c);
            let pivot = a[r * n + c];
            if pivot.hi() == 0.0 {
                return Err(Error::Singular { pivot: c, magnitude: 0.0 });
            }
            if r != c {
                for k in 0..n {
                    a.swap(r * n + k, c * n + k);
                }
                det = -det;
            }
            det *= pivot;
            for i in (c + 1)..n {
                let f = div(a[i * n + c], pivot);
                for k in (c + 1)..n {
                    let v = a[c * n + k];
                    a[i * n + k] -= f * v;
                }
            }
        }
        Ok(det)
    }

    /// Inverse by Gauss–Jordan elimination.
    pub(crate) fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Self::identity(n).a;
        for c in 0..n {
            let r = pivot_row(&a, n, c);
            if a[r * n + c].hi() == 0.0 {
                return Err(Error::Singular { pivot: c, magnitude: 0.0 });
            }
            for k in 0..n {
                a.swap(r * n + k, c * n + k);
                inv.swap(r * n + k, c * n + k);
            }
            let pivot = a[c * n + c];
            for k in 0..n {
                a[c * n + k] = div(a[c * n + k], pivot);
                inv[c * n + k] = div(inv[c * n + k], pivot);
            }
            for i in (0..n).filter(|&i| i != c) {
                let f = a[i * n + c];
                for k in 0..n {
                    let (u, v) = (a[c * n + k], inv[c * n + k]);
                    a[i * n + k] -= f * u;
                    inv[i * n + k] -= f * v;
                }
            }
        }
        Ok(Self { n, a: inv })
    }
}

fn pivot_row(a: &[TwoFloat], n: usize, c: usize) -> usize {
    (c..n)
        .max_by(|&x, &y| a[x * n + c].hi().abs().total_cmp(&a[y * n + c].hi().abs()))
        .expect("non-empty column")
}

impl Add for &DdMat {
    type Output = DdMat;
    fn add(self, o: &DdMat) -> DdMat {
        DdMat::from_fn(self.n, |i, j| self.get(i, j) + o.get(i, j))
    }
}

impl Sub for &DdMat {
    type Output = DdMat;
    fn sub(self, o: &DdMat) -> DdMat {
        DdMat::from_fn(self.n, |i, j| self.get(i, j) - o.get(i, j))
    }
}

impl Mul for &DdMat {
    type Output = DdMat;
    fn mul(self, o: &DdMat) -> DdMat {
        DdMat::from_fn(self.n, |i, j| {
            (0..self.n).fold(TwoFloat::from(0.0), |acc, k| acc + self.get(i, k) * o.get(k, j))
        })
    }
}
