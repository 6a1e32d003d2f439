//! Gauss–Hermite quadrature for Gaussian averages of closed forms.

use std::f64::consts::PI;

/// Nodes and weights for `∫ f(x) e^{-x²} dx`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        // standard initial guesses for the largest roots first
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[f(X, Y)]` for independent standard normals.
pub fn gaussian_expectation_2d(order: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(order);
    let s = 2f64.sqrt();
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (xj, wj) in x.iter().zip(&w) {
            total += wi * wj * f(s * xi, s * xj);
        }
    }
    total / PI
}

/// `E[f(X)]` for a standard normal.
pub fn gaussian_expectation(order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(order);
    let s = 2f64.sqrt();
    x.iter().zip(&w).map(|(xi, wi)| wi * f(s * xi)).sum::<f64>() / PI.sqrt()
}
