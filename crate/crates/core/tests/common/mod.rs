//! Random admissible inputs shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiener_tau::matcore::spectral_norm;
use wiener_tau::{AreaSpec, Mat, PhasePoint, ScatteringData, SolitonParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` sorted distinct values in `(lo, hi)`, separated by at least `gap`.
fn sorted(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= gap) {
            return v;
        }
    }
}

/// `p` increasing in `p_range`, `q` decreasing in `q_range`, `m ∈ [0.5, 2]`.
pub fn params_in(rng: &mut ChaCha8Rng, n: usize, p_range: (f64, f64), q_range: (f64, f64)) -> SolitonParams {
    let p = sorted(rng, n, p_range.0, p_range.1, 1e-2);
    let mut q = sorted(rng, n, q_range.0, q_range.1, 1e-2);
    q.reverse();
    let m = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
    SolitonParams::new(m, p, q).unwrap()
}

pub fn params(rng: &mut ChaCha8Rng, n: usize) -> SolitonParams {
    params_in(rng, n, (0.1, 2.0), (-2.0, -0.1))
}

pub fn scattering(rng: &mut ChaCha8Rng, n: usize) -> ScatteringData {
    let eta = sorted(rng, n, 0.3, 1.5, 5e-2);
    let m = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
    ScatteringData::new(eta, m).unwrap()
}

pub fn point(rng: &mut ChaCha8Rng, order: usize, half_width: f64) -> PhasePoint {
    PhasePoint::new((0..order).map(|_| rng.random_range(-half_width..half_width)).collect()).unwrap()
}

/// `λ_l ∈ [0.1, 0.3]` and `A` with `‖A‖₂ = norm`, optionally symmetric.
pub fn area_spec(rng: &mut ChaCha8Rng, n: usize, norm: f64, symmetric: bool) -> AreaSpec {
    let lambda = (0..n).map(|_| rng.random_range(0.1..=0.3)).collect();
    let mut a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if symmetric {
        for i in 0..n {
            for j in 0..i {
                a[i * n + j] = a[j * n + i];
            }
        }
    }
    let s = spectral_norm(&Mat::from_real(n, n, &a).unwrap());
    AreaSpec::new(lambda, a.iter().map(|v| v * norm / s).collect()).unwrap()
}
