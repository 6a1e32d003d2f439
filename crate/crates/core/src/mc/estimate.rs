//! Mergeable mean/variance accumulators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Running mean and centred second moment (Welford; Chan et al. for merges).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealEstimate {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RealEstimate {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RealEstimate) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        let wb = other.count as f64 / n;
        self.mean += d * wb;
        self.m2 += other.m2 + d * d * self.count as f64 * wb;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Complex Monte Carlo mean with separate errors for each component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: RealEstimate,
    pub im: RealEstimate,
}

impl ComplexEstimate {
    pub fn from_parts(re: RealEstimate, im: RealEstimate) -> Self {
        Self { re, im }
    }

    pub fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, other: &ComplexEstimate) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    pub fn stderr_re(&self) -> f64 {
        self.re.stderr()
    }

    pub fn stderr_im(&self) -> f64 {
        self.im.stderr()
    }

    pub fn count(&self) -> u64 {
        self.re.count
    }

    /// Component z-scores against `target`.
    pub fn z_scores(&self, target: Complex64) -> (f64, f64) {
        (
            z_score(self.re.mean, target.re, self.stderr_re()),
            z_score(self.im.mean, target.im, self.stderr_im()),
        )
    }

    /// Larger of the two component errors relative to `|target|`.
    pub fn relative_stderr(&self, target: Complex64) -> f64 {
        self.stderr_re().max(self.stderr_im()) / target.norm()
    }
}

/// Differences below this (relative to the values, or absolute below 1)
/// count as rounding when the standard error is zero.
const ROUNDING_FLOOR: f64 = 1e-12;

/// `(estimate - target) / stderr`. With zero error, a match to within
/// rounding scores 0 (e.g. a real-valued estimator against a target whose
/// imaginary part is rounding noise).
pub fn z_score(estimate: f64, target: f64, stderr: f64) -> f64 {
    let d = estimate - target;
    if d == 0.0 {
        0.0
    } else if stderr == 0.0 {
        if d.abs() <= ROUNDING_FLOOR * estimate.abs().max(target.abs()).max(1.0) {
            return 0.0;
        }
        f64::INFINITY.copysign(d)
    } else {
        d / stderr
    }
}

/// z-score of the difference of two independent estimates.
pub fn z_between(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    z_score(a - b, 0.0, sa.hypot(sb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moments_of_small_sample() {
        let mut e = RealEstimate::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            e.push(x);
        }
        assert_eq!(e.mean, 2.5);
        assert!((e.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((e.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(1.0, 1.0, 0.0), 0.0);
        assert_eq!(z_score(2.0, 1.0, 0.0), f64::INFINITY);
        assert_eq!(z_score(2.0, 1.0, 0.5), 2.0);
        assert_eq!(z_score(0.0, -1e-18, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec(-10.0f64..10.0, 2..60), split in 0usize..60) {
            let split = split.min(xs.len());
            let mut all = RealEstimate::default();
            xs.iter().for_each(|&x| all.push(x));
            let (mut a, mut b) = (RealEstimate::default(), RealEstimate::default());
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            a.merge(&b);
            prop_assert_eq!(a.count, all.count);
            prop_assert!((a.mean - all.mean).abs() < 1e-12);
            prop_assert!((a.variance() - all.variance()).abs() < 1e-9 * all.variance().max(1.0));
        }

        #[test]
        fn merge_is_associative(xs in prop::collection::vec(-5.0f64..5.0, 3..40)) {
            let k = xs.len() / 3;
            let mut parts = [RealEstimate::default(); 3];
            for (i, chunk) in [&xs[..k], &xs[k..2 * k], &xs[2 * k..]].iter().enumerate() {
                chunk.iter().for_each(|&x| parts[i].push(x));
            }
            let mut left = parts[0];
            left.merge(&parts[1]);
            left.merge(&parts[2]);
            let mut bc = parts[1];
            bc.merge(&parts[2]);
            let mut right = parts[0];
            right.merge(&bc);
            prop_assert_eq!(left.count, right.count);
            prop_assert!((left.mean - right.mean).abs() < 1e-12);
            prop_assert!((left.variance() - right.variance()).abs() < 1e-10 * left.variance().max(1.0));
        }
    }
}
