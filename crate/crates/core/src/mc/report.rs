//! JSON verification reports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mc::estimate::{z_between, ComplexEstimate};
use crate::mc::paths::PathEnsembleConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub n: usize,
    pub spec_digest: String,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub target_re: f64,
    pub target_im: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    pub wall_ms: u64,
    pub passed: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// First 16 hex digits of the SHA-256 of the spec's JSON form.
pub fn spec_digest<T: Serialize>(spec: &T) -> String {
    let json = serde_json::to_vec(spec).expect("specs serialize");
    let mut hex = hex::encode(Sha256::digest(&json));
    hex.truncate(16);
    hex
}

impl VerificationReport {
    /// Monte Carlo check; passes when both `|z| ≤ z_max`.
    #[allow(clippy::too_many_arguments)]
    pub fn monte_carlo<T: Serialize>(
        check_name: &str,
        n: usize,
        spec: &T,
        estimate: &ComplexEstimate,
        target: Complex64,
        config: &PathEnsembleConfig,
        z_max: f64,
        warnings: Vec<String>,
    ) -> Self {
        let (z_re, z_im) = estimate.z_scores(target);
        let m = estimate.mean();
        Self {
            check_name: check_name.into(),
            n,
            spec_digest: spec_digest(spec),
            estimate_re: m.re,
            estimate_im: m.im,
            stderr_re: estimate.stderr_re(),
            stderr_im: estimate.stderr_im(),
            target_re: target.re,
            target_im: target.im,
            z_re,
            z_im,
            samples: config.samples,
            steps: config.steps,
            seed: config.seed,
            wall_ms: 0,
            passed: z_re.abs() <= z_max && z_im.abs() <= z_max,
            warnings,
        }
    }

    /// Two independent real estimates against each other; `target_*` holds
    /// the second estimate and `z_re` the z-score of their difference.
    #[allow(clippy::too_many_arguments)]
    pub fn comparison<T: Serialize>(
        check_name: &str,
        n: usize,
        spec: &T,
        (a, sa): (f64, f64),
        (b, sb): (f64, f64),
        config: &PathEnsembleConfig,
        z_max: f64,
        warnings: Vec<String>,
    ) -> Self {
        let z = z_between(a, sa, b, sb);
        Self {
            check_name: check_name.into(),
            n,
            spec_digest: spec_digest(spec),
            estimate_re: a,
            estimate_im: 0.0,
            stderr_re: sa,
            stderr_im: 0.0,
            target_re: b,
            target_im: 0.0,
            z_re: z,
            z_im: 0.0,
            samples: config.samples,
            steps: config.steps,
            seed: config.seed,
            wall_ms: 0,
            passed: z.abs() <= z_max,
            warnings,
        }
    }

    /// Deterministic check; passes when the relative error is within `tol`.
    /// The relative error is stored in `z_re`.
    pub fn deterministic<T: Serialize>(
        check_name: &str,
        n: usize,
        spec: &T,
        value: Complex64,
        target: Complex64,
        tol: f64,
    ) -> Self {
        let rel = (value - target).norm() / target.norm().max(f64::MIN_POSITIVE);
        Self {
            check_name: check_name.into(),
            n,
            spec_digest: spec_digest(spec),
            estimate_re: value.re,
            estimate_im: value.im,
            stderr_re: 0.0,
            stderr_im: 0.0,
            target_re: target.re,
            target_im: target.im,
            z_re: rel,
            z_im: 0.0,
            samples: 0,
            steps: 0,
            seed: 0,
            wall_ms: 0,
            passed: rel <= tol,
            warnings: vec![],
        }
    }

    pub fn with_wall_ms(mut self, ms: u64) -> Self {
        self.wall_ms = ms;
        self
    }

    /// Equality ignoring `wall_ms`.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_ms = other.wall_ms;
        a == *other
    }
}
