//! Brownian increments with per-sample counter-keyed streams, and the
//! chunked parallel ensemble runner built on them.
//!
//! Sample `k` draws from ChaCha8 seeded with the base seed on stream `k`,
//! so its path does not depend on how samples are scheduled. Samples are
//! grouped into fixed chunks whose partial estimates are merged in chunk
//! order; the result is bit-identical for any number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::estimate::RealEstimate;

pub const DEFAULT_STEPS: usize = 4096;
pub const DEFAULT_SAMPLES: usize = 200_000;
pub const MIN_STEPS: usize = 256;
pub const MIN_SAMPLES: usize = 1000;
const CHUNK: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathEnsembleConfig {
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    /// Pair each path with its reflection `W^{l,1} ↦ -W^{l,1}`.
    pub antithetic: bool,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for PathEnsembleConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            antithetic: false,
            workers: None,
        }
    }
}

impl PathEnsembleConfig {
    pub fn new(steps: usize, samples: usize, seed: u64) -> Self {
        Self {
            steps,
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    fn validate_common(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::Config(format!(
                "steps = {} is below the minimum {MIN_STEPS}",
                self.steps
            )));
        }
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!(
                "samples = {} is below the minimum {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if !self.steps.is_power_of_two() {
            return Err(Error::Config(format!(
                "steps = {} must be a power of two",
                self.steps
            )));
        }
        Ok(())
    }

    /// Grid check for functionals piecewise in `blocks` equal time blocks.
    /// Halving must keep the breakpoints on the grid, so `steps` has to be a
    /// multiple of `2 * blocks`; powers of two are not required.
    pub fn validate_blocks(&self, blocks: usize) -> Result<()> {
        self.validate_common()?;
        if blocks == 0 || !self.steps.is_multiple_of(2 * blocks) {
            return Err(Error::Grid(format!(
                "steps = {} is not a multiple of 2 x {blocks} blocks",
                self.steps
            )));
        }
        Ok(())
    }
}

/// Brownian increments on `[0, 1]`, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    dim: usize,
    steps: usize,
    dw: Vec<f64>,
}

impl Path {
    pub fn zeros(dim: usize, steps: usize) -> Self {
        Self {
            dim,
            steps,
            dw: vec![0.0; dim * steps],
        }
    }

    pub fn from_increments(dim: usize, steps: usize, dw: Vec<f64>) -> Result<Self> {
        if dw.len() != dim * steps {
            return Err(Error::Grid(format!(
                "{} increments do not fill {dim} components x {steps} steps",
                dw.len()
            )));
        }
        Ok(Self { dim, steps, dw })
    }

    /// Sample `index` of the ensemble keyed by `seed`.
    pub fn sample(dim: usize, steps: usize, seed: u64, index: u64) -> Self {
        let mut p = Self::zeros(dim, steps);
        p.fill(seed, index);
        p
    }

    pub fn fill(&mut self, seed: u64, index: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let s = (1.0 / self.steps as f64).sqrt();
        for v in self.dw.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = s * z;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn increments(&self, c: usize) -> &[f64] {
        &self.dw[c * self.steps..(c + 1) * self.steps]
    }

    pub fn endpoint(&self, c: usize) -> f64 {
        self.increments(c).iter().sum()
    }

    /// Value of component `c` at grid time `k / steps`.
    pub fn value_at(&self, c: usize, k: usize) -> f64 {
        self.increments(c)[..k].iter().sum()
    }

    /// Same path on the grid with half as many steps.
    pub fn coarsen(&self) -> Path {
        let steps = self.steps / 2;
        let mut dw = Vec::with_capacity(self.dim * steps);
        for c in 0..self.dim {
            dw.extend(self.increments(c).chunks_exact(2).map(|p| p[0] + p[1]));
        }
        Path {
            dim: self.dim,
            steps,
            dw,
        }
    }

    /// Negates the even components (the first of each planar pair).
    pub fn reflect(&mut self) {
        for c in (0..self.dim).step_by(2) {
            let s = self.steps;
            self.dw[c * s..(c + 1) * s].iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Swaps components `a` and `b`.
    pub fn swap_components(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.steps;
        for k in 0..s {
            self.dw.swap(a * s + k, b * s + k);
        }
    }
}

/// Runs `f` on every sample path and averages its `outputs` real outputs.
///
/// With antithetic sampling each sample is the mean of the outputs on the
/// path and on its reflection.
pub fn run_ensemble<F>(
    config: &PathEnsembleConfig,
    dim: usize,
    outputs: usize,
    f: F,
) -> Result<Vec<RealEstimate>>
where
    F: Fn(&Path, &mut [f64]) + Sync,
{
    let work = || {
        let chunks = config.samples.div_ceil(CHUNK);
        let partials: Vec<Vec<RealEstimate>> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![RealEstimate::default(); outputs];
                let mut path = Path::zeros(dim, config.steps);
                let mut out = vec![0.0; outputs];
                let mut mirror = vec![0.0; outputs];
                let end = ((chunk + 1) * CHUNK).min(config.samples);
                for k in chunk * CHUNK..end {
                    path.fill(config.seed, k as u64);
                    f(&path, &mut out);
                    if config.antithetic {
                        path.reflect();
                        f(&path, &mut mirror);
                        for (o, m) in out.iter_mut().zip(&mirror) {
                            *o = 0.5 * (*o + m);
                        }
                    }
                    for (a, &o) in acc.iter_mut().zip(&out) {
                        a.push(o);
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![RealEstimate::default(); outputs];
        for part in &partials {
            for (t, p) in total.iter_mut().zip(part) {
                t.merge(p);
            }
        }
        total
    };
    match config.workers {
        None => Ok(work()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Outputs of [`brownian_moments`]: per component, `E[W_1]` and `E[W_1^2]`.
#[derive(Clone, Debug)]
pub struct BrownianMoments {
    pub mean: Vec<RealEstimate>,
    pub second: Vec<RealEstimate>,
}

pub fn brownian_moments(dim: usize, config: &PathEnsembleConfig) -> Result<BrownianMoments> {
    config.validate()?;
    let est = run_ensemble(config, dim, 2 * dim, |path, out| {
        for c in 0..dim {
            let w = path.endpoint(c);
            out[2 * c] = w;
            out[2 * c + 1] = w * w;
        }
    })?;
    Ok(BrownianMoments {
        mean: est.iter().step_by(2).copied().collect(),
        second: est.iter().skip(1).step_by(2).copied().collect(),
    })
}
