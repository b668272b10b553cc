//! Gaussian noise plus Gaussian random signal.
//!
//! Under H0 each sample is noise `W ~ N(mu0, sigma0_sq)`; under H1 a random
//! signal `S ~ N(mu1, sigma1_sq)` is added, giving `N(mu0 + mu1, sigma0_sq + sigma1_sq)`.
//!
//! Sampling is counter-based: every (seed, hypothesis, trial) triple selects
//! an independent ChaCha stream, so a trial's draws never depend on how trials
//! are batched or scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::stats::quantile_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSignalModel {
    mu0: f64,
    sigma0_sq: f64,
    mu1: f64,
    sigma1_sq: f64,
}

impl GaussianSignalModel {
    pub fn new(mu0: f64, sigma0_sq: f64, mu1: f64, sigma1_sq: f64) -> Result<Self> {
        const OP: &str = "GaussianSignalModel";
        if !mu0.is_finite() || !mu1.is_finite() {
            return Err(domain(OP, "means must be finite"));
        }
        if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
            return Err(domain(
                OP,
                format!("sigma0_sq = {sigma0_sq} must be positive"),
            ));
        }
        // sigma1_sq = 0 would be a known signal; delta divides by it.
        if !(sigma1_sq > 0.0 && sigma1_sq.is_finite()) {
            return Err(domain(
                OP,
                format!("sigma1_sq = {sigma1_sq} must be positive"),
            ));
        }
        Ok(Self {
            mu0,
            sigma0_sq,
            mu1,
            sigma1_sq,
        })
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    /// Same model with the signal mean replaced.
    pub fn with_mu1(&self, mu1: f64) -> Result<Self> {
        Self::new(self.mu0, self.sigma0_sq, mu1, self.sigma1_sq)
    }

    pub fn with_sigma1_sq(&self, sigma1_sq: f64) -> Result<Self> {
        Self::new(self.mu0, self.sigma0_sq, self.mu1, sigma1_sq)
    }

    /// Mean and variance of a single observation under `h`.
    pub fn observation_moments(&self, h: Hypothesis) -> (f64, f64) {
        match h {
            Hypothesis::H0 => (self.mu0, self.sigma0_sq),
            Hypothesis::H1 => (self.mu0 + self.mu1, self.sigma0_sq + self.sigma1_sq),
        }
    }

    /// Total variance under H1.
    pub fn total_var(&self) -> f64 {
        self.sigma0_sq + self.sigma1_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    fn stream_tag(self) -> u64 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

/// `2(sigma1² mu0 + sigma0² mu1) / sigma1²`, the weight on the linear term of
/// the likelihood-ratio statistic.
pub fn delta(model: &GaussianSignalModel) -> f64 {
    2.0 * (model.sigma1_sq * model.mu0 + model.sigma0_sq * model.mu1) / model.sigma1_sq
}

/// `sum x² + delta * sum x`.
pub fn test_statistic(x: &[f64], delta_val: f64) -> Result<f64> {
    const OP: &str = "test_statistic";
    if x.is_empty() {
        return Err(domain(OP, "empty sample"));
    }
    if !delta_val.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(domain(OP, "non-finite input"));
    }
    Ok(statistic_unchecked(x, delta_val))
}

#[inline]
pub(crate) fn statistic_unchecked(x: &[f64], delta_val: f64) -> f64 {
    let (sq, lin) = x
        .iter()
        .fold((0.0, 0.0), |(sq, lin), &v| (sq + v * v, lin + v));
    sq + delta_val * lin
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub hypothesis: Hypothesis,
    pub seed: u64,
}

/// Deterministic stream of standard normal variates for one trial.
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, hypothesis: Hypothesis, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial.wrapping_mul(2).wrapping_add(hypothesis.stream_tag()));
        Self { rng }
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via the inverse CDF.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        quantile_unchecked(self.uniform())
    }
}

/// Fill `buf` with the observations of `trial` under `h`.
pub fn fill_trial(
    model: &GaussianSignalModel,
    h: Hypothesis,
    seed: u64,
    trial: u64,
    buf: &mut [f64],
) {
    let (mean, var) = model.observation_moments(h);
    let sd = var.sqrt();
    let mut stream = TrialStream::new(seed, h, trial);
    for v in buf.iter_mut() {
        *v = mean + sd * stream.standard_normal();
    }
}

/// Draw `n` i.i.d. observations under `h`; trial 0 of the seed's stream family.
pub fn sample(
    model: &GaussianSignalModel,
    h: Hypothesis,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    sample_trial(model, h, n, seed, 0)
}

pub fn sample_trial(
    model: &GaussianSignalModel,
    h: Hypothesis,
    n: usize,
    seed: u64,
    trial: u64,
) -> Result<SampleBatch> {
    if n < 1 {
        return Err(domain("sample", "n must be at least 1"));
    }
    let mut values = vec![0.0; n];
    fill_trial(model, h, seed, trial, &mut values);
    Ok(SampleBatch {
        values,
        hypothesis: h,
        seed,
    })
}
