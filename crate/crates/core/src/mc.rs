//! Monte Carlo oracle for the closed-form quantities.
//!
//! Every trial draws from its own counter-based stream keyed by
//! (seed, hypothesis, trial index). Trials are grouped into batches only for
//! scheduling; batch results are exact integer counts or are reduced in trial
//! order, so estimates do not depend on `batch_size` or on thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{general_mu0_moments, raw_threshold, DetectorSpec, OperatingPoint};
use crate::efficiency::search_min_n;
use crate::error::{domain, Result};
use crate::signal::{delta, fill_trial, statistic_unchecked, GaussianSignalModel, Hypothesis};
use crate::stats::cdf_unchecked;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCConfig {
    trials: u64,
    seed: u64,
    batch_size: u64,
}

impl MCConfig {
    pub fn new(trials: u64, seed: u64, batch_size: u64) -> Result<Self> {
        if trials < 100 {
            return Err(domain("MCConfig", "at least 100 trials are required"));
        }
        if batch_size < 1 || batch_size > trials {
            return Err(domain("MCConfig", "batch_size must be in 1..=trials"));
        }
        Ok(Self {
            trials,
            seed,
            batch_size,
        })
    }

    /// Batches of at most 1000 trials.
    pub fn with_default_batches(trials: u64, seed: u64) -> Result<Self> {
        Self::new(trials, seed, trials.min(1000))
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    fn batches(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.trials {
            let end = (start + self.batch_size).min(self.trials);
            out.push((start, end));
            start = end;
        }
        out
    }
}

/// A binomial proportion with its standard error and 99% normal interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl MCEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let t = trials as f64;
        let p = hits as f64 / t;
        let stderr = (p * (1.0 - p) / t).sqrt();
        Self {
            estimate: p,
            stderr,
            ci_low: (p - Z_99 * stderr).max(0.0),
            ci_high: (p + Z_99 * stderr).min(1.0),
            trials,
        }
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Evaluate `detector`'s statistic on every trial, in trial order.
pub fn simulate_statistics(
    model: &GaussianSignalModel,
    detector: &DetectorSpec,
    h: Hypothesis,
    n: usize,
    cfg: &MCConfig,
) -> Vec<f64> {
    cfg.batches()
        .into_par_iter()
        .map(|(start, end)| {
            let mut buf = vec![0.0; n];
            (start..end)
                .map(|t| {
                    fill_trial(model, h, cfg.seed, t, &mut buf);
                    detector.statistic(&buf, model)
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

fn exceedances(
    model: &GaussianSignalModel,
    detector: &DetectorSpec,
    h: Hypothesis,
    n: usize,
    threshold: f64,
    cfg: &MCConfig,
) -> u64 {
    cfg.batches()
        .into_par_iter()
        .map(|(start, end)| {
            let mut buf = vec![0.0; n];
            (start..end)
                .filter(|&t| {
                    fill_trial(model, h, cfg.seed, t, &mut buf);
                    detector.statistic(&buf, model) > threshold
                })
                .count() as u64
        })
        .sum()
}

/// Fractions of H0 and H1 trials whose statistic exceeds `threshold`
/// (raw statistic scale).
pub fn empirical_pf_pd(
    model: &GaussianSignalModel,
    detector: &DetectorSpec,
    n: usize,
    threshold: f64,
    cfg: &MCConfig,
) -> Result<(MCEstimate, MCEstimate)> {
    if n < 1 {
        return Err(domain("empirical_pf_pd", "n must be at least 1"));
    }
    if threshold.is_nan() {
        return Err(domain("empirical_pf_pd", "threshold is NaN"));
    }
    let pf = exceedances(model, detector, Hypothesis::H0, n, threshold, cfg);
    let pd = exceedances(model, detector, Hypothesis::H1, n, threshold, cfg);
    Ok((
        MCEstimate::from_counts(pf, cfg.trials),
        MCEstimate::from_counts(pd, cfg.trials),
    ))
}

/// Empirical detection probability at `n` with the closed-form α threshold.
pub fn empirical_pd_at(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    n: u64,
    alpha: f64,
    cfg: &MCConfig,
) -> Result<MCEstimate> {
    let t = raw_threshold(detector, model, n, alpha)?;
    let hits = exceedances(model, detector, Hypothesis::H1, n as usize, t, cfg);
    Ok(MCEstimate::from_counts(hits, cfg.trials))
}

/// Smallest N whose simulated P_D reaches β, thresholds set from the
/// closed-form false-alarm constraint. Trials reuse the same streams at
/// every N, so the samples at N are a prefix of those at N + 1.
pub fn empirical_required_n(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    cfg: &MCConfig,
    n_max: u64,
) -> Result<u64> {
    let alpha = op_point.alpha();
    search_min_n(
        |n| Ok(empirical_pd_at(detector, model, n, alpha, cfg)?.estimate),
        op_point.beta(),
        n_max,
    )
}

/// Sample moments of a simulated statistic against reference moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentAudit {
    pub formula_mean: f64,
    pub formula_var: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
    /// |sample mean − formula mean| / formula sd.
    pub mean_gap: f64,
    /// |sample var − formula var| / formula var.
    pub var_gap: f64,
    /// (sample mean − formula mean) in units of the sample mean's standard error.
    pub mean_z: f64,
    /// (sample var − formula var) in units of the sample variance's standard error.
    pub var_z: f64,
    /// Kolmogorov distance between the sample and N(formula mean, formula var).
    pub max_cdf_gap: f64,
}

impl MomentAudit {
    pub fn from_samples(mut xs: Vec<f64>, formula_mean: f64, formula_var: f64) -> Self {
        let t = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / t;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), &x| {
            let d = x - mean;
            let d2 = d * d;
            (m2 + d2, m4 + d2 * d2)
        });
        let var = m2 / (t - 1.0);
        let m4 = m4 / t;
        let pop_var = m2 / t;
        let se_mean = (var / t).sqrt();
        let se_var = ((m4 - pop_var * pop_var) / t).sqrt();

        let sd = formula_var.sqrt();
        xs.sort_by(f64::total_cmp);
        let max_cdf_gap = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf_unchecked((x - formula_mean) / sd);
                let below = i as f64 / t;
                let above = (i + 1) as f64 / t;
                (f - below).abs().max((above - f).abs())
            })
            .fold(0.0, f64::max);

        Self {
            formula_mean,
            formula_var,
            sample_mean: mean,
            sample_var: var,
            mean_gap: (mean - formula_mean).abs() / sd,
            var_gap: (var - formula_var).abs() / formula_var,
            mean_z: (mean - formula_mean) / se_mean,
            var_z: (var - formula_var) / se_var,
            max_cdf_gap,
        }
    }

    /// Both moments within `k` standard errors.
    pub fn within(&self, k: f64) -> bool {
        self.mean_z.abs() <= k && self.var_z.abs() <= k
    }
}

/// Audit of the scaled-statistic approximations under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximationAudit {
    pub n: u64,
    pub trials: u64,
    /// `T(x)/sigma0²` under H0.
    pub h0: MomentAudit,
    /// `T(x)/(sigma0² + sigma1²)` under H1.
    pub h1: MomentAudit,
}

impl ApproximationAudit {
    pub fn max_cdf_gap(&self) -> f64 {
        self.h0.max_cdf_gap.max(self.h1.max_cdf_gap)
    }
}

/// Simulate the likelihood-ratio statistic under both hypotheses and compare
/// it against the general-μ0 Gaussian-limit moments.
pub fn approximation_audit(
    model: &GaussianSignalModel,
    n: u64,
    cfg: &MCConfig,
) -> Result<ApproximationAudit> {
    if n < 2 {
        return Err(domain("approximation_audit", "n must be at least 2"));
    }
    let g = general_mu0_moments(model, n)?;
    let d = delta(model);
    let scaled = |h: Hypothesis, scale: f64| -> Vec<f64> {
        cfg.batches()
            .into_par_iter()
            .map(|(start, end)| {
                let mut buf = vec![0.0; n as usize];
                (start..end)
                    .map(|t| {
                        fill_trial(model, h, cfg.seed, t, &mut buf);
                        statistic_unchecked(&buf, d) / scale
                    })
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect()
    };
    let h0 = MomentAudit::from_samples(
        scaled(Hypothesis::H0, model.sigma0_sq()),
        g.h0_mean,
        g.h0_var,
    );
    let h1 = MomentAudit::from_samples(
        scaled(Hypothesis::H1, model.total_var()),
        g.h1_mean,
        g.h1_var,
    );
    Ok(ApproximationAudit {
        n,
        trials: cfg.trials,
        h0,
        h1,
    })
}

/// Compare a detector's own moment maps against simulation under `h`.
pub fn detector_moment_audit(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    h: Hypothesis,
    n: u64,
    cfg: &MCConfig,
) -> Result<MomentAudit> {
    let nf = n as f64;
    let (mean, var) = match h {
        Hypothesis::H0 => (detector.mean_h0(nf, model)?, detector.var_h0(nf, model)?),
        Hypothesis::H1 => (detector.mean_h1(nf, model)?, detector.var_h1(nf, model)?),
    };
    let xs = simulate_statistics(model, detector, h, n as usize, cfg);
    Ok(MomentAudit::from_samples(xs, mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{energy_detector, np_random_signal_detector, threshold_for_pf};

    fn model(mu0: f64, s0: f64, mu1: f64, s1: f64) -> GaussianSignalModel {
        GaussianSignalModel::new(mu0, s0, mu1, s1).unwrap()
    }

    #[test]
    fn config_invariants() {
        assert!(MCConfig::new(99, 1, 10).is_err());
        assert!(MCConfig::new(100, 1, 0).is_err());
        assert!(MCConfig::new(100, 1, 101).is_err());
        let c = MCConfig::new(1050, 1, 100).unwrap();
        let b = c.batches();
        assert_eq!(b.len(), 11);
        assert_eq!(b.last(), Some(&(1000, 1050)));
    }

    #[test]
    fn estimate_interval() {
        let e = MCEstimate::from_counts(100, 1000);
        assert_eq!(e.estimate, 0.1);
        assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high);
        let zero = MCEstimate::from_counts(0, 1000);
        assert_eq!((zero.ci_low, zero.ci_high), (0.0, 0.0));
    }

    #[test]
    fn extreme_thresholds() {
        let m = model(0.0, 1.0, 0.3, 1.0);
        let cfg = MCConfig::new(500, 3, 64).unwrap();
        let np = np_random_signal_detector();
        let (pf, _) = empirical_pf_pd(&m, &np, 20, 1e308, &cfg).unwrap();
        assert_eq!(pf.estimate, 0.0);
        let (_, pd) = empirical_pf_pd(&m, &np, 20, -1e308, &cfg).unwrap();
        assert_eq!(pd.estimate, 1.0);
    }

    #[test]
    fn batch_size_does_not_change_estimates() {
        let m = model(0.0, 1.0, 0.2, 0.5);
        let np = np_random_signal_detector();
        let t = threshold_for_pf(&m, 30, 0.1).unwrap() / m.sigma1_sq();
        let a = empirical_pf_pd(&m, &np, 30, t, &MCConfig::new(3000, 11, 3000).unwrap()).unwrap();
        let b = empirical_pf_pd(&m, &np, 30, t, &MCConfig::new(3000, 11, 7).unwrap()).unwrap();
        assert_eq!(a, b);
        let xa = simulate_statistics(
            &m,
            &np,
            Hypothesis::H1,
            5,
            &MCConfig::new(300, 2, 300).unwrap(),
        );
        let xb = simulate_statistics(
            &m,
            &np,
            Hypothesis::H1,
            5,
            &MCConfig::new(300, 2, 13).unwrap(),
        );
        assert_eq!(xa, xb);
    }

    #[test]
    fn raising_threshold_never_raises_pf() {
        let m = model(0.0, 1.0, 0.0, 1.0);
        let e = energy_detector();
        let cfg = MCConfig::with_default_batches(2000, 5).unwrap();
        let mut prev = 1.0;
        for t in [0.0, 5.0, 10.0, 15.0, 20.0, 40.0] {
            let (pf, _) = empirical_pf_pd(&m, &e, 10, t, &cfg).unwrap();
            assert!(pf.estimate <= prev);
            prev = pf.estimate;
        }
    }

    #[test]
    fn empirical_n_trivial_target() {
        let np = np_random_signal_detector();
        let m = model(0.0, 1.0, 0.0, 1.0);
        let op = OperatingPoint::new(0.1, 0.1001).unwrap();
        let cfg = MCConfig::with_default_batches(20_000, 1).unwrap();
        assert_eq!(empirical_required_n(&np, &m, &op, &cfg, 1000).unwrap(), 1);
    }

    #[test]
    fn empirical_n_is_deterministic() {
        let np = np_random_signal_detector();
        let m = model(0.0, 1.0, 0.1, 0.2);
        let op = OperatingPoint::new(0.1, 0.8).unwrap();
        let cfg = MCConfig::with_default_batches(2000, 7).unwrap();
        let a = empirical_required_n(&np, &m, &op, &cfg, 10_000).unwrap();
        let b = empirical_required_n(&np, &m, &op, &cfg, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audit_requires_two_samples() {
        let cfg = MCConfig::with_default_batches(100, 1).unwrap();
        assert!(approximation_audit(&model(0.0, 1.0, 0.0, 1.0), 1, &cfg).is_err());
    }

    #[test]
    fn moment_audit_arithmetic() {
        let a = MomentAudit::from_samples(vec![1.0, 2.0, 3.0, 4.0], 2.5, 1.0);
        assert_eq!(a.sample_mean, 2.5);
        assert!((a.sample_var - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.mean_gap, 0.0);
        assert!((a.var_gap - 2.0 / 3.0).abs() < 1e-15);
        assert!(a.max_cdf_gap > 0.0 && a.max_cdf_gap < 1.0);
    }
}
