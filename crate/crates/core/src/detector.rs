//! Closed-form detector performance in the Gaussian limit.
//!
//! A [`DetectorSpec`] pairs a test statistic with the mean and variance of
//! that statistic under each hypothesis as functions of the sample size.
//! Sample sizes are carried as `f64` so that the same moment maps serve the
//! integer search and its continuous relaxation.
//!
//! The random-signal NP detector uses the moment formulas of the μ0 = 0
//! specialization. They are the formulas the bridge between RE and ARE is
//! built on, and they are exact only at μ1 = 0; the Monte Carlo oracle
//! measures how far they drift elsewhere.

use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::signal::{delta, statistic_unchecked, GaussianSignalModel};
use crate::stats::{q_unchecked, upper_quantile};

pub type StatisticFn = Arc<dyn Fn(&[f64], &GaussianSignalModel) -> f64 + Send + Sync>;
pub type MomentFn = Arc<dyn Fn(f64, &GaussianSignalModel) -> Result<f64> + Send + Sync>;

/// An asymptotically Gaussian test statistic and its four moment maps.
#[derive(Clone)]
pub struct DetectorSpec {
    name: String,
    statistic: StatisticFn,
    mean_h0: MomentFn,
    mean_h1: MomentFn,
    var_h0: MomentFn,
    var_h1: MomentFn,
}

impl fmt::Debug for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DetectorSpec")
            .field("name", &self.name)
            .finish()
    }
}

/// Means and standard deviations of a statistic at one (N, model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticMoments {
    pub mean_h0: f64,
    pub mean_h1: f64,
    pub sd_h0: f64,
    pub sd_h1: f64,
}

impl StatisticMoments {
    /// T_σ0 / T_σ1.
    pub fn sd_ratio(&self) -> f64 {
        self.sd_h0 / self.sd_h1
    }
}

impl DetectorSpec {
    pub fn new(
        name: impl Into<String>,
        statistic: StatisticFn,
        mean_h0: MomentFn,
        mean_h1: MomentFn,
        var_h0: MomentFn,
        var_h1: MomentFn,
    ) -> Self {
        Self {
            name: name.into(),
            statistic,
            mean_h0,
            mean_h1,
            var_h0,
            var_h1,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn statistic(&self, x: &[f64], model: &GaussianSignalModel) -> f64 {
        (self.statistic)(x, model)
    }

    pub fn mean_h0(&self, n: f64, model: &GaussianSignalModel) -> Result<f64> {
        finite("mean_h0", n, (self.mean_h0)(n, model)?)
    }

    pub fn mean_h1(&self, n: f64, model: &GaussianSignalModel) -> Result<f64> {
        finite("mean_h1", n, (self.mean_h1)(n, model)?)
    }

    pub fn var_h0(&self, n: f64, model: &GaussianSignalModel) -> Result<f64> {
        positive("var_h0", n, (self.var_h0)(n, model)?)
    }

    pub fn var_h1(&self, n: f64, model: &GaussianSignalModel) -> Result<f64> {
        positive("var_h1", n, (self.var_h1)(n, model)?)
    }

    pub fn moments(&self, n: f64, model: &GaussianSignalModel) -> Result<StatisticMoments> {
        Ok(StatisticMoments {
            mean_h0: self.mean_h0(n, model)?,
            mean_h1: self.mean_h1(n, model)?,
            sd_h0: self.var_h0(n, model)?.sqrt(),
            sd_h1: self.var_h1(n, model)?.sqrt(),
        })
    }
}

fn finite(op: &'static str, n: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            op,
            abscissa: n,
            value: v,
        })
    }
}

fn positive(op: &'static str, n: f64, v: f64) -> Result<f64> {
    let v = finite(op, n, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(domain(
            op,
            format!("variance {v} is not positive at N = {n}"),
        ))
    }
}

fn require_zero_noise_mean(op: &'static str, model: &GaussianSignalModel) -> Result<()> {
    if model.mu0() != 0.0 {
        return Err(domain(
            op,
            format!("moment formulas assume mu0 = 0, got {}", model.mu0()),
        ));
    }
    Ok(())
}

/// Likelihood-ratio detector for a Gaussian random signal,
/// `T(x) = sum x² + delta * sum x`.
pub fn np_random_signal_detector() -> DetectorSpec {
    DetectorSpec::new(
        "np",
        Arc::new(|x, m| statistic_unchecked(x, delta(m))),
        Arc::new(|n, m| {
            require_zero_noise_mean("np.mean_h0", m)?;
            Ok(n * m.sigma0_sq())
        }),
        Arc::new(|n, m| {
            require_zero_noise_mean("np.mean_h1", m)?;
            let v = m.total_var();
            let mu1 = m.mu1();
            Ok(v * (n + n * mu1 * mu1 + n * mu1 * delta(m) / v))
        }),
        Arc::new(|n, m| {
            require_zero_noise_mean("np.var_h0", m)?;
            let s0 = m.sigma0_sq();
            let d = delta(m);
            Ok(s0 * s0 * (2.0 * n + n * d * d / s0))
        }),
        Arc::new(|n, m| {
            require_zero_noise_mean("np.var_h1", m)?;
            let v = m.total_var();
            let mu1 = m.mu1();
            let d = delta(m);
            Ok(v * v * (2.0 * (n + 2.0 * n * mu1 * mu1) + n * d * d / v))
        }),
    )
}

/// `T(x) = sum x²`.
pub fn energy_detector() -> DetectorSpec {
    DetectorSpec::new(
        "energy",
        Arc::new(|x, _| statistic_unchecked(x, 0.0)),
        Arc::new(|n, m| Ok(n * m.sigma0_sq())),
        Arc::new(|n, m| Ok(n * (m.total_var() + m.mu1() * m.mu1()))),
        Arc::new(|n, m| Ok(2.0 * n * m.sigma0_sq() * m.sigma0_sq())),
        Arc::new(|n, m| {
            let v = m.total_var();
            Ok(2.0 * n * v * v + 4.0 * n * m.mu1() * m.mu1() * v)
        }),
    )
}

/// `T(x) = sum x`, the known-signal matched filter.
pub fn linear_detector() -> DetectorSpec {
    DetectorSpec::new(
        "linear",
        Arc::new(|x, _| x.iter().sum()),
        Arc::new(|n, m| Ok(n * m.mu0())),
        Arc::new(|n, m| Ok(n * (m.mu0() + m.mu1()))),
        Arc::new(|n, m| Ok(n * m.sigma0_sq())),
        Arc::new(|n, m| Ok(n * m.total_var())),
    )
}

/// Names of the built-in detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinDetector {
    Np,
    Energy,
    Linear,
}

impl BuiltinDetector {
    pub fn spec(self) -> DetectorSpec {
        match self {
            BuiltinDetector::Np => np_random_signal_detector(),
            BuiltinDetector::Energy => energy_detector(),
            BuiltinDetector::Linear => linear_detector(),
        }
    }

    pub fn all() -> [BuiltinDetector; 3] {
        [
            BuiltinDetector::Np,
            BuiltinDetector::Energy,
            BuiltinDetector::Linear,
        ]
    }
}

impl FromStr for BuiltinDetector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "np" => Ok(BuiltinDetector::Np),
            "energy" => Ok(BuiltinDetector::Energy),
            "linear" => Ok(BuiltinDetector::Linear),
            other => Err(format!(
                "unknown detector '{other}' (expected np, energy or linear)"
            )),
        }
    }
}

impl fmt::Display for BuiltinDetector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinDetector::Np => "np",
            BuiltinDetector::Energy => "energy",
            BuiltinDetector::Linear => "linear",
        })
    }
}

/// Target false-alarm and detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    alpha: f64,
    beta: f64,
}

impl OperatingPoint {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < beta && beta < 1.0) {
            return Err(domain(
                "OperatingPoint",
                format!("need 0 < alpha < beta < 1, got alpha = {alpha}, beta = {beta}"),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Standardization constants of the scaled statistics `T/sigma0²` (H0) and
/// `T/(sigma0² + sigma1²)` (H1) for arbitrary μ0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralMomentsReport {
    pub h0_mean: f64,
    pub h0_var: f64,
    pub h1_mean: f64,
    pub h1_var: f64,
}

pub fn general_mu0_moments(model: &GaussianSignalModel, n: u64) -> Result<GeneralMomentsReport> {
    if n < 1 {
        return Err(domain("general_mu0_moments", "n must be at least 1"));
    }
    Ok(general_moments_at(model, n as f64))
}

fn general_moments_at(model: &GaussianSignalModel, n: f64) -> GeneralMomentsReport {
    let (mu0, s0, v) = (model.mu0(), model.sigma0_sq(), model.total_var());
    let m1 = mu0 + model.mu1();
    let d = delta(model);
    GeneralMomentsReport {
        h0_mean: n + n * mu0 * mu0 + n * mu0 * d / s0,
        h0_var: 2.0 * (n + 2.0 * n * mu0 * mu0) + n * d * d / s0,
        h1_mean: n + n * m1 * m1 + n * m1 * d / v,
        h1_var: 2.0 * (n + 2.0 * n * m1 * m1) + n * d * d / v,
    }
}

fn check_n_alpha(op: &'static str, n: u64, alpha: f64) -> Result<f64> {
    if n < 1 {
        return Err(domain(op, "n must be at least 1"));
    }
    upper_quantile(alpha).map_err(|_| domain(op, format!("alpha = {alpha} outside (0, 1)")))
}

/// Threshold γ′ of the NP test for false-alarm probability `alpha` (μ0 = 0).
pub fn threshold_for_pf(model: &GaussianSignalModel, n: u64, alpha: f64) -> Result<f64> {
    const OP: &str = "threshold_for_pf";
    let z = check_n_alpha(OP, n, alpha)?;
    if model.mu0() != 0.0 {
        return Err(domain(OP, "mu0 != 0; use threshold_for_pf_general"));
    }
    let (s0, s1) = (model.sigma0_sq(), model.sigma1_sq());
    let nf = n as f64;
    let d = delta(model);
    Ok(s0 * s1 * (z * (2.0 * nf + nf * d * d / s0).sqrt() + nf))
}

/// Threshold γ′ of the NP test for arbitrary μ0.
pub fn threshold_for_pf_general(model: &GaussianSignalModel, n: u64, alpha: f64) -> Result<f64> {
    let z = check_n_alpha("threshold_for_pf_general", n, alpha)?;
    let g = general_moments_at(model, n as f64);
    Ok(model.sigma0_sq() * model.sigma1_sq() * (z * g.h0_var.sqrt() + g.h0_mean))
}

/// Closed-form false-alarm probability of the NP test at threshold γ′.
pub fn pf_of_threshold(model: &GaussianSignalModel, n: u64, gamma_prime: f64) -> Result<f64> {
    const OP: &str = "pf_of_threshold";
    if n < 1 {
        return Err(domain(OP, "n must be at least 1"));
    }
    if !gamma_prime.is_finite() {
        return Err(domain(OP, "threshold must be finite"));
    }
    let g = general_moments_at(model, n as f64);
    let scaled = gamma_prime / (model.sigma0_sq() * model.sigma1_sq());
    Ok(q_unchecked((scaled - g.h0_mean) / g.h0_var.sqrt()))
}

/// Convert γ′ to the raw scale of `T(x)`: the test fires when `T(x) > γ′ / sigma1²`.
pub fn raw_threshold_from_gamma(model: &GaussianSignalModel, gamma_prime: f64) -> f64 {
    gamma_prime / model.sigma1_sq()
}

/// Raw-scale threshold giving false-alarm probability `alpha` in the Gaussian
/// limit of any detector: `T_μ0 + T_σ0 · Q⁻¹(alpha)`.
pub fn raw_threshold(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    n: u64,
    alpha: f64,
) -> Result<f64> {
    let z = check_n_alpha("raw_threshold", n, alpha)?;
    let nf = n as f64;
    Ok(detector.mean_h0(nf, model)? + detector.var_h0(nf, model)?.sqrt() * z)
}

/// `P_D = 1 − Φ((T_σ0/T_σ1) Φ⁻¹(1 − α) − (T_μ1 − T_μ0)/T_σ1)`.
pub fn pd_generic(t_mu0: f64, t_mu1: f64, t_sigma0: f64, t_sigma1: f64, alpha: f64) -> Result<f64> {
    const OP: &str = "pd_generic";
    if !(t_sigma0 > 0.0 && t_sigma1 > 0.0) {
        return Err(domain(OP, "standard deviations must be positive"));
    }
    if !(t_mu0.is_finite() && t_mu1.is_finite() && t_sigma0.is_finite() && t_sigma1.is_finite()) {
        return Err(domain(OP, "moments must be finite"));
    }
    let z = upper_quantile(alpha)?;
    Ok(q_unchecked(pd_argument(
        t_mu0, t_mu1, t_sigma0, t_sigma1, z,
    )))
}

#[inline]
fn pd_argument(t_mu0: f64, t_mu1: f64, t_sigma0: f64, t_sigma1: f64, z: f64) -> f64 {
    (t_sigma0 / t_sigma1) * z - (t_mu1 - t_mu0) / t_sigma1
}

/// Gaussian-limit detection probability of `detector` at `n` samples.
pub fn pd_closed_form(
    model: &GaussianSignalModel,
    detector: &DetectorSpec,
    n: u64,
    alpha: f64,
) -> Result<f64> {
    if n < 1 {
        return Err(domain("pd_closed_form", "n must be at least 1"));
    }
    pd_at(model, detector, n as f64, alpha)
}

/// [`pd_closed_form`] with the moment maps evaluated at a real-valued N.
pub fn pd_at(
    model: &GaussianSignalModel,
    detector: &DetectorSpec,
    n: f64,
    alpha: f64,
) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(domain("pd_at", format!("sample size {n} must be positive")));
    }
    let m = detector.moments(n, model)?;
    pd_generic(m.mean_h0, m.mean_h1, m.sd_h0, m.sd_h1, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{normal_cdf, normal_quantile};
    use proptest::prelude::*;

    fn model(mu0: f64, s0: f64, mu1: f64, s1: f64) -> GaussianSignalModel {
        GaussianSignalModel::new(mu0, s0, mu1, s1).unwrap()
    }

    // The explicit detection-probability expression for the NP detector at
    // mu0 = 0, written out term by term.
    fn np_pd_explicit(m: &GaussianSignalModel, n: f64, alpha: f64) -> f64 {
        let (s0, s1, mu1) = (m.sigma0_sq(), m.sigma1_sq(), m.mu1());
        let v = s0 + s1;
        let d = 2.0 * s0 * mu1 / s1;
        let root1 = (2.0 * (n + 2.0 * n * mu1 * mu1) + n * d * d / v).sqrt();
        let first = s0 * (2.0 * n + n * d * d / s0).sqrt() * normal_quantile(1.0 - alpha).unwrap()
            / (v * root1);
        let second = (v * (n + n * mu1 * mu1 + n * mu1 * d / v) - n * s0) / (v * root1);
        1.0 - normal_cdf(first - second).unwrap()
    }

    #[test]
    fn np_moment_examples() {
        let np = np_random_signal_detector();
        let m = model(0.0, 1.0, 0.0, 1.0);
        assert_eq!(np.mean_h0(10.0, &m).unwrap(), 10.0);
        assert_eq!(np.var_h0(10.0, &m).unwrap(), 20.0);
        assert_eq!(np.mean_h1(10.0, &m).unwrap(), 20.0);
        assert_eq!(np.var_h1(10.0, &m).unwrap(), 80.0);
        let m = model(0.0, 1.0, 0.5, 1.0);
        assert_eq!(np.mean_h1(10.0, &m).unwrap(), 30.0);
    }

    #[test]
    fn np_moments_reject_nonzero_noise_mean() {
        let np = np_random_signal_detector();
        let m = model(0.2, 1.0, 0.1, 1.0);
        assert!(np.mean_h0(10.0, &m).is_err());
        assert!(np.var_h1(10.0, &m).is_err());
        assert!(pd_closed_form(&m, &np, 10, 0.1).is_err());
    }

    #[test]
    fn energy_moment_examples() {
        let e = energy_detector();
        let m = model(0.0, 1.0, 0.0, 1.0);
        assert_eq!(e.mean_h0(10.0, &m).unwrap(), 10.0);
        assert_eq!(e.var_h0(10.0, &m).unwrap(), 20.0);
        assert_eq!(e.mean_h1(10.0, &m).unwrap(), 20.0);
        let m = model(0.0, 1.0, 0.0, 3.0);
        assert_eq!(e.var_h1(10.0, &m).unwrap(), 2.0 * 10.0 * 16.0);
    }

    #[test]
    fn linear_moment_examples() {
        let l = linear_detector();
        assert_eq!(l.mean_h1(7.0, &model(0.0, 1.0, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(l.var_h0(100.0, &model(0.0, 1.0, 0.0, 1.0)).unwrap(), 100.0);
        let m = model(0.0, 1.0, 0.5, 1.0);
        assert_eq!(
            l.mean_h1(4.0, &m).unwrap() - l.mean_h0(4.0, &m).unwrap(),
            2.0
        );
    }

    #[test]
    fn builtin_names_round_trip() {
        for b in BuiltinDetector::all() {
            let parsed: BuiltinDetector = b.to_string().parse().unwrap();
            assert_eq!(parsed, b);
            assert_eq!(b.spec().name(), b.to_string());
        }
        assert!("glrt".parse::<BuiltinDetector>().is_err());
    }

    #[test]
    fn operating_point_invariants() {
        assert!(OperatingPoint::new(0.1, 0.9).is_ok());
        assert!(OperatingPoint::new(0.1, 0.1).is_err());
        assert!(OperatingPoint::new(0.5, 0.2).is_err());
        assert!(OperatingPoint::new(0.0, 0.9).is_err());
        assert!(OperatingPoint::new(0.1, 1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let m = model(0.0, 2.0, 0.3, 3.0);
        let g = threshold_for_pf(&m, 50, 0.5).unwrap();
        assert!((g - 2.0 * 3.0 * 50.0).abs() < 1e-9);

        let m = model(0.0, 1.0, 0.0, 1.0);
        let g = threshold_for_pf(&m, 100, 0.1).unwrap();
        let expected = upper_quantile(0.1).unwrap() * 200f64.sqrt() + 100.0;
        assert!((g - expected).abs() < 1e-12);
        assert!((pf_of_threshold(&m, 100, g).unwrap() - 0.1).abs() < 1e-12);

        assert!(threshold_for_pf(&m, 100, 0.01).unwrap() > threshold_for_pf(&m, 100, 0.2).unwrap());
        assert!(threshold_for_pf(&model(0.1, 1.0, 0.0, 1.0), 10, 0.1).is_err());
        assert!(threshold_for_pf(&m, 0, 0.1).is_err());
        assert!(threshold_for_pf(&m, 10, 1.0).is_err());
    }

    #[test]
    fn general_threshold_examples() {
        let m = model(0.0, 1.3, 0.4, 0.7);
        for alpha in [0.01, 0.1, 0.4] {
            assert_eq!(
                threshold_for_pf_general(&m, 37, alpha).unwrap(),
                threshold_for_pf(&m, 37, alpha).unwrap()
            );
        }
        let m = model(1.0, 1.0, 0.0, 1.0);
        let n = 25;
        let g = threshold_for_pf_general(&m, n, 0.5).unwrap();
        assert!((g - 4.0 * n as f64).abs() < 1e-9);
    }

    #[test]
    fn raw_threshold_matches_gamma_for_np() {
        let np = np_random_signal_detector();
        let m = model(0.0, 1.5, 0.2, 0.8);
        let raw = raw_threshold(&np, &m, 64, 0.05).unwrap();
        let gamma = threshold_for_pf(&m, 64, 0.05).unwrap();
        assert!((raw - raw_threshold_from_gamma(&m, gamma)).abs() < 1e-9 * raw.abs());
    }

    #[test]
    fn general_moment_examples() {
        let g = general_mu0_moments(&model(0.0, 2.0, 0.0, 5.0), 12).unwrap();
        assert_eq!(
            g,
            GeneralMomentsReport {
                h0_mean: 12.0,
                h0_var: 24.0,
                h1_mean: 12.0,
                h1_var: 24.0
            }
        );
        let g = general_mu0_moments(&model(0.0, 1.0, 0.5, 1.0), 10).unwrap();
        assert!((g.h1_mean - 15.0).abs() < 1e-12);
        let m = model(0.0, 1.7, 0.3, 0.9);
        let g = general_mu0_moments(&m, 40).unwrap();
        let np = np_random_signal_detector();
        assert!((m.sigma0_sq() * g.h0_mean - np.mean_h0(40.0, &m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pd_generic_examples() {
        assert!((pd_generic(5.0, 5.0, 2.0, 2.0, 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!(pd_generic(0.0, 1e6, 1.0, 1.0, 0.1).unwrap() > 1.0 - 1e-15);
        let pd = pd_generic(10.0, 20.0, 20f64.sqrt(), 80f64.sqrt(), 0.1).unwrap();
        let expected = 1.0
            - normal_cdf(
                (20f64.sqrt() / 80f64.sqrt()) * normal_quantile(0.9).unwrap() - 10.0 / 80f64.sqrt(),
            )
            .unwrap();
        assert!((pd - expected).abs() < 1e-12);
        assert!(pd_generic(0.0, 1.0, 0.0, 1.0, 0.1).is_err());
        assert!(pd_generic(0.0, 1.0, 1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn pd_closed_form_in_range_and_monotone() {
        let np = np_random_signal_detector();
        let m = model(0.0, 1.0, 0.1, 1.0);
        let pd = pd_closed_form(&m, &np, 1000, 0.1).unwrap();
        assert!(pd > 0.1 && pd <= 1.0);
        let m = model(0.0, 1.0, 0.05, 0.01);
        let mut prev = 0.0;
        for n in (10..=10_000).step_by(10) {
            let pd = pd_closed_form(&m, &np, n, 0.1).unwrap();
            assert!(pd >= prev, "n = {n}");
            prev = pd;
        }
    }

    proptest! {
        #[test]
        fn threshold_round_trip(
            s0 in 0.1f64..10.0, s1 in 0.1f64..10.0, mu1 in 0.0f64..1.0,
            n in 1u64..5000, alpha in 0.001f64..0.999,
        ) {
            let m = model(0.0, s0, mu1, s1);
            let g = threshold_for_pf(&m, n, alpha).unwrap();
            prop_assert!((pf_of_threshold(&m, n, g).unwrap() - alpha).abs() <= 1e-10);
        }

        #[test]
        fn builtin_raw_threshold_round_trip(
            s0 in 0.1f64..10.0, s1 in 0.1f64..10.0, mu1 in 0.0f64..1.0,
            n in 1u64..5000, alpha in 0.001f64..0.999,
        ) {
            let m = model(0.0, s0, mu1, s1);
            for b in BuiltinDetector::all() {
                let det = b.spec();
                let t = raw_threshold(&det, &m, n, alpha).unwrap();
                let nf = n as f64;
                let pf = q_unchecked((t - det.mean_h0(nf, &m).unwrap()) / det.var_h0(nf, &m).unwrap().sqrt());
                prop_assert!((pf - alpha).abs() <= 1e-10);
            }
        }

        #[test]
        fn pd_at_least_alpha(
            mu0 in -10.0f64..10.0, gap in 0.0f64..10.0,
            s0 in 0.01f64..10.0, extra in 0.0f64..10.0, alpha in 0.001f64..=0.5,
        ) {
            // For alpha > 1/2 the quantile is negative and a wider H1 spread
            // lowers P_D, so the bound only holds on (0, 1/2].
            let pd = pd_generic(mu0, mu0 + gap, s0, s0 + extra, alpha).unwrap();
            prop_assert!(pd >= alpha - 1e-15);
        }

        #[test]
        fn np_pd_two_routes_agree(
            s0 in 0.1f64..10.0, s1 in 0.1f64..10.0, mu1 in 0.0f64..1.0,
            n in 1u64..10_000, alpha in 0.01f64..0.5,
        ) {
            let m = model(0.0, s0, mu1, s1);
            let a = pd_closed_form(&m, &np_random_signal_detector(), n, alpha).unwrap();
            let b = np_pd_explicit(&m, n as f64, alpha);
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }
}
