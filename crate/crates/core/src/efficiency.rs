//! Efficacy, asymptotic and finite-sample relative efficiency, and the
//! correction term that links them.
//!
//! Throughout, the expansion variable `s` is the signal mean μ1 with μ0 = 0,
//! and every quantity that depends on μ1 (including the NP detector's linear
//! weight δ) is re-evaluated at `s`. With that convention the H1 mean of the
//! NP and energy detectors is exactly quadratic in `s`, so their derivative
//! order is ν = 2, while the linear detector has ν = 1.
//!
//! Matching the detection probabilities of detectors A and B at sample sizes
//! `N_A`, `N_B` and expanding the H1 means to order ν gives
//!
//! ```text
//! RE_{A,B} = [(T²σ1,NB / T²σ0,NB) / (T²σ1,NA / T²σ0,NA)] · ARE_{A,B} / (1 − U)²
//! ```
//!
//! where `U` collects a quantile-weighted gap between the standard-deviation
//! ratios of the two detectors and their Taylor remainders beyond order ν.
//! [`convergence_sweep`] measures how well that identity holds as N grows
//! along a Pitman-type schedule.

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{pd_at, pd_closed_form, DetectorSpec, OperatingPoint};
use crate::error::{domain, Error, Result};
use crate::signal::GaussianSignalModel;
use crate::stats::{
    derivative_at, smallest_nonzero_derivative_order, upper_quantile, DiffConfig,
    MAX_DERIVATIVE_ORDER,
};

/// Relative change in √ξ between N and 2N beyond which the efficacy is
/// reported as unstable.
pub const EFFICACY_STABILITY_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficacyReport {
    pub nu: u32,
    /// ν-th derivative of the H1 mean at s = 0, divided by N.
    pub derivative: f64,
    pub sqrt_efficacy: f64,
    pub n_used: u64,
}

impl EfficacyReport {
    pub fn efficacy(&self) -> f64 {
        self.sqrt_efficacy * self.sqrt_efficacy
    }
}

/// `s ↦ T_μ1,N(s)`: the H1 mean with the signal mean replaced by `s`.
pub fn h1_mean_as_function_of_s<'a>(
    detector: &'a DetectorSpec,
    model_template: &GaussianSignalModel,
    n: u64,
) -> Result<impl Fn(f64) -> f64 + 'a> {
    if n < 1 {
        return Err(domain("h1_mean_as_function_of_s", "n must be at least 1"));
    }
    let template = *model_template;
    let nf = n as f64;
    // Surface structural errors (e.g. an unsupported mu0) up front; later
    // failures show up as NaN and are caught by the differentiator.
    detector.mean_h1(nf, &template.with_mu1(0.0)?)?;
    Ok(move |s: f64| {
        template
            .with_mu1(s)
            .and_then(|m| detector.mean_h1(nf, &m))
            .unwrap_or(f64::NAN)
    })
}

fn efficacy_single(
    detector: &DetectorSpec,
    model_template: &GaussianSignalModel,
    n: u64,
    cfg: &DiffConfig,
) -> Result<EfficacyReport> {
    let mean = h1_mean_as_function_of_s(detector, model_template, n)?;
    let (nu, deriv) = smallest_nonzero_derivative_order(mean, 0.0, MAX_DERIVATIVE_ORDER, cfg)?;
    let nf = n as f64;
    let null_model = model_template.with_mu1(0.0)?;
    let sd_h0 = detector.var_h0(nf, &null_model)?.sqrt();
    Ok(EfficacyReport {
        nu,
        derivative: deriv / nf,
        sqrt_efficacy: deriv / (nf.sqrt() * sd_h0),
        n_used: n,
    })
}

/// √ξ = (dᵛ T_μ1,N / dsᵛ at 0) / (√N · T_σ0,N), evaluated at `n` and checked
/// against `2n` for stability.
pub fn efficacy(
    detector: &DetectorSpec,
    model_template: &GaussianSignalModel,
    n: u64,
    cfg: &DiffConfig,
) -> Result<EfficacyReport> {
    let here = efficacy_single(detector, model_template, n, cfg)?;
    let doubled = efficacy_single(detector, model_template, n.saturating_mul(2), cfg)?;
    if here.nu != doubled.nu {
        return Err(Error::EfficacyUnstable {
            detector: detector.name().to_string(),
            detail: format!("nu = {} at N = {n} but {} at 2N", here.nu, doubled.nu),
        });
    }
    let rel = (here.sqrt_efficacy - doubled.sqrt_efficacy).abs() / here.sqrt_efficacy.abs();
    if rel.is_nan() || rel >= EFFICACY_STABILITY_TOL {
        return Err(Error::EfficacyUnstable {
            detector: detector.name().to_string(),
            detail: format!(
                "sqrt efficacy {} at N = {n} vs {} at 2N",
                here.sqrt_efficacy, doubled.sqrt_efficacy
            ),
        });
    }
    Ok(here)
}

/// Pitman ARE of A relative to B as the ratio of efficacies ξ_A / ξ_B.
pub fn are(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model_template: &GaussianSignalModel,
    n: u64,
    cfg: &DiffConfig,
) -> Result<f64> {
    let a = efficacy(det_a, model_template, n, cfg)?;
    let b = efficacy(det_b, model_template, n, cfg)?;
    are_from_reports(&a, &b)
}

pub fn are_from_reports(a: &EfficacyReport, b: &EfficacyReport) -> Result<f64> {
    if a.nu != b.nu {
        return Err(Error::IncomparableOrders {
            nu_a: a.nu,
            nu_b: b.nu,
        });
    }
    let ratio = a.sqrt_efficacy / b.sqrt_efficacy;
    Ok(ratio * ratio)
}

/// Smallest N ≤ `n_max` whose closed-form detection probability reaches β.
///
/// Doubles N until the target is bracketed, then bisects; assumes P_D is
/// nondecreasing in N.
pub fn required_sample_size(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    n_max: u64,
) -> Result<u64> {
    let alpha = op_point.alpha();
    let beta = op_point.beta();
    let pd = |n: u64| pd_closed_form(model, detector, n, alpha);
    search_min_n(pd, beta, n_max)
}

/// Leftmost N in [1, n_max] with `pd(N) >= beta` for a nondecreasing `pd`.
pub(crate) fn search_min_n<F>(pd: F, beta: f64, n_max: u64) -> Result<u64>
where
    F: Fn(u64) -> Result<f64>,
{
    if n_max < 1 {
        return Err(domain("required_sample_size", "n_max must be at least 1"));
    }
    if pd(1)? >= beta {
        return Ok(1);
    }
    // Invariant: pd(lo) < beta.
    let mut lo = 1u64;
    let mut hi;
    loop {
        hi = lo.saturating_mul(2).min(n_max);
        if hi == lo {
            return Err(Error::NMaxExceeded {
                n_max,
                pd_at_n_max: pd(n_max)?,
            });
        }
        if pd(hi)? >= beta {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pd(mid)? >= beta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Continuous relaxation of [`required_sample_size`]: the real N in
/// `[1, n_max]` at which the Gaussian-limit P_D equals β. Intended for
/// smooth convergence curves, not for sizing an actual experiment.
pub fn required_sample_size_fractional(
    detector: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    n_max: f64,
) -> Result<f64> {
    let (alpha, beta) = (op_point.alpha(), op_point.beta());
    if !(n_max >= 1.0 && n_max.is_finite()) {
        return Err(domain(
            "required_sample_size_fractional",
            "n_max must be >= 1",
        ));
    }
    let pd = |n: f64| pd_at(model, detector, n, alpha);
    if pd(1.0)? >= beta {
        return Ok(1.0);
    }
    let top = pd(n_max)?;
    if top < beta {
        return Err(Error::NMaxExceeded {
            n_max: n_max as u64,
            pd_at_n_max: top,
        });
    }
    let (mut lo, mut hi) = (1.0, n_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pd(mid)? >= beta {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Sample sizes needed by A and B at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeEfficiency {
    pub n_a: u64,
    pub n_b: u64,
    /// N_B / N_A.
    pub re: f64,
}

pub fn relative_efficiency(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    n_max: u64,
) -> Result<RelativeEfficiency> {
    let n_a = required_sample_size(det_a, model, op_point, n_max)?;
    let n_b = required_sample_size(det_b, model, op_point, n_max)?;
    Ok(RelativeEfficiency {
        n_a,
        n_b,
        re: n_b as f64 / n_a as f64,
    })
}

/// Real-valued counterpart of [`relative_efficiency`] built on
/// [`required_sample_size_fractional`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionalRelativeEfficiency {
    pub n_a: f64,
    pub n_b: f64,
    pub re: f64,
}

pub fn relative_efficiency_fractional(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    n_max: f64,
) -> Result<FractionalRelativeEfficiency> {
    let n_a = required_sample_size_fractional(det_a, model, op_point, n_max)?;
    let n_b = required_sample_size_fractional(det_b, model, op_point, n_max)?;
    Ok(FractionalRelativeEfficiency {
        n_a,
        n_b,
        re: n_b / n_a,
    })
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Δ_H1,N(s) = T_μ1,N(s) − T_μ1,N(0) − sᵛ/ν! · T⁽ᵛ⁾_μ1,N(0).
pub fn taylor_remainder(
    detector: &DetectorSpec,
    model_template: &GaussianSignalModel,
    n: u64,
    s: f64,
    nu: u32,
    cfg: &DiffConfig,
) -> Result<f64> {
    if !s.is_finite() {
        return Err(domain("taylor_remainder", "s must be finite"));
    }
    let mean = h1_mean_as_function_of_s(detector, model_template, n)?;
    let at_s = mean(s);
    let at_zero = mean(0.0);
    if !at_s.is_finite() {
        return Err(Error::NonFinite {
            op: "taylor_remainder",
            abscissa: s,
            value: at_s,
        });
    }
    let d = derivative_at(&mean, 0.0, nu, cfg)?;
    Ok(at_s - at_zero - s.powi(nu as i32) / factorial(nu) * d)
}

/// The correction term U, split into its two contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UTerm {
    pub u: f64,
    /// Part driven by Φ⁻¹(1 − α) times the gap in T_σ0/T_σ1 between B and A.
    pub quantile_part: f64,
    /// Part driven by the Taylor remainders Δ_A/T_σ1,A − Δ_B/T_σ1,B.
    pub remainder_part: f64,
}

/// U evaluated at a given signal value `s`.
///
/// The standard-deviation ratios use `model_a` and `model_b` as given; the
/// remainders and √ξ_B treat those models as templates whose μ1 is replaced
/// by the expansion variable.
#[allow(clippy::too_many_arguments)]
pub fn u_term(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model_a: &GaussianSignalModel,
    model_b: &GaussianSignalModel,
    n_a: u64,
    n_b: u64,
    alpha: f64,
    s: f64,
    nu: u32,
    cfg: &DiffConfig,
) -> Result<UTerm> {
    const OP: &str = "u_term";
    if s == 0.0 || !s.is_finite() {
        return Err(domain(OP, "s must be finite and nonzero"));
    }
    if n_a < 1 || n_b < 1 {
        return Err(domain(OP, "sample sizes must be at least 1"));
    }
    let z = upper_quantile(alpha)?;
    let ma = det_a.moments(n_a as f64, model_a)?;
    let mb = det_b.moments(n_b as f64, model_b)?;
    let (ratio_a, ratio_b) = (ma.sd_ratio(), mb.sd_ratio());

    let delta_a = taylor_remainder(det_a, model_a, n_a, s, nu, cfg)?;
    let delta_b = taylor_remainder(det_b, model_b, n_b, s, nu, cfg)?;
    let sqrt_xi_b = efficacy(det_b, model_b, n_b, cfg)?.sqrt_efficacy;

    let scale = factorial(nu) / s.powi(nu as i32);
    let denom = sqrt_xi_b * ratio_b * (n_b as f64).sqrt();
    let quantile_part = scale * z * (ratio_b - ratio_a) / denom;
    let remainder_part = scale * (delta_a / ma.sd_h1 - delta_b / mb.sd_h1) / denom;
    let u = quantile_part + remainder_part;
    if !u.is_finite() {
        return Err(Error::NonFinite {
            op: OP,
            abscissa: s,
            value: u,
        });
    }
    Ok(UTerm {
        u,
        quantile_part,
        remainder_part,
    })
}

/// (T²σ1,NB / T²σ0,NB) / (T²σ1,NA / T²σ0,NA).
pub fn variance_ratio(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model_a: &GaussianSignalModel,
    model_b: &GaussianSignalModel,
    n_a: u64,
    n_b: u64,
) -> Result<f64> {
    let (na, nb) = (n_a as f64, n_b as f64);
    let a = det_a.var_h1(na, model_a)? / det_a.var_h0(na, model_a)?;
    let b = det_b.var_h1(nb, model_b)? / det_b.var_h0(nb, model_b)?;
    Ok(b / a)
}

/// `variance_ratio · are / (1 − u)²`.
pub fn re_are_rhs(variance_ratio: f64, are: f64, u: f64) -> Result<f64> {
    const OP: &str = "re_are_rhs";
    if u.is_nan() || u >= 1.0 {
        return Err(domain(OP, format!("u = {u} must be < 1")));
    }
    if !(variance_ratio > 0.0 && variance_ratio.is_finite()) {
        return Err(domain(OP, "variance ratio must be positive"));
    }
    if !(are > 0.0 && are.is_finite()) {
        return Err(domain(OP, "ARE must be positive"));
    }
    let w = 1.0 - u;
    Ok(variance_ratio * are / (w * w))
}

/// Both sides of the RE/ARE identity at one model and operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct REAREReport {
    pub n_a: u64,
    pub n_b: u64,
    pub re: f64,
    pub are: f64,
    pub u: f64,
    pub variance_ratio: f64,
    pub rhs: f64,
}

/// Searches the sample sizes for `model`, then evaluates ARE, U at s = μ1,
/// and the right-hand side of the identity.
pub fn re_are_report(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model: &GaussianSignalModel,
    op_point: &OperatingPoint,
    n_max: u64,
    cfg: &DiffConfig,
) -> Result<REAREReport> {
    let rel = relative_efficiency(det_a, det_b, model, op_point, n_max)?;
    let eff_a = efficacy(det_a, model, rel.n_a, cfg)?;
    let eff_b = efficacy(det_b, model, rel.n_b, cfg)?;
    let are = are_from_reports(&eff_a, &eff_b)?;
    let u = u_term(
        det_a,
        det_b,
        model,
        model,
        rel.n_a,
        rel.n_b,
        op_point.alpha(),
        model.mu1(),
        eff_a.nu,
        cfg,
    )?;
    let variance_ratio = variance_ratio(det_a, det_b, model, model, rel.n_a, rel.n_b)?;
    let rhs = re_are_rhs(variance_ratio, are, u.u)?;
    Ok(REAREReport {
        n_a: rel.n_a,
        n_b: rel.n_b,
        re: rel.re,
        are,
        u: u.u,
        variance_ratio,
        rhs,
    })
}

/// How the signal mean shrinks with N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MeanRate {
    /// μ1 ∝ N^(−1/(2ν)), so that sᵛ·√N stays constant.
    PerOrder,
    /// μ1 ∝ N^(−exponent); `Fixed(0.5)` keeps s·√N constant.
    Fixed(f64),
}

/// μ1(N) = c_mu · N^(−rate), σ1²(N) = c_var · N^(−var_exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSchedule {
    pub c_mu: f64,
    pub mean_rate: MeanRate,
    pub c_var: f64,
    pub var_exponent: f64,
}

impl Default for ScalingSchedule {
    fn default() -> Self {
        Self {
            c_mu: 0.5,
            mean_rate: MeanRate::PerOrder,
            c_var: 1.0,
            var_exponent: 0.0,
        }
    }
}

impl ScalingSchedule {
    pub fn mu1_at(&self, n: u64, nu: u32) -> f64 {
        let rate = match self.mean_rate {
            MeanRate::PerOrder => 1.0 / (2.0 * nu as f64),
            MeanRate::Fixed(r) => r,
        };
        self.c_mu * (n as f64).powf(-rate)
    }

    pub fn sigma1_sq_at(&self, n: u64) -> f64 {
        self.c_var * (n as f64).powf(-self.var_exponent)
    }
}

/// One successful row of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub n_a: u64,
    pub n_b: u64,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub re: f64,
    pub are: f64,
    pub u: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Outcome at one grid point; failures are kept in place rather than
/// aborting the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub grid_n: u64,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub outcome: std::result::Result<ConvergenceRecord, Error>,
}

/// Evaluate the RE/ARE identity along `schedule` at every grid point.
///
/// `model_template` supplies μ0 and σ0²; μ1 and σ1² come from the schedule.
/// Grid points are independent and processed in parallel; output order
/// follows the grid.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    model_template: &GaussianSignalModel,
    schedule: &ScalingSchedule,
    op_point: &OperatingPoint,
    n_grid: &[u64],
    n_max: u64,
    cfg: &DiffConfig,
) -> Result<Vec<SweepPoint>> {
    const OP: &str = "convergence_sweep";
    if n_grid.is_empty() {
        return Err(domain(OP, "empty grid"));
    }
    if n_grid[0] < 1 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain(
            OP,
            "grid must be strictly increasing positive integers",
        ));
    }
    let probe = model_template.with_sigma1_sq(schedule.sigma1_sq_at(n_grid[0]))?;
    let nu_a = efficacy(det_a, &probe, n_grid[0], cfg)?.nu;
    let nu_b = efficacy(det_b, &probe, n_grid[0], cfg)?.nu;
    if nu_a != nu_b {
        return Err(Error::IncomparableOrders { nu_a, nu_b });
    }

    let points = n_grid
        .par_iter()
        .map(|&grid_n| {
            let mu1 = schedule.mu1_at(grid_n, nu_a);
            let sigma1_sq = schedule.sigma1_sq_at(grid_n);
            let outcome = GaussianSignalModel::new(
                model_template.mu0(),
                model_template.sigma0_sq(),
                mu1,
                sigma1_sq,
            )
            .and_then(|model| re_are_report(det_a, det_b, &model, op_point, n_max, cfg))
            .map(|r| ConvergenceRecord {
                n_a: r.n_a,
                n_b: r.n_b,
                mu1,
                sigma1_sq,
                re: r.re,
                are: r.are,
                u: r.u,
                rhs: r.rhs,
                relative_gap: (r.re - r.rhs).abs() / r.rhs,
            });
            SweepPoint {
                grid_n,
                mu1,
                sigma1_sq,
                outcome,
            }
        })
        .collect();
    Ok(points)
}
