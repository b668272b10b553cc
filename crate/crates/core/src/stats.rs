//! Scalar statistical and numerical primitives.
//!
//! The standard normal CDF and its upper tail are evaluated through the
//! complementary error function so that both tails keep full relative
//! accuracy. The quantile starts from Acklam's rational approximation and is
//! polished by two Newton steps against [`normal_cdf`].
//!
//! Derivatives are estimated with central finite differences and Richardson
//! extrapolation over successively halved steps.

use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{domain, Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Highest derivative order supported by [`derivative_at`].
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("normal_cdf", format!("non-finite input {x}")));
    }
    Ok(cdf_unchecked(x))
}

/// Upper tail Q(x) = 1 − Φ(x), accurate in relative terms for large x.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("q_function", format!("non-finite input {x}")));
    }
    Ok(q_unchecked(x))
}

#[inline]
pub(crate) fn cdf_unchecked(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn q_unchecked(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for 0 < p < 1.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(
            "normal_quantile",
            format!("probability {p} outside (0, 1)"),
        ));
    }
    Ok(quantile_unchecked(p))
}

/// Upper-tail quantile Q⁻¹(α) = Φ⁻¹(1 − α), computed without forming 1 − α.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(
            "upper_quantile",
            format!("probability {alpha} outside (0, 1)"),
        ));
    }
    Ok(-quantile_unchecked(alpha))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    let mut x = acklam(p);
    // For p > 1/2, 1 - p is exact, so measure the residual on the upper tail.
    let upper = p > 0.5;
    let tail = 1.0 - p;
    for _ in 0..2 {
        let resid = if upper {
            tail - q_unchecked(x)
        } else {
            cdf_unchecked(x) - p
        };
        let dens = normal_pdf(x);
        if dens == 0.0 {
            break;
        }
        x -= resid / dens;
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Gaussian limit `(dof + λ, 2(dof + 2λ))` of a noncentral chi-square.
pub fn noncentral_chi2_normal_approx(dof: u64, lambda: f64) -> Result<(f64, f64)> {
    const OP: &str = "noncentral_chi2_normal_approx";
    if dof < 1 {
        return Err(domain(OP, "degrees of freedom must be at least 1"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(domain(
            OP,
            format!("noncentrality {lambda} must be finite and >= 0"),
        ));
    }
    let k = dof as f64;
    Ok((k + lambda, 2.0 * (k + 2.0 * lambda)))
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffConfig {
    /// First-order step before scaling by `max(1, |x0|)`.
    pub base_step: f64,
    pub richardson_levels: u32,
    /// Derivatives below `zero_tolerance * max(1, |f(x0)|)` count as zero.
    pub zero_tolerance: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            base_step: 1e-3,
            richardson_levels: 3,
            zero_tolerance: 1e-7,
        }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "DiffConfig";
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(domain(OP, "base_step must be positive"));
        }
        if self.richardson_levels < 1 {
            return Err(domain(OP, "richardson_levels must be >= 1"));
        }
        if !(self.zero_tolerance > 0.0 && self.zero_tolerance.is_finite()) {
            return Err(domain(OP, "zero_tolerance must be positive"));
        }
        Ok(())
    }

    /// Step for a given order. Higher-order stencils divide by h^k, so the
    /// step grows as `base_step^(2/(k+1))` to keep round-off bounded.
    fn step(&self, order: u32, x0: f64) -> f64 {
        let exponent = 2.0 / (order as f64 + 1.0);
        let h = if self.base_step < 1.0 {
            self.base_step.powf(exponent)
        } else {
            self.base_step
        };
        h * x0.abs().max(1.0)
    }
}

// Central stencils: (offset multiplier, weight) pairs and the h^k divisor factor.
fn stencil(order: u32) -> (&'static [(f64, f64)], f64) {
    match order {
        1 => (&[(1.0, 1.0), (-1.0, -1.0)], 2.0),
        2 => (&[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)], 1.0),
        3 => (&[(2.0, 1.0), (1.0, -2.0), (-1.0, 2.0), (-2.0, -1.0)], 2.0),
        4 => (
            &[
                (2.0, 1.0),
                (1.0, -4.0),
                (0.0, 6.0),
                (-1.0, -4.0),
                (-2.0, 1.0),
            ],
            1.0,
        ),
        _ => unreachable!("order checked by caller"),
    }
}

/// Estimate the `order`-th derivative of `f` at `x0`.
pub fn derivative_at<F>(f: F, x0: f64, order: u32, cfg: &DiffConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    const OP: &str = "derivative_at";
    cfg.validate()?;
    if !(1..=MAX_DERIVATIVE_ORDER).contains(&order) {
        return Err(domain(
            OP,
            format!("order {order} not in 1..={MAX_DERIVATIVE_ORDER}"),
        ));
    }
    if !x0.is_finite() {
        return Err(domain(OP, format!("non-finite abscissa {x0}")));
    }

    let (points, divisor) = stencil(order);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite {
                op: OP,
                abscissa: x,
                value: y,
            })
        }
    };

    let levels = cfg.richardson_levels as usize;
    let mut h = cfg.step(order, x0);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for j in 0..levels {
        let mut acc = 0.0;
        for &(offset, weight) in points {
            acc += weight * eval(x0 + offset * h)?;
        }
        let mut row = Vec::with_capacity(j + 1);
        row.push(acc / (divisor * h.powi(order as i32)));
        // Truncation error is a series in h^2; eliminate one power per column.
        let mut factor = 1.0;
        for m in 1..=j {
            factor *= 4.0;
            let prev = row[m - 1];
            let above = table[j - 1][m - 1];
            row.push(prev + (prev - above) / (factor - 1.0));
        }
        table.push(row);
        h *= 0.5;
    }
    Ok(table[levels - 1][levels - 1])
}

/// Smallest order `k <= max_order` whose derivative at `x0` is nonzero,
/// along with that derivative.
pub fn smallest_nonzero_derivative_order<F>(
    f: F,
    x0: f64,
    max_order: u32,
    cfg: &DiffConfig,
) -> Result<(u32, f64)>
where
    F: Fn(f64) -> f64,
{
    const OP: &str = "smallest_nonzero_derivative_order";
    if !(1..=MAX_DERIVATIVE_ORDER).contains(&max_order) {
        return Err(domain(
            OP,
            format!("max_order {max_order} not in 1..={MAX_DERIVATIVE_ORDER}"),
        ));
    }
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite {
            op: OP,
            abscissa: x0,
            value: f0,
        });
    }
    let scale = f0.abs().max(1.0);
    for k in 1..=max_order {
        let d = derivative_at(&f, x0, k, cfg)?;
        if d.abs() > cfg.zero_tolerance * scale {
            return Ok((k, d));
        }
    }
    Err(Error::NoNonzeroDerivative { max_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Maclaurin series for erf; fine for |x| <= 3 in double precision.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    fn cdf_oracle(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x * FRAC_1_SQRT_2))
    }

    // Composite Simpson of the density over [a, b].
    fn tail_quadrature(a: f64, b: f64) -> f64 {
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut s = normal_pdf(a) + normal_pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
        assert!((normal_cdf(40.0).unwrap() - 1.0).abs() <= 1e-15);
        assert!((normal_cdf(1.959964).unwrap() - 0.975).abs() < 1e-6);
        assert!((normal_cdf(1.959964).unwrap() - cdf_oracle(1.959964)).abs() < 1e-13);
    }

    #[test]
    fn cdf_matches_series_oracle() {
        let mut x = -5.0;
        while x <= 5.0 {
            let err = (normal_cdf(x).unwrap() - cdf_oracle(x)).abs();
            assert!(err <= 1e-12, "x = {x}: err {err}");
            x += 0.05;
        }
    }

    #[test]
    fn q_reference_values() {
        assert_eq!(q_function(0.0).unwrap(), 0.5);
        let x = 1.3;
        assert!((q_function(x).unwrap() + normal_cdf(x).unwrap() - 1.0).abs() < 1e-15);
        let q3 = q_function(3.0).unwrap();
        assert!((q3 - 1.349898e-3).abs() < 1e-9);
        let oracle = tail_quadrature(3.0, 40.0);
        assert!(((q3 - oracle) / oracle).abs() < 1e-10);
    }

    #[test]
    fn q_tail_relative_accuracy() {
        for &x in &[4.0, 5.0, 6.0, 7.0, 8.0] {
            let q = q_function(x).unwrap();
            let oracle = tail_quadrature(x, x + 12.0);
            assert!(((q - oracle) / oracle).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(normal_cdf(f64::NAN).is_err());
        assert!(normal_cdf(f64::INFINITY).is_err());
        assert!(q_function(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // Bisection on the series oracle.
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_oracle(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = normal_quantile(0.975).unwrap();
        assert!((z - 1.959964).abs() < 1e-5);
        assert!((z - lo).abs() < 1e-12);
        let p = normal_cdf(normal_quantile(0.01).unwrap()).unwrap();
        assert!((p - 0.01).abs() < 1e-10);
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
            assert!(upper_quantile(p).is_err());
        }
    }

    #[test]
    fn upper_quantile_is_negated_quantile() {
        let z = upper_quantile(0.1).unwrap();
        assert!((q_function(z).unwrap() - 0.1).abs() < 1e-15);
        let z = upper_quantile(1e-12).unwrap();
        assert!(((q_function(z).unwrap() - 1e-12) / 1e-12).abs() < 1e-10);
    }

    #[test]
    fn noncentral_moments() {
        assert_eq!(
            noncentral_chi2_normal_approx(10, 0.0).unwrap(),
            (10.0, 20.0)
        );
        assert_eq!(
            noncentral_chi2_normal_approx(10, 4.0).unwrap(),
            (14.0, 36.0)
        );
        assert_eq!(
            noncentral_chi2_normal_approx(100, 25.0).unwrap(),
            (125.0, 300.0)
        );
        assert!(noncentral_chi2_normal_approx(0, 1.0).is_err());
        assert!(noncentral_chi2_normal_approx(3, -1.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        let cfg = DiffConfig::default();
        let sq = |s: f64| s * s;
        assert!((derivative_at(sq, 0.0, 2, &cfg).unwrap() - 2.0).abs() < 1e-8);
        assert!(derivative_at(sq, 0.0, 1, &cfg).unwrap().abs() < 1e-8);
        let cubic = |s: f64| s * s * s + 2.0 * s * s;
        assert!((derivative_at(cubic, 0.0, 2, &cfg).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_rejects_bad_order_and_nan() {
        let cfg = DiffConfig::default();
        assert!(derivative_at(|s| s, 0.0, 0, &cfg).is_err());
        assert!(derivative_at(|s| s, 0.0, 5, &cfg).is_err());
        let err =
            derivative_at(|s: f64| if s > 0.0 { f64::NAN } else { s }, 0.0, 1, &cfg).unwrap_err();
        match err {
            Error::NonFinite { abscissa, .. } => assert!(abscissa > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_of_transcendental() {
        let cfg = DiffConfig::default();
        let d = derivative_at(f64::sin, 0.7, 1, &cfg).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-10);
        let d = derivative_at(f64::exp, 0.3, 4, &cfg).unwrap();
        assert!((d - 0.3f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn order_detection() {
        let cfg = DiffConfig::default();
        let (nu, v) = smallest_nonzero_derivative_order(|s| 3.0 * s, 0.0, 4, &cfg).unwrap();
        assert_eq!(nu, 1);
        assert!((v - 3.0).abs() < 1e-9);
        let (nu, v) = smallest_nonzero_derivative_order(|s| 5.0 * s * s, 0.0, 4, &cfg).unwrap();
        assert_eq!(nu, 2);
        assert!((v - 10.0).abs() < 1e-8);
        let err = smallest_nonzero_derivative_order(|_| 7.0, 0.0, 4, &cfg).unwrap_err();
        assert_eq!(err, Error::NoNonzeroDerivative { max_order: 4 });
        assert!(smallest_nonzero_derivative_order(|s| s, 0.0, 5, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn cdf_monotone(a in -9.0f64..9.0, b in -9.0f64..9.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(normal_cdf(lo).unwrap() <= normal_cdf(hi).unwrap());
        }

        #[test]
        fn quantile_round_trip(p in 1e-6f64..(1.0 - 1e-6)) {
            let back = normal_cdf(normal_quantile(p).unwrap()).unwrap();
            prop_assert!((back - p).abs() <= 1e-10);
        }

        #[test]
        fn q_is_complement(x in -8.0f64..8.0) {
            let sum = q_function(x).unwrap() + normal_cdf(x).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn polynomial_derivatives(
            coeffs in proptest::collection::vec(-5.0f64..5.0, 5),
            x0 in -2.0f64..2.0,
            order in 1u32..=4,
        ) {
            let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            // Analytic k-th derivative of sum c_j x^j.
            let mut exact = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                let j = j as u32;
                if j >= order {
                    let falling: f64 = (0..order).map(|i| (j - i) as f64).product();
                    exact += c * falling * x0.powi((j - order) as i32);
                }
            }
            let est = derivative_at(f, x0, order, &DiffConfig::default()).unwrap();
            prop_assert!((est - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                "order {} est {} exact {}", order, est, exact);
        }
    }
}
