//! Chernoff bounds between observed counts, expectations and realized values.
//!
//! All four deviations solve an equation of the form `w(δ) g(±δ) = ln(ξ/2)`
//! with `g(x) = x - (1 + x) ln(1 + x)`, which is the logarithm of the
//! printed `(e^x / (1+x)^{1+x})` form.

use super::roots::brent;
use crate::error::{check_range, Error, Result};

/// `g(x) = x - (1 + x) ln(1 + x)` for `x > -1`; `g(-1) = -1`.
pub fn chernoff_g(x: f64) -> f64 {
    if x.abs() < 0.05 {
        // -sum_{k>=2} (-x)^k / (k (k - 1)), alternating for x > 0.
        let mut sum = 0.0;
        let mut pow = x * x;
        let mut k = 2.0;
        while k < 60.0 {
            let term = pow / (k * (k - 1.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow *= -x;
            k += 1.0;
        }
        -sum
    } else if x <= -1.0 {
        -1.0
    } else {
        x - (1.0 + x) * x.ln_1p()
    }
}

fn check_xi(xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidParam(format!("xi = {xi} must lie in (0, 1)")));
    }
    Ok((0.5 * xi).ln())
}

/// A bound pair and the deviations that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffSolution {
    pub lower: f64,
    pub upper: f64,
    pub delta_1: f64,
    /// `None` when the lower tail has no root (realized-value direction).
    pub delta_2: Option<f64>,
}

/// Relative residual `|lhs / ln(ξ/2) - 1|`.
pub fn relative_residual(lhs: f64, xi: f64) -> f64 {
    (lhs / (0.5 * xi).ln() - 1.0).abs()
}

/// `e^s - 1 - s` without cancellation near zero.
fn excess_exp(s: f64) -> f64 {
    if s.abs() < 0.05 {
        let mut term = 0.5 * s * s;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= s / k;
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        s.exp_m1() - s
    }
}

/// Expected-value bounds `X / (1 + δ1)` and `X / (1 - δ2)` from an observed
/// count. `X = 0` gives `(0, ln(2/ξ))`.
///
/// Writing the bound as `X e^s`, both defining equations reduce to
/// `e^s - 1 - s = ln(2/ξ) / X`, with `s < 0` for the lower and `s > 0` for
/// the upper bound.
pub fn expected_bounds(x_observed: f64, xi: f64) -> Result<ChernoffSolution> {
    let t = check_xi(xi)?;
    check_range("x_observed", x_observed, 0.0, f64::MAX)?;
    if x_observed == 0.0 {
        return Ok(ChernoffSolution {
            lower: 0.0,
            upper: -t,
            delta_1: f64::INFINITY,
            delta_2: Some(1.0),
        });
    }
    let x = x_observed;
    let c = -t / x;
    let f = |s: f64| excess_exp(s) - c;
    let w = brent(f, -(c + 1.0), 0.0, 1e-300)?;
    let s = brent(f, 0.0, std::f64::consts::LN_2 + c.ln_1p(), 1e-300)?;
    Ok(ChernoffSolution {
        lower: x * w.exp(),
        upper: x * s.exp(),
        delta_1: (-w).exp_m1(),
        delta_2: Some(-(-s).exp_m1()),
    })
}

/// Realized-value bounds with the assignment as printed: lower
/// `(1 + δ1') Y`, upper `(1 - δ2') Y`. Kept for comparison; the rate
/// pipeline uses [`real_bounds`].
pub fn real_bounds_as_printed(y_expected: f64, xi: f64) -> Result<ChernoffSolution> {
    let s = real_bounds(y_expected, xi)?;
    Ok(ChernoffSolution {
        lower: s.upper,
        upper: s.lower,
        ..s
    })
}

/// Realized-value bounds `(1 - δ2') Y <= φ <= (1 + δ1') Y` from an expected
/// value. When `Y <= ln(2/ξ)` the lower tail is vacuous and the lower bound
/// is 0.
pub fn real_bounds(y_expected: f64, xi: f64) -> Result<ChernoffSolution> {
    let t = check_xi(xi)?;
    check_range("y_expected", y_expected, 0.0, f64::MAX)?;
    if y_expected == 0.0 {
        return Ok(ChernoffSolution {
            lower: 0.0,
            upper: 0.0,
            delta_1: f64::INFINITY,
            delta_2: None,
        });
    }
    let y = y_expected;
    let c = -t / y;
    let up = |d: f64| -chernoff_g(d) - c;
    let mut hi = (2.0 * c).sqrt().min(1.0);
    while up(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric(format!("Chernoff deviation unbounded for Y = {y}")));
        }
    }
    let d1 = brent(up, 0.0, hi, 1e-300)?;
    let d2 = if c >= 1.0 {
        None
    } else {
        Some(brent(|d| -chernoff_g(-d) - c, 0.0, 1.0, 1e-300)?)
    };
    Ok(ChernoffSolution {
        lower: d2.map_or(0.0, |d| (1.0 - d) * y),
        upper: (1.0 + d1) * y,
        delta_1: d1,
        delta_2: d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_series_matches_direct_form() {
        for x in [0.049, -0.049, 0.01, -0.3, 0.3, 2.0] {
            let direct = x - (1.0 + x) * (1.0_f64 + x).ln();
            assert!(((chernoff_g(x) - direct) / direct).abs() < 1e-12, "x = {x}");
        }
        assert_eq!(chernoff_g(0.0), 0.0);
        assert_eq!(chernoff_g(-1.0), -1.0);
    }

    #[test]
    fn expected_bounds_residuals() {
        for x in [1e2, 1e4, 1e6, 1e9] {
            for xi in [1e-6, 1e-10] {
                let s = expected_bounds(x, xi).unwrap();
                let d2 = s.delta_2.unwrap();
                let r1 = relative_residual(x / (1.0 + s.delta_1) * chernoff_g(s.delta_1), xi);
                let r2 = relative_residual(x / (1.0 - d2) * chernoff_g(-d2), xi);
                assert!(r1 < 1e-9 && r2 < 1e-9, "x = {x}, xi = {xi}: {r1} {r2}");
                assert!(s.lower <= x && x <= s.upper);
            }
        }
    }

    #[test]
    fn concentration_limit() {
        let s = expected_bounds(1e10, 1e-10).unwrap();
        assert!(s.delta_1 < 1e-3 && s.delta_2.unwrap() < 1e-3);
        let r = real_bounds(1e10, 1e-10).unwrap();
        assert!(r.delta_1 < 1e-3 && r.delta_2.unwrap() < 1e-3);
    }

    #[test]
    fn real_bounds_residuals_and_orientation() {
        let xi = 1e-10;
        let r = real_bounds(1e5, xi).unwrap();
        let d2 = r.delta_2.unwrap();
        assert!(relative_residual(1e5 * chernoff_g(r.delta_1), xi) < 1e-9);
        assert!(relative_residual(1e5 * chernoff_g(-d2), xi) < 1e-9);
        assert!(r.lower <= 1e5 && 1e5 <= r.upper);
        let p = real_bounds_as_printed(1e5, xi).unwrap();
        assert_eq!((p.lower, p.upper), (r.upper, r.lower));
    }

    #[test]
    fn small_expectations() {
        let xi = 1e-10;
        let r = real_bounds(5.0, xi).unwrap();
        assert_eq!(r.lower, 0.0);
        assert!(r.delta_2.is_none() && r.upper > 5.0);
        let e = expected_bounds(0.0, xi).unwrap();
        assert_eq!(e.lower, 0.0);
        assert!((e.upper - (2.0 / xi).ln()).abs() < 1e-12);
        let e = expected_bounds(1e-6, xi).unwrap();
        assert!(e.lower < 1e-300);
        assert!(((e.upper - (2.0 / xi).ln()) / e.upper).abs() < 1e-5);
        let e = expected_bounds(1.0, xi).unwrap();
        assert!(e.upper > 1.0 && e.lower < 1.0);
        assert!(expected_bounds(10.0, 0.0).is_err());
        assert!(real_bounds(-1.0, 0.1).is_err());
    }
}
