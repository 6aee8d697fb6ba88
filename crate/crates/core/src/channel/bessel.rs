//! Modified Bessel function of the first kind, order zero.

const SERIES_LIMIT: f64 = 30.0;

/// `I0(x)` for `x >= 0`. Negative arguments use the even symmetry.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        x.exp() * asymptotic_scaled(x)
    }
}

/// Exponentially scaled `e^{-x} I0(x)`; finite for every `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        (-x).exp() * series(x)
    } else {
        asymptotic_scaled(x)
    }
}

/// `I0(x) - 1` without cancellation for small `x`.
pub(crate) fn bessel_i0_minus_one(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series_tail(x)
    } else {
        bessel_i0(x) - 1.0
    }
}

fn series(x: f64) -> f64 {
    1.0 + series_tail(x)
}

// Sum over k >= 1 of (x/2)^{2k} / (k!)^2; all terms positive, no cancellation.
fn series_tail(x: f64) -> f64 {
    let q = 0.25 * x * x;
    if q == 0.0 {
        return 0.0;
    }
    let mut term = q;
    let mut sum = q;
    let mut k = 2.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

// e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k), truncated
// at the smallest term.
fn asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next < sum * 1e-17 {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        let cases = [
            (1.0, 1.266_065_877_752_008_4),
            (10.0, 2_815.716_628_466_254),
            (0.1, 1.002_501_562_934_095_6),
            (3.75, 9.118_945_860_844_564),
            (20.0, 4.355_828_255_955_353e7),
        ];
        for (x, want) in cases {
            let got = bessel_i0(x);
            assert!(((got - want) / want).abs() < 1e-13, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn tail_matches_difference() {
        for x in [1e-8, 1e-3, 0.5, 2.0] {
            let tail = bessel_i0_minus_one(x);
            let q = 0.25 * x * x;
            // Leading terms q + q^2/4 + q^3/36.
            let approx = q + q * q / 4.0 + q * q * q / 36.0 + q.powi(4) / 576.0;
            if x < 1e-2 {
                assert!(((tail - approx) / approx).abs() < 1e-14, "x = {x}");
            }
            assert!((tail - (bessel_i0(x) - 1.0)).abs() < 1e-15 * bessel_i0(x));
        }
        assert_eq!(bessel_i0_minus_one(0.0), 0.0);
    }

    #[test]
    fn branches_agree_at_switch() {
        let below = series(SERIES_LIMIT) * (-SERIES_LIMIT).exp();
        let above = asymptotic_scaled(SERIES_LIMIT);
        assert!(((below - above) / below).abs() < 1e-13);
    }

    #[test]
    fn scaled_form_is_finite_for_large_arguments() {
        let v = bessel_i0e(1e6);
        assert!(v.is_finite() && v > 0.0);
        assert!((v * (2.0 * std::f64::consts::PI * 1e6).sqrt() - 1.0).abs() < 1e-6);
        assert_eq!(bessel_i0(-2.0), bessel_i0(2.0));
    }
}
