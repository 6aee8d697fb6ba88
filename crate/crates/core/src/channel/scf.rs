use super::sns::single_click_rate;
use super::{DetectorPair, ScfParams, SystemParams};
use crate::error::{Error, Result};
use crate::pairing::ChannelObservables;

/// SCF counting rates, before and after misalignment mixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfWindowRates {
    pub both: DetectorPair,
    /// Exactly one party sends.
    pub z_tilde: DetectorPair,
    pub neither: DetectorPair,
    pub both_mixed: DetectorPair,
    pub z_tilde_mixed: DetectorPair,
    pub neither_mixed: DetectorPair,
}

impl ScfWindowRates {
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        [
            self.both,
            self.z_tilde,
            self.neither,
            self.both_mixed,
            self.z_tilde_mixed,
            self.neither_mixed,
        ]
        .into_iter()
        .flat_map(|p| [p.left, p.right])
    }
}

pub fn scf_window_rates(sys: &SystemParams, p: &ScfParams) -> Result<ScfWindowRates> {
    sys.validate()?;
    p.validate()?;
    let p_d = sys.p_d;
    let x = sys.eta() * p.mu;
    let stay = (-2.0 * x).exp();
    // Both pulses interfere constructively into the left detector.
    let both = DetectorPair {
        left: stay * p_d * (1.0 - p_d) - (-2.0 * x).exp_m1() * (1.0 - p_d),
        right: stay * (1.0 - p_d) * p_d,
    };
    let z_tilde = DetectorPair::symmetric(single_click_rate(p_d, 0.5 * x, 0.0));
    let neither = DetectorPair::symmetric(p_d * (1.0 - p_d));
    Ok(ScfWindowRates {
        both,
        z_tilde,
        neither,
        both_mixed: both.mixed(sys.e_d),
        z_tilde_mixed: z_tilde.mixed(sys.e_d),
        neither_mixed: neither.mixed(sys.e_d),
    })
}

/// Bounds on the X-basis counting rate at one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XRateBounds {
    pub upper: f64,
    /// Lower bound after clamping at zero.
    pub lower: f64,
    /// Unclamped lower bound as printed; may be negative.
    pub lower_raw: f64,
}

impl XRateBounds {
    pub fn lower_clamped(&self) -> bool {
        self.lower_raw < 0.0
    }
}

pub fn x_rate_bounds(mu: f64, s_neither: f64, s_both: f64) -> XRateBounds {
    let em = (-mu).exp();
    let one_m = -(-mu).exp_m1();
    let (so, sb) = (s_neither.sqrt(), s_both.sqrt());
    let base = em * s_neither + s_both / em;
    let cross = 2.0 * so * sb + 2.0 * one_m * so + 2.0 * one_m / em * sb;
    let norm = 2.0 * (1.0 + em);
    let upper = (base + one_m * one_m / em + cross) / norm;
    let lower_raw = (base - cross) / norm;
    XRateBounds {
        upper,
        lower: lower_raw.max(0.0),
        lower_raw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfObservation {
    /// Observables fed to the pairing step. The phase-flip entry is capped
    /// at 1/2: a bound above 1/2 carries no information.
    pub observables: ChannelObservables,
    pub rates: ScfWindowRates,
    pub n_both_v: f64,
    pub n_neither_v: f64,
    pub n_z_tilde_v: f64,
    pub n_v: f64,
    pub bounds_left: XRateBounds,
    pub bounds_right: XRateBounds,
    /// Phase-flip upper bound clamped to `[0, 1]`.
    pub phase_flip_bound: f64,
    /// Unclamped bound.
    pub phase_flip_bound_raw: f64,
}

impl ScfObservation {
    pub fn phase_bound_clamped(&self) -> bool {
        !(0.0..=1.0).contains(&self.phase_flip_bound_raw)
    }

    pub fn lower_bound_clamped(&self) -> bool {
        self.bounds_left.lower_clamped() || self.bounds_right.lower_clamped()
    }
}

pub fn scf_observables(sys: &SystemParams, p: &ScfParams) -> Result<ScfObservation> {
    let rates = scf_window_rates(sys, p)?;
    let v = p.n_pulses * p.gamma_v;
    let n_both_v = v * p.q * p.q * rates.both_mixed.total();
    let n_neither_v = v * (1.0 - p.q) * (1.0 - p.q) * rates.neither_mixed.total();
    let n_z_tilde_v = 2.0 * v * p.q * (1.0 - p.q) * rates.z_tilde_mixed.total();
    let n_v = n_both_v + n_neither_v + n_z_tilde_v;
    // Below one expected event the string is empty in practice.
    if !(n_v >= 1.0) {
        return Err(Error::NoData(format!(
            "no effective events in the test set at {} km (mu = {}, q = {})",
            sys.distance_km, p.mu, p.q
        )));
    }

    let bounds_left = x_rate_bounds(p.mu, rates.neither_mixed.left, rates.both_mixed.left);
    let bounds_right = x_rate_bounds(p.mu, rates.neither_mixed.right, rates.both_mixed.right);
    let z = rates.z_tilde_mixed;
    let em = (-p.mu).exp();
    let raw = if z.total() > 0.0 {
        ((1.0 + em) * (bounds_right.upper - bounds_left.lower) + 2.0 * z.left)
            / (2.0 * z.total())
    } else {
        f64::INFINITY
    };
    let phase_flip_bound = raw.clamp(0.0, 1.0);

    let observables = ChannelObservables {
        n_t: n_v * (1.0 - p.gamma_v) / p.gamma_v,
        bit_flip: ((n_both_v + n_neither_v) / n_v).min(1.0),
        untagged_frac: (n_z_tilde_v / n_v).min(1.0),
        phase_flip: phase_flip_bound.min(0.5),
    };
    Ok(ScfObservation {
        observables,
        rates,
        n_both_v,
        n_neither_v,
        n_z_tilde_v,
        n_v,
        bounds_left,
        bounds_right,
        phase_flip_bound,
        phase_flip_bound_raw: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(p_d: f64, e_d: f64, distance_km: f64) -> SystemParams {
        SystemParams {
            p_d,
            e_d,
            distance_km,
            ..SystemParams::default()
        }
    }

    fn params(mu: f64, q: f64) -> ScfParams {
        ScfParams {
            mu,
            q,
            gamma_v: ScfParams::DEFAULT_GAMMA_V,
            n_pulses: 1e12,
        }
    }

    #[test]
    fn rates_match_closed_forms() {
        // eta = 0.05 at zero distance.
        let s = SystemParams {
            eta_d: 0.05,
            ..sys(1e-11, 0.1, 0.0)
        };
        let (p_d, eta, mu, e_d) = (1e-11_f64, 0.05_f64, 0.3_f64, 0.1_f64);
        let r = scf_window_rates(&s, &params(mu, 0.1)).unwrap();
        let e2 = (-2.0 * eta * mu).exp();
        let bl = e2 * p_d * (1.0 - p_d) + (1.0 - e2) * (1.0 - p_d);
        let br = e2 * (1.0 - p_d) * p_d;
        let z = (1.0 - p_d) * (-eta * mu / 2.0).exp() - (1.0 - p_d).powi(2) * (-eta * mu).exp();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(r.both.left, bl) < 1e-12);
        assert!(rel(r.both.right, br) < 1e-12);
        assert!(rel(r.z_tilde.left, z) < 1e-12);
        assert!(rel(r.both_mixed.left, (1.0 - e_d) * bl + e_d * br) < 1e-12);
        assert!(rel(r.both_mixed.right, (1.0 - e_d) * br + e_d * bl) < 1e-12);
    }

    #[test]
    fn mixing_limits() {
        let r = scf_window_rates(&sys(1e-6, 0.0, 50.0), &params(0.2, 0.1)).unwrap();
        assert_eq!(r.both_mixed, r.both);
        assert_eq!(r.z_tilde_mixed, r.z_tilde);
        let r = scf_window_rates(&sys(1e-6, 0.5, 50.0), &params(0.2, 0.1)).unwrap();
        let mean = 0.5 * (r.both.left + r.both.right);
        assert!((r.both_mixed.left - mean).abs() < 1e-16);
        assert!((r.both_mixed.right - mean).abs() < 1e-16);
    }

    #[test]
    fn bounds_ordered_and_clamped() {
        for d in [0.0, 100.0, 300.0, 600.0] {
            for mu in [0.01, 0.1, 0.5, 1.5] {
                let o = scf_observables(&sys(1e-11, 0.05, d), &params(mu, 0.2)).unwrap();
                for b in [o.bounds_left, o.bounds_right] {
                    assert!(b.lower_raw <= b.upper);
                    assert!(b.lower >= 0.0);
                    assert_eq!(b.lower_clamped(), b.lower_raw < 0.0);
                }
                assert!((0.0..=1.0).contains(&o.phase_flip_bound));
                assert!(o.observables.phase_flip <= 0.5);
            }
        }
    }

    #[test]
    fn counts_add_up() {
        let o = scf_observables(&sys(1e-11, 0.0, 200.0), &params(0.1, 0.1)).unwrap();
        assert_eq!(o.n_v, o.n_both_v + o.n_neither_v + o.n_z_tilde_v);
        let e = (o.n_both_v + o.n_neither_v) / o.n_v;
        assert_eq!(o.observables.bit_flip, e);
        assert!((o.observables.n_t - 9.0 * o.n_v).abs() < 1e-6 * o.n_v);
    }

    #[test]
    fn no_light_no_dark_counts() {
        let err = scf_observables(&sys(0.0, 0.0, 0.0), &params(1e-320, 0.1)).unwrap_err();
        assert!(matches!(err, Error::NoData(_)));
    }

    #[test]
    fn rates_in_unit_interval() {
        for d in [0.0, 10.0, 200.0, 1000.0] {
            for mu in [1e-4, 0.3, 5.0] {
                let r = scf_window_rates(&sys(1e-3, 0.2, d), &params(mu, 0.3)).unwrap();
                assert!(r.iter().all(|v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}
