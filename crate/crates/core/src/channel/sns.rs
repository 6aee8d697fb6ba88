use super::bessel::{bessel_i0, bessel_i0_minus_one, bessel_i0e};
use super::{DetectorPair, SnsParams, SystemParams};
use crate::error::{Error, Result};
use crate::pairing::ChannelObservables;

/// Per-detector counting rates of the four Z-window types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsWindowRates {
    /// Both parties send.
    pub both: DetectorPair,
    /// Alice withholds, Bob sends.
    pub c0: DetectorPair,
    /// Alice sends, Bob withholds.
    pub c1: DetectorPair,
    /// Neither sends.
    pub neither: DetectorPair,
}

impl SnsWindowRates {
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        [self.both, self.c0, self.c1, self.neither]
            .into_iter()
            .flat_map(|p| [p.left, p.right])
    }
}

/// One-detector effective-event rate for phase-randomized coherent pulses.
///
/// `s` is half the total arriving intensity and `t` the interference
/// amplitude `eta * sqrt(mu_a mu_b)`. Evaluates
/// `(1 - p_d) e^{-s} I0(t) - (1 - p_d)^2 e^{-2s}` in a form that keeps
/// precision when `s` and `p_d` are both tiny.
pub(super) fn single_click_rate(p_d: f64, s: f64, t: f64) -> f64 {
    let keep = 1.0 - p_d;
    if t <= 30.0 {
        keep * (-2.0 * s).exp()
            * (s.exp_m1() * bessel_i0(t) + bessel_i0_minus_one(t) + p_d)
    } else {
        keep * (t - s).exp() * bessel_i0e(t) - keep * keep * (-2.0 * s).exp()
    }
}

/// Total effective-event rate (both detectors) when Alice sends intensity
/// `mu_a` and Bob `mu_b`, each phase-randomized.
pub fn two_source_rate(p_d: f64, eta: f64, mu_a: f64, mu_b: f64) -> f64 {
    let s = 0.5 * eta * (mu_a + mu_b);
    let t = eta * (mu_a * mu_b).sqrt();
    2.0 * single_click_rate(p_d, s, t)
}

pub fn sns_window_rates(sys: &SystemParams, p: &SnsParams) -> Result<SnsWindowRates> {
    sys.validate()?;
    p.validate()?;
    let x = sys.eta() * p.mu;
    let both = single_click_rate(sys.p_d, x, x);
    let one = single_click_rate(sys.p_d, 0.5 * x, 0.0);
    let dark = sys.p_d * (1.0 - sys.p_d);
    Ok(SnsWindowRates {
        both: DetectorPair::symmetric(both),
        c0: DetectorPair::symmetric(one),
        c1: DetectorPair::symmetric(one),
        neither: DetectorPair::symmetric(dark),
    })
}

/// Expected Z-window counts and derived observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsObservation {
    pub observables: ChannelObservables,
    pub rates: SnsWindowRates,
    pub n_both: f64,
    pub n_neither: f64,
    pub n_c0: f64,
    pub n_c1: f64,
    /// Single-photon counting rate.
    pub s1: f64,
    /// Phase-flip rate of single-photon events before misalignment.
    pub phase_flip_dark: f64,
}

/// Observables of the SNS channel with infinite decoy states.
pub fn sns_observables(sys: &SystemParams, p: &SnsParams) -> Result<SnsObservation> {
    let rates = sns_window_rates(sys, p)?;
    let z = p.n_pulses * p.p_z * p.p_z;
    let n_both = z * p.q * p.q * rates.both.total();
    let n_neither = z * (1.0 - p.q) * (1.0 - p.q) * rates.neither.total();
    let n_c0 = z * p.q * (1.0 - p.q) * rates.c0.total();
    let n_c1 = z * p.q * (1.0 - p.q) * rates.c1.total();
    let n_t = n_both + n_neither + n_c0 + n_c1;
    // Below one expected event the string is empty in practice.
    if !(n_t >= 1.0) {
        return Err(Error::NoData(format!(
            "no sifted bits at {} km (mu = {}, q = {})",
            sys.distance_km, p.mu, p.q
        )));
    }

    let eta = sys.eta();
    let p_d = sys.p_d;
    let s1 = (1.0 - p_d) * (eta + 2.0 * p_d * (1.0 - eta));
    let phase_flip_dark = if s1 > 0.0 {
        p_d * (1.0 - p_d) * (1.0 - eta) / s1
    } else {
        0.5
    };
    let phase_flip = sys.e_d * (1.0 - 2.0 * phase_flip_dark) + phase_flip_dark;
    let n1 = z * p.q * (1.0 - p.q) * p.mu * (-p.mu).exp() * s1;

    let observables = ChannelObservables {
        n_t,
        bit_flip: ((n_both + n_neither) / n_t).min(1.0),
        untagged_frac: (2.0 * n1 / n_t).min(1.0),
        phase_flip: phase_flip.clamp(0.0, 1.0),
    };
    Ok(SnsObservation {
        observables,
        rates,
        n_both,
        n_neither,
        n_c0,
        n_c1,
        s1,
        phase_flip_dark,
    })
}
