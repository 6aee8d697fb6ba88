//! Asymptotic security bounds, minimal signature length and signature rate.

use serde::{Deserialize, Serialize};

use crate::channel::{scf_observables, sns_observables, ScfParams, SnsParams, SystemParams};
use crate::error::{check_prob, Error, Infeasibility, Result};
use crate::pairing::{
    entropy_unchecked, inv_binary_entropy, pair_bit_flip, secure_fraction, ChannelObservables,
};

/// Largest signature length searched before giving up.
pub const MAX_SIG_LEN: u64 = 1_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub p_ro: f64,
    pub p_fo: f64,
    pub p_re: f64,
    /// `max(p_ro, p_fo, p_re)`.
    pub epsilon: f64,
    pub s_a: f64,
    pub s_v: f64,
    pub p_e: f64,
    pub sig_len: u64,
    pub r: u64,
    pub g: f64,
    pub eps_e: f64,
    /// Mismatch rate the thresholds are built around.
    pub e_half: f64,
    /// Secure fraction the forgery bound was evaluated with.
    pub secure_fraction: f64,
}

impl SecurityReport {
    pub fn meets(&self, target: f64) -> bool {
        self.epsilon <= target
    }
}

/// Forger's minimum guessing error, `H(P_e) = h`.
pub fn guess_error_rate(h: f64) -> Result<f64> {
    inv_binary_entropy(h)
}

/// Acceptance thresholds splitting `[e_half, p_e]` into thirds.
pub fn thresholds(e_half: f64, p_e: f64) -> Result<(f64, f64)> {
    check_prob("e_half", e_half)?;
    check_prob("p_e", p_e)?;
    if e_half >= p_e {
        return Err(Error::infeasible(Infeasibility::ThresholdGap { e_half, p_e }));
    }
    let gap = p_e - e_half;
    Ok((e_half + gap / 3.0, e_half + 2.0 * gap / 3.0))
}

/// `2 exp(-(s_v - s_a)^2 L / 4)`, capped at 1.
pub fn repudiation_prob(sig_len: u64, s_a: f64, s_v: f64) -> Result<f64> {
    if !(s_v > s_a) {
        return Err(Error::InvalidParam(format!("s_v = {s_v} must exceed s_a = {s_a}")));
    }
    let d = s_v - s_a;
    Ok((2.0 * (-d * d * sig_len as f64 / 4.0).exp()).min(1.0))
}

/// `(1/g) [2^{-(L/2)(h - H(2r/L))} + eps_e] + g`, capped at 1.
pub fn forgery_prob(sig_len: u64, h: f64, r: u64, g: f64, eps_e: f64) -> Result<f64> {
    check_prob("g", g)?;
    check_prob("eps_e", eps_e)?;
    if sig_len == 0 || 2 * r > sig_len {
        return Err(Error::InvalidParam(format!(
            "r = {r} must satisfy 0 <= 2r <= L = {sig_len}, L > 0"
        )));
    }
    if g == 0.0 {
        return Ok(1.0);
    }
    let half = sig_len as f64 / 2.0;
    let exponent = -half * (h - entropy_unchecked(2.0 * r as f64 / sig_len as f64));
    let log2_term = exponent - g.log2();
    if log2_term >= 0.0 {
        return Ok(1.0);
    }
    Ok((log2_term.exp2() + eps_e / g + g).min(1.0))
}

/// Forgery-count threshold `floor(s_v L / 2)`.
pub fn forgery_threshold(sig_len: u64, s_v: f64) -> u64 {
    (s_v * sig_len as f64 / 2.0).floor() as u64
}

/// Smallest even `L` for which `check(L)` returns a report meeting `target`.
///
/// Doubling from 2, then bisection between the last failing and first
/// passing lengths. `check` returns `None` when no report can be formed at
/// that length.
pub(crate) fn search_min_length<F>(target: f64, mut check: F) -> Result<SecurityReport>
where
    F: FnMut(u64) -> Result<Option<SecurityReport>>,
{
    let passes = |rep: &Option<SecurityReport>| rep.as_ref().is_some_and(|r| r.meets(target));
    let mut hi = 2_u64;
    let mut found = loop {
        let rep = check(hi)?;
        if passes(&rep) {
            break rep.unwrap();
        }
        if hi >= MAX_SIG_LEN {
            return Err(Error::infeasible(Infeasibility::LengthCap { cap: MAX_SIG_LEN as f64 }));
        }
        hi = (hi * 2).min(MAX_SIG_LEN);
    };
    let mut lo = hi / 2;
    while hi - lo > 2 {
        let mid = (lo + (hi - lo) / 2) & !1;
        let rep = check(mid)?;
        if passes(&rep) {
            hi = mid;
            found = rep.unwrap();
        } else {
            lo = mid;
        }
    }
    Ok(found)
}

/// Asymptotic report at a fixed length; `p_ro` is zero.
pub fn asymptotic_report(
    sig_len: u64,
    h: f64,
    e_half: f64,
    g: f64,
    eps_e: f64,
) -> Result<SecurityReport> {
    let p_e = guess_error_rate(h.clamp(0.0, 1.0))?;
    let (s_a, s_v) = thresholds(e_half, p_e)?;
    let r = forgery_threshold(sig_len, s_v);
    let p_fo = forgery_prob(sig_len, h, r, g, eps_e)?;
    let p_re = repudiation_prob(sig_len, s_a, s_v)?;
    Ok(SecurityReport {
        p_ro: 0.0,
        p_fo,
        p_re,
        epsilon: p_fo.max(p_re),
        s_a,
        s_v,
        p_e,
        sig_len,
        r,
        g,
        eps_e,
        e_half,
        secure_fraction: h,
    })
}

/// Rejects settings that no signature length can rescue.
pub(crate) fn precheck(h: f64, e_half: f64, floor: f64, target: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::infeasible(Infeasibility::NoMinEntropy { secure_fraction: h }));
    }
    let p_e = guess_error_rate(h.min(1.0))?;
    if e_half >= p_e {
        return Err(Error::infeasible(Infeasibility::ThresholdGap { e_half, p_e }));
    }
    if floor >= target {
        return Err(Error::infeasible(Infeasibility::ForgeryFloor { floor, target }));
    }
    Ok(p_e)
}

/// Minimal even signature length meeting `target` with the asymptotic bounds.
pub fn min_signature_length(
    h: f64,
    e_half: f64,
    target: f64,
    g: f64,
    eps_e: f64,
) -> Result<SecurityReport> {
    check_prob("target", target)?;
    check_prob("g", g)?;
    check_prob("eps_e", eps_e)?;
    let floor = if g > 0.0 { eps_e / g + g } else { f64::INFINITY };
    precheck(h, e_half, floor, target)?;
    search_min_length(target, |len| asymptotic_report(len, h, e_half, g, eps_e).map(Some))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Protocol {
    Sns(SnsParams),
    Scf(ScfParams),
}

impl Protocol {
    pub fn n_pulses(&self) -> f64 {
        match self {
            Protocol::Sns(p) => p.n_pulses,
            Protocol::Scf(p) => p.n_pulses,
        }
    }

    pub fn observables(&self, sys: &SystemParams) -> Result<ChannelObservables> {
        match self {
            Protocol::Sns(p) => Ok(sns_observables(sys, p)?.observables),
            Protocol::Scf(p) => Ok(scf_observables(sys, p)?.observables),
        }
    }
}

/// Outcome of a rate pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// Signatures per pulse.
    pub rate: f64,
    /// Number of one-bit messages that can be signed.
    pub n_s: f64,
    pub n_pulses: f64,
    pub sig_len: u64,
    pub report: SecurityReport,
    /// `rate / baseline - 1` when a baseline was computed alongside.
    pub improvement: Option<f64>,
}

/// Secure fraction and mismatch rate handed to the security bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigningInputs {
    pub n_bits: f64,
    pub secure_fraction: f64,
    pub bit_flip: f64,
}

/// With pairing: half as many bits, pairing-improved secure fraction and
/// the paired mismatch rate. Without: the unpaired string with secure
/// fraction `d (1 - H(e_ph))`.
pub fn signing_inputs(obs: &ChannelObservables, use_rp: bool) -> Result<SigningInputs> {
    let d = obs.untagged_frac;
    let e_ph = obs.phase_flip.min(0.5);
    if use_rp {
        Ok(SigningInputs {
            n_bits: (obs.n_t.floor() / 2.0).floor(),
            secure_fraction: secure_fraction(d, e_ph)?,
            bit_flip: pair_bit_flip(obs.bit_flip)?,
        })
    } else {
        Ok(SigningInputs {
            n_bits: obs.n_t.floor(),
            secure_fraction: d * (1.0 - entropy_unchecked(e_ph)),
            bit_flip: obs.bit_flip,
        })
    }
}

pub fn rate_from_observables(
    sys: &SystemParams,
    obs: &ChannelObservables,
    n_pulses: f64,
    use_rp: bool,
) -> Result<RateResult> {
    let inputs = signing_inputs(obs, use_rp)?;
    let report = min_signature_length(
        inputs.secure_fraction,
        inputs.bit_flip,
        sys.epsilon,
        sys.g,
        sys.eps_e,
    )?;
    let n_s = inputs.n_bits / (2.0 * report.sig_len as f64);
    Ok(RateResult {
        rate: n_s / n_pulses,
        n_s,
        n_pulses,
        sig_len: report.sig_len,
        report,
        improvement: None,
    })
}

/// Asymptotic signature rate of one protocol setting.
pub fn asymptotic_pipeline(sys: &SystemParams, proto: &Protocol, use_rp: bool) -> Result<RateResult> {
    let obs = proto.observables(sys)?;
    rate_from_observables(sys, &obs, proto.n_pulses(), use_rp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_cases() {
        let (a, v) = thresholds(0.0, 0.3).unwrap();
        assert!((a - 0.1).abs() < 1e-15 && (v - 0.2).abs() < 1e-15);
        let (a, v) = thresholds(0.02, 0.11).unwrap();
        assert!((a - 0.05).abs() < 1e-15 && (v - 0.08).abs() < 1e-15);
        assert!(thresholds(0.1, 0.1).unwrap_err().is_infeasible());
    }

    #[test]
    fn repudiation_cases() {
        assert_eq!(repudiation_prob(0, 0.1, 0.2).unwrap(), 1.0);
        let p = repudiation_prob(100_000, 0.0, 0.06).unwrap();
        assert!(((p - 2.0 * (-90.0_f64).exp()) / p).abs() < 1e-12);
        let len = 4.0 * (2.0 / 1e-5_f64).ln() / (0.03 * 0.03);
        let p = 2.0 * (-0.03 * 0.03 * len / 4.0_f64).exp();
        assert!((p - 1e-5).abs() < 1e-17);
        assert!(repudiation_prob(10, 0.2, 0.1).is_err());
    }

    #[test]
    fn forgery_cases() {
        let p = forgery_prob(10_000, 0.5, 0, 1e-12, 0.0).unwrap();
        assert!(((p - 1e-12) / 1e-12).abs() < 1e-12);
        // h below H(2r/L): the bound is vacuous.
        assert_eq!(forgery_prob(1000, 0.1, 250, 1e-12, 0.0).unwrap(), 1.0);
        let p = forgery_prob(1_000_000, 0.9, 10, 1e-12, 1e-18).unwrap();
        assert!(((p - (1e-6 + 1e-12)) / p).abs() < 1e-12);
        assert!(forgery_prob(10, 0.5, 6, 1e-12, 0.0).is_err());
    }

    #[test]
    fn forgery_log_space_matches_direct() {
        for (len, h, r) in [(200_u64, 0.9, 5_u64), (1000, 0.7, 30), (400, 0.99, 0)] {
            let g = 1e-3;
            let direct = (2f64.powf(-(len as f64 / 2.0) * (h - entropy_unchecked(2.0 * r as f64 / len as f64)))
                + 1e-9)
                / g
                + g;
            let got = forgery_prob(len, h, r, g, 1e-9).unwrap();
            assert!(((got - direct.min(1.0)) / got).abs() < 1e-12, "{len} {h} {r}");
        }
    }

    #[test]
    fn min_length_respects_repudiation_inversion() {
        let rep = min_signature_length(0.6, 0.01, 1e-5, 1e-12, 1e-18).unwrap();
        assert_eq!(rep.sig_len % 2, 0);
        let d = rep.s_v - rep.s_a;
        let floor = 4.0 * (2e5_f64).ln() / (d * d);
        assert!(rep.sig_len as f64 >= floor);
        assert!(rep.p_fo <= 1e-5 && rep.p_re <= 1e-5);
        let prev = asymptotic_report(rep.sig_len - 2, 0.6, 0.01, 1e-12, 1e-18).unwrap();
        assert!(!prev.meets(1e-5));
    }

    #[test]
    fn min_length_infeasible_cases() {
        let err = min_signature_length(0.0, 0.01, 1e-5, 1e-12, 1e-18).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Infeasibility::NoMinEntropy { .. })));
        let err = min_signature_length(0.1, 0.2, 1e-5, 1e-12, 1e-18).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Infeasibility::ThresholdGap { .. })));
        let err = min_signature_length(0.5, 0.01, 1e-5, 1e-12, 1e-15).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Infeasibility::ForgeryFloor { .. })));
    }

    #[test]
    fn tighter_target_never_shortens() {
        let a = min_signature_length(0.5, 0.02, 1e-5, 1e-12, 1e-18).unwrap();
        let b = min_signature_length(0.5, 0.02, 5e-6, 1e-12, 1e-18).unwrap();
        assert!(b.sig_len >= a.sig_len);
    }

    #[test]
    fn zero_distance_smoke() {
        let sys = SystemParams { p_d: 0.0, ..SystemParams::default() };
        let proto = Protocol::Sns(SnsParams { mu: 0.3, q: 0.2, p_z: 0.9, n_pulses: 1e12 });
        let res = asymptotic_pipeline(&sys, &proto, true).unwrap();
        assert!(res.rate > 0.0);
        assert!((res.report.epsilon - res.report.p_fo.max(res.report.p_re)).abs() == 0.0);
    }
}
