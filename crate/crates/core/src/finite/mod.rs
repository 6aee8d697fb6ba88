//! Finite-size signature rate: Chernoff and Serfling bounds, decoy
//! estimation, pair-count bookkeeping and the block-size search.

mod chernoff;
mod decoy;
mod pipeline;
mod quadrature;
mod roots;

pub use chernoff::{
    chernoff_g, expected_bounds, real_bounds, real_bounds_as_printed, relative_residual,
    ChernoffSolution,
};
pub use decoy::{
    decoy_eph_upper, decoy_s1_lower, slice_rates, DecoyObservations, PhaseErrorBound,
    SinglePhotonBound,
};
pub use pipeline::{
    finite_estimate, finite_min_length, finite_rate_at, finite_rate_pipeline, FiniteEstimate,
    MAX_BLOCK_PULSES,
};
pub use quadrature::integrate;

use serde::{Deserialize, Serialize};

use crate::channel::SnsParams;
use crate::error::{check_prob, Error, Result};
use crate::pairing::entropy_unchecked;
use crate::security::{
    forgery_prob, forgery_threshold, guess_error_rate, repudiation_prob, thresholds,
    SecurityReport,
};

/// Free parameters of the finite-size SNS protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiniteParams {
    pub mu: f64,
    pub q: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Vacuum-decoy probability.
    pub p0: f64,
    pub p1_dec: f64,
    pub p2_dec: f64,
    pub p_z: f64,
    /// Phase-slice width in radians.
    pub delta_slice: f64,
    /// Test bits as a fraction of a half-signature.
    pub gamma_t: f64,
    pub eps_pe: f64,
    /// Forgery-bound parameter used by the finite bounds.
    pub g: f64,
    /// Chernoff failure probability.
    pub xi: f64,
    pub n_pulses: f64,
}

impl Default for FiniteParams {
    fn default() -> Self {
        Self {
            mu: 0.4,
            q: 0.03,
            mu1: 0.1,
            mu2: 0.4,
            p0: 0.3,
            p1_dec: 0.4,
            p2_dec: 0.3,
            p_z: 0.8,
            delta_slice: 0.3,
            gamma_t: 0.5,
            eps_pe: 1e-7,
            g: 1e-12,
            xi: 1e-10,
            n_pulses: 1e14,
        }
    }
}

impl FiniteParams {
    pub fn validate(&self) -> Result<()> {
        self.sns().validate()?;
        for (name, v) in [("p0", self.p0), ("p1_dec", self.p1_dec), ("p2_dec", self.p2_dec)] {
            check_prob(name, v)?;
        }
        if self.p0 + self.p1_dec + self.p2_dec > 1.0 + 1e-12 {
            return Err(Error::InvalidParam("decoy probabilities sum above 1".into()));
        }
        if !(self.mu1 > 0.0 && self.mu1 < self.mu2) {
            return Err(Error::InvalidParam(format!(
                "decoy intensities must satisfy 0 < mu1 = {} < mu2 = {}",
                self.mu1, self.mu2
            )));
        }
        if !(self.delta_slice > 0.0 && self.delta_slice < 2.0 * std::f64::consts::PI) {
            return Err(Error::InvalidParam(format!(
                "delta_slice = {} must lie in (0, 2 pi)",
                self.delta_slice
            )));
        }
        for (name, v) in [("gamma_t", self.gamma_t), ("eps_pe", self.eps_pe), ("xi", self.xi)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParam(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        check_prob("g", self.g)?;
        Ok(())
    }

    pub fn sns(&self) -> SnsParams {
        SnsParams {
            mu: self.mu,
            q: self.q,
            p_z: self.p_z,
            n_pulses: self.n_pulses,
        }
    }

    pub fn with_pulses(mut self, n_pulses: f64) -> Self {
        self.n_pulses = n_pulses;
        self
    }
}

/// Serfling penalty for estimating the mismatch rate of `half_len` bits
/// from `t` sampled ones.
pub fn serfling_mu(half_len: f64, t: f64, eps_pe: f64) -> Result<f64> {
    if !(t > 0.0 && t <= half_len) {
        return Err(Error::InvalidParam(format!(
            "sample size {t} must lie in (0, {half_len}]"
        )));
    }
    if !(eps_pe > 0.0 && eps_pe <= 1.0) {
        return Err(Error::InvalidParam(format!("eps_pe = {eps_pe} must lie in (0, 1]")));
    }
    Ok(((half_len - t + 1.0) * (1.0 / eps_pe).ln() / (t * 2.0 * half_len)).sqrt())
}

/// `min(e_t + mu, 1)`.
pub fn finite_bit_flip(e_t: f64, mu_pen: f64) -> f64 {
    (e_t + mu_pen).min(1.0)
}

/// Untagged-pair bookkeeping of one half-signature of `L / 2` outcome bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCounts {
    pub n0: f64,
    pub n1: f64,
    pub n2: f64,
    pub n_ut: f64,
    pub n0_lower: f64,
    pub n2_upper: f64,
    pub n_ut_lower: f64,
}

impl PairCounts {
    pub fn tagged_tagged(sig_len: f64, d: f64) -> f64 {
        0.5 * sig_len * (1.0 - d) * (1.0 - d)
    }
}

pub fn pair_counts(sig_len: f64, d_uf: f64, e_ph: f64, xi: f64) -> Result<PairCounts> {
    check_prob("d_uf", d_uf)?;
    check_prob("e_ph", e_ph)?;
    let dd = d_uf * d_uf;
    let n0 = 0.5 * sig_len * dd * (1.0 - e_ph) * (1.0 - e_ph);
    let n1 = sig_len * dd * e_ph * (1.0 - e_ph);
    let n2 = 0.5 * sig_len * dd * e_ph * e_ph;
    let n_ut = sig_len * d_uf * (1.0 - d_uf);
    Ok(PairCounts {
        n0,
        n1,
        n2,
        n_ut,
        n0_lower: real_bounds(n0, xi)?.lower,
        n2_upper: real_bounds(n2, xi)?.upper,
        n_ut_lower: real_bounds(n_ut, xi)?.lower,
    })
}

/// Finite secure fraction of the paired half-signature.
pub fn hf(pc: &PairCounts, e_ph: f64, sig_len: f64) -> Result<f64> {
    let even = pc.n0_lower + pc.n2_upper;
    if !(even > 0.0) {
        return Err(Error::NoData("no even-parity untagged pairs".into()));
    }
    let h_even = entropy_unchecked((pc.n2_upper / even).min(1.0));
    Ok(2.0 / sig_len * (even * (1.0 - h_even) + pc.n_ut_lower * (1.0 - entropy_unchecked(e_ph))))
}

/// Finite security report at a fixed length. Returns `None` when the
/// thresholds cannot be placed.
pub fn finite_security(
    hf_val: f64,
    e_f: f64,
    p: &FiniteParams,
    eps_e: f64,
    sig_len: u64,
) -> Result<Option<SecurityReport>> {
    if !(hf_val > 0.0) {
        return Ok(None);
    }
    let p_e = guess_error_rate(hf_val.min(1.0))?;
    if e_f >= p_e {
        return Ok(None);
    }
    let (s_a, s_v) = thresholds(e_f, p_e)?;
    let r = forgery_threshold(sig_len, s_v);
    let p_fo = (forgery_prob(sig_len, hf_val, r, p.g, eps_e)? + p.eps_pe + 8.0 * p.xi).min(1.0);
    let p_re = repudiation_prob(sig_len, s_a, s_v)?;
    let p_ro = (2.0 * p.eps_pe).min(1.0);
    Ok(Some(SecurityReport {
        p_ro,
        p_fo,
        p_re,
        epsilon: p_ro.max(p_fo).max(p_re),
        s_a,
        s_v,
        p_e,
        sig_len,
        r,
        g: p.g,
        eps_e,
        e_half: e_f,
        secure_fraction: hf_val,
    }))
}
