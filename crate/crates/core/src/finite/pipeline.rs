use super::chernoff::real_bounds;
use super::decoy::{decoy_eph_upper, decoy_s1_lower, DecoyObservations};
use super::{finite_bit_flip, finite_security, hf, pair_counts, serfling_mu, FiniteParams};
use crate::channel::{sns_observables, SystemParams};
use crate::error::{Error, Infeasibility, Result};
use crate::pairing::{entropy_unchecked, pair_bit_flip, secure_fraction};
use crate::security::{precheck, search_min_length, RateResult, SecurityReport};

/// Largest block size tried when sizing a single signature.
pub const MAX_BLOCK_PULSES: f64 = 1e30;
const MIN_BLOCK_PULSES: f64 = 1e6;
const BLOCK_REL_TOL: f64 = 1e-4;

/// Parameters estimated from one block of `n_pulses` pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteEstimate {
    pub n_t: f64,
    pub bit_flip: f64,
    pub s1_lower: f64,
    pub e_ph_decoy: f64,
    pub n1_lower: f64,
    /// Untagged fraction of the sifted string.
    pub d_uf: f64,
    /// Phase-flip rate of the realized untagged bits.
    pub e_ph: f64,
    pub decoy: DecoyObservations,
}

pub fn finite_estimate(sys: &SystemParams, p: &FiniteParams) -> Result<FiniteEstimate> {
    p.validate()?;
    let sns = sns_observables(sys, &p.sns())?;
    let n_t = sns.observables.n_t;
    let decoy = DecoyObservations::simulate(sys, p)?;
    let s1 = decoy_s1_lower(&decoy, p)?;
    let eph = decoy_eph_upper(&decoy, p, s1.s1)?;
    let n1_lower = 2.0 * p.n_pulses * p.p_z * p.p_z * p.q * (1.0 - p.q) * p.mu * (-p.mu).exp() * s1.s1;
    let d_uf = (real_bounds(n1_lower, p.xi)?.lower / n_t).min(1.0);
    if !(d_uf > 0.0) {
        return Err(Error::infeasible(Infeasibility::DecoyEstimate(
            "no untagged bits survive the realized-value bound",
        )));
    }
    let untagged = n_t * d_uf;
    let e_ph = (real_bounds(untagged * eph.e_ph, p.xi)?.upper / untagged).min(0.5);
    Ok(FiniteEstimate {
        n_t,
        bit_flip: sns.observables.bit_flip,
        s1_lower: s1.s1,
        e_ph_decoy: eph.e_ph,
        n1_lower,
        d_uf,
        e_ph,
        decoy,
    })
}

fn test_bits(p: &FiniteParams, sig_len: u64) -> f64 {
    let half = sig_len as f64 / 2.0;
    (p.gamma_t * half).clamp(1.0_f64.min(half), half)
}

/// Secure fraction at a given length, or `None` if no even-parity pair
/// survives the bounds.
fn secure_fraction_at(est: &FiniteEstimate, p: &FiniteParams, sig_len: u64, use_rp: bool) -> Result<Option<f64>> {
    let len = sig_len as f64;
    if use_rp {
        let pc = pair_counts(len, est.d_uf, est.e_ph, p.xi)?;
        match hf(&pc, est.e_ph, len) {
            Ok(h) => Ok(Some(h)),
            Err(Error::NoData(_)) => Ok(None),
            Err(e) => Err(e),
        }
    } else {
        let untagged = real_bounds(0.5 * len * est.d_uf, p.xi)?.lower;
        Ok(Some(2.0 / len * untagged * (1.0 - entropy_unchecked(est.e_ph))))
    }
}

/// Shortest signature meeting the target with the finite bounds.
pub fn finite_min_length(
    sys: &SystemParams,
    p: &FiniteParams,
    est: &FiniteEstimate,
    use_rp: bool,
) -> Result<SecurityReport> {
    let target = sys.epsilon;
    let p_ro = 2.0 * p.eps_pe;
    if p_ro > target {
        return Err(Error::infeasible(Infeasibility::Robustness { p_ro, target }));
    }
    let e_t = if use_rp { pair_bit_flip(est.bit_flip)? } else { est.bit_flip };
    // Fluctuation-free limit: if this fails, no length helps.
    let h_limit = if use_rp {
        secure_fraction(est.d_uf, est.e_ph)?
    } else {
        est.d_uf * (1.0 - entropy_unchecked(est.e_ph))
    };
    let floor = if p.g > 0.0 { sys.eps_e / p.g + p.g + p.eps_pe + 8.0 * p.xi } else { f64::INFINITY };
    precheck(h_limit, e_t, floor, target)?;

    search_min_length(target, |sig_len| {
        let Some(h) = secure_fraction_at(est, p, sig_len, use_rp)? else {
            return Ok(None);
        };
        let mu = serfling_mu(sig_len as f64 / 2.0, test_bits(p, sig_len), p.eps_pe)?;
        finite_security(h, finite_bit_flip(e_t, mu), p, sys.eps_e, sig_len)
    })
}

/// Signatures a block of `p.n_pulses` pulses supports. Each message uses
/// `2L` signature bits plus `2T` test bits.
pub fn finite_rate_at(sys: &SystemParams, p: &FiniteParams, use_rp: bool) -> Result<RateResult> {
    let est = finite_estimate(sys, p)?;
    let report = finite_min_length(sys, p, &est, use_rp)?;
    let n_bits = if use_rp { (est.n_t.floor() / 2.0).floor() } else { est.n_t.floor() };
    let n_s = n_bits / (2.0 * report.sig_len as f64 * (1.0 + p.gamma_t / 2.0));
    Ok(RateResult {
        rate: n_s / p.n_pulses,
        n_s,
        n_pulses: p.n_pulses,
        sig_len: report.sig_len,
        report,
        improvement: None,
    })
}

/// `R_f = 1 / N_f` with `N_f` the smallest block that signs one message.
/// `p.n_pulses` is ignored.
pub fn finite_rate_pipeline(sys: &SystemParams, p: &FiniteParams, use_rp: bool) -> Result<RateResult> {
    let signs_one = |n: f64| -> Result<Option<RateResult>> {
        match finite_rate_at(sys, &p.with_pulses(n), use_rp) {
            Ok(r) if r.n_s >= 1.0 => Ok(Some(r)),
            Ok(_) => Ok(None),
            Err(e) if e.is_infeasible() => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut best = match finite_rate_at(sys, &p.with_pulses(MAX_BLOCK_PULSES), use_rp) {
        Ok(r) if r.n_s >= 1.0 => r,
        Ok(_) => {
            return Err(Error::infeasible(Infeasibility::BlockSize { max_pulses: MAX_BLOCK_PULSES }))
        }
        Err(e) => return Err(e),
    };
    let (mut lo, mut hi) = (MIN_BLOCK_PULSES, MAX_BLOCK_PULSES);
    if let Some(r) = signs_one(lo)? {
        best = r;
        hi = lo;
    }
    while hi / lo > 1.0 + BLOCK_REL_TOL {
        let mid = (lo * hi).sqrt();
        match signs_one(mid)? {
            Some(r) => {
                hi = mid;
                best = r;
            }
            None => lo = mid,
        }
    }
    Ok(RateResult {
        rate: 1.0 / best.n_pulses,
        ..best
    })
}
