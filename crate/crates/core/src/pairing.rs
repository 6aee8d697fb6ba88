//! Random-pairing iteration on sifted key statistics.
//!
//! Pairing two raw bits and keeping their parity halves the string, raises
//! the bit-flip rate and lowers the phase-flip rate of pairs built from two
//! untagged bits. The functions here give the expected post-pairing values
//! used by every rate pipeline in the crate.

use crate::error::{check_prob, Error, Result};

const INV_ENTROPY_TOL: f64 = 1e-12;
const INV_ENTROPY_MAX_ITER: usize = 200;

/// Pre-pairing statistics of a sifted key string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelObservables {
    /// Number of sifted bits. Expected counts are not rounded.
    pub n_t: f64,
    /// Bit-flip error rate.
    pub bit_flip: f64,
    /// Fraction of untagged bits.
    pub untagged_frac: f64,
    /// Phase-flip error rate of the untagged bits.
    pub phase_flip: f64,
}

impl ChannelObservables {
    pub fn new(n_t: f64, bit_flip: f64, untagged_frac: f64, phase_flip: f64) -> Result<Self> {
        if !(n_t >= 0.0) {
            return Err(Error::InvalidParam(format!("n_t = {n_t} must be non-negative")));
        }
        check_prob("bit_flip", bit_flip)?;
        check_prob("untagged_frac", untagged_frac)?;
        check_prob("phase_flip", phase_flip)?;
        Ok(Self {
            n_t,
            bit_flip,
            untagged_frac,
            phase_flip,
        })
    }
}

/// Post-pairing statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedStats {
    pub n_t_prime: f64,
    /// Set when `n_t` was odd and one bit had to be dropped before pairing.
    pub dropped_bit: bool,
    pub bit_flip_prime: f64,
    pub untagged_frac_prime: f64,
    pub p_even: f64,
    pub phase_even: f64,
    pub phase_odd: f64,
    /// Raw secure fraction; may be negative.
    pub secure_fraction: f64,
}

impl PairedStats {
    pub fn from_observables(obs: &ChannelObservables) -> Result<Self> {
        let whole = obs.n_t.floor();
        let dropped_bit = whole % 2.0 == 1.0;
        let split = pair_phase(obs.phase_flip)?;
        Ok(Self {
            n_t_prime: (whole / 2.0).floor(),
            dropped_bit,
            bit_flip_prime: pair_bit_flip(obs.bit_flip)?,
            untagged_frac_prime: pair_untagged(obs.untagged_frac)?,
            p_even: split.p_even,
            phase_even: split.phase_even,
            phase_odd: split.phase_odd,
            secure_fraction: secure_fraction(obs.untagged_frac, obs.phase_flip)?,
        })
    }

    pub fn secure_fraction_clamped(&self) -> f64 {
        self.secure_fraction.clamp(0.0, 1.0)
    }
}

/// Phase-error split of un-un pairs by the parity of their two phase errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSplit {
    /// Probability that the pair carries an even number of phase errors.
    pub p_even: f64,
    /// Phase-error rate of the outcome bit given even parity.
    pub phase_even: f64,
    /// Phase-error rate of the outcome bit given odd parity (always 1/2).
    pub phase_odd: f64,
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_prob("x", x)?;
    Ok(entropy_unchecked(x))
}

#[inline]
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Inverse of the binary entropy on the branch `[0, 1/2]`.
///
/// Bisection on the monotone branch; converges unconditionally.
pub fn inv_binary_entropy(y: f64) -> Result<f64> {
    check_prob("y", y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..INV_ENTROPY_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let h = entropy_unchecked(mid);
        if (h - y).abs() <= INV_ENTROPY_TOL * 1e-3 || hi - lo <= f64::EPSILON * mid {
            return Ok(mid);
        }
        if h < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    if (entropy_unchecked(x) - y).abs() <= INV_ENTROPY_TOL {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("inverse entropy did not converge for y = {y}")))
    }
}

/// Expected bit-flip rate after pairing: `2e(1-e)`.
pub fn pair_bit_flip(e: f64) -> Result<f64> {
    check_prob("e", e)?;
    Ok(2.0 * e * (1.0 - e))
}

/// Untagged fraction after pairing: a pair is untagged if either member is.
pub fn pair_untagged(d: f64) -> Result<f64> {
    check_prob("d", d)?;
    Ok(d * d + 2.0 * d * (1.0 - d))
}

pub fn pair_phase(e_ph: f64) -> Result<PhaseSplit> {
    check_prob("e_ph", e_ph)?;
    let p_even = e_ph * e_ph + (1.0 - e_ph) * (1.0 - e_ph);
    Ok(PhaseSplit {
        p_even,
        phase_even: e_ph * e_ph / p_even,
        phase_odd: 0.5,
    })
}

/// Phase-error rate of an untagged bit paired with a tagged one (unchanged).
pub fn pair_tagged_untagged_phase(e_ph: f64) -> Result<f64> {
    check_prob("e_ph", e_ph)
}

/// Per-bit secure fraction of the paired string.
///
/// Untagged outcome bits come from un-un pairs (weight `d^2`, split by phase
/// parity) and un-tag pairs (weight `2d(1-d)`, phase rate unchanged).
pub fn secure_fraction(d: f64, e_ph: f64) -> Result<f64> {
    check_prob("d", d)?;
    let split = pair_phase(e_ph)?;
    let d_prime = pair_untagged(d)?;
    let h_un_un = split.p_even * entropy_unchecked(split.phase_even)
        + (1.0 - split.p_even) * entropy_unchecked(split.phase_odd);
    Ok(d_prime - d * d * h_un_un - 2.0 * d * (1.0 - d) * entropy_unchecked(e_ph))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLengthParams {
    pub ec_coefficient: f64,
}

impl KeyLengthParams {
    pub fn new(ec_coefficient: f64) -> Result<Self> {
        if !(ec_coefficient >= 1.0) {
            return Err(Error::InvalidParam(format!(
                "error-correction coefficient {ec_coefficient} must be >= 1"
            )));
        }
        Ok(Self { ec_coefficient })
    }
}

impl Default for KeyLengthParams {
    fn default() -> Self {
        Self { ec_coefficient: 1.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLength {
    pub raw: f64,
    pub clamped: f64,
    pub dropped_bit: bool,
}

/// Asymptotic QKD key length of the paired string after error correction
/// and privacy amplification.
pub fn rp_key_length(obs: &ChannelObservables, params: &KeyLengthParams) -> Result<KeyLength> {
    let paired = PairedStats::from_observables(obs)?;
    let n = paired.n_t_prime;
    let raw = n * paired.secure_fraction
        - params.ec_coefficient * n * entropy_unchecked(paired.bit_flip_prime);
    Ok(KeyLength {
        raw,
        clamped: raw.max(0.0),
        dropped_bit: paired.dropped_bit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_known_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(close(binary_entropy(0.5).unwrap(), 1.0, 1e-15));
        assert!(close(binary_entropy(0.11).unwrap(), 0.499916, 1e-6));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn inverse_entropy_known_values() {
        assert_eq!(inv_binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(inv_binary_entropy(1.0).unwrap(), 0.5);
        assert!(close(inv_binary_entropy(0.5).unwrap(), 0.110028, 1e-5));
        assert!(inv_binary_entropy(1.01).is_err());
    }

    #[test]
    fn inverse_entropy_tiny_targets() {
        for y in [1e-300, 1e-30, 1e-12, 1e-6] {
            let x = inv_binary_entropy(y).unwrap();
            assert!((entropy_unchecked(x) - y).abs() <= 1e-12, "y = {y}");
        }
    }

    #[test]
    fn pairing_maps() {
        assert_eq!(pair_bit_flip(0.0).unwrap(), 0.0);
        assert_eq!(pair_bit_flip(0.5).unwrap(), 0.5);
        assert_eq!(pair_bit_flip(0.25).unwrap(), 0.375);
        assert_eq!(pair_untagged(0.0).unwrap(), 0.0);
        assert_eq!(pair_untagged(1.0).unwrap(), 1.0);
        assert_eq!(pair_untagged(0.5).unwrap(), 0.75);
        for e in [0.0, 0.3, 1.0] {
            assert_eq!(pair_tagged_untagged_phase(e).unwrap(), e);
        }
        assert!(pair_bit_flip(2.0).is_err());
        assert!(pair_untagged(-1.0).is_err());
        assert!(pair_tagged_untagged_phase(1.1).is_err());
    }

    #[test]
    fn phase_split_values() {
        let s = pair_phase(0.0).unwrap();
        assert_eq!((s.p_even, s.phase_even, s.phase_odd), (1.0, 0.0, 0.5));
        let s = pair_phase(1.0).unwrap();
        assert_eq!((s.p_even, s.phase_even), (1.0, 1.0));
        let s = pair_phase(0.5).unwrap();
        assert_eq!((s.p_even, s.phase_even, s.phase_odd), (0.5, 0.5, 0.5));
        let s = pair_phase(0.1).unwrap();
        assert!(close(s.p_even, 0.82, 1e-15));
        assert!(close(s.phase_even, 0.01 / 0.82, 1e-15));
    }

    #[test]
    fn secure_fraction_limits() {
        assert!(close(secure_fraction(1.0, 0.0).unwrap(), 1.0, 1e-15));
        for e in [0.0, 0.1, 0.3, 0.5, 1.0] {
            assert_eq!(secure_fraction(0.0, e).unwrap(), 0.0);
        }
        // Full-untagged identity.
        for e in [0.01, 0.05, 0.2, 0.45] {
            let s = pair_phase(e).unwrap();
            let expect = 1.0
                - (s.p_even * entropy_unchecked(s.phase_even) + (1.0 - s.p_even) * 1.0);
            assert!(close(secure_fraction(1.0, e).unwrap(), expect, 1e-14));
        }
    }

    #[test]
    fn secure_fraction_decreases_in_phase_error() {
        for d in [0.2, 0.5, 0.8, 1.0] {
            let mut prev = f64::INFINITY;
            for i in 0..=100 {
                let e = 0.5 * i as f64 / 100.0;
                let h = secure_fraction(d, e).unwrap();
                assert!(h <= prev + 1e-15, "d = {d}, e = {e}");
                prev = h;
            }
        }
    }

    #[test]
    fn key_length_cases() {
        let params = KeyLengthParams::new(1.1).unwrap();
        let obs = ChannelObservables::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let k = rp_key_length(&obs, &params).unwrap();
        assert!(close(k.raw, 1.0, 1e-15));
        assert!(!k.dropped_bit);

        let obs = ChannelObservables::new(1000.0, 0.1, 0.0, 0.2).unwrap();
        let k = rp_key_length(&obs, &params).unwrap();
        let expect = -1.1 * 500.0 * entropy_unchecked(0.18);
        assert!(close(k.raw, expect, 1e-9));
        assert_eq!(k.clamped, 0.0);

        let obs = ChannelObservables::new(11.0, 0.0, 1.0, 0.0).unwrap();
        let k = rp_key_length(&obs, &params).unwrap();
        assert!(k.dropped_bit);
        assert!(close(k.raw, 5.0, 1e-15));
    }

    #[test]
    fn key_length_params_reject_small_coefficient() {
        assert!(KeyLengthParams::new(0.9).is_err());
        assert!(ChannelObservables::new(-1.0, 0.0, 0.0, 0.0).is_err());
    }
}
