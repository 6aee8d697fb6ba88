//! Seeded bit-level Monte Carlo of pairing, symmetrization and messaging.
//!
//! Random streams are keyed by `(seed, chunk)` so results do not depend on
//! the thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_prob, Error, Result};
use crate::pairing::ChannelObservables;

const CHUNK: usize = 1 << 16;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedBitString {
    pub bits: Vec<bool>,
    pub untagged: Vec<bool>,
    /// Only meaningful where `untagged` is set.
    pub phase_error: Vec<bool>,
}

impl TaggedBitString {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.untagged.len() != self.bits.len() || self.phase_error.len() != self.bits.len() {
            return Err(Error::LengthMismatch { left: self.bits.len(), right: self.untagged.len() });
        }
        Ok(())
    }
}

/// Alice's and Bob's strings under the abstract error model: bit flips with
/// rate `bit_flip`, untagged positions with rate `untagged_frac`, phase marks
/// on untagged positions with rate `phase_flip`. Masks are shared.
pub fn sample_correlated_strings(
    obs: &ChannelObservables,
    n: usize,
    seed: u64,
) -> Result<(TaggedBitString, TaggedBitString)> {
    if n % 2 != 0 {
        return Err(Error::InvalidParam(format!("string length {n} must be even")));
    }
    check_prob("bit_flip", obs.bit_flip)?;
    check_prob("untagged_frac", obs.untagged_frac)?;
    check_prob("phase_flip", obs.phase_flip)?;
    // (alice, flip, untagged, phase) per position.
    let mut draws = vec![(false, false, false, false); n];
    draws.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = stream(seed, c as u64);
        for d in chunk {
            let a = rng.random::<bool>();
            let f = rng.random_bool(obs.bit_flip);
            let u = rng.random_bool(obs.untagged_frac);
            let p = rng.random_bool(obs.phase_flip);
            *d = (a, f, u, u && p);
        }
    });
    let untagged: Vec<bool> = draws.iter().map(|d| d.2).collect();
    let phase_error: Vec<bool> = draws.iter().map(|d| d.3).collect();
    let alice = TaggedBitString {
        bits: draws.iter().map(|d| d.0).collect(),
        untagged: untagged.clone(),
        phase_error: phase_error.clone(),
    };
    let bob = TaggedBitString {
        bits: draws.iter().map(|d| d.0 ^ d.1).collect(),
        untagged,
        phase_error,
    };
    Ok((alice, bob))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCategory {
    UntaggedUntagged,
    UntaggedTagged,
    TaggedTagged,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairLog {
    pub pairs: Vec<(usize, usize)>,
    pub categories: Vec<PairCategory>,
    /// Parity of the two phase marks, for untagged-untagged pairs only.
    pub phase_parity: Vec<Option<bool>>,
}

/// Uniform perfect matching (seeded shuffle, adjacent pairs) applied to
/// both strings. The outcome keeps the first member's qubit: its phase mark
/// is the first member's for untagged pairs, the untagged member's for mixed
/// pairs.
pub fn random_pairing(
    a: &TaggedBitString,
    b: &TaggedBitString,
    seed: u64,
) -> Result<(TaggedBitString, TaggedBitString, PairLog)> {
    a.check()?;
    b.check()?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() % 2 != 0 {
        return Err(Error::InvalidParam(format!("string length {} must be even", a.len())));
    }
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.shuffle(&mut stream(seed, u64::MAX));
    let m = a.len() / 2;
    let mut log = PairLog {
        pairs: Vec::with_capacity(m),
        categories: Vec::with_capacity(m),
        phase_parity: Vec::with_capacity(m),
    };
    let mut out_a = TaggedBitString::default();
    let mut out_b = TaggedBitString::default();
    for w in order.chunks_exact(2) {
        let (i, j) = (w[0], w[1]);
        let (ui, uj) = (a.untagged[i], a.untagged[j]);
        let (cat, mark, parity) = match (ui, uj) {
            (true, true) => (
                PairCategory::UntaggedUntagged,
                a.phase_error[i],
                Some(a.phase_error[i] ^ a.phase_error[j]),
            ),
            (true, false) => (PairCategory::UntaggedTagged, a.phase_error[i], None),
            (false, true) => (PairCategory::UntaggedTagged, a.phase_error[j], None),
            (false, false) => (PairCategory::TaggedTagged, false, None),
        };
        for (src, dst) in [(a, &mut out_a), (b, &mut out_b)] {
            dst.bits.push(src.bits[i] ^ src.bits[j]);
            dst.untagged.push(ui || uj);
            dst.phase_error.push(mark);
        }
        log.pairs.push((i, j));
        log.categories.push(cat);
        log.phase_parity.push(parity);
    }
    Ok((out_a, out_b, log))
}

/// Empirical frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, samples: u64) -> Self {
        if samples == 0 {
            return Self { value: f64::NAN, std_err: f64::NAN, samples };
        }
        let p = hits as f64 / samples as f64;
        Self { value: p, std_err: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }

    /// `|value - expected|` in units of the expected binomial deviation.
    /// An exact match against a degenerate expectation scores 0.
    pub fn z_score(&self, expected: f64) -> f64 {
        let sd = (expected * (1.0 - expected) / self.samples as f64).sqrt();
        let diff = (self.value - expected).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / sd
        }
    }

    pub fn within(&self, expected: f64, sigmas: f64) -> bool {
        self.z_score(expected) <= sigmas
    }
}

/// Empirical statistics of a paired string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingStats {
    pub bit_flip: Estimate,
    pub untagged_frac: Estimate,
    /// Even phase parity among untagged-untagged pairs.
    pub p_even: Estimate,
    pub phase_even: Estimate,
    pub phase_odd: Estimate,
}

pub fn pairing_stats(a: &TaggedBitString, b: &TaggedBitString, log: &PairLog) -> Result<PairingStats> {
    if a.len() != b.len() || a.len() != log.pairs.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: log.pairs.len() });
    }
    let n = a.len() as u64;
    let flips = a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count() as u64;
    let untagged = a.untagged.iter().filter(|&&u| u).count() as u64;
    let (mut uu, mut even, mut mark_even, mut mark_odd) = (0u64, 0u64, 0u64, 0u64);
    for (k, par) in log.phase_parity.iter().enumerate() {
        if let Some(odd) = par {
            uu += 1;
            if *odd {
                mark_odd += a.phase_error[k] as u64;
            } else {
                even += 1;
                mark_even += a.phase_error[k] as u64;
            }
        }
    }
    Ok(PairingStats {
        bit_flip: Estimate::from_counts(flips, n),
        untagged_frac: Estimate::from_counts(untagged, n),
        p_even: Estimate::from_counts(even, uu),
        phase_even: Estimate::from_counts(mark_even, even),
        phase_odd: Estimate::from_counts(mark_odd, uu - even),
    })
}

/// Conditional phase statistics of independent Bernoulli(`e_ph`) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseIterationReport {
    pub e_ph: f64,
    pub trials: u64,
    /// `P(a xor b = 0)`.
    pub p_even: Estimate,
    /// `P(a = 1 | a xor b = 0)`.
    pub phase_even: Estimate,
    /// `P(a = 1 | a xor b = 1)`.
    pub phase_odd: Estimate,
}

pub fn verify_phase_iteration(e_ph: f64, trials: u64, seed: u64) -> Result<PhaseIterationReport> {
    check_prob("e_ph", e_ph)?;
    if trials < 100_000 {
        return Err(Error::InvalidParam(format!("need at least 1e5 trials, got {trials}")));
    }
    let chunks = trials.div_ceil(CHUNK as u64);
    // (even, a=1 & even, a=1 & odd)
    let (even, one_even, one_odd) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let len = (trials - c * CHUNK as u64).min(CHUNK as u64);
            let mut acc = (0u64, 0u64, 0u64);
            for _ in 0..len {
                let a = rng.random_bool(e_ph);
                let b = rng.random_bool(e_ph);
                if a == b {
                    acc.0 += 1;
                    acc.1 += a as u64;
                } else {
                    acc.2 += a as u64;
                }
            }
            acc
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    Ok(PhaseIterationReport {
        e_ph,
        trials,
        p_even: Estimate::from_counts(even, trials),
        phase_even: Estimate::from_counts(one_even, even),
        phase_odd: Estimate::from_counts(one_odd, trials - even),
    })
}

/// One receiver's split of a key string into kept and forwarded halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverHalves {
    pub kept_pos: Vec<usize>,
    pub kept: Vec<bool>,
    pub sent_pos: Vec<usize>,
    pub sent: Vec<bool>,
}

fn split_halves(key: &[bool], rng: &mut ChaCha8Rng) -> ReceiverHalves {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.shuffle(rng);
    let (mut kept_pos, mut sent_pos) = (idx[..key.len() / 2].to_vec(), idx[key.len() / 2..].to_vec());
    kept_pos.sort_unstable();
    sent_pos.sort_unstable();
    ReceiverHalves {
        kept: kept_pos.iter().map(|&i| key[i]).collect(),
        sent: sent_pos.iter().map(|&i| key[i]).collect(),
        kept_pos,
        sent_pos,
    }
}

/// Each receiver keeps a uniform half of their key and forwards the rest.
/// Bob's symmetrized string is `(K_B kept, K_C sent)`, Charlie's
/// `(K_B sent, K_C kept)`.
pub fn symmetrize(k_b: &[bool], k_c: &[bool], seed: u64) -> Result<(ReceiverHalves, ReceiverHalves)> {
    if k_b.len() != k_c.len() {
        return Err(Error::LengthMismatch { left: k_b.len(), right: k_c.len() });
    }
    if k_b.is_empty() || k_b.len() % 2 != 0 {
        return Err(Error::InvalidParam(format!("key length {} must be even and positive", k_b.len())));
    }
    let mut rng = stream(seed, 0);
    let b = split_halves(k_b, &mut rng);
    let c = split_halves(k_c, &mut rng);
    Ok((b, c))
}

/// Alice's signature strings and the receivers' symmetrized halves, for
/// both message values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureBundle {
    /// `alice[m][0]` is shared with Bob, `alice[m][1]` with Charlie.
    pub alice: [[Vec<bool>; 2]; 2],
    pub bob: [ReceiverHalves; 2],
    pub charlie: [ReceiverHalves; 2],
}

impl SignatureBundle {
    /// Honest distribution: each receiver's key differs from Alice's string
    /// by independent flips with rate `bit_flip`.
    pub fn honest(sig_len: usize, bit_flip: f64, seed: u64) -> Result<Self> {
        check_prob("bit_flip", bit_flip)?;
        if sig_len == 0 || sig_len % 2 != 0 {
            return Err(Error::InvalidParam(format!("signature length {sig_len} must be even and positive")));
        }
        let mut rng = stream(seed, 1);
        let mut draw = || -> (Vec<bool>, Vec<bool>) {
            let s: Vec<bool> = (0..sig_len).map(|_| rng.random()).collect();
            let k = s.iter().map(|&x| x ^ rng.random_bool(bit_flip)).collect();
            (s, k)
        };
        let (s0b, k0b) = draw();
        let (s0c, k0c) = draw();
        let (s1b, k1b) = draw();
        let (s1c, k1c) = draw();
        let (b0, c0) = symmetrize(&k0b, &k0c, seed.wrapping_add(2))?;
        let (b1, c1) = symmetrize(&k1b, &k1c, seed.wrapping_add(3))?;
        Ok(Self {
            alice: [[s0b, s0c], [s1b, s1c]],
            bob: [b0, b1],
            charlie: [c0, c1],
        })
    }

    pub fn sig_len(&self) -> usize {
        self.alice[0][0].len()
    }

    /// Replaces the signature for `m` with its bitwise complement.
    pub fn forge_all_flip(&mut self, m: usize) {
        for s in &mut self.alice[m] {
            s.iter_mut().for_each(|x| *x = !*x);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessagingOutcome {
    pub bob_accepts: bool,
    pub charlie_accepts: bool,
    /// Bob vs his kept half, Bob vs Charlie's forwarded half, Charlie vs his
    /// kept half, Charlie vs Bob's forwarded half.
    pub mismatch: [f64; 4],
}

fn mismatch(sig: &[bool], pos: &[usize], key: &[bool]) -> f64 {
    let wrong = pos.iter().zip(key).filter(|(&i, &k)| sig[i] != k).count();
    wrong as f64 / pos.len() as f64
}

/// Bob accepts when both his comparisons fall strictly below `s_a`; Charlie,
/// receiving the forwarded signature, when both of his fall below `s_v`.
pub fn run_messaging(bundle: &SignatureBundle, m: usize, s_a: f64, s_v: f64) -> Result<MessagingOutcome> {
    if m > 1 {
        return Err(Error::InvalidParam(format!("message bit must be 0 or 1, got {m}")));
    }
    if !(0.0 < s_a && s_a < s_v && s_v < 0.5) {
        return Err(Error::InvalidParam(format!("need 0 < s_a < s_v < 1/2, got {s_a}, {s_v}")));
    }
    let [sb, sc] = &bundle.alice[m];
    let (b, c) = (&bundle.bob[m], &bundle.charlie[m]);
    let rates = [
        mismatch(sb, &b.kept_pos, &b.kept),
        mismatch(sc, &c.sent_pos, &c.sent),
        mismatch(sc, &c.kept_pos, &c.kept),
        mismatch(sb, &b.sent_pos, &b.sent),
    ];
    Ok(MessagingOutcome {
        bob_accepts: rates[0] < s_a && rates[1] < s_a,
        charlie_accepts: rates[2] < s_v && rates[3] < s_v,
        mismatch: rates,
    })
}

/// Settings for repeated honest or forged protocol runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub sig_len: usize,
    pub bit_flip: f64,
    pub s_a: f64,
    pub s_v: f64,
    /// Extra test bits per signature string, as a fraction of its length,
    /// disclosed to estimate the bit-flip rate. A run aborts when that
    /// estimate reaches `s_a`. Zero disables the test.
    pub test_fraction: f64,
    pub forge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub aborted: u64,
    pub bob_accepted: u64,
    pub charlie_accepted: u64,
    /// Both receivers accepted.
    pub accepted: u64,
}

impl TrialSummary {
    pub fn acceptance(&self) -> f64 {
        self.accepted as f64 / self.trials as f64
    }
}

/// Runs `trials` independent distributions and messaging rounds, trial `i`
/// on stream `(seed, i)`, message bit `i mod 2`.
pub fn run_trials(cfg: &TrialConfig, trials: u64, seed: u64) -> Result<TrialSummary> {
    if !(0.0..=1.0).contains(&cfg.test_fraction) {
        return Err(Error::InvalidParam(format!("test_fraction = {} outside [0, 1]", cfg.test_fraction)));
    }
    let outcomes: Vec<Option<MessagingOutcome>> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Option<MessagingOutcome>> {
            let mut rng = stream(seed, i);
            let trial_seed = rng.random::<u64>();
            let n_test = (cfg.test_fraction * cfg.sig_len as f64).round() as usize;
            if n_test > 0 {
                let errors = (0..n_test).filter(|_| rng.random_bool(cfg.bit_flip)).count();
                if errors as f64 / n_test as f64 >= cfg.s_a {
                    return Ok(None);
                }
            }
            let mut bundle = SignatureBundle::honest(cfg.sig_len, cfg.bit_flip, trial_seed)?;
            let m = (i % 2) as usize;
            if cfg.forge {
                bundle.forge_all_flip(m);
            }
            run_messaging(&bundle, m, cfg.s_a, cfg.s_v).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut s = TrialSummary { trials, aborted: 0, bob_accepted: 0, charlie_accepted: 0, accepted: 0 };
    for o in outcomes {
        match o {
            None => s.aborted += 1,
            Some(o) => {
                s.bob_accepted += o.bob_accepts as u64;
                s.charlie_accepted += o.charlie_accepts as u64;
                s.accepted += (o.bob_accepts && o.charlie_accepts) as u64;
            }
        }
    }
    Ok(s)
}

/// Multi-bit encoding: `111`, then `000` for each 0 and `010` for each 1,
/// then `111`.
pub fn encode_message(bits: &[bool]) -> Vec<bool> {
    const MARK: [bool; 3] = [true, true, true];
    let mut out = Vec::with_capacity(3 * bits.len() + 6);
    out.extend(MARK);
    for &b in bits {
        out.extend([false, b, false]);
    }
    out.extend(MARK);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(e: f64, d: f64, ph: f64) -> ChannelObservables {
        ChannelObservables { n_t: 1.0, bit_flip: e, untagged_frac: d, phase_flip: ph }
    }

    #[test]
    fn error_free_strings_match() {
        let (a, b) = sample_correlated_strings(&obs(0.0, 1.0, 0.1), 1000, 1).unwrap();
        assert_eq!(a.bits, b.bits);
        assert!(a.untagged.iter().all(|&u| u));
        assert!(sample_correlated_strings(&obs(0.1, 0.5, 0.1), 7, 1).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let x = sample_correlated_strings(&obs(0.2, 0.5, 0.1), 200_000, 9).unwrap();
        let y = sample_correlated_strings(&obs(0.2, 0.5, 0.1), 200_000, 9).unwrap();
        let z = sample_correlated_strings(&obs(0.2, 0.5, 0.1), 200_000, 10).unwrap();
        assert_eq!(x, y);
        assert_ne!(x.0.bits, z.0.bits);
    }

    #[test]
    fn pairing_is_a_perfect_matching() {
        let (a, b) = sample_correlated_strings(&obs(0.1, 0.5, 0.1), 10_000, 3).unwrap();
        let (pa, pb, log) = random_pairing(&a, &b, 4).unwrap();
        assert_eq!(pa.len(), 5_000);
        assert_eq!(pb.len(), 5_000);
        let mut seen = vec![false; a.len()];
        for &(i, j) in &log.pairs {
            assert!(!seen[i] && !seen[j] && i != j);
            seen[i] = true;
            seen[j] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn zero_strings_pair_to_zero() {
        let s = TaggedBitString { bits: vec![false; 8], untagged: vec![true; 8], phase_error: vec![false; 8] };
        let (pa, _, _) = random_pairing(&s, &s, 0).unwrap();
        assert!(pa.bits.iter().all(|&x| !x));
    }

    #[test]
    fn phase_iteration_edges() {
        let r = verify_phase_iteration(0.0, 100_000, 1).unwrap();
        assert_eq!(r.p_even.value, 1.0);
        assert_eq!(r.phase_even.value, 0.0);
        let r = verify_phase_iteration(0.5, 1_000_000, 1).unwrap();
        for e in [r.p_even, r.phase_even, r.phase_odd] {
            assert!(e.within(0.5, 3.0), "{e:?}");
        }
        assert!(verify_phase_iteration(0.1, 10, 1).is_err());
    }

    #[test]
    fn symmetrize_partitions() {
        let k: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let (b, c) = symmetrize(&k, &k, 5).unwrap();
        for h in [&b, &c] {
            let mut all: Vec<usize> = h.kept_pos.iter().chain(&h.sent_pos).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..20).collect::<Vec<_>>());
            assert_eq!(h.kept.len(), 10);
        }
        assert_eq!(symmetrize(&k, &k, 5).unwrap(), (b, c));
        let (b, _) = symmetrize(&[true, false], &[true, true], 0).unwrap();
        assert_eq!((b.kept.len(), b.sent.len()), (1, 1));
    }

    #[test]
    fn messaging_accepts_clean_and_rejects_flipped() {
        let mut bundle = SignatureBundle::honest(1000, 0.0, 2).unwrap();
        let o = run_messaging(&bundle, 1, 0.01, 0.02).unwrap();
        assert!(o.bob_accepts && o.charlie_accepts);
        bundle.forge_all_flip(1);
        let o = run_messaging(&bundle, 1, 0.01, 0.02).unwrap();
        assert!(!o.bob_accepts && !o.charlie_accepts);
        assert_eq!(o.mismatch, [1.0; 4]);
        assert!(run_messaging(&bundle, 0, 0.3, 0.2).is_err());
    }

    #[test]
    fn encoding() {
        let t = true;
        let f = false;
        assert_eq!(encode_message(&[]), vec![t; 6]);
        assert_eq!(encode_message(&[f]), vec![t, t, t, f, f, f, t, t, t]);
        assert_eq!(encode_message(&[t, f]), vec![t, t, t, f, t, f, f, f, f, t, t, t]);
    }
}
