use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("no data: {0}")]
    NoData(String),
    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// The constraint that made a protocol setting unusable.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// Secure fraction is zero or negative; nothing is hidden from a forger.
    NoMinEntropy { secure_fraction: f64 },
    /// Receiver mismatch rate is not below the forger's guessing error.
    ThresholdGap { e_half: f64, p_e: f64 },
    /// Fixed additive terms of the forgery bound already exceed the target.
    ForgeryFloor { floor: f64, target: f64 },
    /// Honest-abort bound exceeds the target regardless of signature length.
    Robustness { p_ro: f64, target: f64 },
    /// No signature length up to the search cap meets the target.
    LengthCap { cap: f64 },
    /// Decoy estimation produced no usable single-photon yield.
    DecoyEstimate(&'static str),
    /// Not enough outcome bits for one message at any block size searched.
    BlockSize { max_pulses: f64 },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::NoMinEntropy { secure_fraction } => {
                write!(f, "secure fraction {secure_fraction:.6e} leaves no min-entropy")
            }
            Infeasibility::ThresholdGap { e_half, p_e } => write!(
                f,
                "mismatch rate {e_half:.6e} is not below guessing error {p_e:.6e}"
            ),
            Infeasibility::ForgeryFloor { floor, target } => write!(
                f,
                "forgery bound floor {floor:.3e} exceeds security target {target:.3e}"
            ),
            Infeasibility::Robustness { p_ro, target } => {
                write!(f, "honest-abort bound {p_ro:.3e} exceeds target {target:.3e}")
            }
            Infeasibility::LengthCap { cap } => {
                write!(f, "no signature length up to {cap:.0e} meets the target")
            }
            Infeasibility::DecoyEstimate(what) => write!(f, "decoy estimation failed: {what}"),
            Infeasibility::BlockSize { max_pulses } => write!(
                f,
                "one message needs more than {max_pulses:.0e} pulses"
            ),
        }
    }
}

impl Error {
    pub fn infeasible(why: Infeasibility) -> Self {
        Error::Infeasible(why)
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::NoData(_))
    }
}

pub(crate) fn check_prob(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0)
}

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_nan() || value < lo || value > hi {
        Err(Error::Domain { name, value, lo, hi })
    } else {
        Ok(value)
    }
}
