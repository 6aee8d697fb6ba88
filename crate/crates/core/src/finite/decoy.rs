//! Three-intensity decoy estimation of the single-photon yield and phase
//! error from simulated decoy-window statistics.

use std::f64::consts::PI;

use super::chernoff::expected_bounds;
use super::quadrature::integrate;
use super::FiniteParams;
use crate::channel::{two_source_rate, SystemParams};
use crate::error::{Error, Infeasibility, Result};

const QUAD_TOL: f64 = 1e-12;

/// Expected decoy-window statistics in simulation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyObservations {
    /// `rates[i][j]`: counting rate when Alice sends `mu_i` and Bob `mu_j`.
    pub rates: [[f64; 3]; 3],
    /// `counts[i][j]`: number of effective events of source `ij`.
    pub counts: [[f64; 3]; 3],
    /// `instances[i][j]`: number of windows of source `ij`.
    pub instances: [[f64; 3]; 3],
    /// Phase-slice events heralded at the error detector, per slice.
    pub n_slice: f64,
    /// Windows in each phase slice.
    pub n_slice_windows: f64,
    pub t_x: f64,
    pub s_x: f64,
}

impl DecoyObservations {
    pub fn simulate(sys: &SystemParams, p: &FiniteParams) -> Result<Self> {
        p.validate()?;
        let eta = sys.eta();
        let mus = [0.0, p.mu1, p.mu2];
        let probs = [p.p0, p.p1_dec, p.p2_dec];
        let decoy = p.n_pulses * (1.0 - p.p_z) * (1.0 - p.p_z);
        let mut rates = [[0.0; 3]; 3];
        let mut counts = [[0.0; 3]; 3];
        let mut instances = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rates[i][j] = two_source_rate(sys.p_d, eta, mus[i], mus[j]);
                instances[i][j] = decoy * probs[i] * probs[j];
                counts[i][j] = instances[i][j] * rates[i][j];
            }
        }
        let (t_x, s_x) = slice_rates(sys.p_d, eta, p.mu1, p.delta_slice)?;
        let n_slice_windows = p.delta_slice / (2.0 * PI) * decoy * p.p1_dec * p.p1_dec;
        let n_slice = (t_x * (1.0 - 2.0 * sys.e_d) + sys.e_d * s_x) * n_slice_windows;
        Ok(Self {
            rates,
            counts,
            instances,
            n_slice,
            n_slice_windows,
            t_x,
            s_x,
        })
    }

    /// Chernoff bounds on the expected rate of source `ij`.
    pub fn rate_bounds(&self, i: usize, j: usize, xi: f64) -> Result<(f64, f64)> {
        let n = self.instances[i][j];
        if !(n > 0.0) {
            return Err(Error::infeasible(Infeasibility::DecoyEstimate(
                "a decoy source is never chosen",
            )));
        }
        let b = expected_bounds(self.counts[i][j], xi)?;
        Ok((b.lower / n, b.upper / n))
    }
}

/// Slice-averaged error and total rates `(T_X, S_X)` of the `mu1, mu1`
/// source within a phase difference of `delta / 2`.
///
/// The integrands are rewritten as `e^{-2x}(expm1(2x sin^2) + p_d)` and
/// `e^{-2x}(expm1(2x cos^2) + p_d)` so the subtraction of the common
/// `(1 - p_d)^2 e^{-2x}` term happens analytically.
pub fn slice_rates(p_d: f64, eta: f64, mu1: f64, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 2.0 * PI) {
        return Err(Error::InvalidParam(format!(
            "slice width {delta} must lie in (0, 2 pi)"
        )));
    }
    let x = eta * mu1;
    let keep = 1.0 - p_d;
    let base = (-2.0 * x).exp();
    let err = |d: f64| {
        let s = (0.5 * d).sin();
        keep * base * ((2.0 * x * s * s).exp_m1() + p_d)
    };
    let right = |d: f64| {
        let c = (0.5 * d).cos();
        keep * base * ((2.0 * x * c * c).exp_m1() + p_d)
    };
    let t_x = integrate(err, -0.5 * delta, 0.5 * delta, QUAD_TOL)? / delta;
    let s_x = integrate(right, -0.5 * delta, 0.5 * delta, QUAD_TOL)? / delta + t_x;
    Ok((t_x, s_x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonBound {
    pub s01: f64,
    pub s10: f64,
    /// `(s01 + s10) / 2`, clamped at zero.
    pub s1: f64,
    pub clamped: bool,
}

fn decoy_combination(mu1: f64, mu2: f64, s_mu1: f64, s_mu2: f64, s00_upper: f64) -> f64 {
    (mu2 * mu2 * mu1.exp() * s_mu1 - mu1 * mu1 * mu2.exp() * s_mu2 - (mu2 * mu2 - mu1 * mu1) * s00_upper)
        / (mu1 * mu2 * (mu2 - mu1))
}

/// Lower bound on the expected single-photon counting rate.
pub fn decoy_s1_lower(obs: &DecoyObservations, p: &FiniteParams) -> Result<SinglePhotonBound> {
    if !(p.mu1 < p.mu2) {
        return Err(Error::InvalidParam(format!(
            "decoy intensities must satisfy mu1 = {} < mu2 = {}",
            p.mu1, p.mu2
        )));
    }
    let xi = p.xi;
    let (_, s00_u) = obs.rate_bounds(0, 0, xi)?;
    let (s01_l, _) = obs.rate_bounds(0, 1, xi)?;
    let (_, s02_u) = obs.rate_bounds(0, 2, xi)?;
    let (s10_l, _) = obs.rate_bounds(1, 0, xi)?;
    let (_, s20_u) = obs.rate_bounds(2, 0, xi)?;
    let s01 = decoy_combination(p.mu1, p.mu2, s01_l, s02_u, s00_u);
    let s10 = decoy_combination(p.mu1, p.mu2, s10_l, s20_u, s00_u);
    let mean = 0.5 * (s01 + s10);
    Ok(SinglePhotonBound {
        s01,
        s10,
        s1: mean.max(0.0),
        clamped: mean < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseErrorBound {
    pub t_upper: f64,
    pub e_ph: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// Upper bound on the expected single-photon phase-flip rate.
pub fn decoy_eph_upper(
    obs: &DecoyObservations,
    p: &FiniteParams,
    s1_lower: f64,
) -> Result<PhaseErrorBound> {
    if !(s1_lower > 0.0) {
        return Err(Error::infeasible(Infeasibility::DecoyEstimate(
            "single-photon yield lower bound is zero",
        )));
    }
    if !(obs.n_slice_windows > 0.0) {
        return Err(Error::infeasible(Infeasibility::DecoyEstimate("empty phase slice")));
    }
    let (s00_l, _) = obs.rate_bounds(0, 0, p.xi)?;
    let both = expected_bounds(2.0 * obs.n_slice, p.xi)?;
    let t_upper = both.upper / (2.0 * obs.n_slice_windows);
    let vac = (-2.0 * p.mu1).exp();
    let raw = (t_upper - 0.5 * vac * s00_l) / (2.0 * p.mu1 * vac * s1_lower);
    Ok(PhaseErrorBound {
        t_upper,
        e_ph: raw.clamp(0.0, 0.5),
        raw,
        clamped: !(0.0..=0.5).contains(&raw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FiniteParams {
        FiniteParams {
            n_pulses: 1e14,
            ..FiniteParams::default()
        }
    }

    #[derive(Default)]
    struct Kahan {
        sum: f64,
        c: f64,
    }

    impl Kahan {
        fn add(&mut self, v: f64) {
            let y = v - self.c;
            let t = self.sum + y;
            self.c = (t - self.sum) - y;
            self.sum = t;
        }
    }

    // Printed integrands, trapezoid rule with a million panels.
    fn trapezoid_slice(p_d: f64, eta: f64, mu1: f64, delta: f64) -> (f64, f64) {
        let n = 1_000_000;
        let h = delta / n as f64;
        let x = eta * mu1;
        // Compensated sums keep the million-term totals exact to rounding.
        let (mut a, mut b) = (Kahan::default(), Kahan::default());
        for k in 0..=n {
            let d = -0.5 * delta + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            a.add(w * (1.0 - p_d) * (-2.0 * x * (0.5 * d).cos().powi(2)).exp());
            b.add(w * (1.0 - p_d) * (-2.0 * x * (0.5 * d).sin().powi(2)).exp());
        }
        let (a, b) = (a.sum, b.sum);
        let sub = (1.0 - p_d).powi(2) * (-2.0 * x).exp();
        let t = a * h / delta - sub;
        (t, b * h / delta - sub + t)
    }

    #[test]
    fn slice_rates_match_trapezoid() {
        for (p_d, eta, mu1, delta) in [(1e-8, 0.01, 0.1, 0.3), (1e-3, 0.3, 0.5, 1.0), (0.0, 0.8, 1.0, 2.5)] {
            let (t, s) = slice_rates(p_d, eta, mu1, delta).unwrap();
            let (to, so) = trapezoid_slice(p_d, eta, mu1, delta);
            assert!(((t - to) / to).abs() < 1e-9, "T_X {t} vs {to}");
            assert!(((s - so) / so).abs() < 1e-9, "S_X {s} vs {so}");
        }
    }

    #[test]
    fn noiseless_narrow_slice() {
        let (t, _) = slice_rates(0.0, 0.1, 0.2, 1e-6).unwrap();
        assert!(t.abs() < 1e-13);
    }

    #[test]
    fn infinite_statistics_recover_formula() {
        let sys = SystemParams { p_d: 1e-8, distance_km: 100.0, ..SystemParams::default() };
        let mut p = params();
        p.n_pulses = 1e30;
        p.xi = 1e-10;
        let obs = DecoyObservations::simulate(&sys, &p).unwrap();
        let b = decoy_s1_lower(&obs, &p).unwrap();
        let r = obs.rates;
        let exact = decoy_combination(p.mu1, p.mu2, r[0][1], r[0][2], r[0][0]);
        assert!(((b.s01 - exact) / exact).abs() < 1e-6);
        assert_eq!(b.s01, b.s10);
        p.n_pulses = 1e12;
        let obs = DecoyObservations::simulate(&sys, &p).unwrap();
        assert!(decoy_s1_lower(&obs, &p).unwrap().s1 <= exact);
    }

    #[test]
    fn dark_count_regime_clamps() {
        let sys = SystemParams { p_d: 1e-3, distance_km: 600.0, ..SystemParams::default() };
        let p = FiniteParams { n_pulses: 1e9, ..FiniteParams::default() };
        let obs = DecoyObservations::simulate(&sys, &p).unwrap();
        let b = decoy_s1_lower(&obs, &p).unwrap();
        assert!(b.clamped && b.s1 == 0.0);
        assert!(decoy_eph_upper(&obs, &p, b.s1).unwrap_err().is_infeasible());
    }

    #[test]
    fn phase_bound_grows_with_misalignment() {
        let p = params();
        let mut prev = -1.0;
        for e_d in [0.0, 0.01, 0.02, 0.05, 0.1] {
            let sys = SystemParams { p_d: 1e-8, e_d, distance_km: 200.0, ..SystemParams::default() };
            let obs = DecoyObservations::simulate(&sys, &p).unwrap();
            let s1 = decoy_s1_lower(&obs, &p).unwrap().s1;
            let e = decoy_eph_upper(&obs, &p, s1).unwrap().raw;
            assert!(e > prev, "e_d = {e_d}");
            prev = e;
        }
    }

    #[test]
    fn mu_order_enforced() {
        let sys = SystemParams::default();
        let mut p = params();
        let obs = DecoyObservations::simulate(&sys, &p).unwrap();
        p.mu1 = p.mu2;
        assert!(decoy_s1_lower(&obs, &p).is_err());
    }
}
