//! Rate objectives over protocol parameters and optimized distance scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ScfParams, SnsParams, SystemParams};
use crate::error::{Error, Result};
use crate::finite::{finite_rate_pipeline, FiniteParams};
use crate::optimize::{optimize, Axis, OptimizeConfig, Scale, SearchSpace};
use crate::security::{asymptotic_pipeline, Protocol, RateResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SnsAsym,
    ScfAsym,
    SnsFinite,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::SnsAsym => "sns-asym",
            Mode::ScfAsym => "scf-asym",
            Mode::SnsFinite => "sns-finite",
        }
    }

    pub fn default_space(&self) -> SearchSpace {
        use Scale::*;
        let axes = match self {
            Mode::SnsAsym => vec![
                Axis::new("mu", 1e-3, 1.0, Log),
                Axis::new("q", 1e-3, 0.5, Log),
                Axis::new("p_z", 0.01, 1.0, Linear),
            ],
            Mode::ScfAsym => vec![Axis::new("mu", 1e-8, 0.1, Log), Axis::new("q", 1e-3, 0.5, Log)],
            Mode::SnsFinite => vec![
                Axis::new("mu", 0.01, 1.0, Linear),
                Axis::new("q", 1e-3, 0.5, Log),
                Axis::new("mu1", 1e-3, 0.5, Log),
                Axis::new("mu2", 0.02, 1.0, Linear),
                Axis::new("p_z", 0.05, 0.999, Linear),
                Axis::new("p0", 0.01, 0.9, Linear),
                Axis::new("p1_dec", 0.01, 0.9, Linear),
                Axis::new("delta_slice", 0.01, 3.0, Linear),
                Axis::new("xi", 1e-20, 1e-6, Log),
                Axis::new("gamma_t", 0.05, 1.0, Linear),
            ],
        };
        SearchSpace { axes }
    }
}

/// Values for every protocol parameter; searched axes overwrite them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Template {
    pub sns: SnsParams,
    pub scf: ScfParams,
    pub finite: FiniteParams,
}

/// A fully specified protocol setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProtocolPoint {
    Sns(SnsParams),
    Scf(ScfParams),
    Finite(FiniteParams),
}

impl ProtocolPoint {
    pub fn mu(&self) -> f64 {
        match self {
            ProtocolPoint::Sns(p) => p.mu,
            ProtocolPoint::Scf(p) => p.mu,
            ProtocolPoint::Finite(p) => p.mu,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            ProtocolPoint::Sns(p) => p.q,
            ProtocolPoint::Scf(p) => p.q,
            ProtocolPoint::Finite(p) => p.q,
        }
    }

    /// Signal-window probability; SCF has no basis choice.
    pub fn p_z(&self) -> Option<f64> {
        match self {
            ProtocolPoint::Sns(p) => Some(p.p_z),
            ProtocolPoint::Scf(_) => None,
            ProtocolPoint::Finite(p) => Some(p.p_z),
        }
    }

    pub fn evaluate(&self, sys: &SystemParams, use_rp: bool) -> Result<RateResult> {
        match self {
            ProtocolPoint::Sns(p) => asymptotic_pipeline(sys, &Protocol::Sns(*p), use_rp),
            ProtocolPoint::Scf(p) => asymptotic_pipeline(sys, &Protocol::Scf(*p), use_rp),
            ProtocolPoint::Finite(p) => finite_rate_pipeline(sys, p, use_rp),
        }
    }

    /// Values of the searched axes at this point.
    pub fn coordinates(&self, space: &SearchSpace) -> Result<Vec<f64>> {
        space.axes.iter().map(|a| self.get(&a.name)).collect()
    }

    /// Parameter by field name.
    pub fn get(&self, name: &str) -> Result<f64> {
        let v = match (self, name) {
            (ProtocolPoint::Sns(p), "mu") => p.mu,
            (ProtocolPoint::Sns(p), "q") => p.q,
            (ProtocolPoint::Sns(p), "p_z") => p.p_z,
            (ProtocolPoint::Sns(p), "n_pulses") => p.n_pulses,
            (ProtocolPoint::Scf(p), "mu") => p.mu,
            (ProtocolPoint::Scf(p), "q") => p.q,
            (ProtocolPoint::Scf(p), "gamma_v") => p.gamma_v,
            (ProtocolPoint::Scf(p), "n_pulses") => p.n_pulses,
            (ProtocolPoint::Finite(p), n) => match n {
                "mu" => p.mu,
                "q" => p.q,
                "mu1" => p.mu1,
                "mu2" => p.mu2,
                "p_z" => p.p_z,
                "p0" => p.p0,
                "p1_dec" => p.p1_dec,
                "p2_dec" => p.p2_dec,
                "delta_slice" => p.delta_slice,
                "gamma_t" => p.gamma_t,
                "eps_pe" => p.eps_pe,
                "g" => p.g,
                "xi" => p.xi,
                "n_pulses" => p.n_pulses,
                _ => return Err(unknown_axis(name)),
            },
            _ => return Err(unknown_axis(name)),
        };
        Ok(v)
    }

    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        let slot = match (self, name) {
            (ProtocolPoint::Sns(p), "mu") => &mut p.mu,
            (ProtocolPoint::Sns(p), "q") => &mut p.q,
            (ProtocolPoint::Sns(p), "p_z") => &mut p.p_z,
            (ProtocolPoint::Sns(p), "n_pulses") => &mut p.n_pulses,
            (ProtocolPoint::Scf(p), "mu") => &mut p.mu,
            (ProtocolPoint::Scf(p), "q") => &mut p.q,
            (ProtocolPoint::Scf(p), "gamma_v") => &mut p.gamma_v,
            (ProtocolPoint::Scf(p), "n_pulses") => &mut p.n_pulses,
            (ProtocolPoint::Finite(p), n) => match n {
                "mu" => &mut p.mu,
                "q" => &mut p.q,
                "mu1" => &mut p.mu1,
                "mu2" => &mut p.mu2,
                "p_z" => &mut p.p_z,
                "p0" => &mut p.p0,
                "p1_dec" => &mut p.p1_dec,
                "p2_dec" => &mut p.p2_dec,
                "delta_slice" => &mut p.delta_slice,
                "gamma_t" => &mut p.gamma_t,
                "eps_pe" => &mut p.eps_pe,
                "g" => &mut p.g,
                "xi" => &mut p.xi,
                "n_pulses" => &mut p.n_pulses,
                _ => return Err(unknown_axis(name)),
            },
            _ => return Err(unknown_axis(name)),
        };
        *slot = v;
        Ok(())
    }
}

fn unknown_axis(name: &str) -> Error {
    Error::InvalidParam(format!("unknown search axis {name:?} for this mode"))
}

/// Maps search coordinates onto protocol settings for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub mode: Mode,
    pub sys: SystemParams,
    pub template: Template,
    pub space: SearchSpace,
    pub use_rp: bool,
}

impl Objective {
    pub fn new(mode: Mode, sys: SystemParams, template: Template, space: SearchSpace, use_rp: bool) -> Result<Self> {
        space.validate()?;
        let obj = Self { mode, sys, template, space, use_rp };
        let probe = obj.base_point();
        for a in &obj.space.axes {
            probe.coordinates(&SearchSpace { axes: vec![a.clone()] })?;
        }
        Ok(obj)
    }

    fn base_point(&self) -> ProtocolPoint {
        match self.mode {
            Mode::SnsAsym => ProtocolPoint::Sns(self.template.sns),
            Mode::ScfAsym => ProtocolPoint::Scf(self.template.scf),
            Mode::SnsFinite => ProtocolPoint::Finite(self.template.finite),
        }
    }

    pub fn point(&self, x: &[f64]) -> Result<ProtocolPoint> {
        if x.len() != self.space.axes.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.space.axes.len() });
        }
        let mut pt = self.base_point();
        for (a, &v) in self.space.axes.iter().zip(x) {
            pt.set(&a.name, v)?;
        }
        if let ProtocolPoint::Finite(p) = &mut pt {
            let has = |n: &str| self.space.index_of(n).is_some();
            if (has("p0") || has("p1_dec")) && !has("p2_dec") {
                p.p2_dec = 1.0 - p.p0 - p.p1_dec;
            }
        }
        Ok(pt)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<(ProtocolPoint, RateResult)> {
        let pt = self.point(x)?;
        let res = pt.evaluate(&self.sys, self.use_rp)?;
        Ok((pt, res))
    }

    /// Rate at `x`; `-inf` wherever the pipeline fails.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self.evaluate(x) {
            Ok((_, r)) if r.rate.is_finite() => r.rate,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Template values of the searched axes, used as a starting point.
    pub fn hint(&self) -> Vec<f64> {
        let pt = self.base_point();
        self.space
            .axes
            .iter()
            .map(|a| pt.get(&a.name).unwrap_or(0.5 * (a.lo + a.hi)).clamp(a.lo, a.hi))
            .collect()
    }
}

/// Best setting found for one pipeline at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub point: Option<ProtocolPoint>,
    pub result: Option<RateResult>,
    /// Why the point is infeasible, if it is.
    pub error: Option<String>,
    pub evaluations: usize,
}

impl Optimized {
    pub fn rate(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.rate)
    }
}

/// Optimizes one pipeline; infeasibility is reported, not raised.
pub fn optimize_objective(obj: &Objective, config: &OptimizeConfig) -> Result<Optimized> {
    let mut config = config.clone();
    if config.hint.is_none() {
        config.hint = Some(obj.hint());
    }
    let res = optimize(|x: &[f64]| obj.value(x), &obj.space, &config)?;
    if !res.feasible {
        // Explain with the starting point's failure.
        let why = match obj.evaluate(config.hint.as_deref().unwrap_or(&res.best_params)) {
            Err(e) if e.is_infeasible() => e.to_string(),
            Err(e) => return Err(e),
            Ok(_) => "no feasible point found".to_string(),
        };
        return Ok(Optimized { point: None, result: None, error: Some(why), evaluations: res.evaluations });
    }
    let (pt, r) = obj.evaluate(&res.best_params)?;
    Ok(Optimized { point: Some(pt), result: Some(r), error: None, evaluations: res.evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRequest {
    pub mode: Mode,
    pub sys: SystemParams,
    pub template: Template,
    pub space: SearchSpace,
    pub distances: Vec<f64>,
    pub use_rp: bool,
    /// Also optimize the unpaired pipeline and report the improvement.
    pub with_baseline: bool,
    pub optimizer: OptimizeConfig,
    /// Start each distance from the previous optimum; runs sequentially.
    pub warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub distance_km: f64,
    pub e_d: f64,
    pub main: Optimized,
    pub baseline: Option<Optimized>,
    /// `rate / baseline - 1`.
    pub improvement: Option<f64>,
}

impl ScanPoint {
    pub fn feasible(&self) -> bool {
        self.main.result.is_some()
    }
}

fn point_seed(seed: u64, index: usize, baseline: bool) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64)
        .wrapping_mul(2)
        .wrapping_add(baseline as u64)
}

fn scan_one(req: &ScanRequest, index: usize, distance: f64, hints: (Option<Vec<f64>>, Option<Vec<f64>>)) -> Result<ScanPoint> {
    let sys = req.sys.at_distance(distance);
    let run = |use_rp: bool, hint: Option<Vec<f64>>| -> Result<Optimized> {
        let obj = Objective::new(req.mode, sys, req.template, req.space.clone(), use_rp)?;
        let cfg = OptimizeConfig {
            seed: point_seed(req.optimizer.seed, index, !use_rp),
            hint: hint.or_else(|| req.optimizer.hint.clone()),
            ..req.optimizer.clone()
        };
        optimize_objective(&obj, &cfg)
    };
    let main = run(req.use_rp, hints.0)?;
    let baseline = if req.use_rp && req.with_baseline { Some(run(false, hints.1)?) } else { None };
    let improvement = match (main.rate(), baseline.as_ref().and_then(|b| b.rate())) {
        (Some(r), Some(b)) if b > 0.0 => Some(r / b - 1.0),
        _ => None,
    };
    Ok(ScanPoint { distance_km: distance, e_d: sys.e_d, main, baseline, improvement })
}

/// One optimized result per distance, in input order.
pub fn scan_distance(req: &ScanRequest) -> Result<Vec<ScanPoint>> {
    req.sys.validate()?;
    if req.distances.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidParam("distances must be non-negative".into()));
    }
    if !req.warm_start {
        return req
            .distances
            .par_iter()
            .enumerate()
            .map(|(i, &d)| scan_one(req, i, d, (None, None)))
            .collect();
    }
    let mut out: Vec<ScanPoint> = Vec::with_capacity(req.distances.len());
    let coords = |o: &Optimized| o.point.and_then(|p| p.coordinates(&req.space).ok());
    for (i, &d) in req.distances.iter().enumerate() {
        let hints = match out.last() {
            Some(prev) => (coords(&prev.main), prev.baseline.as_ref().and_then(coords)),
            None => (None, None),
        };
        out.push(scan_one(req, i, d, hints)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(distances: Vec<f64>, warm_start: bool) -> ScanRequest {
        ScanRequest {
            mode: Mode::SnsAsym,
            sys: SystemParams { e_d: 0.05, ..SystemParams::default() },
            template: Template::default(),
            space: Mode::SnsAsym.default_space(),
            distances,
            use_rp: true,
            with_baseline: true,
            optimizer: OptimizeConfig { budget: 600, ..OptimizeConfig::default() },
            warm_start,
        }
    }

    #[test]
    fn empty_scan() {
        assert!(scan_distance(&request(vec![], false)).unwrap().is_empty());
    }

    #[test]
    fn point_mapping_roundtrip() {
        let obj = Objective::new(
            Mode::SnsFinite,
            SystemParams::default(),
            Template::default(),
            Mode::SnsFinite.default_space(),
            true,
        )
        .unwrap();
        let x = obj.hint();
        let pt = obj.point(&x).unwrap();
        assert_eq!(pt.coordinates(&obj.space).unwrap(), x);
        let ProtocolPoint::Finite(p) = pt else { panic!() };
        assert!((p.p0 + p.p1_dec + p.p2_dec - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_axis_rejected() {
        let space = SearchSpace::new(vec![Axis::new("mu1", 0.01, 0.1, Scale::Linear)]).unwrap();
        assert!(Objective::new(Mode::SnsAsym, SystemParams::default(), Template::default(), space, true).is_err());
    }

    #[test]
    fn warm_and_cold_scans_agree() {
        let d = vec![100.0, 150.0, 200.0];
        let cold = scan_distance(&request(d.clone(), false)).unwrap();
        let warm = scan_distance(&request(d, true)).unwrap();
        for (c, w) in cold.iter().zip(&warm) {
            let (rc, rw) = (c.main.rate().unwrap(), w.main.rate().unwrap());
            assert!((rc / rw - 1.0).abs() < 0.01, "{} km: {rc} vs {rw}", c.distance_km);
        }
    }
}
