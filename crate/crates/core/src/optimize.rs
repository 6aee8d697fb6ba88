//! Bound-constrained derivative-free maximization.
//!
//! Multi-start coordinate search: from each start, every axis in turn is
//! refined by golden-section search inside a window that halves on every
//! sweep. Infeasible points score `-inf`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
            scale,
        }
    }

    fn to_unit(&self, x: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (x - self.lo) / (self.hi - self.lo),
            Scale::Log => (x / self.lo).ln() / (self.hi / self.lo).ln(),
        };
        u.clamp(0.0, 1.0)
    }

    fn from_unit(&self, u: f64) -> f64 {
        let x = match self.scale {
            Scale::Linear => self.lo + u * (self.hi - self.lo),
            Scale::Log => self.lo * ((self.hi / self.lo).ln() * u).exp(),
        };
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchSpace {
    pub axes: Vec<Axis>,
}

impl SearchSpace {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let space = Self { axes };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidParam("search space has no axes".into()));
        }
        for a in &self.axes {
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "axis {}: need lo < hi, got [{}, {}]",
                    a.name, a.lo, a.hi
                )));
            }
            if a.scale == Scale::Log && !(a.lo > 0.0) {
                return Err(Error::InvalidParam(format!("log axis {} needs lo > 0", a.name)));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.from_unit(0.5)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.axes.iter().zip(x).map(|(a, &v)| a.to_unit(v)).collect()
    }

    fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.axes.iter().zip(u).map(|(a, &v)| a.from_unit(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    /// Total objective evaluations across all starts.
    pub budget: usize,
    /// Random starts in addition to the center and the hint.
    pub random_starts: usize,
    pub golden_iters: usize,
    pub seed: u64,
    pub hint: Option<Vec<f64>>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            budget: 4000,
            random_starts: 3,
            golden_iters: 24,
            seed: 0,
            hint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_rate: f64,
    pub evaluations: usize,
    /// Accepted objective values, per start, in acceptance order.
    pub trace: Vec<(usize, f64)>,
    pub feasible: bool,
}

struct LocalRun {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    trace: Vec<f64>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn local_search<F>(objective: &F, space: &SearchSpace, start: Vec<f64>, budget: usize, iters: usize) -> LocalRun
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |u: &[f64]| -> f64 {
        let v = objective(&space.from_unit(u));
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut u = start;
    let mut best = eval(&u);
    let mut used = 1;
    let mut trace = vec![best];
    let per_axis = iters + 2;
    let mut width = 0.5;
    while used + per_axis <= budget {
        let before = best;
        for k in 0..u.len() {
            if used + per_axis > budget {
                break;
            }
            let (mut a, mut b) = ((u[k] - width).max(0.0), (u[k] + width).min(1.0));
            let mut probe = u.clone();
            let at = |t: f64, probe: &mut Vec<f64>| {
                probe[k] = t;
                eval(probe)
            };
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let mut fc = at(c, &mut probe);
            let mut fd = at(d, &mut probe);
            for _ in 0..iters {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = at(c, &mut probe);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = at(d, &mut probe);
                }
            }
            used += per_axis;
            let (t, ft) = if fc >= fd { (c, fc) } else { (d, fd) };
            if ft > best {
                u[k] = t;
                best = ft;
                trace.push(best);
            }
        }
        // Keep searching wide while nothing feasible is found.
        if best.is_finite() {
            width *= 0.5;
        }
        if best.is_finite() && before.is_finite() && best - before <= 1e-12 * best.abs() && width < 1e-6 {
            break;
        }
    }
    LocalRun {
        x: space.from_unit(&u),
        value: best,
        evaluations: used,
        trace,
    }
}

/// Maximizes `objective` over `space`. Deterministic for a fixed config.
/// When every evaluated point is infeasible the result has `feasible` unset.
pub fn optimize<F>(objective: F, space: &SearchSpace, config: &OptimizeConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    space.validate()?;
    if config.budget == 0 {
        return Err(Error::InvalidParam("budget must be at least 1".into()));
    }
    let dim = space.axes.len();
    let mut starts = vec![vec![0.5; dim]];
    if let Some(h) = &config.hint {
        if h.len() != dim {
            return Err(Error::LengthMismatch { left: h.len(), right: dim });
        }
        starts.push(space.to_unit(h));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.random_starts {
        starts.push((0..dim).map(|_| rng.random::<f64>()).collect());
    }
    let per_start = (config.budget / starts.len()).max(1);
    let iters = config.golden_iters.max(1);

    let runs: Vec<LocalRun> = starts
        .into_par_iter()
        .map(|s| local_search(&objective, space, s, per_start, iters))
        .collect();

    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best_idx].value {
            best_idx = i;
        }
    }
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let trace = runs
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.trace.iter().map(move |&v| (i, v)))
        .collect();
    let best = &runs[best_idx];
    let feasible = best.value.is_finite();
    Ok(OptimizationResult {
        best_params: best.x.clone(),
        best_rate: best.value,
        evaluations,
        trace,
        feasible,
    })
}
