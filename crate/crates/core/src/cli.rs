//! Command-line scenarios: configuration, presets, CSV output and run
//! manifests.
//!
//! Configs are TOML. A manifest written next to a CSV embeds the fully
//! resolved config and can be passed back through `--config`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::SystemParams;
use crate::error::Error;
use crate::mc::{
    pairing_stats, random_pairing, run_trials, sample_correlated_strings, verify_phase_iteration, Estimate,
    TrialConfig,
};
use crate::optimize::{Axis, OptimizeConfig, SearchSpace};
use crate::pairing::{pair_bit_flip, pair_phase, pair_untagged, ChannelObservables};
use crate::scan::{scan_distance, Mode, ProtocolPoint, ScanPoint, ScanRequest, Template};

pub const SCAN_HEADER: &str =
    "distance_km,e_d,rate,rate_baseline,gamma,sig_len,s_a,s_v,p_ro,p_fo,p_re,mu,q,p_z,feasible";
pub const MC_HEADER: &str =
    "source,bit_flip,untagged_frac,phase_flip,quantity,empirical,std_err,analytic,z_score,pass";
pub const THREADS_ENV: &str = "RPQDS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rpqds", version, about = "Random-pairing QDS signature rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimized asymptotic rates over distance (sns-asym or scf-asym).
    AsymScan(RunArgs),
    /// Optimized finite-size SNS rates over distance.
    FiniteScan(RunArgs),
    /// Monte Carlo check of the pairing formulas and the messaging stage.
    McVerify(RunArgs),
    /// Optimize one protocol and print the best parameters.
    Optimize(RunArgs),
    /// Run a named preset.
    Reproduce {
        preset: Preset,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config or run manifest.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// CSV path; `-` writes to stdout without a manifest.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Objective evaluations per optimization.
    #[arg(long, value_name = "N")]
    pub budget: Option<usize>,
    #[arg(long, conflicts_with = "no_rp")]
    pub rp: bool,
    #[arg(long = "no-rp")]
    pub no_rp: bool,
    /// Also optimize the unpaired protocol and report the improvement.
    #[arg(long)]
    pub improvement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig6,
    Fig7,
    Fig10,
    Fig11,
    #[value(name = "fig12-sns")]
    #[serde(rename = "fig12-sns")]
    Fig12Sns,
    #[value(name = "sec5-headline")]
    #[serde(rename = "sec5-headline")]
    Sec5Headline,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig10 => "fig10",
            Preset::Fig11 => "fig11",
            Preset::Fig12Sns => "fig12-sns",
            Preset::Sec5Headline => "sec5-headline",
        }
    }

    pub fn config(&self) -> ScenarioConfig {
        let asym_d: Vec<f64> = (0..=20).map(|k| 25.0 * k as f64).collect();
        let fin_d: Vec<f64> = (1..=10).map(|k| 50.0 * k as f64).collect();
        let fin_sys = SystemParams { p_d: 1e-8, ..SystemParams::default() };
        let base = ScenarioConfig::default();
        match self {
            Preset::Fig6 => ScenarioConfig { distances: asym_d, e_d: Some(vec![0.0, 0.05, 0.1]), ..base },
            Preset::Fig7 => ScenarioConfig {
                mode: ConfigMode::ScfAsym,
                distances: asym_d,
                e_d: Some(vec![0.0, 0.05, 0.1]),
                ..base
            },
            Preset::Fig10 | Preset::Fig11 => ScenarioConfig {
                mode: ConfigMode::SnsFinite,
                system: fin_sys,
                distances: fin_d,
                e_d: Some(vec![0.01, 0.02, 0.03]),
                baseline: *self == Preset::Fig11,
                ..base
            },
            Preset::Fig12Sns => ScenarioConfig {
                distances: (2..=14).map(|k| 25.0 * k as f64).collect(),
                e_d: Some(vec![0.05]),
                baseline: true,
                note: Some("SNS pair only; the BB84 and MDI curves of this figure are not reproduced".into()),
                ..base
            },
            Preset::Sec5Headline => ScenarioConfig {
                mode: ConfigMode::SnsFinite,
                system: fin_sys,
                distances: vec![483.0],
                e_d: Some(vec![0.03]),
                baseline: true,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigMode {
    SnsAsym,
    ScfAsym,
    SnsFinite,
    McVerify,
    Optimize,
}

impl ConfigMode {
    fn name(&self) -> &'static str {
        match self {
            ConfigMode::SnsAsym => "sns-asym",
            ConfigMode::ScfAsym => "scf-asym",
            ConfigMode::SnsFinite => "sns-finite",
            ConfigMode::McVerify => "mc-verify",
            ConfigMode::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSettings {
    /// Pair draws for the parity model.
    pub trials: u64,
    /// String length for the pairing simulation.
    pub pairing_samples: usize,
    /// `[bit_flip, untagged_frac, phase_flip]` settings.
    pub settings: Vec<[f64; 3]>,
    pub messaging_trials: u64,
    pub messaging: TrialConfig,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            trials: 100_000,
            pairing_samples: 1_000_000,
            settings: vec![[0.05, 0.9, 0.02], [0.2, 0.6, 0.1], [0.4, 0.3, 0.25], [0.5, 1.0, 0.5]],
            messaging_trials: 1000,
            messaging: TrialConfig {
                sig_len: 10_000,
                bit_flip: 0.01,
                s_a: 0.02,
                s_v: 0.04,
                test_fraction: 0.0,
                forge: false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mode: ConfigMode,
    /// Protocol searched in `optimize` mode.
    pub protocol: Option<Mode>,
    pub seed: u64,
    pub budget: usize,
    pub out: Option<PathBuf>,
    pub use_rp: bool,
    /// Also optimize the unpaired protocol.
    pub baseline: bool,
    pub warm_start: bool,
    pub distances: Vec<f64>,
    /// Misalignment values to scan; defaults to `system.e_d`.
    pub e_d: Option<Vec<f64>>,
    pub note: Option<String>,
    pub system: SystemParams,
    pub template: Template,
    /// Replaces the default axis of the same name, or adds one.
    pub search: Vec<Axis>,
    pub mc: McSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: ConfigMode::SnsAsym,
            protocol: None,
            seed: 0,
            budget: OptimizeConfig::default().budget,
            out: None,
            use_rp: true,
            baseline: false,
            warm_start: false,
            distances: vec![100.0],
            e_d: None,
            note: None,
            system: SystemParams::default(),
            template: Template::default(),
            search: Vec::new(),
            mc: McSettings::default(),
        }
    }
}

impl ScenarioConfig {
    fn scan_mode(&self) -> Option<Mode> {
        match self.mode {
            ConfigMode::SnsAsym => Some(Mode::SnsAsym),
            ConfigMode::ScfAsym => Some(Mode::ScfAsym),
            ConfigMode::SnsFinite => Some(Mode::SnsFinite),
            ConfigMode::Optimize => self.protocol,
            ConfigMode::McVerify => None,
        }
    }

    fn e_d_list(&self) -> Vec<f64> {
        self.e_d.clone().unwrap_or_else(|| vec![self.system.e_d])
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(m));
        if self.mode == ConfigMode::Optimize && self.protocol.is_none() {
            return bad("optimize mode needs `protocol`".into());
        }
        if self.mode != ConfigMode::Optimize && self.protocol.is_some() {
            return bad("`protocol` is only used in optimize mode".into());
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.mode != ConfigMode::McVerify {
            if self.distances.is_empty() {
                return bad("distances must not be empty".into());
            }
            if let Some(d) = self.distances.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
                return bad(format!("distance {d} must be finite and >= 0"));
            }
            if let Some(e) = self.e_d_list().iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return bad(format!("e_d = {e} outside [0, 1]"));
            }
            self.system.validate().map_err(CliError::from)?;
            self.space()?;
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SearchSpace, CliError> {
        let mode = self.scan_mode().ok_or_else(|| CliError::config("no protocol to search".into()))?;
        let mut space = mode.default_space();
        for a in &self.search {
            match space.index_of(&a.name) {
                Some(i) => space.axes[i] = a.clone(),
                None => space.axes.push(a.clone()),
            }
        }
        space.validate()?;
        Ok(space)
    }
}

/// Resolved config plus per-point optima; loadable as a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config: ScenarioConfig,
    #[serde(default)]
    pub points: Vec<PointRecord>,
    #[serde(default)]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub distance_km: f64,
    pub e_d: f64,
    pub evaluations: usize,
    pub main: Option<ProtocolPoint>,
    pub main_error: Option<String>,
    pub baseline: Option<ProtocolPoint>,
    pub baseline_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorRecord {
    pub kind: String,
    pub exit_code: u8,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const NUMERIC: u8 = 4;

    fn config(message: String) -> Self {
        Self { code: Self::CONFIG, kind: "config", message }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: 1, kind: "io", message: format!("{}: {e}", path.display()) }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { kind: self.kind.to_string(), exit_code: self.code, message: self.message.clone() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Numeric(_) => (Self::NUMERIC, "numeric"),
            Error::Infeasible(_) | Error::NoData(_) => (Self::INFEASIBLE, "infeasible"),
            _ => (Self::CONFIG, "config"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

/// Parses a config, or the config embedded in a manifest.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
    if value.contains_key("config") && value.contains_key("version") {
        let m: Manifest = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        return Ok(m.config);
    }
    toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
}

fn command_name(cmd: &Command) -> String {
    match cmd {
        Command::AsymScan(_) => "asym-scan".into(),
        Command::FiniteScan(_) => "finite-scan".into(),
        Command::McVerify(_) => "mc-verify".into(),
        Command::Optimize(_) => "optimize".into(),
        Command::Reproduce { preset, .. } => format!("reproduce {}", preset.name()),
    }
}

/// Applies the subcommand and flags to the base config.
pub fn resolve(cmd: &Command) -> Result<(ScenarioConfig, String), CliError> {
    let (args, allowed, label): (&RunArgs, &[ConfigMode], String) = match cmd {
        Command::AsymScan(a) => (a, &[ConfigMode::SnsAsym, ConfigMode::ScfAsym], String::new()),
        Command::FiniteScan(a) => (a, &[ConfigMode::SnsFinite], String::new()),
        Command::McVerify(a) => (a, &[ConfigMode::McVerify], String::new()),
        Command::Optimize(a) => (a, &[ConfigMode::Optimize], String::new()),
        Command::Reproduce { preset, args } => (args, &[], preset.name().to_string()),
    };
    let mut cfg = match (cmd, &args.config) {
        (Command::Reproduce { .. }, Some(_)) => {
            return Err(CliError::config("reproduce takes no --config".into()));
        }
        (Command::Reproduce { preset, .. }, None) => preset.config(),
        (_, Some(path)) => parse_config(&fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)?,
        (_, None) => {
            let mode = allowed[0];
            let protocol = (mode == ConfigMode::Optimize).then_some(Mode::SnsAsym);
            ScenarioConfig { mode, protocol, ..ScenarioConfig::default() }
        }
    };
    if !allowed.is_empty() && !allowed.contains(&cfg.mode) {
        return Err(CliError::config(format!(
            "config mode {} does not match subcommand {}",
            cfg.mode.name(),
            command_name(cmd)
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if args.rp {
        cfg.use_rp = true;
    }
    if args.no_rp {
        cfg.use_rp = false;
    }
    if args.improvement {
        cfg.baseline = true;
    }
    cfg.validate()?;
    let label = if label.is_empty() { cfg.mode.name().to_string() } else { label };
    Ok((cfg, label))
}

/// Twelve significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn scan_row(p: &ScanPoint) -> String {
    let res = p.main.result.as_ref();
    let rep = res.map(|r| &r.report);
    let pt = p.main.point.as_ref();
    let fields = [
        fmt_f64(p.distance_km),
        fmt_f64(p.e_d),
        fmt_f64(res.map_or(0.0, |r| r.rate)),
        opt_f64(p.baseline.as_ref().map(|b| b.rate().unwrap_or(0.0))),
        opt_f64(p.improvement),
        res.map(|r| r.sig_len.to_string()).unwrap_or_default(),
        opt_f64(rep.map(|r| r.s_a)),
        opt_f64(rep.map(|r| r.s_v)),
        opt_f64(rep.map(|r| r.p_ro)),
        opt_f64(rep.map(|r| r.p_fo)),
        opt_f64(rep.map(|r| r.p_re)),
        opt_f64(pt.map(|p| p.mu())),
        opt_f64(pt.map(|p| p.q())),
        opt_f64(pt.and_then(|p| p.p_z())),
        p.feasible().to_string(),
    ];
    fields.join(",")
}

/// CSV text and manifest records of a scan over all `(e_d, distance)`.
pub fn run_scan(cfg: &ScenarioConfig) -> Result<(String, Vec<PointRecord>, bool), CliError> {
    let mode = cfg.scan_mode().ok_or_else(|| CliError::config("no protocol to scan".into()))?;
    let space = cfg.space()?;
    let mut csv = format!("{SCAN_HEADER}\n");
    let mut records = Vec::new();
    let mut any_feasible = false;
    for (k, e_d) in cfg.e_d_list().into_iter().enumerate() {
        let req = ScanRequest {
            mode,
            sys: SystemParams { e_d, ..cfg.system },
            template: cfg.template,
            space: space.clone(),
            distances: cfg.distances.clone(),
            use_rp: cfg.use_rp,
            with_baseline: cfg.baseline,
            optimizer: OptimizeConfig {
                budget: cfg.budget,
                seed: cfg.seed.wrapping_add(k as u64),
                ..OptimizeConfig::default()
            },
            warm_start: cfg.warm_start,
        };
        for p in scan_distance(&req)? {
            any_feasible |= p.feasible();
            csv.push_str(&scan_row(&p));
            csv.push('\n');
            records.push(PointRecord {
                distance_km: p.distance_km,
                e_d: p.e_d,
                evaluations: p.main.evaluations + p.baseline.as_ref().map_or(0, |b| b.evaluations),
                main: p.main.point,
                main_error: p.main.error.clone(),
                baseline: p.baseline.as_ref().and_then(|b| b.point),
                baseline_error: p.baseline.as_ref().and_then(|b| b.error.clone()),
            });
        }
    }
    Ok((csv, records, any_feasible))
}

/// Blank for NaN.
fn fmt_or_blank(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        fmt_f64(x)
    }
}

fn mc_row(csv: &mut String, source: &str, s: &[f64; 3], quantity: &str, est: &Estimate, analytic: f64, pass: bool) {
    let z = if est.samples == 0 { f64::NAN } else { est.z_score(analytic) };
    let _ = writeln!(
        csv,
        "{source},{},{},{},{quantity},{},{},{},{},{pass}",
        fmt_or_blank(s[0]),
        fmt_or_blank(s[1]),
        fmt_or_blank(s[2]),
        fmt_or_blank(est.value),
        fmt_or_blank(est.std_err),
        fmt_or_blank(analytic),
        fmt_or_blank(z),
    );
}

/// Empirical-vs-analytic table for the pairing formulas and the messaging
/// stage.
pub fn run_mc(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let mc = &cfg.mc;
    let mut csv = format!("{MC_HEADER}\n");
    for (k, s) in mc.settings.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(k as u64);
        let obs = ChannelObservables { n_t: mc.pairing_samples as f64, bit_flip: s[0], untagged_frac: s[1], phase_flip: s[2] };
        let split = pair_phase(s[2])?;
        let (a, b) = sample_correlated_strings(&obs, mc.pairing_samples, seed)?;
        let (pa, pb, log) = random_pairing(&a, &b, seed)?;
        let st = pairing_stats(&pa, &pb, &log)?;
        let within = |e: &Estimate, x: f64| e.samples > 0 && e.within(x, 3.0);
        let rows = [
            ("bit_flip", st.bit_flip, pair_bit_flip(s[0])?),
            ("untagged_frac", st.untagged_frac, pair_untagged(s[1])?),
            ("p_even", st.p_even, split.p_even),
            ("phase_even", st.phase_even, split.phase_even),
            ("phase_odd", st.phase_odd, split.phase_odd),
        ];
        for (q, est, x) in rows {
            mc_row(&mut csv, "pairing", s, q, &est, x, within(&est, x));
        }
        let r = verify_phase_iteration(s[2], mc.trials, seed)?;
        for (q, est, x) in [
            ("p_even", r.p_even, split.p_even),
            ("phase_even", r.phase_even, split.phase_even),
            ("phase_odd", r.phase_odd, split.phase_odd),
        ] {
            mc_row(&mut csv, "parity", s, q, &est, x, within(&est, x));
        }
    }
    let t = &mc.messaging;
    let honest = run_trials(&TrialConfig { forge: false, ..*t }, mc.messaging_trials, cfg.seed)?;
    let forged = run_trials(&TrialConfig { forge: true, ..*t }, mc.messaging_trials, cfg.seed)?;
    // Hoeffding bound on either receiver rejecting an honest signature.
    let half = t.sig_len as f64 / 2.0;
    let tail = |s: f64| if s > t.bit_flip { 2.0 * (-2.0 * half * (s - t.bit_flip).powi(2)).exp() } else { 1.0 };
    let bound = (1.0 - tail(t.s_a) - tail(t.s_v)).max(0.0);
    let s = [t.bit_flip, f64::NAN, f64::NAN];
    let ha = Estimate::from_counts(honest.accepted, honest.trials);
    mc_row(&mut csv, "messaging", &s, "honest_acceptance", &ha, bound, ha.value >= bound || ha.within(bound, 3.0));
    let fa = Estimate::from_counts(forged.accepted, forged.trials);
    mc_row(&mut csv, "messaging", &s, "forged_acceptance", &fa, 0.0, forged.accepted == 0);
    Ok(csv)
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.toml")
}

fn write_outputs(
    cfg: &ScenarioConfig,
    command: &str,
    label: &str,
    csv: &str,
    points: Vec<PointRecord>,
    error: Option<ErrorRecord>,
) -> Result<(), CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{label}.csv")));
    if out.as_os_str() == "-" {
        print!("{csv}");
        return Ok(());
    }
    fs::write(&out, csv).map_err(|e| CliError::io(&out, e))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config: cfg.clone(),
        points,
        error,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::config(format!("manifest: {e}")))?;
    let mpath = manifest_path(&out);
    fs::write(&mpath, text).map_err(|e| CliError::io(&mpath, e))
}

/// Runs one command to completion, writing CSV and manifest.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (cfg, label) = resolve(&cli.command)?;
    let command = command_name(&cli.command);
    if let Some(note) = &cfg.note {
        eprintln!("note: {note}");
    }
    if cfg.mode == ConfigMode::McVerify {
        let csv = run_mc(&cfg)?;
        return write_outputs(&cfg, &command, &label, &csv, Vec::new(), None);
    }
    let (csv, points, any_feasible) = run_scan(&cfg)?;
    if cfg.mode == ConfigMode::Optimize {
        for p in points.iter().filter_map(|p| p.main.as_ref()) {
            let text = toml::to_string(p).map_err(|e| CliError::config(e.to_string()))?;
            println!("{text}");
        }
    }
    let err = (!any_feasible).then(|| CliError {
        code: CliError::INFEASIBLE,
        kind: "infeasible",
        message: points
            .iter()
            .find_map(|p| p.main_error.clone())
            .unwrap_or_else(|| "no feasible point".into()),
    });
    write_outputs(&cfg, &command, &label, &csv, points, err.as_ref().map(CliError::record))?;
    err.map_or(Ok(()), Err)
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut doc = toml::Table::new();
            doc.insert("error".into(), toml::Value::try_from(e.record()).expect("error record serializes"));
            eprint!("{doc}");
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(fmt_f64(0.1), "1.00000000000e-1");
        assert_eq!(fmt_f64(6.525614325416877e-10), "6.52561432542e-10");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_config("mode = \"sns-asym\"\nbogus = 1\n").is_err());
        assert!(parse_config("[system]\nalpah = 0.2\n").is_err());
        let c = parse_config("mode = \"scf-asym\"\ndistances = [10.0]\n[system]\ne_d = 0.05\n").unwrap();
        assert_eq!(c.mode, ConfigMode::ScfAsym);
        assert_eq!(c.e_d_list(), vec![0.05]);
    }

    #[test]
    fn validation() {
        let c = ScenarioConfig { distances: vec![-1.0], ..ScenarioConfig::default() };
        assert_eq!(c.validate().unwrap_err().code, CliError::CONFIG);
        let c = ScenarioConfig { mode: ConfigMode::Optimize, ..ScenarioConfig::default() };
        assert!(c.validate().is_err());
        for p in [Preset::Fig6, Preset::Fig7, Preset::Fig10, Preset::Fig11, Preset::Fig12Sns, Preset::Sec5Headline] {
            p.config().validate().unwrap();
        }
    }

    #[test]
    fn search_override_replaces_axis() {
        let c = ScenarioConfig {
            search: vec![Axis::new("mu", 0.1, 0.2, crate::optimize::Scale::Linear)],
            ..ScenarioConfig::default()
        };
        let s = c.space().unwrap();
        assert_eq!(s.axes.len(), Mode::SnsAsym.default_space().axes.len());
        assert_eq!(s.axes[s.index_of("mu").unwrap()].hi, 0.2);
    }

    #[test]
    fn manifest_roundtrip() {
        let cfg = Preset::Fig11.config();
        let m = Manifest {
            version: "0".into(),
            command: "reproduce fig11".into(),
            config: cfg.clone(),
            points: vec![PointRecord {
                distance_km: 50.0,
                e_d: 0.01,
                evaluations: 3,
                main: Some(ProtocolPoint::Finite(cfg.template.finite)),
                main_error: None,
                baseline: None,
                baseline_error: Some("x".into()),
            }],
            error: None,
        };
        let text = toml::to_string(&m).unwrap();
        assert_eq!(toml::from_str::<Manifest>(&text).unwrap(), m);
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
