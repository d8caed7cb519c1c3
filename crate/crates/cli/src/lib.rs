//! Input parsing, configuration and report emission for the `heiswhit` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use heiswhit_core::horizontal::{
    check_c1, check_cm, check_cm_via_w, finiteness_check, synthesize_with, CheckConfig, SynthesisOptions,
};
use heiswhit_core::profile::ProfilePoint;
use heiswhit_core::{
    Enumeration, Evidence, GridSpec, HPoint, ModulusFn, Profile, SampledCurve, Status, ThresholdPolicy,
};
use serde::{Deserialize, Serialize};

pub const EXIT_CONSISTENT: i32 = 0;
pub const EXIT_INCONSISTENT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("duplicate node t = {0}")]
    DuplicateNode(f64),
    #[error("non-finite value in sample {0}")]
    NonFinite(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no profiles to write")]
    EmptyPlot,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] heiswhit_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CheckC1,
    CheckCm,
    CheckCmW,
    Synthesize,
    Finiteness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

impl InputFormat {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => InputFormat::Json,
            _ => InputFormat::Csv,
        }
    }
}

/// `power:<c>:<s>` for `c t^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSpec(pub ModulusFn);

impl FromStr for OmegaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["power", c, e] => {
                let c: f64 = c.parse().map_err(|_| format!("bad constant {c:?}"))?;
                let e: f64 = e.parse().map_err(|_| format!("bad exponent {e:?}"))?;
                ModulusFn::power(c, e).map(OmegaSpec).map_err(|e| e.to_string())
            }
            _ => Err(format!("expected power:<c>:<s>, got {s:?}")),
        }
    }
}

impl fmt::Display for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            ModulusFn::Power { c, s } => write!(f, "power:{c}:{s}"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Command-line flags. Every flag can also be set through `HEISWHIT_<NAME>`.
#[derive(Debug, Clone, Parser)]
#[command(name = "heiswhit", version, about = "Whitney extension certificates for curves in the Heisenberg group")]
pub struct Cli {
    #[arg(long, value_enum, env = "HEISWHIT_MODE")]
    pub mode: Mode,
    /// Order m. Falls back to the input's "m" field, then to 1.
    #[arg(long, env = "HEISWHIT_M")]
    pub m: Option<usize>,
    /// Profile tolerance of the verdict policy.
    #[arg(long, env = "HEISWHIT_TOL", default_value_t = ThresholdPolicy::default().tol)]
    pub tol: f64,
    /// Horizontality defect tolerance of synthesis.
    #[arg(long, env = "HEISWHIT_DEFECT_TOL", default_value_t = SynthesisOptions::default().defect_tol)]
    pub defect_tol: f64,
    /// Subset window width in consecutive nodes.
    #[arg(long, env = "HEISWHIT_WINDOW")]
    pub window: Option<usize>,
    /// Ratio of successive scales in the geometric scale grid.
    #[arg(long, env = "HEISWHIT_DELTA_RATIO", default_value_t = 0.5)]
    pub delta_ratio: f64,
    /// Modulus of continuity for the finiteness scan.
    #[arg(long, env = "HEISWHIT_OMEGA", default_value = "power:1:1")]
    pub omega: OmegaSpec,
    #[arg(long, env = "HEISWHIT_INPUT")]
    pub input: PathBuf,
    #[arg(long, value_enum, env = "HEISWHIT_FORMAT")]
    pub format: Option<InputFormat>,
    /// JSON report path; standard output when absent.
    #[arg(long, env = "HEISWHIT_REPORT")]
    pub report: Option<PathBuf>,
    /// CSV of the synthesized curve on a uniform grid.
    #[arg(long, env = "HEISWHIT_GRID_OUT")]
    pub grid_out: Option<PathBuf>,
    #[arg(long, env = "HEISWHIT_GRID_SAMPLES", default_value_t = 1001)]
    pub grid_samples: usize,
    /// CSV of every profile in the report.
    #[arg(long, env = "HEISWHIT_PLOT_OUT")]
    pub plot_out: Option<PathBuf>,
    /// Visit every subset instead of windows.
    #[arg(long, env = "HEISWHIT_FULL_ENUM")]
    pub full_enum: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub m: Option<usize>,
    pub tol: f64,
    pub defect_tol: f64,
    pub window: Option<usize>,
    pub delta_ratio: f64,
    pub omega: ModulusFn,
    pub input: PathBuf,
    pub format: Option<InputFormat>,
    pub report: Option<PathBuf>,
    pub grid_out: Option<PathBuf>,
    pub grid_samples: usize,
    pub plot_out: Option<PathBuf>,
    pub full_enum: bool,
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        Self {
            mode: c.mode,
            m: c.m,
            tol: c.tol,
            defect_tol: c.defect_tol,
            window: c.window,
            delta_ratio: c.delta_ratio,
            omega: c.omega.0,
            input: c.input,
            format: c.format,
            report: c.report,
            grid_out: c.grid_out,
            grid_samples: c.grid_samples,
            plot_out: c.plot_out,
            full_enum: c.full_enum,
        }
    }
}

impl RunConfig {
    /// Flag defaults for `mode` on `input`.
    pub fn new(mode: Mode, input: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            m: None,
            tol: ThresholdPolicy::default().tol,
            defect_tol: SynthesisOptions::default().defect_tol,
            window: None,
            delta_ratio: 0.5,
            omega: ModulusFn::lipschitz(),
            input: input.into(),
            format: None,
            report: None,
            grid_out: None,
            grid_samples: 1001,
            plot_out: None,
            full_enum: false,
        }
    }

    /// Checks the configuration once the order is known.
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.grid_samples < 2 {
            return bad(format!("grid-samples must be at least 2, got {}", self.grid_samples));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.defect_tol > 0.0 && self.defect_tol.is_finite()) {
            return bad(format!("defect-tol must be positive, got {}", self.defect_tol));
        }
        if !(self.delta_ratio > 0.0 && self.delta_ratio < 1.0) {
            return bad(format!("delta-ratio must lie in (0, 1), got {}", self.delta_ratio));
        }
        if let Some(w) = self.window {
            let least = if self.mode == Mode::Finiteness { m + 2 } else { m + 1 };
            if w < least {
                return bad(format!("window {w} is narrower than {least} for m = {m}"));
            }
        }
        Ok(())
    }

    fn enumeration(&self) -> Option<Enumeration> {
        if self.full_enum {
            Some(Enumeration::Full)
        } else {
            self.window.map(Enumeration::Windowed)
        }
    }

    fn check_config(&self, m: usize) -> CheckConfig {
        let mut cfg = CheckConfig::for_order(m);
        if let Some(e) = self.enumeration() {
            cfg.scan.enumeration = e;
        }
        cfg.scan.grid = GridSpec::Geometric { ratio: self.delta_ratio };
        cfg.policy.tol = self.tol;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub samples: Vec<SampleRow>,
}

/// Parsed samples plus the order requested by the input, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub curve: SampledCurve,
    pub m: Option<usize>,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Parse { path: path.display().to_string(), msg: msg.into() }
}

/// Reads `t,x,y,z` samples, sorting them by `t`.
pub fn parse_input(path: &Path, format: InputFormat) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let (rows, m) = match format {
        InputFormat::Json => {
            let doc: InputDoc = serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
            (doc.samples, doc.m)
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
            let headers = reader.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
            if headers.iter().collect::<Vec<_>>() != ["t", "x", "y", "z"] {
                return Err(parse_err(path, format!("expected header t,x,y,z, got {}", headers.iter().collect::<Vec<_>>().join(","))));
            }
            let mut rows = Vec::new();
            for rec in reader.deserialize::<SampleRow>() {
                rows.push(rec.map_err(|e| parse_err(path, e.to_string()))?);
            }
            (rows, None)
        }
    };
    Ok(Input { curve: curve_from_rows(rows)?, m })
}

pub fn curve_from_rows(mut rows: Vec<SampleRow>) -> Result<SampledCurve> {
    if let Some(i) = rows.iter().position(|r| ![r.t, r.x, r.y, r.z].iter().all(|v| v.is_finite())) {
        return Err(CliError::NonFinite(i));
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    if let Some(w) = rows.windows(2).find(|w| w[0].t == w[1].t) {
        return Err(CliError::DuplicateNode(w[0].t));
    }
    let nodes = rows.iter().map(|r| r.t).collect();
    let values = rows.iter().map(|r| HPoint::new(r.x, r.y, r.z)).collect();
    Ok(SampledCurve::new(nodes, values)?)
}

/// Inverse of JSON [`parse_input`].
pub fn write_json_input(curve: &SampledCurve, m: Option<usize>, path: &Path) -> Result<()> {
    let samples = curve
        .nodes()
        .iter()
        .zip(curve.values())
        .map(|(&t, p)| SampleRow { t, x: p.x, y: p.y, z: p.z })
        .collect();
    let text = serde_json::to_string_pretty(&InputDoc { m, samples }).expect("finite samples serialize");
    std::fs::write(path, text).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub name: String,
    pub status: Option<Status>,
    pub slope: Option<f64>,
    pub terminal: Option<f64>,
    pub threshold: Option<f64>,
    /// `(delta, value)` pairs, delta decreasing.
    pub points: Vec<(f64, f64)>,
}

impl ProfileReport {
    fn from_evidence(e: &Evidence) -> Self {
        Self {
            name: e.name.clone(),
            status: Some(e.status),
            slope: e.slope,
            terminal: e.terminal,
            threshold: Some(e.threshold),
            points: pairs(&e.profile),
        }
    }

    fn bare(name: impl Into<String>, p: &Profile, decades: f64) -> Self {
        Self {
            name: name.into(),
            status: None,
            slope: p.loglog_slope(decades),
            terminal: p.terminal(),
            threshold: None,
            points: pairs(p),
        }
    }
}

fn pairs(p: &Profile) -> Vec<(f64, f64)> {
    p.points.iter().map(|q| (q.delta, q.value)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub m: usize,
    pub nodes: usize,
    /// `consistent`, `inconsistent`, `inconclusive`, or `success` for modes
    /// without a verdict.
    pub status: String,
    pub profiles: Vec<ProfileReport>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_subset: Option<Vec<usize>>,
    /// Seconds per phase.
    pub wall_times: BTreeMap<String, f64>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status.as_str() {
            "inconsistent" => EXIT_INCONSISTENT,
            "inconclusive" => EXIT_INCONCLUSIVE,
            _ => EXIT_CONSISTENT,
        }
    }
}

fn status_name(s: Status) -> String {
    match s {
        Status::Consistent => "consistent",
        Status::Inconsistent => "inconsistent",
        Status::Inconclusive => "inconclusive",
    }
    .to_string()
}

/// Writes `delta,value,series` rows ordered by series, then delta descending.
/// Nothing is written when there are no points.
pub fn emit_plot_data(profiles: &[(String, Profile)], path: &Path) -> Result<()> {
    let mut rows: Vec<(&str, f64, f64)> = profiles
        .iter()
        .flat_map(|(name, p)| p.points.iter().map(move |q| (name.as_str(), q.delta, q.value)))
        .collect();
    if rows.is_empty() {
        return Err(CliError::EmptyPlot);
    }
    rows.sort_by(|a, b| a.0.cmp(b.0).then(b.1.total_cmp(&a.1)));
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io { path: path.display().to_string(), source: e.into() };
    w.write_record(["delta", "value", "series"]).map_err(fail)?;
    for (series, delta, value) in rows {
        w.write_record([delta.to_string(), value.to_string(), series.to_string()]).map_err(fail)?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Runs the selected pipeline, writes every requested output and returns the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let mut wall_times = BTreeMap::new();
    let format = config.format.unwrap_or_else(|| InputFormat::from_path(&config.input));
    let input = parse_input(&config.input, format)?;
    let m = config.m.or(input.m).unwrap_or(1);
    config.validate(m)?;
    wall_times.insert("parse".to_string(), seconds(started));

    let curve = &input.curve;
    let cfg = config.check_config(m);
    let phase = Instant::now();
    let mut worst_subset = None;
    let mut grid_rows = None;
    let (status, profiles, constants) = match config.mode {
        Mode::CheckC1 | Mode::CheckCm | Mode::CheckCmW => {
            let verdict = match config.mode {
                Mode::CheckC1 => check_c1(curve, &cfg)?,
                Mode::CheckCm => check_cm(curve, m, &cfg)?,
                _ => check_cm_via_w(curve, m, &cfg)?,
            };
            let profiles = verdict.evidence.iter().map(ProfileReport::from_evidence).collect();
            (status_name(verdict.status), profiles, verdict.constants)
        }
        Mode::Synthesize => {
            let opts = SynthesisOptions { defect_tol: config.defect_tol, ..SynthesisOptions::default() };
            let c = synthesize_with(curve, m, &opts)?;
            let r = &c.report;
            let mut profiles = vec![ProfileReport::bare("modulus", &r.modulus, cfg.policy.decades)];
            for (k, p) in r.height_field.profiles.iter().enumerate() {
                profiles.push(ProfileReport::bare(format!("height_remainder_{k}"), p, cfg.policy.decades));
            }
            let constants = BTreeMap::from([
                ("defect".to_string(), r.defect),
                ("defect_tol".to_string(), r.defect_tol),
                ("node_error".to_string(), r.node_error),
                ("max_jump".to_string(), r.max_jump),
                ("leibniz_error".to_string(), r.leibniz_error),
                ("max_lambda".to_string(), r.max_lambda),
            ]);
            if config.grid_out.is_some() {
                let (lo, hi) = (curve.nodes()[0], curve.nodes()[curve.len() - 1]);
                let last = (config.grid_samples - 1) as f64;
                grid_rows = Some(
                    (0..config.grid_samples)
                        .map(|i| {
                            let t = if i + 1 == config.grid_samples { hi } else { lo + (hi - lo) * i as f64 / last };
                            let p = c.eval(t);
                            [t, p.x, p.y, p.z, c.defect_at(t)]
                        })
                        .collect::<Vec<_>>(),
                );
            }
            ("success".to_string(), profiles, constants)
        }
        Mode::Finiteness => {
            let r = finiteness_check(curve, m, &config.omega, config.enumeration())?;
            worst_subset = Some(r.worst_subset.clone());
            let constants = BTreeMap::from([
                ("m_hat".to_string(), r.m_hat),
                ("c2_hat".to_string(), r.c2_hat),
                ("subsets_scanned".to_string(), r.subsets_scanned as f64),
            ]);
            ("success".to_string(), Vec::new(), constants)
        }
    };
    wall_times.insert("pipeline".to_string(), seconds(phase));

    let phase = Instant::now();
    if let (Some(path), Some(rows)) = (&config.grid_out, grid_rows) {
        write_grid(path, &rows)?;
    }
    if let Some(path) = &config.plot_out {
        let series: Vec<(String, Profile)> = profiles
            .iter()
            .map(|p: &ProfileReport| {
                let points = p.points.iter().map(|&(delta, value)| ProfilePoint { delta, value });
                (p.name.clone(), Profile { points: points.collect() })
            })
            .collect();
        emit_plot_data(&series, path)?;
    }
    wall_times.insert("outputs".to_string(), seconds(phase));

    wall_times.insert("total".to_string(), seconds(started));
    let report =
        Report { mode: config.mode, m, nodes: curve.len(), status, profiles, constants, worst_subset, wall_times };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match &config.report {
        Some(path) => std::fs::write(path, text).map_err(io_err(path))?,
        None => println!("{text}"),
    }
    Ok(report)
}

fn write_grid(path: &Path, rows: &[[f64; 5]]) -> Result<()> {
    let fail = |e: csv::Error| CliError::Io { path: path.display().to_string(), source: e.into() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "y", "z", "defect"]).map_err(fail)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(fail)?;
    }
    std::fs::write(path, w.into_inner().expect("in-memory writer")).map_err(io_err(path))
}
