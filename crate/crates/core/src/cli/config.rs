//! JSON run configuration, overrides and validation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::forward::TailMode;
use crate::fraccalc::Signal;
use crate::inverse::Basis;
use crate::sturm::Potential;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Solve,
    Kernel,
    MlfTable,
    InvertOrder,
    InvertSpectral,
    InvertPotential,
    Experiment,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Kernel => "kernel",
            Self::MlfTable => "mlf-table",
            Self::InvertOrder => "invert-order",
            Self::InvertSpectral => "invert-spectral",
            Self::InvertPotential => "invert-potential",
            Self::Experiment => "experiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    Piecewise {
        values: Vec<f64>,
    },
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// One sample per line on a uniform grid of [0, 1]; a two-column `x,p`
    /// file uses the second column.
    SamplesFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Zero,
    /// `scale · t^exponent`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `slope · max(0, t - start)`.
    Ramp {
        start: f64,
        #[serde(default = "one")]
        slope: f64,
    },
    /// M + 1 samples, one per line (or `t,value`).
    SamplesFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    /// `M + 1` points on `[0, T]`.
    Uniform,
    Log {
        from: f64,
        to: f64,
        count: usize,
    },
    List {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub q_potential: Option<PotentialSpec>,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_input")]
    pub g: InputSpec,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(rename = "J", default = "default_cells")]
    pub cells: usize,
    #[serde(rename = "M", default = "default_steps")]
    pub steps: usize,
    #[serde(rename = "N", default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default = "default_tail")]
    pub tail: TailMode,
}

fn default_input() -> InputSpec {
    InputSpec::Power {
        exponent: 2.0,
        scale: 1.0,
    }
}
fn default_cells() -> usize {
    200
}
fn default_steps() -> usize {
    400
}
fn default_modes() -> usize {
    64
}
fn default_refine() -> usize {
    3
}
fn default_tail() -> TailMode {
    TailMode::QuasiStatic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tail_tol")]
    pub tail: f64,
    #[serde(default = "default_potential_tol")]
    pub potential: f64,
    #[serde(default)]
    pub regularization: f64,
    #[serde(default = "default_conv_tol")]
    pub convolution: f64,
}

fn default_tail_tol() -> f64 {
    1e-2
}
fn default_potential_tol() -> f64 {
    1e-8
}
fn default_conv_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail: default_tail_tol(),
            potential: default_potential_tol(),
            regularization: 0.0,
            convolution: default_conv_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlfConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_x")]
    pub x: Vec<f64>,
    #[serde(default = "default_uniform")]
    pub times: TimeGrid,
}

fn default_x() -> Vec<f64> {
    vec![0.0, 1.0]
}
fn default_uniform() -> TimeGrid {
    TimeGrid::Uniform
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            x: default_x(),
            times: TimeGrid::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    /// Modes of the fitted model (spectral) or target eigenpairs (potential).
    #[serde(default)]
    pub modes: Option<usize>,
    /// `t,value` samples of K(1, t); synthesised from the problem when absent.
    #[serde(default)]
    pub data_file: Option<PathBuf>,
    #[serde(default)]
    pub times: Option<TimeGrid>,
    /// Modes of the synthetic kernel; the problem's N when absent.
    #[serde(default)]
    pub kernel_modes: Option<usize>,
    #[serde(default)]
    pub limit: Option<f64>,
    #[serde(default)]
    pub basis: Option<Basis>,
    /// Spectral data JSON to match instead of the problem's own spectrum.
    #[serde(default)]
    pub target_file: Option<PathBuf>,
    #[serde(default = "default_random_starts")]
    pub random_starts: usize,
}

fn default_random_starts() -> usize {
    4
}

impl Default for InvertConfig {
    fn default() -> Self {
        Self {
            modes: None,
            data_file: None,
            times: None,
            kernel_modes: None,
            limit: None,
            basis: None,
            target_file: None,
            random_starts: default_random_starts(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Distinguishability,
    UniqueContinuation,
    EigenvalueMatching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_endpoint")]
    pub endpoint: usize,
    /// Fixed Tikhonov weight; the L-curve corner when absent.
    #[serde(default)]
    pub regularization: Option<f64>,
}

fn default_endpoint() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mlf: Option<MlfConfig>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub invert: Option<InvertConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
}

fn config_error(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::config(Some(field.into()), message.into())
}

/// Sets `path` (dot-separated) in `doc`; the value is parsed as JSON and
/// falls back to a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must look like key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_error(key, format!("'{}' is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(config_error(key, "empty override key"))
}

/// Parses a configuration document after overrides.
pub fn parse(doc: Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        config_error(
            if path == "." { String::new() } else { path },
            e.into_inner().to_string(),
        )
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn check_order(field: &str, a: f64, allow_classical: bool) -> Result<(), CliError> {
    let ok = a > 0.0 && (a < 1.0 || (allow_classical && a == 1.0));
    if ok {
        Ok(())
    } else if a == 1.0 {
        Err(config_error(field, "order 1 is only accepted by the solve command"))
    } else {
        Err(config_error(field, format!("order must lie in (0, 1], got {a}")))
    }
}

impl RunConfig {
    /// Checks enums, grids and orders and resolves file paths against `base`.
    pub fn validate(&mut self, command: CommandName, base: &Path) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(config_error(
                    "command",
                    format!(
                        "config is for '{}' but '{}' was requested",
                        c.as_str(),
                        command.as_str()
                    ),
                ));
            }
        }
        if command == CommandName::MlfTable {
            let m = self
                .mlf
                .as_ref()
                .ok_or_else(|| config_error("mlf", "mlf-table needs an mlf block"))?;
            if !(m.gamma1 > 0.0) {
                return Err(config_error("mlf.gamma1", "must be positive"));
            }
            if !(m.gamma2 > 0.0) {
                return Err(config_error("mlf.gamma2", "must be positive"));
            }
            if m.z.is_empty() {
                return Err(config_error("mlf.z", "needs at least one argument"));
            }
            return Ok(());
        }
        let classical = command == CommandName::Solve;
        let p = self
            .problem
            .as_mut()
            .ok_or_else(|| config_error("problem", format!("'{}' needs a problem block", command.as_str())))?;
        check_order("problem.alpha", p.alpha, classical)?;
        if let Some(b) = p.beta {
            check_order("problem.beta", b, classical)?;
        }
        if p.cells < 2 {
            return Err(config_error("problem.J", "need at least 2 cells"));
        }
        if p.steps < 1 {
            return Err(config_error("problem.M", "need at least 1 time step"));
        }
        if p.modes < 1 {
            return Err(config_error("problem.N", "need at least 1 mode"));
        }
        if p.refine < 1 {
            return Err(config_error("problem.refine", "need at least 1 grid level"));
        }
        if !(p.horizon > 0.0) {
            return Err(config_error("problem.T", "horizon must be positive"));
        }
        for (field, spec) in [
            ("problem.potential", Some(&mut p.potential)),
            ("problem.q_potential", p.q_potential.as_mut()),
        ] {
            if let Some(PotentialSpec::SamplesFile { path }) = spec {
                *path = resolve(base, path);
                if !path.is_file() {
                    return Err(config_error(
                        format!("{field}.path"),
                        format!("{} does not exist", path.display()),
                    ));
                }
            }
        }
        if let InputSpec::SamplesFile { path } = &mut p.g {
            *path = resolve(base, path);
            if !path.is_file() {
                return Err(config_error(
                    "problem.g.path",
                    format!("{} does not exist", path.display()),
                ));
            }
        }
        if let Some(inv) = self.invert.as_mut() {
            for (field, file) in [
                ("invert.data_file", inv.data_file.as_mut()),
                ("invert.target_file", inv.target_file.as_mut()),
            ] {
                if let Some(f) = file {
                    *f = resolve(base, f);
                    if !f.is_file() {
                        return Err(config_error(field, format!("{} does not exist", f.display())));
                    }
                }
            }
        }
        if command == CommandName::Experiment {
            let e = self
                .experiment
                .as_ref()
                .ok_or_else(|| config_error("experiment", "experiment needs an experiment block"))?;
            if e.endpoint > 1 {
                return Err(config_error("experiment.endpoint", "must be 0 or 1"));
            }
        }
        Ok(())
    }
}

fn read_numbers(path: &Path, field: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(field, format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            // header line
            Err(_) if rows.is_empty() => continue,
            Err(_) => {
                return Err(config_error(
                    field,
                    format!("malformed line '{line}' in {}", path.display()),
                ))
            }
        }
    }
    Ok(rows)
}

/// Last column of every row.
fn read_column(path: &Path, field: &str) -> Result<Vec<f64>, CliError> {
    Ok(read_numbers(path, field)?
        .into_iter()
        .filter_map(|r| r.last().copied())
        .collect())
}

/// `(t, value)` pairs.
pub fn read_pairs(path: &Path, field: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let rows = read_numbers(path, field)?;
    if rows.iter().any(|r| r.len() < 2) {
        return Err(config_error(field, "expected two columns t,value"));
    }
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

impl PotentialSpec {
    pub fn build(&self, cells: usize, field: &str) -> Result<Potential<f64>, CliError> {
        let built = match self {
            Self::Constant { value } => Potential::constant(*value, cells),
            Self::Piecewise { values } => Potential::piecewise(values, cells),
            Self::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(config_error(
                        format!("{field}.coefficients"),
                        "needs at least one coefficient",
                    ));
                }
                Potential::from_fn(cells, |x| coefficients.iter().rev().fold(0.0, |a, c| a * x + c))
            }
            Self::SamplesFile { path } => Potential::new(read_column(path, field)?).and_then(|p| p.resample(cells)),
        };
        built.map_err(|e| CliError::from_library(e).with_field(field))
    }
}

impl InputSpec {
    pub fn build(&self, horizon: f64, steps: usize) -> Result<Signal<f64>, CliError> {
        let field = "problem.g";
        let built = match self {
            Self::Zero => Signal::zeros(steps, horizon / steps as f64),
            Self::Power { exponent, scale } => {
                if *exponent < 0.0 {
                    return Err(config_error("problem.g.exponent", "must be non-negative"));
                }
                Signal::from_fn(horizon, steps, |t| scale * t.powf(*exponent))
            }
            Self::Ramp { start, slope } => Signal::from_fn(horizon, steps, |t| slope * (t - start).max(0.0)),
            Self::SamplesFile { path } => {
                let v = read_column(path, field)?;
                if v.len() != steps + 1 {
                    return Err(config_error(
                        "problem.g.path",
                        format!("expected M + 1 = {} samples, found {}", steps + 1, v.len()),
                    ));
                }
                Signal::new(v, horizon / steps as f64)
            }
        };
        built.map_err(|e| CliError::from_library(e).with_field(field))
    }
}

impl TimeGrid {
    pub fn build(&self, horizon: f64, steps: usize, field: &str) -> Result<Vec<f64>, CliError> {
        let t = match self {
            Self::Uniform => (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect(),
            Self::Log { from, to, count } => {
                if !(*from > 0.0 && to > from && *count >= 2) {
                    return Err(config_error(field, "log grid needs 0 < from < to and count >= 2"));
                }
                let (a, b) = (from.log10(), to.log10());
                (0..*count)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / (*count - 1) as f64))
                    .collect()
            }
            Self::List { values } => values.clone(),
        };
        if t.iter().any(|v: &f64| !(*v >= 0.0)) || t.windows(2).any(|w| w[1] < w[0]) {
            return Err(config_error(field, "times must be non-negative and sorted"));
        }
        Ok(t)
    }
}
