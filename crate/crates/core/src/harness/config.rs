//! Run configuration: TOML file, dotted-key overrides and environment.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::driver::SnapshotPolicy;
use crate::field::RealField;
use crate::grid::{make_grid, Grid};
use crate::params::{GSpec, PhysicsParams};
use crate::stepper::substeps_per_strip;
use crate::verification::{CosineBump, TestFunction};

use super::initial::InitialSpec;

/// Overrides the output root directory.
pub const ENV_OUTPUT_ROOT: &str = "QHD_OUTPUT_ROOT";
/// Overrides `run.threads`.
pub const ENV_THREADS: &str = "QHD_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConfigErrorCode {
    Parse,
    UnknownKey,
    Grid,
    Hbar,
    PressureExponent,
    Alpha,
    Relaxation,
    CollisionStrength,
    StripRatio,
    FinalTime,
    InitialCondition,
    Forcing,
    Doping,
    Diagnostics,
    Threads,
    Sweep,
}

impl ConfigErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConfigErrorCode::Parse => "E-CONFIG-PARSE",
            ConfigErrorCode::UnknownKey => "E-CONFIG-KEY",
            ConfigErrorCode::Grid => "E-GRID",
            ConfigErrorCode::Hbar => "E-HBAR",
            ConfigErrorCode::PressureExponent => "E-PRESSURE-EXPONENT",
            ConfigErrorCode::Alpha => "E-ALPHA",
            ConfigErrorCode::Relaxation => "E-RELAXATION",
            ConfigErrorCode::CollisionStrength => "E-COLLISION-STRENGTH",
            ConfigErrorCode::StripRatio => "E-STRIP-RATIO",
            ConfigErrorCode::FinalTime => "E-FINAL-TIME",
            ConfigErrorCode::InitialCondition => "E-INITIAL",
            ConfigErrorCode::Forcing => "E-FORCING",
            ConfigErrorCode::Doping => "E-DOPING",
            ConfigErrorCode::Diagnostics => "E-DIAGNOSTICS",
            ConfigErrorCode::Threads => "E-THREADS",
            ConfigErrorCode::Sweep => "E-SWEEP",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub code: ConfigErrorCode,
    pub message: String,
}

impl ConfigError {
    pub fn new(code: ConfigErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Zero,
    Density { coeff: f64 },
    SmoothedKineticDensity { coeff: f64, width: f64 },
}

/// Background charge profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DopingConfig {
    Constant { value: f64 },
    /// `offset + amplitude·cos(2π m·x/L)`.
    Cosine { offset: f64, amplitude: f64, modes: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "three")]
    pub p: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default = "zero_forcing")]
    pub forcing: ForcingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doping: Option<DopingConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub tau: f64,
    /// Defaults to `tau/16`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "final")]
    pub final_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotConfig {
    Boundaries,
    Substeps,
}

impl From<SnapshotConfig> for SnapshotPolicy {
    fn from(s: SnapshotConfig) -> Self {
        match s {
            SnapshotConfig::Boundaries => SnapshotPolicy::Boundaries,
            SnapshotConfig::Substeps => SnapshotPolicy::Substeps,
        }
    }
}

/// Optional overrides for the test-function bump used by the weak-form residuals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_radius: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "boundaries")]
    pub snapshots: SnapshotConfig,
    #[serde(default = "yes")]
    pub ledger: bool,
    #[serde(default = "yes")]
    pub residuals: bool,
    #[serde(default = "yes")]
    pub monitors: bool,
    /// Ledger tolerance relative to `E₀`.
    #[serde(default = "ledger_tol")]
    pub ledger_tolerance: f64,
    #[serde(default)]
    pub bump: BumpConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            snapshots: SnapshotConfig::Boundaries,
            ledger: true,
            residuals: true,
            monitors: true,
            ledger_tolerance: ledger_tol(),
            bump: BumpConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub overwrite: bool,
    #[serde(default)]
    pub dump_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out(),
            overwrite: false,
            dump_fields: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, threads: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub run: RunSection,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn ledger_tol() -> f64 {
    1e-8
}
fn zero_forcing() -> ForcingConfig {
    ForcingConfig::Zero
}
fn boundaries() -> SnapshotConfig {
    SnapshotConfig::Boundaries
}
fn default_out() -> PathBuf {
    PathBuf::from("qhd-out")
}

fn parse_error(e: impl fmt::Display) -> ConfigError {
    let msg = e.to_string();
    let code = if msg.contains("unknown field") || msg.contains("unknown variant") {
        ConfigErrorCode::UnknownKey
    } else {
        ConfigErrorCode::Parse
    };
    ConfigError::new(code, msg)
}

/// Parses a command-line value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` in a TOML table, creating intermediate tables.
pub fn apply_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(ConfigErrorCode::UnknownKey, format!("bad key {key:?}")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(ConfigError::new(
                    ConfigErrorCode::UnknownKey,
                    format!("{key}: {part} is not a section"),
                ))
            }
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

/// Splits `--a.b value` / `--a.b=value` pairs from raw arguments.
pub fn parse_override_args(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(ConfigError::new(
                ConfigErrorCode::UnknownKey,
                format!("expected --section.key, got {arg:?}"),
            ));
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| {
                    ConfigError::new(ConfigErrorCode::Parse, format!("missing value for --{key}"))
                })?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(parse_error)?;
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        toml::Value::Table(table).try_into().map_err(parse_error)
    }

    /// Applies `QHD_OUTPUT_ROOT` (prefixing relative output dirs) and `QHD_THREADS`.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(root) = std::env::var(ENV_OUTPUT_ROOT) {
            if !root.is_empty() && self.output.dir.is_relative() {
                self.output.dir = PathBuf::from(root).join(&self.output.dir);
            }
        }
        if let Ok(t) = std::env::var(ENV_THREADS) {
            self.run.threads = t
                .trim()
                .parse()
                .map_err(|_| ConfigError::new(ConfigErrorCode::Threads, format!("{ENV_THREADS}={t:?}")))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dt(&self) -> f64 {
        self.time.dt.unwrap_or(self.time.tau / 16.0)
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        make_grid(self.grid.dim, self.grid.points, self.grid.length)
            .map_err(|e| ConfigError::new(ConfigErrorCode::Grid, e.to_string()))
    }

    pub fn physics_params(&self, grid: &Grid) -> Result<PhysicsParams, ConfigError> {
        let ph = &self.physics;
        let g = match ph.forcing {
            ForcingConfig::Zero => GSpec::Zero,
            ForcingConfig::Density { coeff } => GSpec::Density { coeff },
            ForcingConfig::SmoothedKineticDensity { coeff, width } => GSpec::SmoothedKineticDensity { coeff, width },
        };
        let doping = match &ph.doping {
            None => None,
            Some(DopingConfig::Constant { value }) => Some(RealField::constant(grid, *value)),
            Some(DopingConfig::Cosine {
                offset,
                amplitude,
                modes,
            }) => {
                if modes.len() != grid.dim() {
                    return Err(ConfigError::new(
                        ConfigErrorCode::Doping,
                        format!("doping needs {} modes, got {}", grid.dim(), modes.len()),
                    ));
                }
                let l = grid.box_length();
                let modes = modes.clone();
                Some(RealField::from_fn(grid, move |x| {
                    let phase: f64 = modes.iter().zip(x).map(|(&m, xi)| m as f64 * xi).sum();
                    offset + amplitude * (std::f64::consts::TAU * phase / l).cos()
                }))
            }
        };
        if let Some(d) = &doping {
            if !d.values().iter().all(|v| v.is_finite()) {
                return Err(ConfigError::new(ConfigErrorCode::Doping, "non-finite doping"));
            }
        }
        Ok(PhysicsParams {
            hbar: ph.hbar,
            p: ph.p,
            alpha: ph.alpha,
            g,
            doping,
            epsilon_relax: ph.epsilon,
            dealias: ph.dealias,
        })
    }

    /// Checks every invariant; returns warnings that do not block a run.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        let grid = self.grid()?;
        let ph = &self.physics;
        if !(ph.hbar.is_finite() && ph.hbar > 0.0) {
            return Err(ConfigError::new(ConfigErrorCode::Hbar, format!("hbar must be positive, got {}", ph.hbar)));
        }
        if !(ph.p >= 1.0 && ph.p < 5.0) {
            return Err(ConfigError::new(
                ConfigErrorCode::PressureExponent,
                format!("p must lie in [1, 5), got {}", ph.p),
            ));
        }
        if !(ph.alpha.is_finite() && ph.alpha >= 0.0) {
            return Err(ConfigError::new(ConfigErrorCode::Alpha, format!("alpha must be >= 0, got {}", ph.alpha)));
        }
        if let Some(eps) = ph.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(ConfigError::new(ConfigErrorCode::Relaxation, format!("epsilon must be positive, got {eps}")));
            }
        }
        match ph.forcing {
            ForcingConfig::Zero => {}
            ForcingConfig::Density { coeff } if coeff.is_finite() => {}
            ForcingConfig::SmoothedKineticDensity { coeff, width } if coeff.is_finite() && width > 0.0 => {}
            _ => return Err(ConfigError::new(ConfigErrorCode::Forcing, "invalid forcing parameters")),
        }
        let params = self.physics_params(&grid)?;

        let t = &self.time;
        if !(t.final_time.is_finite() && t.final_time > 0.0) {
            return Err(ConfigError::new(ConfigErrorCode::FinalTime, format!("final time must be positive, got {}", t.final_time)));
        }
        if !(t.tau > 0.0 && t.tau <= t.final_time * (1.0 + 1e-12)) {
            return Err(ConfigError::new(
                ConfigErrorCode::FinalTime,
                format!("tau={} must lie in (0, T={}]", t.tau, t.final_time),
            ));
        }
        if params.effective_alpha() * t.tau >= 1.0 {
            return Err(ConfigError::new(
                ConfigErrorCode::CollisionStrength,
                format!("alpha_eff * tau = {} must be < 1", params.effective_alpha() * t.tau),
            ));
        }
        substeps_per_strip(t.tau, self.dt()).map_err(|e| ConfigError::new(ConfigErrorCode::StripRatio, e.to_string()))?;
        let strips = t.final_time / t.tau;
        if (strips - strips.round()).abs() > 1e-9 * strips.max(1.0) {
            warnings.push(format!(
                "T/tau = {strips} is not an integer; the run is extended to {} strips",
                (strips - 1e-9).ceil()
            ));
        }

        self.initial
            .validate(&grid)
            .map_err(|e| ConfigError::new(ConfigErrorCode::InitialCondition, e))?;

        let d = &self.diagnostics;
        if !(d.ledger_tolerance.is_finite() && d.ledger_tolerance >= 0.0) {
            return Err(ConfigError::new(ConfigErrorCode::Diagnostics, "ledger tolerance must be >= 0"));
        }
        self.test_function().map_err(|e| ConfigError::new(ConfigErrorCode::Diagnostics, e))?;
        if self.run.threads == 0 {
            return Err(ConfigError::new(ConfigErrorCode::Threads, "thread count must be >= 1"));
        }
        Ok(warnings)
    }

    /// The bump used for the weak-form residuals and local smoothing window.
    pub fn test_function(&self) -> Result<TestFunction, String> {
        let dim = self.grid.dim;
        let l = self.grid.length;
        let t_end = (self.time.final_time / self.time.tau - 1e-9).ceil() * self.time.tau;
        let b = &self.diagnostics.bump;
        let tc = b.time_center.unwrap_or(0.5 * t_end);
        let tr = b.time_radius.unwrap_or(0.45 * t_end);
        if tc + tr > t_end * (1.0 + 1e-12) {
            return Err(format!("bump time support [{}, {}] leaves [0, {t_end}]", tc - tr, tc + tr));
        }
        let per_axis = |v: &Option<Vec<f64>>, default: f64, name: &str| -> Result<Vec<f64>, String> {
            match v {
                None => Ok(vec![default; dim]),
                Some(v) if v.len() == dim => Ok(v.clone()),
                Some(v) => Err(format!("bump {name} has {} entries, grid has {dim} axes", v.len())),
            }
        };
        let centers = per_axis(&b.space_center, 0.5 * l, "space_center")?;
        let radii = per_axis(&b.space_radius, 0.25 * l, "space_radius")?;
        if radii.iter().any(|&r| r > 0.5 * l) {
            return Err("bump spatial radius exceeds half the box".into());
        }
        let space = centers
            .iter()
            .zip(&radii)
            .map(|(&c, &r)| CosineBump::new(c, r))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let time = CosineBump::new(tc, tr).map_err(|e| e.to_string())?;
        let dir = match &b.direction {
            None => {
                let mut d = [0.0; 3];
                d[0] = 1.0;
                d
            }
            Some(v) if v.len() == dim => {
                let mut d = [0.0; 3];
                d[..dim].copy_from_slice(v);
                d
            }
            Some(v) => return Err(format!("bump direction has {} entries, grid has {dim} axes", v.len())),
        };
        TestFunction::vector(time, space, dir).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
[grid]
dim = 1
points = 128
length = 40.0

[physics]
alpha = 1.0

[time]
tau = 0.1
final = 1.0

[initial]
kind = "gaussian"
amplitude = 0.1
sigma = 2.0
center = [20.0]
"#;

    fn code_of(text: &str, overrides: &[(&str, &str)]) -> ConfigErrorCode {
        let o: Vec<(String, String)> = overrides.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        match RunConfig::from_toml_with_overrides(text, &o) {
            Err(e) => e.code,
            Ok(c) => c.validate().expect_err("should be rejected").code,
        }
    }

    #[test]
    fn sample_parses_with_defaults() {
        let c = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.physics.p, 3.0);
        assert_eq!(c.dt(), 0.1 / 16.0);
        assert!(c.validate().unwrap().is_empty());
        let again = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn dotted_overrides() {
        let o = vec![
            ("time.tau".to_string(), "0.05".to_string()),
            ("physics.forcing.kind".to_string(), "density".to_string()),
            ("physics.forcing.coeff".to_string(), "0.5".to_string()),
        ];
        let c = RunConfig::from_toml_with_overrides(SAMPLE, &o).unwrap();
        assert_eq!(c.time.tau, 0.05);
        assert_eq!(c.physics.forcing, ForcingConfig::Density { coeff: 0.5 });
    }

    #[test]
    fn override_args_split() {
        let args: Vec<String> = ["--time.tau", "0.05", "--grid.points=64"].iter().map(|s| s.to_string()).collect();
        let pairs = parse_override_args(&args).unwrap();
        assert_eq!(pairs[0], ("time.tau".into(), "0.05".into()));
        assert_eq!(pairs[1], ("grid.points".into(), "64".into()));
        assert!(parse_override_args(&["--x".to_string()]).is_err());
    }

    #[test]
    fn every_violation_has_its_own_code() {
        let cases: Vec<(Vec<(&str, &str)>, ConfigErrorCode)> = vec![
            (vec![("grid.points", "63")], ConfigErrorCode::Grid),
            (vec![("physics.hbar", "0.0")], ConfigErrorCode::Hbar),
            (vec![("physics.p", "5.0")], ConfigErrorCode::PressureExponent),
            (vec![("physics.alpha", "-1.0")], ConfigErrorCode::Alpha),
            (vec![("physics.epsilon", "-2.0")], ConfigErrorCode::Relaxation),
            (vec![("physics.alpha", "10.0")], ConfigErrorCode::CollisionStrength),
            (vec![("time.dt", "0.03")], ConfigErrorCode::StripRatio),
            (vec![("time.final", "-1.0")], ConfigErrorCode::FinalTime),
            (vec![("initial.sigma", "10.0")], ConfigErrorCode::InitialCondition),
            (vec![("physics.forcing.kind", "smoothed_kinetic_density"), ("physics.forcing.coeff", "1.0"), ("physics.forcing.width", "-1.0")], ConfigErrorCode::Forcing),
            (vec![("physics.doping.kind", "cosine"), ("physics.doping.offset", "1.0"), ("physics.doping.amplitude", "0.1"), ("physics.doping.modes", "[1, 2]")], ConfigErrorCode::Doping),
            (vec![("diagnostics.ledger_tolerance", "-1.0")], ConfigErrorCode::Diagnostics),
            (vec![("run.threads", "0")], ConfigErrorCode::Threads),
            (vec![("grid.colour", "1")], ConfigErrorCode::UnknownKey),
        ];
        let mut seen = std::collections::HashSet::new();
        for (o, expected) in cases {
            assert_eq!(code_of(SAMPLE, &o), expected, "{o:?}");
            assert!(seen.insert(expected));
        }
        assert_eq!(code_of("[grid", &[]), ConfigErrorCode::Parse);
    }

    #[test]
    fn non_integer_strip_count_warns() {
        let o = vec![("time.final".to_string(), "1.05".to_string())];
        let c = RunConfig::from_toml_with_overrides(SAMPLE, &o).unwrap();
        assert_eq!(c.validate().unwrap().len(), 1);
    }
}
