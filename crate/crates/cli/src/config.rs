//! Run configuration: a flat TOML document, validated into a [`RunConfig`].

use std::path::{Path, PathBuf};

use memwave::{CubeConvention, DissipationModel, Grid, ModelKind, Scenario, Scheme, SimParams};
use serde::Deserialize;
use thiserror::Error;

/// Every key a config file may contain, in the order `--help` lists them.
pub const KEYS: [&str; 17] = [
    "scenario",
    "model",
    "kappa",
    "cube_convention",
    "scheme",
    "n_points",
    "x_min",
    "x_max",
    "dt",
    "n_steps",
    "report_stride",
    "snapshot_stride",
    "output_dir",
    "hbar",
    "mass",
    "density_floor",
    "picard_iterations",
];

pub const DEFAULTS_HELP: &str = "\
CONFIG KEYS (flat TOML; unknown keys are rejected):
  scenario           required; one of free-gaussian, boosted-gaussian,
                     coherent-state, damped-harmonic, linear-ramp
  model              none | radiative | linear_drag | quadratic_drag | accel_drag  [none]
  kappa              coupling, must be >= 0; must be 0 when model = none  [0]
  cube_convention    literal | speed_weighted (quadratic_drag only)  [literal]
  scheme             strang | cn  [strang]
  n_points           grid points  [512]
  x_min, x_max       periodic domain  [-20, 20]
  dt                 time step  [1e-3]
  n_steps            steps to take  [scenario duration / dt]
  report_stride      steps between report rows, >= 1  [1]
  snapshot_stride    steps between field snapshots, 0 = off  [0]
  output_dir         relative to the config file  [<config stem>-out]
  hbar, mass         [1, 1]
  density_floor      relative density below which the velocity is masked  [1e-12]
  picard_iterations  extra self-consistent W passes per step  [0]

Scenario durations at hbar = m = 1: free-gaussian 4, boosted-gaussian 2,
coherent-state one period, damped-harmonic three periods, linear-ramp 2.";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("config parse error: {0}")]
    Syntax(String),

    #[error("unknown key `{key}`{}; did you mean `{suggestion}`?", at_line(*line))]
    UnknownKey { key: String, line: Option<usize>, suggestion: &'static str },

    #[error("invalid value for `{key}`{}: {reason}", at_line(*line))]
    Invalid { key: String, line: Option<usize>, reason: String },

    #[error("sweep: {0}")]
    Sweep(String),
}

fn at_line(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    model: Option<String>,
    kappa: Option<f64>,
    cube_convention: Option<String>,
    scheme: Option<String>,
    n_points: Option<usize>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    dt: Option<f64>,
    n_steps: Option<u64>,
    report_stride: Option<u64>,
    snapshot_stride: Option<u64>,
    output_dir: Option<PathBuf>,
    hbar: Option<f64>,
    mass: Option<f64>,
    density_floor: Option<f64>,
    picard_iterations: Option<u32>,
}

/// A validated run: every default filled in, every value in range.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub model: DissipationModel,
    pub scheme: Scheme,
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_steps: u64,
    pub report_stride: u64,
    pub snapshot_stride: u64,
    pub output_dir: PathBuf,
    pub params: SimParams,
}

impl RunConfig {
    pub fn grid(&self) -> memwave::Result<Grid> {
        Grid::new(self.n_points, self.x_min, self.x_max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": self.scenario.name,
            "model": self.model.kind().name(),
            "kappa": self.model.kappa(),
            "cube_convention": self.model.cube_convention().name(),
            "scheme": self.scheme.name(),
            "n_points": self.n_points,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "dt": self.params.dt,
            "n_steps": self.n_steps,
            "report_stride": self.report_stride,
            "snapshot_stride": self.snapshot_stride,
            "output_dir": self.output_dir.display().to_string(),
            "hbar": self.params.hbar,
            "mass": self.params.mass,
            "density_floor": self.params.density_floor,
            "picard_iterations": self.params.picard_iterations,
        })
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    parse_config(&text, base, stem)
}

/// Parses `text`. Relative output directories resolve against `base_dir`;
/// the default output directory is `<stem>-out` there.
pub fn parse_config(text: &str, base_dir: &Path, stem: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey {
            key: key.clone(),
            line: line_of(text, key),
            suggestion: nearest(key, &KEYS),
        });
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let invalid = |key: &str, reason: String| ConfigError::Invalid {
        key: key.to_string(),
        line: line_of(text, key),
        reason,
    };

    let hbar = raw.hbar.unwrap_or(1.0);
    let mass = raw.mass.unwrap_or(1.0);
    for (key, value) in [("hbar", hbar), ("mass", mass)] {
        positive(key, value).map_err(|r| invalid(key, r))?;
    }
    let scenario = Scenario::named(&raw.scenario, hbar, mass).ok_or_else(|| {
        invalid(
            "scenario",
            format!(
                "unknown scenario `{}`; did you mean `{}`? (expected one of: {})",
                raw.scenario,
                nearest(&raw.scenario, &Scenario::NAMES),
                Scenario::NAMES.join(", ")
            ),
        )
    })?;

    let kind: ModelKind = raw.model.as_deref().unwrap_or("none").parse().map_err(|r| invalid("model", r))?;
    let kappa = raw.kappa.unwrap_or(0.0);
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(invalid("kappa", format!("must satisfy kappa >= 0, got {kappa}")));
    }
    if kind == ModelKind::None && kappa != 0.0 {
        return Err(invalid("kappa", format!("model `none` requires kappa = 0, got {kappa}")));
    }
    let cube: CubeConvention = raw
        .cube_convention
        .as_deref()
        .unwrap_or("literal")
        .parse()
        .map_err(|r| invalid("cube_convention", r))?;
    let model = DissipationModel::new(kind, kappa)
        .map_err(|e| invalid("kappa", e.to_string()))?
        .with_cube_convention(cube);
    let scheme: Scheme = raw.scheme.as_deref().unwrap_or("strang").parse().map_err(|r| invalid("scheme", r))?;

    let dt = raw.dt.unwrap_or(scenario.dt);
    positive("dt", dt).map_err(|r| invalid("dt", r))?;
    let density_floor = raw.density_floor.unwrap_or(memwave::madelung::DEFAULT_DENSITY_FLOOR);
    positive("density_floor", density_floor).map_err(|r| invalid("density_floor", r))?;

    let n_points = raw.n_points.unwrap_or(scenario.n_points);
    let x_min = raw.x_min.unwrap_or(scenario.x_min);
    let x_max = raw.x_max.unwrap_or(scenario.x_max);
    Grid::new(n_points, x_min, x_max).map_err(|e| {
        let key = if n_points < memwave::grid::MIN_POINTS { "n_points" } else { "x_max" };
        invalid(key, e.to_string())
    })?;

    let duration = scenario.n_steps as f64 * scenario.dt;
    let n_steps = raw.n_steps.unwrap_or_else(|| (duration / dt).round().max(1.0) as u64);
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be >= 1".into()));
    }
    let report_stride = raw.report_stride.unwrap_or(1);
    if report_stride == 0 {
        return Err(invalid("report_stride", "must be >= 1".into()));
    }

    let output_dir = match raw.output_dir {
        Some(p) if p.as_os_str().is_empty() => {
            return Err(invalid("output_dir", "must not be empty".into()));
        }
        Some(p) => base_dir.join(p),
        None => base_dir.join(format!("{stem}-out")),
    };

    Ok(RunConfig {
        scenario,
        model,
        scheme,
        n_points,
        x_min,
        x_max,
        n_steps,
        report_stride,
        snapshot_stride: raw.snapshot_stride.unwrap_or(0),
        output_dir,
        params: SimParams {
            hbar,
            mass,
            dt,
            density_floor,
            picard_iterations: raw.picard_iterations.unwrap_or(0),
        },
    })
}

fn positive(key: &str, value: f64) -> Result<(), String> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(format!("{key} must be > 0, got {value}"))
    }
}

fn nearest(word: &str, candidates: &[&'static str]) -> &'static str {
    candidates
        .iter()
        .copied()
        .min_by_key(|c| strsim::damerau_levenshtein(word, c))
        .expect("candidate list is never empty")
}

/// 1-based line on which `key` is assigned, if it can be found.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let line = line.trim_start();
        line.strip_prefix(key)
            .or_else(|| line.strip_prefix(&format!("\"{key}\"")))
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("/tmp/cfg"), "case")
    }

    #[test]
    fn minimal_config_takes_scenario_defaults() {
        let c = parse("scenario = \"damped-harmonic\"\nmodel = \"linear_drag\"\nkappa = 0.1\n").unwrap();
        assert_eq!(c.n_points, 512);
        assert_eq!((c.x_min, c.x_max), (-20.0, 20.0));
        assert_eq!(c.params.dt, 1e-3);
        assert_eq!(c.n_steps, c.scenario.n_steps);
        assert_eq!(c.report_stride, 1);
        assert_eq!(c.snapshot_stride, 0);
        assert_eq!(c.scheme, Scheme::Strang);
        assert_eq!(c.model.cube_convention(), CubeConvention::Literal);
        assert_eq!(c.output_dir, Path::new("/tmp/cfg/case-out"));
    }

    #[test]
    fn changing_dt_keeps_the_scenario_duration() {
        let c = parse("scenario = \"free-gaussian\"\ndt = 2e-3\n").unwrap();
        assert_eq!(c.n_steps, 2000);
    }

    #[test]
    fn misspelled_key_names_the_nearest_one() {
        let e = parse("scenario = \"free-gaussian\"\nkapa = 0.1\n").unwrap_err();
        assert!(matches!(&e, ConfigError::UnknownKey { suggestion: "kappa", line: Some(2), .. }), "{e}");
        assert!(e.to_string().contains("`kappa`"));
    }

    #[test]
    fn negative_kappa_names_the_constraint() {
        let e = parse("scenario = \"free-gaussian\"\nmodel = \"radiative\"\nkappa = -1\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("`kappa`") && msg.contains("kappa >= 0") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let e = parse("scenario = \"free-gaussian\"\ndt = = 1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax(_)));
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn wrong_types_and_ranges_are_rejected() {
        assert!(parse("scenario = \"free-gaussian\"\ndt = \"fast\"\n").is_err());
        assert!(parse("scenario = \"free-gaussian\"\nreport_stride = 0\n").is_err());
        assert!(parse("scenario = \"free-gaussian\"\nkappa = 0.5\n").is_err());
        assert!(parse("scenario = \"free-gaussian\"\nn_points = 4\n").is_err());
        assert!(parse("scenario = \"free-gaussian\"\nx_min = 3.0\nx_max = 1.0\n").is_err());
        assert!(parse("model = \"none\"\n").is_err());
        let e = parse("scenario = \"coherent-stat\"\n").unwrap_err();
        assert!(e.to_string().contains("coherent-state"), "{e}");
    }

    #[test]
    fn every_key_is_documented() {
        for key in KEYS {
            assert!(DEFAULTS_HELP.contains(key), "{key}");
        }
    }
}
