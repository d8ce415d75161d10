//! Executes one configured run and writes its output files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use memwave::madelung::resolve_velocity;
use memwave::{energy_report, EnergyReport, SimState, SolverError};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
/// Bumped whenever a column is added, removed or reinterpreted.
pub const FORMAT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER: &str = "x,re_psi,im_psi,density,velocity,work_field";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },

    #[error("run aborted after {steps} steps: {source}")]
    Unstable { steps: u64, source: SolverError },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Output { .. } => crate::EXIT_CONFIG,
            RunError::Unstable { .. } => crate::EXIT_UNSTABLE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub last: EnergyReport,
    pub output_dir: PathBuf,
}

/// Shortest decimal text that reads back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn report_row(r: &EnergyReport) -> String {
    let fields: Vec<String> = r.fields().iter().map(|&x| num(x)).collect();
    fields.join(",")
}

fn report_json(r: &EnergyReport) -> serde_json::Value {
    let names = EnergyReport::CSV_HEADER.split(',');
    names.zip(r.fields()).map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect()
}

struct Writer {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Writer {
    fn create(path: PathBuf) -> Result<Self, RunError> {
        match File::create(&path) {
            Ok(f) => Ok(Writer { out: BufWriter::new(f), path }),
            Err(source) => Err(RunError::Output { path, source }),
        }
    }

    fn line(&mut self, text: &str) -> Result<(), RunError> {
        writeln!(self.out, "{text}").map_err(|source| RunError::Output { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<(), RunError> {
        self.out.flush().map_err(|source| RunError::Output { path: self.path, source })
    }
}

fn output_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Output { path: path.to_path_buf(), source }
}

fn write_snapshot(dir: &Path, state: &SimState) -> Result<(), RunError> {
    let grid = state.grid();
    let p = state.params();
    let velocity = resolve_velocity(state.psi(), grid, p.hbar, p.mass, p.density_floor)
        .map_err(|source| RunError::Unstable { steps: state.steps(), source })?
        .velocity;
    let mut w = Writer::create(dir.join(format!("step_{:09}.csv", state.steps())))?;
    w.line(&format!("# memwave snapshot v{FORMAT_VERSION} step={} t={}", state.steps(), num(state.t())))?;
    w.line(SNAPSHOT_HEADER)?;
    for (j, z) in state.psi().iter().enumerate() {
        w.line(&format!(
            "{},{},{},{},{},{}",
            num(grid.x(j)),
            num(z.re),
            num(z.im),
            num(z.norm_sqr()),
            num(velocity[j]),
            num(state.work().values()[j]),
        ))?;
    }
    w.finish()
}

/// Runs `config`, writing `report.csv`, `summary.json` and optional snapshots
/// into its output directory. On a numerical abort every row up to the last
/// valid state is still written, and the summary records the failure.
pub fn execute(config: &RunConfig) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    let grid = config.grid().map_err(|e| invalid("grid", e))?;
    let psi = config.scenario.initial_state(&grid, config.params.hbar).map_err(|e| invalid("scenario", e))?;
    let potential = config.scenario.potential(&grid, config.params.mass).map_err(|e| invalid("scenario", e))?;
    let mut state = SimState::new(grid, psi, potential, config.model, config.params).map_err(|e| invalid("model", e))?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(output_err(dir))?;
    let snapshot_dir = dir.join(SNAPSHOT_DIR);
    if config.snapshot_stride > 0 {
        fs::create_dir_all(&snapshot_dir).map_err(output_err(&snapshot_dir))?;
    }

    let mut report = Writer::create(dir.join(REPORT_FILE))?;
    report.line(&format!("# memwave report v{FORMAT_VERSION}"))?;
    report.line(EnergyReport::CSV_HEADER)?;
    let mut last = energy_report(&state);
    report.line(&report_row(&last))?;
    if config.snapshot_stride > 0 {
        write_snapshot(&snapshot_dir, &state)?;
    }

    let mut failure = None;
    for _ in 0..config.n_steps {
        if let Err(e) = state.step(config.scheme) {
            // the state still holds the last valid step; make sure it is on record
            if last.t != state.t() {
                report.line(&report_row(&energy_report(&state)))?;
            }
            failure = Some(e);
            break;
        }
        let n = state.steps();
        if n % config.report_stride == 0 {
            last = energy_report(&state);
            report.line(&report_row(&last))?;
        }
        if config.snapshot_stride > 0 && n % config.snapshot_stride == 0 {
            write_snapshot(&snapshot_dir, &state)?;
        }
    }
    report.finish()?;

    let final_report = energy_report(&state);
    let summary = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "memwave_version": env!("CARGO_PKG_VERSION"),
        "status": if failure.is_some() { "unstable" } else { "completed" },
        "error": failure.as_ref().map(|e| e.to_string()),
        "steps_completed": state.steps(),
        "final_report": report_json(&final_report),
        "config": config.to_json(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let summary_path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("JSON values always serialize");
    fs::write(&summary_path, text + "\n").map_err(output_err(&summary_path))?;

    match failure {
        Some(source) => Err(RunError::Unstable { steps: state.steps(), source }),
        None => Ok(RunSummary { steps: state.steps(), last: final_report, output_dir: dir.clone() }),
    }
}

fn invalid(key: &str, e: SolverError) -> RunError {
    RunError::Config(ConfigError::Invalid { key: key.into(), line: None, reason: e.to_string() })
}
