mod config;
mod run;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Parser, Subcommand};
use memwave::validation::{run_suite, Bound, Suite};
use rayon::prelude::*;

use crate::config::{load_config, ConfigError, DEFAULTS_HELP};
use crate::run::{execute, RunError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;

const EXIT_HELP: &str = "\
EXIT CODES:
  0  success
  1  validation failure
  2  config or usage error (including unwritable output paths)
  3  numerical instability; the report up to the last valid step is kept";

#[derive(Parser)]
#[command(name = "memwave", version, about = "Memory-integral Schrödinger solver in one dimension")]
#[command(after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation described by a TOML config file.
    #[command(after_help = DEFAULTS_HELP)]
    Run { config: PathBuf },
    /// Run a built-in validation suite and print measured values against tolerances.
    Validate {
        #[arg(value_parser = PossibleValuesParser::new(Suite::ALL.map(Suite::name))
            .map(|s| s.parse::<Suite>().expect("listed names parse")))]
        suite: Suite,
    },
    /// Run every *.toml config in a directory in parallel, one output directory each.
    Sweep { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => run_one(&config),
        Command::Validate { suite } => validate(suite),
        Command::Sweep { dir } => sweep(&dir),
    };
    ExitCode::from(code)
}

fn run_one(path: &Path) -> u8 {
    match load_config(path).map_err(RunError::from).and_then(|c| execute(&c)) {
        Ok(s) => {
            println!("completed {} steps; total = {:e}; output in {}", s.steps, s.last.total, s.output_dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn validate(suite: Suite) -> u8 {
    let checks = match run_suite(suite) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("suite {suite} could not complete: {e}");
            return EXIT_VALIDATION;
        }
    };
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    println!("suite {suite}");
    for c in &checks {
        let op = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("  {verdict}  {:<width$}  {:>12.4e} {op} {:.4e}", c.name, c.measured, c.tolerance);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

fn sweep(dir: &Path) -> u8 {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    };
    files.sort();
    if files.is_empty() {
        eprintln!("error: {}", ConfigError::Sweep(format!("no .toml configs in {}", dir.display())));
        return EXIT_CONFIG;
    }

    let configs: Vec<_> = files.iter().map(|p| load_config(p)).collect();
    let mut owners: HashMap<PathBuf, &Path> = HashMap::new();
    for (path, cfg) in files.iter().zip(&configs) {
        if let Ok(cfg) = cfg {
            if let Some(other) = owners.insert(cfg.output_dir.clone(), path) {
                let msg = format!(
                    "{} and {} write to the same output directory {}",
                    other.display(),
                    path.display(),
                    cfg.output_dir.display()
                );
                eprintln!("error: {}", ConfigError::Sweep(msg));
                return EXIT_CONFIG;
            }
        }
    }

    let results: Vec<Result<_, RunError>> = configs
        .into_par_iter()
        .map(|cfg| cfg.map_err(RunError::from).and_then(|c| execute(&c)))
        .collect();

    let mut code = EXIT_OK;
    for (path, result) in files.iter().zip(&results) {
        match result {
            Ok(s) => println!("{}: completed {} steps -> {}", path.display(), s.steps, s.output_dir.display()),
            Err(e) => {
                println!("{}: {e}", path.display());
                // a config error outranks an instability
                code = match (code, e.exit_code()) {
                    (EXIT_CONFIG, _) | (_, EXIT_CONFIG) => EXIT_CONFIG,
                    (_, c) => c,
                };
            }
        }
    }
    code
}
