//! Command-line experiment runner for `dec-green`.
//!
//! `dec-green <experiment> [--config FILE] [--seed N] [--out-dir DIR] [--refinements N]`
//! writes CSV reports, log-log SVG plots for the decay experiment and a run
//! manifest. Exit status: 0 when every check passes, 2 when a check fails,
//! 1 on usage or configuration errors.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser};

pub use config::Config;
pub use error::{CliError, CliResult};
pub use experiments::Experiment;
pub use manifest::RunManifest;
pub use report::{Check, LogLogPlot, Outcome, Table};

pub const OUT_DIR_ENV: &str = "DEC_GREEN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dec-green", version, about = "Run a dec-green experiment")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub experiment: Experiment,

    /// TOML config; defaults apply to every missing key.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides `run.out_dir`.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    /// Overrides `run.refinements`.
    #[arg(long)]
    pub refinements: Option<usize>,
}

impl Args {
    /// Loads the config and applies command-line overrides.
    pub fn resolve(&self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.run.out_dir = Some(d.clone());
        }
        if let Some(r) = self.refinements {
            cfg.run.refinements = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs an experiment and writes its artifacts into `out_dir`. Usage and
/// configuration errors are returned; numerical failures are folded into the
/// outcome as failed checks.
pub fn execute(experiment: Experiment, cfg: &Config, out_dir: &Path) -> CliResult<(Outcome, RunManifest)> {
    let outcome = match experiment.run(cfg) {
        Ok(o) => o,
        Err(e) if e.is_usage() => return Err(e),
        Err(CliError::Core(e)) => {
            let mut o = Outcome::default();
            o.check("run", false, format!("{}: {e}", error::error_kind(&e)));
            o
        }
        Err(e) => return Err(e),
    };
    std::fs::create_dir_all(out_dir).map_err(error::io_err(out_dir))?;
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        outputs.push(report::write_csv(out_dir, t)?);
    }
    for p in &outcome.plots {
        match report::write_svg(out_dir, p) {
            Ok(path) => outputs.push(path),
            // an empty plot is not worth failing the run over
            Err(CliError::EmptyReport(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for (name, text) in &outcome.files {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(error::io_err(&path))?;
        outputs.push(path);
    }
    let manifest = RunManifest::new(experiment.name(), cfg, &outputs, outcome.passed());
    manifest.write(out_dir)?;
    Ok((outcome, manifest))
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    if !text.contains("Usage:") {
                        let _ = writeln!(stderr, "\n{}", Args::command().render_usage());
                    }
                    1
                }
            };
        }
    };
    let result = args.resolve().and_then(|cfg| {
        let dir = cfg.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        execute(args.experiment, &cfg, &dir).map(|r| (r, dir))
    });
    match result {
        Ok(((outcome, _), dir)) => {
            for c in &outcome.checks {
                let _ = writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let _ = writeln!(stdout, "artifacts in {}", dir.display());
            if outcome.passed() {
                0
            } else {
                let _ = writeln!(stderr, "{} failed {} check(s):", args.experiment.name(), outcome.failures().len());
                for c in outcome.failures() {
                    let _ = writeln!(stderr, "  {}: {}", c.name, c.detail);
                }
                2
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}
