//! Commands behind the `sign` binary, with their exit codes.
//!
//! | code  | meaning                                      |
//! |-------|----------------------------------------------|
//! | 0     | success                                      |
//! | 2     | bad command-line usage                       |
//! | 3     | file i/o failure                             |
//! | 4     | config or sweep file is not valid JSON       |
//! | 5     | run aborted (partial log kept)               |
//! | 6     | sweep finished with failed cells             |
//! | 7     | report found no usable logs                  |
//! | 8     | prompt template missing or malformed         |
//! | 9     | run log unreadable                           |
//! | 10    | internal error                               |
//! | 11    | inconsistent report or sweep input           |
//! | 20-32 | config validation, see `ValidationError`     |

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::{AgreementMetric, GameConfig};
use crate::engine::run_config_streaming;
use crate::error::Error;
use crate::report::{self, ReportKind};
use crate::runlog::{RunLog, RunStatus};
use crate::sweep::{run_sweep, SweepOutcome, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_ABORTED: i32 = 5;
pub const EXIT_SWEEP_FAILURES: i32 = 6;
pub const EXIT_NO_LOGS: i32 = 7;
pub const EXIT_TEMPLATE: i32 = 8;
pub const EXIT_RUNLOG: i32 = 9;
pub const EXIT_INTERNAL: i32 = 10;
pub const EXIT_BAD_INPUT: i32 = 11;

/// Errors surfaced by commands.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("run aborted: {reason} (partial log at {})", log.display())]
    Aborted { log: PathBuf, reason: String },
    #[error("{} sweep cell(s) failed", .0.failed.len())]
    SweepFailures(SweepOutcome),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Aborted { .. } => EXIT_ABORTED,
            CommandError::SweepFailures(_) => EXIT_SWEEP_FAILURES,
            CommandError::Core(e) => match e {
                Error::Validation(v) => v.exit_code(),
                Error::Template(_) => EXIT_TEMPLATE,
                Error::Io { .. } => EXIT_IO,
                Error::Parse { .. } => EXIT_PARSE,
                Error::RunLog { .. } => EXIT_RUNLOG,
                Error::NoLogs(_) => EXIT_NO_LOGS,
                Error::Report(_) => EXIT_BAD_INPUT,
                Error::Logic(_) | Error::Csv(_) => EXIT_INTERNAL,
            },
        }
    }
}

/// `<config stem>.jsonl` in the current directory.
pub fn default_log_path(config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from(format!("{stem}.jsonl"))
}

/// Runs one config and writes its log. Returns the log path and the run.
pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<(PathBuf, RunLog), CommandError> {
    let cfg = GameConfig::load(config_path)?;
    let path = out.map_or_else(|| default_log_path(config_path), Path::to_path_buf);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let log = run_config_streaming(cfg, BufWriter::new(file))?;
    if log.status == RunStatus::Aborted {
        return Err(CommandError::Aborted {
            log: path,
            reason: log.abort_reason.unwrap_or_default(),
        });
    }
    Ok((path, log))
}

/// Runs a sweep into `out` (or the sweep spec's `output_dir`, or `runs/<stem>`).
pub fn cmd_sweep(
    spec_path: &Path,
    parallelism: usize,
    out: Option<&Path>,
) -> Result<(PathBuf, SweepOutcome), CommandError> {
    let spec = SweepSpec::load(spec_path)?;
    let dir = match (out, &spec.output_dir) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => dir.clone(),
        (None, None) => {
            let stem = spec_path
                .file_stem()
                .map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
            Path::new("runs").join(stem)
        }
    };
    let outcome = run_sweep(&spec, &dir, parallelism)?;
    if outcome.failed.is_empty() {
        Ok((dir, outcome))
    } else {
        Err(CommandError::SweepFailures(outcome))
    }
}

/// Writes the CSVs for one report kind.
pub fn cmd_report(
    log_dir: &Path,
    kind: ReportKind,
    thresholds: &[f64],
    metric: Option<AgreementMetric>,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, CommandError> {
    let out_dir = out.unwrap_or(log_dir);
    Ok(report::generate(
        log_dir, kind, thresholds, metric, out_dir,
    )?)
}
