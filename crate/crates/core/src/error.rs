use std::path::PathBuf;

use thiserror::Error;

/// A violated configuration invariant. Each variant has a stable kebab-case
/// name and a stable process exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("n-too-small: population needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("lexicon-too-small: lexicon needs at least 2 names, got {0}")]
    LexiconTooSmall(usize),
    #[error("rounds-zero: at least one round is required")]
    ZeroRounds,
    #[error("alpha-out-of-range: lose-shift probability {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("nl-requires-k0: condition NL has no memory, got K={0}")]
    NlRequiresZeroMemory(usize),
    #[error("memory-requires-k1: condition {0} needs a memory window K >= 1")]
    MemoryRequired(&'static str),
    #[error("odd-n-full-matching: full matching needs an even population, got N={0}")]
    OddFullMatching(usize),
    #[error("roster-size-mismatch: roster describes {roster} agents but N={n}")]
    RosterSizeMismatch { roster: usize, n: usize },
    #[error("roster-multiple-fill: at most one roster entry may omit its count")]
    RosterMultipleFill,
    #[error("unknown-endpoint: roster references undefined endpoint {0:?}")]
    UnknownEndpoint(String),
    #[error("mock-params-invalid: {0}")]
    MockParams(String),
    #[error("script-invalid: {0}")]
    Script(String),
    #[error("endpoint-invalid: {0}")]
    Endpoint(String),
}

impl ValidationError {
    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            ValidationError::TooFewAgents(_) => "n-too-small",
            ValidationError::LexiconTooSmall(_) => "lexicon-too-small",
            ValidationError::ZeroRounds => "rounds-zero",
            ValidationError::AlphaOutOfRange(_) => "alpha-out-of-range",
            ValidationError::NlRequiresZeroMemory(_) => "nl-requires-k0",
            ValidationError::MemoryRequired(_) => "memory-requires-k1",
            ValidationError::OddFullMatching(_) => "odd-n-full-matching",
            ValidationError::RosterSizeMismatch { .. } => "roster-size-mismatch",
            ValidationError::RosterMultipleFill => "roster-multiple-fill",
            ValidationError::UnknownEndpoint(_) => "unknown-endpoint",
            ValidationError::MockParams(_) => "mock-params-invalid",
            ValidationError::Script(_) => "script-invalid",
            ValidationError::Endpoint(_) => "endpoint-invalid",
        }
    }

    /// Process exit code used by the `sign` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            ValidationError::TooFewAgents(_) => 20,
            ValidationError::LexiconTooSmall(_) => 21,
            ValidationError::ZeroRounds => 22,
            ValidationError::AlphaOutOfRange(_) => 23,
            ValidationError::NlRequiresZeroMemory(_) => 24,
            ValidationError::MemoryRequired(_) => 25,
            ValidationError::OddFullMatching(_) => 26,
            ValidationError::RosterSizeMismatch { .. } => 27,
            ValidationError::RosterMultipleFill => 28,
            ValidationError::UnknownEndpoint(_) => 29,
            ValidationError::MockParams(_) => 30,
            ValidationError::Script(_) => 31,
            ValidationError::Endpoint(_) => 32,
        }
    }
}

/// Failure reported by an LLM endpoint.
#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("missing api key: environment variable {0} is not set")]
    MissingApiKey(String),
}

/// Failure while producing a message for one agent.
#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("scripted agent has no entry for round {round} (script length {len})")]
    OutOfScript { round: usize, len: usize },
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

/// Prompt template loading problems.
#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template file {path} could not be read: {source}")]
    Missing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template {path} is missing section [{section}]")]
    MissingSection {
        path: PathBuf,
        section: &'static str,
    },
}

/// Top-level error for loading configs, running games and writing reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid run log {path}: {reason}")]
    RunLog { path: PathBuf, reason: String },
    #[error("engine logic error: {0}")]
    Logic(String),
    #[error("no run logs found in {}", .0.display())]
    NoLogs(PathBuf),
    #[error("{0}")]
    Report(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
