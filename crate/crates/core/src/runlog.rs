//! JSON-lines run logs.
//!
//! A log file holds one `header` line with the config, one `round` line per
//! completed round, and a closing `trailer` line. A file without a trailer
//! is read back as an aborted run.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{DecodeOutcome, RawMessage};
use crate::config::{AgreementMetric, GameConfig};
use crate::error::{Error, Result};
use crate::lexicon::{DecodedName, NameId};

pub const FORMAT: &str = "sign-runlog/1";

/// One agent's side of an interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLog {
    pub agent: usize,
    pub message: RawMessage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry: Option<RawMessage>,
    pub outcome: DecodeOutcome,
}

impl TurnLog {
    pub fn decoded(&self) -> DecodedName {
        self.outcome.name
    }
}

/// One paired exchange within a round. `turns[0]` is the first agent of the
/// pair in plan order (the speaker under speaker/hearer adoption).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub pair: [usize; 2],
    pub turns: [TurnLog; 2],
    pub mismatch: bool,
    pub adopted: [bool; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub pairwise: f64,
    pub modal: f64,
}

impl Agreement {
    pub fn get(&self, metric: AgreementMetric) -> f64 {
        match metric {
            AgreementMetric::Pairwise => self.pairwise,
            AgreementMetric::Modal => self.modal,
        }
    }
}

/// Everything that happened in round `round` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEvent {
    pub round: usize,
    pub interactions: Vec<Interaction>,
    pub tokens_this_round: u64,
    pub cumulative_tokens: u64,
    pub agreement_after: Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent_id: usize,
    pub policy: String,
    pub current_name: NameId,
    pub last_emitted: DecodedName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trailer {
    pub status: RunStatus,
    pub rounds_completed: usize,
    pub total_tokens: u64,
    pub final_states: Vec<AgentSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header { format: String, config: GameConfig },
    Round(RoundEvent),
    Trailer(Trailer),
}

/// A complete (or aborted) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: GameConfig,
    pub events: Vec<RoundEvent>,
    pub final_states: Vec<AgentSummary>,
    pub status: RunStatus,
    pub abort_reason: Option<String>,
}

impl RunLog {
    pub fn total_tokens(&self) -> u64 {
        self.events.last().map_or(0, |e| e.cumulative_tokens)
    }

    /// Agreement after the last completed round under the configured metric.
    pub fn final_agreement(&self) -> Option<f64> {
        self.events
            .last()
            .map(|e| e.agreement_after.get(self.config.agreement_metric))
    }

    pub fn trailer(&self) -> Trailer {
        Trailer {
            status: self.status,
            rounds_completed: self.events.len(),
            total_tokens: self.total_tokens(),
            final_states: self.final_states.clone(),
            abort_reason: self.abort_reason.clone(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut writer = RunLogWriter::new(out, &self.config)?;
        for event in &self.events {
            writer.event(event)?;
        }
        writer.finish(&self.trailer())?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 json")
    }

    pub fn read_jsonl<R: BufRead>(input: R, origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::RunLog {
            path: origin.to_path_buf(),
            reason,
        };
        let mut config = None;
        let mut events = Vec::new();
        let mut trailer = None;
        for (number, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = match serde_json::from_str(&line) {
                Ok(parsed) => parsed,
                // a torn final line from an interrupted writer
                Err(_) if trailer.is_none() && config.is_some() => break,
                Err(e) => return Err(bad(format!("line {}: {e}", number + 1))),
            };
            match parsed {
                Line::Header { format, config: c } => {
                    if format != FORMAT {
                        return Err(bad(format!("unsupported format {format:?}")));
                    }
                    config = Some(c);
                }
                Line::Round(event) => events.push(event),
                Line::Trailer(t) => trailer = Some(t),
            }
        }
        let config = config.ok_or_else(|| bad("missing header line".into()))?;
        Ok(match trailer {
            Some(t) => RunLog {
                config,
                events,
                final_states: t.final_states,
                status: t.status,
                abort_reason: t.abort_reason,
            },
            None => RunLog {
                config,
                events,
                final_states: Vec::new(),
                status: RunStatus::Aborted,
                abort_reason: Some("log has no trailer".into()),
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        RunLog::read_jsonl(BufReader::new(file), path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Streams a log line by line so interrupted runs stay readable.
pub struct RunLogWriter<W: Write> {
    out: W,
}

impl<W: Write> RunLogWriter<W> {
    pub fn new(mut out: W, config: &GameConfig) -> std::io::Result<Self> {
        write_line(
            &mut out,
            &Line::Header {
                format: FORMAT.to_string(),
                config: config.clone(),
            },
        )?;
        out.flush()?;
        Ok(RunLogWriter { out })
    }

    pub fn event(&mut self, event: &RoundEvent) -> std::io::Result<()> {
        write_line(&mut self.out, &Line::Round(event.clone()))?;
        self.out.flush()
    }

    pub fn finish(mut self, trailer: &Trailer) -> std::io::Result<W> {
        write_line(&mut self.out, &Line::Trailer(trailer.clone()))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_line<W: Write>(out: &mut W, line: &Line) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, line)?;
    out.write_all(b"\n")
}

/// Opens a streaming writer on a new file at `path`.
pub fn create_log_file(path: &Path, config: &GameConfig) -> Result<RunLogWriter<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    RunLogWriter::new(BufWriter::new(file), config).map_err(|e| Error::io(path, e))
}

/// Every `.jsonl` file directly inside `dir`, sorted by name.
pub fn log_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}
