//! Experiment grids over `(condition, N, K, alpha, seed)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Condition, GameConfig, RosterEntry};
use crate::engine::run_config_streaming;
use crate::error::{Error, Result};
use crate::runlog::{RunLog, RunStatus};

/// A base config plus the value lists to cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Shared settings. Its condition, N, K, alpha and seed are overridden per cell.
    pub base: GameConfig,
    pub conditions: Vec<Condition>,
    pub n_agents: Vec<usize>,
    /// Window sizes for NL_SW and SCHEMA cells; NL cells always use K = 0.
    pub memory_window: Vec<usize>,
    pub alpha: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Per-condition roster replacing `base.roster`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roster_by_condition: BTreeMap<Condition, Vec<RosterEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One run of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub config: GameConfig,
    pub file_name: String,
}

pub fn cell_file_name(cfg: &GameConfig) -> String {
    format!(
        "{}_{}_{}_{}_{}.jsonl",
        cfg.condition, cfg.n_agents, cfg.memory_window, cfg.lose_shift_alpha, cfg.seed
    )
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// K values used for `condition`.
    fn windows_for(&self, condition: Condition) -> Vec<usize> {
        if condition.uses_memory() {
            let mut ks: Vec<usize> = self
                .memory_window
                .iter()
                .copied()
                .filter(|&k| k >= 1)
                .collect();
            ks.dedup();
            ks
        } else {
            vec![0]
        }
    }

    /// Every `(cell, seed)` config in a fixed order.
    pub fn cells(&self) -> Result<Vec<SweepCell>> {
        if self.seeds.is_empty() {
            return Err(Error::Report("sweep needs at least one seed".into()));
        }
        let mut cells = Vec::new();
        for &condition in &self.conditions {
            for &n in &self.n_agents {
                for k in self.windows_for(condition) {
                    for &alpha in &self.alpha {
                        for &seed in &self.seeds {
                            let mut config = self.base.clone();
                            config.condition = condition;
                            config.n_agents = n;
                            config.memory_window = k;
                            config.lose_shift_alpha = alpha;
                            config.seed = seed;
                            if let Some(roster) = self.roster_by_condition.get(&condition) {
                                config.roster = roster.clone();
                            }
                            cells.push(SweepCell {
                                file_name: cell_file_name(&config),
                                config,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub ran: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
    pub failed: Vec<(PathBuf, String)>,
}

fn is_completed(path: &Path) -> bool {
    path.exists() && RunLog::load(path).is_ok_and(|log| log.status == RunStatus::Completed)
}

fn run_cell(cell: &SweepCell, path: &Path) -> Result<RunLog> {
    let config = cell.config.clone().validate()?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    run_config_streaming(config, std::io::BufWriter::new(file))
}

/// Runs every cell not already completed in `out_dir`, up to `parallelism`
/// at a time. Failures are collected, not fatal.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, parallelism: usize) -> Result<SweepOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cells = spec.cells()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Logic(e.to_string()))?;
    let results: Vec<(PathBuf, Option<std::result::Result<RunLog, String>>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let path = out_dir.join(&cell.file_name);
                if is_completed(&path) {
                    return (path, None);
                }
                let res = run_cell(cell, &path).map_err(|e| e.to_string());
                (path, Some(res))
            })
            .collect()
    });
    let mut outcome = SweepOutcome::default();
    for (path, res) in results {
        match res {
            None => outcome.skipped.push(path),
            Some(Ok(log)) if log.status == RunStatus::Completed => outcome.ran.push(path),
            Some(Ok(log)) => outcome.failed.push((
                path,
                log.abort_reason
                    .unwrap_or_else(|| "run aborted".to_string()),
            )),
            Some(Err(e)) => outcome.failed.push((path, e)),
        }
    }
    Ok(outcome)
}
