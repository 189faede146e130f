//! Agreement measures, tokens-to-convergence and cross-seed aggregation.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{AgreementMetric, Condition};
use crate::error::{Error, Result};
use crate::lexicon::DecodedName;
use crate::runlog::RunLog;

fn name_counts(names: &[DecodedName]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for name in names.iter().flatten() {
        *counts.entry(name.index()).or_insert(0) += 1;
    }
    counts
}

/// Fraction of unordered agent pairs whose names are defined and equal.
/// Agents without a name stay in the denominator.
pub fn pairwise_agreement(names: &[DecodedName]) -> f64 {
    let n = names.len();
    if n < 2 {
        return 0.0;
    }
    let matching: usize = name_counts(names).values().map(|c| c * (c - 1) / 2).sum();
    matching as f64 / (n * (n - 1) / 2) as f64
}

/// Largest share of the population on a single name.
pub fn modal_agreement(names: &[DecodedName]) -> f64 {
    if names.is_empty() {
        return 0.0;
    }
    let top = name_counts(names).values().copied().max().unwrap_or(0);
    top as f64 / names.len() as f64
}

/// Cumulative tokens at the first round whose agreement reaches
/// `threshold`, or `None` if the run never gets there.
pub fn tokens_to_convergence(log: &RunLog, threshold: f64) -> Option<u64> {
    tokens_to_convergence_by(log, threshold, log.config.agreement_metric)
}

pub fn tokens_to_convergence_by(
    log: &RunLog,
    threshold: f64,
    metric: AgreementMetric,
) -> Option<u64> {
    log.events
        .iter()
        .find(|e| e.agreement_after.get(metric) >= threshold)
        .map(|e| e.cumulative_tokens)
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateCell {
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

impl AggregateCell {
    /// `None` for an empty sample. A single value has std 0.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(AggregateCell {
            mean,
            std,
            n_seeds: n,
        })
    }
}

/// Grouping key of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub condition: Condition,
    pub n_agents: usize,
    pub memory_window: usize,
    pub alpha: f64,
}

impl CellKey {
    pub fn of(log: &RunLog) -> Self {
        CellKey {
            condition: log.config.condition,
            n_agents: log.config.n_agents,
            memory_window: log.config.memory_window,
            alpha: log.config.lose_shift_alpha,
        }
    }
}

impl Eq for CellKey {}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.condition, self.n_agents, self.memory_window)
            .cmp(&(other.condition, other.n_agents, other.memory_window))
            .then(self.alpha.total_cmp(&other.alpha))
    }
}

/// Groups logs by grid cell. Only completed runs are included.
pub fn group_by_cell(logs: &[RunLog]) -> BTreeMap<CellKey, Vec<&RunLog>> {
    let mut groups: BTreeMap<CellKey, Vec<&RunLog>> = BTreeMap::new();
    for log in logs
        .iter()
        .filter(|l| l.status == crate::runlog::RunStatus::Completed)
    {
        groups.entry(CellKey::of(log)).or_default().push(log);
    }
    groups
}

fn final_values(logs: &[&RunLog], metric: AgreementMetric) -> Vec<f64> {
    logs.iter()
        .filter_map(|l| l.events.last())
        .map(|e| e.agreement_after.get(metric))
        .collect()
}

/// Final-round agreement per `(condition, N, K, alpha)` cell.
pub fn aggregate_cells(
    logs: &[RunLog],
    metric: AgreementMetric,
) -> BTreeMap<CellKey, AggregateCell> {
    group_by_cell(logs)
        .into_iter()
        .filter_map(|(key, group)| {
            AggregateCell::from_values(&final_values(&group, metric)).map(|c| (key, c))
        })
        .collect()
}

/// One `(N, K)` row of the condition-by-memory table, pooled over alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n_agents: usize,
    pub memory_window: usize,
    /// Indexed like [`Condition::ALL`]; `None` renders as a dash.
    pub cells: [Option<AggregateCell>; 3],
}

pub fn condition_table(logs: &[RunLog], metric: AgreementMetric) -> Vec<TableRow> {
    let mut pooled: BTreeMap<(usize, usize), [Vec<f64>; 3]> = BTreeMap::new();
    for (key, group) in group_by_cell(logs) {
        let slot = Condition::ALL
            .iter()
            .position(|c| *c == key.condition)
            .expect("known condition");
        pooled.entry((key.memory_window, key.n_agents)).or_default()[slot]
            .extend(final_values(&group, metric));
    }
    pooled
        .into_iter()
        .map(|((k, n), values)| TableRow {
            n_agents: n,
            memory_window: k,
            cells: values.map(|v| AggregateCell::from_values(&v)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub round: usize,
    pub mean: f64,
    pub std: f64,
    pub cumulative_tokens: f64,
}

/// Per-round mean and spread of agreement across runs sharing a config.
pub fn agreement_curve(logs: &[&RunLog], metric: AgreementMetric) -> Result<Vec<CurvePoint>> {
    let Some(first) = logs.first() else {
        return Ok(Vec::new());
    };
    let rounds = first.events.len();
    if let Some(bad) = logs
        .iter()
        .find(|l| l.events.len() != rounds || l.config.rounds != first.config.rounds)
    {
        return Err(Error::Report(format!(
            "cannot average runs of different length ({} vs {} rounds)",
            bad.events.len(),
            rounds
        )));
    }
    Ok((0..rounds)
        .map(|r| {
            let values: Vec<f64> = logs
                .iter()
                .map(|l| l.events[r].agreement_after.get(metric))
                .collect();
            let tokens: Vec<f64> = logs
                .iter()
                .map(|l| l.events[r].cumulative_tokens as f64)
                .collect();
            let cell = AggregateCell::from_values(&values).expect("non-empty");
            CurvePoint {
                round: first.events[r].round,
                mean: cell.mean,
                std: cell.std,
                cumulative_tokens: AggregateCell::from_values(&tokens).expect("non-empty").mean,
            }
        })
        .collect())
}

/// Tokens-to-convergence summary for one condition and threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokensRow {
    pub condition: Condition,
    pub threshold: f64,
    /// Mean over the runs that reached the threshold.
    pub mean_tokens: Option<f64>,
    pub n_reached: usize,
    pub n_runs: usize,
}

pub fn tokens_table(
    logs: &[RunLog],
    thresholds: &[f64],
    metric: AgreementMetric,
) -> Vec<TokensRow> {
    let mut by_condition: BTreeMap<Condition, Vec<&RunLog>> = BTreeMap::new();
    for log in logs
        .iter()
        .filter(|l| l.status == crate::runlog::RunStatus::Completed)
    {
        by_condition
            .entry(log.config.condition)
            .or_default()
            .push(log);
    }
    let mut rows = Vec::new();
    for (condition, group) in by_condition {
        for &threshold in thresholds {
            let reached: Vec<f64> = group
                .iter()
                .filter_map(|l| tokens_to_convergence_by(l, threshold, metric))
                .map(|t| t as f64)
                .collect();
            rows.push(TokensRow {
                condition,
                threshold,
                mean_tokens: AggregateCell::from_values(&reached).map(|c| c.mean),
                n_reached: reached.len(),
                n_runs: group.len(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GameConfig;
    use crate::lexicon::NameId;
    use crate::runlog::{Agreement, RoundEvent, RunStatus};

    fn names(ks: &[Option<u32>]) -> Vec<DecodedName> {
        ks.iter().map(|k| k.and_then(NameId::new)).collect()
    }

    /// O(n^2) pair enumeration.
    fn brute_pairwise(names: &[DecodedName]) -> f64 {
        let n = names.len();
        let mut hits = 0;
        let mut pairs = 0;
        for i in 0..n {
            for j in i + 1..n {
                pairs += 1;
                if names[i].is_some() && names[i] == names[j] {
                    hits += 1;
                }
            }
        }
        hits as f64 / pairs as f64
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_agreement(&names(&[Some(1); 12])), 1.0);
        let distinct: Vec<_> = (1..=12).map(Some).collect();
        assert_eq!(pairwise_agreement(&names(&distinct)), 0.0);
        let four = names(&[Some(1), Some(1), Some(1), Some(2)]);
        assert_eq!(pairwise_agreement(&four), 0.5);
        assert_eq!(brute_pairwise(&four), 0.5);
        assert_eq!(pairwise_agreement(&names(&[None, None, Some(1)])), 0.0);
    }

    #[test]
    fn modal_examples() {
        let mut seven: Vec<Option<u32>> = vec![Some(1); 7];
        seven.extend((2..=6).map(Some));
        assert!((modal_agreement(&names(&seven)) - 7.0 / 12.0).abs() < 1e-12);
        assert_eq!(modal_agreement(&names(&[None; 12])), 0.0);
        assert_eq!(
            modal_agreement(&names(&[Some(1), Some(1), Some(2), Some(2)])),
            0.5
        );
    }

    fn synthetic_log(agreement: &[f64], tokens: &[u64]) -> RunLog {
        let mut cfg = GameConfig::new(Condition::Schema, 12, 5, 0.75, 0);
        cfg.rounds = agreement.len();
        RunLog {
            config: cfg,
            events: agreement
                .iter()
                .zip(tokens)
                .enumerate()
                .map(|(r, (&a, &t))| RoundEvent {
                    round: r + 1,
                    interactions: vec![],
                    tokens_this_round: 0,
                    cumulative_tokens: t,
                    agreement_after: Agreement {
                        pairwise: a,
                        modal: a,
                    },
                })
                .collect(),
            final_states: vec![],
            status: RunStatus::Completed,
            abort_reason: None,
        }
    }

    #[test]
    fn first_crossing_counts() {
        let log = synthetic_log(&[0.2, 0.6, 0.4], &[100, 250, 300]);
        assert_eq!(tokens_to_convergence(&log, 0.5), Some(250));
        assert_eq!(tokens_to_convergence(&log, 0.7), None);
        let log = synthetic_log(&[1.0, 1.0], &[6, 12]);
        assert_eq!(tokens_to_convergence(&log, 1.0), Some(6));
    }

    #[test]
    fn aggregate_examples() {
        let c = AggregateCell::from_values(&[0.5, 0.6, 0.7]).unwrap();
        assert!((c.mean - 0.6).abs() < 1e-12);
        assert!((c.std - 0.1).abs() < 1e-12);
        assert_eq!(c.n_seeds, 3);
        let c = AggregateCell::from_values(&[0.42]).unwrap();
        assert_eq!((c.mean, c.std, c.n_seeds), (0.42, 0.0, 1));
        assert_eq!(AggregateCell::from_values(&[]), None);
        let c = AggregateCell::from_values(&[0.3; 5]).unwrap();
        assert_eq!((c.mean, c.std), (0.3, 0.0));
    }

    #[test]
    fn table_has_dashes_for_missing_conditions() {
        let mut schema = synthetic_log(&[0.6], &[10]);
        schema.config.n_agents = 12;
        schema.config.memory_window = 10;
        let mut nl = synthetic_log(&[0.1], &[10]);
        nl.config.condition = Condition::Nl;
        nl.config.memory_window = 0;
        let rows = condition_table(&[schema, nl], AgreementMetric::Pairwise);
        assert_eq!(rows.len(), 2);
        let k0 = rows.iter().find(|r| r.memory_window == 0).unwrap();
        assert!(k0.cells[0].is_some() && k0.cells[2].is_none());
        let k10 = rows.iter().find(|r| r.memory_window == 10).unwrap();
        assert!(k10.cells[2].is_some() && k10.cells[0].is_none());
    }

    #[test]
    fn curves_require_equal_length() {
        let a = synthetic_log(&[0.2, 0.4], &[1, 2]);
        let b = synthetic_log(&[0.2], &[1]);
        assert!(agreement_curve(&[&a, &b], AgreementMetric::Pairwise).is_err());
        let curve = agreement_curve(&[&a, &a], AgreementMetric::Pairwise).unwrap();
        assert_eq!(curve.len(), 2);
        assert!(curve.iter().all(|p| p.std == 0.0));
    }

    #[test]
    fn tokens_rows_mark_unreached() {
        let reached = synthetic_log(&[0.2, 0.8], &[5, 9]);
        let never = synthetic_log(&[0.2, 0.3], &[5, 9]);
        let rows = tokens_table(&[reached, never], &[0.5, 0.9], AgreementMetric::Pairwise);
        assert_eq!(rows[0].mean_tokens, Some(9.0));
        assert_eq!((rows[0].n_reached, rows[0].n_runs), (1, 2));
        assert_eq!(rows[1].mean_tokens, None);
    }

    proptest::proptest! {
        #[test]
        fn pairwise_matches_brute_force(ks in proptest::collection::vec(proptest::option::of(1u32..=6), 2..30)) {
            let ns = names(&ks);
            let fast = pairwise_agreement(&ns);
            proptest::prop_assert!((fast - brute_pairwise(&ns)).abs() < 1e-12);
            let modal = modal_agreement(&ns);
            proptest::prop_assert!((0.0..=1.0).contains(&fast) && (0.0..=1.0).contains(&modal));
            proptest::prop_assert_eq!(fast == 1.0, modal == 1.0);
        }
    }
}
