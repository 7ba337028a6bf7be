//! Paired SIGHT/RC experiments and their per-find aggregation.
//!
//! Each pair shares the initial sample (and its test result) through the
//! `Init` stream of a [`StreamKey`] `(seed, a0, pair)`; everything afterwards
//! runs on algorithm-specific streams. Pairs are independent, so a cell can be
//! executed on a rayon pool when the `parallel` feature is on. Output order is
//! always by pair id.

pub mod stats;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{rc_max_positive, rc_max_tests, sight_max_tests};
use crate::error::{Error, Result};
use crate::oracle::{KSet, Oracle, PlantedFamily, TestLedger};
use crate::rc::{run_rc, RcConfig, DEFAULT_T_MAX};
use crate::rng::{RunStreams, StreamKey};
use crate::run::{Algorithm, Outcome, RunRecord, RunResult};
use crate::sight::{run_sight, SightConfig};
use stats::{mann_whitney_u, median, MannWhitney};

/// Cost ratios reported in the summary table.
pub const STANDARD_RATIOS: [f64; 4] = [1.0, 10.0, 50.0, 100.0];

pub const DEFAULT_A0_GRID: [usize; 6] = [16, 48, 80, 112, 144, 176];

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub a0_grid: Vec<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub t_max: usize,
    pub false_negative_rate: f64,
    pub runs: usize,
    pub seed: u64,
    pub cost_ratios: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            a0_grid: DEFAULT_A0_GRID.to_vec(),
            k_min: 2,
            k_max: 4,
            t_max: DEFAULT_T_MAX,
            false_negative_rate: 0.0,
            runs: 1000,
            seed: 0,
            cost_ratios: STANDARD_RATIOS.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn sight_config(&self, a0: usize) -> SightConfig {
        SightConfig::new(a0, self.k_min, self.k_max)
    }

    pub fn rc_config(&self, a0: usize) -> RcConfig {
        RcConfig::new(a0, self.k_min, self.k_max).with_t_max(self.t_max)
    }

    pub fn validate(&self, universe: usize) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs per cell must be at least 1".into()));
        }
        if self.a0_grid.is_empty() {
            return Err(Error::InvalidConfig("empty a0 grid".into()));
        }
        if !self.cost_ratios.iter().all(|&r| is_valid_ratio(r)) {
            return Err(Error::InvalidConfig("cost ratios must be positive".into()));
        }
        for &a0 in &self.a0_grid {
            self.sight_config(a0).validate(universe)?;
            self.rc_config(a0).validate(universe)?;
        }
        crate::oracle::OracleConfig {
            false_negative_rate: self.false_negative_rate,
            ..Default::default()
        }
        .validate()
    }
}

/// Cost ratios must be positive and finite.
pub fn is_valid_ratio(rho: f64) -> bool {
    rho > 0.0 && rho.is_finite()
}

/// How a cell's pairs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's current pool; sequential when built without `parallel`.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairResult {
    pub pair: u64,
    pub sight: RunResult,
    pub rc: RunResult,
}

impl PairResult {
    pub fn get(&self, algorithm: Algorithm) -> &RunResult {
        match algorithm {
            Algorithm::Sight => &self.sight,
            Algorithm::Rc => &self.rc,
        }
    }
}

fn run_pair(family: &PlantedFamily, oracle: &Oracle<'_>, config: &ExperimentConfig, a0: usize, pair: u64) -> Result<PairResult> {
    let key = StreamKey::new(config.seed, a0, pair);
    let universe = family.universe_size();
    let sight = run_sight(universe, &config.sight_config(a0), oracle, &mut RunStreams::sight(&key))?;
    let rc = run_rc(universe, &config.rc_config(a0), oracle, &mut RunStreams::rc(&key))?;
    let result = PairResult { pair, sight, rc };
    check_bounds(&result, config)?;
    Ok(result)
}

/// Worst-case test-count checks on one pair.
pub fn check_bounds(pair: &PairResult, config: &ExperimentConfig) -> Result<()> {
    let a0 = pair.sight.a0;
    let sight_cap = sight_max_tests(a0, config.k_min, config.k_max)?;
    if u128::from(pair.sight.ledger.total()) > sight_cap {
        return Err(Error::BoundViolation(format!(
            "SIGHT pair {} used {} tests > {sight_cap}",
            pair.pair,
            pair.sight.ledger.total()
        )));
    }
    let schedule = config.rc_config(a0).schedule()?;
    let rc_cap = rc_max_tests(&schedule, config.t_max, config.k_min, config.k_max);
    let rc_pos_cap = rc_max_positive(schedule.len());
    if u128::from(pair.rc.ledger.total()) > rc_cap || u128::from(pair.rc.ledger.positives) > rc_pos_cap {
        return Err(Error::BoundViolation(format!(
            "RC pair {} used {:?} (caps {rc_cap} total, {rc_pos_cap} positive)",
            pair.pair, pair.rc.ledger
        )));
    }
    Ok(())
}

/// Runs pairs `0..config.runs` for one initial size.
pub fn run_paired_cell(family: &PlantedFamily, config: &ExperimentConfig, a0: usize, execution: Execution) -> Result<Vec<PairResult>> {
    config.validate(family.universe_size())?;
    let oracle = Oracle::new(family, config.false_negative_rate)?;
    let runs = config.runs as u64;
    match execution {
        Execution::Sequential => (0..runs).map(|j| run_pair(family, &oracle, config, a0, j)).collect(),
        Execution::Parallel => run_parallel(family, &oracle, config, a0, runs),
    }
}

#[cfg(feature = "parallel")]
fn run_parallel(family: &PlantedFamily, oracle: &Oracle<'_>, config: &ExperimentConfig, a0: usize, runs: u64) -> Result<Vec<PairResult>> {
    use rayon::prelude::*;
    (0..runs)
        .into_par_iter()
        .map(|j| run_pair(family, oracle, config, a0, j))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(family: &PlantedFamily, oracle: &Oracle<'_>, config: &ExperimentConfig, a0: usize, runs: u64) -> Result<Vec<PairResult>> {
    (0..runs).map(|j| run_pair(family, oracle, config, a0, j)).collect()
}

/// A successful run carrying the costs of the aborted runs before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FindRecord {
    pub algorithm: Algorithm,
    pub found: KSet,
    pub own: TestLedger,
    pub amortized: TestLedger,
    pub pair: u64,
}

impl FindRecord {
    pub fn k(&self) -> usize {
        self.found.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Amortized {
    pub finds: Vec<FindRecord>,
    /// Costs of aborts after the last find.
    pub residue: TestLedger,
}

/// Attributes each aborted run's costs to the next find in sequence.
/// `runs` yields `(pair id, result)` in run order.
pub fn amortize<'a>(runs: impl IntoIterator<Item = (u64, &'a RunResult)>) -> Amortized {
    let mut out = Amortized::default();
    let mut pending = TestLedger::default();
    for (pair, run) in runs {
        match &run.outcome {
            Outcome::Found(set) => {
                let mut amortized = pending;
                amortized.add(&run.ledger);
                out.finds.push(FindRecord {
                    algorithm: run.algorithm,
                    found: set.clone(),
                    own: run.ledger,
                    amortized,
                    pair,
                });
                pending = TestLedger::default();
            }
            _ => pending.add(&run.ledger),
        }
    }
    out.residue = pending;
    out
}

/// `positives·rho + negatives`.
pub fn cost_at_ratio(positives: f64, negatives: f64, rho: f64) -> f64 {
    positives * rho + negatives
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub a0: usize,
    pub runs: usize,
    pub finds: usize,
    pub initial_failures: usize,
    pub mid_aborts: usize,
    pub init_fail_rate: f64,
    /// Aborts among runs whose initial set tested defective; `None` when
    /// every run failed initially.
    pub abort_rate: Option<f64>,
    pub k_proportions: BTreeMap<usize, f64>,
    pub prop_identical: Option<f64>,
    pub median_positives: Option<f64>,
    pub median_negatives: Option<f64>,
    pub median_total: Option<f64>,
    /// `(rho, expected cost per find)` from the median counts.
    pub expected_cost: Vec<(f64, f64)>,
    pub residue: TestLedger,
    pub amortized_positives: Vec<u64>,
    pub amortized_negatives: Vec<u64>,
    pub amortized_totals: Vec<u64>,
    pub total_ledger: TestLedger,
}

impl CellSummary {
    pub fn cost_at(&self, rho: f64) -> Option<f64> {
        Some(cost_at_ratio(self.median_positives?, self.median_negatives?, rho))
    }

    pub fn proportion(&self, k: usize) -> Option<f64> {
        if self.finds == 0 {
            None
        } else {
            Some(self.k_proportions.get(&k).copied().unwrap_or(0.0))
        }
    }
}

/// Fraction of pairs where both algorithms found the same set, among pairs
/// where both found something.
pub fn proportion_identical(pairs: &[PairResult]) -> Option<f64> {
    let (mut both, mut same) = (0usize, 0usize);
    for p in pairs {
        if let (Some(a), Some(b)) = (p.sight.outcome.found(), p.rc.outcome.found()) {
            both += 1;
            same += usize::from(a == b);
        }
    }
    (both > 0).then(|| same as f64 / both as f64)
}

pub fn summarize_cell(pairs: &[PairResult], algorithm: Algorithm, cost_ratios: &[f64]) -> Result<CellSummary> {
    let first = pairs.first().ok_or(Error::EmptyCell)?;
    let runs = pairs.len();
    let amortized = amortize(pairs.iter().map(|p| (p.pair, p.get(algorithm))));
    let initial_failures = pairs.iter().filter(|p| p.get(algorithm).outcome.is_initial_abort()).count();
    let finds = amortized.finds.len();
    let mid_aborts = runs - initial_failures - finds;

    let mut k_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &amortized.finds {
        *k_counts.entry(f.k()).or_insert(0) += 1;
    }
    let k_proportions = k_counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / finds as f64))
        .collect();

    let amortized_positives: Vec<u64> = amortized.finds.iter().map(|f| f.amortized.positives).collect();
    let amortized_negatives: Vec<u64> = amortized.finds.iter().map(|f| f.amortized.negatives).collect();
    let amortized_totals: Vec<u64> = amortized.finds.iter().map(|f| f.amortized.total()).collect();
    let median_positives = median(&amortized_positives);
    let median_negatives = median(&amortized_negatives);
    let expected_cost = match (median_positives, median_negatives) {
        (Some(p), Some(n)) => cost_ratios.iter().map(|&r| (r, cost_at_ratio(p, n, r))).collect(),
        _ => Vec::new(),
    };
    let mut total_ledger = TestLedger::default();
    for p in pairs {
        total_ledger.add(&p.get(algorithm).ledger);
    }

    Ok(CellSummary {
        algorithm,
        a0: first.get(algorithm).a0,
        runs,
        finds,
        initial_failures,
        mid_aborts,
        init_fail_rate: initial_failures as f64 / runs as f64,
        abort_rate: (runs > initial_failures).then(|| mid_aborts as f64 / (runs - initial_failures) as f64),
        k_proportions,
        prop_identical: proportion_identical(pairs),
        median_positives,
        median_negatives,
        median_total: median(&amortized_totals),
        expected_cost,
        residue: amortized.residue,
        amortized_positives,
        amortized_negatives,
        amortized_totals,
        total_ledger,
    })
}

fn as_f64(v: &[u64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Rank-sum tests of SIGHT against RC on amortized per-find counts; `None`
/// when either side has no finds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellComparison {
    pub total: Option<MannWhitney>,
    pub positives: Option<MannWhitney>,
    pub negatives: Option<MannWhitney>,
}

pub fn compare(sight: &CellSummary, rc: &CellSummary) -> CellComparison {
    let test = |a: &[u64], b: &[u64]| mann_whitney_u(&as_f64(a), &as_f64(b)).ok();
    CellComparison {
        total: test(&sight.amortized_totals, &rc.amortized_totals),
        positives: test(&sight.amortized_positives, &rc.amortized_positives),
        negatives: test(&sight.amortized_negatives, &rc.amortized_negatives),
    }
}

/// Both algorithms' summaries for one initial size.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub a0: usize,
    pub sight: CellSummary,
    pub rc: CellSummary,
    pub comparison: CellComparison,
}

impl CellReport {
    pub fn from_pairs(pairs: &[PairResult], cost_ratios: &[f64]) -> Result<Self> {
        let sight = summarize_cell(pairs, Algorithm::Sight, cost_ratios)?;
        let rc = summarize_cell(pairs, Algorithm::Rc, cost_ratios)?;
        let comparison = compare(&sight, &rc);
        Ok(Self {
            a0: sight.a0,
            sight,
            rc,
            comparison,
        })
    }

    pub fn get(&self, algorithm: Algorithm) -> &CellSummary {
        match algorithm {
            Algorithm::Sight => &self.sight,
            Algorithm::Rc => &self.rc,
        }
    }

    /// One-line digest for terminal output.
    pub fn digest(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x}"));
        let s = &self.sight;
        let r = &self.rc;
        format!(
            "a0={:<4} init_fail={:.3} | sight finds={} abort={} med_pos={} med_neg={} | rc finds={} abort={} med_pos={} med_neg={} | p_total={}",
            self.a0,
            s.init_fail_rate,
            s.finds,
            s.abort_rate.map_or("-".into(), |x| format!("{x:.3}")),
            fmt(s.median_positives),
            fmt(s.median_negatives),
            r.finds,
            r.abort_rate.map_or("-".into(), |x| format!("{x:.3}")),
            fmt(r.median_positives),
            fmt(r.median_negatives),
            self.comparison.total.map_or("-".into(), |m| format!("{:.3e}", m.p_value)),
        )
    }
}

/// Runs every cell of the grid in order.
pub fn run_experiment(family: &PlantedFamily, config: &ExperimentConfig, execution: Execution) -> Result<Vec<(usize, Vec<PairResult>)>> {
    config.validate(family.universe_size())?;
    config
        .a0_grid
        .iter()
        .map(|&a0| Ok((a0, run_paired_cell(family, config, a0, execution)?)))
        .collect()
}

/// Newline-delimited run log: SIGHT then RC for each pair, cells in grid order.
pub fn write_run_log<W: Write>(mut out: W, cells: &[(usize, Vec<PairResult>)], seed: u64) -> std::io::Result<()> {
    for (_, pairs) in cells {
        for p in pairs {
            for run in [&p.sight, &p.rc] {
                serde_json::to_writer(&mut out, &run.to_record(seed, p.pair))?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()
}

/// Reassembles cells from a run log, keeping the order cells first appear in.
pub fn read_run_log(text: &str) -> Result<Vec<(usize, Vec<PairResult>)>> {
    type Slots = BTreeMap<u64, (Option<RunResult>, Option<RunResult>)>;
    let mut cells: Vec<(usize, Slots)> = Vec::new();
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record: RunRecord = serde_json::from_str(line)
            .map_err(|e| Error::InvalidConfig(format!("run log line {}: {e}", lineno + 1)))?;
        let run = record.to_result()?;
        let idx = match cells.iter().position(|(a0, _)| *a0 == record.a0) {
            Some(i) => i,
            None => {
                cells.push((record.a0, BTreeMap::new()));
                cells.len() - 1
            }
        };
        let slot = cells[idx].1.entry(record.pair).or_default();
        match record.algorithm {
            Algorithm::Sight => slot.0 = Some(run),
            Algorithm::Rc => slot.1 = Some(run),
        }
    }
    cells
        .into_iter()
        .map(|(a0, pairs)| {
            let pairs = pairs
                .into_iter()
                .map(|(pair, (s, r))| match (s, r) {
                    (Some(sight), Some(rc)) => Ok(PairResult { pair, sight, rc }),
                    _ => Err(Error::InvalidConfig(format!("run log: pair {pair} at a0={a0} is incomplete"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((a0, pairs))
        })
        .collect()
}

pub const SUMMARY_COLUMNS: [&str; 19] = [
    "algorithm",
    "a0",
    "T_label",
    "finds",
    "init_fail_rate",
    "abort_rate",
    "med_pos",
    "med_neg",
    "med_total",
    "p2",
    "p3",
    "p4",
    "prop_identical",
    "cost_r1",
    "cost_r10",
    "cost_r50",
    "cost_r100",
    "U",
    "p_value",
];

/// Columns appended after the fixed schema.
pub const EXTRA_COLUMNS: [&str; 4] = ["U_pos", "p_pos", "U_neg", "p_neg"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Summary CSV, one row per (algorithm, a0). Cost ratios outside the four
/// standard ones are appended as `cost_r<rho>` columns.
pub fn write_summary<W: Write>(out: W, reports: &[CellReport], label: &str, cost_ratios: &[f64]) -> Result<()> {
    let extra_ratios: Vec<f64> = cost_ratios
        .iter()
        .copied()
        .filter(|r| !STANDARD_RATIOS.contains(r))
        .collect();
    let io = |e: csv::Error| Error::Io(format!("writing summary: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = SUMMARY_COLUMNS.iter().chain(&EXTRA_COLUMNS).map(|s| s.to_string()).collect();
    header.extend(extra_ratios.iter().map(|r| format!("cost_r{r}")));
    w.write_record(&header).map_err(io)?;
    for report in reports {
        for alg in Algorithm::ALL {
            let s = report.get(alg);
            let side = |m: Option<MannWhitney>| -> (Option<f64>, Option<f64>) {
                match (m, alg) {
                    (Some(m), Algorithm::Sight) => (Some(m.u_x), Some(m.p_value)),
                    (Some(m), Algorithm::Rc) => (Some(m.u_y), Some(m.p_value)),
                    (None, _) => (None, None),
                }
            };
            let (u, p) = side(report.comparison.total);
            let (u_pos, p_pos) = side(report.comparison.positives);
            let (u_neg, p_neg) = side(report.comparison.negatives);
            let mut row = vec![
                alg.to_string(),
                s.a0.to_string(),
                label.to_string(),
                s.finds.to_string(),
                s.init_fail_rate.to_string(),
                cell(s.abort_rate),
                cell(s.median_positives),
                cell(s.median_negatives),
                cell(s.median_total),
                cell(s.proportion(2)),
                cell(s.proportion(3)),
                cell(s.proportion(4)),
                cell(s.prop_identical),
            ];
            row.extend(STANDARD_RATIOS.iter().map(|&r| cell(s.cost_at(r))));
            row.extend([cell(u), cell(p), cell(u_pos), cell(p_pos), cell(u_neg), cell(p_neg)]);
            row.extend(extra_ratios.iter().map(|&r| cell(s.cost_at(r))));
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(format!("writing summary: {e}")))?;
    Ok(())
}
