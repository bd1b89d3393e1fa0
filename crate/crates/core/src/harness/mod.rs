//! Scenario files, the (policy, r, replication) experiment matrix and its
//! reports.

mod report;
mod scenario;

pub use report::{render_svg, results_csv, summary_csv, to_json, write_reports, ReportFiles};
pub use scenario::{
    load_scenario, parse_scenario, InitialRule, NetworkSection, RunSection, Scenario,
    ScenarioError, TrafficSection,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::bcp::{lower_bound_report, BoundParams, BoundReport, ReportError};
use crate::policies::BuiltinPolicy;
use crate::sim::{allocation_drift, residual_diagnostics, run, RunConfig, StreamKey};
use crate::stats::summarize;
use crate::stochastic::hash_name;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("empty experiment matrix: {0}")]
    EmptyMatrix(&'static str),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("bound computation failed: {0}")]
    Bound(#[from] ReportError),
    #[error("cannot write reports: {0}")]
    Io(#[from] std::io::Error),
}

/// Overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct MatrixOptions {
    pub policies: Option<Vec<BuiltinPolicy>>,
    pub seed: Option<u64>,
    pub replications: Option<u32>,
    pub bound: BoundParams,
    /// Record wall-clock time per cell. Off by default so that outputs are
    /// reproducible byte for byte.
    pub wall_clock: bool,
    /// Keep the event trace of replication 0 for every (policy, r).
    pub keep_traces: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub policy: String,
    pub r: u32,
    pub horizon: f64,
    pub rep: u32,
    pub seed: u64,
    pub cost: f64,
    pub cost_no_burn: f64,
    pub workload_avg: Vec<f64>,
    /// Worst type's sup-over-grid indicator of a large arrival residual.
    pub res_a_sup: f64,
    /// Worst type's time fraction with a large service residual.
    pub res_s_avg: f64,
    /// Worst type's allocation-drift exceedance fraction.
    pub alloc_drift: f64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub policy: String,
    pub r: u32,
    pub rep: u32,
    pub error: String,
}

/// Mean cost across replications for one (policy, r).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub policy: String,
    pub r: u32,
    pub horizon: f64,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub ci95: f64,
    /// `mean − bound`; absent when the bound is infinite.
    pub gap: Option<f64>,
    /// `sqrt(se² + se_bound²)`.
    pub gap_se: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub scenario: String,
    pub seed: u64,
    pub num_resources: usize,
    pub bound: BoundReport,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
    pub summaries: Vec<CellSummary>,
    /// `(policy, r, CSV)` event traces, when requested.
    pub traces: Vec<(String, u32, String)>,
}

impl MatrixResult {
    pub fn summary(&self, policy: &str, r: u32) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.policy == policy && s.r == r)
    }
}

struct Cell {
    policy: BuiltinPolicy,
    r: u32,
    rep: u32,
}

type CellOutcome = Result<(ResultRow, Option<String>), CellFailure>;

/// Runs every (policy, r, replication) cell in parallel and computes the
/// bound once. Replication `k` uses the same random streams under every
/// policy.
pub fn run_matrix(scenario: &Scenario, opts: &MatrixOptions) -> Result<MatrixResult, HarnessError> {
    let policies = opts
        .policies
        .clone()
        .unwrap_or_else(|| scenario.policies.clone());
    if policies.is_empty() {
        return Err(HarnessError::EmptyMatrix("no policies"));
    }
    let reps = opts.replications.unwrap_or(scenario.replications);
    if reps == 0 {
        return Err(HarnessError::EmptyMatrix("no replications"));
    }
    let seed = opts.seed.unwrap_or(scenario.seed);
    let bound = lower_bound_report(&scenario.model, &opts.bound)?;

    let mut cells = Vec::new();
    for &policy in &policies {
        for &r in &scenario.r_grid {
            for rep in 0..reps {
                cells.push(Cell { policy, r, rep });
            }
        }
    }
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|c| run_cell(scenario, c, seed, opts))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut traces = Vec::new();
    for (cell, out) in cells.iter().zip(outcomes) {
        match out {
            Ok((row, trace)) => {
                if let Some(t) = trace {
                    traces.push((cell.policy.to_string(), cell.r, t));
                }
                rows.push(row);
            }
            Err(f) => failures.push(f),
        }
    }
    let bound_se = bound.se;
    let summaries = summarize_rows(&policies, scenario, &rows, &bound, bound_se);
    Ok(MatrixResult {
        scenario: scenario.name.clone(),
        seed,
        num_resources: scenario.model.num_resources(),
        bound,
        rows,
        failures,
        summaries,
        traces,
    })
}

fn run_cell(scenario: &Scenario, cell: &Cell, seed: u64, opts: &MatrixOptions) -> CellOutcome {
    let fail = |e: String| CellFailure {
        policy: cell.policy.to_string(),
        r: cell.r,
        rep: cell.rep,
        error: e,
    };
    let horizon = scenario.horizon(cell.r).expect("r comes from the grid");
    let q0 = scenario
        .initial_queue(cell.r)
        .map_err(|e| fail(e.to_string()))?;
    let mut cfg = RunConfig::new(cell.r, horizon, q0, seed);
    cfg.key = StreamKey {
        seed,
        scenario: hash_name(&scenario.name),
        replication: cell.rep,
    };
    cfg.grid = scenario.grid;
    cfg.burn_in = horizon * scenario.burn_in_fraction;
    let keep_trace = opts.keep_traces && cell.rep == 0;
    cfg.record_events = keep_trace;
    let mut policy = cell.policy;
    let (trace, metrics) =
        run(&scenario.model, &mut policy, &cfg).map_err(|e| fail(e.to_string()))?;
    let res = residual_diagnostics(&trace, scenario.residual_eps);
    let drift = allocation_drift(&trace, scenario.drift_window, scenario.drift_eps)
        .map_err(|e| fail(e.to_string()))?;
    let worst = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let csv = if keep_trace {
        let mut buf = Vec::new();
        trace
            .write_events_csv(&mut buf)
            .map_err(|e| fail(e.to_string()))?;
        Some(String::from_utf8(buf).expect("CSV is ASCII"))
    } else {
        None
    };
    Ok((
        ResultRow {
            scenario: scenario.name.clone(),
            policy: cell.policy.to_string(),
            r: cell.r,
            horizon,
            rep: cell.rep,
            seed,
            cost: metrics.cost,
            cost_no_burn: metrics.cost_no_burn,
            workload_avg: metrics.workload_avg,
            res_a_sup: worst(&res.arrival_sup),
            res_s_avg: worst(&res.service_avg),
            alloc_drift: worst(&drift),
            wall_ms: if opts.wall_clock { metrics.wall_ms } else { 0 },
        },
        csv,
    ))
}

fn summarize_rows(
    policies: &[BuiltinPolicy],
    scenario: &Scenario,
    rows: &[ResultRow],
    bound: &BoundReport,
    bound_se: Option<f64>,
) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for p in policies {
        for (&r, &horizon) in scenario.r_grid.iter().zip(&scenario.horizons) {
            let costs: Vec<f64> = rows
                .iter()
                .filter(|row| row.policy == p.as_str() && row.r == r)
                .map(|row| row.cost)
                .collect();
            if costs.is_empty() {
                continue;
            }
            let s = summarize(&costs);
            let se = if s.se.is_finite() { s.se } else { 0.0 };
            out.push(CellSummary {
                policy: p.to_string(),
                r,
                horizon,
                n: s.n,
                mean: s.mean,
                se,
                ci95: if s.ci95.is_finite() { s.ci95 } else { 0.0 },
                gap: bound.bound_value.map(|b| s.mean - b),
                gap_se: bound_se.map(|b| (se * se + b * b).sqrt()),
            });
        }
    }
    out
}
