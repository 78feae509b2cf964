use std::fmt::Write as _;

use serde::Serialize;

use super::campaign::{run_campaign, Aggregate};
use super::config::{CampaignConfig, HarnessError};

/// `(delta, signatures)` pairs of the published table, easiest last.
pub const TABLE1_ROWS: [(u32, usize); 9] = [
    (5, 58),
    (6, 40),
    (8, 25),
    (10, 18),
    (12, 14),
    (14, 12),
    (16, 11),
    (18, 9),
    (20, 8),
];

pub const TABLE1_ELL: u32 = 160;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Table1Row {
    pub delta: u32,
    pub signatures: usize,
    pub trials: usize,
    pub aggregate: Aggregate,
    /// Trials where some index hit the node budget.
    pub budget_exceeded: usize,
}

#[derive(Clone, Debug)]
pub struct Table1Options {
    pub trials: usize,
    pub seed: u64,
    pub p_bits: u32,
    pub node_budget: u64,
    pub workers: usize,
}

/// Run one campaign per requested row. Each row gets its own seed stream.
pub fn table1(rows: &[(u32, usize)], opts: &Table1Options) -> Result<Vec<Table1Row>, HarnessError> {
    let mut out = Vec::with_capacity(rows.len());
    for &(delta, signatures) in rows {
        let mut cfg = CampaignConfig::new(
            TABLE1_ELL,
            delta,
            signatures,
            opts.trials,
            opts.seed ^ ((delta as u64) << 32 | signatures as u64),
        );
        cfg.p_bits = opts.p_bits;
        cfg.node_budget = opts.node_budget;
        let report = run_campaign(&cfg, opts.workers)?;
        let budget_exceeded = report
            .rows
            .iter()
            .filter(|r| r.reason.as_deref().is_some_and(|s| s.contains("budget")))
            .count();
        out.push(Table1Row {
            delta,
            signatures,
            trials: opts.trials,
            aggregate: report.aggregate,
            budget_exceeded,
        });
    }
    Ok(out)
}

/// Fixed-width text table.
pub fn render_table1(rows: &[Table1Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5}  {:>10}  {:>6}  {:>9}  {:>12}  {:>12}  {:>6}",
        "delta", "signatures", "trials", "success", "mean_ms", "median_ms", "budget"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5}  {:>10}  {:>6}  {:>8.1}%  {:>12.1}  {:>12.1}  {:>6}",
            r.delta,
            r.signatures,
            r.trials,
            100.0 * r.aggregate.success_rate,
            r.aggregate.mean_time_ms,
            r.aggregate.median_time_ms,
            r.budget_exceeded
        );
    }
    s
}
