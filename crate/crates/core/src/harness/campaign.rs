use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attack::{recover_key, AttackError, AttackOptions};
use crate::enumeration::Execution;
use crate::scheme::{
    gen_curve_params, gen_group_params, keygen, make_instance, make_uniform_instance, AttackInstance,
    EphemeralPattern, SchemeKind, SchemeParams,
};

use super::config::{CampaignConfig, HarnessError, NonceModel};

pub const CSV_HEADER: &str = "trial,seed,success,wall_ms,index_tried,points,nodes,hyp2_margin";

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a campaign seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    mix64(seed ^ mix64(index as u64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRow {
    pub trial: usize,
    #[serde(serialize_with = "as_string")]
    pub seed: u64,
    pub success: bool,
    pub wall_time_ms: f64,
    /// Last index attempted; the recovering index on success.
    pub index_tried: Option<usize>,
    /// Ball points visited, summed over attempted indices.
    pub points_in_ball: u64,
    pub nodes_visited: u64,
    /// Margin at `index_tried`.
    pub hypothesis2_margin: Option<f64>,
    /// Every reduced basis passed the exact invariant checks.
    pub reduction_ok: bool,
    /// Why a failed trial failed.
    pub reason: Option<String>,
}

fn as_string<S: serde::Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Aggregate {
    pub success_rate: f64,
    pub mean_time_ms: f64,
    pub median_time_ms: f64,
}

impl Aggregate {
    pub fn from_rows(rows: &[TrialRow]) -> Self {
        if rows.is_empty() {
            return Aggregate {
                success_rate: 0.0,
                mean_time_ms: 0.0,
                median_time_ms: 0.0,
            };
        }
        let n = rows.len() as f64;
        let mut times: Vec<f64> = rows.iter().map(|r| r.wall_time_ms).collect();
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let median = if times.len() % 2 == 1 {
            times[mid]
        } else {
            (times[mid - 1] + times[mid]) / 2.0
        };
        Aggregate {
            success_rate: rows.iter().filter(|r| r.success).count() as f64 / n,
            mean_time_ms: times.iter().sum::<f64>() / n,
            median_time_ms: median,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub rows: Vec<TrialRow>,
    pub aggregate: Aggregate,
}

fn fmt_margin(m: Option<f64>) -> String {
    m.map_or_else(String::new, |v| format!("{v:.6}"))
}

impl CampaignReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{},{},{},{}",
                r.trial,
                r.seed,
                r.success,
                r.wall_time_ms,
                r.index_tried.map_or_else(String::new, |i| i.to_string()),
                r.points_in_ball,
                r.nodes_visited,
                fmt_margin(r.hypothesis2_margin)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Write `<prefix>.csv` and `<prefix>.json`.
    pub fn write(&self, prefix: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
        let csv = prefix.with_extension("csv");
        let json = prefix.with_extension("json");
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        for (path, body) in [(&csv, self.to_csv()), (&json, self.to_json())] {
            std::fs::write(path, body).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok((csv, json))
    }
}

fn scheme_params(config: &CampaignConfig, rng: &mut ChaCha8Rng) -> Result<SchemeParams, HarnessError> {
    let gen_err = |e: crate::scheme::SchemeError| HarnessError::Generation(e.to_string());
    match config.scheme {
        SchemeKind::Dsa => gen_group_params(config.ell, config.p_bits, rng).map_err(gen_err),
        SchemeKind::Ecdsa => {
            let spec = config
                .curve
                .as_ref()
                .ok_or_else(|| HarnessError::Config("ECDSA campaigns need a curve".into()))?;
            let params = gen_curve_params(spec).map_err(gen_err)?;
            if params.ell() != config.ell {
                return Err(HarnessError::Config(format!(
                    "curve order has {} bits but ell = {}",
                    params.ell(),
                    config.ell
                )));
            }
            Ok(params)
        }
    }
}

/// The instance of trial `index`; a pure function of `(config, index)`.
pub fn trial_instance(config: &CampaignConfig, index: usize) -> Result<AttackInstance, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, index));
    let params = scheme_params(config, &mut rng)?;
    let kp = keygen(&params, &mut rng);
    let n = config.signatures - 1;
    let gen_err = |e: crate::scheme::SchemeError| HarnessError::Generation(e.to_string());
    match config.nonces {
        NonceModel::Shared => {
            let pattern = EphemeralPattern::random(&params.q, config.delta, config.delta_l(), &mut rng).map_err(gen_err)?;
            make_instance(&params, &kp, n, &pattern, config.hash_mode, &mut rng).map_err(gen_err)
        }
        NonceModel::Uniform => {
            make_uniform_instance(&params, &kp, n, config.delta, config.delta_l(), config.hash_mode, &mut rng)
                .map_err(gen_err)
        }
    }
}

/// One trial. Attack failures, including an exhausted node budget, become a
/// failed row; only generation and config errors are returned as `Err`.
pub fn run_trial_with(config: &CampaignConfig, index: usize, execution: Execution) -> Result<TrialRow, HarnessError> {
    config.validate()?;
    let instance = trial_instance(config, index)?;
    let hint = if config.min_index_known {
        instance.meta.as_ref().map(|m| m.min_index)
    } else {
        None
    };
    let opts = AttackOptions {
        reduction: config.reduction(),
        min_index_hint: hint,
        node_budget: config.node_budget,
        filter: config.filter,
        shells: config.shells,
        execution,
        ..Default::default()
    };
    let start = Instant::now();
    let result = recover_key(&instance, &opts);
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let (report, reason) = match &result {
        Ok(r) => (Some(r), None),
        Err(e @ AttackError::KeyNotFound(r)) => (Some(&**r), Some(e.to_string())),
        Err(e @ AttackError::BudgetExceeded { report, .. }) => (Some(&**report), Some(e.to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = report.and_then(|r| r.per_index.last());
    let success = match (&result, &instance.meta) {
        (Ok(r), Some(meta)) => r.a.as_ref() == Some(&meta.secret),
        (Ok(r), None) => r.success,
        _ => false,
    };
    Ok(TrialRow {
        trial: index,
        seed: trial_seed(config.seed, index),
        success,
        wall_time_ms: wall,
        index_tried: last.map(|l| l.index),
        points_in_ball: report.map_or(0, |r| r.per_index.iter().map(|l| l.points_enumerated).sum()),
        nodes_visited: report.map_or(0, |r| r.per_index.iter().map(|l| l.nodes_visited).sum()),
        hypothesis2_margin: last.map(|l| l.hypothesis2_margin),
        reduction_ok: report.is_none_or(|r| r.per_index.iter().all(|l| l.reduction_ok)),
        reason,
    })
}

pub fn run_trial(config: &CampaignConfig, index: usize) -> Result<TrialRow, HarnessError> {
    run_trial_with(config, index, Execution::Sequential)
}

/// Worker count: the explicit value, else `LATKEY_WORKERS`, else the number
/// of available cores.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize, HarnessError> {
    if let Some(w) = flag {
        return if w == 0 {
            Err(HarnessError::Config("workers must be >= 1".into()))
        } else {
            Ok(w)
        };
    }
    match std::env::var("LATKEY_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => Err(HarnessError::Config(format!("LATKEY_WORKERS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Run every trial on `workers` threads and write the outputs if the config
/// names a path. Rows come back in trial order.
pub fn run_campaign(config: &CampaignConfig, workers: usize) -> Result<CampaignReport, HarnessError> {
    config.validate()?;
    let rows = run_rows(config, workers)?;
    let report = CampaignReport {
        config: config.clone(),
        aggregate: Aggregate::from_rows(&rows),
        rows,
    };
    if let Some(prefix) = &config.output_path {
        report.write(prefix)?;
    }
    Ok(report)
}

#[cfg(feature = "parallel")]
fn run_rows(config: &CampaignConfig, workers: usize) -> Result<Vec<TrialRow>, HarnessError> {
    use rayon::prelude::*;
    if workers <= 1 {
        return (0..config.trials).map(|i| run_trial_with(config, i, Execution::Sequential)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial_with(config, i, Execution::Parallel))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_rows(config: &CampaignConfig, _workers: usize) -> Result<Vec<TrialRow>, HarnessError> {
    (0..config.trials).map(|i| run_trial_with(config, i, Execution::Sequential)).collect()
}
