use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use latkey::attack::{recover_key, AttackOptions, CandidateFilter, Reduction, DEFAULT_SHELLS};
use latkey::enumeration::{Execution, DEFAULT_NODE_BUDGET};
use latkey::harness::{
    render_table1, resolve_workers, run_campaign, table1, CampaignConfig, Table1Options, TABLE1_ROWS,
};
use latkey::scheme::{
    gen_curve_params, gen_group_params, keygen, make_instance, make_uniform_instance, AttackInstance, CurveSpec,
    EphemeralPattern, HashMode,
};

const FOUND: u8 = 0;
const NOT_FOUND: u8 = 1;
const INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "latkey", version, about = "Key recovery from signatures whose nonces share bits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded attack instance.
    Gen(GenArgs),
    /// Attack an instance file and print the report.
    Attack(AttackArgs),
    /// Run a campaign from a config file.
    Campaign(CampaignArgs),
    /// Run rows of the delta/signatures table.
    Table1(Table1Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliReduction {
    Lll,
    Bkz,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFilter {
    None,
    Box,
    Sharedbits,
}

impl From<CliFilter> for CandidateFilter {
    fn from(f: CliFilter) -> Self {
        match f {
            CliFilter::None => CandidateFilter::None,
            CliFilter::Box => CandidateFilter::Box,
            CliFilter::Sharedbits => CandidateFilter::SharedBits,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliHash {
    Passthrough,
    Hashed,
}

#[derive(Args)]
struct GenArgs {
    /// Bit length of q.
    #[arg(long, default_value_t = 160)]
    ell: u32,
    #[arg(long)]
    delta: u32,
    /// Shared low bits; defaults to delta / 2.
    #[arg(long = "delta-l")]
    delta_l: Option<u32>,
    /// Number of signatures (n + 1).
    #[arg(long)]
    signatures: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bit length of p for DSA groups.
    #[arg(long = "p-bits", default_value_t = 1024)]
    p_bits: u32,
    /// Generate an ECDSA instance on this curve (preset name, e.g. toy16).
    #[arg(long)]
    curve: Option<String>,
    /// Uniform nonces instead of shared bits.
    #[arg(long)]
    uniform: bool,
    #[arg(long, value_enum, default_value_t = CliHash::Passthrough)]
    hash: CliHash,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = CliReduction::Bkz)]
    reduction: CliReduction,
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Attack only this index.
    #[arg(long = "min-index", conflicts_with = "use_meta")]
    min_index: Option<usize>,
    /// Take the index hint from the instance's ground-truth metadata.
    #[arg(long = "use-meta")]
    use_meta: bool,
    #[arg(long = "node-budget", default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long, value_enum, default_value_t = CliFilter::Sharedbits)]
    filter: CliFilter,
    /// Inner passes before the full ball; 0 for a single pass.
    #[arg(long, default_value_t = DEFAULT_SHELLS)]
    shells: u32,
    /// Threads for enumeration.
    #[arg(long)]
    workers: Option<usize>,
    /// Report file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output prefix, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct Table1Args {
    /// Rows as delta:signatures, comma separated; all rows if absent.
    #[arg(long, value_parser = parse_rows)]
    rows: Option<Rows>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "p-bits", default_value_t = 1024)]
    p_bits: u32,
    #[arg(long = "node-budget", default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the rows as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Rows(Vec<(u32, usize)>);

fn parse_rows(s: &str) -> Result<Rows, String> {
    s.split(',').filter(|r| !r.trim().is_empty()).map(parse_row).collect::<Result<_, _>>().map(Rows)
}

fn parse_row(s: &str) -> Result<(u32, usize), String> {
    let (d, n) = s.split_once(':').ok_or_else(|| format!("expected delta:signatures, got {s:?}"))?;
    let d = d.trim().parse().map_err(|e| format!("bad delta in {s:?}: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("bad signature count in {s:?}: {e}"))?;
    Ok((d, n))
}

/// A failure with its exit code.
struct Fail(u8, String);

fn invalid(msg: impl std::fmt::Display) -> Fail {
    Fail(INVALID, msg.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn cmd_gen(a: GenArgs) -> Result<u8, Fail> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let params = match &a.curve {
        Some(name) => gen_curve_params(&CurveSpec::Preset(name.clone())).map_err(invalid)?,
        None => gen_group_params(a.ell, a.p_bits, &mut rng).map_err(invalid)?,
    };
    let delta_l = a.delta_l.unwrap_or(a.delta / 2);
    if a.signatures < 2 {
        return Err(invalid("signatures must be >= 2"));
    }
    let kp = keygen(&params, &mut rng);
    let hash = match a.hash {
        CliHash::Passthrough => HashMode::Passthrough,
        CliHash::Hashed => HashMode::Hashed,
    };
    let n = a.signatures - 1;
    let inst = if a.uniform {
        make_uniform_instance(&params, &kp, n, a.delta, delta_l, hash, &mut rng)
    } else {
        let pattern = EphemeralPattern::random(&params.q, a.delta, delta_l, &mut rng).map_err(invalid)?;
        make_instance(&params, &kp, n, &pattern, hash, &mut rng)
    }
    .map_err(invalid)?;
    emit(a.out.as_deref(), &inst.to_json())?;
    Ok(FOUND)
}

fn cmd_attack(a: AttackArgs) -> Result<u8, Fail> {
    let inst = AttackInstance::from_json(&read(&a.input)?).map_err(invalid)?;
    let hint = if a.use_meta {
        Some(
            inst.meta
                .as_ref()
                .ok_or_else(|| invalid("--use-meta given but the instance has no metadata"))?
                .min_index,
        )
    } else {
        a.min_index
    };
    let reduction = match a.reduction {
        CliReduction::Lll => Reduction::Lll,
        CliReduction::Bkz if a.block < 2 => return Err(invalid("block size must be >= 2")),
        CliReduction::Bkz => Reduction::Bkz(a.block),
    };
    let workers = resolve_workers(a.workers).map_err(invalid)?;
    let opts = AttackOptions {
        reduction,
        min_index_hint: hint,
        node_budget: a.node_budget,
        filter: a.filter.into(),
        shells: a.shells,
        execution: if workers > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
        ..Default::default()
    };
    let run = || recover_key(&inst, &opts);
    let result = match rayon_pool(workers)? {
        Some(pool) => pool.install(run),
        None => run(),
    };
    match result {
        Ok(report) => {
            emit(a.out.as_deref(), &report.to_json())?;
            Ok(FOUND)
        }
        Err(e) => {
            let Some(report) = e.report() else {
                return Err(invalid(e));
            };
            emit(a.out.as_deref(), &report.to_json())?;
            eprintln!("latkey: {e}");
            Ok(NOT_FOUND)
        }
    }
}

#[cfg(feature = "parallel")]
fn rayon_pool(workers: usize) -> Result<Option<rayon::ThreadPool>, Fail> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(invalid)
}

#[cfg(not(feature = "parallel"))]
fn rayon_pool(_workers: usize) -> Result<Option<NoPool>, Fail> {
    Ok(None)
}

#[cfg(not(feature = "parallel"))]
struct NoPool;

#[cfg(not(feature = "parallel"))]
impl NoPool {
    fn install<T>(&self, f: impl FnOnce() -> T) -> T {
        f()
    }
}

fn cmd_campaign(a: CampaignArgs) -> Result<u8, Fail> {
    let mut cfg = CampaignConfig::from_json(&read(&a.config)?).map_err(invalid)?;
    if a.out.is_some() {
        cfg.output_path = a.out;
    }
    let workers = resolve_workers(a.workers).map_err(invalid)?;
    let report = run_campaign(&cfg, workers).map_err(invalid)?;
    if cfg.output_path.is_none() {
        print!("{}", report.to_csv());
    }
    let agg = &report.aggregate;
    eprintln!(
        "success {}/{}  mean {:.1} ms  median {:.1} ms",
        report.rows.iter().filter(|r| r.success).count(),
        report.rows.len(),
        agg.mean_time_ms,
        agg.median_time_ms
    );
    Ok(if agg.success_rate > 0.0 { FOUND } else { NOT_FOUND })
}

fn cmd_table1(a: Table1Args) -> Result<u8, Fail> {
    let rows = a.rows.map_or_else(|| TABLE1_ROWS.to_vec(), |r| r.0);
    for r in &rows {
        if !TABLE1_ROWS.contains(r) {
            return Err(invalid(format!("{}:{} is not a table row", r.0, r.1)));
        }
    }
    let opts = Table1Options {
        trials: a.trials,
        seed: a.seed,
        p_bits: a.p_bits,
        node_budget: a.node_budget,
        workers: resolve_workers(a.workers).map_err(invalid)?,
    };
    let result = table1(&rows, &opts).map_err(invalid)?;
    print!("{}", render_table1(&result));
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&result).map_err(invalid)?;
        std::fs::write(out, json).map_err(|e| invalid(format!("{}: {e}", out.display())))?;
    }
    let any = result.iter().any(|r| r.aggregate.success_rate > 0.0);
    Ok(if any || result.is_empty() { FOUND } else { NOT_FOUND })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Attack(a) => cmd_attack(a),
        Cmd::Campaign(a) => cmd_campaign(a),
        Cmd::Table1(a) => cmd_table1(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("latkey: {msg}");
            ExitCode::from(code)
        }
    }
}
