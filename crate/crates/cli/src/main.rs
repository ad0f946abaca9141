//! Command line for the broker: synthetic data generation, budget
//! benchmarks against the flat baselines, a line-oriented serving loop,
//! and read-only data-owner audits.

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use dpbroker::bench::{self, BenchConfig};
use dpbroker::ledger::{verify_file, HistoryFilter, LedgerSnapshot, Scope};
use dpbroker::protocol;
use dpbroker::synth;
use dpbroker::table::{load_csv, load_schema_sidecar};
use dpbroker::{Broker, ConfigFile, DataTable, Eps, Error, FunctionKind, NType, Result};

#[derive(Parser)]
#[command(name = "dpbroker", version, about = "Budget-minimizing private query broker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Workload benchmarks against the flat-rate baselines.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Run the broker.
    #[command(subcommand)]
    Broker(BrokerCmd),
    /// Data-owner tools for a spend ledger.
    #[command(subcommand)]
    Owner(OwnerCmd),
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Write a synthetic census-style CSV and its schema sidecar.
    GenData(GenDataArgs),
    /// Run the grid comparison; writes table2.csv plus one fig6_<function>.csv
    /// cumulative trace per function.
    Compare(CompareArgs),
    /// Rerun the grid once per step size; writes one table3_<eta>.csv each.
    EtaSweep(EtaSweepArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Sidecar path; defaults to the CSV path with a .schema extension.
    #[arg(long)]
    schema_out: Option<PathBuf>,
    #[arg(long, default_value_t = synth::DEFAULT_ROWS)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV; omitted means a synthetic table is generated in memory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema sidecar for --data (column kinds are inferred without it).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Row count for the in-memory table when --data is omitted.
    #[arg(long, default_value_t = synth::DEFAULT_ROWS)]
    rows: usize,
    /// Generator seed for the in-memory table.
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated aggregate functions to benchmark.
    #[arg(long, value_delimiter = ',', default_value = "count,average,maximum,minimum")]
    functions: Vec<String>,
    /// Comma-separated default-epsilon grid; defaults to 0.1 through 1.0.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Comma-separated workload seeds, one full run per seed.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Total privacy budget per run.
    #[arg(long, default_value_t = 8.0)]
    epsilon_total: f64,
    /// Search step size.
    #[arg(long, default_value_t = 0.0005)]
    eta: f64,
    /// Accuracy tolerance band.
    #[arg(long, default_value_t = 0.02)]
    tau: f64,
    /// Smallest epsilon the search may try.
    #[arg(long, default_value_t = 0.001)]
    epsilon_floor: f64,
    /// Monte Carlo samples per accuracy estimate.
    #[arg(long, default_value_t = 1000)]
    samples: u32,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Default epsilon whose per-query trace goes into the fig6 files.
    #[arg(long, default_value_t = 0.5)]
    fig_epsilon_def: f64,
}

#[derive(Args)]
struct EtaSweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated step sizes to sweep; overrides --eta.
    #[arg(long, value_delimiter = ',', default_value = "0.0005,0.005,0.05")]
    etas: Vec<f64>,
}

#[derive(Subcommand)]
enum BrokerCmd {
    /// Answer newline-delimited JSON requests on stdin, one reply per line
    /// on stdout.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// TOML config; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[arg(long)]
    epsilon_total: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon_def: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Subcommand)]
enum OwnerCmd {
    /// Read-only audits of a broker ledger file.
    #[command(subcommand)]
    Audit(AuditCmd),
}

#[derive(Subcommand)]
enum AuditCmd {
    /// Budget utilization inside a scope.
    Report(ReportArgs),
    /// Per-release history, released values redacted.
    History(HistoryArgs),
    /// Walk the hash chain and check every block.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    ledger: PathBuf,
    /// all, whole, or portion.
    #[arg(long, default_value = "all")]
    scope: String,
}

#[derive(Args)]
struct HistoryArgs {
    #[arg(long)]
    ledger: PathBuf,
    /// Only releases answered for this user.
    #[arg(long)]
    user: Option<String>,
    /// 0 for whole-table releases, 1 for subpopulation releases.
    #[arg(long)]
    n_type: Option<u8>,
    /// First sequence number, inclusive.
    #[arg(long)]
    from: Option<u64>,
    /// Last sequence number, inclusive.
    #[arg(long)]
    to: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    ledger: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Bench(BenchCmd::GenData(a)) => gen_data(&a),
        Cmd::Bench(BenchCmd::Compare(a)) => compare(&a),
        Cmd::Bench(BenchCmd::EtaSweep(a)) => eta_sweep(&a),
        Cmd::Broker(BrokerCmd::Serve(a)) => serve(&a),
        Cmd::Owner(OwnerCmd::Audit(AuditCmd::Report(a))) => audit_report(&a),
        Cmd::Owner(OwnerCmd::Audit(AuditCmd::History(a))) => audit_history(&a),
        Cmd::Owner(OwnerCmd::Audit(AuditCmd::Verify(a))) => audit_verify(&a),
    }
}

fn gen_data(a: &GenDataArgs) -> Result<ExitCode> {
    synth::write_census_csv(&a.out, a.rows, a.seed)?;
    let sidecar = a.schema_out.clone().unwrap_or_else(|| a.out.with_extension("schema"));
    write_sidecar(&sidecar)?;
    println!("wrote {} ({} rows) and {}", a.out.display(), a.rows, sidecar.display());
    Ok(ExitCode::SUCCESS)
}

fn write_sidecar(path: &Path) -> Result<()> {
    let schema = synth::census_schema();
    let mut text = String::new();
    for (name, kind) in schema.columns() {
        text.push_str(name);
        text.push(':');
        text.push_str(kind.as_str());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn load_table(args: &DataArgs) -> Result<Arc<DataTable>> {
    match &args.data {
        Some(path) => {
            let hint = args.schema.as_deref().map(load_schema_sidecar).transpose()?;
            let outcome = load_csv(path, hint.as_ref())?;
            if outcome.rejected_rows > 0 {
                eprintln!(
                    "dropped {} malformed rows from {}",
                    outcome.rejected_rows,
                    path.display()
                );
            }
            Ok(Arc::new(outcome.table))
        }
        None => Ok(Arc::new(synth::census_table(args.rows, args.data_seed))),
    }
}

fn parse_functions(names: &[String]) -> Result<Vec<FunctionKind>> {
    names
        .iter()
        .map(|n| {
            FunctionKind::parse(n)
                .ok_or_else(|| Error::Config(format!("unknown aggregate function `{n}`")))
        })
        .collect()
}

fn bench_config(g: &GridArgs, fig_epsilon_def: f64) -> BenchConfig {
    BenchConfig {
        epsilon_total: Eps::from_f64(g.epsilon_total),
        eta: Eps::from_f64(g.eta),
        tau: g.tau,
        epsilon_floor: Eps::from_f64(g.epsilon_floor),
        estimation_samples: g.samples,
        fig_epsilon_def: Eps::from_f64(fig_epsilon_def),
    }
}

fn grid_eps(g: &GridArgs) -> Vec<Eps> {
    match &g.grid {
        Some(v) => v.iter().map(|&x| Eps::from_f64(x)).collect(),
        None => bench::default_grid(),
    }
}

fn compare(a: &CompareArgs) -> Result<ExitCode> {
    let table = load_table(&a.data)?;
    let kinds = parse_functions(&a.grid.functions)?;
    let cfg = bench_config(&a.grid, a.fig_epsilon_def);
    let cells =
        bench::run_comparison(&table, &kinds, &grid_eps(&a.grid), &a.grid.seeds, &cfg, &a.out)?;
    println!("{} cells -> {}", cells.len(), a.out.join("table2.csv").display());
    for kind in &kinds {
        println!("trace -> {}", a.out.join(format!("fig6_{}.csv", kind.as_str())).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn eta_sweep(a: &EtaSweepArgs) -> Result<ExitCode> {
    let table = load_table(&a.data)?;
    let kinds = parse_functions(&a.grid.functions)?;
    let cfg = bench_config(&a.grid, 0.5);
    let etas: Vec<Eps> = a.etas.iter().map(|&x| Eps::from_f64(x)).collect();
    let runs = bench::run_eta_sweep(
        &table,
        &kinds,
        &grid_eps(&a.grid),
        &a.grid.seeds,
        &etas,
        &cfg,
        &a.out,
    )?;
    for (eta, cells) in &runs {
        println!(
            "eta {eta}: {} cells -> {}",
            cells.len(),
            a.out.join(format!("table3_{eta}.csv")).display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(a: &ServeArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if a.dataset.is_some() {
        cfg.dataset = a.dataset.clone();
    }
    if a.schema.is_some() {
        cfg.schema = a.schema.clone();
    }
    if a.ledger.is_some() {
        cfg.ledger = a.ledger.clone();
    }
    if a.epsilon_total.is_some() {
        cfg.epsilon_total = a.epsilon_total;
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if a.epsilon_def.is_some() {
        cfg.search.epsilon_def = a.epsilon_def;
    }
    if a.eta.is_some() {
        cfg.search.eta = a.eta;
    }
    if a.tau.is_some() {
        cfg.search.tau = a.tau;
    }

    let setup = cfg.resolve()?;
    let mut broker = Broker::start(&setup.dataset, setup.schema.as_deref(), setup.params)?;
    eprintln!(
        "serving {} rows; budget {}, ledger {}",
        broker.table().n(),
        broker.accountant().epsilon_total(),
        broker.ledger().path().display()
    );
    let stdin = io::stdin();
    let stdout = io::stdout();
    protocol::serve(&mut broker, stdin.lock(), stdout.lock())?;
    Ok(ExitCode::SUCCESS)
}

fn audit_report(a: &ReportArgs) -> Result<ExitCode> {
    let scope = match a.scope.as_str() {
        "all" => Scope::All,
        "whole" => Scope::Type(NType::Whole),
        "portion" => Scope::Type(NType::Portion),
        other => {
            return Err(Error::Config(format!(
                "unknown scope `{other}` (expected all, whole, or portion)"
            )))
        }
    };
    let snap = LedgerSnapshot::load(&a.ledger)?;
    let report = snap.budget_query(scope);
    println!(
        "scope {}: utilized {} of {}, remaining {}",
        a.scope, report.utilized, report.epsilon_total, report.remaining
    );
    Ok(ExitCode::SUCCESS)
}

fn n_type_name(n_type: NType) -> &'static str {
    match n_type {
        NType::Whole => "whole",
        NType::Portion => "portion",
    }
}

fn audit_history(a: &HistoryArgs) -> Result<ExitCode> {
    let n_type = match a.n_type {
        Some(v) => Some(
            NType::from_u8(v)
                .ok_or_else(|| Error::Config(format!("n_type must be 0 or 1, got {v}")))?,
        ),
        None => None,
    };
    let filter = HistoryFilter {
        user_id: a.user.clone(),
        n_type,
        seq_range: (a.from.is_some() || a.to.is_some())
            .then(|| (a.from.unwrap_or(0), a.to.unwrap_or(u64::MAX))),
    };
    let snap = LedgerSnapshot::load(&a.ledger)?;
    let records = snap.history(&filter);
    for r in &records {
        let function = match &r.attribute {
            Some(attr) => format!("{}({attr})", r.function.as_str()),
            None => r.function.as_str().to_string(),
        };
        // Everything but the released value; audits account for spend, they
        // do not re-disclose answers.
        println!(
            "seq {} user {} {} {} `{}` spent {} a_req {} ts {}",
            r.seq,
            r.user_id,
            function,
            n_type_name(r.n_type),
            r.predicate,
            r.epsilon_spent,
            r.a_req,
            r.timestamp_ms
        );
    }
    println!("{} releases", records.len());
    Ok(ExitCode::SUCCESS)
}

fn audit_verify(a: &VerifyArgs) -> Result<ExitCode> {
    let report = verify_file(&a.ledger)?;
    if report.ok {
        let snap = LedgerSnapshot::load(&a.ledger)?;
        println!("ok: {} blocks, head {}", report.blocks, hex::encode(snap.head_hash()));
        Ok(ExitCode::SUCCESS)
    } else {
        println!(
            "corrupt at block {} of {}",
            report.first_bad_index.unwrap_or(0),
            report.blocks
        );
        Ok(ExitCode::FAILURE)
    }
}
