//! Command-line front end: argument and config-file parsing, dispatch, and JSON/CSV output.
//!
//! Every command writes a result envelope (`result.json`) and flat CSV tables into `--out`;
//! without `--out` the envelope is printed to stdout. Exit codes: 0 success, 1 computation
//! error (machine-readable error object on stderr), 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bootstrap::{fevd_ci, hall_bands, irf_ci, mbb_distribution, BootScheme, BootstrapConfig};
use crate::breaks::bss::{detect_breaks, BreakOptions};
use crate::breaks::cusum::{cusum_covariance_test, simulate_bridge_table, CusumVariant};
use crate::data::{load_csv, parse_csv, transform, TimeSeriesDataset, TransformSpec};
use crate::dynamics::{fevd, gfevd_connectedness, historical_decomposition, irf, ImpulseResponseSet};
use crate::error::{Error, Result};
use crate::ident::{
    identify_longrun, identify_proxy, identify_recursive, identify_restricted, sign_restriction_bounds, SignRestrictionSet,
    StructuralModel,
};
use crate::lagselect::{ic_table, sequential_wald, IcTable};
use crate::localproj::{fit_lp, lp_irf, Impulse};
use crate::robust::{fit_mlts, reweight_rmlts, robust_order_select, MltsConfig, DEFAULT_ALPHA_TRIM, DEFAULT_DELTA};
use crate::simulate::{Dgp, Innovations};
use crate::stats::stream_rng;
use crate::var::{check_stability, fit_var, VarModel, DEFAULT_STABILITY_TOL};
use crate::vecm::{gg_decompose, loading_projectors, longrun_C, var_to_vecm};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "svarkit", version, about = "Structural VAR estimation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Least-squares VAR(p) with a stability report
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Lag-order selection by information criteria or sequential Wald tests
    #[command(args_override_self = true)]
    SelectLag(SelectLagArgs),
    /// Structural impulse responses, optionally with bootstrap bands or sign-restriction bounds
    #[command(args_override_self = true)]
    Irf(IrfArgs),
    /// Forecast-error variance decomposition
    #[command(args_override_self = true)]
    Fevd(FevdArgs),
    /// Historical decomposition into structural shock contributions
    #[command(args_override_self = true)]
    Hd(HdArgs),
    /// Generalized variance decomposition connectedness table
    #[command(args_override_self = true)]
    Connect(ConnectArgs),
    /// Local-projection impulse responses
    #[command(args_override_self = true)]
    Lp(LpArgs),
    /// Moving-block bootstrap distribution of the VAR coefficients
    #[command(args_override_self = true)]
    Boot(BootArgs),
    /// Error-correction form of a fitted VAR
    #[command(args_override_self = true)]
    Vecm(VecmArgs),
    /// Permanent-transitory decomposition from loading and cointegration matrices
    #[command(args_override_self = true)]
    PtDecompose(PtArgs),
    /// Trimmed and reweighted robust VAR fit, or robust order selection
    #[command(args_override_self = true)]
    Robust(RobustArgs),
    /// Block-segmentation break detection with information-criterion screening
    #[command(args_override_self = true)]
    Breaks(BreaksArgs),
    /// CUSUM test for a change in second moments
    #[command(args_override_self = true)]
    Cusum(CusumArgs),
    /// Simulate from a VAR data-generating process
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Regenerate the Brownian-bridge critical-value table
    #[command(args_override_self = true)]
    Critvals(CritvalsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    /// Directory for result.json and CSV tables; stdout JSON when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file with optional `[command]` sections; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall-clock time in the envelope (makes output run-dependent)
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct InputArgs {
    /// CSV file, one column per variable
    #[arg(long)]
    input: PathBuf,
    /// The first CSV row holds data, not names
    #[arg(long)]
    no_header: bool,
    /// Column holding row labels
    #[arg(long)]
    index_col: Option<usize>,
    /// Per-column transforms, e.g. `log,diff(1),none`
    #[arg(long)]
    transform: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Lag order
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long)]
    no_intercept: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeArg {
    Recursive,
    Longrun,
    Proxy,
    Restricted,
    Sign,
}

#[derive(Args, Debug, Clone, Serialize)]
struct IdentArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::Recursive)]
    scheme: SchemeArg,
    /// Causal ordering for the recursive scheme: names or 0-based indices, comma separated
    #[arg(long)]
    order: Option<String>,
    /// d×d CSV of impact restrictions; `*` marks a free entry
    #[arg(long)]
    restrictions: Option<PathBuf>,
    /// Single-column CSV instrument aligned with the dataset rows
    #[arg(long)]
    proxy: Option<PathBuf>,
    /// Shock identified by the proxy or sign restrictions (0-based)
    #[arg(long, default_value_t = 0)]
    shock: usize,
    /// Accept an instrument with first-stage F below 10
    #[arg(long)]
    allow_weak: bool,
    /// Sign restrictions on impact, e.g. `0:+,2:-`
    #[arg(long)]
    signs: Option<String>,
    /// Variables with a zero impact response to the restricted shock
    #[arg(long)]
    zero: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BootOpts {
    /// Bootstrap replicates; 0 disables bands
    #[arg(long, default_value_t = 0)]
    boot: usize,
    /// Block length, or `auto` for ⌈n^{1/3}⌉
    #[arg(long, default_value = "auto")]
    block: String,
    /// Coverage of bands and intervals
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LagMethod {
    Ic,
    Wald,
}

#[derive(Args, Debug, Serialize)]
struct SelectLagArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    pmax: usize,
    #[arg(long, value_enum, default_value_t = LagMethod::Ic)]
    method: LagMethod,
    /// Size of each sequential Wald test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    no_intercept: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct IrfArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ident: IdentArgs,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    #[command(flatten)]
    boot: BootOpts,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct FevdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ident: IdentArgs,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    #[command(flatten)]
    boot: BootOpts,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct HdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ident: IdentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct ConnectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct LpArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Lagged controls
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    /// Single-column CSV shock series; without it every variable is an impulse
    #[arg(long)]
    shock_file: Option<PathBuf>,
    /// Dataset row of the first shock observation
    #[arg(long, default_value_t = 0)]
    offset: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct BootArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 999)]
    boot: usize,
    #[arg(long, default_value = "auto")]
    block: String,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct VecmArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// d×r loading matrix CSV (no header)
    #[arg(long, requires = "beta")]
    alpha: Option<PathBuf>,
    /// d×r cointegration matrix CSV (no header)
    #[arg(long, requires = "alpha")]
    beta: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct PtArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    alpha: PathBuf,
    #[arg(long)]
    beta: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct RobustArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Select the order up to this bound instead of fitting `--p`
    #[arg(long)]
    pmax: Option<usize>,
    /// Trimmed fraction
    #[arg(long, default_value_t = DEFAULT_ALPHA_TRIM)]
    alpha_trim: f64,
    /// Reweighting tail probability
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Random elemental starts
    #[arg(long, default_value_t = 500)]
    starts: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct BreaksArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Block length; ⌈√n⌉ by default
    #[arg(long)]
    block: Option<usize>,
    /// Screening neighbourhood; the block length by default
    #[arg(long)]
    neighbourhood: Option<usize>,
    /// Penalty per break; d²p·ln n by default
    #[arg(long)]
    omega: Option<f64>,
    /// Fix the jump penalty instead of searching the default grid
    #[arg(long)]
    lambda1: Option<f64>,
    /// Sparsity penalty; λ₁/10 by default
    #[arg(long, requires = "lambda1")]
    lambda2: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VariantArg {
    Endpoint,
    MaxDeviation,
}

#[derive(Args, Debug, Serialize)]
struct CusumArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Left weight vector, comma separated
    #[arg(long, allow_hyphen_values = true)]
    v: String,
    /// Right weight vector, comma separated
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Endpoint)]
    variant: VariantArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DgpKind {
    Var,
    Arch,
    Break,
    Proxy,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = DgpKind::Var)]
    dgp: DgpKind,
    /// Lag matrices: rows split by `;`, entries by `,`, lags by `|`
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    /// Impact matrix mapping unit shocks to errors; identity by default
    #[arg(long, allow_hyphen_values = true)]
    impact: Option<String>,
    /// Intercept vector, comma separated
    #[arg(long, allow_hyphen_values = true)]
    intercept: Option<String>,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    #[arg(long, default_value_t = 0.2)]
    arch_omega: f64,
    #[arg(long, default_value_t = 0.5)]
    arch_alpha: f64,
    /// First row governed by the post-break lag matrices
    #[arg(long)]
    break_at: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    break_coeffs: Option<String>,
    /// Shock measured by the proxy
    #[arg(long, default_value_t = 0)]
    proxy_shock: usize,
    /// Standard deviation of the proxy's measurement noise
    #[arg(long, default_value_t = 0.0)]
    proxy_noise: f64,
    #[arg(long)]
    allow_unstable: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
struct CritvalsArgs {
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::SelectLag(_) => "select-lag",
            Command::Irf(_) => "irf",
            Command::Fevd(_) => "fevd",
            Command::Hd(_) => "hd",
            Command::Connect(_) => "connect",
            Command::Lp(_) => "lp",
            Command::Boot(_) => "boot",
            Command::Vecm(_) => "vecm",
            Command::PtDecompose(_) => "pt-decompose",
            Command::Robust(_) => "robust",
            Command::Breaks(_) => "breaks",
            Command::Cusum(_) => "cusum",
            Command::Simulate(_) => "simulate",
            Command::Critvals(_) => "critvals",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::Fit(a) => &a.output,
            Command::SelectLag(a) => &a.output,
            Command::Irf(a) => &a.output,
            Command::Fevd(a) => &a.output,
            Command::Hd(a) => &a.output,
            Command::Connect(a) => &a.output,
            Command::Lp(a) => &a.output,
            Command::Boot(a) => &a.output,
            Command::Vecm(a) => &a.output,
            Command::PtDecompose(a) => &a.output,
            Command::Robust(a) => &a.output,
            Command::Breaks(a) => &a.output,
            Command::Cusum(a) => &a.output,
            Command::Simulate(a) => &a.output,
            Command::Critvals(a) => &a.output,
        }
    }

    /// The seed when the command draws random numbers; `Err` names the missing flag.
    fn seed(&self) -> std::result::Result<Option<u64>, String> {
        let need = |seed: Option<u64>, why: &str| seed.map(Some).ok_or_else(|| format!("--seed is required {why}"));
        match self {
            Command::Irf(a) if a.boot.boot > 0 => need(a.boot.seed, "when --boot > 0"),
            Command::Fevd(a) if a.boot.boot > 0 => need(a.boot.seed, "when --boot > 0"),
            Command::Boot(a) => need(a.seed, "for boot"),
            Command::Robust(a) => need(a.seed, "for robust"),
            Command::Simulate(a) => need(a.seed, "for simulate"),
            Command::Critvals(a) => need(a.seed, "for critvals"),
            _ => Ok(None),
        }
    }
}

/// A flat output table; every cell is written to CSV and JSON from the same value.
#[derive(Debug, Clone)]
struct Table {
    name: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

impl Table {
    fn new<S: AsRef<str>>(name: &'static str, columns: &[S]) -> Self {
        Self { name, columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    fn to_json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

struct Outcome {
    summary: Value,
    tables: Vec<Table>,
    /// Extra files written verbatim into the output directory.
    files: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Outcome {
    fn new(summary: Value, tables: Vec<Table>) -> Self {
        Self { summary, tables, files: Vec::new(), warnings: Vec::new() }
    }
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CmdResult = std::result::Result<Outcome, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the command line `argv` (program name first) and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    match std::env::var("SVARKIT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| run_inner(argv)),
                Err(e) => {
                    eprintln!("error: cannot start {n} worker threads: {e}");
                    EXIT_COMPUTE
                }
            },
            _ => {
                eprintln!("error: SVARKIT_THREADS must be a positive integer, got '{v}'");
                EXIT_USAGE
            }
        },
        Err(_) => run_inner(argv),
    }
}

fn run_inner(argv: Vec<String>) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cmd = cli.command;
    let seed = match cmd.seed() {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let out = cmd.output().clone();
    let started = Instant::now();
    let result = dispatch(&cmd);
    let elapsed = started.elapsed();
    match result {
        Ok(outcome) => {
            let mut env = Map::new();
            env.insert("schema_version".into(), json!(SCHEMA_VERSION));
            env.insert("command".into(), json!(cmd.name()));
            env.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            env.insert("seed".into(), json!(seed));
            env.insert("config".into(), config_echo(&cmd));
            env.insert(
                "timing".into(),
                if out.timing { json!({ "elapsed_ms": elapsed.as_secs_f64() * 1e3 }) } else { Value::Null },
            );
            env.insert("warnings".into(), json!(outcome.warnings));
            let tables: Map<String, Value> = outcome.tables.iter().map(|t| (t.name.to_string(), t.to_json())).collect();
            env.insert("payload".into(), json!({ "summary": outcome.summary, "tables": tables }));
            let text = serde_json::to_string_pretty(&Value::Object(env)).expect("envelope serializes") + "\n";
            match write_outputs(out.out.as_deref(), &text, &outcome) {
                Ok(()) => EXIT_OK,
                Err(e) => report_error(out.out.as_deref(), &e),
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Compute(e)) => report_error(out.out.as_deref(), &e),
    }
}

fn config_echo(cmd: &Command) -> Value {
    match serde_json::to_value(cmd).expect("arguments serialize") {
        Value::Object(m) => m.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        v => v,
    }
}

fn report_error(out: Option<&Path>, e: &Error) -> i32 {
    let obj = json!({ "error": { "name": e.name(), "message": e.to_string() } });
    let text = serde_json::to_string(&obj).expect("error serializes");
    eprintln!("{text}");
    if let Some(dir) = out {
        let _ = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("error.json"), text + "\n"));
    }
    EXIT_COMPUTE
}

fn write_outputs(out: Option<&Path>, envelope: &str, outcome: &Outcome) -> Result<()> {
    let Some(dir) = out else {
        print!("{envelope}");
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    fs::write(dir.join("result.json"), envelope)?;
    for t in &outcome.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
    }
    for (name, body) in &outcome.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Splices `key = value` entries from `--config` (top-level keys and the `[command]`
/// section) in front of the command-line flags, so explicit flags take precedence.
fn expand_config(argv: Vec<String>) -> std::result::Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = Some(argv.get(i + 1).cloned().ok_or("--config needs a file path")?);
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let Some(sub_pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config file '{path}': {e}"))?;
    let entries = parse_config(&text, &argv[sub_pos])?;
    let mut out = argv[..=sub_pos].to_vec();
    for (k, v) in entries {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v);
            }
        }
    }
    out.extend_from_slice(&argv[sub_pos + 1..]);
    Ok(out)
}

fn parse_config(text: &str, command: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut section: Option<String> = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", lineno + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key '{}'", lineno + 1, k.trim()));
        }
        if section.as_deref().is_none_or(|s| s == command) {
            entries.push((key, v.trim().trim_matches('"').to_string()));
        }
    }
    Ok(entries)
}

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Fit(a) => cmd_fit(a),
        Command::SelectLag(a) => cmd_select_lag(a),
        Command::Irf(a) => cmd_irf(a),
        Command::Fevd(a) => cmd_fevd(a),
        Command::Hd(a) => cmd_hd(a),
        Command::Connect(a) => cmd_connect(a),
        Command::Lp(a) => cmd_lp(a),
        Command::Boot(a) => cmd_boot(a),
        Command::Vecm(a) => cmd_vecm(a),
        Command::PtDecompose(a) => cmd_pt(a),
        Command::Robust(a) => cmd_robust(a),
        Command::Breaks(a) => cmd_breaks(a),
        Command::Cusum(a) => cmd_cusum(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Critvals(a) => cmd_critvals(a),
    }
}

fn load(input: &InputArgs) -> Result<TimeSeriesDataset> {
    let ds = load_csv(&input.input, !input.no_header, input.index_col)?;
    match &input.transform {
        Some(spec) => transform(&ds, &TransformSpec::parse(spec)?),
        None => Ok(ds),
    }
}

fn mat(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|r| m.row(r).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn text(s: &str) -> Cell {
    Cell::Text(s.to_string())
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse number '{}'", x.trim()))))
        .collect()
}

/// `a,b;c,d` → 2×2.
fn parse_matrix(s: &str) -> std::result::Result<DMatrix<f64>, Failure> {
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<std::result::Result<_, _>>()?;
    let ncol = rows[0].len();
    if rows.iter().any(|r| r.len() != ncol) {
        return Err(usage(format!("ragged matrix '{s}'")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncol, |r, c| rows[r][c]))
}

fn parse_lags(s: &str) -> std::result::Result<Vec<DMatrix<f64>>, Failure> {
    s.split('|').map(parse_matrix).collect()
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    Ok(load_csv(path, false, None)?.values().clone())
}

fn read_series(path: &Path) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let has_header = text.lines().next().is_some_and(|l| l.split(',').any(|c| c.trim().parse::<f64>().is_err()));
    let ds = parse_csv(&text, has_header, None)?;
    if ds.dim() != 1 {
        return Err(Error::Shape(format!("series file has {} columns, expected 1", ds.dim())));
    }
    Ok(ds.values().column(0).into_owned())
}

/// Restriction pattern file: numbers fix entries, `*`/`nan`/empty leave them free.
fn read_restrictions(path: &Path, d: usize) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .enumerate()
                .map(|(c, cell)| match cell.trim() {
                    "*" | "" => Ok(f64::NAN),
                    x if x.eq_ignore_ascii_case("nan") => Ok(f64::NAN),
                    x => x.parse::<f64>().map_err(|_| Error::Parse { row: r + 1, col: c + 1, msg: format!("'{x}'") }),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape(format!("restriction file must be {d}×{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
}

fn resolve_var(token: &str, names: &[String]) -> std::result::Result<usize, Failure> {
    let t = token.trim();
    if let Some(i) = names.iter().position(|n| n == t) {
        return Ok(i);
    }
    match t.parse::<usize>() {
        Ok(i) if i < names.len() => Ok(i),
        _ => Err(usage(format!("unknown variable '{t}'"))),
    }
}

fn parse_order(order: Option<&str>, names: &[String]) -> std::result::Result<Vec<usize>, Failure> {
    match order {
        None => Ok((0..names.len()).collect()),
        Some(s) => s.split(',').map(|t| resolve_var(t, names)).collect(),
    }
}

fn parse_block(s: &str) -> std::result::Result<Option<usize>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse::<usize>().map(Some).map_err(|_| usage(format!("--block must be `auto` or a positive integer, got '{s}'")))
}

fn boot_config(opts: &BootOpts) -> std::result::Result<BootstrapConfig, Failure> {
    let mut cfg = BootstrapConfig::new(opts.boot, opts.seed.unwrap_or(0)).with_level(opts.level);
    if let Some(l) = parse_block(&opts.block)? {
        cfg = cfg.with_block_length(l);
    }
    Ok(cfg)
}

fn fit_model(input: &InputArgs, model: &ModelArgs) -> Result<(TimeSeriesDataset, VarModel)> {
    let ds = load(input)?;
    let m = fit_var(&ds, model.p, !model.no_intercept)?;
    Ok((ds, m))
}

/// Point identification; sign restrictions are handled separately by `irf`.
fn identify(m: &VarModel, ds: &TimeSeriesDataset, id: &IdentArgs) -> std::result::Result<(StructuralModel, Value), Failure> {
    let names = ds.names();
    let sm = match id.scheme {
        SchemeArg::Recursive => identify_recursive(m, &parse_order(id.order.as_deref(), names)?)?,
        SchemeArg::Longrun => identify_longrun(m)?,
        SchemeArg::Proxy => {
            let path = id.proxy.as_ref().ok_or_else(|| usage("--proxy is required for --scheme proxy"))?;
            let z = read_series(path)?;
            if z.len() != ds.nobs() {
                return Err(Error::Shape(format!("proxy has {} rows, dataset {}", z.len(), ds.nobs())).into());
            }
            let aligned = z.rows(m.p, z.len() - m.p).into_owned();
            identify_proxy(m, &aligned, id.shock, id.allow_weak)?
        }
        SchemeArg::Restricted => {
            let path = id.restrictions.as_ref().ok_or_else(|| usage("--restrictions is required for --scheme restricted"))?;
            let (sm, j) = identify_restricted(m, &read_restrictions(path, m.dim())?)?;
            let extra = json!({ "j_test": j });
            return Ok((sm, extra));
        }
        SchemeArg::Sign => return Err(usage("--scheme sign is only available for irf")),
    };
    Ok((sm, Value::Null))
}

fn boot_scheme(m: &VarModel, ds: &TimeSeriesDataset, id: &IdentArgs) -> std::result::Result<BootScheme, Failure> {
    match id.scheme {
        SchemeArg::Recursive => Ok(BootScheme::Recursive(parse_order(id.order.as_deref(), ds.names())?)),
        SchemeArg::Longrun => Ok(BootScheme::LongRun),
        _ => {
            let _ = m;
            Err(Error::InvalidArgument("bootstrap bands are available for the recursive and long-run schemes".into()).into())
        }
    }
}

fn stability_json(m: &VarModel) -> Result<Value> {
    Ok(serde_json::to_value(check_stability(m, DEFAULT_STABILITY_TOL)?).expect("report serializes"))
}

fn coefficient_table(name: &'static str, m: &VarModel, names: &[String]) -> Table {
    let mut t = Table::new(name, &["lag", "equation", "variable", "value"]);
    if let Some(nu) = &m.intercept {
        for (e, v) in nu.iter().enumerate() {
            t.push(vec![Cell::Int(0), text(&names[e]), text("const"), Cell::Num(*v)]);
        }
    }
    for (j, a) in m.coeffs.iter().enumerate() {
        for e in 0..a.nrows() {
            for c in 0..a.ncols() {
                t.push(vec![Cell::Int(j + 1), text(&names[e]), text(&names[c]), Cell::Num(a[(e, c)])]);
            }
        }
    }
    t
}

fn matrix_table(name: &'static str, label: &str, m: &DMatrix<f64>, t: Option<Table>) -> Table {
    let mut t = t.unwrap_or_else(|| Table::new(name, &["matrix", "row", "col", "value"]));
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            t.push(vec![text(label), Cell::Int(r), Cell::Int(c), Cell::Num(m[(r, c)])]);
        }
    }
    t
}

fn model_summary(m: &VarModel) -> Result<Value> {
    Ok(json!({
        "p": m.p,
        "nobs_effective": m.nobs_effective,
        "intercept": m.intercept.as_ref().map(|v| v.iter().copied().collect::<Vec<_>>()),
        "coefficients": m.coeffs.iter().map(mat).collect::<Vec<_>>(),
        "sigma_u": mat(&m.sigma_u),
        "stability": stability_json(m)?,
    }))
}

fn cmd_fit(a: &FitArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let tables = vec![
        coefficient_table("coefficients", &m, ds.names()),
        matrix_table("sigma", "sigma_u", &m.sigma_u, None),
    ];
    Ok(Outcome::new(json!({ "variables": ds.names(), "model": model_summary(&m)? }), tables))
}

fn ic_table_out(name: &'static str, ic: &IcTable) -> Table {
    let mut t = Table::new(name, &["p", "log_det_sigma", "aic", "bic", "hqc"]);
    for r in &ic.rows {
        t.push(vec![Cell::Int(r.p), Cell::Num(r.log_det_sigma), Cell::Num(r.aic), Cell::Num(r.bic), Cell::Num(r.hqc)]);
    }
    t
}

fn cmd_select_lag(a: &SelectLagArgs) -> CmdResult {
    let ds = load(&a.input)?;
    match a.method {
        LagMethod::Ic => {
            let ic = ic_table(&ds, a.pmax, !a.no_intercept)?;
            Ok(Outcome::new(json!(ic), vec![ic_table_out("ic", &ic)]))
        }
        LagMethod::Wald => {
            let sel = sequential_wald(&ds, a.pmax, a.alpha)?;
            let mut t = Table::new("wald", &["p", "statistic", "critical_value", "significant"]);
            for s in &sel.trace {
                t.push(vec![Cell::Int(s.p), Cell::Num(s.statistic), Cell::Num(s.critical_value), Cell::Text(s.significant.to_string())]);
            }
            Ok(Outcome::new(json!(sel), vec![t]))
        }
    }
}

fn irf_table(set: &ImpulseResponseSet, names: &[String], shocks: &[usize]) -> Table {
    let mut t = Table::new("irf", &["horizon", "response", "shock", "value", "lower", "upper"]);
    for (h, theta) in set.theta.iter().enumerate() {
        for i in 0..theta.nrows() {
            for &k in shocks {
                let band = |b: &Option<Vec<DMatrix<f64>>>| b.as_ref().map_or(Cell::Missing, |v| Cell::Num(v[h][(i, k)]));
                t.push(vec![
                    Cell::Int(h),
                    text(&names[i]),
                    text(&set.shock_names[k]),
                    Cell::Num(theta[(i, k)]),
                    band(&set.lower),
                    band(&set.upper),
                ]);
            }
        }
    }
    t
}

fn parse_signs(s: &str, names: &[String]) -> std::result::Result<Vec<(usize, f64)>, Failure> {
    s.split(',')
        .map(|tok| {
            let (v, sign) = tok.split_once(':').ok_or_else(|| usage(format!("sign restriction '{tok}' must be `var:+` or `var:-`")))?;
            let sign = match sign.trim() {
                "+" => 1.0,
                "-" => -1.0,
                other => return Err(usage(format!("unknown sign '{other}'"))),
            };
            Ok((resolve_var(v, names)?, sign))
        })
        .collect()
}

fn cmd_irf(a: &IrfArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let names = ds.names();
    if a.ident.scheme == SchemeArg::Sign {
        if a.boot.boot > 0 {
            return Err(usage("--boot is not used with --scheme sign; intervals come from the delta method"));
        }
        let signs = a.ident.signs.as_deref().map(|s| parse_signs(s, names)).transpose()?.unwrap_or_default();
        let zeros: Vec<usize> = a.ident.zero.as_deref().map(|s| s.split(',').map(|t| resolve_var(t, names)).collect()).transpose()?.unwrap_or_default();
        let set = SignRestrictionSet::on_impact(m.dim(), &zeros, &signs, a.ident.shock)?;
        let mut t = Table::new("bounds", &["horizon", "response", "shock", "lower", "upper", "ci_lower", "ci_upper"]);
        let mut rows = Vec::new();
        for h in 0..=a.horizon {
            for i in 0..m.dim() {
                let b = sign_restriction_bounds(&m, &set, h, i, a.boot.level)?;
                t.push(vec![
                    Cell::Int(h),
                    text(&names[i]),
                    Cell::Int(a.ident.shock),
                    Cell::Num(b.lower),
                    Cell::Num(b.upper),
                    Cell::Num(b.ci_lower),
                    Cell::Num(b.ci_upper),
                ]);
                rows.push(b);
            }
        }
        return Ok(Outcome::new(json!({ "bounds": rows }), vec![t]));
    }
    let (sm, extra) = identify(&m, &ds, &a.ident)?;
    let set = if a.boot.boot > 0 {
        let scheme = boot_scheme(&m, &ds, &a.ident)?;
        let mut s = irf_ci(&m, &scheme, a.horizon, &boot_config(&a.boot)?)?;
        s.shock_names = sm.shock_names.clone();
        s
    } else {
        irf(&sm, a.horizon)
    };
    let shocks = sm.identified();
    let summary = json!({
        "impact": mat(&sm.impact),
        "scheme": sm.scheme,
        "identified_shocks": shocks,
        "identification": extra,
    });
    Ok(Outcome::new(summary, vec![irf_table(&set, names, &shocks)]))
}

fn cmd_fevd(a: &FevdArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let names = ds.names();
    let (sm, extra) = identify(&m, &ds, &a.ident)?;
    let (shares, lower, upper) = if a.boot.boot > 0 {
        let scheme = boot_scheme(&m, &ds, &a.ident)?;
        let b = fevd_ci(&m, &scheme, a.horizon, &boot_config(&a.boot)?)?;
        (b.point.shares, Some(b.lower), Some(b.upper))
    } else {
        (fevd(&sm, a.horizon)?.shares, None, None)
    };
    let mut t = Table::new("fevd", &["horizon", "variable", "shock", "share", "lower", "upper"]);
    for (hi, s) in shares.iter().enumerate() {
        for j in 0..s.nrows() {
            for k in 0..s.ncols() {
                let band = |b: &Option<Vec<DMatrix<f64>>>| b.as_ref().map_or(Cell::Missing, |v| Cell::Num(v[hi][(j, k)]));
                t.push(vec![
                    Cell::Int(hi + 1),
                    text(&names[j]),
                    text(&sm.shock_names[k]),
                    Cell::Num(s[(j, k)]),
                    band(&lower),
                    band(&upper),
                ]);
            }
        }
    }
    Ok(Outcome::new(json!({ "impact": mat(&sm.impact), "identification": extra }), vec![t]))
}

fn cmd_hd(a: &HdArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let names = ds.names();
    let (sm, _) = identify(&m, &ds, &a.ident)?;
    let hd = historical_decomposition(&sm, &ds)?;
    let mut t = Table::new("hd", &["row", "variable", "component", "value"]);
    for r in 0..hd.observed.nrows() {
        for i in 0..hd.observed.ncols() {
            let row = Cell::Int(hd.start + r);
            t.push(vec![row.clone(), text(&names[i]), text("observed"), Cell::Num(hd.observed[(r, i)])]);
            for (k, c) in hd.contributions.iter().enumerate() {
                t.push(vec![row.clone(), text(&names[i]), text(&sm.shock_names[k]), Cell::Num(c[(r, i)])]);
            }
            t.push(vec![row, text(&names[i]), text("remainder"), Cell::Num(hd.remainder[(r, i)])]);
        }
    }
    Ok(Outcome::new(json!({ "start": hd.start, "impact": mat(&sm.impact) }), vec![t]))
}

fn cmd_connect(a: &ConnectArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let names = ds.names();
    let c = gfevd_connectedness(&m, a.horizon)?;
    let mut shares = Table::new("connectedness", &["variable", "source", "share"]);
    for i in 0..c.normalized.nrows() {
        for j in 0..c.normalized.ncols() {
            shares.push(vec![text(&names[i]), text(&names[j]), Cell::Num(c.normalized[(i, j)])]);
        }
    }
    let mut spill = Table::new("spillovers", &["variable", "from", "to", "net"]);
    for i in 0..names.len() {
        spill.push(vec![text(&names[i]), Cell::Num(c.from[i]), Cell::Num(c.to[i]), Cell::Num(c.net[i])]);
    }
    Ok(Outcome::new(json!({ "horizon": c.horizon, "raw": mat(&c.raw), "total": c.total }), vec![shares, spill]))
}

fn cmd_lp(a: &LpArgs) -> CmdResult {
    let ds = load(&a.input)?;
    let names = ds.names();
    if let Some(path) = &a.shock_file {
        let s = read_series(path)?;
        let set = lp_irf(&ds, a.horizon, a.p, &s, a.offset)?;
        return Ok(Outcome::new(json!({ "mode": "shock" }), vec![irf_table(&set, names, &[0])]));
    }
    let mut t = Table::new("lp", &["horizon", "response", "impulse", "beta", "se", "nobs"]);
    for h in 0..=a.horizon {
        for i in 0..ds.dim() {
            let e = fit_lp(&ds, h, a.p, i, &Impulse::Variables)?;
            for j in 0..ds.dim() {
                t.push(vec![Cell::Int(h), text(&names[i]), text(&names[j]), Cell::Num(e.beta[j]), Cell::Num(e.se[j]), Cell::Int(e.nobs)]);
            }
        }
    }
    Ok(Outcome::new(json!({ "mode": "variables" }), vec![t]))
}

fn cmd_boot(a: &BootArgs) -> CmdResult {
    let (ds, m) = fit_model(&a.input, &a.model)?;
    let names = ds.names();
    let opts = BootOpts { boot: a.boot, block: a.block.clone(), level: a.level, seed: a.seed };
    let draws = mbb_distribution(&m, &boot_config(&opts)?)?;
    let fits: Vec<_> = draws.successful().collect();
    let coeff_draws: Vec<Vec<DMatrix<f64>>> = fits.iter().map(|f| f.coeffs.clone()).collect();
    let (lower, upper) = hall_bands(&m.coeffs, &coeff_draws, a.level);
    let mut t = Table::new("boot", &["lag", "equation", "variable", "estimate", "mean", "sd", "lower", "upper"]);
    for (j, a_hat) in m.coeffs.iter().enumerate() {
        for e in 0..a_hat.nrows() {
            for c in 0..a_hat.ncols() {
                let v: Vec<f64> = fits.iter().map(|f| f.coeffs[j][(e, c)]).collect();
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
                t.push(vec![
                    Cell::Int(j + 1),
                    text(&names[e]),
                    text(&names[c]),
                    Cell::Num(a_hat[(e, c)]),
                    Cell::Num(mean),
                    Cell::Num(sd),
                    Cell::Num(lower[j][(e, c)]),
                    Cell::Num(upper[j][(e, c)]),
                ]);
            }
        }
    }
    let summary = json!({
        "replicates": a.boot,
        "block_length": draws.block_length,
        "failed_replicates": draws.failed(),
    });
    let mut out = Outcome::new(summary, vec![t]);
    out.warnings = draws.warnings.clone();
    Ok(out)
}

fn cmd_vecm(a: &VecmArgs) -> CmdResult {
    let (_, m) = fit_model(&a.input, &a.model)?;
    let v = var_to_vecm(&m)?;
    let mut t = matrix_table("vecm", "pi", &v.pi, None);
    for (i, g) in v.gammas.iter().enumerate() {
        let label = format!("gamma{}", i + 1);
        t = matrix_table("vecm", &label, g, Some(t));
    }
    let mut summary = json!({
        "pi": mat(&v.pi),
        "gammas": v.gammas.iter().map(mat).collect::<Vec<_>>(),
        "sigma_u": mat(&v.sigma_u),
    });
    if let (Some(ap), Some(bp)) = (&a.alpha, &a.beta) {
        // supplied factors come from theory, so the estimated Π need not equal αβ'
        let (alpha, beta) = (read_matrix(ap)?, read_matrix(bp)?);
        let c = longrun_C(&alpha, &beta)?;
        let (_, transitory) = loading_projectors(&alpha, &beta)?;
        summary["factorization_gap"] = json!((&v.pi - &alpha * beta.transpose()).amax());
        summary["longrun_impact_multiplier"] = mat(&c);
        summary["transitory_projector"] = mat(&transitory);
        t = matrix_table("vecm", "longrun_c", &c, Some(t));
    }
    Ok(Outcome::new(summary, vec![t]))
}

fn cmd_pt(a: &PtArgs) -> CmdResult {
    let ds = load(&a.input)?;
    let names = ds.names();
    let pt = gg_decompose(&read_matrix(&a.alpha)?, &read_matrix(&a.beta)?, &ds)?;
    let mut t = Table::new("pt", &["row", "variable", "permanent", "transitory"]);
    for r in 0..pt.permanent.nrows() {
        for i in 0..pt.permanent.ncols() {
            t.push(vec![Cell::Int(r), text(&names[i]), Cell::Num(pt.permanent[(r, i)]), Cell::Num(pt.transitory[(r, i)])]);
        }
    }
    let summary = json!({
        "permanent_loading": mat(&pt.permanent_loading),
        "transitory_loading": mat(&pt.transitory_loading),
    });
    Ok(Outcome::new(summary, vec![t]))
}

fn cmd_robust(a: &RobustArgs) -> CmdResult {
    let ds = load(&a.input)?;
    let mut cfg = MltsConfig::new(a.seed.unwrap_or(0));
    cfg.starts = a.starts;
    if let Some(pmax) = a.pmax {
        let ic = robust_order_select(&ds, pmax, a.alpha_trim, a.delta, &cfg)?;
        return Ok(Outcome::new(json!(ic), vec![ic_table_out("ic", &ic)]));
    }
    let rm = fit_mlts(&ds, a.p, a.alpha_trim, &cfg)?;
    let rw = reweight_rmlts(&rm, a.delta)?;
    let names = ds.names();
    let mut outliers = Table::new("outliers", &["row", "distance"]);
    for &i in &rw.flagged_outliers {
        outliers.push(vec![Cell::Int(a.p + i), Cell::Num(rw.distances[i])]);
    }
    let summary = json!({
        "mlts": model_summary(&rm.model)?,
        "rmlts": model_summary(&rw.model)?,
        "subset_size": rm.h,
        "consistency_factor": rw.c_factor,
    });
    Ok(Outcome::new(summary, vec![coefficient_table("coefficients", &rw.model, names), outliers]))
}

fn cmd_breaks(a: &BreaksArgs) -> CmdResult {
    let ds = load(&a.input)?;
    let names = ds.names();
    let opts = BreakOptions {
        block_length: a.block,
        neighbourhood: a.neighbourhood,
        omega: a.omega,
        lambdas: a.lambda1.map(|l1| vec![(l1, a.lambda2.unwrap_or(0.1 * l1))]),
        ..Default::default()
    };
    let r = detect_breaks(&ds, a.p, &opts)?;
    let mut cands = Table::new("candidates", &["block", "row", "jump_norm", "retained"]);
    for c in &r.candidate_blocks {
        cands.push(vec![Cell::Int(c.block), Cell::Int(c.time), Cell::Num(c.jump_norm), text(&r.final_breaks.contains(&c.time).to_string())]);
    }
    let mut segs = Table::new("segments", &["segment", "start", "end", "lag", "equation", "variable", "value"]);
    for (s, seg) in r.segments.iter().enumerate() {
        let coef = coefficient_table("segment", &seg.model, names);
        for row in coef.rows {
            let mut full = vec![Cell::Int(s), Cell::Int(seg.start), Cell::Int(seg.end)];
            full.extend(row);
            segs.push(full);
        }
    }
    let mut out = Outcome::new(
        json!({
            "breaks": r.final_breaks,
            "tuning": r.tuning,
            "criterion": r.criterion,
            "converged": r.converged,
        }),
        vec![cands, segs],
    );
    if !r.converged {
        out.warnings.push("proximal-gradient solver hit the iteration cap; candidates come from the best iterate".into());
    }
    Ok(out)
}

fn cmd_cusum(a: &CusumArgs) -> CmdResult {
    let ds = load(&a.input)?;
    let v = DVector::from_vec(parse_list(&a.v)?);
    let w = DVector::from_vec(parse_list(&a.w)?);
    let variant = match a.variant {
        VariantArg::Endpoint => CusumVariant::Endpoint,
        VariantArg::MaxDeviation => CusumVariant::MaxDeviation,
    };
    let r = cusum_covariance_test(&ds, &v, &w, variant)?;
    let mut t = Table::new("cusum", &["level", "critical_value", "reject"]);
    for (&(l, c), &(_, rej)) in r.critical_values.iter().zip(&r.reject) {
        t.push(vec![Cell::Num(l), Cell::Num(c), text(&rej.to_string())]);
    }
    Ok(Outcome::new(json!(r), vec![t]))
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let seed = a.seed.expect("checked before dispatch");
    if a.output.out.is_none() {
        return Err(usage("--out is required for simulate"));
    }
    let coeffs = parse_lags(&a.coeffs)?;
    let d = coeffs[0].nrows();
    let impact = a.impact.as_deref().map(parse_matrix).transpose()?.unwrap_or_else(|| DMatrix::identity(d, d));
    let mut dgp = Dgp::var(coeffs, impact);
    dgp.burn_in = a.burn_in;
    if let Some(nu) = &a.intercept {
        dgp.intercept = Some(DVector::from_vec(parse_list(nu)?));
        if dgp.intercept.as_ref().is_some_and(|v| v.len() != d) {
            return Err(Error::Shape("intercept length must equal d".into()).into());
        }
    }
    match a.dgp {
        DgpKind::Arch => dgp.innovations = Innovations::Arch { omega: a.arch_omega, alpha: a.arch_alpha },
        DgpKind::Break => {
            let at = a.break_at.ok_or_else(|| usage("--break-at is required for --dgp break"))?;
            let post = a.break_coeffs.as_deref().ok_or_else(|| usage("--break-coeffs is required for --dgp break"))?;
            if at >= a.t {
                return Err(Error::InvalidArgument(format!("break row {at} outside the sample of {}", a.t)).into());
            }
            dgp.regime_change = Some((at, parse_lags(post)?));
        }
        DgpKind::Proxy if a.proxy_shock >= d => {
            return Err(Error::InvalidArgument(format!("proxy shock {} out of range", a.proxy_shock)).into());
        }
        _ => {}
    }
    if a.t == 0 {
        return Err(Error::InvalidArgument("--t must be positive".into()).into());
    }
    dgp.validate(a.allow_unstable)?;
    let sim = dgp.simulate(a.t, &mut stream_rng(seed, 0));
    let col_names: Vec<String> = (0..d).map(|i| format!("y{}", i + 1)).collect();
    let mut data = Table::new("data", &col_names);
    for t in 0..a.t {
        data.push((0..d).map(|c| Cell::Num(sim.data[(t, c)])).collect());
    }
    let mut shocks = Table::new("shocks", &col_names);
    for t in 0..a.t {
        shocks.push((0..d).map(|c| Cell::Num(sim.shocks[(t, c)])).collect());
    }
    let mut tables = vec![data, shocks];
    if a.dgp == DgpKind::Proxy {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = stream_rng(seed, 1);
        let mut proxy = Table::new("proxy", &["proxy"]);
        for t in 0..a.t {
            let noise: f64 = rng.sample(StandardNormal);
            proxy.push(vec![Cell::Num(sim.shocks[(t, a.proxy_shock)] + a.proxy_noise * noise)]);
        }
        tables.push(proxy);
    }
    let meta = json!({
        "dgp": a.dgp,
        "variables": col_names,
        "t": a.t,
        "seed": seed,
        "burn_in": a.burn_in,
        "coefficients": dgp.coeffs.iter().map(mat).collect::<Vec<_>>(),
        "intercept": dgp.intercept.as_ref().map(|v| v.iter().copied().collect::<Vec<_>>()),
        "impact": mat(&dgp.impact),
        "sigma_u": mat(&(&dgp.impact * dgp.impact.transpose())),
        "spectral_radius": dgp.spectral_radius(),
        "innovations": dgp.innovations,
        "break_index": dgp.regime_change.as_ref().map(|(at, _)| *at),
        "break_coefficients": dgp.regime_change.as_ref().map(|(_, c)| c.iter().map(mat).collect::<Vec<_>>()),
        "proxy_shock": (a.dgp == DgpKind::Proxy).then_some(a.proxy_shock),
        "proxy_noise": (a.dgp == DgpKind::Proxy).then_some(a.proxy_noise),
    });
    let mut out = Outcome::new(meta.clone(), tables);
    out.files.push(("dgp.json".into(), serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"));
    Ok(out)
}

fn cmd_critvals(a: &CritvalsArgs) -> CmdResult {
    let seed = a.seed.expect("checked before dispatch");
    if a.output.out.is_none() {
        return Err(usage("--out is required for critvals"));
    }
    if a.paths < 100 || a.grid < 10 {
        return Err(Error::InvalidArgument("critvals needs at least 100 paths and a 10-point grid".into()).into());
    }
    let table = simulate_bridge_table(a.paths, a.grid, seed);
    let summary = json!({ "paths": a.paths, "grid": a.grid, "seed": seed, "rows": table.probs.len() });
    let mut out = Outcome::new(summary, Vec::new());
    out.files.push(("bridge_critvals.csv".into(), table.to_csv()));
    Ok(out)
}
