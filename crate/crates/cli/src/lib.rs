//! The `critwin` command-line tool.
//!
//! Every command writes one report, either as a single JSON object or as CSV
//! with a fixed header. Exit status is 0 on success, 2 when the input is
//! invalid or outside a formula's window, and 1 on internal failure.

mod commands;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use critwin::{CountTables, ExactCountStore, WrightTable};

pub use report::{float_text, Cell, Report};

/// Environment variable naming the exact-count cache file.
pub const CACHE_ENV: &str = "CRITWIN_CACHE";

#[derive(Debug, Parser)]
#[command(
    name = "critwin",
    version,
    about = "Component-size statistics for G(n, p) with p = 1/n + lambda*n^(-4/3)",
    after_help = "Exit status: 0 success, 2 invalid input or window violation, 1 internal error.\n\
                  The exact-count cache is read from and written back to $CRITWIN_CACHE when set."
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for simulations (default: all cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scalar functions of the window: edge probability, rate functions, error terms.
    #[command(after_help = "CSV columns: quantity,n,lambda,k,l,x,kind,value,derivative")]
    Eval(EvalArgs),

    /// Connected labeled graph counts C(k, m), exact or asymptotic.
    #[command(after_help = "CSV columns: k,m,l,method,c,value,log_value")]
    Counts(CountsArgs),

    /// First and second moments of component counts and their helper sums.
    #[command(
        after_help = "CSV columns: quantity,n,lambda,k,l,k2,l2,mode,c,a,r,max_l,value,log_value,method,budget_kind,budget_rel,budget_abs"
    )]
    Moments(MomentsArgs),

    /// Point and tail probabilities for L1 and for the component of a vertex.
    #[command(
        after_help = "CSV columns: event,n,lambda,k,l,mode,c1,c2,value,log_value,lower,upper,exact,statement,out_of_calibration,budget_rel,budget_abs"
    )]
    Tails(TailsArgs),

    /// Monte Carlo estimates of tail events or size distributions.
    #[command(
        after_help = "CSV columns with --event: n,lambda,p,k,event,replicas,seed,successes,estimate,ci_low,ci_high\n\
                            CSV columns with --pmf:   n,lambda,p,pmf,replicas,seed,size,count,frequency"
    )]
    Simulate(SimulateArgs),

    /// Exact, asymptotic and Monte Carlo values side by side over a grid of k.
    #[command(
        after_help = "CSV columns: n,lambda,event,replicas,seed,k,a,exact,asymptotic,mc,ci_low,ci_high,ratio_mc_asymptotic,ratio_mc_exact,budget_rel,budget_abs"
    )]
    Compare(CompareArgs),

    /// Self-checks of the exact identities at small sizes.
    #[command(after_help = "CSV columns: n_max,check,passed,detail")]
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalQuantity {
    EdgeProbability,
    Truncation,
    ScaledSize,
    RateG,
    RateF,
    ErrorTerm,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    quantity: EvalQuantity,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i64>,
    /// Argument of the rate functions.
    #[arg(long)]
    x: Option<f64>,
    /// Error term: M1, A1, EX or PM.
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountMethod {
    Exact,
    Asymptotic,
    Upper,
}

#[derive(Debug, Args)]
struct CountsArgs {
    #[arg(long)]
    k: u64,
    /// Edge count; give either this or --l.
    #[arg(long, conflicts_with = "l")]
    m: Option<u64>,
    /// Excess m - k.
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i64>,
    #[arg(long, value_enum, default_value_t = CountMethod::Exact)]
    method: CountMethod,
    /// Envelope constant for --method upper.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MomentQuantity {
    MeanX,
    MeanXAsymptotic,
    MeanXUpper,
    MeanY,
    MeanZ,
    SecondMomentY,
    SecondMomentZ,
    SecondMomentPair,
    SumCounts,
    TailIntegral,
    TailSum,
    LTailBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Asymptotic,
    Exact,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[arg(long, value_enum)]
    quantity: MomentQuantity,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i64>,
    /// Second component size for second-moment-pair.
    #[arg(long)]
    k2: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    l2: Option<i64>,
    /// `exact` selects exact sums, quadrature or direct summation where offered.
    #[arg(long, value_enum, default_value_t = EvalMode::Asymptotic)]
    mode: EvalMode,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Scaled size for tail-integral.
    #[arg(long)]
    a: Option<f64>,
    /// Power r for tail-integral and tail-sum.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Excess cutoff L for sum-counts and l-tail-bound.
    #[arg(long, allow_negative_numbers = true)]
    max_l: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TailEvent {
    #[value(name = "L1_EQ")]
    L1Eq,
    #[value(name = "L1_GE")]
    L1Ge,
    #[value(name = "CV_EQ")]
    CvEq,
    #[value(name = "CV_GE")]
    CvGe,
    #[value(name = "CV_EDGES")]
    CvEdges,
    #[value(name = "EXPLORE_BOUND")]
    ExploreBound,
    #[value(name = "ENVELOPE")]
    Envelope,
}

#[derive(Debug, Args)]
struct TailsArgs {
    #[arg(long, value_enum, ignore_case = true)]
    event: TailEvent,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    k: u64,
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i64>,
    #[arg(long, value_enum, default_value_t = EvalMode::Asymptotic)]
    mode: EvalMode,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimEvent {
    #[value(name = "L1_GE")]
    L1Ge,
    #[value(name = "L1_EQ")]
    L1Eq,
    #[value(name = "CV_GE")]
    CvGe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimPmf {
    #[value(name = "L1")]
    L1,
    #[value(name = "CV")]
    Cv,
    #[value(name = "CV_GRAPH")]
    CvGraph,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Event to estimate at --k.
    #[arg(
        long,
        value_enum,
        ignore_case = true,
        required_unless_present = "pmf",
        requires = "k"
    )]
    event: Option<SimEvent>,
    #[arg(long)]
    k: Option<u64>,
    /// Record the full size distribution instead of one event.
    #[arg(long, value_enum, ignore_case = true, conflicts_with = "event")]
    pmf: Option<SimPmf>,
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, value_enum, ignore_case = true, default_value_t = SimEvent::L1Ge)]
    event: SimEvent,
    /// Comma-separated component sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "a")]
    k: Vec<u64>,
    /// Comma-separated scaled sizes a; k = round(a * n^(2/3)).
    #[arg(long, value_delimiter = ',')]
    a: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Largest n for the small-graph identity checks.
    #[arg(long, default_value_t = 8)]
    n_max: u64,
}

/// Why a command failed.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or a window violation; exit status 2.
    Validation(String),
    /// Anything else; exit status 1.
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<critwin::Error> for Failure {
    fn from(e: critwin::Error) -> Self {
        match e {
            critwin::Error::Cache { .. } => Failure::Validation(e.to_string()),
            e if e.is_validation() => Failure::Validation(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

pub(crate) fn invalid(message: impl Into<String>) -> Failure {
    Failure::Validation(message.into())
}

/// Largest excess any asymptotic lookup of this command may need.
fn wright_limit(command: &Command) -> usize {
    let l = match command {
        Command::Counts(a) => a.l.or(a.m.map(|m| m as i64 - a.k as i64)).unwrap_or(1),
        Command::Moments(a) => a.l.unwrap_or(1).max(a.l2.unwrap_or(1)),
        Command::Tails(a) => a.l.unwrap_or(1),
        _ => 1,
    };
    l.clamp(1, 100_000) as usize
}

fn load_store(cache: Option<&Path>) -> Result<ExactCountStore, Failure> {
    let store = ExactCountStore::default();
    if let Some(path) = cache {
        if path.exists() {
            store.load(path)?;
        }
    }
    Ok(store)
}

/// Runs the tool on `args` (including the program name), writing the report
/// to `out` (unless `--output` is given) and diagnostics to `err`. Returns
/// the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, status)) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &text),
                None => out.write_all(text.as_bytes()),
            };
            if status != 0 {
                let _ = writeln!(err, "error: self-check failed");
            }
            match written {
                Ok(()) => status,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write report: {e}");
                    1
                }
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

/// Returns the rendered report and the exit status.
fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let start = Instant::now();
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let tables = CountTables::new(
        load_store(cache.as_deref())?,
        WrightTable::new(wright_limit(&cli.command)),
    );
    let before = tables.store.len();
    let report = match &cli.command {
        Command::Eval(a) => commands::eval(a)?,
        Command::Counts(a) => commands::counts(a, &tables)?,
        Command::Moments(a) => commands::moments(a, &tables)?,
        Command::Tails(a) => commands::tails(a, &tables)?,
        Command::Simulate(a) => commands::simulate(a, cli.threads)?,
        Command::Compare(a) => commands::compare(a, cli.threads, &tables)?,
        Command::Validate(a) => commands::validate(a)?,
    };
    if let Some(path) = &cache {
        if tables.store.len() > before {
            tables.store.save(path)?;
        }
    }
    let failed_checks = report
        .fields
        .iter()
        .any(|(k, v)| k == "all_passed" && matches!(v, Cell::Bool(false)));
    let text = match cli.format {
        Format::Json => {
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            let mut s = serde_json::to_string_pretty(&report.to_json(runtime_ms))
                .map_err(|e| Failure::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    };
    Ok((text, if failed_checks { 1 } else { 0 }))
}
