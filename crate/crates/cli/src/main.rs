//! Command-line front door: `verify` runs a check suite over a parameter
//! grid and exits nonzero on any violation; `run` executes one scenario and
//! writes its trace.

mod report;
mod scenarios;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Parser)]
#[command(
    name = "omegalab",
    version,
    about = "Exact dyadic laboratory for oracle-use bounds on limits of monotone approximations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite over a parameter grid; exit 0 iff clean.
    Verify(VerifyArgs),
    /// Execute one scenario and write its trace.
    Run(RunArgs),
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Suite: atomic, general, dominance, accumulation, truncsums,
    /// construction, coding, kc, reduction, condensation.
    pub suite: Option<String>,
    /// Suite name as a flag, equivalent to the positional argument.
    #[arg(long = "suite", value_name = "NAME")]
    pub suite_flag: Option<String>,
    /// Corpus seed, recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus size, where the suite is corpus-driven.
    #[arg(long)]
    pub count: Option<usize>,
    /// Inclusive grid "a..b" for the interval size n.
    #[arg(long)]
    pub n: Option<String>,
    /// Inclusive grid "a..b" for the left endpoint k.
    #[arg(long)]
    pub k: Option<String>,
    /// Inclusive grid "a..b" for the demand offset c.
    #[arg(long)]
    pub c: Option<String>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct RunArgs {
    /// Scenario: hload, construct, encode, reduce.
    pub scenario: String,
    /// Demand map, "x+<c>" or "x+g" (the latter takes the table from --g).
    #[arg(long)]
    pub h: Option<String>,
    /// Use table as a JSON array of values at positions 1, 2, ...
    #[arg(long)]
    pub g: Option<String>,
    /// Game interval "lo..hi", meaning digit positions (lo, hi].
    #[arg(long)]
    pub interval: Option<String>,
    /// Move order: alpha_first (default) or beta_first.
    #[arg(long)]
    pub order: Option<String>,
    /// Construction plan JSON file.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Build the standard ladder plan with this many blocks instead of
    /// reading --plan.
    #[arg(long)]
    pub e_count: Option<usize>,
    /// Adversary pool, comma-separated "policy[:count]" with policies
    /// least_effort, uncapped, silent; defaults to least_effort for every
    /// requirement.
    #[arg(long)]
    pub adversaries: Option<String>,
    /// Stage ceiling; defaults to the plan's standard budget.
    #[arg(long)]
    pub stage_budget: Option<u64>,
    /// Rows kept in the trace; the digest always covers every stage.
    #[arg(long)]
    pub record_limit: Option<usize>,
    /// Approximation sequence JSON file (encode scenario).
    #[arg(long)]
    pub approx: Option<PathBuf>,
    /// Prefix length or coded digit count.
    #[arg(long)]
    pub n: Option<u64>,
    /// Oracle-side approximation JSON file (reduce scenario).
    #[arg(long)]
    pub omega: Option<PathBuf>,
    /// Reduced-side approximation JSON file; defaults to the omega file.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Trace path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Pool size from OMEGALAB_WORKERS; 0 leaves the default.
fn init_workers() -> usize {
    let requested = std::env::var("OMEGALAB_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    match requested {
        Some(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            n
        }
        None => 0,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = init_workers();
    let outcome = match cli.cmd {
        Cmd::Verify(args) => suites::run(args, workers),
        Cmd::Run(args) => scenarios::run(args),
    };
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(violations) => {
            eprintln!("{violations} violation(s)");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
