//! `rankcsp`: generate, solve, verify and benchmark ranking constraint
//! instances. Every subcommand emits machine-readable output (JSON, or CSV
//! for `bench`) and failures land on stderr as one JSON object.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rankcsp", version, about = "ranking CSP toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted instance file.
    Gen(GenArgs),
    /// Run the approximation pipeline on an instance file.
    Solve(SolveArgs),
    /// Exact optimum by branch and bound (small n).
    Exact(ExactArgs),
    /// Verify structural identities of an instance file.
    Check(CheckArgs),
    /// Sweep a parameter grid and emit one CSV row per run.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// betweenness | kfast | kbetweenness
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Defaults to the family's smallest supported arity.
    #[arg(long)]
    k: Option<usize>,
    /// Corruption probability per constraint, e.g. 0.05 or 1/20.
    #[arg(long, default_value = "0")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, default_value = "1/5")]
    eps: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// auto | exhaustive | oracle | restarts:R. auto plays oracle when the
    /// file embeds a planted ranking, else restarts:32.
    #[arg(long, default_value = "auto")]
    guess: String,
    /// auto | exact | local | pivot-local
    #[arg(long, default_value = "auto")]
    fast: String,
    /// auto | exact | heuristic
    #[arg(long, default_value = "auto")]
    additive: String,
    /// paper | scaled:G for a rational G
    #[arg(long, default_value = "paper")]
    constants: String,
    /// Include every candidate ranking in the output.
    #[arg(long)]
    emit_candidates: bool,
    /// Size limit for the exact FAS dynamic program.
    #[arg(long, default_value_t = 20)]
    exact_cap: usize,
    /// Size limit for branch-and-bound (oracle guesses, exact additive).
    #[arg(long, default_value_t = 10)]
    oracle_cap: usize,
    #[arg(long, default_value_t = 10_000)]
    max_guesses: u64,
    #[arg(long, default_value_t = 10_000)]
    max_local_passes: u64,
}

#[derive(Args)]
struct ExactArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    cap: usize,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
}

fn error_kind(e: &rankcsp::Error) -> &'static str {
    use rankcsp::Error::*;
    match e {
        InvalidArity { .. } => "invalid_arity",
        DomainTooSmall { .. } => "domain_too_small",
        VertexOutOfRange { .. } => "vertex_out_of_range",
        DuplicateVertex { .. } => "duplicate_vertex",
        NotARanking => "not_a_ranking",
        PositionCollision { .. } => "position_collision",
        DomainMismatch { .. } => "domain_mismatch",
        InvalidEpsilon { .. } => "invalid_epsilon",
        InvalidNoise { .. } => "invalid_noise",
        IncompatibleFamily { .. } => "incompatible_family",
        PayloadOutOfSubset { .. } => "payload_out_of_subset",
        InvalidPayload { .. } => "invalid_payload",
        CountMismatch { .. } => "count_mismatch",
        DuplicateSubset { .. } => "duplicate_subset",
        Parse { .. } => "parse",
        NegativeWeight { .. } => "negative_weight",
        NonzeroDiagonal { .. } => "nonzero_diagonal",
        SizeCap { .. } => "size_cap",
        BudgetExceeded { .. } => "budget_exceeded",
        BadRational { .. } => "bad_rational",
        InvalidConfig { .. } => "invalid_config",
    }
}

fn emit_error(kind: &str, message: &str) {
    let payload = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{payload}");
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes, like other line tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Gen(args) => commands::gen(args),
        Cmd::Solve(args) => commands::solve(args),
        Cmd::Exact(args) => commands::exact(args),
        Cmd::Check(args) => commands::check(args),
        Cmd::Bench(args) => bench::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let kind = e
                .downcast_ref::<rankcsp::Error>()
                .map(error_kind)
                .unwrap_or("cli");
            emit_error(kind, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
