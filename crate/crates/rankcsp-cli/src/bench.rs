use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;

use rankcsp::{
    derive_fas, exact_opt, gen_planted, kendall_tau_mod_reversal, kendall_tau_rankings,
    order::format_pos, parse_ratio, Family, InstanceFile, Pos, PtasConfig, Ranking,
};

use crate::commands;

/// Sweep a grid of planted instances and emit one CSV row per run.
#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Constraint family to generate.
    #[arg(long, default_value = "betweenness")]
    family: String,
    /// Constraint arity; defaults to the family's natural arity.
    #[arg(long)]
    k: Option<usize>,
    /// Domain sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Noise rates, comma separated rationals.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    noise: Vec<String>,
    /// Approximation parameters, comma separated rationals.
    #[arg(long, value_delimiter = ',', default_value = "1/5")]
    eps: Vec<String>,
    /// Number of seeds per cell; seeds run 0..count.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Guess mode passed to the solver (auto|exhaustive|oracle|restarts:R).
    #[arg(long, default_value = "oracle")]
    guess: String,
    /// Core solver strategy (auto|exact|local|pivot-local).
    #[arg(long, default_value = "auto")]
    fast: String,
    /// First stage backend (auto|exact|heuristic).
    #[arg(long, default_value = "heuristic")]
    additive: String,
    /// Threshold constants (paper|scaled:G).
    #[arg(long, default_value = "paper")]
    constants: String,
    /// Compute the exact optimum for rows with n at or below this.
    #[arg(long, default_value_t = 10)]
    opt_cap: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) const CSV_HEADER: &str = "instance,n,k,family,rho,eps,guess_mode,fast_solver,\
cost_alg,cost_opt,ratio,exact_zero_match,kendall_to_planted,kendall_to_opt,\
took_additive_branch,u_size,wall_ms,seed,frac_displaced,wbar_pair_min,wbar_pair_max,d_scaled";

struct Job {
    n: usize,
    rho: Pos,
    eps: Pos,
    seed: u64,
}

struct Row {
    key: (String, u64, String),
    line: String,
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn kendall(family: Family, a: &Ranking, b: &Ranking) -> anyhow::Result<u64> {
    Ok(if family.reversal_symmetric() {
        kendall_tau_mod_reversal(a, b)?
    } else {
        kendall_tau_rankings(a, b)?
    })
}

/// Fraction of vertices whose rank differs from the planted ranking, after
/// flipping the planted order when its reversal sits closer.
fn frac_displaced(family: Family, pi: &Ranking, planted: &Ranking) -> anyhow::Result<f64> {
    let mut reference = planted.clone();
    if family.reversal_symmetric() {
        let rev = planted.reversed();
        if kendall_tau_rankings(pi, &rev)? < kendall_tau_rankings(pi, planted)? {
            reference = rev;
        }
    }
    let n = pi.len();
    let moved = (0..n)
        .filter(|&v| pi.rank_of(v) != reference.rank_of(v))
        .count();
    Ok(moved as f64 / n as f64)
}

fn run_job(args: &BenchArgs, family: Family, k: usize, job: &Job) -> anyhow::Result<Row> {
    let planted = gen_planted(family, job.n, k, job.rho, job.seed)?;
    let file = InstanceFile::from(planted);
    let planted_ranking = file.planted.clone().expect("generated with a plant");

    let config = PtasConfig {
        eps: job.eps,
        seed: job.seed,
        guess: commands::parse_guess(&args.guess, &file, args.opt_cap)?,
        fast: commands::parse_fast(&args.fast)?,
        additive: commands::parse_additive(&args.additive)?,
        constants: commands::parse_constants(&args.constants)?,
        caps: Default::default(),
    };
    let clock = Instant::now();
    let out = rankcsp::run_ptas(&file.system, &config)?;
    let wall_ms = clock.elapsed().as_millis();

    let opt = if job.n <= args.opt_cap {
        Some(exact_opt(&file.system, args.opt_cap)?)
    } else {
        None
    };
    let ratio = match &opt {
        Some(o) if o.opt_cost > 0 => {
            Some(format!("{:.4}", out.best_cost as f64 / o.opt_cost as f64))
        }
        _ => None,
    };
    let exact_zero_match = match &opt {
        Some(o) if o.opt_cost == 0 => Some((out.best_cost == 0).to_string()),
        _ => None,
    };
    let kendall_to_planted = kendall(family, &out.best, &planted_ranking)?;
    let kendall_to_opt = match &opt {
        Some(o) => Some(kendall(family, &out.best, &o.witness)?),
        None => None,
    };
    let d_scaled = match (&opt, kendall_to_opt) {
        (Some(o), Some(d)) if o.opt_cost > 0 => Some(format!(
            "{:.4}",
            d as f64 * (job.n as f64).powi(k as i32 - 2) / o.opt_cost as f64
        )),
        _ => None,
    };

    let best_stage = out
        .best_guess
        .and_then(|g| out.stages.iter().find(|s| s.guess_index == g));
    let u_size = best_stage.map(|s| s.unambiguous.len());
    let wbar = match best_stage {
        Some(s) => derive_fas(&file.system, &s.sigma2)?.cancel().pair_sum_range(),
        None => None,
    };
    let (wbar_min, wbar_max) = match wbar {
        Some((lo, hi)) => (Some(format_pos(&lo)), Some(format_pos(&hi))),
        None => (None, None),
    };
    let displaced = frac_displaced(family, &out.best, &planted_ranking)?;

    let instance = format!(
        "{}-n{}-k{}-rho{}d{}",
        family.as_str(),
        job.n,
        k,
        job.rho.numer(),
        job.rho.denom()
    );
    let eps_str = format_pos(&job.eps);
    let line = format!(
        "{instance},{n},{k},{family},{rho},{eps},{guess},{fast},{cost_alg},{cost_opt},{ratio},\
{zero},{ktp},{kto},{branch},{usize_},{wall_ms},{seed},{disp:.4},{wmin},{wmax},{dscaled}",
        n = job.n,
        family = family.as_str(),
        rho = format_pos(&job.rho),
        eps = eps_str,
        guess = args.guess,
        fast = args.fast,
        cost_alg = out.best_cost,
        cost_opt = opt_str(opt.as_ref().map(|o| o.opt_cost)),
        ratio = ratio.unwrap_or_default(),
        zero = exact_zero_match.unwrap_or_default(),
        ktp = kendall_to_planted,
        kto = opt_str(kendall_to_opt),
        branch = out.took_additive_branch,
        usize_ = opt_str(u_size),
        seed = job.seed,
        disp = displaced,
        wmin = wbar_min.unwrap_or_default(),
        wmax = wbar_max.unwrap_or_default(),
        dscaled = d_scaled.unwrap_or_default(),
    );
    Ok(Row {
        key: (instance, job.seed, eps_str),
        line,
    })
}

pub(crate) fn run(args: BenchArgs) -> anyhow::Result<ExitCode> {
    if let Ok(threads) = std::env::var("RANKCSP_THREADS") {
        let threads: usize = threads.parse().context("RANKCSP_THREADS")?;
        // Ignore the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let family = Family::parse(&args.family)?;
    let k = args.k.unwrap_or_else(|| commands::default_arity(family));
    let noises: Vec<Pos> = args
        .noise
        .iter()
        .map(|s| parse_ratio(s))
        .collect::<Result<_, _>>()?;
    let epsilons: Vec<Pos> = args
        .eps
        .iter()
        .map(|s| parse_ratio(s))
        .collect::<Result<_, _>>()?;

    let mut jobs = Vec::new();
    for &n in &args.n {
        for &rho in &noises {
            for &eps in &epsilons {
                for seed in 0..args.seeds {
                    jobs.push(Job { n, rho, eps, seed });
                }
            }
        }
    }

    let mut rows: Vec<Row> = jobs
        .par_iter()
        .map(|job| run_job(&args, family, k, job))
        .collect::<anyhow::Result<_>>()?;
    rows.sort_by(|a, b| a.key.cmp(&b.key));

    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.line);
        text.push('\n');
    }
    commands::write_out(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
