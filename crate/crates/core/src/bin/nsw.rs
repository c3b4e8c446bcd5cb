use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use nsw_core::error::NswError;
use nsw_core::gen::random_instance;
use nsw_core::io::{emit_instance, parse_instance, SolutionFile};
use nsw_core::model::Instance;
use nsw_core::oracle::{brute_force, DEFAULT_BUDGET};
use nsw_core::solver::{solve, SolveOptions, SolveStats};

const EXIT_PARSE: u8 = 1;
const EXIT_INVARIANT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "nsw", version, about = "Exact max-NSW allocations for {1, p/2} valuations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and print the solution as JSON.
    Solve {
        path: PathBuf,
        /// Include the step trace in the solution.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Write the solution here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare the solver against exhaustive search.
    Verify {
        path: PathBuf,
        /// Largest number of allocations to enumerate.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Print a random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Time the solver over a ladder of sizes and print CSV.
    Bench {
        /// Comma-separated `NxM` sizes.
        #[arg(long, default_value = "5x15,10x30,20x60,30x100")]
        sizes: String,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("nsw: {msg}");
    ExitCode::from(code)
}

fn error_code(e: &NswError) -> u8 {
    match e {
        NswError::Parse { .. } | NswError::InvalidInstance(_) => EXIT_PARSE,
        NswError::BudgetExceeded { .. } => EXIT_BUDGET,
        NswError::InvalidAllocation(_) | NswError::Invariant { .. } => EXIT_INVARIANT,
    }
}

fn load(path: &Path) -> Result<Instance, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), ExitCode> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", p.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn cmd_solve(path: &Path, trace: bool, threads: usize, out: Option<&Path>) -> Result<ExitCode, ExitCode> {
    let inst = load(path)?;
    let opts = SolveOptions {
        threads: threads.max(1),
        trace,
        record_frozen: false,
    };
    let report = solve(&inst, &opts).map_err(|e| fail(error_code(&e), e))?;
    let sol = SolutionFile::from_report(&report, trace);
    sol.validate(&inst).map_err(|e| fail(EXIT_INVARIANT, e))?;
    write_out(out, &sol.to_json())?;
    if let Some(v) = report.violations.first() {
        return Err(fail(
            EXIT_INVARIANT,
            format!("{} structural check(s) failed, first `{}`: {}", report.violations.len(), v.id, v.detail),
        ));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(path: &Path, budget: u128) -> Result<ExitCode, ExitCode> {
    let inst = load(path)?;
    let oracle = brute_force(&inst, budget).map_err(|e| fail(error_code(&e), e))?;
    let report = solve(&inst, &SolveOptions::default()).map_err(|e| fail(error_code(&e), e))?;
    if report.key == oracle.best_key {
        println!("MATCH {} (empty bundles: {})", report.key, report.key.zeros());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("MISMATCH solver {} oracle {}", report.key, oracle.best_key);
        Err(ExitCode::from(EXIT_MISMATCH))
    }
}

fn parse_sizes(sizes: &str) -> Option<Vec<(usize, usize)>> {
    sizes
        .split(',')
        .map(|s| {
            let (n, m) = s.trim().split_once('x')?;
            Some((n.parse().ok()?, m.parse().ok()?))
        })
        .collect()
}

fn cmd_bench(sizes: &str, p: u64, density: f64, seed: u64) -> Result<ExitCode, ExitCode> {
    let sizes = parse_sizes(sizes).ok_or_else(|| fail(EXIT_PARSE, format!("bad --sizes {sizes:?}, expected e.g. 10x30,20x60")))?;
    println!("n,m,p,density,seconds,conversions,matching_solves,max_per_phase,bound,within_bound");
    let mut all_ok = true;
    for (n, m) in sizes {
        let inst = random_instance(seed, n, m, p, density).map_err(|e| fail(EXIT_PARSE, e))?;
        let t = Instant::now();
        let r = solve(&inst, &SolveOptions::default()).map_err(|e| fail(error_code(&e), e))?;
        let secs = t.elapsed().as_secs_f64();
        let bound = SolveStats::matching_bound(n);
        let ok = r.stats.max_matching_solves_per_phase <= bound && r.stats.conversions <= m;
        all_ok &= ok;
        println!(
            "{n},{m},{p},{density},{secs:.4},{},{},{},{bound},{ok}",
            r.stats.conversions, r.stats.matching_solves, r.stats.max_matching_solves_per_phase
        );
    }
    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(fail(EXIT_INVARIANT, "step counts exceeded the polynomial bound"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NSW_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve { path, trace, threads, out } => cmd_solve(&path, trace, threads, out.as_deref()),
        Command::Verify { path, budget } => cmd_verify(&path, budget),
        Command::Gen {
            seed,
            n,
            m,
            p,
            density,
            out,
        } => random_instance(seed, n, m, p, density)
            .map_err(|e| fail(EXIT_PARSE, e))
            .and_then(|inst| write_out(out.as_deref(), &emit_instance(&inst)))
            .map(|_| ExitCode::SUCCESS),
        Command::Bench { sizes, p, density, seed } => cmd_bench(&sizes, p, density, seed),
    };
    res.unwrap_or_else(|code| code)
}
