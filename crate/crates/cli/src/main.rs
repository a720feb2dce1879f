//! `chrono-allsat`: enumerate, verify, generate and benchmark.
//!
//! Exit codes: 0 complete enumeration or exact cover, 1 no models or a failed
//! verification, 2 time or step budget hit, 3 usage, parse or I/O error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use chrono_allsat::bench::{append_stats_csv, bench_files, collect_corpus, write_bench_csv, BenchRow};
use chrono_allsat::generators::{gen_binary, gen_rnd3sat, Rnd3SatSpec, DEFAULT_RATIO};
use chrono_allsat::oracle::{verify_against_count, verify_cover_with_bound, OracleError, DEFAULT_BOUND};
use chrono_allsat::search::{FnSink, SinkError};
use chrono_allsat::{
    enumerate, parse_dimacs, write_dimacs, CnfFormula, HeuristicConfig, Lit, PartialModel,
    Polarity, ShrinkMode, SolverConfig, Status, Var,
};

const EXIT_OK: u8 = 0;
const EXIT_NO_MODELS: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "chrono-allsat", version, about = "Disjoint AllSAT enumeration of partial models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate disjoint partial models of a DIMACS CNF file.
    Solve(SolveArgs),
    /// Check that `v` lines form an exact disjoint cover of a formula.
    Verify(VerifyArgs),
    /// Write the binary-clauses family (x1 ∨ xn) ∧ (x2 ∨ x(n-1)) ∧ ...
    GenBinary(GenBinaryArgs),
    /// Write a random 3-SAT instance.
    GenRnd3sat(GenRnd3satArgs),
    /// Solve every .cnf file of a directory under each shrink mode; write CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ShrinkArg {
    Dynamic,
    Conservative,
    None,
}

impl From<ShrinkArg> for ShrinkMode {
    fn from(s: ShrinkArg) -> ShrinkMode {
        match s {
            ShrinkArg::Dynamic => ShrinkMode::Dynamic,
            ShrinkArg::Conservative => ShrinkMode::Conservative,
            ShrinkArg::None => ShrinkMode::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    #[value(name = "false")]
    False,
    #[value(name = "true")]
    True,
    Saved,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Polarity {
        match p {
            PolarityArg::False => Polarity::False,
            PolarityArg::True => Polarity::True,
            PolarityArg::Saved => Polarity::Saved,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Decision polarity.
    #[arg(long, value_enum, default_value = "false")]
    polarity: PolarityArg,
    /// Fixed decision order, e.g. 3,2,1. For reproducing examples, not speed.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<u32>>,
    /// Weight of the occurrence count in the branching score.
    #[arg(long, default_value_t = 1.0)]
    w_occ: f64,
    /// Weight of the conflict activity in the branching score.
    #[arg(long, default_value_t = 100.0)]
    w_act: f64,
    /// Activity decay per conflict, in (0, 1).
    #[arg(long, default_value_t = 0.95)]
    decay: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Maximum number of search steps.
    #[arg(long)]
    step_budget: Option<u64>,
}

impl SearchArgs {
    fn config(&self, shrink: ShrinkMode, num_vars: Option<usize>) -> Result<SolverConfig, String> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(format!("--decay must lie in (0, 1), got {}", self.decay));
        }
        let time_budget = match self.timeout {
            Some(t) if !(t.is_finite() && t >= 0.0) => {
                return Err(format!("--timeout must be a non-negative number, got {}", t))
            }
            t => t.map(Duration::from_secs_f64),
        };
        let pinned_order = match &self.order {
            None => None,
            Some(order) => {
                if let Some(&bad) = order
                    .iter()
                    .find(|&&v| v == 0 || num_vars.is_some_and(|n| v as usize > n))
                {
                    return Err(format!("--order names variable {} outside the formula", bad));
                }
                Some(order.iter().map(|&v| Var::from_dimacs(v)).collect())
            }
        };
        Ok(SolverConfig {
            shrink,
            heuristic: HeuristicConfig {
                polarity: self.polarity.into(),
                w_occ: self.w_occ,
                w_act: self.w_act,
                decay: self.decay,
                pinned_order,
            },
            step_budget: self.step_budget,
            time_budget,
            audit: false,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// DIMACS file, or - for standard input.
    file: PathBuf,
    #[arg(long, value_enum, default_value = "conservative")]
    shrink: ShrinkArg,
    #[command(flatten)]
    search: SearchArgs,
    /// Print only the summary line.
    #[arg(long)]
    no_models: bool,
    /// Append a CSV row of statistics to this file.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// DIMACS file.
    file: PathBuf,
    /// File of `v` lines as printed by `solve`; other lines are ignored.
    models: PathBuf,
    /// Compare against this model count instead of enumerating assignments.
    /// Checks disjointness and the covered total only.
    #[arg(long)]
    count: Option<BigUint>,
    /// Largest variable count checked by brute force.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: usize,
}

#[derive(Args)]
struct GenBinaryArgs {
    /// Number of variables (even).
    n: usize,
    /// Output file; standard output if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenRnd3satArgs {
    /// Number of variables (at least 3).
    n: usize,
    /// Clauses per variable.
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    ratio: f64,
    #[arg(long, env = "SOLVER_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .cnf files.
    corpus: PathBuf,
    /// Shrink modes to run on every file.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dynamic,conservative,none")]
    modes: Vec<ShrinkArg>,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV output file; standard output if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// An error reported on stderr with exit code 3.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| Failure(format!("{}: {}", path.display(), e)))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {}", p.display(), e))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Complete => EXIT_OK,
        Status::Unsat => EXIT_NO_MODELS,
        Status::Timeout | Status::BudgetExhausted => EXIT_BUDGET,
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let text = read_input(&args.file)?;
    let file = args.file.display().to_string();
    let shrink = ShrinkMode::from(args.shrink);
    let formula = match parse_dimacs(&text) {
        Ok(f) => f,
        Err(e) if e.is_empty_clause() => {
            println!("s unsat models=0 coverage=0");
            if let Some(path) = &args.stats {
                append_stats_csv(path, &BenchRow::empty(&file, shrink, "unsat", String::new()))?;
            }
            return Ok(EXIT_NO_MODELS);
        }
        Err(e) => return Err(Failure(format!("{}: {}", file, e))),
    };
    let config = args.search.config(shrink, Some(formula.num_vars())).map_err(Failure)?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let print = !args.no_models;
    let mut sink = FnSink(|m: &PartialModel| -> Result<(), SinkError> {
        if print {
            writeln!(out, "{}", m)?;
        }
        Ok(())
    });
    let summary = enumerate(&formula, config, &mut sink)?;
    println!(
        "s {} models={} coverage={}",
        summary.status, summary.partial_models, summary.coverage
    );
    if let Some(path) = &args.stats {
        append_stats_csv(path, &BenchRow::from_summary(&file, shrink, &summary))?;
    }
    Ok(exit_code(summary.status))
}

/// Reads `v` lines. A model may span several `v` lines and ends at `0`.
fn parse_models(text: &str, num_vars: usize) -> Result<Vec<PartialModel>, Failure> {
    let mut models = Vec::new();
    let mut current = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix('v') else {
            continue;
        };
        for token in rest.split_whitespace() {
            let x: i32 = token
                .parse()
                .map_err(|_| Failure(format!("models line {}: bad literal {:?}", k + 1, token)))?;
            if x == 0 {
                models.push(PartialModel::new(std::mem::take(&mut current)));
            } else if x.unsigned_abs() as usize > num_vars {
                return Err(Failure(format!(
                    "models line {}: literal {} outside {} variables",
                    k + 1,
                    x,
                    num_vars
                )));
            } else {
                current.push(Lit::from_dimacs(x));
            }
        }
    }
    if !current.is_empty() {
        return Err(Failure("models file ends inside a model".to_string()));
    }
    Ok(models)
}

fn describe(lits: &[Lit]) -> String {
    lits.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let text = read_input(&args.file)?;
    let models_text = read_input(&args.models)?;
    let formula = match parse_dimacs(&text) {
        Ok(f) => f,
        Err(e) if e.is_empty_clause() => {
            // No assignment satisfies an empty clause: the only exact cover is empty.
            let header_vars = text
                .lines()
                .find_map(|l| l.trim().strip_prefix("p cnf"))
                .and_then(|h| h.split_whitespace().next()?.parse().ok())
                .unwrap_or(0);
            let models = parse_models(&models_text, header_vars)?;
            return Ok(if models.is_empty() {
                println!("verify ok models=0 coverage=0 count=0");
                EXIT_OK
            } else {
                println!("verify failed: formula has no models, got {}", models.len());
                EXIT_NO_MODELS
            });
        }
        Err(e) => return Err(Failure(format!("{}: {}", args.file.display(), e))),
    };
    let models = parse_models(&models_text, formula.num_vars())?;

    if let Some(count) = &args.count {
        let check = match verify_against_count(formula.num_vars(), &models, count) {
            Ok(c) => c,
            Err(e) => return Ok(verify_failed(&e)),
        };
        if check.is_exact() {
            println!("verify ok models={} coverage={} count={}", models.len(), check.covered, count);
            return Ok(EXIT_OK);
        }
        println!("verify failed: coverage={} count={}", check.covered, count);
        if let Some((i, j)) = check.first_overlap {
            println!("overlap: models {} and {} share an assignment", i + 1, j + 1);
        }
        return Ok(EXIT_NO_MODELS);
    }

    let report = match verify_cover_with_bound(&formula, &models, args.bound) {
        Ok(r) => r,
        Err(e @ OracleError::BoundExceeded { .. }) => return Err(Failure(e.to_string())),
        Err(e) => return Ok(verify_failed(&e)),
    };
    if report.is_exact() {
        println!(
            "verify ok models={} coverage={} count={}",
            models.len(),
            report.covered,
            report.model_count
        );
        return Ok(EXIT_OK);
    }
    println!(
        "verify failed: coverage={} count={} cover={} disjoint={}",
        report.covered, report.model_count, report.cover_ok, report.disjoint_ok
    );
    if let Some(w) = report.first_violation {
        println!(
            "witness: {} covered={} model={}",
            describe(&w.assignment),
            w.times_covered,
            if w.is_model { "yes" } else { "no" }
        );
    }
    Ok(EXIT_NO_MODELS)
}

fn verify_failed(e: &OracleError) -> u8 {
    println!("verify failed: {}", e);
    EXIT_NO_MODELS
}

fn cmd_gen_binary(args: &GenBinaryArgs) -> Result<u8, Failure> {
    let f = gen_binary(args.n)?;
    write_output(args.output.as_deref(), &write_dimacs(&f))?;
    Ok(EXIT_OK)
}

fn cmd_gen_rnd3sat(args: &GenRnd3satArgs) -> Result<u8, Failure> {
    let spec = Rnd3SatSpec {
        n: args.n,
        ratio: args.ratio,
        seed: args.seed,
    };
    let f: CnfFormula = gen_rnd3sat(&spec)?;
    let text = format!(
        "c rnd3sat n={} ratio={} seed={}\n{}",
        spec.n,
        spec.ratio,
        spec.seed,
        write_dimacs(&f)
    );
    write_output(args.output.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let files = collect_corpus(&args.corpus)
        .map_err(|e| Failure(format!("{}: {}", args.corpus.display(), e)))?;
    let modes: Vec<ShrinkMode> = args.modes.iter().map(|&m| m.into()).collect();
    let config = args.search.config(ShrinkMode::default(), None).map_err(Failure)?;
    let rows = bench_files(&files, &modes, &config);
    let mut buffer = Vec::new();
    write_bench_csv(&mut buffer, &rows)?;
    write_output(args.output.as_deref(), &String::from_utf8(buffer)?)?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::GenBinary(a) => cmd_gen_binary(a),
        Command::GenRnd3sat(a) => cmd_gen_rnd3sat(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(message)) => {
            eprintln!("chrono-allsat: {}", message);
            ExitCode::from(EXIT_USAGE)
        }
    }
}
