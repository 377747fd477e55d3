use std::path::PathBuf;
use std::process::ExitCode;

use beesynth::costs::{CostKind, CostModel, Network, Oracle};
use beesynth::grammar::load_grammar;
use beesynth::harness::{self, RunConfig};
use beesynth::learn::run_probe;
use beesynth::search::{aggregate_trace, synthesize, Engine, Outcome, SearchResult};
use beesynth::Error;
use clap::{Args, Parser, Subcommand};

const EXIT_SOLVED: u8 = 0;
const EXIT_UNSOLVED: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "beesynth", version, about = "Cost-ordered bottom-up program synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a program that satisfies one task.
    Synth(SynthArgs),
    /// Run an engine over every task in a suite directory.
    Bench(BenchArgs),
    /// Turn benchmark results into cumulative solved-task curves.
    Curves(CurvesArgs),
}

#[derive(Args)]
struct Common {
    /// bus, guided, heap, brute or bee.
    #[arg(long)]
    engine: Engine,
    /// size, probe, probe-rounded, bustle-binned, bustle-spline or u.
    #[arg(long)]
    cost: CostKind,
    /// Restart constant of the learning loop.
    #[arg(long, default_value_t = 6)]
    probe_d: u32,
    /// Run guided + probe-rounded and bee + probe without PCFG learning.
    #[arg(long)]
    no_learn: bool,
    #[arg(long)]
    max_evals: Option<u64>,
    #[arg(long)]
    no_equivalence: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    grammar: PathBuf,
    #[arg(long)]
    task: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Print one line per iteration: index, popped cost, programs generated, bank size.
    #[arg(long)]
    trace: bool,
    /// Feed-forward weight file replacing the heuristic oracle.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Per-task wall-clock budget in seconds.
    #[arg(long)]
    timeout: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Oracle weight files, used one per repetition.
    #[arg(long)]
    weights: Vec<PathBuf>,
    /// Tasks run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurvesArgs {
    /// A results directory written by `bench`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_SOLVED });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
        Command::Curves(a) => curves(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run_config(common: &Common, timeout: f64) -> RunConfig {
    RunConfig {
        learn: !common.no_learn,
        probe_d: common.probe_d as f64,
        max_evals: common.max_evals,
        equivalence: !common.no_equivalence,
        ..RunConfig::new(common.engine, common.cost, timeout)
    }
}

fn synth(a: SynthArgs) -> Result<u8, Error> {
    let pcfg = load_grammar(&a.grammar)?;
    let task = harness::load_task(&a.task)?;
    let config = run_config(&a.common, a.timeout.unwrap_or(f64::INFINITY));
    let mut search = config.search_config();
    if a.timeout.is_none() {
        search.budget.timeout = None;
    }
    search.trace = a.trace;
    let result = match config.learn_engine() {
        Some(engine) => {
            let learned = run_probe(&pcfg, &task, config.probe_d, engine, &search)?;
            if a.trace {
                for r in &learned.rounds {
                    let probs: Vec<String> = r.probabilities.iter().map(|p| format!("{p:.6}")).collect();
                    println!("learn {} lim={:.4} psol={} p=[{}]", r.iteration, r.lim, r.psol, probs.join(" "));
                }
            }
            learned.result
        }
        None => {
            let oracle = a.weights.as_ref().map(Network::load).transpose()?.map(Oracle::Network);
            let model = CostModel::new(a.common.cost, &pcfg, oracle);
            synthesize(a.common.engine, &pcfg, &task, &model, &search)?
        }
    };
    if a.trace {
        print_trace(&result);
    }
    println!("outcome: {}", result.outcome.name());
    println!("evaluations: {}", result.evaluations);
    println!("generations: {}", result.generations);
    println!("elapsed_s: {:.3}", result.elapsed.as_secs_f64());
    if let Some(p) = result.solution() {
        println!("size: {}", p.size());
        if let Some(c) = result.solution_cost {
            println!("cost: {c:.4}");
        }
        println!("solution: {}", p.to_prefix(pcfg.grammar()));
    }
    Ok(match result.outcome {
        Outcome::Solved(_) => EXIT_SOLVED,
        Outcome::Timeout | Outcome::MemoryExhausted => EXIT_TIMEOUT,
        Outcome::Exhausted => EXIT_UNSOLVED,
    })
}

fn print_trace(result: &SearchResult) {
    println!("iteration\tcost\tgenerated\tbank");
    for row in aggregate_trace(&result.trace) {
        println!("{}\t{:.4}\t{}\t{}", row.iteration, row.cost, row.generated, row.bank);
    }
}

fn bench(a: BenchArgs) -> Result<u8, Error> {
    let suite = harness::load_suite(&a.suite)?;
    let config = RunConfig {
        reps: a.reps,
        weights: a.weights.clone(),
        jobs: a.jobs,
        ..run_config(&a.common, a.timeout)
    };
    let records = harness::run_benchmark(&suite, &config)?;
    harness::write_results(&a.out, &a.suite, &config, &records)?;
    for r in &records {
        println!(
            "{}\t{}\t{}\t{}\t{:.3}\t{}",
            r.task, r.rep, r.outcome, r.evaluations, r.elapsed_s, r.solution
        );
    }
    for s in harness::summarize(&records) {
        println!(
            "{} {}: solved {:.2} ± {:.2} of {}",
            s.engine, s.cost_model, s.mean_solved, s.sd_solved, s.tasks
        );
    }
    Ok(EXIT_SOLVED)
}

fn curves(a: CurvesArgs) -> Result<u8, Error> {
    let records = harness::read_records(&a.input)?;
    harness::write_curves(&a.out, &harness::emit_curves(&records))?;
    Ok(EXIT_SOLVED)
}
