//! Benchmark orchestration: suite loading, per-task runs, result files and
//! cumulative solved-task curves.

mod curves;

pub use curves::{emit_curves, read_curves, write_curves, CurvePoint};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costs::{CostKind, CostModel, Network, Oracle};
use crate::error::{Error, Result};
use crate::grammar::{load_grammar, Pcfg};
use crate::interp::{output_signature, Domain, Program, Task};
use crate::learn::{run_probe, LearnEngine};
use crate::search::{synthesize, Budget, Engine, SearchConfig, SearchResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const CONFIG_FILE: &str = "config.json";
const GRAMMAR_SUFFIX: &str = ".grammar.json";

/// Loads a task file and checks it has at least one example.
pub fn load_task(path: impl AsRef<Path>) -> Result<Task> {
    Task::load(path)
}

/// A task paired with the grammar it is searched over.
#[derive(Debug, Clone)]
pub struct SuiteTask {
    pub task: Task,
    pub pcfg: Pcfg,
    pub path: PathBuf,
}

fn domain_name(d: Domain) -> &'static str {
    match d {
        Domain::Strings => "strings",
        Domain::Bitvectors => "bitvectors",
    }
}

/// Reads every `*.json` task in `dir`, sorted by task name. A task uses
/// `<stem>.grammar.json` when present, else `<domain>.grammar.json`.
pub fn load_suite(dir: impl AsRef<Path>) -> Result<Vec<SuiteTask>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".json") && !name.ends_with(GRAMMAR_SUFFIX)
        })
        .collect();
    paths.sort();
    let mut suite = Vec::with_capacity(paths.len());
    for path in paths {
        let task = load_task(&path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let own = dir.join(format!("{stem}{GRAMMAR_SUFFIX}"));
        let grammar_path = if own.exists() {
            own
        } else {
            dir.join(format!("{}{GRAMMAR_SUFFIX}", domain_name(task.domain)))
        };
        let pcfg = load_grammar(&grammar_path)?;
        suite.push(SuiteTask { task, pcfg, path });
    }
    if suite.is_empty() {
        return Err(Error::Config(format!("no tasks in {}", dir.display())));
    }
    suite.sort_by(|a, b| a.task.name.cmp(&b.task.name));
    Ok(suite)
}

/// Everything needed to reproduce a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: String,
    pub cost_model: String,
    pub timeout_s: f64,
    pub max_evals: Option<u64>,
    pub reps: usize,
    /// Probe's restart loop for guided + probe-rounded and bee + probe.
    pub learn: bool,
    pub probe_d: f64,
    pub equivalence: bool,
    /// Oracle weight files, one per repetition (cycled); empty means the heuristic.
    pub weights: Vec<PathBuf>,
    /// Tasks run concurrently.
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(engine: Engine, cost: CostKind, timeout_s: f64) -> RunConfig {
        RunConfig {
            engine: engine.name().into(),
            cost_model: cost.name().into(),
            timeout_s,
            max_evals: None,
            reps: 1,
            learn: true,
            probe_d: 6.0,
            equivalence: true,
            weights: Vec::new(),
            jobs: 1,
        }
    }

    pub fn engine(&self) -> Result<Engine> {
        self.engine.parse()
    }

    pub fn cost(&self) -> Result<CostKind> {
        self.cost_model.parse()
    }

    /// Cost model name as recorded: plain BUS always searches by size.
    pub fn recorded_cost(&self) -> String {
        match self.engine() {
            Ok(Engine::Bus) => CostKind::Size.name().into(),
            _ => self.cost_model.clone(),
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            equivalence: self.equivalence,
            budget: Budget {
                max_evals: self.max_evals,
                ..Budget::seconds(self.timeout_s)
            },
            ..SearchConfig::default()
        }
    }

    /// The learning loop that applies to this engine and cost model, if any.
    pub fn learn_engine(&self) -> Option<LearnEngine> {
        if !self.learn {
            return None;
        }
        match (self.engine().ok()?, self.cost().ok()?) {
            (Engine::Guided, CostKind::ProbeRounded) => Some(LearnEngine::Guided),
            (Engine::Bee, CostKind::Probe) => Some(LearnEngine::Bee),
            _ => None,
        }
    }

    fn oracle(&self, rep: usize) -> Result<Option<Oracle>> {
        if self.weights.is_empty() {
            return Ok(None);
        }
        let path = &self.weights[rep % self.weights.len()];
        Ok(Some(Oracle::Network(Network::load(path)?)))
    }

    fn validate(&self) -> Result<()> {
        self.engine()?;
        self.cost()?;
        if !(self.timeout_s >= 0.0) {
            return Err(Error::Config(format!("timeout must be non-negative, got {}", self.timeout_s)));
        }
        if self.reps == 0 {
            return Err(Error::Config("at least one repetition is needed".into()));
        }
        if self.learn_engine().is_some() && !(self.probe_d >= 1.0) {
            return Err(Error::Config(format!("restart constant must be at least 1, got {}", self.probe_d)));
        }
        Ok(())
    }
}

/// One task attempt. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub engine: String,
    pub cost_model: String,
    /// `solved`, `timeout`, `memory`, `exhausted` or `error`.
    pub outcome: String,
    pub evaluations: u64,
    pub generations: u64,
    pub elapsed_s: f64,
    /// Prefix notation; empty when unsolved.
    pub solution: String,
    pub solution_size: Option<usize>,
    pub solution_cost: Option<f64>,
    pub rep: usize,
    /// Error message for `error` records.
    pub error: String,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.outcome == "solved"
    }
}

/// Runs one task once, turning failures into an `error` record.
pub fn run_task(item: &SuiteTask, config: &RunConfig, rep: usize) -> RunRecord {
    let start = Instant::now();
    let mut record = RunRecord {
        task: item.task.name.clone(),
        engine: config.engine.clone(),
        cost_model: config.recorded_cost(),
        outcome: "error".into(),
        evaluations: 0,
        generations: 0,
        elapsed_s: 0.0,
        solution: String::new(),
        solution_size: None,
        solution_cost: None,
        rep,
        error: String::new(),
    };
    match search(item, config, rep) {
        Ok(result) => {
            record.outcome = result.outcome.name().into();
            record.evaluations = result.evaluations;
            record.generations = result.generations;
            if let Some(p) = result.solution() {
                record.solution = p.to_prefix(item.pcfg.grammar());
                record.solution_size = Some(p.size());
                record.solution_cost = result.solution_cost;
            }
        }
        Err(e) => record.error = e.to_string(),
    }
    record.elapsed_s = start.elapsed().as_secs_f64();
    record
}

/// Runs the configured search on one task.
pub fn search(item: &SuiteTask, config: &RunConfig, rep: usize) -> Result<SearchResult> {
    let engine = config.engine()?;
    let kind = config.cost()?;
    let search = config.search_config();
    if let Some(learn) = config.learn_engine() {
        return Ok(run_probe(&item.pcfg, &item.task, config.probe_d, learn, &search)?.result);
    }
    let model = CostModel::new(kind, &item.pcfg, config.oracle(rep)?);
    synthesize(engine, &item.pcfg, &item.task, &model, &search)
}

/// Runs every task `config.reps` times. Records come back sorted by task
/// then repetition; solved records are re-verified against their tasks.
pub fn run_benchmark(suite: &[SuiteTask], config: &RunConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.reps)
        .flat_map(|rep| (0..suite.len()).map(move |i| (i, rep)))
        .collect();
    let next = AtomicUsize::new(0);
    let out = Mutex::new(Vec::with_capacity(jobs.len()));
    let workers = config.jobs.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, rep)) = jobs.get(k) else { break };
                let record = run_task(&suite[i], config, rep);
                out.lock().expect("record lock").push(record);
            });
        }
    });
    let mut records = out.into_inner().expect("record lock");
    records.sort_by(|a, b| a.task.cmp(&b.task).then(a.rep.cmp(&b.rep)));
    verify_records(suite, &records)?;
    Ok(records)
}

/// Checks that every solved record's program parses and solves its task.
pub fn verify_records(suite: &[SuiteTask], records: &[RunRecord]) -> Result<()> {
    for r in records.iter().filter(|r| r.solved()) {
        let item = suite
            .iter()
            .find(|t| t.task.name == r.task)
            .ok_or_else(|| Error::Task(format!("record for unknown task `{}`", r.task)))?;
        verify_solution(item, &r.solution)?;
    }
    Ok(())
}

pub fn verify_solution(item: &SuiteTask, solution: &str) -> Result<Program> {
    let grammar = item.pcfg.grammar();
    let p = Program::parse(solution, grammar)?;
    let sig = output_signature(grammar, &p, &item.task)?;
    if *sig != *item.task.outputs {
        return Err(Error::Task(format!(
            "{}: `{solution}` does not reproduce the outputs",
            item.task.name
        )));
    }
    Ok(p)
}

/// Solved-count statistics per (engine, cost model) over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub engine: String,
    pub cost_model: String,
    pub tasks: usize,
    pub reps: usize,
    pub solved_per_rep: Vec<usize>,
    pub mean_solved: f64,
    /// Sample standard deviation; 0 for a single repetition.
    pub sd_solved: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut keys: Vec<(String, String)> = records.iter().map(|r| (r.engine.clone(), r.cost_model.clone())).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(engine, cost_model)| {
            let mine: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.engine == engine && r.cost_model == cost_model)
                .collect();
            let reps = mine.iter().map(|r| r.rep + 1).max().unwrap_or(0);
            let mut solved_per_rep = vec![0; reps];
            for r in mine.iter().filter(|r| r.solved()) {
                solved_per_rep[r.rep] += 1;
            }
            let mut tasks: Vec<&str> = mine.iter().map(|r| r.task.as_str()).collect();
            tasks.sort_unstable();
            tasks.dedup();
            let n = reps as f64;
            let mean = solved_per_rep.iter().sum::<usize>() as f64 / n;
            let sd = if reps > 1 {
                (solved_per_rep.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            Summary {
                engine,
                cost_model,
                tasks: tasks.len(),
                reps,
                solved_per_rep,
                mean_solved: mean,
                sd_solved: sd,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    suite: PathBuf,
    config: RunConfig,
    summary: Vec<Summary>,
}

/// Writes `results.csv` and the `config.json` sidecar into `dir`.
pub fn write_results(dir: impl AsRef<Path>, suite: &Path, config: &RunConfig, records: &[RunRecord]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(RESULTS_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let sidecar = Sidecar {
        suite: suite.to_path_buf(),
        config: config.clone(),
        summary: summarize(records),
    };
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads `results.csv` from a results directory (or the file itself).
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = if path.is_dir() { path.join(RESULTS_FILE) } else { path.to_path_buf() };
    let mut r = csv::Reader::from_path(&file)?;
    let records = r.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(task: &str, outcome: &str, rep: usize) -> RunRecord {
        RunRecord {
            task: task.into(),
            engine: "bee".into(),
            cost_model: "probe".into(),
            outcome: outcome.into(),
            evaluations: 1,
            generations: 1,
            elapsed_s: 0.5,
            solution: String::new(),
            solution_size: None,
            solution_cost: None,
            rep,
            error: String::new(),
        }
    }

    #[test]
    fn summary_statistics() {
        let records = vec![
            record("a", "solved", 0),
            record("b", "solved", 0),
            record("a", "solved", 1),
            record("b", "timeout", 1),
            record("a", "timeout", 2),
            record("b", "timeout", 2),
        ];
        let s = summarize(&records);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].solved_per_rep, vec![2, 1, 0]);
        assert_eq!(s[0].mean_solved, 1.0);
        assert!((s[0].sd_solved - 1.0).abs() < 1e-12);
        assert_eq!(s[0].tasks, 2);
    }

    #[test]
    fn learning_applies_to_two_pairings() {
        let c = RunConfig::new(Engine::Guided, CostKind::ProbeRounded, 1.0);
        assert_eq!(c.learn_engine(), Some(LearnEngine::Guided));
        let c = RunConfig::new(Engine::Bee, CostKind::Probe, 1.0);
        assert_eq!(c.learn_engine(), Some(LearnEngine::Bee));
        let c = RunConfig::new(Engine::Heap, CostKind::Probe, 1.0);
        assert_eq!(c.learn_engine(), None);
        let c = RunConfig {
            learn: false,
            ..RunConfig::new(Engine::Bee, CostKind::Probe, 1.0)
        };
        assert_eq!(c.learn_engine(), None);
    }

    #[test]
    fn bus_records_size() {
        assert_eq!(RunConfig::new(Engine::Bus, CostKind::Probe, 1.0).recorded_cost(), "size");
    }
}
