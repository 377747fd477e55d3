//! Synthesis engines behind one entry point, [`synthesize`].

pub mod bee;
pub mod brute;
pub mod guided;
pub mod heap;

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::costs::{BoundOracle, CostKind, CostModel};
use crate::error::{Error, Result};
use crate::grammar::{Pcfg, RuleId};
use crate::interp::{Domain, Evaluator, Program, Signature, Task};
use crate::learn::PartialSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Size-ordered enumeration: the guided engine with every rule at cost 1.
    Bus,
    Guided,
    Heap,
    Brute,
    Bee,
}

impl Engine {
    pub const ALL: [Engine; 5] = [Engine::Bus, Engine::Guided, Engine::Heap, Engine::Brute, Engine::Bee];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Bus => "bus",
            Engine::Guided => "guided",
            Engine::Heap => "heap",
            Engine::Brute => "brute",
            Engine::Bee => "bee",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Engine> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Budget {
    pub timeout: Option<Duration>,
    /// Stop after this many evaluations (reported as a timeout).
    pub max_evals: Option<u64>,
    /// Stop once this many programs are held in memory.
    pub max_programs: Option<usize>,
}

impl Budget {
    /// Wall-clock budget; infinite or out-of-range values mean no limit.
    pub fn seconds(s: f64) -> Budget {
        Budget {
            timeout: Duration::try_from_secs_f64(s).ok(),
            ..Budget::default()
        }
    }
}

/// Order among equal-cost programs in the level-based engines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieOrder {
    /// Bank insertion order, ascending splits.
    #[default]
    Forward,
    /// Newest bank entries first, descending splits: the worst case for a
    /// solution built from early programs.
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub equivalence: bool,
    /// Collect one [`TraceRow`] per iteration.
    pub trace: bool,
    /// Record every generated program with its cost.
    pub record: bool,
    pub tie_order: TieOrder,
    pub budget: Budget,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            equivalence: true,
            trace: false,
            record: false,
            tie_order: TieOrder::Forward,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Program),
    Timeout,
    MemoryExhausted,
    /// The search space was finite and contained no solution.
    Exhausted,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Solved(_) => "solved",
            Outcome::Timeout => "timeout",
            Outcome::MemoryExhausted => "memory",
            Outcome::Exhausted => "exhausted",
        }
    }

    pub fn solution(&self) -> Option<&Program> {
        match self {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

/// Where a resumable run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Pause {
    Done(Outcome),
    /// The next step would exceed the caller's cost cap.
    Capped,
}

/// One iteration of an engine's main loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    /// Rule of the popped state or node, when there is one.
    pub rule: Option<RuleId>,
    pub indices: Vec<u32>,
    pub cost: f64,
    pub generated: u64,
    pub bank: usize,
}

/// A generated program with its pre-penalty cost `w` and banked cost `w'`
/// (equal for pre-generation models).
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub program: Program,
    pub w: f64,
    pub w_post: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: Outcome,
    /// Programs taken in best-first order: every program for the level
    /// engines and Bee, popped programs for Heap and Brute.
    pub evaluations: u64,
    pub generations: u64,
    pub states_expanded: u64,
    pub elapsed: Duration,
    pub solution_cost: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub log: Vec<Generated>,
}

impl SearchResult {
    pub fn solution(&self) -> Option<&Program> {
        self.outcome.solution()
    }
}

/// Merges consecutive rows with the same cost, as in a per-cost trace table.
pub fn aggregate_trace(rows: &[TraceRow]) -> Vec<TraceRow> {
    let mut out: Vec<TraceRow> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some(last) if crate::bank::CostKey::of(last.cost) == crate::bank::CostKey::of(row.cost) => {
                last.generated += row.generated;
                last.bank = row.bank;
            }
            _ => out.push(TraceRow {
                iteration: out.len() as u64 + 1,
                ..row.clone()
            }),
        }
    }
    out
}

/// Runs `engine` on `task`.
pub fn synthesize(
    engine: Engine,
    pcfg: &Pcfg,
    task: &Task,
    model: &CostModel,
    config: &SearchConfig,
) -> Result<SearchResult> {
    match engine {
        Engine::Bus => {
            let size = CostModel::size(pcfg.grammar());
            guided::GuidedSearch::new(pcfg, task, &size, config)?.run()
        }
        Engine::Guided => guided::GuidedSearch::new(pcfg, task, model, config)?.run(),
        Engine::Heap => heap::HeapSearch::new(pcfg, task, model, config)?.run(),
        Engine::Brute => brute::BruteSearch::new(pcfg, task, model, config)?.run(),
        Engine::Bee => bee::BeeSearch::new(pcfg, task, model, config)?.run(),
    }
}

pub(crate) fn check_model(model: &CostModel, task: &Task) -> Result<()> {
    if model.is_post() && task.domain != Domain::Strings {
        return Err(Error::Config(format!(
            "cost model `{}` needs a string task",
            model.kind()
        )));
    }
    Ok(())
}

/// Shared bookkeeping: evaluator, oracle, counters, budget and partial
/// solution harvesting.
pub(crate) struct Ctx {
    pub eval: Evaluator,
    pub oracle: Option<BoundOracle>,
    pub model: CostModel,
    pub config: SearchConfig,
    pub start: Instant,
    pub evaluations: u64,
    pub generations: u64,
    pub states_expanded: u64,
    pub trace: Vec<TraceRow>,
    pub log: Vec<Generated>,
    /// Best partial solution per solved-example mask, when harvesting.
    pub partials: Option<HashMap<Box<[bool]>, PartialSolution>>,
}

const CLOCK_INTERVAL: u64 = 4096;

impl Ctx {
    pub fn new(pcfg: &Pcfg, task: &Task, model: &CostModel, config: &SearchConfig) -> Result<Ctx> {
        check_model(model, task)?;
        let eval = Evaluator::new(pcfg.grammar().clone(), task)?;
        let oracle = model.bind(task)?;
        Ok(Ctx {
            eval,
            oracle,
            model: model.clone(),
            config: config.clone(),
            start: Instant::now(),
            evaluations: 0,
            generations: 0,
            states_expanded: 0,
            trace: Vec::new(),
            log: Vec::new(),
            partials: None,
        })
    }

    /// Checks the budget before one more evaluation.
    pub fn over_budget(&self, stored: usize) -> Option<Outcome> {
        let b = &self.config.budget;
        if b.max_evals.is_some_and(|m| self.evaluations >= m) {
            return Some(Outcome::Timeout);
        }
        if b.max_programs.is_some_and(|m| stored >= m) {
            return Some(Outcome::MemoryExhausted);
        }
        // Generations advance on every engine, evaluations not always.
        if self.generations.is_multiple_of(CLOCK_INTERVAL) {
            if let Some(t) = b.timeout {
                if self.start.elapsed() >= t {
                    return Some(Outcome::Timeout);
                }
            }
        }
        None
    }

    pub fn timed_out(&self) -> bool {
        self.config.budget.timeout.is_some_and(|t| self.start.elapsed() >= t)
    }

    /// Oracle-adjusted cost of a program with outputs `sig` and raw cost `w`.
    pub fn post_cost(&self, w: f64, sig: &Signature) -> f64 {
        match &self.oracle {
            Some(o) => self.model.post_cost(w, o.probability(sig)),
            None => w,
        }
    }

    pub fn post_costs(&self, w: &[f64], sigs: &[&[crate::interp::Value]]) -> Vec<f64> {
        match &self.oracle {
            Some(o) => o
                .batch(sigs)
                .into_iter()
                .zip(w)
                .map(|(p, &w)| self.model.post_cost(w, p))
                .collect(),
            None => w.to_vec(),
        }
    }

    pub fn record(&mut self, program: &Program, w: f64, w_post: f64) {
        if self.config.record {
            self.log.push(Generated {
                program: program.clone(),
                w,
                w_post,
            });
        }
    }

    /// Remembers `p` if it solves some but not all examples.
    pub fn harvest(&mut self, p: &Program, sig: &Signature, cost: f64) {
        let Some(partials) = self.partials.as_mut() else {
            return;
        };
        let target = self.eval.target();
        let mask: Box<[bool]> = sig.iter().zip(target.iter()).map(|(a, b)| a == b).collect();
        let hits = mask.iter().filter(|&&m| m).count();
        if hits == 0 || hits == mask.len() {
            return;
        }
        let found_at = self.evaluations;
        match partials.get(&mask) {
            Some(old) if old.cost <= cost => {}
            _ => {
                partials.insert(
                    mask.clone(),
                    PartialSolution {
                        program: p.clone(),
                        solved: mask,
                        cost,
                        found_at,
                    },
                );
            }
        }
    }

    pub fn finish(&mut self, outcome: Outcome, solution_cost: Option<f64>) -> SearchResult {
        if let Outcome::Solved(p) = &outcome {
            let sig = self.eval.signature(p);
            assert!(self.eval.is_solution(&sig), "returned program does not solve the task");
        }
        SearchResult {
            outcome,
            evaluations: self.evaluations,
            generations: self.generations,
            states_expanded: self.states_expanded,
            elapsed: self.start.elapsed(),
            solution_cost,
            trace: std::mem::take(&mut self.trace),
            log: std::mem::take(&mut self.log),
        }
    }
}

/// Calls `f` on every tuple of the Cartesian product, rightmost slot
/// fastest. Stops early when `f` breaks.
pub(crate) fn product<'a, T>(slots: &[&'a [T]], mut f: impl FnMut(&[&'a T]) -> ControlFlow<()>) -> ControlFlow<()> {
    if slots.iter().any(|s| s.is_empty()) {
        return ControlFlow::Continue(());
    }
    let k = slots.len();
    let mut at = vec![0usize; k];
    let mut tuple: Vec<&'a T> = slots.iter().map(|s| &s[0]).collect();
    loop {
        f(&tuple)?;
        let mut j = k;
        loop {
            if j == 0 {
                return ControlFlow::Continue(());
            }
            j -= 1;
            at[j] += 1;
            if at[j] < slots[j].len() {
                tuple[j] = &slots[j][at[j]];
                break;
            }
            at[j] = 0;
            tuple[j] = &slots[j][0];
        }
    }
}

pub(crate) fn require_pre(model: &CostModel, engine: &str) -> Result<()> {
    if model.is_post() {
        return Err(Error::Config(format!(
            "{engine} needs a pre-generation cost model, got `{}`",
            model.kind()
        )));
    }
    Ok(())
}

pub(crate) fn require_integral(model: &CostModel) -> Result<()> {
    if !model.kind().is_integral() {
        return Err(Error::Config(format!(
            "the guided engine enumerates integer levels; `{}` is real-valued (use {} or {})",
            model.kind(),
            CostKind::ProbeRounded,
            CostKind::BustleBinned
        )));
    }
    Ok(())
}
