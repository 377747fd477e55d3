//! Online PCFG learning: search under a cost budget, harvest programs that
//! solve part of the examples, reward the rules they use, restart.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::grammar::{max_rule_cost, Pcfg};
use crate::interp::{Program, Task};
use crate::search::bee::BeeSearch;
use crate::search::guided::GuidedSearch;
use crate::search::{Outcome, Pause, SearchConfig, SearchResult};

/// A program that solves some, but not all, of the examples.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolution {
    pub program: Program,
    /// Per-example hit mask.
    pub solved: Box<[bool]>,
    pub cost: f64,
    /// Evaluation count when the program was found.
    pub found_at: u64,
}

impl PartialSolution {
    pub fn fraction(&self) -> f64 {
        self.solved.iter().filter(|&&s| s).count() as f64 / self.solved.len() as f64
    }
}

/// Keys of partial solutions already used for an update.
pub type History = HashSet<(Box<[bool]>, Program)>;

/// Keeps the first cheapest candidate per solved mask, drops ones already in
/// `history`, and records the survivors there.
pub fn select_partial_solutions(candidates: &[PartialSolution], history: &mut History) -> Vec<PartialSolution> {
    let mut best: Vec<&PartialSolution> = Vec::new();
    for c in candidates {
        match best.iter_mut().find(|b| b.solved == c.solved) {
            Some(b) if c.cost < b.cost => *b = c,
            Some(_) => {}
            None => best.push(c),
        }
    }
    let mut out = Vec::new();
    for b in best {
        if history.insert((b.solved.clone(), b.program.clone())) {
            out.push(b.clone());
        }
    }
    out
}

/// Per-rule fitness: the best solved fraction among `psol` programs using the rule.
pub fn fitness(psol: &[PartialSolution], rules: usize) -> Vec<f64> {
    let mut fit = vec![0.0f64; rules];
    for p in psol {
        let f = p.fraction();
        for r in p.program.rules_used() {
            fit[r] = fit[r].max(f);
        }
    }
    fit
}

/// `P(r) ∝ Pu(r)^(1 - Fit(r))`, normalised per non-terminal.
pub fn update_pcfg(psol: &[PartialSolution], uniform: &Pcfg) -> Result<Pcfg> {
    let grammar = uniform.grammar();
    let fit = fitness(psol, grammar.rules().len());
    let mut prob = vec![0.0; grammar.rules().len()];
    for t in 0..grammar.types().len() {
        let ids = grammar.rules_for(t);
        let mass: Vec<f64> = ids.iter().map(|&r| uniform.prob(r).powf(1.0 - fit[r])).collect();
        let z: f64 = mass.iter().sum();
        for (&r, m) in ids.iter().zip(mass) {
            prob[r] = m / z;
        }
    }
    Pcfg::from_probabilities(grammar.clone(), prob)
}

/// Which engine runs inside the learning loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnEngine {
    /// Integer levels with rounded rule costs; the budget caps the level.
    Guided,
    /// Cost-tuple search with real rule costs; the budget caps state cost.
    Bee,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRound {
    pub iteration: usize,
    /// Cost cap of the search that ended the round.
    pub lim: f64,
    pub psol: usize,
    /// Probabilities in force after the round.
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    /// Counters summed over every search the loop ran.
    pub result: SearchResult,
    pub rounds: Vec<LearnRound>,
    pub pcfg: Pcfg,
}

enum Runner {
    Guided(Box<GuidedSearch>),
    Bee(Box<BeeSearch>),
}

impl Runner {
    fn start(engine: LearnEngine, pcfg: &Pcfg, task: &Task, config: &SearchConfig) -> Result<Runner> {
        Ok(match engine {
            LearnEngine::Guided => {
                let mut s = GuidedSearch::new(pcfg, task, &CostModel::probe_rounded(pcfg), config)?;
                s.collect_partials();
                Runner::Guided(Box::new(s))
            }
            LearnEngine::Bee => {
                let mut s = BeeSearch::new(pcfg, task, &CostModel::probe(pcfg), config)?;
                s.collect_partials();
                Runner::Bee(Box::new(s))
            }
        })
    }

    fn run(&mut self, lim: f64) -> Pause {
        match self {
            Runner::Guided(s) => s.run_until_level(lim.ceil() as i64),
            Runner::Bee(s) => s.run_until(lim),
        }
    }

    fn partials(&mut self) -> Vec<PartialSolution> {
        match self {
            Runner::Guided(s) => s.take_partials(),
            Runner::Bee(s) => s.take_partials(),
        }
    }

    fn counters(&self) -> (u64, u64, u64) {
        match self {
            Runner::Guided(s) => s.counters(),
            Runner::Bee(s) => s.counters(),
        }
    }

    fn finish(self, outcome: Outcome) -> SearchResult {
        match self {
            Runner::Guided(s) => s.finish(outcome),
            Runner::Bee(s) => s.finish(outcome),
        }
    }
}

fn remaining(config: &SearchConfig, start: Instant, spent_evals: u64) -> SearchConfig {
    let mut c = config.clone();
    c.budget.timeout = config.budget.timeout.map(|t| t.saturating_sub(start.elapsed()));
    c.budget.max_evals = config.budget.max_evals.map(|m| m.saturating_sub(spent_evals));
    c
}

/// Runs the learning loop from `pcfg` with restart constant `d`.
pub fn run_probe(
    pcfg: &Pcfg,
    task: &Task,
    d: f64,
    engine: LearnEngine,
    config: &SearchConfig,
) -> Result<LearnResult> {
    if !(d >= 1.0) {
        return Err(Error::Config(format!("restart constant must be at least 1, got {d}")));
    }
    let start = Instant::now();
    let uniform = Pcfg::uniform(pcfg.grammar().clone());
    let mut current = pcfg.clone();
    let mut history = History::new();
    let mut rounds = Vec::new();
    let mut spent = (0u64, 0u64, 0u64);
    let mut lim = max_rule_cost(&current) * d;
    let mut runner = Runner::start(engine, &current, task, config)?;
    let outcome = loop {
        match runner.run(lim) {
            Pause::Done(o) => break o,
            Pause::Capped => {}
        }
        let psol = select_partial_solutions(&runner.partials(), &mut history);
        let searched = lim;
        if psol.is_empty() {
            lim += max_rule_cost(&current) * d;
        } else {
            current = update_pcfg(&psol, &uniform)?;
            let (e, g, s) = runner.counters();
            spent = (spent.0 + e, spent.1 + g, spent.2 + s);
            let cfg = remaining(config, start, spent.0);
            if cfg.budget.timeout == Some(Duration::ZERO) {
                break Outcome::Timeout;
            }
            runner = Runner::start(engine, &current, task, &cfg)?;
            lim = max_rule_cost(&current) * d;
        }
        rounds.push(LearnRound {
            iteration: rounds.len() + 1,
            lim: searched,
            psol: psol.len(),
            probabilities: current.probabilities().to_vec(),
        });
    };
    let mut result = runner.finish(outcome);
    result.evaluations += spent.0;
    result.generations += spent.1;
    result.states_expanded += spent.2;
    result.elapsed = start.elapsed();
    Ok(LearnResult {
        result,
        rounds,
        pcfg: current,
    })
}
