//! Level-by-level bottom-up search over integer costs. Level `c` builds
//! every program whose cost is exactly `c` from bank programs whose costs
//! sum to `c` minus the rule's cost. With unit rule costs this is plain
//! size-ordered enumeration.

use std::ops::ControlFlow;
use std::sync::Arc;

use super::{product, require_integral, Ctx, Outcome, Pause, SearchConfig, SearchResult, TieOrder, TraceRow};
use crate::bank::{Bank, Entry};
use crate::costs::CostModel;
use crate::error::Result;
use crate::grammar::{Grammar, Pcfg, RuleId};
use crate::interp::{Program, Task};

pub struct GuidedSearch {
    ctx: Ctx,
    grammar: Arc<Grammar>,
    bank: Bank,
    /// Integer cost per rule.
    costs: Vec<i64>,
    /// Next level to run.
    level: i64,
    solution_cost: Option<f64>,
}

/// Every way to write `total` as an ordered sum of `k` values from `keys`
/// (ascending), in lexicographic order.
pub fn splits(total: i64, k: usize, keys: &[i64]) -> Vec<Vec<i64>> {
    fn go(total: i64, k: usize, keys: &[i64], prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for &key in keys {
            if key > total {
                break;
            }
            prefix.push(key);
            go(total - key, k - 1, keys, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(total, k, keys, &mut Vec::with_capacity(k), &mut out);
    out
}

impl GuidedSearch {
    pub fn new(pcfg: &Pcfg, task: &Task, model: &CostModel, config: &SearchConfig) -> Result<GuidedSearch> {
        require_integral(model)?;
        let ctx = Ctx::new(pcfg, task, model, config)?;
        let grammar = pcfg.grammar().clone();
        let costs = model.rule_costs().iter().map(|&c| c.round() as i64).collect();
        let mut bank = Bank::new(grammar.types().len());
        if !config.equivalence {
            bank = bank.disable_equivalence();
        }
        Ok(GuidedSearch {
            ctx,
            grammar,
            bank,
            costs,
            level: 1,
            solution_cost: None,
        })
    }

    pub fn bank(&self) -> &Bank {
        &self.bank
    }

    /// The next level that [`run_until_level`](Self::run_until_level) will run.
    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn rule_costs(&self) -> &[i64] {
        &self.costs
    }

    pub(crate) fn collect_partials(&mut self) {
        self.ctx.partials.get_or_insert_with(Default::default);
    }

    pub(crate) fn take_partials(&mut self) -> Vec<crate::learn::PartialSolution> {
        let mut v: Vec<_> = self.ctx.partials.as_mut().map(|m| m.drain().map(|(_, p)| p).collect()).unwrap_or_default();
        v.sort_by_key(|p| p.found_at);
        v
    }

    pub(crate) fn counters(&self) -> (u64, u64, u64) {
        (self.ctx.evaluations, self.ctx.generations, self.ctx.states_expanded)
    }

    pub fn run(mut self) -> Result<SearchResult> {
        let outcome = match self.run_until_level(i64::MAX) {
            Pause::Done(o) => o,
            Pause::Capped => Outcome::Exhausted,
        };
        Ok(self.finish(outcome))
    }

    pub fn finish(mut self, outcome: Outcome) -> SearchResult {
        let cost = self.solution_cost;
        self.ctx.finish(outcome, cost)
    }

    fn integer_keys(&self) -> Vec<i64> {
        let mut keys: Vec<i64> = self.bank.keys().map(|k| k.cost().round() as i64).collect();
        keys.dedup();
        keys
    }

    /// No level from here on can produce a program.
    fn exhausted(&self) -> bool {
        let max_key = self.integer_keys().last().copied().unwrap_or(0);
        let kmax = self.grammar.max_arity() as i64;
        let max_op = self.grammar.operations().map(|r| self.costs[r.id]).max().unwrap_or(0);
        let max_term = self.grammar.terminals().map(|r| self.terminal_w(r.id)).max().unwrap_or(0);
        self.level > max_term && (kmax == 0 || self.level > max_op + kmax * max_key)
    }

    fn terminal_w(&self, rule: RuleId) -> i64 {
        self.costs[rule]
    }

    /// Runs levels up to and including `cap`.
    pub fn run_until_level(&mut self, cap: i64) -> Pause {
        loop {
            if self.exhausted() {
                return Pause::Done(Outcome::Exhausted);
            }
            if self.level > cap {
                return Pause::Capped;
            }
            if self.ctx.timed_out() {
                return Pause::Done(Outcome::Timeout);
            }
            let c = self.level;
            let before = self.ctx.generations;
            let step = self.run_level(c);
            if self.ctx.config.trace {
                self.ctx.trace.push(TraceRow {
                    iteration: c as u64,
                    rule: None,
                    indices: Vec::new(),
                    cost: c as f64,
                    generated: self.ctx.generations - before,
                    bank: self.bank.len(),
                });
            }
            if let ControlFlow::Break(o) = step {
                return Pause::Done(o);
            }
            self.level += 1;
        }
    }

    fn check(&mut self) -> ControlFlow<Outcome> {
        match self.ctx.over_budget(self.bank.len()) {
            Some(o) => ControlFlow::Break(o),
            None => ControlFlow::Continue(()),
        }
    }

    /// Evaluates `p`, checks it, and banks it under its (possibly penalised) cost.
    fn emit(&mut self, p: Program, sig: crate::interp::Signature, w: i64) -> ControlFlow<Outcome> {
        self.ctx.evaluations += 1;
        self.ctx.generations += 1;
        let stored = if self.ctx.model.is_post() {
            self.ctx.post_cost(w as f64, &sig).round()
        } else {
            w as f64
        };
        self.ctx.record(&p, w as f64, stored);
        if self.ctx.eval.is_solution(&sig) {
            self.solution_cost = Some(stored);
            return ControlFlow::Break(Outcome::Solved(p));
        }
        self.ctx.harvest(&p, &sig, stored);
        let ty = self.grammar.rule(p.rule()).ret;
        self.bank.insert(p, ty, stored, sig);
        ControlFlow::Continue(())
    }

    fn run_level(&mut self, c: i64) -> ControlFlow<Outcome> {
        let grammar = self.grammar.clone();
        let reverse = self.ctx.config.tie_order == TieOrder::Reverse;
        for rule in grammar.rules() {
            let rc = self.costs[rule.id];
            if rule.is_terminal() {
                if self.terminal_w(rule.id) == c {
                    self.check()?;
                    let sig = self.ctx.eval.terminal(rule.id);
                    self.emit(Program::leaf(rule.id), sig, c)?;
                }
                continue;
            }
            if rc >= c {
                continue;
            }
            let keys = self.integer_keys();
            let mut combos = splits(c - rc, rule.arity(), &keys);
            if reverse {
                combos.reverse();
            }
            for combo in combos {
                let mut buckets: Vec<Vec<Entry>> = combo
                    .iter()
                    .zip(&rule.args)
                    .map(|(&k, &ty)| {
                        self.bank
                            .programs_at(crate::bank::CostKey::of(k as f64), ty)
                            .to_vec()
                    })
                    .collect();
                if buckets.iter().any(Vec::is_empty) {
                    continue;
                }
                if reverse {
                    buckets.iter_mut().for_each(|b| b.reverse());
                }
                let slots: Vec<&[Entry]> = buckets.iter().map(Vec::as_slice).collect();
                let mut outcome = None;
                let mut refs = Vec::with_capacity(slots.len());
                let _ = product(&slots, |tuple| {
                    if let ControlFlow::Break(o) = self.check() {
                        outcome = Some(o);
                        return ControlFlow::Break(());
                    }
                    refs.clear();
                    refs.extend(tuple.iter().map(|e| &e.sig));
                    let sig = self.ctx.eval.apply(rule.id, &refs);
                    let p = Program::new(rule.id, tuple.iter().map(|e| e.program.clone()).collect());
                    if let ControlFlow::Break(o) = self.emit(p, sig, c) {
                        outcome = Some(o);
                        return ControlFlow::Break(());
                    }
                    ControlFlow::Continue(())
                });
                if let Some(o) = outcome {
                    return ControlFlow::Break(o);
                }
            }
        }
        ControlFlow::Continue(())
    }
}
