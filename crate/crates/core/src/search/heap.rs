//! Heap Search: one priority queue per type plus a successor table. Each
//! query returns the next cheapest program of a type and pushes the
//! programs obtained by replacing one child with that child's successor.
//! Only exact structural duplicates are suppressed.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use super::{require_pre, Ctx, Outcome, SearchConfig, SearchResult, TraceRow};
use crate::costs::CostModel;
use crate::error::Result;
use crate::grammar::{Grammar, Pcfg, TypeId};
use crate::interp::{Program, Signature, Task};

#[derive(Debug, Clone)]
struct Item {
    w: f64,
    seq: u64,
    program: Program,
}

impl PartialEq for Item {
    fn eq(&self, other: &Item) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Item) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Item) -> Ordering {
        self.w.total_cmp(&other.w).then(self.seq.cmp(&other.seq))
    }
}

/// Cheapest program of every type, found by a Knuth-style fixpoint, with
/// types listed in the order they were settled. Types that derive no finite
/// program are absent.
pub fn cheapest_programs(grammar: &Grammar, cost: impl Fn(usize) -> f64) -> (Vec<Option<(Program, f64)>>, Vec<TypeId>) {
    let n = grammar.types().len();
    let mut best: Vec<Option<(Program, f64)>> = vec![None; n];
    let mut order = Vec::new();
    let mut done = vec![false; n];
    loop {
        let mut pick: Option<(TypeId, Program, f64)> = None;
        for t in (0..n).filter(|&t| !done[t]) {
            for &r in grammar.rules_for(t) {
                let rule = grammar.rule(r);
                if !rule.args.iter().all(|&a| done[a]) {
                    continue;
                }
                let kids: Vec<&(Program, f64)> = rule.args.iter().map(|&a| best[a].as_ref().unwrap()).collect();
                let w = cost(r) + kids.iter().map(|k| k.1).sum::<f64>();
                if pick.as_ref().is_none_or(|(_, _, bw)| w < *bw) {
                    let p = Program::new(r, kids.iter().map(|k| k.0.clone()).collect());
                    pick = Some((t, p, w));
                }
            }
        }
        let Some((t, p, w)) = pick else { break };
        done[t] = true;
        best[t] = Some((p, w));
        order.push(t);
    }
    (best, order)
}

pub struct HeapSearch {
    ctx: Ctx,
    grammar: Arc<Grammar>,
    heaps: Vec<BinaryHeap<Reverse<Item>>>,
    seen: Vec<HashSet<Program>>,
    succ: Vec<HashMap<Option<Program>, Program>>,
    costs: HashMap<Program, f64>,
    sigs: HashMap<Program, Signature>,
    seq: u64,
    /// Popped program and the children it pushed, when recording.
    expansions: Vec<(Program, Vec<Program>)>,
}

impl HeapSearch {
    /// Equivalence pruning is never applied here, whatever `config` says.
    pub fn new(pcfg: &Pcfg, task: &Task, model: &CostModel, config: &SearchConfig) -> Result<HeapSearch> {
        require_pre(model, "heap search")?;
        let ctx = Ctx::new(pcfg, task, model, config)?;
        let grammar = pcfg.grammar().clone();
        let types = grammar.types().len();
        let mut s = HeapSearch {
            ctx,
            heaps: vec![BinaryHeap::new(); types],
            seen: vec![HashSet::new(); types],
            succ: vec![HashMap::new(); types],
            costs: HashMap::new(),
            sigs: HashMap::new(),
            seq: 0,
            expansions: Vec::new(),
            grammar,
        };
        let (best, order) = cheapest_programs(&s.grammar, |r| s.ctx.model.rule_cost(r));
        for &t in &order {
            let (min, _) = best[t].clone().expect("settled type");
            s.offer(t, min.clone());
            for &r in s.grammar.clone().rules_for(t) {
                let rule = s.grammar.rule(r).clone();
                if rule.is_terminal() {
                    s.offer(t, Program::leaf(r));
                } else if let Some(kids) = rule
                    .args
                    .iter()
                    .map(|&a| best[a].as_ref().map(|b| b.0.clone()))
                    .collect::<Option<Vec<_>>>()
                {
                    s.offer(t, Program::new(r, kids));
                }
            }
        }
        // Pop each type's cheapest program so that every child of a queued
        // program has already been returned by a query on its own type.
        for &t in &order {
            s.query(None, t);
        }
        Ok(s)
    }

    fn cost(&mut self, p: &Program) -> f64 {
        if let Some(&w) = self.costs.get(p) {
            return w;
        }
        let kids: Vec<f64> = p.children().to_vec().iter().map(|c| self.cost(c)).collect();
        let w = self.ctx.model.combine(p.rule(), &kids);
        self.costs.insert(p.clone(), w);
        w
    }

    fn signature(&mut self, p: &Program) -> Signature {
        if let Some(s) = self.sigs.get(p) {
            return s.clone();
        }
        let sig = if p.children().is_empty() {
            self.ctx.eval.terminal(p.rule())
        } else {
            let kids: Vec<Signature> = p.children().to_vec().iter().map(|c| self.signature(c)).collect();
            let refs: Vec<&Signature> = kids.iter().collect();
            self.ctx.eval.apply(p.rule(), &refs)
        };
        self.sigs.insert(p.clone(), sig.clone());
        sig
    }

    /// Pushes `p` onto its type's heap unless it was seen before.
    fn offer(&mut self, t: TypeId, p: Program) -> bool {
        if !self.seen[t].insert(p.clone()) {
            return false;
        }
        let w = self.cost(&p);
        self.heaps[t].push(Reverse(Item {
            w,
            seq: self.seq,
            program: p,
        }));
        self.seq += 1;
        self.ctx.generations += 1;
        true
    }

    /// Successor of `p` among programs of type `t`.
    pub fn query(&mut self, p: Option<Program>, t: TypeId) -> Option<Program> {
        if let Some(s) = self.succ[t].get(&p) {
            return Some(s.clone());
        }
        let Reverse(item) = self.heaps[t].pop()?;
        let next = item.program;
        self.succ[t].insert(p, next.clone());
        let rule = self.grammar.rule(next.rule()).clone();
        let mut pushed = Vec::new();
        for (i, &ti) in rule.args.iter().enumerate() {
            let Some(y) = self.query(Some(next.children()[i].clone()), ti) else {
                continue;
            };
            let mut kids = next.children().to_vec();
            kids[i] = y;
            let child = Program::new(rule.id, kids);
            if self.offer(t, child.clone()) {
                pushed.push(child);
            }
        }
        if self.ctx.config.record {
            self.expansions.push((next.clone(), pushed));
        }
        Some(next)
    }

    /// Each popped program with the children its expansion pushed.
    pub fn expansions(&self) -> &[(Program, Vec<Program>)] {
        &self.expansions
    }

    pub fn run(mut self) -> Result<SearchResult> {
        let outcome = self.search();
        Ok(self.finish(outcome))
    }

    fn finish(&mut self, outcome: Outcome) -> SearchResult {
        let cost = outcome.solution().map(|p| self.cost(&p.clone()));
        self.ctx.finish(outcome, cost)
    }

    /// Runs to completion and keeps the engine for inspection.
    pub fn run_in_place(&mut self) -> SearchResult {
        let outcome = self.search();
        self.finish(outcome)
    }

    fn stored(&self) -> usize {
        self.seen.iter().map(HashSet::len).sum()
    }

    fn search(&mut self) -> Outcome {
        let initial = self.grammar.initial();
        let mut p: Option<Program> = None;
        loop {
            if let Some(o) = self.ctx.over_budget(self.stored()) {
                return o;
            }
            if self.ctx.evaluations.is_multiple_of(4096) && self.ctx.timed_out() {
                return Outcome::Timeout;
            }
            let Some(next) = self.query(p.take(), initial) else {
                return Outcome::Exhausted;
            };
            let sig = self.signature(&next);
            let w = self.cost(&next);
            self.ctx.evaluations += 1;
            self.ctx.record(&next, w, w);
            if self.ctx.config.trace {
                self.ctx.trace.push(TraceRow {
                    iteration: self.ctx.evaluations,
                    rule: Some(next.rule()),
                    indices: Vec::new(),
                    cost: w,
                    generated: 1,
                    bank: self.stored(),
                });
            }
            if self.ctx.eval.is_solution(&sig) {
                return Outcome::Solved(next);
            }
            self.ctx.harvest(&next, &sig, w);
            p = Some(next);
        }
    }
}
