//! Best-first bottom-up search over cost-tuple states.
//!
//! A state pairs a rule with one index per argument into the sorted list `C`
//! of distinct program costs seen so far. It stands for every program built
//! from bank entries whose costs are `C[i_1], ..., C[i_k]`, so the queue is
//! ordered over states rather than programs and programs are only built when
//! their state is the cheapest one left.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{product, Ctx, Outcome, Pause, SearchConfig, SearchResult, TraceRow};
use crate::bank::{Bank, CostKey, Entry};
use crate::costs::CostModel;
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Pcfg, RuleId};
use crate::interp::{Program, Signature, Task};

/// A queued cost-tuple state. Terminal states carry an empty tuple.
#[derive(Debug, Clone)]
pub struct State {
    pub rule: RuleId,
    /// Zero-based indices into `C`.
    pub indices: Box<[u32]>,
    pub w: f64,
    seq: u64,
}

impl PartialEq for State {
    fn eq(&self, other: &State) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &State) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &State) -> Ordering {
        self.w.total_cmp(&other.w).then(self.seq.cmp(&other.seq))
    }
}

/// Children of a state: one per coordinate, that coordinate incremented.
pub fn expand_cost_tuple(indices: &[u32]) -> Vec<Box<[u32]>> {
    (0..indices.len())
        .map(|j| {
            let mut child: Box<[u32]> = indices.into();
            child[j] += 1;
            child
        })
        .collect()
}

pub struct BeeSearch {
    ctx: Ctx,
    grammar: Arc<Grammar>,
    bank: Bank,
    /// Sorted distinct costs.
    c: Vec<f64>,
    queue: BinaryHeap<Reverse<State>>,
    seen: Vec<HashSet<Box<[u32]>>>,
    seq: u64,
    post: bool,
    /// Post-generation only: multiset of each queued state's largest index.
    max_index: BTreeMap<u32, usize>,
    solution_cost: Option<f64>,
}

impl BeeSearch {
    pub fn new(pcfg: &Pcfg, task: &Task, model: &CostModel, config: &SearchConfig) -> Result<BeeSearch> {
        let ctx = Ctx::new(pcfg, task, model, config)?;
        let grammar = pcfg.grammar().clone();
        let post = model.is_post();
        if !post {
            if let Some(r) = grammar.operations().find(|r| model.rule_cost(r.id) <= 0.0) {
                return Err(Error::Config(format!(
                    "rule `{}` has cost {}; cost-tuple search needs positive operation costs",
                    r.op,
                    model.rule_cost(r.id)
                )));
            }
        }
        let mut bank = Bank::new(grammar.types().len());
        if !config.equivalence {
            bank = bank.disable_equivalence();
        }
        let mut search = BeeSearch {
            ctx,
            bank,
            c: Vec::new(),
            queue: BinaryHeap::new(),
            seen: vec![HashSet::new(); grammar.rules().len()],
            seq: 0,
            post,
            max_index: BTreeMap::new(),
            solution_cost: None,
            grammar,
        };
        if !post {
            // Post-generation costs are unknown until terminals run, so `C`
            // starts empty there and fills as terminal states pop.
            let cheapest = search
                .grammar
                .terminals()
                .map(|r| model.rule_cost(r.id))
                .min_by(f64::total_cmp);
            search.c.extend(cheapest);
        }
        let ops: Vec<(RuleId, usize)> = search.grammar.operations().map(|r| (r.id, r.arity())).collect();
        for (rule, k) in ops {
            search.push(rule, vec![0; k].into());
        }
        let terms: Vec<RuleId> = search.grammar.terminals().map(|r| r.id).collect();
        for rule in terms {
            search.push(rule, Box::new([]));
        }
        Ok(search)
    }

    /// The cost list `C`.
    pub fn cost_list(&self) -> &[f64] {
        &self.c
    }

    pub fn bank(&self) -> &Bank {
        &self.bank
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Harvest partial solutions during the run.
    pub(crate) fn collect_partials(&mut self) {
        self.ctx.partials.get_or_insert_with(Default::default);
    }

    pub(crate) fn take_partials(&mut self) -> Vec<crate::learn::PartialSolution> {
        let mut v: Vec<_> = self.ctx.partials.as_mut().map(|m| m.drain().map(|(_, p)| p).collect()).unwrap_or_default();
        v.sort_by_key(|p| p.found_at);
        v
    }

    fn state_w(&self, rule: RuleId, indices: &[u32]) -> f64 {
        if indices.is_empty() {
            return if self.post { 1.0 } else { self.ctx.model.rule_cost(rule) };
        }
        if indices.iter().any(|&i| i as usize >= self.c.len()) {
            return f64::INFINITY;
        }
        // Summing in sorted index order makes permuted tuples bit-identical.
        let mut sorted: Vec<u32> = indices.to_vec();
        sorted.sort_unstable();
        let base = if self.post { 1.0 } else { self.ctx.model.rule_cost(rule) };
        sorted.iter().fold(base, |acc, &i| acc + self.c[i as usize])
    }

    fn push(&mut self, rule: RuleId, indices: Box<[u32]>) {
        if !indices.is_empty() && !self.seen[rule].insert(indices.clone()) {
            return;
        }
        let w = self.state_w(rule, &indices);
        self.enqueue(State {
            rule,
            indices,
            w,
            seq: self.seq,
        });
        self.seq += 1;
    }

    fn enqueue(&mut self, s: State) {
        if self.post {
            if let Some(&m) = s.indices.iter().max() {
                *self.max_index.entry(m).or_default() += 1;
            }
        }
        self.queue.push(Reverse(s));
    }

    fn dequeue(&mut self) -> Option<State> {
        let Reverse(s) = self.queue.pop()?;
        if self.post {
            if let Some(&m) = s.indices.iter().max() {
                let count = self.max_index.get_mut(&m).expect("tracked index");
                *count -= 1;
                if *count == 0 {
                    self.max_index.remove(&m);
                }
            }
        }
        Some(s)
    }

    /// Recomputes every queued state's cost after `C` shifted.
    fn reheapify(&mut self) {
        let states = std::mem::take(&mut self.queue).into_vec();
        let rebuilt: Vec<Reverse<State>> = states
            .into_iter()
            .map(|Reverse(mut s)| {
                s.w = self.state_w(s.rule, &s.indices);
                Reverse(s)
            })
            .collect();
        self.queue = BinaryHeap::from(rebuilt);
    }

    /// Sorted insert of a distinct cost; returns its position if it is new.
    fn insert_cost(&mut self, w: f64) -> Option<usize> {
        let key = CostKey::of(w);
        match self.c.binary_search_by(|x| CostKey::of(*x).cmp(&key)) {
            Ok(_) => None,
            Err(pos) => {
                self.c.insert(pos, w);
                Some(pos)
            }
        }
    }

    pub fn run(mut self) -> Result<SearchResult> {
        let outcome = match self.run_until(f64::INFINITY) {
            Pause::Done(o) => o,
            Pause::Capped => unreachable!("no cap"),
        };
        let cost = self.solution_cost;
        Ok(self.ctx.finish(outcome, cost))
    }

    pub fn finish(mut self, outcome: Outcome) -> SearchResult {
        let cost = self.solution_cost;
        self.ctx.finish(outcome, cost)
    }

    pub(crate) fn counters(&self) -> (u64, u64, u64) {
        (self.ctx.evaluations, self.ctx.generations, self.ctx.states_expanded)
    }

    /// Pops states until a solution, a budget limit, or a state costing more
    /// than `cap`. Can be called again with a larger cap.
    pub fn run_until(&mut self, cap: f64) -> Pause {
        loop {
            let Some(Reverse(top)) = self.queue.peek() else {
                return Pause::Done(Outcome::Exhausted);
            };
            if top.w == f64::INFINITY {
                return Pause::Done(Outcome::Exhausted);
            }
            if top.w > cap {
                return Pause::Capped;
            }
            if self.ctx.timed_out() {
                return Pause::Done(Outcome::Timeout);
            }
            // States over empty cost buckets evaluate nothing, so the
            // in-product checks alone could miss a growing queue.
            if let Some(o) = self.ctx.over_budget(self.bank.len() + self.queue.len()) {
                return Pause::Done(o);
            }
            let n = self.dequeue().expect("peeked");
            if let ControlFlow::Break(o) = self.next_programs(n) {
                return Pause::Done(o);
            }
        }
    }

    /// Generates every program of state `n`.
    fn next_programs(&mut self, n: State) -> ControlFlow<Outcome> {
        let before = self.ctx.generations;
        if !self.post && CostKey::of(n.w) != CostKey::of(*self.c.last().expect("C is seeded")) {
            self.c.push(n.w);
        }
        let result = if n.indices.is_empty() {
            self.terminal(&n)
        } else {
            self.ctx.states_expanded += 1;
            for j in n.indices.iter() {
                assert!((*j as usize) < self.c.len(), "cost-tuple index {} outside C (|C| = {})", j + 1, self.c.len());
            }
            for child in expand_cost_tuple(&n.indices) {
                self.push(n.rule, child);
            }
            self.operation(&n)
        };
        if self.ctx.config.trace {
            self.ctx.trace.push(TraceRow {
                iteration: self.ctx.trace.len() as u64 + 1,
                rule: Some(n.rule),
                indices: n.indices.iter().map(|i| i + 1).collect(),
                cost: n.w,
                generated: self.ctx.generations - before,
                bank: self.bank.len(),
            });
        }
        result
    }

    fn check(&mut self) -> ControlFlow<Outcome> {
        match self.ctx.over_budget(self.bank.len() + self.queue.len()) {
            Some(o) => ControlFlow::Break(o),
            None => ControlFlow::Continue(()),
        }
    }

    fn terminal(&mut self, n: &State) -> ControlFlow<Outcome> {
        self.check()?;
        let p = Program::leaf(n.rule);
        let sig = self.ctx.eval.terminal(n.rule);
        self.ctx.evaluations += 1;
        self.ctx.generations += 1;
        let w_post = self.ctx.post_cost(n.w, &sig);
        self.ctx.record(&p, n.w, w_post);
        if self.ctx.eval.is_solution(&sig) {
            self.solution_cost = Some(w_post);
            return ControlFlow::Break(Outcome::Solved(p));
        }
        self.ctx.harvest(&p, &sig, w_post);
        let ty = self.grammar.rule(n.rule).ret;
        if self.post {
            if self.bank.is_equivalent(ty, &sig) {
                self.bank.insert(p, ty, w_post, sig);
                return ControlFlow::Continue(());
            }
            if let Some(pos) = self.insert_cost(w_post) {
                if self.needs_reheap(pos) {
                    self.reheapify();
                }
            }
        }
        self.bank.insert(p, ty, w_post, sig);
        ControlFlow::Continue(())
    }

    fn needs_reheap(&self, pos: usize) -> bool {
        self.max_index.last_key_value().is_some_and(|(&m, _)| pos <= m as usize)
    }

    fn operation(&mut self, n: &State) -> ControlFlow<Outcome> {
        let rule = self.grammar.rule(n.rule);
        let ret = rule.ret;
        let buckets: Vec<Vec<Entry>> = rule
            .args
            .iter()
            .zip(n.indices.iter())
            .map(|(&ty, &i)| self.bank.programs_at(CostKey::of(self.c[i as usize]), ty).to_vec())
            .collect();
        let slots: Vec<&[Entry]> = buckets.iter().map(Vec::as_slice).collect();
        let mut pending: Vec<(Program, Signature)> = Vec::new();
        let mut batch_seen: HashSet<Signature> = HashSet::new();
        let mut outcome = None;
        let mut solved = None;
        let mut sig_refs: Vec<&Signature> = Vec::with_capacity(slots.len());
        let _ = product(&slots, |tuple| {
            if let ControlFlow::Break(o) = self.check() {
                outcome = Some(o);
                return ControlFlow::Break(());
            }
            sig_refs.clear();
            sig_refs.extend(tuple.iter().map(|e| &e.sig));
            let sig = self.ctx.eval.apply(n.rule, &sig_refs);
            let p = Program::new(n.rule, tuple.iter().map(|e| e.program.clone()).collect());
            self.ctx.evaluations += 1;
            self.ctx.generations += 1;
            if self.ctx.eval.is_solution(&sig) {
                solved = Some((p, sig));
                return ControlFlow::Break(());
            }
            if self.post {
                if self.bank.is_equivalent(ret, &sig) || (self.bank.equivalence() && !batch_seen.insert(sig.clone())) {
                    if self.ctx.config.record || self.ctx.partials.is_some() {
                        let w_post = self.ctx.post_cost(n.w, &sig);
                        self.ctx.record(&p, n.w, w_post);
                    }
                    return ControlFlow::Continue(());
                }
                pending.push((p, sig));
            } else {
                self.ctx.record(&p, n.w, n.w);
                self.ctx.harvest(&p, &sig, n.w);
                self.bank.insert(p, ret, n.w, sig);
            }
            ControlFlow::Continue(())
        });
        // Programs evaluated before a stop are still logged and banked.
        if self.post && !pending.is_empty() {
            self.bank_batch(n, ret, pending);
        }
        if let Some((p, sig)) = solved {
            let w_post = self.ctx.post_cost(n.w, &sig);
            self.ctx.record(&p, n.w, w_post);
            self.solution_cost = Some(w_post);
            return ControlFlow::Break(Outcome::Solved(p));
        }
        match outcome {
            Some(o) => ControlFlow::Break(o),
            None => ControlFlow::Continue(()),
        }
    }

    /// Scores one state's programs together, then files them under `w'`.
    fn bank_batch(&mut self, n: &State, ret: usize, pending: Vec<(Program, Signature)>) {
        let outputs: Vec<&[crate::interp::Value]> = pending.iter().map(|(_, s)| &s[..]).collect();
        let ws = vec![n.w; pending.len()];
        let costs = self.ctx.post_costs(&ws, &outputs);
        let mut reheap = false;
        for ((p, sig), w_post) in pending.into_iter().zip(costs) {
            self.ctx.record(&p, n.w, w_post);
            self.ctx.harvest(&p, &sig, w_post);
            if let Some(pos) = self.insert_cost(w_post) {
                reheap |= self.needs_reheap(pos);
            }
            self.bank.insert(p, ret, w_post, sig);
        }
        if reheap {
            self.reheapify();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_differ_in_one_coordinate() {
        let kids = expand_cost_tuple(&[0, 0]);
        assert_eq!(kids, vec![Box::from([1u32, 0]), Box::from([0u32, 1])]);
        assert_eq!(expand_cost_tuple(&[2]), vec![Box::from([3u32])]);
        assert!(expand_cost_tuple(&[]).is_empty());
    }

    #[test]
    fn states_order_by_cost_then_insertion() {
        let s = |w, seq| State {
            rule: 0,
            indices: Box::new([]),
            w,
            seq,
        };
        let mut q = BinaryHeap::new();
        q.push(Reverse(s(2.0, 0)));
        q.push(Reverse(s(1.0, 2)));
        q.push(Reverse(s(1.0, 1)));
        let order: Vec<u64> = std::iter::from_fn(|| q.pop().map(|Reverse(s)| s.seq)).collect();
        assert_eq!(order, [1, 2, 0]);
    }
}
