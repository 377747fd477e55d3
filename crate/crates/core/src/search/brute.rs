//! Brute: best-first search over a tree whose root holds every terminal
//! program. Popping a node builds, for each operation, every combination of
//! banked programs that uses the node's program in at least one slot.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{Ctx, Outcome, SearchConfig, SearchResult, TraceRow};
use crate::bank::{Bank, Entry};
use crate::costs::CostModel;
use crate::error::Result;
use crate::grammar::{Grammar, Pcfg, Rule};
use crate::interp::{Program, Signature, Task};

#[derive(Debug, Clone)]
struct Node {
    priority: f64,
    seq: u64,
    /// Bank entries this node stands for: all terminals at the root, one
    /// program elsewhere.
    entries: Vec<Entry>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Node) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Node) -> Ordering {
        self.priority.total_cmp(&other.priority).then(self.seq.cmp(&other.seq))
    }
}

/// Calls `f` on every tuple over `pool` (per-slot candidate lists) with a
/// member of the node (`mine[j][i]`) in at least one slot, in product order
/// with the rightmost slot fastest. Work is proportional to the output.
fn for_each_touching<'a>(
    pool: &[&'a [Entry]],
    mine: &[Vec<bool>],
    mut f: impl FnMut(&[&'a Entry]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    fn go<'a>(
        j: usize,
        have: bool,
        pool: &[&'a [Entry]],
        mine: &[Vec<bool>],
        any_after: &[bool],
        tuple: &mut Vec<&'a Entry>,
        f: &mut impl FnMut(&[&'a Entry]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if j == pool.len() {
            return f(tuple);
        }
        for (i, e) in pool[j].iter().enumerate() {
            let here = have || mine[j][i];
            // Without a member so far, some later slot must still offer one.
            if !here && !any_after[j + 1] {
                continue;
            }
            tuple.push(e);
            let flow = go(j + 1, here, pool, mine, any_after, tuple, f);
            tuple.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }
    let k = pool.len();
    let mut any_after = vec![false; k + 1];
    for j in (0..k).rev() {
        any_after[j] = any_after[j + 1] || mine[j].iter().any(|&m| m);
    }
    go(0, false, pool, mine, &any_after, &mut Vec::with_capacity(k), &mut f)
}

pub struct BruteSearch {
    ctx: Ctx,
    grammar: Arc<Grammar>,
    bank: Bank,
    queue: BinaryHeap<Reverse<Node>>,
    seq: u64,
    /// Popped node programs and their surviving children, when recording.
    expansions: Vec<(Vec<Program>, Vec<Program>)>,
    solution_cost: Option<f64>,
}

impl BruteSearch {
    pub fn new(pcfg: &Pcfg, task: &Task, model: &CostModel, config: &SearchConfig) -> Result<BruteSearch> {
        let ctx = Ctx::new(pcfg, task, model, config)?;
        let grammar = pcfg.grammar().clone();
        let mut bank = Bank::new(grammar.types().len());
        if !config.equivalence {
            bank = bank.disable_equivalence();
        }
        Ok(BruteSearch {
            ctx,
            grammar,
            bank,
            queue: BinaryHeap::new(),
            seq: 0,
            expansions: Vec::new(),
            solution_cost: None,
        })
    }

    pub fn expansions(&self) -> &[(Vec<Program>, Vec<Program>)] {
        &self.expansions
    }

    pub fn run(mut self) -> Result<SearchResult> {
        let outcome = self.search();
        Ok(self.finish(outcome))
    }

    pub fn run_in_place(&mut self) -> SearchResult {
        let outcome = self.search();
        self.finish(outcome)
    }

    fn finish(&mut self, outcome: Outcome) -> SearchResult {
        let cost = self.solution_cost;
        self.ctx.finish(outcome, cost)
    }

    fn push(&mut self, priority: f64, entries: Vec<Entry>) {
        self.queue.push(Reverse(Node {
            priority,
            seq: self.seq,
            entries,
        }));
        self.seq += 1;
    }

    /// Runs one program for pruning; returns its entry if it survives. Only
    /// a solution found here counts as an evaluation; the rest count when popped.
    fn consider(&mut self, p: Program, sig: Signature, w: f64) -> Result<Option<Entry>, Outcome> {
        if let Some(o) = self.ctx.over_budget(self.bank.len() + self.queue.len()) {
            return Err(o);
        }
        let cost = self.ctx.post_cost(w, &sig);
        if self.ctx.eval.is_solution(&sig) {
            self.solution_cost = Some(cost);
            return Err(Outcome::Solved(p));
        }
        self.ctx.harvest(&p, &sig, cost);
        let ty = self.grammar.rule(p.rule()).ret;
        if self.bank.insert(p.clone(), ty, cost, sig.clone()) {
            Ok(Some(Entry { program: p, sig, cost }))
        } else {
            Ok(None)
        }
    }

    fn search(&mut self) -> Outcome {
        let grammar = self.grammar.clone();
        let post = self.ctx.model.is_post();
        // Root: all terminal programs.
        let mut root = Vec::new();
        for rule in grammar.terminals() {
            let p = Program::leaf(rule.id);
            let sig = self.ctx.eval.terminal(rule.id);
            let w = if post { 1.0 } else { self.ctx.model.rule_cost(rule.id) };
            self.ctx.generations += 1;
            self.ctx.evaluations += 1;
            match self.consider(p, sig, w) {
                Err(o) => return o,
                Ok(Some(e)) => root.push(e),
                Ok(None) => {}
            }
        }
        self.push(0.0, root);
        let ops: Vec<Rule> = grammar.operations().cloned().collect();
        while let Some(Reverse(node)) = self.queue.pop() {
            if self.ctx.timed_out() {
                return Outcome::Timeout;
            }
            self.ctx.states_expanded += 1;
            if node.entries.len() == 1 && node.seq > 0 {
                self.ctx.evaluations += 1;
            }
            let before = self.ctx.generations;
            let mut kept = Vec::new();
            let node_programs: HashSet<&Program> = node.entries.iter().map(|e| &e.program).collect();
            if let [single] = node.entries.as_slice() {
                self.ctx.record(&single.program, node.priority, node.priority);
            }
            // Children combine programs banked before this pop.
            let snapshot: Vec<Vec<Entry>> = (0..grammar.types().len()).map(|t| self.bank.of_type(t).to_vec()).collect();
            let flags: Vec<Vec<bool>> = snapshot
                .iter()
                .map(|es| es.iter().map(|e| node_programs.contains(&e.program)).collect())
                .collect();
            for rule in &ops {
                let pool: Vec<&[Entry]> = rule.args.iter().map(|&t| snapshot[t].as_slice()).collect();
                let mine: Vec<Vec<bool>> = rule.args.iter().map(|&t| flags[t].clone()).collect();
                let mut refs: Vec<&Signature> = Vec::with_capacity(rule.arity());
                let mut stop = None;
                let _ = for_each_touching(&pool, &mine, |t| {
                    self.ctx.generations += 1;
                    refs.clear();
                    refs.extend(t.iter().map(|e| &e.sig));
                    let sig = self.ctx.eval.apply(rule.id, &refs);
                    let kids: Vec<f64> = t.iter().map(|e| e.cost).collect();
                    let w = if post { 1.0 + kids.iter().sum::<f64>() } else { self.ctx.model.combine(rule.id, &kids) };
                    let p = Program::new(rule.id, t.iter().map(|e| e.program.clone()).collect());
                    match self.consider(p, sig, w) {
                        Err(o) => {
                            if matches!(o, Outcome::Solved(_)) {
                                self.ctx.evaluations += 1;
                            }
                            stop = Some(o);
                            ControlFlow::Break(())
                        }
                        Ok(Some(e)) => {
                            kept.push(e);
                            ControlFlow::Continue(())
                        }
                        Ok(None) => ControlFlow::Continue(()),
                    }
                });
                if let Some(o) = stop {
                    return o;
                }
            }
            if self.ctx.config.record {
                self.expansions.push((
                    node.entries.iter().map(|e| e.program.clone()).collect(),
                    kept.iter().map(|e| e.program.clone()).collect(),
                ));
            }
            if self.ctx.config.trace {
                self.ctx.trace.push(TraceRow {
                    iteration: self.ctx.states_expanded,
                    rule: node.entries.first().filter(|_| node.entries.len() == 1).map(|e| e.program.rule()),
                    indices: Vec::new(),
                    cost: node.priority,
                    generated: self.ctx.generations - before,
                    bank: self.bank.len(),
                });
            }
            for e in kept {
                let priority = e.cost;
                self.push(priority, vec![e]);
            }
        }
        Outcome::Exhausted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Value;

    fn entries(n: usize) -> Vec<Entry> {
        (0..n)
            .map(|i| Entry {
                program: Program::leaf(i),
                sig: vec![Value::Int(i as i64)].into(),
                cost: 1.0,
            })
            .collect()
    }

    #[test]
    fn touching_tuples_match_a_filtered_product() {
        let pool = entries(4);
        let is_mine = |e: &Entry| e.program.rule() == 1 || e.program.rule() == 3;
        for k in 1..=3 {
            let slots: Vec<&[Entry]> = vec![pool.as_slice(); k];
            let mut want = Vec::new();
            let _ = crate::search::product(&slots, |t| {
                if t.iter().any(|e| is_mine(e)) {
                    want.push(t.iter().map(|e| e.program.rule()).collect::<Vec<_>>());
                }
                ControlFlow::Continue(())
            });
            let mine: Vec<Vec<bool>> = slots.iter().map(|s| s.iter().map(is_mine).collect()).collect();
            let mut got = Vec::new();
            let _ = for_each_touching(&slots, &mine, |t| {
                got.push(t.iter().map(|e| e.program.rule()).collect::<Vec<_>>());
                ControlFlow::Continue(())
            });
            assert_eq!(got, want, "arity {k}");
        }
    }
}
