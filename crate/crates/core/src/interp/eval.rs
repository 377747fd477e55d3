use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, RuleId, RuleKind};
use crate::interp::program::Program;
use crate::interp::semantics;
use crate::interp::task::{Env, Signature, Task};
use crate::interp::value::Value;

/// Evaluates `p` under one environment.
pub fn evaluate(grammar: &Grammar, p: &Program, env: &Env) -> Result<Value> {
    let rule = grammar.rule(p.rule());
    match &rule.kind {
        RuleKind::Literal(v) => Ok(v.clone()),
        RuleKind::Input(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnboundArgument(name.clone())),
        RuleKind::Operation(op) => {
            let args = p
                .children()
                .iter()
                .map(|c| evaluate(grammar, c, env))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Value> = args.iter().collect();
            Ok(semantics::apply(*op, &refs))
        }
    }
}

/// Outputs of `p` on every example of `task`.
pub fn output_signature(grammar: &Grammar, p: &Program, task: &Task) -> Result<Signature> {
    task.inputs.iter().map(|env| evaluate(grammar, p, env)).collect()
}

/// A grammar bound to a task. Terminal signatures are precomputed and
/// operations run vectorised over the examples, so a search only ever
/// applies one operator to already-computed child signatures.
#[derive(Debug, Clone)]
pub struct Evaluator {
    grammar: Arc<Grammar>,
    terminals: Vec<Option<Signature>>,
    target: Signature,
    examples: usize,
}

impl Evaluator {
    pub fn new(grammar: Arc<Grammar>, task: &Task) -> Result<Evaluator> {
        let n = task.len();
        let mut terminals = Vec::with_capacity(grammar.rules().len());
        for rule in grammar.rules() {
            let sort = grammar.sort_of(rule.ret);
            let sig: Option<Signature> = match &rule.kind {
                RuleKind::Literal(v) => Some(std::iter::repeat_n(v.clone(), n).collect()),
                RuleKind::Input(name) => {
                    let values = task
                        .inputs
                        .iter()
                        .map(|env| env.get(name).cloned())
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| Error::UnboundArgument(name.clone()))?;
                    if let Some(bad) = values.iter().find(|v| v.sort() != sort) {
                        return Err(Error::Task(format!(
                            "{}: argument `{name}` holds {bad}, grammar expects {sort}",
                            task.name
                        )));
                    }
                    Some(values.into())
                }
                RuleKind::Operation(_) => None,
            };
            terminals.push(sig);
        }
        let want = grammar.sort_of(grammar.initial());
        if let Some(bad) = task.outputs.iter().find(|v| v.sort() != want) {
            return Err(Error::Task(format!(
                "{}: output {bad} is not a {want}",
                task.name
            )));
        }
        Ok(Evaluator {
            grammar,
            terminals,
            target: task.target(),
            examples: n,
        })
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn target(&self) -> &Signature {
        &self.target
    }

    pub fn examples(&self) -> usize {
        self.examples
    }

    pub fn terminal(&self, rule: RuleId) -> Signature {
        self.terminals[rule]
            .clone()
            .expect("terminal signature requested for an operation")
    }

    /// Applies an operation rule to child signatures.
    pub fn apply(&self, rule: RuleId, children: &[&Signature]) -> Signature {
        let RuleKind::Operation(op) = self.grammar.rule(rule).kind else {
            return self.terminal(rule);
        };
        let mut args: Vec<&Value> = Vec::with_capacity(children.len());
        (0..self.examples)
            .map(|i| {
                args.clear();
                args.extend(children.iter().map(|c| &c[i]));
                semantics::apply(op, &args)
            })
            .collect()
    }

    /// Signature of a whole program, computed bottom-up.
    pub fn signature(&self, p: &Program) -> Signature {
        if p.children().is_empty() {
            return self.terminal(p.rule());
        }
        let sigs: Vec<Signature> = p.children().iter().map(|c| self.signature(c)).collect();
        let refs: Vec<&Signature> = sigs.iter().collect();
        self.apply(p.rule(), &refs)
    }

    pub fn is_solution(&self, sig: &Signature) -> bool {
        **sig == *self.target
    }
}
