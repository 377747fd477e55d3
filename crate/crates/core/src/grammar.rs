//! Typed grammars, rule probabilities and the probability/cost transform.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::semantics::{self, Op};
use crate::interp::value::{Sort, Value};

pub type TypeId = usize;
pub type RuleId = usize;

/// Per non-terminal tolerance on the probability simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeTag {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    Literal(Value),
    Input(String),
    Operation(Op),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: RuleId,
    /// Operator name; for terminals the literal text or argument name.
    pub op: String,
    pub ret: TypeId,
    pub args: Vec<TypeId>,
    pub kind: RuleKind,
}

impl Rule {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.args.is_empty()
    }
}

/// A typed context-free grammar. Immutable once built.
#[derive(Debug, Clone)]
pub struct Grammar {
    types: Vec<TypeTag>,
    initial: TypeId,
    rules: Vec<Rule>,
    by_ret: Vec<Vec<RuleId>>,
}

impl Grammar {
    pub fn types(&self) -> &[TypeTag] {
        &self.types
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.types[t].name
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn sort_of(&self, t: TypeId) -> Sort {
        self.types[t].sort
    }

    pub fn initial(&self) -> TypeId {
        self.initial
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id]
    }

    pub fn rules_for(&self, t: TypeId) -> &[RuleId] {
        &self.by_ret[t]
    }

    pub fn terminals(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| r.is_terminal())
    }

    pub fn operations(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| !r.is_terminal())
    }

    pub fn max_arity(&self) -> usize {
        self.rules.iter().map(Rule::arity).max().unwrap_or(0)
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().filter_map(|r| match &r.kind {
            RuleKind::Input(name) => Some(name.as_str()),
            _ => None,
        })
    }
}

/// A grammar together with one probability and one cost per rule.
#[derive(Debug, Clone)]
pub struct Pcfg {
    grammar: Arc<Grammar>,
    prob: Vec<f64>,
    cost: Vec<f64>,
}

impl Pcfg {
    /// Uniform distribution over the rules of each non-terminal.
    pub fn uniform(grammar: Arc<Grammar>) -> Pcfg {
        let mut prob = vec![0.0; grammar.rules.len()];
        for ids in &grammar.by_ret {
            for &id in ids {
                prob[id] = 1.0 / ids.len() as f64;
            }
        }
        let cost = prob.iter().map(|&p| -p.log2()).collect();
        Pcfg {
            grammar,
            prob,
            cost,
        }
    }

    /// Builds a PCFG from explicit probabilities. Values must lie in (0, 1] and
    /// each non-terminal's rules must sum to one within [`SIMPLEX_TOLERANCE`].
    pub fn from_probabilities(grammar: Arc<Grammar>, prob: Vec<f64>) -> Result<Pcfg> {
        if prob.len() != grammar.rules.len() {
            return Err(Error::Grammar(format!(
                "{} probabilities for {} rules",
                prob.len(),
                grammar.rules.len()
            )));
        }
        let cost = prob
            .iter()
            .map(|&p| cost_from_probability(p))
            .collect::<Result<Vec<_>>>()?;
        check_simplex(&grammar, &prob)?;
        Ok(Pcfg {
            grammar,
            prob,
            cost,
        })
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn prob(&self, r: RuleId) -> f64 {
        self.prob[r]
    }

    pub fn cost(&self, r: RuleId) -> f64 {
        self.cost[r]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }
}

fn check_simplex(grammar: &Grammar, prob: &[f64]) -> Result<()> {
    for (t, ids) in grammar.by_ret.iter().enumerate() {
        if ids.is_empty() {
            continue;
        }
        let sum: f64 = ids.iter().map(|&r| prob[r]).sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Grammar(format!(
                "probabilities of type {} sum to {sum}",
                grammar.types[t].name
            )));
        }
    }
    Ok(())
}

/// `-log2(p)`; defined for `0 < p <= 1`.
pub fn cost_from_probability(p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 || p > 1.0 {
        return Err(Error::Probability(p));
    }
    // -log2(1) is -0.0; normalise the sign.
    Ok(-p.log2() + 0.0)
}

/// The largest rule cost `l`.
pub fn max_rule_cost(pcfg: &Pcfg) -> f64 {
    pcfg.cost.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Document format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TypeEntry {
    Symbol(String),
    Declared { name: String, sort: Sort },
}

impl TypeEntry {
    fn name(&self) -> &str {
        match self {
            TypeEntry::Symbol(name) | TypeEntry::Declared { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Literal,
    Input,
    Operation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub op: String,
    pub ret: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

impl RuleEntry {
    pub fn literal(ret: &str, value: serde_json::Value) -> RuleEntry {
        RuleEntry {
            op: String::new(),
            ret: ret.into(),
            args: Vec::new(),
            kind: KindTag::Literal,
            value: Some(value),
            prob: None,
        }
    }

    pub fn input(ret: &str, name: &str) -> RuleEntry {
        RuleEntry {
            op: String::new(),
            ret: ret.into(),
            args: Vec::new(),
            kind: KindTag::Input,
            value: Some(serde_json::Value::String(name.into())),
            prob: None,
        }
    }

    pub fn operation(op: &str, ret: &str, args: &[&str]) -> RuleEntry {
        RuleEntry {
            op: op.into(),
            ret: ret.into(),
            args: args.iter().map(|a| a.to_string()).collect(),
            kind: KindTag::Operation,
            value: None,
            prob: None,
        }
    }

    pub fn with_prob(mut self, p: f64) -> RuleEntry {
        self.prob = Some(p);
        self
    }
}

/// The on-disk grammar description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarDocument {
    pub types: Vec<TypeEntry>,
    pub initial: String,
    pub rules: Vec<RuleEntry>,
}

/// Parses a JSON grammar document.
pub fn parse_grammar(text: &str) -> Result<Pcfg> {
    let doc: GrammarDocument =
        serde_json::from_str(text).map_err(|e| Error::json("grammar document", e))?;
    build(&doc)
}

pub fn load_grammar(path: impl AsRef<Path>) -> Result<Pcfg> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: GrammarDocument =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    build(&doc)
}

/// Validates a document and assigns rule ids in document order.
pub fn build(doc: &GrammarDocument) -> Result<Pcfg> {
    let mut types = Vec::with_capacity(doc.types.len());
    let mut index = HashMap::new();
    for entry in &doc.types {
        let name = entry.name().to_string();
        let sort = match entry {
            TypeEntry::Declared { sort, .. } => *sort,
            TypeEntry::Symbol(s) => Sort::from_symbol(s).ok_or_else(|| {
                Error::Grammar(format!("type `{s}` needs an explicit sort"))
            })?,
        };
        if index.insert(name.clone(), types.len()).is_some() {
            return Err(Error::Grammar(format!("type `{name}` declared twice")));
        }
        types.push(TypeTag { name, sort });
    }
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Grammar(format!("undeclared type `{name}`")))
    };
    let initial = lookup(&doc.initial)?;

    let mut rules = Vec::with_capacity(doc.rules.len());
    let mut by_ret = vec![Vec::new(); types.len()];
    for (id, entry) in doc.rules.iter().enumerate() {
        let ret = lookup(&entry.ret)?;
        let args = entry
            .args
            .iter()
            .map(|a| lookup(a))
            .collect::<Result<Vec<_>>>()?;
        let sort = types[ret].sort;
        let context = |msg: String| Error::Grammar(format!("rule {id}: {msg}"));
        let (op, kind) = match entry.kind {
            KindTag::Literal | KindTag::Input if !args.is_empty() => {
                return Err(context("terminal rules take no arguments".into()))
            }
            KindTag::Literal => {
                let json = entry
                    .value
                    .as_ref()
                    .ok_or_else(|| context("literal without `value`".into()))?;
                let value = Value::from_json(json, sort).map_err(context)?;
                (literal_text(&value), RuleKind::Literal(value))
            }
            KindTag::Input => {
                let name = entry
                    .value
                    .as_ref()
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| context("input rule needs the argument name in `value`".into()))?;
                (name.to_string(), RuleKind::Input(name.to_string()))
            }
            KindTag::Operation => {
                if args.is_empty() {
                    return Err(context(format!("operation `{}` has no arguments", entry.op)));
                }
                let sorts: Vec<Sort> = args.iter().map(|&a| types[a].sort).collect();
                let op = semantics::resolve(&entry.op, &sorts, sort).ok_or_else(|| {
                    context(format!(
                        "unknown operator `{}` over ({}) -> {}",
                        entry.op,
                        sorts.iter().map(Sort::to_string).collect::<Vec<_>>().join(", "),
                        sort
                    ))
                })?;
                (entry.op.clone(), RuleKind::Operation(op))
            }
        };
        by_ret[ret].push(id);
        rules.push(Rule {
            id,
            op,
            ret,
            args,
            kind,
        });
    }
    let grammar = Arc::new(Grammar {
        types,
        initial,
        rules,
        by_ret,
    });

    let given: Vec<Option<f64>> = doc.rules.iter().map(|r| r.prob).collect();
    let mut prob = Pcfg::uniform(grammar.clone()).prob;
    for (t, ids) in grammar.by_ret.iter().enumerate() {
        let present = ids.iter().filter(|&&r| given[r].is_some()).count();
        if present == 0 {
            continue;
        }
        if present != ids.len() {
            return Err(Error::Grammar(format!(
                "type `{}` mixes rules with and without probabilities",
                grammar.types[t].name
            )));
        }
        for &r in ids {
            let p = given[r].unwrap_or_default();
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Probability(p));
            }
            prob[r] = p;
        }
    }
    Pcfg::from_probabilities(grammar, prob)
}

/// Text used for a literal in prefix notation.
pub(crate) fn literal_text(value: &Value) -> String {
    match value {
        Value::Str(s) => serde_json::to_string(&**s).expect("strings always serialise"),
        other => other.to_string(),
    }
}
