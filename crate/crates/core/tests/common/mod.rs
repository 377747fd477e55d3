#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use beesynth::costs::{BoundOracle, CostKind, CostModel, Oracle};
use beesynth::search::SearchResult;
use beesynth::grammar::{build, GrammarDocument, Pcfg, RuleEntry, TypeEntry};
use beesynth::interp::value::Sort;
use beesynth::interp::{output_signature, Domain, Env, Program, Signature, Task, Value};
use rand::Rng;
use serde_json::json;

pub fn data(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(path)
}

pub fn string_type(name: &str) -> TypeEntry {
    TypeEntry::Declared {
        name: name.into(),
        sort: Sort::String,
    }
}

/// `I -> concat(I, I) | "1" | ... | "n"` with the given probabilities
/// (concat first, then the literals in order).
pub fn concat_pcfg(n: usize, probs: Option<(f64, &dyn Fn(usize) -> f64)>) -> Pcfg {
    let mut rules = vec![RuleEntry::operation("concat", "I", &["I", "I"])];
    rules.extend((1..=n).map(|i| RuleEntry::literal("I", json!(i.to_string()))));
    if let Some((concat, lit)) = probs {
        rules[0] = rules[0].clone().with_prob(concat);
        for i in 1..=n {
            rules[i] = rules[i].clone().with_prob(lit(i));
        }
    }
    build(&GrammarDocument {
        types: vec![string_type("I")],
        initial: "I".into(),
        rules,
    })
    .unwrap()
}

/// The task of producing `output` from no input.
pub fn constant_task(output: &str, examples: usize) -> Task {
    Task::new(
        "constant",
        Domain::Strings,
        vec![],
        vec![Env::new(); examples],
        vec![Value::str(output); examples],
    )
    .unwrap()
}

/// Example 3's DSL, `I -> 1 | 2 | I + I`, over strings so that programs can
/// be told apart: literals first, then the operation. Costs: 1 < 2 < rule.
pub fn example3_pcfg() -> Pcfg {
    let doc: GrammarDocument = serde_json::from_value(json!({
        "types": ["I"],
        "initial": "I",
        "rules": [
            {"ret": "I", "kind": "literal", "value": 1, "prob": 0.5},
            {"ret": "I", "kind": "literal", "value": 2, "prob": 0.3},
            {"op": "add", "ret": "I", "args": ["I", "I"], "kind": "operation", "prob": 0.2}
        ]
    }))
    .unwrap();
    build(&doc).unwrap()
}

pub fn int_task(outputs: &[i64]) -> Task {
    Task::new(
        "ints",
        Domain::Strings,
        vec![],
        vec![Env::new(); outputs.len()],
        outputs.iter().map(|&v| Value::Int(v)).collect(),
    )
    .unwrap()
}

const LETTERS: [&str; 6] = ["a", "b", "c", "ab", "ba", "cc"];
const STRING_OPS: [(&str, usize); 4] = [("concat", 2), ("toUpper", 1), ("toLower", 1), ("concat", 2)];

/// A random single-type string PCFG with at most `max_rules` rules: one to
/// three literals plus at least one operation of arity one or two.
pub fn random_pcfg(rng: &mut impl Rng, max_rules: usize) -> Pcfg {
    let terminals = rng.gen_range(1..=3.min(max_rules - 1));
    let ops = rng.gen_range(1..=(max_rules - terminals));
    let mut rules = Vec::new();
    let mut used = HashSet::new();
    while rules.len() < terminals {
        let s = LETTERS[rng.gen_range(0..LETTERS.len())];
        if used.insert(s) {
            rules.push(RuleEntry::literal("S", json!(s)));
        }
    }
    for _ in 0..ops {
        let (op, arity) = STRING_OPS[rng.gen_range(0..STRING_OPS.len())];
        rules.push(RuleEntry::operation(op, "S", &vec!["S"; arity]));
    }
    let weights: Vec<f64> = (0..rules.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = weights.iter().sum();
    let rules = rules
        .into_iter()
        .zip(weights)
        .map(|(r, w)| r.with_prob(w / z))
        .collect();
    build(&GrammarDocument {
        types: vec![TypeEntry::Symbol("S".into())],
        initial: "S".into(),
        rules,
    })
    .unwrap()
}

/// A string task no program of [`random_pcfg`] can solve.
pub fn unsolvable_task() -> Task {
    constant_task("#", 2)
}

/// A program with its cost; `w` is the pre-penalty cost and `w_post` the
/// banked cost (equal for pre-generation models).
#[derive(Debug, Clone)]
pub struct Costed {
    pub program: Program,
    pub w: f64,
    pub w_post: f64,
}

/// Every program of the initial type whose `w` is at most `bound`, built by
/// repeated combination until nothing new appears. For post-generation
/// models costs follow `w = 1 + sum of children's w'` and
/// `w' = w + penalty(oracle probability)`.
pub fn programs_up_to(pcfg: &Pcfg, task: &Task, model: &CostModel, oracle: Option<&BoundOracle>, bound: f64) -> Vec<Costed> {
    let g = pcfg.grammar();
    let post = model.is_post();
    let slack = 1e-9;
    let mut known: HashMap<Program, (f64, f64)> = HashMap::new();
    let mut by_type: Vec<Vec<(Program, f64)>> = vec![Vec::new(); g.types().len()];
    let score = |p: &Program, w: f64| -> f64 {
        match oracle {
            Some(o) => {
                let sig: Signature = output_signature(g, p, task).unwrap();
                model.post_cost(w, o.probability(&sig))
            }
            None => w,
        }
    };
    for r in g.terminals() {
        let w = if post { 1.0 } else { model.rule_cost(r.id) };
        if w <= bound + slack {
            let p = Program::leaf(r.id);
            let wp = score(&p, w);
            known.insert(p.clone(), (w, wp));
            by_type[r.ret].push((p, wp));
        }
    }
    loop {
        let mut fresh = Vec::new();
        for r in g.operations() {
            let base = if post { 1.0 } else { model.rule_cost(r.id) };
            let mut pools: Vec<Vec<(Program, f64)>> = r.args.iter().map(|&t| by_type[t].clone()).collect();
            for pool in &mut pools {
                pool.sort_by(|a, b| a.1.total_cmp(&b.1));
            }
            let mut tuple = Vec::new();
            combine(&pools, 0, base, bound + slack, &mut tuple, &mut |kids: &[&(Program, f64)], w| {
                let p = Program::new(r.id, kids.iter().map(|k| k.0.clone()).collect());
                if !known.contains_key(&p) {
                    fresh.push((r.ret, p, w));
                }
            });
        }
        if fresh.is_empty() {
            break;
        }
        for (t, p, w) in fresh {
            if known.contains_key(&p) {
                continue;
            }
            let wp = score(&p, w);
            known.insert(p.clone(), (w, wp));
            by_type[t].push((p, wp));
        }
    }
    let initial = g.initial();
    known
        .into_iter()
        .filter(|(p, _)| p.ret(g) == initial)
        .map(|(program, (w, w_post))| Costed { program, w, w_post })
        .collect()
}

fn combine<'a>(
    pools: &'a [Vec<(Program, f64)>],
    j: usize,
    acc: f64,
    bound: f64,
    tuple: &mut Vec<&'a (Program, f64)>,
    f: &mut impl FnMut(&[&'a (Program, f64)], f64),
) {
    if j == pools.len() {
        f(tuple, acc);
        return;
    }
    for item in &pools[j] {
        if acc + item.1 > bound {
            break;
        }
        tuple.push(item);
        combine(pools, j + 1, acc + item.1, bound, tuple, f);
        tuple.pop();
    }
}

/// Groups programs by cost rounded to `1e-7`.
pub fn by_cost<'a>(items: impl Iterator<Item = (&'a Program, f64)>) -> BTreeMap<i64, HashSet<Program>> {
    let mut out: BTreeMap<i64, HashSet<Program>> = BTreeMap::new();
    for (p, w) in items {
        out.entry((w * 1e7).round() as i64).or_default().insert(p.clone());
    }
    out
}

/// Random strings over a small alphabet.
pub fn random_word(rng: &mut impl Rng, max: usize) -> String {
    const ALPHABET: &[u8] = b"abAB -.1";
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect()
}

/// Natural cubic spline by the tridiagonal second-derivative system.
pub fn tridiagonal_spline(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len() - 1;
    let h: Vec<f64> = (0..n).map(|i| xs[i + 1] - xs[i]).collect();
    let mut m = vec![0.0; n + 1];
    let (mut a, mut b, mut c, mut d) = (vec![0.0; n + 1], vec![1.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    for i in 1..n {
        a[i] = h[i - 1];
        b[i] = 2.0 * (h[i - 1] + h[i]);
        c[i] = h[i];
        d[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    for i in 1..=n {
        let f = a[i] / b[i - 1];
        b[i] -= f * c[i - 1];
        d[i] -= f * d[i - 1];
    }
    m[n] = d[n] / b[n];
    for i in (0..n).rev() {
        m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
    }
    let i = (0..n).find(|&i| x <= xs[i + 1]).unwrap_or(n - 1);
    let (t0, t1) = (xs[i + 1] - x, x - xs[i]);
    m[i] * t0.powi(3) / (6.0 * h[i])
        + m[i + 1] * t1.powi(3) / (6.0 * h[i])
        + (ys[i] / h[i] - m[i] * h[i] / 6.0) * t0
        + (ys[i + 1] / h[i] - m[i + 1] * h[i] / 6.0) * t1
}

pub fn model(kind: CostKind, pcfg: &Pcfg) -> CostModel {
    match kind {
        CostKind::Size => CostModel::size(pcfg.grammar()),
        _ => CostModel::new(kind, pcfg, Some(Oracle::Heuristic)),
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Checks that the log is sorted by `w` and that every program strictly
/// cheaper than the last one logged is exactly the oracle's set.
pub fn check_order(pcfg: &Pcfg, task: &Task, kind: CostKind, r: &SearchResult) -> Result<(), String> {
    let m = model(kind, pcfg);
    let log = &r.log;
    ensure(!log.is_empty(), || "empty log".into())?;
    for pair in log.windows(2) {
        ensure(pair[0].w <= pair[1].w + 1e-9, || format!("{} then {}", pair[0].w, pair[1].w))?;
    }
    let last = log.last().unwrap().w;
    let oracle = m.bind(task).unwrap();
    let want = programs_up_to(pcfg, task, &m, oracle.as_ref(), last);
    let below = |w: f64| w < last - 1e-7;
    let got = by_cost(log.iter().filter(|g| below(g.w)).map(|g| (&g.program, g.w)));
    let exp = by_cost(want.iter().filter(|c| below(c.w)).map(|c| (&c.program, c.w)));
    ensure(got == exp, || format!("{} programs below {last}, oracle has {}", got.values().map(HashSet::len).sum::<usize>(), exp.values().map(HashSet::len).sum::<usize>()))?;
    let at_last = want.iter().filter(|c| !below(c.w)).count();
    ensure(log.iter().filter(|g| !below(g.w)).count() <= at_last, || "too many programs at the last cost".into())?;
    let costs: HashMap<&Program, f64> = want.iter().map(|c| (&c.program, c.w_post)).collect();
    for g in log {
        let c = costs.get(&g.program).ok_or("a logged program the oracle does not know")?;
        ensure((c - g.w_post).abs() < 1e-7, || format!("banked cost {} against {c}", g.w_post))?;
    }
    Ok(())
}
