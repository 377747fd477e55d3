mod common;

use std::collections::BTreeMap;

use beesynth::grammar::{load_grammar, parse_grammar, Pcfg};
use beesynth::interp::{evaluate, Domain, Env, Evaluator, Program, Task, Value};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Literals and operators needed for the golden cases below.
fn golden_grammar() -> Pcfg {
    parse_grammar(
        r#"{
        "types": ["S", "I", "B", "BV"],
        "initial": "S",
        "rules": [
            {"ret": "S", "kind": "literal", "value": "hello"},
            {"ret": "S", "kind": "literal", "value": "abcabc"},
            {"ret": "S", "kind": "literal", "value": "c"},
            {"ret": "S", "kind": "literal", "value": "x"},
            {"ret": "S", "kind": "literal", "value": "-12"},
            {"ret": "I", "kind": "literal", "value": 1},
            {"ret": "I", "kind": "literal", "value": 3},
            {"ret": "I", "kind": "literal", "value": -7},
            {"ret": "BV", "kind": "literal", "value": 5},
            {"ret": "BV", "kind": "literal", "value": 0},
            {"op": "substr", "ret": "S", "args": ["S", "I", "I"], "kind": "operation"},
            {"op": "indexOf", "ret": "I", "args": ["S", "S", "I"], "kind": "operation"},
            {"op": "strToInt", "ret": "I", "args": ["S"], "kind": "operation"},
            {"op": "intToStr", "ret": "S", "args": ["I"], "kind": "operation"},
            {"op": "mod", "ret": "I", "args": ["I", "I"], "kind": "operation"},
            {"op": "replace", "ret": "S", "args": ["S", "S", "S"], "kind": "operation"},
            {"op": "charAt", "ret": "S", "args": ["S", "I"], "kind": "operation"},
            {"op": "udiv", "ret": "BV", "args": ["BV", "BV"], "kind": "operation"},
            {"op": "urem", "ret": "BV", "args": ["BV", "BV"], "kind": "operation"},
            {"op": "sdiv", "ret": "BV", "args": ["BV", "BV"], "kind": "operation"},
            {"op": "isPrefixOf", "ret": "B", "args": ["S", "S"], "kind": "operation"}
        ]
    }"#,
    )
    .unwrap()
}

fn eval_as(pcfg: &Pcfg, text: &str, ty: &str) -> Value {
    let g = pcfg.grammar();
    let p = Program::parse_as(text, g, g.type_id(ty).unwrap()).unwrap();
    evaluate(g, &p, &Env::new()).unwrap()
}

#[test]
fn golden_string_semantics() {
    let g = golden_grammar();
    let s = |t: &str| eval_as(&g, t, "S");
    let i = |t: &str| eval_as(&g, t, "I");
    assert_eq!(s(r#"(substr "hello" 1 3)"#), Value::str("ell"));
    assert_eq!(s(r#"(substr "hello" 3 3)"#), Value::str("lo"));
    assert_eq!(s(r#"(substr "hello" -7 3)"#), Value::str(""));
    assert_eq!(s(r#"(charAt "hello" 1)"#), Value::str("e"));
    assert_eq!(s(r#"(charAt "hello" -7)"#), Value::str(""));
    assert_eq!(i(r#"(indexOf "abcabc" "c" 3)"#), Value::Int(5));
    assert_eq!(i(r#"(indexOf "abcabc" "x" 1)"#), Value::Int(-1));
    assert_eq!(i(r#"(strToInt "x")"#), Value::Int(-1));
    assert_eq!(i(r#"(strToInt "-12")"#), Value::Int(-1));
    assert_eq!(s("(intToStr -7)"), Value::str(""));
    assert_eq!(s(r#"(replace "abcabc" "c" "x")"#), Value::str("abxabc"));
    assert_eq!(i("(mod -7 3)"), Value::Int(2));
    assert_eq!(eval_as(&g, r#"(isPrefixOf "x" "hello")"#, "B"), Value::Bool(false));
}

#[test]
fn golden_bitvector_division() {
    let g = golden_grammar();
    assert_eq!(eval_as(&g, "(udiv 5 0)", "BV"), Value::Bv(u64::MAX));
    assert_eq!(eval_as(&g, "(urem 5 0)", "BV"), Value::Bv(5));
    assert_eq!(eval_as(&g, "(sdiv 0 0)", "BV"), Value::Bv(u64::MAX));
}

fn random_program(pcfg: &Pcfg, rng: &mut impl Rng, ty: usize, depth: usize) -> Program {
    let g = pcfg.grammar();
    let all = g.rules_for(ty);
    let terminals: Vec<usize> = all.iter().copied().filter(|&r| g.rule(r).is_terminal()).collect();
    let r = if depth <= 1 || (rng.gen_bool(0.3) && !terminals.is_empty()) {
        terminals[rng.gen_range(0..terminals.len())]
    } else {
        all[rng.gen_range(0..all.len())]
    };
    let kids = g.rule(r).args.iter().map(|&t| random_program(pcfg, rng, t, depth - 1)).collect();
    Program::new(r, kids)
}

fn environments(domain: Domain, rng: &mut impl Rng, n: usize) -> Vec<Env> {
    (0..n)
        .map(|_| {
            let mut env = BTreeMap::new();
            for name in ["arg0", "arg1"] {
                let v = match domain {
                    Domain::Strings => Value::str(random_word(rng, 8)),
                    Domain::Bitvectors => Value::Bv(match rng.gen_range(0..4) {
                        0 => rng.gen_range(0..70),
                        1 => u64::MAX - rng.gen_range(0..4),
                        _ => rng.gen(),
                    }),
                };
                env.insert(name.to_string(), v);
            }
            env
        })
        .collect()
}

#[test]
fn random_programs_evaluate_to_their_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (file, domain) in [("grammars/strings.json", Domain::Strings), ("grammars/bitvectors.json", Domain::Bitvectors)] {
        let pcfg = load_grammar(data(file)).unwrap();
        let g = pcfg.grammar();
        let envs = environments(domain, &mut rng, 4);
        for _ in 0..50_000 {
            let ty = rng.gen_range(0..g.types().len());
            let depth = rng.gen_range(1..=5);
            let p = random_program(&pcfg, &mut rng, ty, depth);
            for env in &envs {
                let v = evaluate(g, &p, env).unwrap();
                assert_eq!(v.sort(), g.sort_of(ty), "{}", p.to_prefix(g));
            }
        }
    }
}

#[test]
fn evaluator_agrees_with_evaluate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pcfg = load_grammar(data("grammars/strings.json")).unwrap();
    let g = pcfg.grammar();
    let envs = environments(Domain::Strings, &mut rng, 3);
    let outputs = vec![Value::str("?"); 3];
    let task = Task::new("t", Domain::Strings, vec![], envs.clone(), outputs).unwrap();
    let ev = Evaluator::new(g.clone(), &task).unwrap();
    for _ in 0..5000 {
        let p = random_program(&pcfg, &mut rng, g.initial(), 5);
        let want: Vec<Value> = envs.iter().map(|e| evaluate(g, &p, e).unwrap()).collect();
        assert_eq!(&ev.signature(&p)[..], &want[..]);
        let kids: Vec<_> = p.children().iter().map(|c| ev.signature(c)).collect();
        if !kids.is_empty() {
            let refs: Vec<_> = kids.iter().collect();
            assert_eq!(ev.apply(p.rule(), &refs), ev.signature(&p));
        }
    }
}

#[test]
fn unknown_input_is_an_error() {
    let pcfg = load_grammar(data("grammars/strings.json")).unwrap();
    let g = pcfg.grammar();
    let p = Program::parse("arg0", g).unwrap();
    assert!(evaluate(g, &p, &Env::new()).is_err());
}

fn bv(pcfg: &Pcfg, text: &str, a: u64, b: u64) -> u64 {
    let g = pcfg.grammar();
    let env = Env::from([("arg0".to_string(), Value::Bv(a)), ("arg1".to_string(), Value::Bv(b))]);
    match evaluate(g, &Program::parse_as(text, g, g.type_id("BV").unwrap()).unwrap(), &env).unwrap() {
        Value::Bv(w) => w,
        other => panic!("{other:?}"),
    }
}

proptest! {
    #[test]
    fn bitvector_algebra(a in any::<u64>(), b in any::<u64>(), shift in 64u64..) {
        let pcfg = load_grammar(data("grammars/bitvectors.json")).unwrap();
        let e = |t: &str| bv(&pcfg, t, a, b);
        prop_assert_eq!(e("(xor arg0 arg0)"), 0);
        prop_assert_eq!(e("(add arg0 (neg arg0))"), 0);
        prop_assert_eq!(e("(not (not arg0))"), a);
        prop_assert_eq!(e("(sub arg0 arg1)"), e("(add arg0 (neg arg1))"));
        prop_assert_eq!(e("(neg arg0)"), e("(add (not arg0) 1)"));
        prop_assert_eq!(e("(and arg0 (sub arg0 1))"), a & a.wrapping_sub(1));
        prop_assert_eq!(e("(or arg0 arg1)"), a | b);
        prop_assert_eq!(e("(mul arg0 arg1)"), a.wrapping_mul(b));
        if b != 0 {
            prop_assert_eq!(e("(add (mul (udiv arg0 arg1) arg1) (urem arg0 arg1))"), a);
        }
        let s = |t: &str| bv(&pcfg, t, a, shift);
        prop_assert_eq!(s("(shl arg0 arg1)"), 0);
        prop_assert_eq!(s("(lshr arg0 arg1)"), 0);
        prop_assert_eq!(s("(ashr arg0 arg1)"), if (a as i64) < 0 { u64::MAX } else { 0 });
        let n = b % 64;
        let k = |t: &str| bv(&pcfg, t, a, n);
        prop_assert_eq!(k("(shl arg0 arg1)"), a << n);
        prop_assert_eq!(k("(lshr arg0 arg1)"), a >> n);
        prop_assert_eq!(k("(ashr arg0 arg1)"), ((a as i64) >> n) as u64);
    }

    #[test]
    fn string_identities(a in "[a-cA-C .-]{0,8}", b in "[a-c]{0,3}") {
        let pcfg = load_grammar(data("grammars/strings.json")).unwrap();
        let g = pcfg.grammar();
        let env = Env::from([("arg0".to_string(), Value::str(&a)), ("arg1".to_string(), Value::str(&b))]);
        let e = |t: &str, ty: &str| evaluate(g, &Program::parse_as(t, g, g.type_id(ty).unwrap()).unwrap(), &env).unwrap();
        prop_assert_eq!(e("(concat arg0 arg1)", "S"), Value::str(format!("{a}{b}")));
        prop_assert_eq!(e("(length (concat arg0 arg1))", "I"), Value::Int((a.len() + b.len()) as i64));
        prop_assert_eq!(e("(substr arg0 0 (length arg0))", "S"), Value::str(&a));
        prop_assert_eq!(e("(toUpper arg0)", "S"), Value::str(a.to_uppercase()));
        prop_assert_eq!(e("(contains arg0 arg1)", "B"), Value::Bool(a.contains(&b)));
        prop_assert_eq!(e("(isPrefixOf arg1 arg0)", "B"), Value::Bool(a.starts_with(&b)));
        let find = a.find(&b).map_or(-1, |i| i as i64);
        prop_assert_eq!(e("(indexOf arg0 arg1 0)", "I"), Value::Int(find));
    }

    #[test]
    fn prefix_text_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for file in ["grammars/strings.json", "grammars/bitvectors.json"] {
            let pcfg = load_grammar(data(file)).unwrap();
            let g = pcfg.grammar();
            let ty = rng.gen_range(0..g.types().len());
            let p = random_program(&pcfg, &mut rng, ty, 5);
            let back = Program::parse_as(&p.to_prefix(g), g, ty).unwrap();
            prop_assert_eq!(back.to_prefix(g), p.to_prefix(g));
            prop_assert_eq!(back.size(), p.size());
        }
    }

    #[test]
    fn size_counts_nodes(seed in any::<u64>()) {
        fn count(p: &Program) -> usize {
            1 + p.children().iter().map(count).sum::<usize>()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pcfg = load_grammar(data("grammars/strings.json")).unwrap();
        let p = random_program(&pcfg, &mut rng, 0, 6);
        prop_assert_eq!(p.size(), count(&p));
        prop_assert!(p.rules_used().iter().all(|&r| r < pcfg.grammar().rules().len()));
    }
}
