use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, RuleId, RuleKind, TypeId};
use crate::interp::value::{parse_word, Value};

/// An immutable AST node. Children are shared, so building `r(p1, .., pk)` from
/// banked programs copies `k` pointers.
#[derive(Clone)]
pub struct Program(Arc<Node>);

struct Node {
    rule: RuleId,
    children: Box<[Program]>,
    size: usize,
    hash: u64,
}

fn mix(mut h: u64, x: u64) -> u64 {
    h ^= x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h.wrapping_mul(0xff51_afd7_ed55_8ccd)
}

impl Program {
    pub fn leaf(rule: RuleId) -> Program {
        Program::new(rule, Vec::new())
    }

    pub fn new(rule: RuleId, children: Vec<Program>) -> Program {
        let mut hash = mix(0xcbf2_9ce4_8422_2325, rule as u64);
        let mut size = 1;
        for c in &children {
            hash = mix(hash, c.0.hash);
            size += c.0.size;
        }
        Program(Arc::new(Node {
            rule,
            children: children.into_boxed_slice(),
            size,
            hash,
        }))
    }

    pub fn rule(&self) -> RuleId {
        self.0.rule
    }

    pub fn children(&self) -> &[Program] {
        &self.0.children
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn ret(&self, grammar: &Grammar) -> TypeId {
        grammar.rule(self.0.rule).ret
    }

    /// Rule ids of every node, pre-order.
    pub fn rules_used(&self) -> Vec<RuleId> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            out.push(p.rule());
            stack.extend(p.children().iter().rev());
        }
        out
    }

    pub fn display<'a>(&'a self, grammar: &'a Grammar) -> Display<'a> {
        Display {
            program: self,
            grammar,
        }
    }

    pub fn to_prefix(&self, grammar: &Grammar) -> String {
        self.display(grammar).to_string()
    }

    /// Parses prefix notation, reading the top level as the initial type.
    pub fn parse(text: &str, grammar: &Grammar) -> Result<Program> {
        Program::parse_as(text, grammar, grammar.initial())
    }

    pub fn parse_as(text: &str, grammar: &Grammar, ty: TypeId) -> Result<Program> {
        let fail = |reason: &str| Error::ProgramSyntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let tokens = tokenize(text).map_err(|r| fail(&r))?;
        let parser = Parser { grammar, tokens };
        match parser.expr(0, ty) {
            Some((p, end)) if end == parser.tokens.len() => Ok(p),
            Some(_) => Err(fail("trailing input")),
            None => Err(fail(&format!(
                "no derivation from type {}",
                grammar.type_name(ty)
            ))),
        }
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.rule == other.0.rule
                && self.0.children == other.0.children)
    }
}

impl Eq for Program {}

impl Hash for Program {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children().is_empty() {
            write!(f, "#{}", self.rule())
        } else {
            write!(f, "(#{}", self.rule())?;
            for c in self.children() {
                write!(f, " {c:?}")?;
            }
            f.write_str(")")
        }
    }
}

pub struct Display<'a> {
    program: &'a Program,
    grammar: &'a Grammar,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = self.grammar.rule(self.program.rule());
        if rule.is_terminal() {
            return f.write_str(&rule.op);
        }
        write!(f, "({}", rule.op)?;
        for c in self.program.children() {
            write!(f, " {}", c.display(self.grammar))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Quoted(String),
    Atom(String),
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b if b.is_ascii_whitespace() => i += 1,
            b'(' => {
                out.push(Token::Open);
                i += 1;
            }
            b')' => {
                out.push(Token::Close);
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += if bytes[i] == b'\\' { 2 } else { 1 };
                }
                if i >= bytes.len() {
                    return Err("unterminated string".into());
                }
                i += 1;
                let s: String = serde_json::from_str(&text[start..i])
                    .map_err(|e| format!("bad string literal: {e}"))?;
                out.push(Token::Quoted(s));
            }
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                out.push(Token::Atom(text[start..i].to_string()));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    grammar: &'a Grammar,
    tokens: Vec<Token>,
}

impl Parser<'_> {
    /// Backtracking, type-directed descent. Returns the program and the
    /// position after it.
    fn expr(&self, pos: usize, ty: TypeId) -> Option<(Program, usize)> {
        match self.tokens.get(pos)? {
            Token::Open => {
                let Token::Atom(op) = self.tokens.get(pos + 1)? else {
                    return None;
                };
                for &r in self.grammar.rules_for(ty) {
                    let rule = self.grammar.rule(r);
                    if rule.is_terminal() || rule.op != *op {
                        continue;
                    }
                    let mut at = pos + 2;
                    let mut children = Vec::with_capacity(rule.arity());
                    for &arg in &rule.args {
                        match self.expr(at, arg) {
                            Some((c, next)) => {
                                children.push(c);
                                at = next;
                            }
                            None => break,
                        }
                    }
                    if children.len() == rule.arity() && self.tokens.get(at) == Some(&Token::Close) {
                        return Some((Program::new(r, children), at + 1));
                    }
                }
                None
            }
            Token::Close => None,
            token => {
                let r = self
                    .grammar
                    .rules_for(ty)
                    .iter()
                    .copied()
                    .find(|&r| terminal_matches(&self.grammar.rule(r).kind, token))?;
                Some((Program::leaf(r), pos + 1))
            }
        }
    }
}

fn terminal_matches(kind: &RuleKind, token: &Token) -> bool {
    match (kind, token) {
        (RuleKind::Literal(Value::Str(s)), Token::Quoted(t)) => **s == **t,
        (RuleKind::Input(name), Token::Atom(a)) => name == a,
        (RuleKind::Literal(Value::Int(i)), Token::Atom(a)) => a.parse::<i64>().ok() == Some(*i),
        (RuleKind::Literal(Value::Bool(b)), Token::Atom(a)) => a.parse::<bool>().ok() == Some(*b),
        (RuleKind::Literal(Value::Bv(w)), Token::Atom(a)) => parse_word(a) == Some(*w),
        _ => false,
    }
}
