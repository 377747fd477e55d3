//! Operator semantics for the string and bit-vector DSLs.
//!
//! String operators follow SMT-LIB string theory; bit-vector operators are
//! 64-bit SMT-LIB `bv` operators including their division-by-zero rules.
//! Every operator is total.

use std::sync::Arc;

use super::value::{Sort, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    // strings
    Concat,
    Replace,
    Substr,
    CharAt,
    ToLower,
    ToUpper,
    IntToStr,
    StrToInt,
    Length,
    IndexOf,
    Find,
    Contains,
    IsPrefixOf,
    IsSuffixOf,
    // integers
    Add,
    Sub,
    Mul,
    Mod,
    IsLess,
    IsGreater,
    // any sort
    Ite,
    IsEqual,
    // booleans
    And,
    Or,
    Not,
    // bit-vectors
    BvXor,
    BvAnd,
    BvOr,
    BvNot,
    BvNeg,
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvShl,
    BvLshr,
    BvAshr,
    BvRedor,
    /// Bit-wise operator whose boolean result is "word is non-zero".
    NonZero(BitwiseBool),
    Ult,
    Ule,
    Ugt,
    Uge,
    Slt,
    Sle,
    Sgt,
    Sge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitwiseBool {
    And,
    Or,
    Not,
    Redor,
}

/// Finds the operator named `name` taking `args` and returning `ret`.
pub fn resolve(name: &str, args: &[Sort], ret: Sort) -> Option<Op> {
    use Sort::*;
    let op = match (name, args, ret) {
        ("concat", [String, String], String) => Op::Concat,
        ("replace", [String, String, String], String) => Op::Replace,
        ("substr", [String, Int, Int], String) => Op::Substr,
        ("charAt", [String, Int], String) => Op::CharAt,
        ("toLower", [String], String) => Op::ToLower,
        ("toUpper", [String], String) => Op::ToUpper,
        ("intToStr", [Int], String) => Op::IntToStr,
        ("strToInt", [String], Int) => Op::StrToInt,
        ("length", [String], Int) => Op::Length,
        ("indexOf", [String, String, Int], Int) => Op::IndexOf,
        ("find", [String, String], Int) => Op::Find,
        ("contains", [String, String], Bool) => Op::Contains,
        ("isPrefixOf", [String, String], Bool) => Op::IsPrefixOf,
        ("isSuffixOf", [String, String], Bool) => Op::IsSuffixOf,
        ("add", [Int, Int], Int) => Op::Add,
        ("sub", [Int, Int], Int) => Op::Sub,
        ("mul", [Int, Int], Int) => Op::Mul,
        ("mod", [Int, Int], Int) => Op::Mod,
        ("isLess", [Int, Int], Bool) => Op::IsLess,
        ("isGreater", [Int, Int], Bool) => Op::IsGreater,
        ("ite", [Bool, a, b], r) if a == b && *b == r => Op::Ite,
        ("isEqual", [a, b], Bool) if a == b => Op::IsEqual,
        ("and", [Bool, Bool], Bool) => Op::And,
        ("or", [Bool, Bool], Bool) => Op::Or,
        ("not", [Bool], Bool) => Op::Not,
        ("xor", [Bitvector, Bitvector], Bitvector) => Op::BvXor,
        ("and", [Bitvector, Bitvector], Bitvector) => Op::BvAnd,
        ("or", [Bitvector, Bitvector], Bitvector) => Op::BvOr,
        ("not", [Bitvector], Bitvector) => Op::BvNot,
        ("neg", [Bitvector], Bitvector) => Op::BvNeg,
        ("add", [Bitvector, Bitvector], Bitvector) => Op::BvAdd,
        ("sub", [Bitvector, Bitvector], Bitvector) => Op::BvSub,
        ("mul", [Bitvector, Bitvector], Bitvector) => Op::BvMul,
        ("udiv", [Bitvector, Bitvector], Bitvector) => Op::BvUdiv,
        ("urem", [Bitvector, Bitvector], Bitvector) => Op::BvUrem,
        ("sdiv", [Bitvector, Bitvector], Bitvector) => Op::BvSdiv,
        ("srem", [Bitvector, Bitvector], Bitvector) => Op::BvSrem,
        ("shl", [Bitvector, Bitvector], Bitvector) => Op::BvShl,
        ("lshr", [Bitvector, Bitvector], Bitvector) => Op::BvLshr,
        ("ashr", [Bitvector, Bitvector], Bitvector) => Op::BvAshr,
        ("redor", [Bitvector], Bitvector) => Op::BvRedor,
        ("redor", [Bitvector], Bool) => Op::NonZero(BitwiseBool::Redor),
        ("and", [Bitvector, Bitvector], Bool) => Op::NonZero(BitwiseBool::And),
        ("or", [Bitvector, Bitvector], Bool) => Op::NonZero(BitwiseBool::Or),
        ("not", [Bitvector], Bool) => Op::NonZero(BitwiseBool::Not),
        ("ult", [Bitvector, Bitvector], Bool) => Op::Ult,
        ("ule", [Bitvector, Bitvector], Bool) => Op::Ule,
        ("ugt", [Bitvector, Bitvector], Bool) => Op::Ugt,
        ("uge", [Bitvector, Bitvector], Bool) => Op::Uge,
        ("slt", [Bitvector, Bitvector], Bool) => Op::Slt,
        ("sle", [Bitvector, Bitvector], Bool) => Op::Sle,
        ("sgt", [Bitvector, Bitvector], Bool) => Op::Sgt,
        ("sge", [Bitvector, Bitvector], Bool) => Op::Sge,
        _ => return None,
    };
    Some(op)
}

fn string(v: &Value) -> &str {
    match v {
        Value::Str(s) => s,
        other => panic!("expected a string, got {other}"),
    }
}

fn int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        other => panic!("expected an integer, got {other}"),
    }
}

fn boolean(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        other => panic!("expected a boolean, got {other}"),
    }
}

fn word(v: &Value) -> u64 {
    match v {
        Value::Bv(w) => *w,
        other => panic!("expected a bit-vector, got {other}"),
    }
}

/// Applies `op` to already-evaluated arguments. Arguments must have the sorts
/// the operator was resolved with.
pub fn apply(op: Op, args: &[&Value]) -> Value {
    match op {
        Op::Concat => {
            let (a, b) = (string(args[0]), string(args[1]));
            if b.is_empty() {
                return args[0].clone();
            }
            if a.is_empty() {
                return args[1].clone();
            }
            let mut s = String::with_capacity(a.len() + b.len());
            s.push_str(a);
            s.push_str(b);
            Value::Str(Arc::from(s))
        }
        Op::Replace => Value::str(replace_first(
            string(args[0]),
            string(args[1]),
            string(args[2]),
        )),
        Op::Substr => Value::str(substr(string(args[0]), int(args[1]), int(args[2]))),
        Op::CharAt => Value::str(substr(string(args[0]), int(args[1]), 1)),
        Op::ToLower => Value::str(string(args[0]).to_lowercase()),
        Op::ToUpper => Value::str(string(args[0]).to_uppercase()),
        Op::IntToStr => {
            let i = int(args[0]);
            Value::str(if i < 0 { String::new() } else { i.to_string() })
        }
        Op::StrToInt => Value::Int(str_to_int(string(args[0]))),
        Op::Length => Value::Int(char_len(string(args[0])) as i64),
        Op::IndexOf => Value::Int(index_of(string(args[0]), string(args[1]), int(args[2]))),
        Op::Find => Value::Int(index_of(string(args[0]), string(args[1]), 0)),
        Op::Contains => Value::Bool(string(args[0]).contains(string(args[1]))),
        Op::IsPrefixOf => Value::Bool(string(args[1]).starts_with(string(args[0]))),
        Op::IsSuffixOf => Value::Bool(string(args[1]).ends_with(string(args[0]))),
        Op::Add => Value::Int(int(args[0]).wrapping_add(int(args[1]))),
        Op::Sub => Value::Int(int(args[0]).wrapping_sub(int(args[1]))),
        Op::Mul => Value::Int(int(args[0]).wrapping_mul(int(args[1]))),
        Op::Mod => Value::Int(floor_mod(int(args[0]), int(args[1]))),
        Op::IsLess => Value::Bool(int(args[0]) < int(args[1])),
        Op::IsGreater => Value::Bool(int(args[0]) > int(args[1])),
        Op::Ite => {
            if boolean(args[0]) {
                args[1].clone()
            } else {
                args[2].clone()
            }
        }
        Op::IsEqual => Value::Bool(args[0] == args[1]),
        Op::And => Value::Bool(boolean(args[0]) && boolean(args[1])),
        Op::Or => Value::Bool(boolean(args[0]) || boolean(args[1])),
        Op::Not => Value::Bool(!boolean(args[0])),
        Op::BvXor => Value::Bv(word(args[0]) ^ word(args[1])),
        Op::BvAnd => Value::Bv(word(args[0]) & word(args[1])),
        Op::BvOr => Value::Bv(word(args[0]) | word(args[1])),
        Op::BvNot => Value::Bv(!word(args[0])),
        Op::BvNeg => Value::Bv(word(args[0]).wrapping_neg()),
        Op::BvAdd => Value::Bv(word(args[0]).wrapping_add(word(args[1]))),
        Op::BvSub => Value::Bv(word(args[0]).wrapping_sub(word(args[1]))),
        Op::BvMul => Value::Bv(word(args[0]).wrapping_mul(word(args[1]))),
        Op::BvUdiv => Value::Bv(udiv(word(args[0]), word(args[1]))),
        Op::BvUrem => Value::Bv(urem(word(args[0]), word(args[1]))),
        Op::BvSdiv => Value::Bv(sdiv(word(args[0]), word(args[1]))),
        Op::BvSrem => Value::Bv(srem(word(args[0]), word(args[1]))),
        Op::BvShl => Value::Bv(shl(word(args[0]), word(args[1]))),
        Op::BvLshr => Value::Bv(lshr(word(args[0]), word(args[1]))),
        Op::BvAshr => Value::Bv(ashr(word(args[0]), word(args[1]))),
        Op::BvRedor => Value::Bv(if word(args[0]) != 0 { u64::MAX } else { 0 }),
        Op::NonZero(kind) => {
            let w = match kind {
                BitwiseBool::And => word(args[0]) & word(args[1]),
                BitwiseBool::Or => word(args[0]) | word(args[1]),
                BitwiseBool::Not => !word(args[0]),
                BitwiseBool::Redor => word(args[0]),
            };
            Value::Bool(w != 0)
        }
        Op::Ult => Value::Bool(word(args[0]) < word(args[1])),
        Op::Ule => Value::Bool(word(args[0]) <= word(args[1])),
        Op::Ugt => Value::Bool(word(args[0]) > word(args[1])),
        Op::Uge => Value::Bool(word(args[0]) >= word(args[1])),
        Op::Slt => Value::Bool((word(args[0]) as i64) < (word(args[1]) as i64)),
        Op::Sle => Value::Bool((word(args[0]) as i64) <= (word(args[1]) as i64)),
        Op::Sgt => Value::Bool((word(args[0]) as i64) > (word(args[1]) as i64)),
        Op::Sge => Value::Bool((word(args[0]) as i64) >= (word(args[1]) as i64)),
    }
}

fn char_len(s: &str) -> usize {
    if s.is_ascii() {
        s.len()
    } else {
        s.chars().count()
    }
}

/// Byte offset of the `i`-th character, or `s.len()` when `i` is the length.
fn byte_offset(s: &str, i: usize) -> usize {
    if s.is_ascii() {
        i
    } else {
        s.char_indices().nth(i).map_or(s.len(), |(b, _)| b)
    }
}

pub(crate) fn substr(s: &str, start: i64, len: i64) -> String {
    let n = char_len(s) as i64;
    if start < 0 || start >= n || len <= 0 {
        return String::new();
    }
    let end = start.saturating_add(len).min(n);
    let (b0, b1) = (byte_offset(s, start as usize), byte_offset(s, end as usize));
    s[b0..b1].to_string()
}

pub(crate) fn index_of(s: &str, t: &str, from: i64) -> i64 {
    let n = char_len(s) as i64;
    if from < 0 || from > n {
        return -1;
    }
    let b0 = byte_offset(s, from as usize);
    match s[b0..].find(t) {
        Some(b) => {
            if s.is_ascii() {
                (b0 + b) as i64
            } else {
                s[..b0 + b].chars().count() as i64
            }
        }
        None => -1,
    }
}

fn replace_first(s: &str, pattern: &str, by: &str) -> String {
    if pattern.is_empty() {
        let mut out = String::with_capacity(by.len() + s.len());
        out.push_str(by);
        out.push_str(s);
        return out;
    }
    s.replacen(pattern, by, 1)
}

pub(crate) fn str_to_int(s: &str) -> i64 {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return -1;
    }
    s.bytes()
        .fold(0i64, |acc, b| acc.wrapping_mul(10).wrapping_add((b - b'0') as i64))
}

/// Remainder taking the sign of the divisor; zero divisor yields 0.
pub(crate) fn floor_mod(a: i64, b: i64) -> i64 {
    if b == 0 {
        return 0;
    }
    let r = a.wrapping_rem(b);
    if r != 0 && ((r < 0) != (b < 0)) {
        r.wrapping_add(b)
    } else {
        r
    }
}

pub(crate) fn udiv(a: u64, b: u64) -> u64 {
    a.checked_div(b).unwrap_or(u64::MAX)
}

pub(crate) fn urem(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        a % b
    }
}

fn negative(w: u64) -> bool {
    w >> 63 == 1
}

// bvsdiv / bvsrem are defined through bvudiv / bvurem on magnitudes.
pub(crate) fn sdiv(a: u64, b: u64) -> u64 {
    let (ma, mb) = (
        if negative(a) { a.wrapping_neg() } else { a },
        if negative(b) { b.wrapping_neg() } else { b },
    );
    let q = udiv(ma, mb);
    if negative(a) != negative(b) {
        q.wrapping_neg()
    } else {
        q
    }
}

pub(crate) fn srem(a: u64, b: u64) -> u64 {
    let (ma, mb) = (
        if negative(a) { a.wrapping_neg() } else { a },
        if negative(b) { b.wrapping_neg() } else { b },
    );
    let r = urem(ma, mb);
    if negative(a) {
        r.wrapping_neg()
    } else {
        r
    }
}

fn shl(a: u64, by: u64) -> u64 {
    if by >= 64 {
        0
    } else {
        a << by
    }
}

fn lshr(a: u64, by: u64) -> u64 {
    if by >= 64 {
        0
    } else {
        a >> by
    }
}

fn ashr(a: u64, by: u64) -> u64 {
    ((a as i64) >> by.min(63)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> Value {
        Value::str(v)
    }

    #[test]
    fn string_edge_cases() {
        assert_eq!(apply(Op::Substr, &[&s("hello"), &Value::Int(1), &Value::Int(3)]), s("ell"));
        assert_eq!(apply(Op::Substr, &[&s("hello"), &Value::Int(3), &Value::Int(10)]), s("lo"));
        assert_eq!(apply(Op::Substr, &[&s("hello"), &Value::Int(5), &Value::Int(1)]), s(""));
        assert_eq!(apply(Op::Substr, &[&s("hello"), &Value::Int(-1), &Value::Int(2)]), s(""));
        assert_eq!(apply(Op::Substr, &[&s("hello"), &Value::Int(0), &Value::Int(0)]), s(""));
        assert_eq!(apply(Op::CharAt, &[&s("abc"), &Value::Int(3)]), s(""));
        assert_eq!(apply(Op::IndexOf, &[&s("abcabc"), &s("c"), &Value::Int(3)]), Value::Int(5));
        assert_eq!(apply(Op::IndexOf, &[&s("abc"), &s("c"), &Value::Int(4)]), Value::Int(-1));
        assert_eq!(apply(Op::IndexOf, &[&s("abc"), &s(""), &Value::Int(3)]), Value::Int(3));
        assert_eq!(apply(Op::Find, &[&s("abc"), &s("z")]), Value::Int(-1));
        assert_eq!(apply(Op::Replace, &[&s("a-b-c"), &s("-"), &s(" ")]), s("a b-c"));
        assert_eq!(apply(Op::Replace, &[&s("abc"), &s(""), &s("x")]), s("xabc"));
        assert_eq!(apply(Op::StrToInt, &[&s("x")]), Value::Int(-1));
        assert_eq!(apply(Op::StrToInt, &[&s("")]), Value::Int(-1));
        assert_eq!(apply(Op::StrToInt, &[&s("-3")]), Value::Int(-1));
        assert_eq!(apply(Op::StrToInt, &[&s("042")]), Value::Int(42));
        assert_eq!(apply(Op::IntToStr, &[&Value::Int(-4)]), s(""));
        assert_eq!(apply(Op::IsPrefixOf, &[&s("ab"), &s("abc")]), Value::Bool(true));
        assert_eq!(apply(Op::IsSuffixOf, &[&s("ab"), &s("abc")]), Value::Bool(false));
    }

    #[test]
    fn non_ascii_indices_count_characters() {
        assert_eq!(substr("héllo", 1, 2), "él");
        assert_eq!(index_of("héllo", "l", 0), 2);
        assert_eq!(apply(Op::Length, &[&s("héllo")]), Value::Int(5));
    }

    #[test]
    fn modulo_follows_divisor_sign() {
        assert_eq!(floor_mod(7, 3), 1);
        assert_eq!(floor_mod(-7, 3), 2);
        assert_eq!(floor_mod(7, -3), -2);
        assert_eq!(floor_mod(-7, -3), -1);
        assert_eq!(floor_mod(5, 0), 0);
        assert_eq!(floor_mod(i64::MIN, -1), 0);
    }

    #[test]
    fn bitvector_division_by_zero() {
        assert_eq!(udiv(5, 0), u64::MAX);
        assert_eq!(urem(5, 0), 5);
        assert_eq!(sdiv(5, 0), u64::MAX);
        assert_eq!(sdiv((-5i64) as u64, 0), 1);
        assert_eq!(srem((-5i64) as u64, 0), (-5i64) as u64);
        assert_eq!(sdiv((-7i64) as u64, 2), (-3i64) as u64);
        assert_eq!(srem((-7i64) as u64, 2), (-1i64) as u64);
        assert_eq!(sdiv(i64::MIN as u64, u64::MAX), i64::MIN as u64);
    }

    #[test]
    fn shifts_saturate() {
        let one = Value::Bv(1);
        let big = Value::Bv(64);
        assert_eq!(apply(Op::BvShl, &[&one, &big]), Value::Bv(0));
        assert_eq!(apply(Op::BvLshr, &[&Value::Bv(u64::MAX), &big]), Value::Bv(0));
        assert_eq!(apply(Op::BvAshr, &[&Value::Bv(1 << 63), &big]), Value::Bv(u64::MAX));
        assert_eq!(apply(Op::BvAshr, &[&Value::Bv(1 << 62), &big]), Value::Bv(0));
    }

    #[test]
    fn redor_has_word_and_boolean_forms() {
        assert_eq!(apply(Op::BvRedor, &[&Value::Bv(8)]), Value::Bv(u64::MAX));
        assert_eq!(apply(Op::BvRedor, &[&Value::Bv(0)]), Value::Bv(0));
        assert_eq!(apply(Op::NonZero(BitwiseBool::Redor), &[&Value::Bv(8)]), Value::Bool(true));
    }

    #[test]
    fn resolution_depends_on_sorts() {
        use Sort::*;
        assert_eq!(resolve("add", &[Int, Int], Int), Some(Op::Add));
        assert_eq!(resolve("add", &[Bitvector, Bitvector], Bitvector), Some(Op::BvAdd));
        assert_eq!(resolve("ite", &[Bool, String, String], String), Some(Op::Ite));
        assert_eq!(resolve("ite", &[Bool, String, Int], String), None);
        assert_eq!(resolve("concat", &[String], String), None);
    }
}
