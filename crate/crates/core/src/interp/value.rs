use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Runtime sort of a value. Every grammar type symbol maps to exactly one sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    String,
    Int,
    Bool,
    #[serde(alias = "bv")]
    Bitvector,
}

impl Sort {
    /// Conventional sort for the symbols the bundled DSLs use.
    pub fn from_symbol(symbol: &str) -> Option<Sort> {
        match symbol {
            "S" => Some(Sort::String),
            "I" => Some(Sort::Int),
            "B" => Some(Sort::Bool),
            "BV" => Some(Sort::Bitvector),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::String => "string",
            Sort::Int => "int",
            Sort::Bool => "bool",
            Sort::Bitvector => "bitvector",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Str(Arc<str>),
    Int(i64),
    Bool(bool),
    /// 64-bit word.
    Bv(u64),
}

impl Value {
    pub fn str(s: impl AsRef<str>) -> Value {
        Value::Str(Arc::from(s.as_ref()))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Str(_) => Sort::String,
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
            Value::Bv(_) => Sort::Bitvector,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Text rendering used by the string-based heuristics: strings as-is,
    /// everything else in its literal notation.
    pub fn render(&self) -> String {
        match self {
            Value::Str(s) => s.to_string(),
            other => other.to_string(),
        }
    }

    /// Converts a JSON literal into a value of the requested sort.
    /// Bit-vectors accept unsigned decimal numbers, decimal strings and `0x` hex strings.
    pub fn from_json(json: &serde_json::Value, sort: Sort) -> Result<Value, String> {
        use serde_json::Value as J;
        match (sort, json) {
            (Sort::String, J::String(s)) => Ok(Value::str(s)),
            (Sort::Int, J::Number(n)) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| format!("{n} is not a 64-bit signed integer")),
            (Sort::Int, J::String(s)) => s
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| format!("`{s}` is not an integer")),
            (Sort::Bool, J::Bool(b)) => Ok(Value::Bool(*b)),
            (Sort::Bitvector, J::Number(n)) => n
                .as_u64()
                .map(Value::Bv)
                .ok_or_else(|| format!("{n} is not an unsigned 64-bit word")),
            (Sort::Bitvector, J::String(s)) => parse_word(s)
                .map(Value::Bv)
                .ok_or_else(|| format!("`{s}` is not a 64-bit word")),
            (sort, other) => Err(format!("{other} is not a {sort} value")),
        }
    }

    /// Guesses the sort from the JSON shape alone; strings stay strings.
    pub fn from_json_untyped(json: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        match json {
            J::String(s) => Ok(Value::str(s)),
            J::Bool(b) => Ok(Value::Bool(*b)),
            J::Number(_) => Value::from_json(json, Sort::Int),
            other => Err(format!("unsupported value {other}")),
        }
    }
}

pub(crate) fn parse_word(text: &str) -> Option<u64> {
    let t = text.trim();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else if let Some(hex) = t.strip_prefix("#x") {
        u64::from_str_radix(hex, 16).ok()
    } else {
        t.parse().ok()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "{:?}", &**s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Bv(w) => write!(f, "0x{w:x}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn bitvector_literals_accept_hex_and_decimal() {
        assert_eq!(Value::from_json(&json!("0xff"), Sort::Bitvector), Ok(Value::Bv(255)));
        assert_eq!(Value::from_json(&json!("255"), Sort::Bitvector), Ok(Value::Bv(255)));
        assert_eq!(Value::from_json(&json!(255), Sort::Bitvector), Ok(Value::Bv(255)));
        assert!(Value::from_json(&json!(-1), Sort::Bitvector).is_err());
    }

    #[test]
    fn sort_mismatch_is_reported() {
        assert!(Value::from_json(&json!(true), Sort::String).is_err());
        assert!(Value::from_json(&json!("x"), Sort::Int).is_err());
    }
}
