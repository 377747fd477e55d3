//! Property signatures: tri-valued summaries of boolean properties over a
//! list of (input, output) pairs.

use crate::interp::Value;

/// +1 when the property holds on every pair, -1 when it holds on none, 0 otherwise.
pub fn property_signature<I, O>(pairs: &[(I, O)], properties: &[&dyn Fn(&I, &O) -> bool]) -> Vec<i8> {
    properties
        .iter()
        .map(|prop| {
            let hits = pairs.iter().filter(|(i, o)| prop(i, o)).count();
            if hits == pairs.len() {
                1
            } else if hits == 0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Number of properties in [`PROPERTIES`].
pub const PROPERTY_COUNT: usize = 10;

/// One example as seen by the fixed property list: the program's output, the
/// expected output and the first string input (empty when the task has none).
pub struct Sample<'a> {
    pub output: &'a str,
    pub target: &'a str,
    pub input: &'a str,
}

type Property = fn(&Sample) -> bool;

fn first(s: &str) -> Option<char> {
    s.chars().next()
}

fn last(s: &str) -> Option<char> {
    s.chars().next_back()
}

/// The fixed property list, with whether `true` is the favourable answer.
pub const PROPERTIES: [(&str, Property, bool); PROPERTY_COUNT] = [
    ("output equals target", |s| s.output == s.target, true),
    ("target inside output", |s| s.output.contains(s.target), true),
    ("output inside target", |s| s.target.contains(s.output), true),
    ("equal ignoring case", |s| s.output.to_lowercase() == s.target.to_lowercase(), true),
    ("equal lengths", |s| s.output.chars().count() == s.target.chars().count(), true),
    ("output shorter", |s| s.output.chars().count() < s.target.chars().count(), false),
    ("output empty", |s| s.output.is_empty(), false),
    ("first characters equal", |s| first(s.output).is_some() && first(s.output) == first(s.target), true),
    ("last characters equal", |s| last(s.output).is_some() && last(s.output) == last(s.target), true),
    ("output inside first input", |s| s.input.contains(s.output), true),
];

/// Tri-valued vector of [`PROPERTIES`] over the examples.
pub fn fixed_signature(outputs: &[String], targets: &[String], inputs: &[String]) -> [i8; PROPERTY_COUNT] {
    let samples: Vec<Sample> = (0..outputs.len())
        .map(|i| Sample {
            output: &outputs[i],
            target: &targets[i],
            input: &inputs[i],
        })
        .collect();
    let mut out = [0i8; PROPERTY_COUNT];
    for (slot, (_, prop, _)) in out.iter_mut().zip(PROPERTIES.iter()) {
        let hits = samples.iter().filter(|s| prop(s)).count();
        *slot = if hits == samples.len() {
            1
        } else if hits == 0 {
            -1
        } else {
            0
        };
    }
    out
}

pub(crate) fn render_all(values: &[Value]) -> Vec<String> {
    values.iter().map(Value::render).collect()
}
