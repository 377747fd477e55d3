use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::value::{Sort, Value};

pub type Env = BTreeMap<String, Value>;

/// Output vector of a program over a task's examples, in example order.
pub type Signature = Arc<[Value]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Strings,
    Bitvectors,
}

/// A programming-by-example specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub domain: Domain,
    pub arguments: Vec<String>,
    pub inputs: Vec<Env>,
    pub outputs: Vec<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskFile {
    name: String,
    domain: Domain,
    #[serde(default)]
    arguments: Vec<String>,
    examples: Vec<ExampleFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleFile {
    #[serde(default)]
    inputs: BTreeMap<String, serde_json::Value>,
    output: serde_json::Value,
}

fn convert(json: &serde_json::Value, domain: Domain) -> std::result::Result<Value, String> {
    match (domain, json) {
        (_, serde_json::Value::Bool(b)) => Ok(Value::Bool(*b)),
        (Domain::Strings, other) => Value::from_json_untyped(other),
        (Domain::Bitvectors, other) => Value::from_json(other, Sort::Bitvector),
    }
}

impl Task {
    /// Validates the example table: at least one example, identical argument
    /// names in every example.
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        arguments: Vec<String>,
        inputs: Vec<Env>,
        outputs: Vec<Value>,
    ) -> Result<Task> {
        let name = name.into();
        let fail = |msg: String| Error::Task(format!("{name}: {msg}"));
        if outputs.is_empty() {
            return Err(fail("no examples".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(fail(format!(
                "{} input environments for {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let bound: Vec<&String> = inputs[0].keys().collect();
        for (i, env) in inputs.iter().enumerate() {
            if !env.keys().eq(bound.iter().copied()) {
                return Err(fail(format!("example {i} binds different arguments")));
            }
        }
        let mut declared: Vec<&String> = arguments.iter().collect();
        declared.sort();
        if !arguments.is_empty() && declared != bound {
            return Err(fail("declared arguments differ from the bound ones".into()));
        }
        for value in inputs.iter().flat_map(|e| e.values()).chain(&outputs) {
            let ok = match domain {
                Domain::Strings => value.sort() != Sort::Bitvector,
                Domain::Bitvectors => matches!(value.sort(), Sort::Bitvector | Sort::Bool),
            };
            if !ok {
                return Err(fail(format!("value {value} does not belong to the domain")));
            }
        }
        let arguments = if arguments.is_empty() {
            bound.into_iter().cloned().collect()
        } else {
            arguments
        };
        Ok(Task {
            name,
            domain,
            arguments,
            inputs,
            outputs,
        })
    }

    pub fn from_json(text: &str) -> Result<Task> {
        Task::from_json_with_context(text, "task")
    }

    fn from_json_with_context(text: &str, context: &str) -> Result<Task> {
        let file: TaskFile = serde_json::from_str(text).map_err(|e| Error::json(context, e))?;
        let fail = |msg: String| Error::Task(format!("{}: {msg}", file.name));
        let mut inputs = Vec::with_capacity(file.examples.len());
        let mut outputs = Vec::with_capacity(file.examples.len());
        for (i, ex) in file.examples.iter().enumerate() {
            let mut env = Env::new();
            for (k, v) in &ex.inputs {
                let value = convert(v, file.domain)
                    .map_err(|m| fail(format!("example {i}, argument {k}: {m}")))?;
                env.insert(k.clone(), value);
            }
            inputs.push(env);
            outputs.push(
                convert(&ex.output, file.domain)
                    .map_err(|m| fail(format!("example {i}, output: {m}")))?,
            );
        }
        Task::new(file.name.clone(), file.domain, file.arguments, inputs, outputs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Task> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Task::from_json_with_context(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let encode = |v: &Value| match v {
            Value::Str(s) => serde_json::Value::String(s.to_string()),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Bv(w) => serde_json::Value::String(format!("0x{w:x}")),
        };
        let file = TaskFile {
            name: self.name.clone(),
            domain: self.domain,
            arguments: self.arguments.clone(),
            examples: self
                .inputs
                .iter()
                .zip(&self.outputs)
                .map(|(env, out)| ExampleFile {
                    inputs: env.iter().map(|(k, v)| (k.clone(), encode(v))).collect(),
                    output: encode(out),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("task serialises")
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn target(&self) -> Signature {
        self.outputs.iter().cloned().collect()
    }

    /// Per-example value of the first string-typed argument, in declaration order.
    pub fn first_string_input(&self) -> Option<Vec<Value>> {
        let name = self
            .arguments
            .iter()
            .find(|a| self.inputs[0].get(*a).map(Value::sort) == Some(Sort::String))?;
        Some(self.inputs.iter().map(|env| env[name].clone()).collect())
    }
}
