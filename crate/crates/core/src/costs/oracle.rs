//! Probability that a program is part of a solution, computed from its
//! outputs. Two implementations: a fixed property heuristic and a small
//! feed-forward network loaded from a weight file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::signature::{fixed_signature, render_all, PROPERTIES, PROPERTY_COUNT};
use crate::error::{Error, Result};
use crate::interp::{Domain, Task, Value};

pub const MIN_PROBABILITY: f64 = 0.01;
pub const MAX_PROBABILITY: f64 = 0.99;

/// Network input width: program-vs-target block then input-vs-target block.
pub const NETWORK_INPUTS: usize = 2 * PROPERTY_COUNT;

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(MIN_PROBABILITY, MAX_PROBABILITY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols` entries.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn from_json(text: &str) -> Result<Network> {
        let net: Network = serde_json::from_str(text).map_err(|e| Error::json("weight file", e))?;
        net.validate()?;
        Ok(net)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Weights(msg));
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        let mut width = NETWORK_INPUTS;
        for (i, l) in self.layers.iter().enumerate() {
            if l.cols != width {
                return bad(format!("layer {i} expects {} inputs, previous width is {width}", l.cols));
            }
            if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return bad(format!("layer {i} has inconsistent weight or bias length"));
            }
            width = l.rows;
        }
        if width != 1 {
            return bad(format!("final layer has {width} outputs, expected 1"));
        }
        Ok(())
    }

    /// ReLU hidden layers, logistic output.
    pub fn forward(&self, input: &[f64]) -> f64 {
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            x = (0..l.rows)
                .map(|r| {
                    let row = &l.weights[r * l.cols..(r + 1) * l.cols];
                    let z = l.bias[r] + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                    if i == last {
                        z
                    } else {
                        z.max(0.0)
                    }
                })
                .collect();
        }
        1.0 / (1.0 + (-x[0]).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    Heuristic,
    Network(Network),
}

impl Oracle {
    /// Prepares per-task data. Only string tasks are supported.
    pub fn bind(&self, task: &Task) -> Result<BoundOracle> {
        if task.domain != Domain::Strings {
            return Err(Error::Config(
                "post-generation cost models apply to string tasks only".into(),
            ));
        }
        let targets = render_all(&task.outputs);
        let inputs = match task.first_string_input() {
            Some(values) => render_all(&values),
            None => vec![String::new(); task.len()],
        };
        let input_block = fixed_signature(&inputs, &targets, &inputs);
        Ok(BoundOracle {
            oracle: self.clone(),
            targets,
            inputs,
            input_block,
        })
    }
}

/// An oracle specialised to one task.
#[derive(Debug, Clone)]
pub struct BoundOracle {
    oracle: Oracle,
    targets: Vec<String>,
    inputs: Vec<String>,
    input_block: [i8; PROPERTY_COUNT],
}

impl BoundOracle {
    pub fn signature(&self, outputs: &[Value]) -> [i8; PROPERTY_COUNT] {
        fixed_signature(&render_all(outputs), &self.targets, &self.inputs)
    }

    pub fn probability(&self, outputs: &[Value]) -> f64 {
        let sig = self.signature(outputs);
        let p = match &self.oracle {
            Oracle::Heuristic => heuristic_score(&sig),
            Oracle::Network(net) => {
                let input: Vec<f64> = sig
                    .iter()
                    .chain(self.input_block.iter())
                    .map(|&v| v as f64)
                    .collect();
                net.forward(&input)
            }
        };
        clamp_probability(p)
    }

    pub fn batch(&self, outputs: &[&[Value]]) -> Vec<f64> {
        outputs.iter().map(|o| self.probability(o)).collect()
    }
}

/// Mean favourability of a fixed-property vector, before clamping.
pub fn heuristic_score(sig: &[i8; PROPERTY_COUNT]) -> f64 {
    let total: f64 = sig
        .iter()
        .zip(PROPERTIES.iter())
        .map(|(&v, &(_, _, favourable))| {
            let v = if favourable { v } else { -v };
            (v as f64 + 1.0) / 2.0
        })
        .sum();
    total / PROPERTY_COUNT as f64
}
