//! JSON description of expression graphs.
//!
//! Schema (see `docs/problem_schema.md` for the full document):
//!
//! ```json
//! {
//!   "input_dim": 1,
//!   "sample_dim": 1,
//!   "nodes": [
//!     {"id": 0, "op": "input",  "payload": 0},
//!     {"id": 1, "op": "sample", "payload": 0},
//!     {"id": 2, "op": "neg",    "inputs": [1]},
//!     {"id": 3, "op": "add",    "inputs": [0, 2]},
//!     {"id": 4, "op": "abs",    "inputs": [3]}
//!   ],
//!   "output": 4,
//!   "artifacts": [{"anchor": [0.0], "radius": 1.0}]
//! }
//! ```
//!
//! `payload` is the constant value for `const` nodes and the coordinate
//! index for `input`/`sample` nodes; node ids must equal their position.

use serde::{Deserialize, Serialize};

use super::{Artifact, ExprGraph, NodeOp};
use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct GraphDoc {
    pub input_dim: usize,
    pub sample_dim: usize,
    pub nodes: Vec<NodeDoc>,
    pub output: usize,
    #[serde(default)]
    pub artifacts: Vec<ArtifactDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct NodeDoc {
    pub id: usize,
    pub op: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ArtifactDoc {
    pub anchor: Vec<f64>,
    pub radius: f64,
}

fn unary(inputs: &[usize], op: &str) -> Result<usize> {
    match inputs {
        [a] => Ok(*a),
        _ => Err(Error::Graph(format!("op {op} takes exactly 1 input, got {}", inputs.len()))),
    }
}

fn binary(inputs: &[usize], op: &str) -> Result<(usize, usize)> {
    match inputs {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Graph(format!("op {op} takes exactly 2 inputs, got {}", inputs.len()))),
    }
}

fn payload_f64(payload: &Option<serde_json::Value>, op: &str) -> Result<f64> {
    payload
        .as_ref()
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Graph(format!("op {op} needs a numeric payload")))
}

fn payload_index(payload: &Option<serde_json::Value>, op: &str) -> Result<usize> {
    payload
        .as_ref()
        .and_then(serde_json::Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Graph(format!("op {op} needs an index payload")))
}

pub(crate) fn graph_from_doc<F: Scalar>(doc: &GraphDoc) -> Result<ExprGraph<F>> {
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (pos, node) in doc.nodes.iter().enumerate() {
        if node.id != pos {
            return Err(Error::Graph(format!("node id {} at position {pos}", node.id)));
        }
        let op = match node.op.as_str() {
            "const" => NodeOp::Const(cst(payload_f64(&node.payload, "const")?)),
            "input" => NodeOp::Input(payload_index(&node.payload, "input")?),
            "sample" => NodeOp::Sample(payload_index(&node.payload, "sample")?),
            "add" => {
                let (a, b) = binary(&node.inputs, "add")?;
                NodeOp::Add(a, b)
            }
            "mul" => {
                let (a, b) = binary(&node.inputs, "mul")?;
                NodeOp::Mul(a, b)
            }
            "max2" => {
                let (a, b) = binary(&node.inputs, "max2")?;
                NodeOp::Max2(a, b)
            }
            "neg" => NodeOp::Neg(unary(&node.inputs, "neg")?),
            "relu" => NodeOp::Relu(unary(&node.inputs, "relu")?),
            "abs" => NodeOp::Abs(unary(&node.inputs, "abs")?),
            "square" => NodeOp::Square(unary(&node.inputs, "square")?),
            other => return Err(Error::Graph(format!("unknown op {other:?}"))),
        };
        nodes.push(op);
    }
    let artifacts = doc
        .artifacts
        .iter()
        .map(|a| Artifact { anchor: a.anchor.iter().map(|&x| cst(x)).collect(), radius: cst(a.radius) })
        .collect();
    ExprGraph::new(nodes, doc.output, artifacts, doc.input_dim, doc.sample_dim)
}

pub(crate) fn graph_to_doc<F: Scalar>(graph: &ExprGraph<F>) -> GraphDoc {
    let nodes = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, node)| {
            let (op, inputs, payload) = match *node {
                NodeOp::Const(c) => ("const", vec![], Some(serde_json::json!(c.to_report()))),
                NodeOp::Input(i) => ("input", vec![], Some(serde_json::json!(i))),
                NodeOp::Sample(j) => ("sample", vec![], Some(serde_json::json!(j))),
                NodeOp::Add(a, b) => ("add", vec![a, b], None),
                NodeOp::Mul(a, b) => ("mul", vec![a, b], None),
                NodeOp::Max2(a, b) => ("max2", vec![a, b], None),
                NodeOp::Neg(a) => ("neg", vec![a], None),
                NodeOp::Relu(a) => ("relu", vec![a], None),
                NodeOp::Abs(a) => ("abs", vec![a], None),
                NodeOp::Square(a) => ("square", vec![a], None),
            };
            NodeDoc { id, op: op.to_string(), inputs, payload }
        })
        .collect();
    GraphDoc {
        input_dim: graph.input_dim(),
        sample_dim: graph.sample_dim(),
        nodes,
        output: graph.output(),
        artifacts: graph
            .artifacts()
            .iter()
            .map(|a| ArtifactDoc {
                anchor: a.anchor.iter().map(|x| x.to_report()).collect(),
                radius: a.radius.to_report(),
            })
            .collect(),
    }
}

/// Parse a graph from its JSON document.
pub fn graph_from_json<F: Scalar>(text: &str) -> Result<ExprGraph<F>> {
    let doc: GraphDoc =
        serde_json::from_str(text).map_err(|e| Error::Graph(format!("bad graph JSON: {e}")))?;
    graph_from_doc(&doc)
}

/// Serialize a graph to its JSON document.
pub fn graph_to_json<F: Scalar>(graph: &ExprGraph<F>) -> String {
    serde_json::to_string_pretty(&graph_to_doc(graph)).expect("graph serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SelectionPolicy;

    #[test]
    fn round_trip_preserves_semantics() {
        let text = r#"{
            "input_dim": 1,
            "sample_dim": 1,
            "nodes": [
                {"id": 0, "op": "input", "payload": 0},
                {"id": 1, "op": "sample", "payload": 0},
                {"id": 2, "op": "neg", "inputs": [1]},
                {"id": 3, "op": "add", "inputs": [0, 2]},
                {"id": 4, "op": "abs", "inputs": [3]}
            ],
            "output": 4
        }"#;
        let g: ExprGraph<f64> = graph_from_json(text).unwrap();
        assert_eq!(g.eval(&[2.0], &[1.0]).unwrap(), 1.0);
        let again: ExprGraph<f64> = graph_from_json(&graph_to_json(&g)).unwrap();
        assert_eq!(again.eval(&[2.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(
            again.backprop_select(&[2.0], &[1.0], SelectionPolicy::Zero).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn rejects_forward_references_and_bad_ops() {
        let text = r#"{
            "input_dim": 1, "sample_dim": 0,
            "nodes": [{"id": 0, "op": "abs", "inputs": [1]}, {"id": 1, "op": "input", "payload": 0}],
            "output": 0
        }"#;
        assert!(graph_from_json::<f64>(text).is_err());
        let text = r#"{
            "input_dim": 1, "sample_dim": 0,
            "nodes": [{"id": 0, "op": "sin", "inputs": []}],
            "output": 0
        }"#;
        assert!(graph_from_json::<f64>(text).is_err());
    }
}
