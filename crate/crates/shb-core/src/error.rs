//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input/sample vector length does not match the graph's declared arity.
    #[error("arity mismatch for {what}: expected {expected}, got {got}")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Malformed expression graph (ordering, arity of a node, missing output).
    #[error("invalid graph: {0}")]
    Graph(String),

    /// Step-size parameters violate an admissibility clause.
    #[error("invalid schedule: {clause}")]
    Schedule { clause: String },

    /// Malformed distribution or problem description.
    #[error("invalid problem: {0}")]
    Validation(String),

    /// The request exceeds what the exact set machinery supports
    /// (dimension, number of active kinks, hull size).
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Operation asked for an index outside its defined range.
    #[error("index error: {0}")]
    Index(String),

    /// Operation requires a nonempty record/range.
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;
