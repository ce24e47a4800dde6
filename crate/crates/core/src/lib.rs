//! Tensor-network quantum circuit simulation.
//!
//! The crate is organized around a dense complex tensor type ([`tensor::ComplexTensor`])
//! and a tensor-network graph ([`tn::Network`]) with contraction-path search. On top of
//! those sit the gate library, pure-state circuits with trajectory noise, density-matrix
//! evolution, Pauli-sum operators in dense/sparse/MPO form, lazy matrix/vector tensor
//! networks ([`quop::QuOperator`]), an adjoint differentiation engine and batched
//! evaluation helpers.

pub mod batch;
pub mod channels;
pub mod circuit;
pub mod diff;
pub mod gates;
pub mod ir;
pub mod linalg;
pub mod pauli;
pub mod quop;
pub mod rng;
pub mod tensor;
pub mod tn;

use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitIndex { index: usize, n: usize },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dense cap exceeded: {0}")]
    DenseCap(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("gradient not defined: op {op_index}: {message}")]
    NotDifferentiable { op_index: usize, message: String },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
