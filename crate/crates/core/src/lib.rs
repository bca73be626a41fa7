//! Sentences to pregroup types, string diagrams and parameterized quantum
//! circuits, with exact and noisy simulation, a classical tensor baseline,
//! and training loops for binary sentiment classification.

pub mod circuit;
pub mod cli;
pub mod dataset;
pub mod diagram;
pub mod exec;
pub mod pregroup;
pub mod simulator;
pub mod tensor;
pub mod trainer;

pub use exec::Exec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pregroup(#[from] pregroup::PregroupError),
    #[error(transparent)]
    Diagram(#[from] diagram::DiagramError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Sim(#[from] simulator::SimError),
    #[error(transparent)]
    Tensor(#[from] tensor::TensorError),
    #[error(transparent)]
    Train(#[from] trainer::TrainError),
    #[error(transparent)]
    Data(#[from] dataset::DataError),
    #[error("{sentence:?} is not grammatical: residual {residual}")]
    Ungrammatical { sentence: String, residual: String },
    #[error("rewritten circuit for {sentence:?} needs {qubits} qubits, limit is {limit}")]
    TooWide { sentence: String, qubits: usize, limit: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
