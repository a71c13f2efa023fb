//! Entailment between symbolic heaps and frame inference.

mod prover;
mod symheap;

pub(crate) use prover::add_separation;
pub use prover::{infer_frame, prove, prove_formulas, unfold, EntailmentResult, FrameFailure, Inferred, ProverOptions};
pub use symheap::{to_symheaps, Fresh, Polarity, Spatial, SymHeap};
