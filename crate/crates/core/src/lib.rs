//! Static verifier for heap-manipulating programs written in a small
//! object-oriented C dialect with separation-logic annotations.

pub mod arith;
pub mod entailment;
pub mod formula;
pub mod frontend;
pub mod interp;
pub mod ir;
pub mod pipeline;
pub mod proofviz;
pub mod span;
pub mod symexec;
pub mod termir;

pub use formula::{CmpOp, Formula, PredDef, PredTable, PureAtom, SymExpr};
pub use span::{SourceMap, Span};
pub use termir::Term;
