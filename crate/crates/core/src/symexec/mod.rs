//! Forward symbolic execution of programs against their contracts.
//!
//! States are symbolic heaps plus a store of symbolic values. Every
//! failed requirement becomes a [`Diagnostic`]; the run never aborts.

mod exec;
mod reach;
mod show;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::entailment::{ProverOptions, SymHeap};
use crate::formula::SymExpr;
use crate::ir::{Function, Program};
use crate::proofviz::ProofTree;
use crate::span::Span;

pub use exec::{Executor, Step};
pub use reach::check_reachability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    MemoryLeak,
    UnreachableMemory,
    InvalidAccess,
    InvalidFree,
    ContractViolation,
    InvariantViolation,
    /// The verifier could not decide; never refutes.
    Unknown,
}

impl DiagnosticKind {
    pub fn is_refuting(self) -> bool {
        self != DiagnosticKind::Unknown
    }

    fn rule(self) -> &'static str {
        match self {
            DiagnosticKind::MemoryLeak => "leak-check",
            DiagnosticKind::UnreachableMemory => "reachability",
            DiagnosticKind::InvalidAccess => "access",
            DiagnosticKind::InvalidFree => "free",
            DiagnosticKind::ContractViolation => "contract",
            DiagnosticKind::InvariantViolation => "invariant",
            DiagnosticKind::Unknown => "unknown",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Qualified name of the function being verified.
    pub function: String,
    /// Statement id within the function; `None` for entry and exit checks.
    pub stmt: Option<usize>,
    /// Source location, filled in when a span table is available.
    pub span: Option<Span>,
    pub message: String,
    /// Concrete store and heap drawn from a model of the failing state.
    pub counter_example: Option<String>,
    /// Failed node in the function's proof tree.
    pub proof_ref: Option<usize>,
}

/// A path state: symbolic store, symbolic heap and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SymState {
    pub store: BTreeMap<String, SymExpr>,
    pub heap: SymHeap,
    /// Statement ids executed so far.
    pub path: Vec<usize>,
    /// Roots that outlive every scope: initial parameter values and the
    /// contract's logical variables.
    pub ghosts: Vec<SymExpr>,
    /// Set when the pure solver answered Unknown on this path.
    pub tainted: bool,
    pub(crate) sites: BTreeMap<SymExpr, usize>,
    pub(crate) node: usize,
    pub(crate) notes: Vec<Diagnostic>,
}

impl SymState {
    pub fn new(store: BTreeMap<String, SymExpr>, heap: SymHeap) -> Self {
        SymState { store, heap, path: Vec::new(), ghosts: Vec::new(), tainted: false, sites: BTreeMap::new(), node: 0, notes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Status {
    Verified,
    Refuted,
    Inconclusive(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub rule_applications: usize,
    pub branches: usize,
    pub paths: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub function: String,
    pub status: Status,
    pub diagnostics: Vec<Diagnostic>,
    pub proof: ProofTree,
    pub stats: Stats,
}

impl Verdict {
    pub fn kinds(&self) -> Vec<DiagnosticKind> {
        self.diagnostics.iter().map(|d| d.kind).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub prover: ProverOptions,
    /// Live paths beyond this bound make the verdict inconclusive.
    pub max_paths: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { prover: ProverOptions::default(), max_paths: 4096 }
    }
}

pub fn verify_function(program: &Program, function: &Function, opts: ExecOptions) -> Verdict {
    Executor::new(program, function, opts).verify()
}

/// Verdicts for every function, in declaration order.
pub fn verify_program(program: &Program, opts: ExecOptions) -> Vec<Verdict> {
    program.functions.iter().map(|f| verify_function(program, f, opts)).collect()
}
