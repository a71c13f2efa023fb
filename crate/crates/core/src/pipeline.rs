//! End-to-end verification: source or term text in, verdicts and
//! located diagnostic records out.

use serde::Serialize;
use thiserror::Error;

use crate::frontend::{parse_source, FrontendError};
use crate::ir::Program;
use crate::span::SourceMap;
use crate::symexec::{verify_program, DiagnosticKind, ExecOptions, Status, Verdict};
use crate::termir::{decode_program, lower_program, parse_term, Lowered, TermError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{file}:{line}:{column}: {source}")]
    Frontend {
        file: String,
        line: usize,
        column: usize,
        #[source]
        source: FrontendError,
    },
    #[error("{file}: {source}")]
    Term {
        file: String,
        #[source]
        source: TermError,
    },
}

/// One diagnostic, located in its input file. Term inputs carry no
/// positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub kind: DiagnosticKind,
    pub file: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub function: String,
    pub message: String,
    pub counter_example: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub file: String,
    pub verdicts: Vec<Verdict>,
    pub records: Vec<Record>,
}

#[derive(Serialize)]
struct FunctionSummary<'a> {
    function: &'a str,
    #[serde(flatten)]
    status: &'a Status,
    rule_applications: usize,
    branches: usize,
    paths: usize,
}

#[derive(Serialize)]
struct Structured<'a> {
    file: &'a str,
    functions: Vec<FunctionSummary<'a>>,
    diagnostics: &'a [Record],
}

impl Report {
    /// 0 when everything verified, 1 on any refutation, 3 when only
    /// inconclusive results remain.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Refuted) {
            1
        } else if self.verdicts.iter().any(|v| matches!(v.status, Status::Inconclusive(_))) {
            3
        } else {
            0
        }
    }

    /// Pretty JSON; contains no timings, so reruns are byte-identical.
    pub fn to_json(&self) -> String {
        let functions = self
            .verdicts
            .iter()
            .map(|v| FunctionSummary {
                function: &v.function,
                status: &v.status,
                rule_applications: v.stats.rule_applications,
                branches: v.stats.branches,
                paths: v.stats.paths,
            })
            .collect();
        let s = Structured { file: &self.file, functions, diagnostics: &self.records };
        serde_json::to_string_pretty(&s).expect("report serializes")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match (r.line, r.column) {
                (Some(l), Some(c)) => out.push_str(&format!("{}:{l}:{c}: ", r.file)),
                _ => out.push_str(&format!("{}: ", r.file)),
            }
            out.push_str(&format!("{} in {}: {}\n", r.kind, r.function, r.message));
            if let Some(ce) = &r.counter_example {
                out.push_str(&format!("    counter-example: {ce}\n"));
            }
        }
        for v in &self.verdicts {
            let status = match &v.status {
                Status::Verified => "verified".to_string(),
                Status::Refuted => "refuted".to_string(),
                Status::Inconclusive(why) => format!("inconclusive ({why})"),
            };
            out.push_str(&format!("{}: {status}\n", v.function));
        }
        out.push_str(&format!("{} function(s), {} diagnostic(s)\n", self.verdicts.len(), self.records.len()));
        out
    }
}

/// Parses and lowers a source text.
pub fn lower_source(text: &str, file: &str) -> Result<Lowered, PipelineError> {
    let sp = parse_source(text).map_err(|e| {
        let (line, column) = SourceMap::new(text).line_col(e.span().start);
        PipelineError::Frontend { file: file.to_string(), line, column, source: e }
    })?;
    Ok(lower_program(&sp))
}

pub fn program_from_source(text: &str, file: &str) -> Result<(Program, Lowered), PipelineError> {
    let lowered = lower_source(text, file)?;
    let program = decode_program(&lowered.term).map_err(|e| PipelineError::Term { file: file.to_string(), source: e })?;
    Ok((program, lowered))
}

pub fn program_from_term(text: &str, file: &str) -> Result<Program, PipelineError> {
    let term_err = |e| PipelineError::Term { file: file.to_string(), source: e };
    let t = parse_term(text).map_err(term_err)?;
    decode_program(&t).map_err(term_err)
}

pub fn verify_source(text: &str, file: &str, opts: ExecOptions) -> Result<Report, PipelineError> {
    let (program, lowered) = program_from_source(text, file)?;
    let mut verdicts = verify_program(&program, opts);
    let map = SourceMap::new(text);
    let mut records = Vec::new();
    for v in &mut verdicts {
        for d in &mut v.diagnostics {
            d.span = match d.stmt {
                Some(i) => lowered.stmt_spans.get(&d.function).and_then(|s| s.get(i)).copied(),
                None => None,
            }
            .or_else(|| lowered.fn_spans.get(&d.function).copied());
            let pos = d.span.map(|s| map.line_col(s.start));
            records.push(Record {
                kind: d.kind,
                file: file.to_string(),
                line: pos.map(|p| p.0),
                column: pos.map(|p| p.1),
                function: d.function.clone(),
                message: d.message.clone(),
                counter_example: d.counter_example.clone(),
            });
        }
    }
    Ok(Report { file: file.to_string(), verdicts, records })
}

pub fn verify_term(text: &str, file: &str, opts: ExecOptions) -> Result<Report, PipelineError> {
    let program = program_from_term(text, file)?;
    let verdicts = verify_program(&program, opts);
    let records = verdicts
        .iter()
        .flat_map(|v| &v.diagnostics)
        .map(|d| Record {
            kind: d.kind,
            file: file.to_string(),
            line: None,
            column: None,
            function: d.function.clone(),
            message: d.message.clone(),
            counter_example: d.counter_example.clone(),
        })
        .collect();
    Ok(Report { file: file.to_string(), verdicts, records })
}
