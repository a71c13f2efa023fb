//! Command-line driver: verify sources or term files, emit terms, run the
//! concrete interpreter and answer entailment queries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ooheap::entailment::{prove_formulas, EntailmentResult, ProverOptions};
use ooheap::formula::free_vars;
use ooheap::interp::{run_concrete, ConcreteState};
use ooheap::pipeline::{self, PipelineError, Report};
use ooheap::proofviz::{to_dot, to_structured, DotOptions};
use ooheap::symexec::ExecOptions;
use ooheap::termir::{decode_formula, emit_file, parse_queries};
use ooheap::{Formula, PredTable};

#[derive(Debug, Parser)]
#[command(name = "ooheap", version, about = "Separation-logic verifier for heap-manipulating programs")]
struct Cli {
    /// Bound on predicate unfolding during proof search.
    #[arg(long, global = true, env = "OOHEAP_UNFOLD_DEPTH", default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    unfold_depth: u32,

    /// Diagnostic output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify every function of one or more source files.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write a `.dot` and a `.pt.json` proof per function into this directory.
        #[arg(long)]
        emit_proof: Option<PathBuf>,
    },
    /// Lower a source file to its term representation.
    EmitTerm {
        file: PathBuf,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify term files directly.
    VerifyTerm {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        emit_proof: Option<PathBuf>,
    },
    /// Execute a program concretely from an empty heap.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
    },
    /// Decide the entailment queries in a query file.
    Entail { file: PathBuf },
}

/// A failure that maps to exit code 2.
struct Fatal(String);

impl From<PipelineError> for Fatal {
    fn from(e: PipelineError) -> Self {
        Fatal(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn is_term_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "plt")
}

fn emit_proofs(dir: &Path, file: &Path, report: &Report) -> Result<(), Fatal> {
    fs::create_dir_all(dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))?;
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for v in &report.verdicts {
        let name = format!("{stem}.{}", v.function.replace("::", "__"));
        write(&dir.join(format!("{name}.dot")), &to_dot(&v.proof, DotOptions::default()))?;
        write(&dir.join(format!("{name}.pt.json")), &to_structured(&v.proof))?;
    }
    Ok(())
}

fn combine(codes: impl IntoIterator<Item = i32>) -> i32 {
    let codes: Vec<i32> = codes.into_iter().collect();
    if codes.contains(&1) {
        1
    } else if codes.contains(&3) {
        3
    } else {
        0
    }
}

fn verify(cli: &Cli, files: &[PathBuf], proofs: Option<&Path>, terms: bool) -> Result<i32, Fatal> {
    let opts = ExecOptions { prover: prover_options(cli), ..ExecOptions::default() };
    let mut reports = Vec::new();
    for f in files {
        let text = read(f)?;
        let name = f.display().to_string();
        let report = if terms { pipeline::verify_term(&text, &name, opts)? } else { pipeline::verify_source(&text, &name, opts)? };
        if let Some(dir) = proofs {
            emit_proofs(dir, f, &report)?;
        }
        reports.push(report);
    }
    match cli.format {
        Format::Human => reports.iter().for_each(|r| print!("{}", r.to_human())),
        Format::Json => {
            let parts: Vec<String> = reports.iter().map(Report::to_json).collect();
            println!("[{}]", parts.join(",\n"));
        }
    }
    Ok(combine(reports.iter().map(Report::exit_code)))
}

fn prover_options(cli: &Cli) -> ProverOptions {
    ProverOptions { max_unfold: cli.unfold_depth as usize, ..ProverOptions::default() }
}

fn run(cli: &Cli, file: &Path, fuel: u64) -> Result<i32, Fatal> {
    let text = read(file)?;
    let name = file.display().to_string();
    let program =
        if is_term_file(file) { pipeline::program_from_term(&text, &name)? } else { pipeline::program_from_source(&text, &name)?.0 };
    let outcome = run_concrete(&program, ConcreteState::default(), fuel);
    match (cli.format, &outcome) {
        (Format::Human, Ok(state)) => println!("{state}"),
        (Format::Human, Err(fault)) => println!("{}: {fault}", fault.kind()),
        (Format::Json, Ok(state)) => println!("{}", serde_json::json!({ "status": "ok", "state": state })),
        (Format::Json, Err(fault)) => {
            println!("{}", serde_json::json!({ "status": "fault", "fault": fault.kind(), "message": fault.to_string() }))
        }
    }
    Ok(if outcome.is_ok() { 0 } else { 1 })
}

fn entail(cli: &Cli, file: &Path) -> Result<i32, Fatal> {
    let text = read(file)?;
    let queries = parse_queries(&text).map_err(|e| Fatal(format!("{}: {e}", file.display())))?;
    let preds = PredTable::default();
    let mut decoded = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        let decode = |t| decode_formula(t).map_err(|e| Fatal(format!("{}: query {}: {e}", file.display(), i + 1)));
        let (a, mut c) = (decode(&q.antecedent)?, decode(&q.consequent)?);
        // Variables only the consequent mentions are existential.
        let known = free_vars(&a);
        for v in free_vars(&c) {
            if !known.contains(&v) {
                c = Formula::exists(v, c);
            }
        }
        decoded.push((a, c));
    }
    let mut all = true;
    let mut json = Vec::new();
    for (a, c) in decoded {
        let r = prove_formulas(&a, &c, &preds, prover_options(cli));
        all &= r.is_proved();
        let (verdict, detail) = match &r {
            EntailmentResult::Proved { frame, .. } => ("proved", format!("frame: {frame}")),
            EntailmentResult::Failed { residue, nearest_rule, .. } => {
                ("failed", format!("nearest rule: {nearest_rule}; unmatched: {} |- {}", residue.0, residue.1))
            }
        };
        match cli.format {
            Format::Human => println!("{a} |- {c}: {verdict} ({detail})"),
            Format::Json => json.push(serde_json::json!({
                "antecedent": a.to_string(),
                "consequent": c.to_string(),
                "verdict": verdict,
                "detail": detail,
            })),
        }
    }
    if cli.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&json).expect("json values serialize"));
    }
    Ok(if all { 0 } else { 1 })
}

fn dispatch(cli: &Cli) -> Result<i32, Fatal> {
    match &cli.command {
        Command::Verify { files, emit_proof } => verify(cli, files, emit_proof.as_deref(), false),
        Command::VerifyTerm { files, emit_proof } => verify(cli, files, emit_proof.as_deref(), true),
        Command::EmitTerm { file, output } => {
            let text = read(file)?;
            let lowered = pipeline::lower_source(&text, &file.display().to_string())?;
            let out = emit_file(&lowered.term);
            match output {
                Some(o) => write(o, &out)?,
                None => print!("{out}"),
            }
            Ok(0)
        }
        Command::Run { file, fuel } => run(cli, file, *fuel),
        Command::Entail { file } => entail(cli, file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
