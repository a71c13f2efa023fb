use std::time::{Duration, Instant};

use ooheap::interp::{run_concrete, ConcreteState, Fault};
use ooheap::pipeline::{lower_source, program_from_source, verify_source};
use ooheap::symexec::{DiagnosticKind, ExecOptions, Status};
use ooheap::termir::emit_text;

use crate::common::corpus;
use crate::{ensure, Check};

pub fn detection() -> Check {
    let expected = [
        ("ex1_memory_leak.oc", DiagnosticKind::MemoryLeak, 6),
        ("ex2_unreachable.oc", DiagnosticKind::UnreachableMemory, 5),
        ("ex3_invalid_access.oc", DiagnosticKind::InvalidAccess, 6),
    ];
    for (file, kind, line) in expected {
        let report = verify_source(&corpus(file), file, ExecOptions::default()).map_err(|e| e.to_string())?;
        let got: Vec<_> = report.records.iter().map(|r| (r.kind, r.line)).collect();
        ensure!(got == vec![(kind, Some(line))], "{file}: expected one {kind:?} at line {line}, got {got:?}");
    }

    let t = Instant::now();
    let src = corpus("ex4_cycle.oc");
    let report = verify_source(&src, "ex4_cycle.oc", ExecOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "cyclic example took {elapsed:?}");
    let status = &report.verdicts[0].status;
    let acceptable = matches!(status, Status::Inconclusive(_)) || report.verdicts[0].kinds().contains(&DiagnosticKind::InvariantViolation);
    ensure!(acceptable, "cyclic example: unexpected verdict {status:?}");
    let (program, _) = program_from_source(&src, "ex4_cycle.oc").map_err(|e| e.to_string())?;
    let run = run_concrete(&program, ConcreteState::default(), 1000);
    ensure!(matches!(run, Err(Fault::OutOfFuel { .. })), "cyclic run with fuel 1000: {run:?}");
    Ok(format!("three diagnostics at lines 6/5/6; cyclic example {status:?} in {elapsed:.2?}, run with fuel 1000 is OutOfFuel"))
}

const WORKED_TERM: &str = "function(f,int,[param(a,int),param(b,int)],[assert(le(a,10)),assign(id,2),assign(a,1),assign(b,6),assert(a->5*b->c*c->object(myClass1,15))])";

pub fn translation() -> Check {
    let lowered = lower_source(&corpus("worked_example.oc"), "worked_example.oc").map_err(|e| e.to_string())?;
    let text = emit_text(&lowered.term);
    let squeezed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    ensure!(squeezed == WORKED_TERM, "emitted term differs:\n  got      {squeezed}\n  expected {WORKED_TERM}");
    Ok(text)
}

pub fn determinism() -> Check {
    let mut files: Vec<_> = std::fs::read_dir(crate::common::corpus_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "oc"))
        .collect();
    files.sort();
    let run = || -> Result<Vec<String>, String> {
        files
            .iter()
            .map(|p| {
                let name = p.file_name().unwrap().to_string_lossy().to_string();
                let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
                verify_source(&text, &name, ExecOptions::default()).map(|r| r.to_json()).map_err(|e| e.to_string())
            })
            .collect()
    };
    let (a, b) = (run()?, run()?);
    ensure!(a == b, "structured output differs between runs");
    Ok(format!("{} files, {} bytes of identical output", files.len(), a.iter().map(String::len).sum::<usize>()))
}
