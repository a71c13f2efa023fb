use std::collections::BTreeSet;

use ooheap::interp::{eval_assertion_with, models, run_function, run_function_from, ConcreteState, Fault, OracleCaps};
use ooheap::ir::{Function, Program};
use ooheap::symexec::{verify_function, DiagnosticKind, ExecOptions, Status};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::program;
use crate::common::programs::{straight_line_source, straight_line_stmts, POSTS, PRES};
use crate::Check;

const SAMPLED_LENGTH_4: usize = 4_000;
/// Allocation start used only to analyse refutations the default allocator
/// does not reproduce: far above every constant the generator uses.
const SHIFTED_BASE: i64 = 100;

#[derive(Default)]
struct Tally {
    cases: usize,
    verified: usize,
    refuted_access: usize,
    runs: usize,
    violations: Vec<String>,
    /// Refutations not reproduced by the default allocator but reproduced
    /// once fresh cells land away from small constants.
    allocator_dependent: usize,
}

fn access_faults(prog: &Program, f: &Function, inits: &[ConcreteState], base: i64) -> BTreeSet<&'static str> {
    inits
        .iter()
        .filter_map(|init| match run_function_from(prog, f, init.clone(), 1_000, base) {
            Err(fault @ (Fault::InvalidAccess { .. } | Fault::InvalidFree { .. })) => Some(fault.kind()),
            _ => None,
        })
        .collect()
}

fn check_one(stmts: &[&str], pre: &str, post: &str, t: &mut Tally) {
    let src = straight_line_source(stmts, pre, post);
    let prog = program(&src);
    let f = &prog.functions[0];
    let verdict = verify_function(&prog, f, ExecOptions::default());
    t.cases += 1;
    let refuted: BTreeSet<&str> = verdict
        .diagnostics
        .iter()
        .filter_map(|d| match d.kind {
            DiagnosticKind::InvalidAccess => Some("InvalidAccess"),
            DiagnosticKind::InvalidFree => Some("InvalidFree"),
            _ => None,
        })
        .collect();
    let verified = verdict.status == Status::Verified;
    if !verified && (refuted.is_empty() || verdict.status != Status::Refuted) {
        return;
    }
    let params: BTreeSet<String> = ["x", "y"].map(String::from).into();
    let inits = models(&f.pre, &params, &prog.preds, &OracleCaps::default());
    t.runs += inits.len();
    if verified {
        t.verified += 1;
        for init in &inits {
            match run_function(&prog, f, init.clone(), 1_000) {
                Ok(out) if eval_assertion_with(&f.post, &init.store, &out.heap, &prog.preds) == Ok(true) => {}
                Ok(_) => return t.violations.push(format!("verified but the post fails from {init}:\n{src}")),
                Err(fault) => return t.violations.push(format!("verified but {fault} from {init}:\n{src}")),
            }
        }
        return;
    }
    t.refuted_access += 1;
    // A run stops at its first fault, so one matching fault kind suffices
    // when paths report different kinds.
    let seen = access_faults(&prog, f, &inits, 1);
    if seen.is_disjoint(&refuted) {
        if !access_faults(&prog, f, &inits, SHIFTED_BASE).is_disjoint(&refuted) {
            t.allocator_dependent += 1;
        }
        t.violations.push(format!("refuted with {refuted:?} but no enumerated model faults that way:\n{src}"));
    }
}

pub fn check() -> Check {
    let pool = straight_line_stmts();
    let pool: Vec<&str> = pool.iter().map(String::as_str).collect();
    let mut programs: Vec<Vec<&str>> = vec![vec![]];
    let mut frontier: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..3 {
        frontier = frontier.iter().flat_map(|p| pool.iter().map(move |s| p.iter().copied().chain([*s]).collect::<Vec<_>>())).collect();
        programs.extend(frontier.iter().cloned());
    }
    let exhaustive = programs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..SAMPLED_LENGTH_4 {
        programs.push((0..4).map(|_| *pool.choose(&mut rng).unwrap()).collect());
    }
    let mut t = Tally::default();
    for p in &programs {
        for pre in PRES {
            for post in POSTS {
                check_one(p, pre, post, &mut t);
            }
        }
    }
    let summary = format!(
        "{} cases ({exhaustive} programs exhaustive up to length 3, {SAMPLED_LENGTH_4} sampled of length 4, {} contracts each); {} verified, {} refuted by invalid access/free, {} concrete runs",
        t.cases,
        PRES.len() * POSTS.len(),
        t.verified,
        t.refuted_access,
        t.runs
    );
    match t.violations.first() {
        None => Ok(format!("{summary}, 0 violations")),
        Some(first) => Err(format!(
            "{summary}; {} violations, {} of which fault as refuted once allocation starts at address {SHIFTED_BASE}; first: {first}",
            t.violations.len(),
            t.allocator_dependent
        )),
    }
}
