use ooheap::arith::SatResult;
use ooheap::entailment::{prove_formulas, ProverOptions};
use ooheap::formula::normalize;
use ooheap::interp::eval_assertion_with;
use ooheap::{Formula, PredTable, SymExpr};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::entail::instance;
use crate::common::gen::{brute_force, formula, holds, pure_set, state};
use crate::{ensure, Check};

pub const CASES: u32 = 1_000;

pub fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn normalize_idempotent() -> Result<(), String> {
    runner()
        .run(&formula(), |f| {
            let once = normalize(&f);
            prop_assert_eq!(normalize(&once), once);
            Ok(())
        })
        .map_err(|e| format!("normalize idempotence: {e}"))
}

fn star_commutes() -> Result<(), String> {
    let preds = PredTable::default();
    runner()
        .run(&(formula(), formula(), state()), |(a, b, s)| {
            let ab = eval_assertion_with(&Formula::star(a.clone(), b.clone()), &s.store, &s.heap, &preds);
            let ba = eval_assertion_with(&Formula::star(b, a), &s.store, &s.heap, &preds);
            prop_assert_eq!(ab, ba);
            Ok(())
        })
        .map_err(|e| format!("star commutativity: {e}"))
}

fn emp_unit() -> Result<(), String> {
    let preds = PredTable::default();
    runner()
        .run(&(formula(), state()), |(a, s)| {
            let with = eval_assertion_with(&Formula::star(Formula::Emp, a.clone()), &s.store, &s.heap, &preds);
            prop_assert_eq!(with, eval_assertion_with(&a, &s.store, &s.heap, &preds));
            Ok(())
        })
        .map_err(|e| format!("emp unit: {e}"))
}

/// prove(P, Q) proved implies prove(P * R, Q * R) proved, for R on a fresh
/// location `w`.
fn frame_rule() -> Result<usize, String> {
    let preds = PredTable::default();
    let opts = ProverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut cases, mut tries) = (0, 0);
    while cases < CASES as usize {
        tries += 1;
        ensure!(tries < 200_000, "only {cases} provable instances found");
        let (p, q) = instance(&mut rng);
        if !prove_formulas(&p, &q, &preds, opts).is_proved() {
            continue;
        }
        let w = SymExpr::var("w");
        let r = match rng.gen_range(0..3) {
            0 => Formula::pto(w, SymExpr::Int(rng.gen_range(0..=4))),
            1 => Formula::pto(w, SymExpr::record("node", vec![SymExpr::Int(1), SymExpr::nil()])),
            _ => Formula::pred("list", vec![w, SymExpr::nil()]),
        };
        let framed = prove_formulas(&Formula::star(p.clone(), r.clone()), &Formula::star(q.clone(), r.clone()), &preds, opts);
        ensure!(framed.is_proved(), "{p} |- {q} is proved but not with frame {r}");
        cases += 1;
    }
    Ok(tries)
}

fn pure_solver() -> Result<(usize, usize), String> {
    let (sat, unsat) = (std::cell::Cell::new(0), std::cell::Cell::new(0));
    let mut runner = runner();
    let result = runner.run(&pure_set(), |p| {
        match p.check_sat() {
            SatResult::Unsat => {
                prop_assert!(brute_force(&p).is_none(), "unsat but brute force finds a model");
                unsat.set(unsat.get() + 1);
            }
            SatResult::Sat(w) => {
                let env = ["x", "y", "z"].map(|v| w.get(v).unwrap_or(0));
                for a in p.atoms() {
                    prop_assert!(holds(a, env), "witness {:?} violates {:?}", env, a);
                }
                sat.set(sat.get() + 1);
            }
            SatResult::Unknown => {}
        }
        Ok(())
    });
    result.map_err(|e| format!("pure solver: {e}"))?;
    Ok((sat.get(), unsat.get()))
}

pub fn check() -> Check {
    normalize_idempotent()?;
    star_commutes()?;
    emp_unit()?;
    let tries = frame_rule()?;
    let (sat, unsat) = pure_solver()?;
    Ok(format!(
        "{CASES} cases each: normalize idempotence, star commutativity, emp unit, frame rule ({tries} instances drawn), pure solver ({sat} sat, {unsat} unsat)"
    ))
}
