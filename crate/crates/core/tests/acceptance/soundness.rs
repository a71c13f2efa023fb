use ooheap::entailment::{prove_formulas, EntailmentResult, ProverOptions};
use ooheap::interp::{eval_assertion_with, models, OracleCaps};
use ooheap::{Formula, PredTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::entail::{instance, vars_of};
use crate::{ensure, Check};

const INSTANCES: usize = 12_000;

/// Every model of the antecedent must satisfy consequent * frame.
pub fn check() -> Check {
    let preds = PredTable::default();
    let caps = OracleCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut proved, mut satisfiable, mut checked_models, mut violations) = (0usize, 0usize, 0usize, Vec::new());
    for _ in 0..INSTANCES {
        let (ante, cons) = instance(&mut rng);
        let EntailmentResult::Proved { frame, .. } = prove_formulas(&ante, &cons, &preds, ProverOptions::default()) else {
            continue;
        };
        proved += 1;
        let goal = Formula::star(cons.clone(), frame.to_formula());
        let ms = models(&ante, &vars_of(&[&ante, &cons]), &preds, &caps);
        satisfiable += usize::from(!ms.is_empty());
        for m in ms {
            checked_models += 1;
            if eval_assertion_with(&goal, &m.store, &m.heap, &preds) != Ok(true) {
                violations.push(format!("{ante} |- {cons} with frame {} fails on {m}", frame.to_formula()));
                break;
            }
        }
    }
    ensure!(violations.is_empty(), "{} unsound results, first: {}", violations.len(), violations[0]);
    Ok(format!(
        "{INSTANCES} instances, {proved} proved ({satisfiable} with a satisfiable antecedent), {checked_models} models checked, 0 violations"
    ))
}
