use std::collections::BTreeMap;

use ooheap::entailment::{prove_formulas, ProverOptions};
use ooheap::frontend::parse_assertion;
use ooheap::interp::{eval_assertion_with, run_function, ConcreteState, Heap, Store, Value};
use ooheap::ir::Program;
use ooheap::symexec::{verify_function, ExecOptions, Status};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::{corpus, program};
use crate::{ensure, Check};

const LAYOUTS: u64 = 200;
const OUTCOME_I: &str = "x->a,b,c,d,e,f * y->f";

fn node(v: i64, next: i64) -> Value {
    Value::Record("node".into(), vec![Value::Int(v), Value::Int(next)])
}

/// Header cell at `header` pointing to a fresh chain holding `vals`.
fn chain(heap: &mut Heap, header: i64, nodes: &[i64], vals: &[i64]) {
    heap.insert(header, Value::Int(nodes[0]));
    for (i, (&a, &v)) in nodes.iter().zip(vals).enumerate() {
        heap.insert(a, node(v, nodes.get(i + 1).copied().unwrap_or(0)));
    }
}

/// A random initial state for `x->a,b,c * y->d,e,f` (plus a header `z`
/// when `with_z`), with scattered addresses.
fn layout(rng: &mut ChaCha8Rng, with_z: bool) -> ConcreteState {
    let mut addrs: Vec<i64> = (1..=40).collect();
    addrs.shuffle(rng);
    let vals: Vec<i64> = (0..6).map(|_| rng.gen_range(0..=9)).collect();
    let mut heap = Heap::new();
    chain(&mut heap, addrs[0], &addrs[2..5], &vals[0..3]);
    chain(&mut heap, addrs[1], &addrs[5..8], &vals[3..6]);
    let mut store: Store = BTreeMap::new();
    store.insert("x".into(), Value::Int(addrs[0]));
    store.insert("y".into(), Value::Int(addrs[1]));
    if with_z {
        heap.insert(addrs[8], Value::Int(rng.gen_range(0..=9)));
        store.insert("z".into(), Value::Int(addrs[8]));
    }
    for (name, v) in ["a", "b", "c", "d", "e", "f"].iter().zip(&vals) {
        store.insert(name.to_string(), Value::Int(*v));
    }
    ConcreteState { store, heap, steps: 0 }
}

/// Verdict plus concrete pinning: every sampled pre-state runs without
/// fault to a heap satisfying the post under the initial store.
fn pin(file: &str, with_z: bool, seed: u64) -> Result<Vec<ConcreteState>, String> {
    let prog: Program = program(&corpus(file));
    let f = &prog.functions[0];
    let verdict = verify_function(&prog, f, ExecOptions::default());
    ensure!(verdict.status == Status::Verified, "{file}: {:?} {:?}", verdict.status, verdict.kinds());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut finals = Vec::new();
    for _ in 0..LAYOUTS {
        let init = layout(&mut rng, with_z);
        let pre_ok = eval_assertion_with(&f.pre, &init.store, &init.heap, &prog.preds).map_err(|e| e.to_string())?;
        ensure!(pre_ok, "{file}: generated layout violates the precondition: {init}");
        let out = run_function(&prog, f, init.clone(), 10_000).map_err(|e| format!("{file}: fault {e} from {init}"))?;
        let post_ok = eval_assertion_with(&f.post, &init.store, &out.heap, &prog.preds).map_err(|e| e.to_string())?;
        ensure!(post_ok, "{file}: post fails concretely from {init}, final heap {:?}", out.heap);
        finals.push(ConcreteState { store: init.store, heap: out.heap, steps: 0 });
    }
    Ok(finals)
}

pub fn check() -> Check {
    let appended = pin("append.oc", false, 7)?;
    pin("copy.oc", true, 11)?;

    // Outcome (i) against list predicates: the oracle decides validity over
    // the concrete end states, and the prover must agree.
    let ante = parse_assertion(OUTCOME_I).map_err(|e| e.to_string())?;
    let preds = ooheap::PredTable::default();
    let mut pinned = Vec::new();
    for cons_text in ["exists n. x->n * list(n, nil) * true", "exists n. x->n * list(n, nil) * y->f", "list(x, nil) * true"] {
        let cons = parse_assertion(cons_text).map_err(|e| e.to_string())?;
        let mut valid = true;
        for s in &appended {
            ensure!(eval_assertion_with(&ante, &s.store, &s.heap, &preds) == Ok(true), "end state is not a model of (i)");
            if eval_assertion_with(&cons, &s.store, &s.heap, &preds) != Ok(true) {
                valid = false;
                break;
            }
        }
        let proved = prove_formulas(&ante, &cons, &preds, ProverOptions::default()).is_proved();
        ensure!(proved == valid, "(i) |- {cons_text}: oracle says {valid}, prover says {proved}");
        pinned.push(format!("{cons_text}: {}", if valid { "valid" } else { "invalid" }));
    }
    Ok(format!("append and copy verified and pinned on {LAYOUTS} layouts each; (i) |- {}", pinned.join("; ")))
}
