//! Reachability of heap chunks from store roots.

use crate::entailment::Spatial;
use crate::formula::SymExpr;

use super::{Diagnostic, DiagnosticKind, SymState};

/// `e` with a constant offset removed: chunks at `x + k` hang off `x`.
fn base(e: &SymExpr) -> &SymExpr {
    match e {
        SymExpr::Add(a, b) | SymExpr::Sub(a, b) if matches!(**b, SymExpr::Int(_)) => base(a),
        _ => e,
    }
}

fn values(e: &SymExpr, out: &mut Vec<SymExpr>) {
    match e {
        SymExpr::Record(_, fs) => fs.iter().for_each(|f| values(f, out)),
        _ => out.push(e.clone()),
    }
}

fn root(a: &Spatial) -> Option<&SymExpr> {
    match a {
        Spatial::PointsTo(l, _) => Some(l),
        Spatial::Pred(_, args) => args.first(),
    }
}

/// Indices of spatial atoms not reachable from the store or the ghost roots.
/// A chunk is reachable when its location is provably equal to a reachable
/// value, possibly plus a constant.
pub(crate) fn unreachable(s: &SymState) -> Vec<usize> {
    let mut reach: Vec<SymExpr> = Vec::new();
    for v in s.store.values().chain(s.ghosts.iter()) {
        values(v, &mut reach);
    }
    let atoms = &s.heap.spatial;
    let mut seen = vec![false; atoms.len()];
    let mut semantic = false;
    loop {
        let mut changed = false;
        for (i, a) in atoms.iter().enumerate() {
            if seen[i] {
                continue;
            }
            let hit = match root(a) {
                None => true,
                Some(l) => {
                    let l = base(l);
                    matches!(l, SymExpr::Int(_))
                        || reach.iter().any(|r| r == l || base(r) == l)
                        || (semantic && reach.iter().any(|r| s.heap.pure.proves_eq(r, l)))
                }
            };
            if hit {
                seen[i] = true;
                changed = true;
                match a {
                    Spatial::PointsTo(_, v) => values(v, &mut reach),
                    Spatial::Pred(_, args) => args.iter().for_each(|x| values(x, &mut reach)),
                }
            }
        }
        if !changed {
            if semantic || seen.iter().all(|b| *b) {
                break;
            }
            // Fall back to the solver only once syntactic reach is exhausted.
            semantic = true;
        } else {
            semantic = false;
        }
    }
    (0..atoms.len()).filter(|i| !seen[*i]).collect()
}

/// One `UnreachableMemory` diagnostic per chunk that no root reaches.
pub fn check_reachability(s: &SymState) -> Vec<Diagnostic> {
    unreachable(s)
        .into_iter()
        .map(|i| Diagnostic {
            kind: DiagnosticKind::UnreachableMemory,
            function: String::new(),
            stmt: s.sites.get(root(&s.heap.spatial[i]).unwrap_or(&SymExpr::Int(0))).copied(),
            span: None,
            message: format!("chunk {} is not reachable from any variable", s.heap.spatial[i]),
            counter_example: None,
            proof_ref: None,
        })
        .collect()
}
