//! Fixed workloads shared by the criterion benches.

use ooheap::frontend::parse_assertion;
use ooheap::Formula;

/// Corpus programs that verify, refute and give up, keyed by file name.
pub const PROGRAMS: [(&str, &str); 5] = [
    ("append.oc", include_str!("../../../corpus/append.oc")),
    ("copy.oc", include_str!("../../../corpus/copy.oc")),
    ("list_ops.oc", include_str!("../../../corpus/list_ops.oc")),
    ("ex3_invalid_access.oc", include_str!("../../../corpus/ex3_invalid_access.oc")),
    ("ex4_cycle.oc", include_str!("../../../corpus/ex4_cycle.oc")),
];

/// Entailments of growing difficulty: framing, folding and a failing search.
pub const ENTAILMENTS: [(&str, &str, &str); 4] = [
    ("frame", "x->3 * y->4 * z->5", "y->4"),
    ("fold_short", "x->object(node, 1, y) * list(y, nil)", "list(x, nil)"),
    ("fold_chain", "x->a,b,c,d,e,f * y->f", "exists n. x->n * list(n, nil) * y->f"),
    ("unprovable", "list(x, nil)", "x->1,2,3,4,5,6"),
];

/// A nil-terminated chain in header-cell notation, `x->v1,...,v(n-1),nil`.
pub fn chain(n: usize) -> String {
    let mut cells: Vec<String> = (1..n).map(|i| format!("v{i}")).collect();
    cells.push("nil".into());
    format!("x->{}", cells.join(","))
}

pub fn formula(text: &str) -> Formula {
    parse_assertion(text).unwrap_or_else(|e| panic!("bad workload formula {text:?}: {e}"))
}
