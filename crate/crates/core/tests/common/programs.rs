//! Source-level generators: a grammar-driven program generator for the
//! printer round-trip and the straight-line statement space used to compare
//! the verifier with the concrete interpreter.

use proptest::prelude::*;

const NAMES: [&str; 6] = ["a", "b", "p", "q", "obj", "n1"];
const FIELDS: [&str; 3] = ["val", "next", "attr"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(str::to_string)
}

fn base() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => name(),
        1 => (name(), prop::sample::select(&FIELDS[..])).prop_map(|(o, f)| format!("{o}.{f}")),
        1 => prop::sample::select(&FIELDS[..]).prop_map(|f| format!("this.{f}")),
    ]
}

fn location() -> impl Strategy<Value = String> {
    (base(), prop::option::of(-3i64..=3)).prop_map(|(b, k)| match k {
        None => b,
        Some(k) if k < 0 => format!("{b} - {}", -k),
        Some(k) => format!("{b} + {k}"),
    })
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        3 => (0i64..100).prop_map(|n| n.to_string()),
        3 => base(),
        1 => location().prop_map(|l| format!("[{l}]")),
        1 => "[a-z \\\\\"]{0,6}".prop_map(|s| format!("{s:?}")),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*"]), inner.clone()).prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            (inner.clone(), prop::sample::select(vec!["+", "-", "*"]), inner.clone()).prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (prop::option::of(name()), name(), prop::collection::vec(inner, 0..3)).prop_map(|(r, f, args)| {
                let args = args.join(", ");
                match r {
                    Some(r) => format!("{r}.m_{f}({args})"),
                    None => format!("f_{f}({args})"),
                }
            }),
        ]
    })
}

fn cond() -> impl Strategy<Value = String> {
    let cmp = (expr(), prop::sample::select(vec!["==", "!=", "<", "<=", ">", ">="]), expr()).prop_map(|(a, op, b)| format!("{a} {op} {b}"));
    cmp.prop_recursive(2, 4, 2, |inner| {
        (inner.clone(), prop::sample::select(vec!["&&", "||"]), inner).prop_map(|(a, op, b)| format!("{a} {op} {b}"))
    })
}

fn assertion() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "emp",
        "true",
        "a->5",
        "a->b * b->3",
        "exists v. p->v",
        "list(a, nil)",
        "a < 10 * p->object(node, 1, nil)",
        "a->1,2,3",
        "list(a, b) * list(b, nil) || a == b",
        "a != nil && a->_",
    ])
    .prop_map(str::to_string)
}

fn lhs() -> impl Strategy<Value = String> {
    prop_oneof![3 => base(), 1 => location().prop_map(|l| format!("[{l}]"))]
}

fn stmt() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        4 => (prop::collection::vec(lhs(), 1..3), expr()).prop_map(|(ls, e)| format!("{} = {e};", ls.join(" = "))),
        1 => base().prop_map(|b| format!("new({b});")),
        1 => base().prop_map(|b| format!("delete({b});")),
        1 => (name(), prop::collection::vec(expr(), 0..3)).prop_map(|(f, a)| format!("g_{f}({});", a.join(", "))),
        1 => assertion().prop_map(|f| format!("@ {f} @;")),
    ];
    simple.prop_recursive(2, 8, 3, |inner| {
        let block = prop::collection::vec(inner, 0..3).prop_map(|b| b.join("\n"));
        prop_oneof![
            (cond(), block.clone(), prop::option::of(block.clone())).prop_map(|(c, t, e)| match e {
                Some(e) => format!("if ({c}) {{\n{t}\n}} else {{\n{e}\n}}"),
                None => format!("if ({c}) {{\n{t}\n}}"),
            }),
            (cond(), prop::option::of(assertion()), block).prop_map(|(c, inv, b)| match inv {
                Some(inv) => format!("while ({c}) @ {inv} @ {{\n{b}\n}}"),
                None => format!("while ({c}) {{\n{b}\n}}"),
            }),
        ]
    })
}

fn method(prefix: &'static str) -> impl Strategy<Value = String> {
    (
        name(),
        prop::collection::vec((prop::sample::select(vec!["int", "node*", "node**", "MyClass*"]), name()), 0..3),
        prop::option::of(assertion()),
        prop::collection::vec(stmt(), 0..5),
        prop::option::of(assertion()),
    )
        .prop_map(move |(n, params, pre, body, post)| {
            let mut seen = std::collections::BTreeSet::new();
            let params: Vec<String> = params.into_iter().filter(|(_, p)| seen.insert(p.clone())).map(|(t, p)| format!("{t} {p}")).collect();
            let pre = pre.map(|f| format!(" @ {f} @")).unwrap_or_default();
            let post = post.map(|f| format!(" @ {f} @")).unwrap_or_default();
            format!("void {prefix}{n}({}){pre} {{\n{}\n}}{post}\n", params.join(", "), body.join("\n"))
        })
}

/// Grammar-valid programs: an optional class and up to three functions with
/// distinct names.
pub fn source_program() -> impl Strategy<Value = String> {
    (prop::option::of(prop::collection::vec(method("m_"), 0..2)), prop::collection::vec(method("f_"), 0..3), any::<bool>()).prop_map(
        |(class, funcs, with_pred)| {
            let mut out = String::new();
            if with_pred {
                out.push_str("pred seg(x, y) := x == y && emp || exists t. x->object(node, 0, t) * seg(t, y);\n");
            }
            if let Some(methods) = class {
                out.push_str("class MyClass {\n  int attr;\n  node* next;\n");
                for (i, m) in methods.iter().enumerate() {
                    out.push_str(&m.replacen("void m_", &format!("void m{i}_"), 1));
                }
                out.push_str("}\n");
            }
            for (i, f) in funcs.iter().enumerate() {
                out.push_str(&f.replacen("void f_", &format!("void f{i}_"), 1));
            }
            out
        },
    )
}

/// One statement of the straight-line fragment over `x` and `y`.
pub fn straight_line_stmts() -> Vec<String> {
    let mut out = Vec::new();
    for (v, w) in [("x", "y"), ("y", "x")] {
        for k in 0..=3 {
            out.push(format!("{v} = {k};"));
            out.push(format!("[{v}] = {k};"));
        }
        out.push(format!("{v} = {w};"));
        out.push(format!("{v} = [{w}];"));
        out.push(format!("[{v}] = {w};"));
        out.push(format!("new({v});"));
        out.push(format!("delete({v});"));
    }
    out
}

pub const PRES: [&str; 2] = ["emp", "exists v. x->v"];
pub const POSTS: [&str; 2] = ["true", "emp"];

pub fn straight_line_source(stmts: &[&str], pre: &str, post: &str) -> String {
    format!("void f(int* x, int* y) @ {pre} @ {{\n  {}\n}} @ {post} @\n", stmts.join("\n  "))
}
