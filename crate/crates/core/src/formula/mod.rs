//! Separation-logic assertions: symbolic expressions, formulas, predicate
//! definitions and the normalization algebra over them.

mod ops;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ops::{expand_chains, free_vars, free_vars_expr, normalize, substitute, substitute_expr, Subst};

/// Class name used for the cells of the builtin `list` predicate.
pub const NODE_CLASS: &str = "node";
/// Field names of [`NODE_CLASS`], in record order.
pub const NODE_FIELDS: [&str; 2] = ["val", "next"];

/// A symbolic value: integers, variables, linear arithmetic and records.
///
/// Addresses are integers; `nil` is the integer `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymExpr {
    Int(i64),
    Var(String),
    Add(Box<SymExpr>, Box<SymExpr>),
    Sub(Box<SymExpr>, Box<SymExpr>),
    Mul(Box<SymExpr>, Box<SymExpr>),
    Neg(Box<SymExpr>),
    /// `object(Class, f1, ..., fn)`: the content of one object cell.
    Record(String, Vec<SymExpr>),
}

// Constructors, not operator methods: they take both operands by value.
#[allow(clippy::should_implement_trait)]
impl SymExpr {
    pub fn var(name: impl Into<String>) -> Self {
        SymExpr::Var(name.into())
    }

    pub fn int(n: i64) -> Self {
        SymExpr::Int(n)
    }

    pub fn nil() -> Self {
        SymExpr::Int(0)
    }

    pub fn add(a: SymExpr, b: SymExpr) -> Self {
        SymExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: SymExpr, b: SymExpr) -> Self {
        SymExpr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: SymExpr, b: SymExpr) -> Self {
        SymExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: SymExpr) -> Self {
        SymExpr::Neg(Box::new(a))
    }

    pub fn record(class: impl Into<String>, fields: Vec<SymExpr>) -> Self {
        SymExpr::Record(class.into(), fields)
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            SymExpr::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            SymExpr::Int(n) => Some(*n),
            _ => None,
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(self, SymExpr::Int(_) | SymExpr::Var(_) | SymExpr::Record(..))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// A pure comparison atom `lhs op rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PureAtom {
    pub op: CmpOp,
    pub lhs: SymExpr,
    pub rhs: SymExpr,
}

impl PureAtom {
    pub fn new(op: CmpOp, lhs: SymExpr, rhs: SymExpr) -> Self {
        PureAtom { op, lhs, rhs }
    }

    pub fn eq(lhs: SymExpr, rhs: SymExpr) -> Self {
        Self::new(CmpOp::Eq, lhs, rhs)
    }

    pub fn ne(lhs: SymExpr, rhs: SymExpr) -> Self {
        Self::new(CmpOp::Ne, lhs, rhs)
    }

    pub fn negated(&self) -> Self {
        Self::new(self.op.negate(), self.lhs.clone(), self.rhs.clone())
    }
}

/// Heap and stack assertions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Emp,
    True,
    False,
    PointsTo(SymExpr, SymExpr),
    /// `x->a,b,c`: `x` holds the address of a singly linked chain of
    /// `node` cells carrying the listed values, terminated by `nil`.
    Chain(SymExpr, Vec<SymExpr>),
    Star(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Pred(String, Vec<SymExpr>),
    Pure(PureAtom),
}

impl Formula {
    pub fn pto(loc: SymExpr, val: SymExpr) -> Self {
        Formula::PointsTo(loc, val)
    }

    pub fn star(a: Formula, b: Formula) -> Self {
        Formula::Star(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn pred(name: impl Into<String>, args: Vec<SymExpr>) -> Self {
        Formula::Pred(name.into(), args)
    }

    pub fn pure(op: CmpOp, lhs: SymExpr, rhs: SymExpr) -> Self {
        Formula::Pure(PureAtom::new(op, lhs, rhs))
    }

    /// Right-nested `*` of `parts`; `emp` when empty.
    pub fn star_all(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return Formula::Emp;
        };
        while let Some(p) = parts.pop() {
            acc = Formula::star(p, acc);
        }
        acc
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Star(..) => 3,
            _ => 4,
        }
    }
}

/// A named, possibly recursive heap predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Formula,
    pub builtin: bool,
}

impl PredDef {
    /// `list(s,e) := (s == e && emp) || exists t, v. s->object(node, v, t) * list(t, e)`
    pub fn builtin_list() -> Self {
        let s = SymExpr::var("s");
        let e = SymExpr::var("e");
        let base = Formula::and(Formula::pure(CmpOp::Eq, s.clone(), e.clone()), Formula::Emp);
        let step = Formula::exists(
            "t",
            Formula::exists(
                "v",
                Formula::star(
                    Formula::pto(s, SymExpr::record(NODE_CLASS, vec![SymExpr::var("v"), SymExpr::var("t")])),
                    Formula::pred("list", vec![SymExpr::var("t"), e]),
                ),
            ),
        );
        PredDef { name: "list".into(), params: vec!["s".into(), "e".into()], body: Formula::or(base, step), builtin: true }
    }
}

/// Predicate definitions by name. Always contains the builtin `list`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredTable {
    defs: Vec<PredDef>,
}

impl Default for PredTable {
    fn default() -> Self {
        PredTable { defs: vec![PredDef::builtin_list()] }
    }
}

impl PredTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a user definition. Builtins cannot be replaced.
    pub fn insert(&mut self, def: PredDef) -> bool {
        match self.defs.iter_mut().find(|d| d.name == def.name) {
            Some(existing) if existing.builtin => false,
            Some(existing) => {
                *existing = def;
                true
            }
            None => {
                self.defs.push(def);
                true
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&PredDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.get(name).map(|d| d.params.len())
    }

    pub fn user_defs(&self) -> impl Iterator<Item = &PredDef> {
        self.defs.iter().filter(|d| !d.builtin)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredDef> {
        self.defs.iter()
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymExpr::Int(n) => write!(f, "{n}"),
            SymExpr::Var(v) => write!(f, "{v}"),
            SymExpr::Add(a, b) | SymExpr::Sub(a, b) => {
                let op = if matches!(self, SymExpr::Add(..)) { "+" } else { "-" };
                write!(f, "{a} {op} ")?;
                if matches!(**b, SymExpr::Add(..) | SymExpr::Sub(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            SymExpr::Mul(a, b) => {
                write!(f, "(")?;
                write_factor(f, a)?;
                write!(f, " * ")?;
                write_factor(f, b)?;
                write!(f, ")")
            }
            SymExpr::Neg(a) => match **a {
                SymExpr::Var(_) | SymExpr::Record(..) => write!(f, "-{a}"),
                _ => write!(f, "-({a})"),
            },
            SymExpr::Record(class, fields) => {
                write!(f, "object({class}")?;
                for field in fields {
                    write!(f, ", {field}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, e: &SymExpr) -> fmt::Result {
    if matches!(e, SymExpr::Add(..) | SymExpr::Sub(..)) {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_loc(f: &mut fmt::Formatter<'_>, e: &SymExpr) -> fmt::Result {
    if e.is_atomic() && !matches!(e, SymExpr::Int(n) if *n < 0) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for PureAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Emp => write!(f, "emp"),
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::PointsTo(l, v) => {
                write_loc(f, l)?;
                write!(f, "->{v}")
            }
            Formula::Chain(l, vs) => {
                write_loc(f, l)?;
                write!(f, "->")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
                let (prec, op) = match self {
                    Formula::Star(..) => (3, "*"),
                    Formula::And(..) => (2, "&&"),
                    _ => (1, "||"),
                };
                write_child(f, a, a.precedence() <= prec)?;
                write!(f, " {op} ")?;
                write_child(f, b, b.precedence() < prec)
            }
            Formula::Exists(v, body) => write!(f, "exists {v}. {body}"),
            Formula::Pred(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Formula::Pure(atom) => write!(f, "{atom}"),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for PredDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pred {}({}) := {};", self.name, self.params.join(", "), self.body)
    }
}
