//! Executable program representation decoded from terms. Shared by the
//! symbolic executor and the concrete interpreter.

use crate::formula::{CmpOp, Formula, PredTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub classes: Vec<ClassInfo>,
    pub preds: PredTable,
    pub functions: Vec<Function>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub name: String,
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    /// Declaring class for methods.
    pub class: Option<String>,
    pub ret: String,
    pub params: Vec<String>,
    pub pre: Formula,
    pub post: Formula,
    pub body: Vec<Stmt>,
}

impl Function {
    /// `Class::name` for methods, `name` otherwise.
    pub fn qualified_name(&self) -> String {
        match &self.class {
            Some(c) => format!("{c}::{}", self.name),
            None => self.name.clone(),
        }
    }
}

/// Statement with a pre-order index, unique within its function.
#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: usize,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign(Lhs, Expr),
    Ite(Cond, Vec<Stmt>, Vec<Stmt>),
    While(Cond, Formula, Vec<Stmt>),
    New(Place),
    Delete(Place),
    Call(String, Vec<Expr>),
    Assert(Formula),
}

/// A variable or an object field: something that holds a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Place {
    Var(String),
    Field(String, String),
}

/// `[place + offset]`: the cell whose address is the value of `place` plus `offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Addr {
    pub base: Place,
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lhs {
    Place(Place),
    Mem(Addr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Str(String),
    Place(Place),
    Mem(Addr),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Program {
    pub fn function(&self, name: &str, arity: usize) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name && f.params.len() == arity)
    }

    /// The class declaring `field`: user classes first, then the builtin node class.
    pub fn class_of_field(&self, field: &str) -> Option<(String, usize)> {
        for c in &self.classes {
            if let Some(i) = c.fields.iter().position(|f| f == field) {
                return Some((c.name.clone(), i));
            }
        }
        crate::formula::NODE_FIELDS.iter().position(|f| *f == field).map(|i| (crate::formula::NODE_CLASS.to_string(), i))
    }

    /// Field index of `field` within `class`.
    pub fn field_index(&self, class: &str, field: &str) -> Option<usize> {
        if class == crate::formula::NODE_CLASS {
            return crate::formula::NODE_FIELDS.iter().position(|f| *f == field);
        }
        self.classes.iter().find(|c| c.name == class)?.fields.iter().position(|f| f == field)
    }

    pub fn field_count(&self, class: &str) -> Option<usize> {
        if class == crate::formula::NODE_CLASS {
            return Some(crate::formula::NODE_FIELDS.len());
        }
        self.classes.iter().find(|c| c.name == class).map(|c| c.fields.len())
    }
}

/// Variables assigned anywhere in `body` (loop havoc set).
pub fn assigned_vars(body: &[Stmt], out: &mut std::collections::BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(Lhs::Place(Place::Var(v)), _) | StmtKind::New(Place::Var(v)) => {
                out.insert(v.clone());
            }
            StmtKind::Ite(_, a, b) => {
                assigned_vars(a, out);
                assigned_vars(b, out);
            }
            StmtKind::While(_, _, b) => assigned_vars(b, out),
            _ => {}
        }
    }
}

/// Number of statements in `body`, counted in pre-order.
pub fn stmt_count(body: &[Stmt]) -> usize {
    body.iter()
        .map(|s| {
            1 + match &s.kind {
                StmtKind::Ite(_, a, b) => stmt_count(a) + stmt_count(b),
                StmtKind::While(_, _, b) => stmt_count(b),
                _ => 0,
            }
        })
        .sum()
}
