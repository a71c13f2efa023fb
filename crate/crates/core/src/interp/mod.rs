//! Concrete execution on explicit finite heaps, used as the ground-truth
//! oracle for the verifier.

mod eval;
mod models;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::CmpOp;
use crate::ir::{Addr, Cond, Expr, Function, Lhs, Place, Program, Stmt, StmtKind};

pub use eval::{eval_assertion, eval_assertion_with, EvalError};
pub use models::{models, OracleCaps};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Value {
    Int(i64),
    Record(String, Vec<Value>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Record(..) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Record(c, vs) => {
                write!(f, "object({c}")?;
                for v in vs {
                    write!(f, ", {v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub type Store = BTreeMap<String, Value>;
pub type Heap = BTreeMap<i64, Value>;

/// Store, heap and step counter. The allocated set is the heap's domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ConcreteState {
    pub store: Store,
    pub heap: Heap,
    pub steps: u64,
}

impl fmt::Display for ConcreteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let store: Vec<String> = self.store.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let heap: Vec<String> = self.heap.iter().map(|(a, v)| format!("{a}->{v}")).collect();
        write!(f, "store {{{}}} heap {{{}}}", store.join(", "), heap.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum Fault {
    #[error("invalid memory access at address {addr} (statement {stmt})")]
    InvalidAccess { stmt: usize, addr: i64 },
    #[error("invalid free of address {addr} (statement {stmt})")]
    InvalidFree { stmt: usize, addr: i64 },
    #[error("out of fuel after {steps} steps")]
    OutOfFuel { steps: u64 },
    #[error("integer overflow (statement {stmt})")]
    Overflow { stmt: usize },
    #[error("record value used as an integer (statement {stmt})")]
    NotAnInteger { stmt: usize },
}

impl Fault {
    pub fn kind(&self) -> &'static str {
        match self {
            Fault::InvalidAccess { .. } => "InvalidAccess",
            Fault::InvalidFree { .. } => "InvalidFree",
            Fault::OutOfFuel { .. } => "OutOfFuel",
            Fault::Overflow { .. } => "Overflow",
            Fault::NotAnInteger { .. } => "NotAnInteger",
        }
    }
}

/// Runs the entry function (`main` if present, otherwise the first function)
/// from `initial`.
pub fn run_concrete(program: &Program, initial: ConcreteState, fuel: u64) -> Result<ConcreteState, Fault> {
    let Some(f) = program.functions.iter().find(|f| f.name == "main").or(program.functions.first()) else {
        return Ok(initial);
    };
    run_function(program, f, initial, fuel)
}

/// Runs `f`'s body with `initial.store` as its store.
pub fn run_function(program: &Program, f: &Function, initial: ConcreteState, fuel: u64) -> Result<ConcreteState, Fault> {
    run_function_from(program, f, initial, fuel, 1)
}

/// Like [`run_function`], but `new` takes the lowest free address at or
/// above `first_address`. Shifting the allocator shows which behaviours
/// depend on where fresh cells land.
pub fn run_function_from(
    program: &Program,
    f: &Function,
    initial: ConcreteState,
    fuel: u64,
    first_address: i64,
) -> Result<ConcreteState, Fault> {
    let mut m = Machine { program, fuel, state: initial, first_address: first_address.max(1) };
    m.block(&f.body)?;
    Ok(m.state)
}

/// Runs a statement list directly.
pub fn run_block(program: &Program, body: &[Stmt], initial: ConcreteState, fuel: u64) -> Result<ConcreteState, Fault> {
    let mut m = Machine { program, fuel, state: initial, first_address: 1 };
    m.block(body)?;
    Ok(m.state)
}

/// Lowest free positive address.
pub fn next_free(heap: &Heap) -> i64 {
    next_free_from(heap, 1)
}

fn next_free_from(heap: &Heap, first: i64) -> i64 {
    let mut a = first;
    while heap.contains_key(&a) {
        a += 1;
    }
    a
}

struct Machine<'a> {
    program: &'a Program,
    fuel: u64,
    state: ConcreteState,
    first_address: i64,
}

type R<T> = Result<T, Fault>;

impl Machine<'_> {
    fn tick(&mut self) -> R<()> {
        if self.fuel == 0 {
            return Err(Fault::OutOfFuel { steps: self.state.steps });
        }
        self.fuel -= 1;
        self.state.steps += 1;
        Ok(())
    }

    fn block(&mut self, body: &[Stmt]) -> R<()> {
        body.iter().try_for_each(|s| self.stmt(s))
    }

    /// Nested block: variables it introduces die at its end.
    fn scoped(&mut self, body: &[Stmt]) -> R<()> {
        let outer: Vec<String> = self.state.store.keys().cloned().collect();
        self.block(body)?;
        self.state.store.retain(|k, _| k == "result" || outer.binary_search(k).is_ok());
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> R<()> {
        self.tick()?;
        let id = s.id;
        match &s.kind {
            StmtKind::Assign(lhs, e) => {
                let v = self.expr(e, id)?;
                match lhs {
                    Lhs::Place(p) => self.write_place(p, v, id),
                    Lhs::Mem(a) => {
                        let addr = self.addr(a, id)?;
                        match self.state.heap.get_mut(&addr) {
                            Some(cell) => {
                                *cell = v;
                                Ok(())
                            }
                            None => Err(Fault::InvalidAccess { stmt: id, addr }),
                        }
                    }
                }
            }
            StmtKind::Ite(c, a, b) => {
                if self.cond(c, id)? {
                    self.scoped(a)
                } else {
                    self.scoped(b)
                }
            }
            StmtKind::While(c, _, body) => {
                while self.cond(c, id)? {
                    self.tick()?;
                    self.scoped(body)?;
                }
                Ok(())
            }
            StmtKind::New(p) => {
                let a = next_free_from(&self.state.heap, self.first_address);
                self.state.heap.insert(a, Value::Int(0));
                self.write_place(p, Value::Int(a), id)
            }
            StmtKind::Delete(p) => {
                let a = self.int(self.read_place(p, id)?, id)?;
                match self.state.heap.remove(&a) {
                    Some(_) => Ok(()),
                    None => Err(Fault::InvalidFree { stmt: id, addr: a }),
                }
            }
            StmtKind::Call(name, args) => self.call(name, args, id).map(|_| ()),
            StmtKind::Assert(_) => Ok(()),
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], id: usize) -> R<Value> {
        let vals = args.iter().map(|a| self.expr(a, id)).collect::<R<Vec<_>>>()?;
        let Some(f) = self.program.function(name, vals.len()) else {
            return Ok(Value::Int(0));
        };
        let store = f.params.iter().cloned().zip(vals).collect();
        let saved = std::mem::replace(&mut self.state.store, store);
        let r = self.block(&f.body);
        let callee = std::mem::replace(&mut self.state.store, saved);
        r?;
        Ok(callee.get("result").cloned().unwrap_or(Value::Int(0)))
    }

    fn int(&self, v: Value, id: usize) -> R<i64> {
        v.as_int().ok_or(Fault::NotAnInteger { stmt: id })
    }

    fn read_place(&self, p: &Place, id: usize) -> R<Value> {
        match p {
            Place::Var(v) => Ok(self.state.store.get(v).cloned().unwrap_or(Value::Int(0))),
            Place::Field(o, f) => {
                let addr = self.int(self.read_place(&Place::Var(o.clone()), id)?, id)?;
                let cell = self.state.heap.get(&addr).ok_or(Fault::InvalidAccess { stmt: id, addr })?;
                match cell {
                    // An uninitialised cell reads as a zeroed object.
                    Value::Int(_) => match self.program.class_of_field(f) {
                        Some(_) => Ok(Value::Int(0)),
                        None => Err(Fault::InvalidAccess { stmt: id, addr }),
                    },
                    Value::Record(c, fields) => match self.program.field_index(c, f) {
                        Some(i) => Ok(fields.get(i).cloned().unwrap_or(Value::Int(0))),
                        None => Err(Fault::InvalidAccess { stmt: id, addr }),
                    },
                }
            }
        }
    }

    fn write_place(&mut self, p: &Place, v: Value, id: usize) -> R<()> {
        match p {
            Place::Var(x) => {
                self.state.store.insert(x.clone(), v);
                Ok(())
            }
            Place::Field(o, f) => {
                let addr = self.int(self.read_place(&Place::Var(o.clone()), id)?, id)?;
                let program = self.program;
                let cell = self.state.heap.get_mut(&addr).ok_or(Fault::InvalidAccess { stmt: id, addr })?;
                if let Value::Int(_) = cell {
                    let (class, _) = program.class_of_field(f).ok_or(Fault::InvalidAccess { stmt: id, addr })?;
                    let n = program.field_count(&class).unwrap_or(0);
                    *cell = Value::Record(class, vec![Value::Int(0); n]);
                }
                let Value::Record(c, fields) = cell else { unreachable!("materialised above") };
                let i = program.field_index(c, f).ok_or(Fault::InvalidAccess { stmt: id, addr })?;
                if fields.len() <= i {
                    fields.resize(i + 1, Value::Int(0));
                }
                fields[i] = v;
                Ok(())
            }
        }
    }

    fn addr(&self, a: &Addr, id: usize) -> R<i64> {
        let base = self.int(self.read_place(&a.base, id)?, id)?;
        base.checked_add(a.offset).ok_or(Fault::Overflow { stmt: id })
    }

    fn expr(&mut self, e: &Expr, id: usize) -> R<Value> {
        let arith = |m: &mut Self, a: &Expr, b: &Expr, op: fn(i64, i64) -> Option<i64>| -> R<Value> {
            let x = m.expr(a, id)?;
            let x = m.int(x, id)?;
            let y = m.expr(b, id)?;
            let y = m.int(y, id)?;
            op(x, y).map(Value::Int).ok_or(Fault::Overflow { stmt: id })
        };
        match e {
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Str(_) => Ok(Value::Int(0)),
            Expr::Place(p) => self.read_place(p, id),
            Expr::Mem(a) => {
                let addr = self.addr(a, id)?;
                self.state.heap.get(&addr).cloned().ok_or(Fault::InvalidAccess { stmt: id, addr })
            }
            Expr::Neg(a) => {
                let v = self.expr(a, id)?;
                let v = self.int(v, id)?;
                v.checked_neg().map(Value::Int).ok_or(Fault::Overflow { stmt: id })
            }
            Expr::Add(a, b) => arith(self, a, b, i64::checked_add),
            Expr::Sub(a, b) => arith(self, a, b, i64::checked_sub),
            Expr::Mul(a, b) => arith(self, a, b, i64::checked_mul),
            Expr::Call(name, args) => self.call(name, args, id),
        }
    }

    fn cond(&mut self, c: &Cond, id: usize) -> R<bool> {
        match c {
            Cond::And(a, b) => Ok(self.cond(a, id)? && self.cond(b, id)?),
            Cond::Or(a, b) => Ok(self.cond(a, id)? || self.cond(b, id)?),
            Cond::Cmp(op, a, b) => {
                let x = self.expr(a, id)?;
                let y = self.expr(b, id)?;
                match (op, x.as_int(), y.as_int()) {
                    (_, Some(x), Some(y)) => Ok(op.holds(x as i128, y as i128)),
                    (CmpOp::Eq, _, _) => Ok(x == y),
                    (CmpOp::Ne, _, _) => Ok(x != y),
                    _ => Err(Fault::NotAnInteger { stmt: id }),
                }
            }
        }
    }
}
