use crate::formula::{CmpOp, Formula, PredDef};
use crate::span::{SourceMap, Span};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceProgram {
    pub classes: Vec<ClassDecl>,
    pub predicates: Vec<PredDecl>,
    /// Functions declared outside any class.
    pub functions: Vec<MethodDecl>,
    pub source_map: SourceMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredDecl {
    pub def: PredDef,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub ret: String,
    pub params: Vec<Param>,
    pub pre: Formula,
    pub body: Block,
    pub post: Formula,
    pub span: Span,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `l1 = l2 = ... = e`, targets in source order.
    Assign(Vec<Lhs>, Expr),
    If(Cond, Block, Option<Block>),
    While(Cond, Formula, Block),
    New(Base),
    Delete(Base),
    Call(Call),
    Assert(Formula),
}

/// `x`, `o.f` or `this.f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Base {
    Var(String),
    Field(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub base: Base,
    pub offset: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lhs {
    Loc(Base),
    /// `[location]`
    Mem(Location),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub receiver: Option<String>,
    pub name: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Str(String),
    Loc(Base),
    Mem(Location),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Call),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl SourceProgram {
    /// A copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> SourceProgram {
        fn block(b: &Block) -> Block {
            b.iter()
                .map(|s| Stmt {
                    span: Span::default(),
                    kind: match &s.kind {
                        StmtKind::If(c, t, e) => StmtKind::If(c.clone(), block(t), e.as_ref().map(block)),
                        StmtKind::While(c, inv, b) => StmtKind::While(c.clone(), inv.clone(), block(b)),
                        other => other.clone(),
                    },
                })
                .collect()
        }
        fn method(m: &MethodDecl) -> MethodDecl {
            MethodDecl { span: Span::default(), body: block(&m.body), ..m.clone() }
        }
        SourceProgram {
            classes: self
                .classes
                .iter()
                .map(|c| ClassDecl {
                    name: c.name.clone(),
                    fields: c.fields.iter().map(|f| FieldDecl { span: Span::default(), ..f.clone() }).collect(),
                    methods: c.methods.iter().map(method).collect(),
                    span: Span::default(),
                })
                .collect(),
            predicates: self.predicates.iter().map(|p| PredDecl { def: p.def.clone(), span: Span::default() }).collect(),
            functions: self.functions.iter().map(method).collect(),
            source_map: SourceMap::default(),
        }
    }
}
