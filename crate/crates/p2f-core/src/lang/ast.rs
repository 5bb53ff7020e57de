//! Abstract syntax for MCL (Mini Contract Language).
//!
//! Every node carries a byte span into the source it was parsed from.
//! Instructions and instruction blocks additionally carry stable ids assigned
//! by the parser; the verifier and the repair engine use them to talk about
//! program locations independently of spans.

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Int,
    Bool,
}

impl Ty {
    pub fn name(self) -> &'static str {
        match self {
            Ty::Int => "INTEGER",
            Ty::Bool => "BOOLEAN",
        }
    }
}

/// Identifier occurrence with its source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub text: String,
    pub span: Span,
}

impl Ident {
    pub fn new(text: impl Into<String>, span: Span) -> Self {
        Ident {
            text: text.into(),
            span,
        }
    }
}

/// Stable id of an instruction within one parsed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstrId(pub u32);

/// Stable id of an instruction block (routine body, branch, or loop body).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    /// File name used in diagnostics; not part of the language.
    pub file: String,
    pub classes: Vec<ClassDecl>,
    pub span: Span,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name.text == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: Ident,
    pub attributes: Vec<VarDecl>,
    pub routines: Vec<RoutineDecl>,
    pub invariant_clauses: Vec<LabeledClause>,
    pub span: Span,
}

impl ClassDecl {
    pub fn routine(&self, name: &str) -> Option<&RoutineDecl> {
        self.routines.iter().find(|r| r.name.text == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&VarDecl> {
        self.attributes.iter().find(|a| a.name.text == name)
    }
}

/// An attribute, argument, or local declaration `name: TYPE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: Ident,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutineDecl {
    pub name: Ident,
    pub args: Vec<VarDecl>,
    /// Present for functions, which bind `Result`.
    pub return_type: Option<Ty>,
    pub precondition: Vec<LabeledClause>,
    /// Declared frame; `None` means the default (all attributes for commands,
    /// nothing for functions).
    pub modify: Option<Vec<Ident>>,
    pub locals: Vec<VarDecl>,
    pub body: Block,
    pub postcondition: Vec<LabeledClause>,
    pub span: Span,
    /// Offset where a `require` section can be inserted if none exists
    /// (start of the `modify`/`local`/`do` section).
    pub contract_insert_at: usize,
    /// End offset of the last precondition clause, when one exists.
    pub precondition_end: Option<usize>,
    /// Span of the routine's closing `end` keyword.
    pub end_span: Span,
}

impl RoutineDecl {
    pub fn is_function(&self) -> bool {
        self.return_type.is_some()
    }
}

/// A contract clause `[label:] predicate`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledClause {
    pub label: Option<Ident>,
    pub predicate: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub instrs: Vec<Instr>,
    /// Covers the instruction list; zero-width at the insertion point when
    /// the list is empty.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instr {
    pub id: InstrId,
    pub kind: InstrKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    Assign {
        target: Ident,
        value: Expr,
    },
    If {
        cond: Expr,
        then_blk: Block,
        else_blk: Block,
        /// Whether the source spelled out an `else` part (printing detail;
        /// an absent part is an empty block semantically).
        has_else: bool,
    },
    Loop {
        init: Block,
        exit_cond: Expr,
        invariant: Vec<LabeledClause>,
        body: Block,
    },
    Check {
        cond: Expr,
    },
    Call {
        routine: Ident,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    BoolLit(bool),
    Var(String),
    /// `old a` where `a` is an attribute.
    Old(Ident),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Integer modulo `\\`, Euclidean: the result lies in `[0, |divisor|)`.
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Mod)
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies)
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Names of all variables referenced, with `old a` contributing `a`.
    pub fn var_names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match &self.kind {
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) => {}
            ExprKind::Var(name) => {
                out.insert(name.clone());
            }
            ExprKind::Old(name) => {
                out.insert(name.text.clone());
            }
            ExprKind::Unary(_, e) => e.collect_vars(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_old(&self) -> bool {
        match &self.kind {
            ExprKind::Old(_) => true,
            ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => false,
            ExprKind::Unary(_, e) => e.contains_old(),
            ExprKind::Binary(_, a, b) => a.contains_old() || b.contains_old(),
        }
    }
}

impl Block {
    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// All instructions in this block and nested blocks, preorder.
    pub fn all_instrs(&self) -> Vec<&Instr> {
        let mut out = Vec::new();
        self.collect_instrs(&mut out);
        out
    }

    fn collect_instrs<'a>(&'a self, out: &mut Vec<&'a Instr>) {
        for instr in &self.instrs {
            out.push(instr);
            match &instr.kind {
                InstrKind::If {
                    then_blk, else_blk, ..
                } => {
                    then_blk.collect_instrs(out);
                    else_blk.collect_instrs(out);
                }
                InstrKind::Loop { init, body, .. } => {
                    init.collect_instrs(out);
                    body.collect_instrs(out);
                }
                _ => {}
            }
        }
    }
}
