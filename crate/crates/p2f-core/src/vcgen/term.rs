//! Quantifier-free formulas and terms over versioned variables.
//!
//! Passification maps every assignment to a fresh variable version, so a
//! solver model assigns a value to each intermediate program state. `old`
//! disappears here: version 0 of an attribute plays its role.

use crate::lang::ast::{BinOp, Ty};
use crate::{euclid_mod, Value};

/// Index into a routine's versioned-variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Int(i64),
    Bool(bool),
    Var(VarId),
    Neg(Box<Term>),
    Not(Box<Term>),
    Bin(BinOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(id: VarId) -> Term {
        Term::Var(id)
    }

    pub fn not(t: Term) -> Term {
        Term::Not(Box::new(t))
    }

    pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
        Term::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Term, b: Term) -> Term {
        match (&a, &b) {
            (Term::Bool(true), _) => b,
            (_, Term::Bool(true)) => a,
            _ => Term::bin(BinOp::And, a, b),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        match &a {
            Term::Bool(true) => b,
            _ => Term::bin(BinOp::Implies, a, b),
        }
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::bin(BinOp::Eq, a, b)
    }

    /// Conjunction of a list; `True` when empty.
    pub fn conj(terms: impl IntoIterator<Item = Term>) -> Term {
        let mut it = terms.into_iter();
        let first = match it.next() {
            Some(t) => t,
            None => return Term::Bool(true),
        };
        it.fold(first, Term::and)
    }

    /// Evaluate under a total assignment.
    pub fn eval(&self, values: &[Value]) -> Value {
        match self {
            Term::Int(n) => Value::Int(*n),
            Term::Bool(b) => Value::Bool(*b),
            Term::Var(v) => values[v.index()],
            Term::Neg(t) => Value::Int(-t.eval(values).as_int()),
            Term::Not(t) => Value::Bool(!t.eval(values).as_bool()),
            Term::Bin(op, a, b) => {
                // short-circuit the boolean connectives
                match op {
                    BinOp::And => {
                        return Value::Bool(
                            a.eval(values).as_bool() && b.eval(values).as_bool(),
                        )
                    }
                    BinOp::Or => {
                        return Value::Bool(
                            a.eval(values).as_bool() || b.eval(values).as_bool(),
                        )
                    }
                    BinOp::Implies => {
                        return Value::Bool(
                            !a.eval(values).as_bool() || b.eval(values).as_bool(),
                        )
                    }
                    _ => {}
                }
                let va = a.eval(values);
                let vb = b.eval(values);
                match op {
                    BinOp::Add => Value::Int(va.as_int().wrapping_add(vb.as_int())),
                    BinOp::Sub => Value::Int(va.as_int().wrapping_sub(vb.as_int())),
                    BinOp::Mul => Value::Int(va.as_int().wrapping_mul(vb.as_int())),
                    BinOp::Mod => Value::Int(euclid_mod(va.as_int(), vb.as_int())),
                    BinOp::Eq => Value::Bool(va == vb),
                    BinOp::Ne => Value::Bool(va != vb),
                    BinOp::Lt => Value::Bool(va.as_int() < vb.as_int()),
                    BinOp::Le => Value::Bool(va.as_int() <= vb.as_int()),
                    BinOp::Gt => Value::Bool(va.as_int() > vb.as_int()),
                    BinOp::Ge => Value::Bool(va.as_int() >= vb.as_int()),
                    BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
                }
            }
        }
    }

    /// All variables referenced by this term.
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Int(_) | Term::Bool(_) => {}
            Term::Var(v) => out.push(*v),
            Term::Neg(t) | Term::Not(t) => t.collect_vars(out),
            Term::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Split into conjuncts, pushing negation through `or`/`implies`/`not`.
    pub fn conjuncts(&self) -> Vec<Term> {
        let mut out = Vec::new();
        collect_conjuncts(self, false, &mut out);
        out
    }
}

fn collect_conjuncts(t: &Term, negated: bool, out: &mut Vec<Term>) {
    match (t, negated) {
        (Term::Bin(BinOp::And, a, b), false) => {
            collect_conjuncts(a, false, out);
            collect_conjuncts(b, false, out);
        }
        (Term::Bin(BinOp::Or, a, b), true) => {
            collect_conjuncts(a, true, out);
            collect_conjuncts(b, true, out);
        }
        (Term::Bin(BinOp::Implies, a, b), true) => {
            collect_conjuncts(a, false, out);
            collect_conjuncts(b, true, out);
        }
        (Term::Not(inner), neg) => collect_conjuncts(inner, !neg, out),
        _ => {
            if negated {
                out.push(Term::not(t.clone()));
            } else {
                out.push(t.clone());
            }
        }
    }
}

/// How a versioned variable obtains its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VcDef {
    /// Expression over earlier variables (assignments, local initialization).
    Expr(Term),
    /// Branch join: `cond ? then_v : else_v` with `cond` over pre-branch versions.
    Join {
        cond: Term,
        then_v: VarId,
        else_v: VarId,
    },
}

/// One versioned variable of a routine's verification condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcVar {
    pub name: String,
    pub version: u32,
    pub ty: Ty,
    /// `None` marks a free variable: an initial-state input or a havoc
    /// introduced for a call or loop.
    pub def: Option<VcDef>,
}

impl VcVar {
    pub fn display_name(&self) -> String {
        format!("{}@{}", self.name, self.version)
    }

    /// Rendering of the definition as a formula, used by `path_condition`
    /// and the SMT-LIB emitter.
    pub fn def_formula(&self, id: VarId) -> Option<Term> {
        match &self.def {
            None => None,
            Some(VcDef::Expr(t)) => Some(Term::eq(Term::var(id), t.clone())),
            Some(VcDef::Join { cond, then_v, else_v }) => Some(Term::and(
                Term::implies(cond.clone(), Term::eq(Term::var(id), Term::var(*then_v))),
                Term::implies(
                    Term::not(cond.clone()),
                    Term::eq(Term::var(id), Term::var(*else_v)),
                ),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_arithmetic_and_mod() {
        let t = Term::bin(
            BinOp::Mod,
            Term::bin(BinOp::Add, Term::Int(23), Term::Int(1)),
            Term::Int(24),
        );
        assert_eq!(t.eval(&[]), Value::Int(0));
    }

    #[test]
    fn conjuncts_split_negated_implication() {
        // not (a implies b) == a and not b
        let a = Term::var(VarId(0));
        let b = Term::var(VarId(1));
        let t = Term::not(Term::implies(a.clone(), b.clone()));
        let cs = t.conjuncts();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0], a);
        assert_eq!(cs[1], Term::not(b));
    }

    #[test]
    fn conjuncts_of_conjunction() {
        let t = Term::and(
            Term::bin(BinOp::Ge, Term::var(VarId(0)), Term::Int(0)),
            Term::bin(BinOp::Le, Term::var(VarId(0)), Term::Int(23)),
        );
        assert_eq!(t.conjuncts().len(), 2);
    }
}
