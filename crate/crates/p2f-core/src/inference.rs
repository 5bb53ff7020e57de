//! Counterexample invariants: predicates over the initial state that hold in
//! every counterexample of one failure.
//!
//! The basic set comes from templates evaluated against the initial states:
//! equality to a constant, equality between two variables, exactly-fitted
//! linear relations `e1 = a*e2 + b`, and lower/upper bounds for non-constant
//! integer variables. The compound set adds the pairwise disjunctions of the
//! basic predicates. Only attributes and arguments participate: the
//! predicates must be insertable into preconditions and evaluable at block
//! entry, which rules out locals and `old`.

use crate::cex::{Counterexample, State};
use crate::lang::ast::{BinOp, Expr, ExprKind, UnOp};
use crate::lang::printer::expr_to_string;
use crate::span::Span;
use crate::Value;
use thiserror::Error;

/// Template that produced a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    ConstantEquality,
    NonConstantEquality,
    LinearRelation,
    LowerBound,
    UpperBound,
    Disjunction,
}

/// A boolean expression over attributes and arguments, in MCL syntax.
#[derive(Debug, Clone)]
pub struct Predicate {
    pub expr: Expr,
    pub provenance: Template,
    text: String,
}

impl Predicate {
    /// Wrap an expression as a predicate. The expression must be boolean and
    /// mention only attributes and arguments.
    pub fn from_expr(expr: Expr, provenance: Template) -> Self {
        let text = expr_to_string(&expr);
        Predicate {
            expr,
            provenance,
            text,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn new_pred(expr: Expr, provenance: Template) -> Predicate {
    Predicate::from_expr(expr, provenance)
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}
impl Eq for Predicate {}

impl std::fmt::Display for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.text)
    }
}

/// Basic set P and compound set Π for one failure's counterexamples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantSet {
    pub basic: Vec<Predicate>,
    pub compound: Vec<Predicate>,
}

impl InvariantSet {
    pub fn from_counterexamples(ces: &[Counterexample]) -> InvariantSet {
        let basic = infer_basic(ces);
        let compound = compound(&basic);
        InvariantSet { basic, compound }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("variable `{0}` is not bound in the state")]
pub struct UnboundVariable(pub String);

/// Infer the basic set P from the initial states of the counterexamples,
/// with redundant predicates pruned.
pub fn infer_basic(ces: &[Counterexample]) -> Vec<Predicate> {
    prune(infer_basic_unpruned(ces))
}

/// The unpruned template instantiations, in template order. Exposed so the
/// template-completeness property can be asserted directly.
pub fn infer_basic_unpruned(ces: &[Counterexample]) -> Vec<Predicate> {
    if ces.is_empty() {
        return Vec::new();
    }
    // initial-state variables (attributes, then arguments) in declaration
    // order; locals and Result never appear
    let vars: Vec<String> = {
        let vc = &ces[0].vc;
        vc.initial_vars
            .iter()
            .map(|id| vc.vars[id.index()].name.clone())
            .collect()
    };
    let columns: Vec<Vec<Value>> = vars
        .iter()
        .map(|name| {
            ces.iter()
                .map(|ce| ce.initial_state().bindings[name])
                .collect()
        })
        .collect();
    let is_constant: Vec<bool> = columns
        .iter()
        .map(|col| col.iter().all(|v| *v == col[0]))
        .collect();

    let mut out = Vec::new();

    // equality to primitive-type constants
    for (i, name) in vars.iter().enumerate() {
        if is_constant[i] {
            out.push(new_pred(
                eq_expr(var(name), value_expr(columns[i][0])),
                Template::ConstantEquality,
            ));
        }
    }

    // non-constant equality between two variables of the same type
    for i in 0..vars.len() {
        for j in (i + 1)..vars.len() {
            if is_constant[i] && is_constant[j] {
                continue;
            }
            if std::mem::discriminant(&columns[i][0]) != std::mem::discriminant(&columns[j][0]) {
                continue;
            }
            if columns[i].iter().zip(columns[j].iter()).all(|(a, b)| a == b) {
                out.push(new_pred(
                    eq_expr(var(&vars[i]), var(&vars[j])),
                    Template::NonConstantEquality,
                ));
            }
        }
    }

    // linear relations e1 = a * e2 + b, fitted from two counterexamples with
    // distinct e2 values and checked against all of them
    for i in 0..vars.len() {
        for j in 0..vars.len() {
            if i == j || !is_int(&columns[i]) || !is_int(&columns[j]) {
                continue;
            }
            if let Some((a, b)) = fit_linear(&columns[i], &columns[j]) {
                if a == 1 && b == 0 {
                    continue; // already the equality template
                }
                out.push(new_pred(
                    eq_expr(var(&vars[i]), linear_expr(a, &vars[j], b)),
                    Template::LinearRelation,
                ));
            }
        }
    }

    // bounds for non-constant integer variables
    for (i, name) in vars.iter().enumerate() {
        if is_constant[i] || !is_int(&columns[i]) {
            continue;
        }
        let lo = columns[i].iter().map(|v| v.as_int()).min().unwrap();
        let hi = columns[i].iter().map(|v| v.as_int()).max().unwrap();
        out.push(new_pred(
            Expr::new(
                ExprKind::Binary(BinOp::Ge, Box::new(var(name)), Box::new(int_expr(lo))),
                Span::default(),
            ),
            Template::LowerBound,
        ));
        out.push(new_pred(
            Expr::new(
                ExprKind::Binary(BinOp::Le, Box::new(var(name)), Box::new(int_expr(hi))),
                Span::default(),
            ),
            Template::UpperBound,
        ));
    }

    out
}

/// Drop bound predicates shadowed by a constant equality on the same
/// variable, and syntactic duplicates.
fn prune(preds: Vec<Predicate>) -> Vec<Predicate> {
    let constants: Vec<String> = preds
        .iter()
        .filter(|p| p.provenance == Template::ConstantEquality)
        .filter_map(|p| match &p.expr.kind {
            ExprKind::Binary(BinOp::Eq, lhs, _) => match &lhs.kind {
                ExprKind::Var(name) => Some(name.clone()),
                _ => None,
            },
            _ => None,
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    preds
        .into_iter()
        .filter(|p| {
            if matches!(p.provenance, Template::LowerBound | Template::UpperBound) {
                if let ExprKind::Binary(_, lhs, _) = &p.expr.kind {
                    if let ExprKind::Var(name) = &lhs.kind {
                        if constants.contains(name) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .filter(|p| seen.insert(p.text.clone()))
        .collect()
}

/// Π = P ∪ { p ∨ q : p, q distinct members of P }, basic predicates first,
/// then pairs in lexicographic index order.
pub fn compound(basic: &[Predicate]) -> Vec<Predicate> {
    let mut out: Vec<Predicate> = basic.to_vec();
    for i in 0..basic.len() {
        for j in (i + 1)..basic.len() {
            out.push(new_pred(
                Expr::new(
                    ExprKind::Binary(
                        BinOp::Or,
                        Box::new(basic[i].expr.clone()),
                        Box::new(basic[j].expr.clone()),
                    ),
                    Span::default(),
                ),
                Template::Disjunction,
            ));
        }
    }
    out
}

/// Evaluate a predicate in a state.
pub fn holds_in(pred: &Predicate, state: &State) -> Result<bool, UnboundVariable> {
    for name in pred.expr.var_names() {
        if !state.bindings.contains_key(&name) {
            return Err(UnboundVariable(name));
        }
    }
    let env = state.plain();
    let old = state.olds();
    Ok(crate::cex::eval_expr(&pred.expr, &env, &old).as_bool())
}

fn is_int(col: &[Value]) -> bool {
    matches!(col[0], Value::Int(_))
}

/// Fit `e1 = a * e2 + b` from the first two samples with distinct `e2`,
/// requiring an integral `a != 0`; verify on every sample.
fn fit_linear(e1: &[Value], e2: &[Value]) -> Option<(i64, i64)> {
    let mut base: Option<(i64, i64)> = None;
    let mut fit: Option<(i64, i64)> = None;
    for (v1, v2) in e1.iter().zip(e2.iter()) {
        let (x1, x2) = (v1.as_int(), v2.as_int());
        match base {
            None => base = Some((x1, x2)),
            Some((y1, y2)) => {
                if x2 != y2 {
                    let dy = x1 - y1;
                    let dx = x2 - y2;
                    if dy % dx != 0 {
                        return None;
                    }
                    let a = dy / dx;
                    if a == 0 {
                        return None;
                    }
                    fit = Some((a, y1 - a * y2));
                    break;
                }
            }
        }
    }
    let (a, b) = fit?;
    for (v1, v2) in e1.iter().zip(e2.iter()) {
        if v1.as_int() != a * v2.as_int() + b {
            return None;
        }
    }
    Some((a, b))
}

fn var(name: &str) -> Expr {
    Expr::new(ExprKind::Var(name.to_string()), Span::default())
}

fn int_expr(n: i64) -> Expr {
    if n < 0 {
        Expr::new(
            ExprKind::Unary(
                UnOp::Neg,
                Box::new(Expr::new(ExprKind::IntLit(-n), Span::default())),
            ),
            Span::default(),
        )
    } else {
        Expr::new(ExprKind::IntLit(n), Span::default())
    }
}

fn value_expr(v: Value) -> Expr {
    match v {
        Value::Int(n) => int_expr(n),
        Value::Bool(b) => Expr::new(ExprKind::BoolLit(b), Span::default()),
    }
}

fn eq_expr(lhs: Expr, rhs: Expr) -> Expr {
    Expr::new(
        ExprKind::Binary(BinOp::Eq, Box::new(lhs), Box::new(rhs)),
        Span::default(),
    )
}

/// `a * name + b` with the small cases spelled naturally.
fn linear_expr(a: i64, name: &str, b: i64) -> Expr {
    let scaled = if a == 1 {
        var(name)
    } else {
        Expr::new(
            ExprKind::Binary(BinOp::Mul, Box::new(int_expr(a)), Box::new(var(name))),
            Span::default(),
        )
    };
    if b == 0 {
        scaled
    } else if b > 0 {
        Expr::new(
            ExprKind::Binary(BinOp::Add, Box::new(scaled), Box::new(int_expr(b))),
            Span::default(),
        )
    } else {
        Expr::new(
            ExprKind::Binary(BinOp::Sub, Box::new(scaled), Box::new(int_expr(-b))),
            Span::default(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cex::{extract_counterexamples, ProofFailure};
    use crate::lang::load;
    use crate::solver::{check, SolverConfig};
    use crate::vcgen::generate_obligations;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    const CLOCK: &str = include_str!("../tests/data/clock_buggy.mcl");

    fn clock_ces(routine: &str, label: &str) -> Vec<Counterexample> {
        let tp = load("t.mcl", CLOCK).unwrap();
        let class = tp.program().classes[0].clone();
        let r = class.routine(routine).unwrap().clone();
        let cfg = SolverConfig::default();
        let failure = generate_obligations(&tp, &class, &r)
            .into_iter()
            .filter(|ob| !check(ob, &cfg).is_verified())
            .map(|obligation| ProofFailure { obligation })
            .find(|f| f.clause_label() == Some(label))
            .expect("failure present");
        extract_counterexamples(&failure, &tp, &cfg).unwrap()
    }

    /// Hand-built counterexamples over two integer variables.
    fn synthetic_ces(rows: &[(i64, i64)]) -> Vec<Counterexample> {
        use crate::vcgen::{ObligationKey, ObligationKind, RoutineVc, VarId, VcVar};
        let vc = Arc::new(RoutineVc {
            class_name: "T".into(),
            routine_name: "r".into(),
            vars: vec![
                VcVar {
                    name: "x".into(),
                    version: 0,
                    ty: crate::lang::ast::Ty::Int,
                    def: None,
                },
                VcVar {
                    name: "y".into(),
                    version: 0,
                    ty: crate::lang::ast::Ty::Int,
                    def: None,
                },
            ],
            assumptions: Vec::new(),
            state_vars: vec![BTreeMap::from([
                ("x".to_string(), VarId(0)),
                ("y".to_string(), VarId(1)),
            ])],
            initial_vars: vec![VarId(0), VarId(1)],
            havoc_vars: BTreeMap::new(),
        });
        rows.iter()
            .map(|(x, y)| {
                let bindings = BTreeMap::from([
                    ("x".to_string(), Value::Int(*x)),
                    ("y".to_string(), Value::Int(*y)),
                ]);
                Counterexample {
                    failure_key: ObligationKey {
                        routine: "r".into(),
                        kind: ObligationKind::CheckViolation,
                        clause_label: None,
                        occurrence: 0,
                    },
                    states: vec![State { bindings }],
                    model: crate::solver::Model {
                        values: vec![Value::Int(*x), Value::Int(*y)],
                    },
                    vc: Arc::clone(&vc),
                }
            })
            .collect()
    }

    #[test]
    fn clock_hours_failure_yields_hours_23() {
        let ces = clock_ces("increase_hours", "hours_increased");
        let basic = infer_basic(&ces);
        assert!(basic.iter().any(|p| p.text() == "hours = 23"), "{basic:?}");
    }

    #[test]
    fn clock_minutes_failure_yields_minutes_59() {
        let ces = clock_ces("increase_minutes", "hours_increased");
        let basic = infer_basic(&ces);
        assert!(basic.iter().any(|p| p.text() == "minutes = 59"), "{basic:?}");
    }

    #[test]
    fn single_ce_yields_constants_and_no_linear() {
        let ces = synthetic_ces(&[(2, 5)]);
        let basic = infer_basic(&ces);
        let texts: Vec<&str> = basic.iter().map(|p| p.text()).collect();
        assert_eq!(texts, vec!["x = 2", "y = 5"]);
    }

    #[test]
    fn linear_relation_fitted_and_verified() {
        // y = 2*x + 1 on (1,3), (2,5), (3,7): fitted from the first two,
        // verified on the third by evaluation
        let ces = synthetic_ces(&[(1, 3), (2, 5), (3, 7)]);
        let basic = infer_basic(&ces);
        assert!(
            basic.iter().any(|p| p.text() == "y = 2 * x + 1"),
            "{:?}",
            basic.iter().map(|p| p.text()).collect::<Vec<_>>()
        );
        // the reverse direction x = (y-1)/2 is not an integral fit
        assert!(!basic
            .iter()
            .any(|p| p.text().starts_with("x =") && p.provenance == Template::LinearRelation));
    }

    #[test]
    fn linear_relation_rejected_on_mismatch() {
        let ces = synthetic_ces(&[(1, 3), (2, 5), (3, 8)]);
        let basic = infer_basic(&ces);
        assert!(!basic
            .iter()
            .any(|p| p.provenance == Template::LinearRelation));
    }

    #[test]
    fn bounds_for_non_constant_variables_only() {
        let ces = synthetic_ces(&[(0, 9), (0, 4), (0, 6)]);
        let basic = infer_basic(&ces);
        let texts: Vec<&str> = basic.iter().map(|p| p.text()).collect();
        assert!(texts.contains(&"x = 0"));
        assert!(texts.contains(&"y >= 4"));
        assert!(texts.contains(&"y <= 9"));
        assert!(!texts.contains(&"x >= 0"));
    }

    #[test]
    fn non_constant_equality() {
        let ces = synthetic_ces(&[(1, 1), (4, 4), (2, 2)]);
        let basic = infer_basic(&ces);
        assert!(basic.iter().any(|p| p.text() == "x = y"));
    }

    #[test]
    fn compound_counts_pairs() {
        let ces = clock_ces("increase_hours", "hours_increased");
        let basic = infer_basic(&ces);
        let pi = compound(&basic);
        let n = basic.len();
        assert_eq!(pi.len(), n + n * (n - 1) / 2);
        assert!(pi[..n].iter().all(|p| p.provenance != Template::Disjunction));
        assert!(pi[n..].iter().all(|p| p.provenance == Template::Disjunction));
        assert!(compound(&[]).is_empty());
    }

    #[test]
    fn soundness_every_predicate_holds_in_every_initial_state() {
        for (routine, label) in [
            ("increase_hours", "hours_increased"),
            ("increase_minutes", "hours_increased"),
        ] {
            let ces = clock_ces(routine, label);
            let set = InvariantSet::from_counterexamples(&ces);
            for p in set.basic.iter().chain(set.compound.iter()) {
                for ce in &ces {
                    assert!(
                        holds_in(p, ce.initial_state()).unwrap(),
                        "{p} fails in s1 of a counterexample"
                    );
                }
            }
        }
    }

    #[test]
    fn completeness_constant_variables_get_equality_before_pruning() {
        let ces = synthetic_ces(&[(7, 1), (7, 2)]);
        let raw = infer_basic_unpruned(&ces);
        assert!(raw
            .iter()
            .any(|p| p.provenance == Template::ConstantEquality && p.text() == "x = 7"));
    }

    #[test]
    fn deterministic_for_identical_inputs() {
        let ces = clock_ces("increase_minutes", "hours_increased");
        let a = InvariantSet::from_counterexamples(&ces);
        let b = InvariantSet::from_counterexamples(&ces);
        assert_eq!(a, b);
    }

    #[test]
    fn holds_in_evaluates_and_rejects_unbound() {
        let ces = synthetic_ces(&[(5, 2)]);
        let basic = infer_basic(&ces);
        let x_eq_5 = basic.iter().find(|p| p.text() == "x = 5").unwrap();
        assert!(holds_in(x_eq_5, ces[0].initial_state()).unwrap());
        let empty = State {
            bindings: BTreeMap::new(),
        };
        assert_eq!(
            holds_in(x_eq_5, &empty),
            Err(UnboundVariable("x".to_string()))
        );
    }
}
