//! SMT-LIB v2 emission for obligations, as a debug and interop path.
//!
//! The script declares every versioned variable, restricts the free integer
//! variables to `[-B, B]` (defined versions follow from their definitions),
//! asserts `path_condition ∧ ¬goal`, and ends with `(check-sat)`. A
//! conforming solver reports `unsat` exactly when [`super::check`] returns
//! `Verified` at that bound.
//!
//! SMT-LIB integer `mod` agrees with MCL's Euclidean `\\` for nonzero
//! divisors; zero divisors are covered by dedicated obligations.

use super::SolverConfig;
use crate::lang::ast::{BinOp, Ty};
use crate::vcgen::{Obligation, Term, VarId};
use std::fmt::Write;

pub fn emit_smtlib(obligation: &Obligation, cfg: &SolverConfig) -> String {
    let vc = &obligation.vc;
    let mut out = String::new();
    let _ = writeln!(out, "; obligation {}", obligation.key);
    let _ = writeln!(out, "; routine {}.{}", vc.class_name, vc.routine_name);
    let _ = writeln!(out, "; free integer variables bounded to [-{}, {}]", cfg.bound, cfg.bound);
    let _ = writeln!(out, "(set-logic ALL)");

    for (i, var) in vc.vars.iter().enumerate() {
        let sort = match var.ty {
            Ty::Int => "Int",
            Ty::Bool => "Bool",
        };
        let _ = writeln!(out, "(declare-const {} {})", sym(vc, VarId(i as u32)), sort);
    }
    for (i, var) in vc.vars.iter().enumerate() {
        if var.def.is_none() && var.ty == Ty::Int {
            let name = sym(vc, VarId(i as u32));
            let _ = writeln!(
                out,
                "(assert (and (>= {name} (- {b})) (<= {name} {b})))",
                b = cfg.bound
            );
        }
    }
    for (i, var) in vc.vars.iter().enumerate() {
        if let Some(f) = var.def_formula(VarId(i as u32)) {
            let _ = writeln!(out, "(assert {})", sexpr(vc, &f));
        }
    }
    for a in obligation.assumptions() {
        let _ = writeln!(out, "(assert {})", sexpr(vc, a));
    }
    let _ = writeln!(out, "(assert {})", sexpr(vc, &obligation.guard));
    let _ = writeln!(
        out,
        "(assert (not {}))",
        sexpr(vc, &obligation.goal)
    );
    let _ = writeln!(out, "(check-sat)");
    out
}

fn sym(vc: &crate::vcgen::RoutineVc, id: VarId) -> String {
    format!("|{}|", vc.vars[id.index()].display_name())
}

fn sexpr(vc: &crate::vcgen::RoutineVc, t: &Term) -> String {
    match t {
        Term::Int(n) if *n < 0 => format!("(- {})", -n),
        Term::Int(n) => n.to_string(),
        Term::Bool(true) => "true".to_string(),
        Term::Bool(false) => "false".to_string(),
        Term::Var(v) => sym(vc, *v),
        Term::Neg(inner) => format!("(- {})", sexpr(vc, inner)),
        Term::Not(inner) => format!("(not {})", sexpr(vc, inner)),
        Term::Bin(op, a, b) => {
            let (a, b) = (sexpr(vc, a), sexpr(vc, b));
            let f = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Mod => "mod",
                BinOp::Eq => "=",
                BinOp::Ne => "distinct",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Implies => "=>",
            };
            format!("({f} {a} {b})")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;
    use crate::vcgen::{generate_obligations, ObligationKind};

    fn obligation(src: &str, routine: &str, kind: ObligationKind) -> Obligation {
        let tp = load("t.mcl", src).unwrap();
        let class = tp.program().classes[0].clone();
        let r = class.routine(routine).unwrap().clone();
        generate_obligations(&tp, &class, &r)
            .into_iter()
            .find(|o| o.kind == kind)
            .unwrap()
    }

    #[test]
    fn tautology_script_shape() {
        let ob = obligation(
            "class C feature x: INTEGER r do check x = x end end end",
            "r",
            ObligationKind::CheckViolation,
        );
        let script = emit_smtlib(&ob, &SolverConfig::default());
        assert!(script.contains("(declare-const |x@0| Int)"));
        assert!(script.contains("(>= |x@0| (- 128))"));
        assert!(script.contains("(assert (not (= |x@0| |x@0|)))"));
        assert!(script.trim_end().ends_with("(check-sat)"));
    }

    #[test]
    fn boolean_variable_has_no_range_assumption() {
        let ob = obligation(
            "class C feature b: BOOLEAN r do check b or not b end end end",
            "r",
            ObligationKind::CheckViolation,
        );
        let script = emit_smtlib(&ob, &SolverConfig::default());
        assert!(script.contains("(declare-const |b@0| Bool)"));
        let range_lines = script.lines().filter(|l| l.contains(">=")).count();
        assert_eq!(range_lines, 0);
    }

    #[test]
    fn negative_literals_are_smt_formed() {
        let ob = obligation(
            "class C feature r (x: INTEGER) do check x > -3 end end end",
            "r",
            ObligationKind::CheckViolation,
        );
        let script = emit_smtlib(&ob, &SolverConfig::default());
        assert!(script.contains("(> |x@0| (- 3))"));
        assert!(!script.contains("-3"));
    }
}
