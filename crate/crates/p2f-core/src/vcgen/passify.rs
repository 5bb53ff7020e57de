//! Translation of a routine to single-assignment form with per-clause
//! proof obligations.
//!
//! Semantics implemented here:
//! - Assign: a fresh version of the target is defined by the right-hand side
//!   over current versions.
//! - If: both branches are passified; differing versions are merged through
//!   join definitions guarded by the branch condition.
//! - Call: assert each callee precondition clause, havoc exactly the callee's
//!   frame, then assume the callee postcondition (callee `old` = pre-call
//!   versions) and the class invariant.
//! - Loop: assert invariant initiation, havoc variables assigned in the body,
//!   assume invariant; the body arm (guarded by the negated exit condition)
//!   asserts invariant maintenance; after the loop the exit condition and the
//!   invariant hold at the havoc versions.
//! - Every asserted clause is subsequently assumed, so later obligations in
//!   the same routine build on earlier checks.
//! - Each modulo evaluated by the routine (in body expressions and asserted
//!   clauses) yields a divisor-nonzero obligation at its evaluation point.
//!
//! The class invariant and the precondition are assumed at entry with
//! version 0 of each variable bound to `old`; the postcondition and the
//! class invariant are asserted at exit.

use super::term::{Term, VarId, VcDef, VcVar};
use super::{Obligation, ObligationKey, ObligationKind, RoutineVc};
use crate::lang::ast::*;
use crate::lang::typecheck::TypedProgram;
use crate::span::Span;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

pub fn passify_routine(
    tp: &TypedProgram,
    class: &ClassDecl,
    routine: &RoutineDecl,
) -> Vec<Obligation> {
    let mut p = Passifier {
        tp,
        class,
        routine,
        vars: Vec::new(),
        versions: HashMap::new(),
        cur: BTreeMap::new(),
        assumptions: Vec::new(),
        guards: Vec::new(),
        sketches: Vec::new(),
        havoc_vars: BTreeMap::new(),
        state_vars: Vec::new(),
        initial_vars: Vec::new(),
        old_env: BTreeMap::new(),
    };
    p.run();
    p.finish()
}

struct Sketch {
    kind: ObligationKind,
    clause_label: Option<String>,
    location: Span,
    assumption_count: usize,
    guard: Term,
    goal: Term,
}

struct Passifier<'a> {
    tp: &'a TypedProgram,
    class: &'a ClassDecl,
    routine: &'a RoutineDecl,
    vars: Vec<VcVar>,
    versions: HashMap<String, u32>,
    /// Current version of every name in scope.
    cur: BTreeMap<String, VarId>,
    assumptions: Vec<Term>,
    guards: Vec<Term>,
    sketches: Vec<Sketch>,
    havoc_vars: BTreeMap<InstrId, Vec<(String, VarId)>>,
    state_vars: Vec<BTreeMap<String, VarId>>,
    initial_vars: Vec<VarId>,
    /// Attribute name -> version-0 variable, the meaning of `old`.
    old_env: BTreeMap<String, VarId>,
}

/// Name resolution context for translating contract expressions.
struct NameEnv<'e> {
    cur: &'e BTreeMap<String, VarId>,
    old: &'e BTreeMap<String, VarId>,
    /// Callee formals substituted by actual-argument terms.
    subst: Option<&'e BTreeMap<String, Term>>,
}

impl<'a> Passifier<'a> {
    fn fresh(&mut self, name: &str, ty: Ty, def: Option<VcDef>) -> VarId {
        let version = self.versions.entry(name.to_string()).or_insert(0);
        let v = *version;
        *version += 1;
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VcVar {
            name: name.to_string(),
            version: v,
            ty,
            def,
        });
        self.cur.insert(name.to_string(), id);
        id
    }

    fn guard_term(&self) -> Term {
        Term::conj(self.guards.iter().cloned())
    }

    fn assume(&mut self, term: Term) {
        self.assumptions.push(Term::implies(self.guard_term(), term));
    }

    fn assert_goal(
        &mut self,
        kind: ObligationKind,
        clause_label: Option<String>,
        location: Span,
        goal: Term,
    ) {
        self.sketches.push(Sketch {
            kind,
            clause_label,
            location,
            assumption_count: self.assumptions.len(),
            guard: self.guard_term(),
            goal: goal.clone(),
        });
        self.assume(goal);
    }

    fn record_state(&mut self) {
        self.state_vars.push(self.cur.clone());
    }

    /// Translate an expression to a term. When `checked` is set, each modulo
    /// encountered yields a divisor-nonzero obligation at this point.
    fn translate(&mut self, expr: &Expr, env: &NameEnv, checked: bool, loc: Option<Span>) -> Term {
        match &expr.kind {
            ExprKind::IntLit(n) => Term::Int(*n),
            ExprKind::BoolLit(b) => Term::Bool(*b),
            ExprKind::Var(name) => {
                if let Some(subst) = env.subst {
                    if let Some(t) = subst.get(name) {
                        return t.clone();
                    }
                }
                Term::var(*env.cur.get(name).unwrap_or_else(|| {
                    panic!("unresolved name `{name}` in routine `{}`", self.routine.name.text)
                }))
            }
            ExprKind::Old(name) => Term::var(*env.old.get(&name.text).unwrap_or_else(|| {
                panic!("`old {}` has no pre-state binding", name.text)
            })),
            ExprKind::Unary(UnOp::Neg, inner) => {
                Term::Neg(Box::new(self.translate(inner, env, checked, loc)))
            }
            ExprKind::Unary(UnOp::Not, inner) => {
                Term::not(self.translate(inner, env, checked, loc))
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let a = self.translate(lhs, env, checked, loc);
                let b = self.translate(rhs, env, checked, loc);
                if *op == BinOp::Mod && checked {
                    self.assert_goal(
                        ObligationKind::ModuloDivisorNonzero,
                        None,
                        loc.unwrap_or(rhs.span),
                        Term::bin(BinOp::Ne, b.clone(), Term::Int(0)),
                    );
                }
                Term::bin(*op, a, b)
            }
        }
    }

    /// Environment for expressions of this routine's own body and contracts.
    fn own_env(&self) -> NameEnv<'_> {
        NameEnv {
            cur: &self.cur,
            old: &self.old_env,
            subst: None,
        }
    }

    fn translate_own(&mut self, expr: &Expr, checked: bool, loc: Option<Span>) -> Term {
        // borrow dance: clone the current maps' references via raw split
        let cur = self.cur.clone();
        let old = self.old_env.clone();
        let env = NameEnv {
            cur: &cur,
            old: &old,
            subst: None,
        };
        self.translate(expr, &env, checked, loc)
    }

    fn run(&mut self) {
        let _ = self.own_env(); // silence unused helper in non-debug paths
        // entry: free versions for attributes and arguments, defaults for
        // locals and Result
        for attr in &self.class.attributes {
            let id = self.fresh(&attr.name.text, attr.ty, None);
            self.initial_vars.push(id);
            self.old_env.insert(attr.name.text.clone(), id);
        }
        for arg in &self.routine.args {
            let id = self.fresh(&arg.name.text, arg.ty, None);
            self.initial_vars.push(id);
        }
        for local in &self.routine.locals {
            let def = default_value(local.ty);
            self.fresh(&local.name.text, local.ty, Some(VcDef::Expr(def)));
        }
        if let Some(ty) = self.routine.return_type {
            let def = default_value(ty);
            self.fresh("Result", ty, Some(VcDef::Expr(def)));
        }

        self.record_state();

        // assumed at entry: precondition and class invariant
        for clause in &self.routine.precondition.clone() {
            let t = self.translate_own(&clause.predicate, false, None);
            self.assume(t);
        }
        for clause in &self.class.invariant_clauses.clone() {
            let t = self.translate_own(&clause.predicate, false, None);
            self.assume(t);
        }

        let body = self.routine.body.clone();
        for instr in &body.instrs {
            self.instr(instr);
            self.record_state();
        }

        // exit: postcondition clauses, then class invariant clauses
        for clause in &self.routine.postcondition.clone() {
            let t = self.translate_own(&clause.predicate, true, None);
            self.assert_goal(
                ObligationKind::Postcondition,
                clause.label.as_ref().map(|l| l.text.clone()),
                clause.span,
                t,
            );
        }
        let end_span = self.routine.end_span;
        for clause in &self.class.invariant_clauses.clone() {
            let t = self.translate_own(&clause.predicate, true, Some(end_span));
            self.assert_goal(
                ObligationKind::ClassInvariantOnExit,
                clause.label.as_ref().map(|l| l.text.clone()),
                end_span,
                t,
            );
        }
    }

    fn instr(&mut self, instr: &Instr) {
        match &instr.kind {
            InstrKind::Assign { target, value } => {
                let t = self.translate_own(value, true, None);
                let ty = self
                    .tp
                    .resolve(self.class, self.routine, &target.text)
                    .map(|(_, ty)| ty)
                    .expect("typechecked assignment target");
                self.fresh(&target.text, ty, Some(VcDef::Expr(t)));
            }
            InstrKind::If {
                cond,
                then_blk,
                else_blk,
                ..
            } => {
                let c = self.translate_own(cond, true, None);
                let before = self.cur.clone();

                self.guards.push(c.clone());
                for i in &then_blk.instrs {
                    self.instr(i);
                }
                let after_then = self.cur.clone();
                self.guards.pop();

                self.cur = before;
                self.guards.push(Term::not(c.clone()));
                for i in &else_blk.instrs {
                    self.instr(i);
                }
                let after_else = self.cur.clone();
                self.guards.pop();

                // join differing versions
                for (name, then_v) in &after_then {
                    let else_v = after_else[name];
                    if *then_v != else_v {
                        let ty = self.vars[then_v.index()].ty;
                        self.fresh(
                            name,
                            ty,
                            Some(VcDef::Join {
                                cond: c.clone(),
                                then_v: *then_v,
                                else_v,
                            }),
                        );
                    } else {
                        self.cur.insert(name.clone(), *then_v);
                    }
                }
            }
            InstrKind::Loop {
                init,
                exit_cond,
                invariant,
                body,
            } => {
                for i in &init.instrs {
                    self.instr(i);
                }
                // evaluated on loop entry; modulo divisors are checked here
                let _entry_exit_cond = self.translate_own(exit_cond, true, None);

                for clause in invariant {
                    let t = self.translate_own(&clause.predicate, true, None);
                    self.assert_goal(
                        ObligationKind::LoopInvariantInit,
                        clause.label.as_ref().map(|l| l.text.clone()),
                        clause.span,
                        t,
                    );
                }

                // havoc everything the body may assign
                let assigned = self.assigned_names(body);
                let mut havocs = Vec::new();
                for name in &assigned {
                    let ty = self
                        .tp
                        .resolve(self.class, self.routine, name)
                        .map(|(_, ty)| ty)
                        .expect("typechecked loop body target");
                    let id = self.fresh(name, ty, None);
                    havocs.push((name.clone(), id));
                }
                self.havoc_vars.insert(instr.id, havocs);

                for clause in invariant {
                    let t = self.translate_own(&clause.predicate, false, None);
                    self.assume(t);
                }
                let exit_term = self.translate_own(exit_cond, false, None);

                // body arm: one arbitrary iteration from the havoc state
                let havoc_env = self.cur.clone();
                self.guards.push(Term::not(exit_term.clone()));
                for i in &body.instrs {
                    self.instr(i);
                }
                for clause in invariant {
                    let t = self.translate_own(&clause.predicate, false, None);
                    self.assert_goal(
                        ObligationKind::LoopInvariantMaintained,
                        clause.label.as_ref().map(|l| l.text.clone()),
                        clause.span,
                        t,
                    );
                }
                self.guards.pop();

                // after the loop: havoc state with the exit condition
                self.cur = havoc_env;
                self.assume(exit_term);
            }
            InstrKind::Check { cond } => {
                let t = self.translate_own(cond, true, None);
                self.assert_goal(ObligationKind::CheckViolation, None, instr.span, t);
            }
            InstrKind::Call {
                routine: callee_name,
                args,
            } => {
                let callee = self
                    .class
                    .routine(&callee_name.text)
                    .expect("typechecked call target")
                    .clone();
                let actual_terms: Vec<Term> = args
                    .iter()
                    .map(|a| self.translate_own(a, true, None))
                    .collect();
                let subst: BTreeMap<String, Term> = callee
                    .args
                    .iter()
                    .map(|f| f.name.text.clone())
                    .zip(actual_terms.iter().cloned())
                    .collect();

                // callee preconditions hold at the call site
                let pre_env = self.cur.clone();
                for clause in &callee.precondition {
                    let env = NameEnv {
                        cur: &pre_env,
                        old: &pre_env, // `old` cannot occur in preconditions
                        subst: Some(&subst),
                    };
                    let t = self.translate(&clause.predicate, &env, true, Some(instr.span));
                    self.assert_goal(
                        ObligationKind::CalleePrecondition,
                        clause.label.as_ref().map(|l| l.text.clone()),
                        instr.span,
                        t,
                    );
                }

                // havoc exactly the callee's frame
                let frame = self.tp.effective_modify(self.class, &callee);
                let mut havocs = Vec::new();
                for name in &frame {
                    let ty = self
                        .class
                        .attribute(name)
                        .map(|a| a.ty)
                        .expect("frame names attributes");
                    let id = self.fresh(name, ty, None);
                    havocs.push((name.clone(), id));
                }
                self.havoc_vars.insert(instr.id, havocs);

                // assume callee postcondition with callee-old = pre-call versions
                let post_env = self.cur.clone();
                for clause in &callee.postcondition {
                    let env = NameEnv {
                        cur: &post_env,
                        old: &pre_env,
                        subst: Some(&subst),
                    };
                    let t = self.translate(&clause.predicate, &env, false, None);
                    self.assume(t);
                }
                // and the class invariant after the call
                for clause in &self.class.invariant_clauses.clone() {
                    let t = self.translate_own(&clause.predicate, false, None);
                    self.assume(t);
                }
            }
        }
    }

    /// Names assigned anywhere in a block: assignment targets plus the
    /// frames of called commands, including nested blocks.
    fn assigned_names(&self, block: &Block) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for instr in block.all_instrs() {
            match &instr.kind {
                InstrKind::Assign { target, .. } => {
                    out.insert(target.text.clone());
                }
                InstrKind::Call { routine, .. } => {
                    if let Some(callee) = self.class.routine(&routine.text) {
                        out.extend(self.tp.effective_modify(self.class, callee));
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn finish(self) -> Vec<Obligation> {
        let vc = Arc::new(RoutineVc {
            class_name: self.class.name.text.clone(),
            routine_name: self.routine.name.text.clone(),
            vars: self.vars,
            assumptions: self.assumptions,
            state_vars: self.state_vars,
            initial_vars: self.initial_vars,
            havoc_vars: self.havoc_vars,
        });
        let mut occurrences: HashMap<(ObligationKind, Option<String>), u32> = HashMap::new();
        self.sketches
            .into_iter()
            .map(|s| {
                let occ = occurrences
                    .entry((s.kind, s.clause_label.clone()))
                    .or_insert(0);
                let key = ObligationKey {
                    routine: vc.routine_name.clone(),
                    kind: s.kind,
                    clause_label: s.clause_label.clone(),
                    occurrence: *occ,
                };
                *occ += 1;
                Obligation {
                    vc: Arc::clone(&vc),
                    kind: s.kind,
                    clause_label: s.clause_label,
                    location: s.location,
                    assumption_count: s.assumption_count,
                    guard: s.guard,
                    goal: s.goal,
                    key,
                }
            })
            .collect()
    }
}

fn default_value(ty: Ty) -> Term {
    match ty {
        Ty::Int => Term::Int(0),
        Ty::Bool => Term::Bool(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;
    use crate::vcgen::generate_obligations;

    fn obligations(src: &str, routine: &str) -> Vec<Obligation> {
        let tp = load("t.mcl", src).expect("front end");
        let class = &tp.program().classes[0].clone();
        let r = class.routine(routine).expect("routine").clone();
        generate_obligations(&tp, class, &r)
    }

    const CLOCK: &str = r#"
class CLOCK feature
  hours: INTEGER
  minutes: INTEGER
  seconds: INTEGER

  increase_hours
    modify hours
    do
      if hours = 24 then hours := 0
      else hours := hours + 1 end
    ensure
      hours_increased: hours = (old hours + 1) \\ 24
    end

  increase_minutes
    modify minutes, hours
    do
      if minutes < 59 then minutes := minutes + 1
      else minutes := 0 end
    ensure
      hours_increased: old minutes = 59 implies hours = (old hours + 1) \\ 24
      hours_unchanged: old minutes < 59 implies hours = old hours
      minutes_increased: minutes = (old minutes + 1) \\ 60
    end
invariant
  hours_valid: 0 <= hours and hours <= 23
  minutes_valid: 0 <= minutes and minutes <= 59
  seconds_valid: 0 <= seconds and seconds <= 59
end
"#;

    #[test]
    fn clock_increase_hours_obligation_set() {
        let obs = obligations(CLOCK, "increase_hours");
        let keys: Vec<String> = obs.iter().map(|o| o.key.to_string()).collect();
        assert!(
            keys.contains(&"increase_hours/Postcondition/hours_increased".to_string()),
            "{keys:?}"
        );
        assert!(
            keys.contains(&"increase_hours/ClassInvariantOnExit/hours_valid".to_string()),
            "{keys:?}"
        );
        // one modulo obligation for the postcondition's \\ 24
        assert_eq!(
            obs.iter()
                .filter(|o| o.kind == ObligationKind::ModuloDivisorNonzero)
                .count(),
            1
        );
    }

    #[test]
    fn empty_body_single_trivial_postcondition() {
        let obs = obligations(
            "class C feature r do ensure always: True end end",
            "r",
        );
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].kind, ObligationKind::Postcondition);
        assert_eq!(obs[0].goal, Term::Bool(true));
    }

    #[test]
    fn check_false_yields_check_violation() {
        let obs = obligations("class C feature r do check False end end end", "r");
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].kind, ObligationKind::CheckViolation);
        assert_eq!(obs[0].goal, Term::Bool(false));
    }

    #[test]
    fn call_gets_callee_precondition_obligation_and_havoc() {
        let src = "class C feature x: INTEGER\n\
                   callee (v: INTEGER) require pos: v > 0 modify x do x := v ensure set: x = v end\n\
                   caller modify x do callee (x + 1) end\n\
                   end";
        let obs = obligations(src, "caller");
        assert!(obs
            .iter()
            .any(|o| o.kind == ObligationKind::CalleePrecondition
                && o.clause_label.as_deref() == Some("pos")));
        // x was havocked: version 1 of x exists and is free
        let vc = &obs[0].vc;
        let havocked = vc.lookup("x", 1).unwrap();
        assert!(vc.vars[havocked.index()].def.is_none());
    }

    #[test]
    fn loop_yields_init_and_maintenance_per_clause() {
        let src = "class C feature\n\
                   count (n: INTEGER): INTEGER require n_ok: n >= 0 local i: INTEGER do\n\
                   from i := 0 Result := 0 until i >= n\n\
                   invariant bounds: i >= 0 and i <= n tracks: Result = i\n\
                   loop i := i + 1 Result := Result + 1 end\n\
                   ensure final: Result = n end\n\
                   end";
        let obs = obligations(src, "count");
        let inits = obs
            .iter()
            .filter(|o| o.kind == ObligationKind::LoopInvariantInit)
            .count();
        let maints = obs
            .iter()
            .filter(|o| o.kind == ObligationKind::LoopInvariantMaintained)
            .count();
        assert_eq!(inits, 2);
        assert_eq!(maints, 2);
    }

    #[test]
    fn locations_lie_inside_the_routine() {
        let tp = load("t.mcl", CLOCK).unwrap();
        let class = tp.program().classes[0].clone();
        for routine in &class.routines {
            for ob in generate_obligations(&tp, &class, routine) {
                assert!(
                    ob.location.within(routine.span),
                    "{} location {:?} outside routine span {:?}",
                    ob.key,
                    ob.location,
                    routine.span
                );
            }
        }
    }

    #[test]
    fn goal_and_path_mention_only_declared_variables() {
        let obs = obligations(CLOCK, "increase_minutes");
        for ob in &obs {
            let max = ob.vc.vars.len();
            for v in ob.goal.vars().iter().chain(ob.path_condition().vars().iter()) {
                assert!(v.index() < max);
            }
        }
    }

    #[test]
    fn suspicious_names_come_from_the_goal() {
        let obs = obligations(CLOCK, "increase_hours");
        let post = obs
            .iter()
            .find(|o| o.kind == ObligationKind::Postcondition)
            .unwrap();
        let names = post.suspicious_names();
        assert!(names.contains("hours"));
        assert!(!names.contains("minutes"));
    }
}
