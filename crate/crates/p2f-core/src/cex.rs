//! Counterexamples: proof failures paired with per-program-point state
//! sequences.
//!
//! States are reconstructed from the passified model, not by running the
//! program: each state point reads the model's values at that point's
//! variable versions. A replay pass (resolving call and loop havoc with the
//! model's values) cross-checks the reconstruction; a mismatch indicates a
//! translation bug and is reported as `InconsistentModel`.

use crate::lang::ast::*;
use crate::lang::typecheck::TypedProgram;
use crate::solver::{check, CheckOutcome, Model, SolverConfig};
use crate::span::Span;
use crate::vcgen::{Obligation, ObligationKey, ObligationKind, RoutineVc};
use crate::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

/// One unprovable obligation, as reported to users and to the repair engine.
#[derive(Debug, Clone)]
pub struct ProofFailure {
    pub obligation: Obligation,
}

impl ProofFailure {
    pub fn routine(&self) -> &str {
        self.obligation.routine()
    }

    pub fn kind(&self) -> ObligationKind {
        self.obligation.kind
    }

    pub fn clause_label(&self) -> Option<&str> {
        self.obligation.clause_label.as_deref()
    }

    pub fn location(&self) -> Span {
        self.obligation.location
    }

    pub fn key(&self) -> &ObligationKey {
        &self.obligation.key
    }
}

/// Variable bindings at one program point. Keys are expression designators:
/// attribute, argument and local names, `Result`, and `old a` for attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub bindings: BTreeMap<String, Value>,
}

impl State {
    /// Bindings without the `old` designators.
    pub fn plain(&self) -> BTreeMap<String, Value> {
        self.bindings
            .iter()
            .filter(|(k, _)| !k.starts_with("old "))
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }

    pub fn olds(&self) -> BTreeMap<String, Value> {
        self.bindings
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("old ").map(|n| (n.to_string(), *v)))
            .collect()
    }
}

/// A failure witness: one state per state point, `s1` first.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub failure_key: ObligationKey,
    pub states: Vec<State>,
    pub model: Model,
    pub vc: Arc<RoutineVc>,
}

impl Counterexample {
    pub fn initial_state(&self) -> &State {
        &self.states[0]
    }
}

#[derive(Debug, Clone, Error)]
pub enum CexError {
    #[error("obligation {0} is not refuted")]
    NotRefuted(ObligationKey),
    #[error("resource limit while extracting counterexamples for {0}")]
    ResourceLimit(ObligationKey),
    #[error("model fails replay validation for {key} at state {point}: {detail}")]
    InconsistentModel {
        key: ObligationKey,
        point: usize,
        detail: String,
    },
}

/// Extract up to `cfg.max_models` counterexamples for a refuted obligation.
/// Initial states are pairwise distinct.
pub fn extract_counterexamples(
    failure: &ProofFailure,
    tp: &TypedProgram,
    cfg: &SolverConfig,
) -> Result<Vec<Counterexample>, CexError> {
    let ob = &failure.obligation;
    let models = match check(ob, cfg) {
        CheckOutcome::Refuted(models) => models,
        CheckOutcome::Verified => return Err(CexError::NotRefuted(ob.key.clone())),
        CheckOutcome::Unknown => return Err(CexError::ResourceLimit(ob.key.clone())),
    };
    let class = tp.class(&ob.vc.class_name).expect("obligation class exists");
    let routine = class
        .routine(&ob.vc.routine_name)
        .expect("obligation routine exists");

    let mut out = Vec::with_capacity(models.len());
    for model in models {
        let states = reconstruct_states(ob, &model);
        validate_by_replay(ob, routine, &model, &states)?;
        out.push(Counterexample {
            failure_key: ob.key.clone(),
            states,
            model,
            vc: Arc::clone(&ob.vc),
        });
    }
    Ok(out)
}

/// Read the state sequence straight off the model via the version map.
fn reconstruct_states(ob: &Obligation, model: &Model) -> Vec<State> {
    let vc = &ob.vc;
    let old_attrs: Vec<(String, Value)> = vc
        .initial_vars
        .iter()
        .map(|id| &vc.vars[id.index()])
        .filter(|v| v.version == 0)
        .filter_map(|v| {
            vc.lookup(&v.name, 0)
                .map(|id| (v.name.clone(), model.value(id)))
        })
        .collect();
    vc.state_vars
        .iter()
        .map(|point| {
            let mut bindings = BTreeMap::new();
            for (name, id) in point {
                bindings.insert(name.clone(), model.value(*id));
            }
            for (name, value) in &old_attrs {
                if point.contains_key(name) {
                    bindings.insert(format!("old {name}"), *value);
                }
            }
            State { bindings }
        })
        .collect()
}

/// Replay the routine from `s1`, resolving call and loop havoc with the
/// model's values, and compare every subsequent state.
fn validate_by_replay(
    ob: &Obligation,
    routine: &RoutineDecl,
    model: &Model,
    states: &[State],
) -> Result<(), CexError> {
    let mut env = states[0].plain();
    let old = states[0].olds();
    let mut replayer = Replayer {
        vc: &ob.vc,
        model,
        old,
        blocks: BTreeSet::new(),
        trace: Vec::new(),
    };
    for (i, instr) in routine.body.instrs.iter().enumerate() {
        replayer.step(instr, &mut env);
        let expected = &states[i + 1];
        for (name, value) in &env {
            if expected.bindings.get(name) != Some(value) {
                return Err(CexError::InconsistentModel {
                    key: ob.key.clone(),
                    point: i + 1,
                    detail: format!(
                        "`{name}` replayed to {value}, model has {}",
                        expected
                            .bindings
                            .get(name)
                            .map(|v| v.to_string())
                            .unwrap_or_else(|| "no binding".to_string())
                    ),
                });
            }
        }
    }
    // the failing clause must actually be violated under this model
    let values: Vec<Value> = (0..ob.vc.vars.len())
        .map(|i| model.value(crate::vcgen::VarId(i as u32)))
        .collect();
    if ob.goal.eval(&values).as_bool() {
        return Err(CexError::InconsistentModel {
            key: ob.key.clone(),
            point: states.len() - 1,
            detail: "failing clause evaluates to true under the model".to_string(),
        });
    }
    Ok(())
}

/// Blocks whose instructions lie on the counterexample's taken path: the
/// top-level sequence, taken branches, and entered loop bodies.
pub fn blocks_on_path(ce: &Counterexample, routine: &RoutineDecl) -> BTreeSet<BlockId> {
    replay_path(ce, routine).0
}

/// Instructions on the counterexample's taken path, in execution order.
/// Branches follow the concrete condition values. An entered loop body
/// contributes all of its instructions: per-iteration paths are not
/// reconstructed from a single havoc model.
pub fn path_instrs(ce: &Counterexample, routine: &RoutineDecl) -> Vec<InstrId> {
    replay_path(ce, routine).1
}

fn replay_path(ce: &Counterexample, routine: &RoutineDecl) -> (BTreeSet<BlockId>, Vec<InstrId>) {
    let mut env = ce.initial_state().plain();
    let mut replayer = Replayer {
        vc: &ce.vc,
        model: &ce.model,
        old: ce.initial_state().olds(),
        blocks: BTreeSet::new(),
        trace: Vec::new(),
    };
    replayer.blocks.insert(routine.body.id);
    for instr in &routine.body.instrs {
        replayer.step(instr, &mut env);
    }
    (replayer.blocks, replayer.trace)
}

/// Model-guided replay: assignments and branches execute concretely; call
/// and loop effects come from the model's havoc versions. Loop bodies do not
/// run; a loop's contribution to the state is exactly its havoc values.
struct Replayer<'a> {
    vc: &'a RoutineVc,
    model: &'a Model,
    old: BTreeMap<String, Value>,
    blocks: BTreeSet<BlockId>,
    trace: Vec<InstrId>,
}

impl<'a> Replayer<'a> {
    fn step(&mut self, instr: &Instr, env: &mut BTreeMap<String, Value>) {
        self.trace.push(instr.id);
        match &instr.kind {
            InstrKind::Assign { target, value } => {
                let v = eval_expr(value, env, &self.old);
                env.insert(target.text.clone(), v);
            }
            InstrKind::If {
                cond,
                then_blk,
                else_blk,
                ..
            } => {
                let taken = if eval_expr(cond, env, &self.old).as_bool() {
                    then_blk
                } else {
                    else_blk
                };
                self.blocks.insert(taken.id);
                for i in &taken.instrs {
                    self.step(i, env);
                }
            }
            InstrKind::Loop {
                init,
                exit_cond,
                body,
                ..
            } => {
                for i in &init.instrs {
                    self.step(i, env);
                }
                if !eval_expr(exit_cond, env, &self.old).as_bool() {
                    self.blocks.insert(body.id);
                    for i in body.all_instrs() {
                        self.trace.push(i.id);
                    }
                }
                self.apply_havoc(instr.id, env);
            }
            InstrKind::Check { .. } => {}
            InstrKind::Call { .. } => {
                self.apply_havoc(instr.id, env);
            }
        }
    }

    fn apply_havoc(&self, id: InstrId, env: &mut BTreeMap<String, Value>) {
        if let Some(havocs) = self.vc.havoc_vars.get(&id) {
            for (name, var) in havocs {
                env.insert(name.clone(), self.model.value(*var));
            }
        }
    }
}

/// Evaluate a source expression in a concrete environment.
pub fn eval_expr(
    expr: &Expr,
    env: &BTreeMap<String, Value>,
    old: &BTreeMap<String, Value>,
) -> Value {
    match &expr.kind {
        ExprKind::IntLit(n) => Value::Int(*n),
        ExprKind::BoolLit(b) => Value::Bool(*b),
        ExprKind::Var(name) => *env
            .get(name)
            .unwrap_or_else(|| panic!("unbound variable `{name}` in state")),
        ExprKind::Old(name) => *old
            .get(&name.text)
            .unwrap_or_else(|| panic!("unbound `old {}`", name.text)),
        ExprKind::Unary(UnOp::Neg, e) => Value::Int(-eval_expr(e, env, old).as_int()),
        ExprKind::Unary(UnOp::Not, e) => Value::Bool(!eval_expr(e, env, old).as_bool()),
        ExprKind::Binary(op, a, b) => {
            match op {
                BinOp::And => {
                    return Value::Bool(
                        eval_expr(a, env, old).as_bool() && eval_expr(b, env, old).as_bool(),
                    )
                }
                BinOp::Or => {
                    return Value::Bool(
                        eval_expr(a, env, old).as_bool() || eval_expr(b, env, old).as_bool(),
                    )
                }
                BinOp::Implies => {
                    return Value::Bool(
                        !eval_expr(a, env, old).as_bool() || eval_expr(b, env, old).as_bool(),
                    )
                }
                _ => {}
            }
            let va = eval_expr(a, env, old);
            let vb = eval_expr(b, env, old);
            match op {
                BinOp::Add => Value::Int(va.as_int().wrapping_add(vb.as_int())),
                BinOp::Sub => Value::Int(va.as_int().wrapping_sub(vb.as_int())),
                BinOp::Mul => Value::Int(va.as_int().wrapping_mul(vb.as_int())),
                BinOp::Mod => Value::Int(crate::euclid_mod(va.as_int(), vb.as_int())),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;
    use crate::vcgen::generate_obligations;

    const CLOCK: &str = include_str!("../tests/data/clock_buggy.mcl");

    fn failures(src: &str, routine: &str) -> (TypedProgram, Vec<ProofFailure>) {
        let tp = load("t.mcl", src).expect("front end");
        let class = tp.program().classes[0].clone();
        let r = class.routine(routine).unwrap().clone();
        let cfg = SolverConfig::default();
        let fails = generate_obligations(&tp, &class, &r)
            .into_iter()
            .filter(|ob| !check(ob, &cfg).is_verified())
            .map(|obligation| ProofFailure { obligation })
            .collect();
        (tp, fails)
    }

    #[test]
    fn increase_hours_counterexamples_all_start_at_23() {
        let (tp, fails) = failures(CLOCK, "increase_hours");
        let failure = fails
            .iter()
            .find(|f| f.clause_label() == Some("hours_increased"))
            .expect("hours_increased fails");
        let ces = extract_counterexamples(failure, &tp, &SolverConfig::default()).unwrap();
        assert!(!ces.is_empty() && ces.len() <= 10);
        for ce in &ces {
            assert_eq!(ce.initial_state().bindings["hours"], Value::Int(23));
            assert_eq!(ce.initial_state().bindings["old hours"], Value::Int(23));
        }
        // initial states pairwise distinct
        let mut initials: Vec<_> = ces.iter().map(|c| c.initial_state().plain()).collect();
        let before = initials.len();
        initials.sort();
        initials.dedup();
        assert_eq!(initials.len(), before);
        // state count = state points
        let class = tp.program().classes[0].clone();
        let r = class.routine("increase_hours").unwrap();
        let points = crate::vcgen::state_points(r).len();
        for ce in &ces {
            assert_eq!(ce.states.len(), points);
        }
    }

    #[test]
    fn increase_minutes_counterexamples_all_start_at_59() {
        let (tp, fails) = failures(CLOCK, "increase_minutes");
        let failure = fails
            .iter()
            .find(|f| f.clause_label() == Some("hours_increased"))
            .expect("hours_increased fails");
        let ces = extract_counterexamples(failure, &tp, &SolverConfig::default()).unwrap();
        for ce in &ces {
            assert_eq!(ce.initial_state().bindings["minutes"], Value::Int(59));
        }
    }

    #[test]
    fn check_false_in_bare_routine_gives_one_empty_ce() {
        let (tp, fails) = failures("class C feature r do check False end end end", "r");
        assert_eq!(fails.len(), 1);
        let ces = extract_counterexamples(&fails[0], &tp, &SolverConfig::default()).unwrap();
        assert_eq!(ces.len(), 1);
        assert!(ces[0].initial_state().bindings.is_empty());
    }

    #[test]
    fn blocks_on_path_flags_taken_branch() {
        let (tp, fails) = failures(CLOCK, "increase_hours");
        let failure = fails
            .iter()
            .find(|f| f.clause_label() == Some("hours_increased"))
            .unwrap();
        let ces = extract_counterexamples(failure, &tp, &SolverConfig::default()).unwrap();
        let class = tp.program().classes[0].clone();
        let routine = class.routine("increase_hours").unwrap();
        let InstrKind::If {
            then_blk, else_blk, ..
        } = &routine.body.instrs[0].kind
        else {
            panic!()
        };
        // hours = 23 on entry: the else branch (hours := hours + 1) is taken
        // (derived by replaying the path with the concrete interpreter)
        let blocks = blocks_on_path(&ces[0], routine);
        assert!(blocks.contains(&routine.body.id));
        assert!(blocks.contains(&else_blk.id));
        assert!(!blocks.contains(&then_blk.id));
    }

    #[test]
    fn straight_line_routine_has_only_top_level_block() {
        let (tp, fails) = failures(
            "class C feature x: INTEGER r modify x do x := x + 1 check x = 0 end end end",
            "r",
        );
        let failure = &fails[0];
        let ces = extract_counterexamples(failure, &tp, &SolverConfig::default()).unwrap();
        let class = tp.program().classes[0].clone();
        let routine = class.routine("r").unwrap();
        let blocks = blocks_on_path(&ces[0], routine);
        assert_eq!(blocks.len(), 1);
        assert!(blocks.contains(&routine.body.id));
    }

    #[test]
    fn initial_state_satisfies_precondition_and_invariant() {
        let (tp, fails) = failures(CLOCK, "increase_hours");
        let failure = fails
            .iter()
            .find(|f| f.clause_label() == Some("hours_increased"))
            .unwrap();
        let ces = extract_counterexamples(failure, &tp, &SolverConfig::default()).unwrap();
        let class = tp.program().classes[0].clone();
        for ce in &ces {
            let env = ce.initial_state().plain();
            let old = ce.initial_state().olds();
            for clause in &class.invariant_clauses {
                assert!(eval_expr(&clause.predicate, &env, &old).as_bool());
            }
        }
    }
}
