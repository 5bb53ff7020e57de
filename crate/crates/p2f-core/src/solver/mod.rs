//! Bounded decision procedure for proof obligations.
//!
//! An obligation is *Verified* when `path_condition ∧ ¬goal` has no model
//! with every free integer variable (initial-state inputs and havocs) drawn
//! from `[-B, B]`; derived versions take their mathematical values. Failing
//! obligations yield up to `max_models` models that are pairwise distinct on
//! the initial-state variables. Enumeration with constraint scheduling and
//! interval narrowing is the decision procedure, which suffices at desk
//! scale. Everything is deterministic for a fixed configuration.

mod search;
pub mod smtlib;

pub use smtlib::emit_smtlib;

use crate::vcgen::{Obligation, RoutineVc, VarId};
use crate::Value;
use search::Csp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Free integer variables range over `[-bound, bound]`.
    pub bound: i64,
    /// Maximum number of counterexample models per failing obligation.
    pub max_models: usize,
    /// Perturbs value enumeration order; 0 keeps ascending order.
    pub seed: u64,
    /// Step budget per `check`/`next_model` call; exceeding it yields
    /// `Unknown`, never `Verified`.
    pub max_steps: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            bound: 128,
            max_models: 10,
            seed: 0,
            max_steps: 50_000_000,
        }
    }
}

impl SolverConfig {
    pub fn with_max_models(mut self, n: usize) -> Self {
        self.max_models = n;
        self
    }

    pub fn with_bound(mut self, b: i64) -> Self {
        self.bound = b;
        self
    }
}

/// A satisfying assignment of `path_condition ∧ ¬goal`, i.e. one
/// counterexample to the obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub(crate) values: Vec<Value>,
}

impl Model {
    pub fn value(&self, id: VarId) -> Value {
        self.values[id.index()]
    }

    pub fn lookup(&self, vc: &RoutineVc, name: &str, version: u32) -> Option<Value> {
        vc.lookup(name, version).map(|id| self.value(id))
    }

    /// Values of the initial-state variables, in declaration order; model
    /// distinctness and blocking are defined on this projection.
    pub fn initial_projection(&self, vc: &RoutineVc) -> Vec<Value> {
        vc.initial_vars.iter().map(|id| self.value(*id)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// No counterexample within the bound.
    Verified,
    /// At least one counterexample; models are pairwise distinct on the
    /// initial-state variables.
    Refuted(Vec<Model>),
    /// Step budget exceeded before the space was exhausted.
    Unknown,
}

impl CheckOutcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, CheckOutcome::Verified)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextModelOutcome {
    Found(Model),
    /// Every remaining assignment matches a blocked initial-state projection.
    Exhausted,
    ResourceLimit,
}

/// Decide an obligation, enumerating up to `cfg.max_models` counterexamples.
pub fn check(obligation: &Obligation, cfg: &SolverConfig) -> CheckOutcome {
    let mut csp = Csp::build(obligation, cfg);
    let (models, budget_exceeded) = csp.enumerate(cfg.max_models, &[]);
    if models.is_empty() {
        if budget_exceeded {
            CheckOutcome::Unknown
        } else {
            CheckOutcome::Verified
        }
    } else {
        CheckOutcome::Refuted(models.into_iter().map(|values| Model { values }).collect())
    }
}

/// Find a model distinct (on initial-state variables) from every blocked one.
pub fn next_model(
    obligation: &Obligation,
    cfg: &SolverConfig,
    blocked: &[Model],
) -> NextModelOutcome {
    let mut csp = Csp::build(obligation, cfg);
    let blocked_projections: Vec<Vec<Value>> = blocked
        .iter()
        .map(|m| m.initial_projection(&obligation.vc))
        .collect();
    let (models, budget_exceeded) = csp.enumerate(1, &blocked_projections);
    match models.into_iter().next() {
        Some(values) => NextModelOutcome::Found(Model { values }),
        None if budget_exceeded => NextModelOutcome::ResourceLimit,
        None => NextModelOutcome::Exhausted,
    }
}

/// Re-evaluate the full constraint set under a model; used as a validity
/// check on everything the search returns.
pub fn model_satisfies(obligation: &Obligation, model: &Model) -> bool {
    let values = &model.values;
    obligation
        .assumptions()
        .iter()
        .all(|a| a.eval(values).as_bool())
        && obligation.guard.eval(values).as_bool()
        && !obligation.goal.eval(values).as_bool()
        && obligation
            .vc
            .vars
            .iter()
            .enumerate()
            .all(|(i, v)| match v.def_formula(VarId(i as u32)) {
                Some(f) => f.eval(values).as_bool(),
                None => true,
            })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;
    use crate::vcgen::{generate_obligations, ObligationKind};

    fn first_obligation(src: &str, routine: &str, kind: ObligationKind) -> Obligation {
        let tp = load("t.mcl", src).expect("front end");
        let class = tp.program().classes[0].clone();
        let r = class.routine(routine).unwrap().clone();
        generate_obligations(&tp, &class, &r)
            .into_iter()
            .find(|o| o.kind == kind)
            .expect("obligation kind present")
    }

    /// Independent oracle: exhaustively enumerate all assignments of the free
    /// variables and evaluate the full constraint set.
    fn brute_force_inputs(ob: &Obligation, bound: i64, name: &str) -> Vec<i64> {
        let vc = &ob.vc;
        let free: Vec<usize> = vc
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.def.is_none())
            .map(|(i, _)| i)
            .collect();
        let mut out = Vec::new();
        let mut values = vec![Value::Int(0); vc.vars.len()];
        enumerate_rec(ob, bound, &free, 0, &mut values, &mut out);
        let id = vc.lookup(name, 0).unwrap();
        let mut inputs: Vec<i64> = out.iter().map(|vals| vals[id.index()].as_int()).collect();
        inputs.sort();
        inputs.dedup();
        inputs
    }

    fn enumerate_rec(
        ob: &Obligation,
        bound: i64,
        free: &[usize],
        at: usize,
        values: &mut Vec<Value>,
        out: &mut Vec<Vec<Value>>,
    ) {
        if at == free.len() {
            for (i, v) in ob.vc.vars.iter().enumerate() {
                if let Some(def) = &v.def {
                    values[i] = match def {
                        crate::vcgen::VcDef::Expr(t) => t.eval(values),
                        crate::vcgen::VcDef::Join {
                            cond,
                            then_v,
                            else_v,
                        } => {
                            if cond.eval(values).as_bool() {
                                values[then_v.index()]
                            } else {
                                values[else_v.index()]
                            }
                        }
                    };
                }
            }
            let ok = ob.assumptions().iter().all(|a| a.eval(values).as_bool())
                && ob.guard.eval(values).as_bool()
                && !ob.goal.eval(values).as_bool();
            if ok {
                out.push(values.clone());
            }
            return;
        }
        let idx = free[at];
        match ob.vc.vars[idx].ty {
            crate::lang::ast::Ty::Int => {
                for v in -bound..=bound {
                    values[idx] = Value::Int(v);
                    enumerate_rec(ob, bound, free, at + 1, values, out);
                }
            }
            crate::lang::ast::Ty::Bool => {
                for b in [false, true] {
                    values[idx] = Value::Bool(b);
                    enumerate_rec(ob, bound, free, at + 1, values, out);
                }
            }
        }
    }

    #[test]
    fn tautology_is_verified() {
        let ob = first_obligation(
            "class C feature x: INTEGER r do check x = x end end end",
            "r",
            ObligationKind::CheckViolation,
        );
        assert_eq!(check(&ob, &SolverConfig::default()), CheckOutcome::Verified);
    }

    #[test]
    fn bounded_counterexamples_match_brute_force() {
        // goal x < 5 under assumption x >= 0 with B = 8: failing inputs are
        // exactly {5, 6, 7, 8}, frozen from the brute-force oracle.
        let src =
            "class C feature r (x: INTEGER) require nonneg: x >= 0 do check x < 5 end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        assert_eq!(brute_force_inputs(&ob, 8, "x"), vec![5, 6, 7, 8]);

        let cfg = SolverConfig {
            bound: 8,
            max_models: 10,
            ..SolverConfig::default()
        };
        let CheckOutcome::Refuted(models) = check(&ob, &cfg) else {
            panic!("expected refutation")
        };
        let got: Vec<i64> = models
            .iter()
            .map(|m| m.lookup(&ob.vc, "x", 0).unwrap().as_int())
            .collect();
        // asking for 10 models returns exactly the 4 that exist
        assert_eq!(got, vec![5, 6, 7, 8]);
    }

    #[test]
    fn next_model_blocks_previous_initial_states() {
        let src =
            "class C feature r (x: INTEGER) require nonneg: x >= 0 do check x < 5 end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        let cfg = SolverConfig {
            bound: 8,
            max_models: 10,
            ..SolverConfig::default()
        };
        // blocked = [] behaves like the first model of check
        let NextModelOutcome::Found(first) = next_model(&ob, &cfg, &[]) else {
            panic!()
        };
        assert_eq!(first.lookup(&ob.vc, "x", 0).unwrap(), Value::Int(5));

        let mut blocked = vec![first];
        for expected in [6, 7, 8] {
            let NextModelOutcome::Found(m) = next_model(&ob, &cfg, &blocked) else {
                panic!()
            };
            assert_eq!(m.lookup(&ob.vc, "x", 0).unwrap(), Value::Int(expected));
            blocked.push(m);
        }
        assert_eq!(next_model(&ob, &cfg, &blocked), NextModelOutcome::Exhausted);
    }

    #[test]
    fn single_failing_state_exhausts_after_one_block() {
        let src = "class C feature r (x: INTEGER) require range: x >= 0 and x <= 3 do check x /= 3 end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        let cfg = SolverConfig::default().with_bound(8);
        let NextModelOutcome::Found(only) = next_model(&ob, &cfg, &[]) else {
            panic!()
        };
        assert_eq!(only.lookup(&ob.vc, "x", 0).unwrap(), Value::Int(3));
        assert_eq!(next_model(&ob, &cfg, &[only]), NextModelOutcome::Exhausted);
    }

    #[test]
    fn verdict_deterministic_and_models_valid() {
        let src = "class C feature x: INTEGER y: INTEGER\n\
                   r modify x do x := x + y check x > y end end\n\
                   invariant xr: x >= -4 and x <= 4 yr: y >= -4 and y <= 4\n\
                   end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        let cfg = SolverConfig::default().with_bound(8);
        let a = check(&ob, &cfg);
        let b = check(&ob, &cfg);
        assert_eq!(a, b);
        let CheckOutcome::Refuted(models) = a else {
            panic!("x := x + y; x > y fails when y <= 0")
        };
        for m in &models {
            assert!(model_satisfies(&ob, m), "model does not satisfy the VC");
        }
        let mut projections: Vec<_> = models
            .iter()
            .map(|m| m.initial_projection(&ob.vc))
            .collect();
        let before = projections.len();
        projections.sort();
        projections.dedup();
        assert_eq!(projections.len(), before, "initial states not distinct");
    }

    #[test]
    fn nonlinear_goal_verified_by_exhaustion() {
        let src = "class C feature r (x: INTEGER) do check x * x >= x end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        assert_eq!(
            check(&ob, &SolverConfig::default().with_bound(8)),
            CheckOutcome::Verified
        );
    }

    #[test]
    fn resource_limit_reports_unknown() {
        let src = "class C feature r (x: INTEGER, y: INTEGER, z: INTEGER) do check x + y + z /= 100 end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        let cfg = SolverConfig {
            bound: 128,
            max_models: 1,
            seed: 0,
            max_steps: 10,
        };
        assert_eq!(check(&ob, &cfg), CheckOutcome::Unknown);
    }

    #[test]
    fn seed_changes_enumeration_order_not_the_model_set() {
        let src = "class C feature r (x: INTEGER) require range: x >= 0 and x <= 6 do check x > 6 end end end";
        let ob = first_obligation(src, "r", ObligationKind::CheckViolation);
        let base = SolverConfig::default().with_bound(8);
        let seeded = SolverConfig { seed: 7, ..base.clone() };
        let CheckOutcome::Refuted(a) = check(&ob, &base) else {
            panic!()
        };
        let CheckOutcome::Refuted(b) = check(&ob, &seeded) else {
            panic!()
        };
        let xs = |ms: &[Model]| -> std::collections::BTreeSet<i64> {
            ms.iter()
                .map(|m| m.lookup(&ob.vc, "x", 0).unwrap().as_int())
                .collect()
        };
        assert_eq!(xs(&a), xs(&b));
        assert_eq!(xs(&a).len(), 7);
    }
}
