//! Proof obligation generation.
//!
//! Each routine is translated once into single-assignment form; every
//! contract clause, `check`, call-site precondition clause, loop-invariant
//! clause, and modulo divisor then yields its own [`Obligation`], so one
//! obligation corresponds to one potential proof failure.

pub mod passify;
pub mod term;

pub use term::{Term, VarId, VcDef, VcVar};

use crate::lang::ast::{ClassDecl, InstrId, RoutineDecl};
use crate::lang::typecheck::TypedProgram;
use crate::span::Span;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObligationKind {
    Postcondition,
    ClassInvariantOnExit,
    CheckViolation,
    CalleePrecondition,
    LoopInvariantInit,
    LoopInvariantMaintained,
    ModuloDivisorNonzero,
}

impl fmt::Display for ObligationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ObligationKind::Postcondition => "Postcondition",
            ObligationKind::ClassInvariantOnExit => "ClassInvariantOnExit",
            ObligationKind::CheckViolation => "CheckViolation",
            ObligationKind::CalleePrecondition => "CalleePrecondition",
            ObligationKind::LoopInvariantInit => "LoopInvariantInit",
            ObligationKind::LoopInvariantMaintained => "LoopInvariantMaintained",
            ObligationKind::ModuloDivisorNonzero => "ModuloDivisorNonzero",
        };
        write!(f, "{s}")
    }
}

/// Shared passification artifact of one routine. Obligations of the routine
/// reference the same variable table and assumption list (by prefix).
#[derive(Debug)]
pub struct RoutineVc {
    pub class_name: String,
    pub routine_name: String,
    /// Versioned variables in creation order; `VarId` indexes this table.
    pub vars: Vec<VcVar>,
    /// Path assumptions in program order, each already wrapped in its reach
    /// guard. An obligation sees the prefix created before its check point.
    pub assumptions: Vec<Term>,
    /// Per state point (entry, after each top-level instruction): the
    /// versioned variable holding each name's value there.
    pub state_vars: Vec<BTreeMap<String, VarId>>,
    /// Version-0 attributes and arguments, in declaration order. Model
    /// distinctness and counterexample blocking are defined on these.
    pub initial_vars: Vec<VarId>,
    /// For each call or loop instruction: the havoc variables it introduced.
    pub havoc_vars: BTreeMap<InstrId, Vec<(String, VarId)>>,
}

impl RoutineVc {
    pub fn lookup(&self, name: &str, version: u32) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name && v.version == version)
            .map(|i| VarId(i as u32))
    }

    /// All definition formulas, in creation order.
    pub fn def_formulas(&self) -> Vec<Term> {
        self.vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.def_formula(VarId(i as u32)))
            .collect()
    }
}

/// Identity of an obligation, stable across re-verification of a patched
/// class as long as the clause structure is preserved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObligationKey {
    pub routine: String,
    pub kind: ObligationKind,
    pub clause_label: Option<String>,
    /// Disambiguates several obligations with the same kind and label
    /// (unlabeled checks, modulo divisors), in generation order.
    pub occurrence: u32,
}

impl fmt::Display for ObligationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.routine, self.kind)?;
        if let Some(label) = &self.clause_label {
            write!(f, "/{label}")?;
        }
        if self.occurrence > 0 {
            write!(f, "#{}", self.occurrence)?;
        }
        Ok(())
    }
}

/// One proof obligation: prove `goal` under the path condition.
#[derive(Debug, Clone)]
pub struct Obligation {
    pub vc: Arc<RoutineVc>,
    pub kind: ObligationKind,
    pub clause_label: Option<String>,
    /// Point of failure in the source.
    pub location: Span,
    /// Number of assumptions (prefix of `vc.assumptions`) in scope.
    pub assumption_count: usize,
    /// Reach condition of the check point.
    pub guard: Term,
    pub goal: Term,
    pub key: ObligationKey,
}

impl Obligation {
    pub fn routine(&self) -> &str {
        &self.vc.routine_name
    }

    /// Assumptions in scope for this obligation.
    pub fn assumptions(&self) -> &[Term] {
        &self.vc.assumptions[..self.assumption_count]
    }

    /// The full path condition as one formula: variable definitions, the
    /// assumption prefix, and the reach guard.
    pub fn path_condition(&self) -> Term {
        let mut parts = self.vc.def_formulas();
        parts.extend(self.assumptions().iter().cloned());
        parts.push(self.guard.clone());
        Term::conj(parts)
    }

    /// Names (unversioned) of variables the goal talks about; the repair
    /// engine treats these as suspicious.
    pub fn suspicious_names(&self) -> std::collections::BTreeSet<String> {
        let mut names = std::collections::BTreeSet::new();
        let mut queue: Vec<VarId> = self.goal.vars();
        let mut seen = std::collections::BTreeSet::new();
        while let Some(v) = queue.pop() {
            if !seen.insert(v) {
                continue;
            }
            let var = &self.vc.vars[v.index()];
            names.insert(var.name.clone());
            match &var.def {
                Some(VcDef::Expr(t)) => queue.extend(t.vars()),
                Some(VcDef::Join { cond, then_v, else_v }) => {
                    queue.extend(cond.vars());
                    queue.push(*then_v);
                    queue.push(*else_v);
                }
                None => {}
            }
        }
        names
    }

    /// Spec-facing version map: per state point, each name's version index.
    pub fn version_map(&self) -> Vec<BTreeMap<String, u32>> {
        self.vc
            .state_vars
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(name, id)| (name.clone(), self.vc.vars[id.index()].version))
                    .collect()
            })
            .collect()
    }
}

/// A program point at which counterexample states are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatePoint {
    pub index: usize,
    /// `None` for routine entry, otherwise the top-level instruction this
    /// point follows. The last point is the routine exit.
    pub after: Option<InstrId>,
}

/// Ordered state points of a routine: entry, then one after each top-level
/// instruction; the last point is the exit.
pub fn state_points(routine: &RoutineDecl) -> Vec<StatePoint> {
    let mut points = vec![StatePoint {
        index: 0,
        after: None,
    }];
    for (i, instr) in routine.body.instrs.iter().enumerate() {
        points.push(StatePoint {
            index: i + 1,
            after: Some(instr.id),
        });
    }
    points
}

/// Translate one routine into its proof obligations.
pub fn generate_obligations(
    tp: &TypedProgram,
    class: &ClassDecl,
    routine: &RoutineDecl,
) -> Vec<Obligation> {
    passify::passify_routine(tp, class, routine)
}

/// Obligations of every routine in a class, in declaration order.
pub fn class_obligations(tp: &TypedProgram, class: &ClassDecl) -> Vec<Obligation> {
    class
        .routines
        .iter()
        .flat_map(|r| generate_obligations(tp, class, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;

    #[test]
    fn state_points_count_top_level_instructions() {
        let tp = load(
            "t.mcl",
            "class C feature x: INTEGER\n\
             empty do end\n\
             one modify x do if x = 1 then x := 0 end end\n\
             three modify x do x := 1 x := 2 x := 3 end\n\
             end",
        )
        .unwrap();
        let class = tp.class("C").unwrap();
        assert_eq!(state_points(class.routine("empty").unwrap()).len(), 1);
        assert_eq!(state_points(class.routine("one").unwrap()).len(), 2);
        assert_eq!(state_points(class.routine("three").unwrap()).len(), 4);
    }
}
