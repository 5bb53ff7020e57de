//! Proof-gated acceptance of candidate fixes.
//!
//! A candidate is valid when, in the fully re-verified patched class, the
//! original failure's obligation is verified and every obligation that
//! verified in the original still verifies. Precondition-strengthening
//! candidates additionally pass the vacuity filter: a contradictory
//! `check False end` is injected at the start of the routine body, and the
//! candidate survives only if that injected fault is still detected.

use super::{CandidateFix, FixKind, ReviewFlag, ValidFix};
use crate::cex::ProofFailure;
use crate::lang::ast::{Block, ClassDecl, Expr, ExprKind, Instr, InstrId, InstrKind};
use crate::lang::typecheck::TypedProgram;
use crate::lang::load;
use crate::solver::{check, CheckOutcome, SolverConfig};
use crate::span::Span;
use crate::vcgen::{class_obligations, ObligationKey, ObligationKind};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Verified,
    Refuted,
    Unknown,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Verified => "Verified",
            Verdict::Refuted => "Refuted",
            Verdict::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Rejection {
    #[error("original failure still refuted")]
    StillFailing,
    #[error("new failure introduced: {0}")]
    NewFailure(ObligationKey),
    #[error("strengthened precondition admits no state")]
    Vacuous,
    #[error("resource limit while re-verifying {0}")]
    ResourceLimit(ObligationKey),
    #[error("patched source rejected by the front end")]
    FrontEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacuityVerdict {
    Keep,
    Discard,
}

/// Baseline verdicts for every obligation of a class, checked with a single
/// model per failure (validation needs verdicts, not counterexamples).
pub fn baseline_verdicts(
    tp: &TypedProgram,
    class: &ClassDecl,
    cfg: &SolverConfig,
) -> BTreeMap<ObligationKey, Verdict> {
    let quick = cfg.clone().with_max_models(1);
    class_obligations(tp, class)
        .into_iter()
        .map(|ob| {
            let verdict = match check(&ob, &quick) {
                CheckOutcome::Verified => Verdict::Verified,
                CheckOutcome::Refuted(_) => Verdict::Refuted,
                CheckOutcome::Unknown => Verdict::Unknown,
            };
            (ob.key, verdict)
        })
        .collect()
}

/// Re-verify the patched class and accept the candidate when the target
/// failure is gone and nothing regressed.
pub fn validate(
    candidate: &CandidateFix,
    failure: &ProofFailure,
    original_verdicts: &BTreeMap<ObligationKey, Verdict>,
    cfg: &SolverConfig,
) -> Result<ValidFix, Rejection> {
    let Ok(tp) = load("patched.mcl", &candidate.patched_source) else {
        return Err(Rejection::FrontEnd);
    };
    let class_name = &failure.obligation.vc.class_name;
    let class = tp.class(class_name).ok_or(Rejection::FrontEnd)?.clone();

    let quick = cfg.clone().with_max_models(1);
    let mut evidence: Vec<(ObligationKey, Verdict)> = Vec::new();
    for ob in class_obligations(&tp, &class) {
        let verdict = match check(&ob, &quick) {
            CheckOutcome::Verified => Verdict::Verified,
            CheckOutcome::Refuted(_) => Verdict::Refuted,
            CheckOutcome::Unknown => Verdict::Unknown,
        };
        evidence.push((ob.key, verdict));
    }

    let target = failure.key();
    match evidence.iter().find(|(k, _)| k == target) {
        Some((_, Verdict::Verified)) => {}
        _ => return Err(Rejection::StillFailing),
    }
    for (key, verdict) in &evidence {
        if *verdict == Verdict::Verified || key == target {
            continue;
        }
        match original_verdicts.get(key) {
            // a failure that already existed may remain
            Some(Verdict::Refuted) | Some(Verdict::Unknown) => {}
            _ => return Err(Rejection::NewFailure(key.clone())),
        }
    }

    if candidate.kind == FixKind::PreconditionStrengthen
        && vacuity_filter_typed(&tp, &class, failure.routine(), cfg) == VacuityVerdict::Discard
    {
        return Err(Rejection::Vacuous);
    }

    let mut review_flags = Vec::new();
    match candidate.kind {
        FixKind::PreconditionStrengthen => review_flags.push(ReviewFlag::PreconditionStrengthened),
        FixKind::PostconditionWeaken => review_flags.push(ReviewFlag::PostconditionWeakened),
        _ => {}
    }
    if let Some(snippet) = &candidate.snippet {
        let recursive = snippet.iter().any(|i| {
            matches!(&i.kind, InstrKind::Call { routine, .. } if routine.text == failure.routine())
        });
        if recursive {
            review_flags.push(ReviewFlag::RecursiveSelfCall);
        }
    }

    Ok(ValidFix {
        candidate: candidate.clone(),
        verification_evidence: evidence,
        review_flags,
    })
}

/// Public filter entry: re-load the candidate's patched source and test it.
pub fn vacuity_filter(
    candidate: &CandidateFix,
    failure_routine: &str,
    class_name: &str,
    cfg: &SolverConfig,
) -> VacuityVerdict {
    let Ok(tp) = load("patched.mcl", &candidate.patched_source) else {
        return VacuityVerdict::Discard;
    };
    let Some(class) = tp.class(class_name).cloned() else {
        return VacuityVerdict::Discard;
    };
    vacuity_filter_typed(&tp, &class, failure_routine, cfg)
}

/// Inject `check False end` at the start of the routine body; keep the
/// candidate only when that injected fault is refutable, i.e. the
/// strengthened precondition still admits a state.
fn vacuity_filter_typed(
    tp: &TypedProgram,
    class: &ClassDecl,
    routine_name: &str,
    cfg: &SolverConfig,
) -> VacuityVerdict {
    let Some(routine) = class.routine(routine_name) else {
        return VacuityVerdict::Discard;
    };
    let mut probe = routine.clone();
    probe.body = Block {
        id: probe.body.id,
        instrs: {
            let mut instrs = vec![Instr {
                id: InstrId(u32::MAX),
                kind: InstrKind::Check {
                    cond: Expr::new(ExprKind::BoolLit(false), Span::default()),
                },
                span: Span::point(probe.body.span.start),
            }];
            instrs.extend(probe.body.instrs.clone());
            instrs
        },
        span: probe.body.span,
    };
    let obligations = crate::vcgen::generate_obligations(tp, class, &probe);
    let injected = obligations
        .iter()
        .find(|ob| ob.kind == ObligationKind::CheckViolation && ob.goal == crate::vcgen::Term::Bool(false))
        .expect("injected check obligation exists");
    match check(injected, &cfg.clone().with_max_models(1)) {
        CheckOutcome::Refuted(_) => VacuityVerdict::Keep,
        CheckOutcome::Verified | CheckOutcome::Unknown => VacuityVerdict::Discard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{infer_basic, compound};
    use crate::repair::gen_contract_fixes;
    use crate::cex::extract_counterexamples;
    use crate::vcgen::generate_obligations;

    fn failing(src: &str, routine: &str, label: Option<&str>) -> (TypedProgram, ProofFailure) {
        let tp = load("t.mcl", src).unwrap();
        let class = tp.program().classes[0].clone();
        let r = class.routine(routine).unwrap().clone();
        let cfg = SolverConfig::default();
        let failure = generate_obligations(&tp, &class, &r)
            .into_iter()
            .filter(|ob| !check(ob, &cfg).is_verified())
            .map(|obligation| ProofFailure { obligation })
            .find(|f| f.clause_label() == label)
            .expect("failure present");
        (tp, failure)
    }

    /// Contradictory strengthening: precondition `a = 0` and candidate adds
    /// `a > 0`, i.e. `not (a <= 0)`. Discarded through the injected
    /// `check False end`.
    #[test]
    fn contradictory_strengthening_is_discarded() {
        let src = "class C feature\n\
                   r (a: INTEGER) require zero: a = 0 do check a /= 0 end end\n\
                   end";
        let (tp, failure) = failing(src, "r", None);
        let class = tp.program().classes[0].clone();
        let routine = class.routine("r").unwrap().clone();
        let source = src;
        // phi = a <= 0, so the added clause is not (a <= 0), i.e. a > 0
        let ces = extract_counterexamples(&failure, &tp, &SolverConfig::default()).unwrap();
        let _ = ces;
        let phi = {
            use crate::lang::parser::parse;
            let p = parse("phi.mcl", "class P feature a: INTEGER r do check a <= 0 end end end").unwrap();
            let InstrKind::Check { cond } = &p.classes[0].routines[0].body.instrs[0].kind else {
                panic!()
            };
            predicate_from(cond.clone())
        };
        let fixes = gen_contract_fixes(&failure, &[phi], &tp, &class, &routine, source);
        let pre = fixes
            .iter()
            .find(|f| f.kind == FixKind::PreconditionStrengthen)
            .expect("strengthening candidate");
        assert_eq!(
            vacuity_filter(pre, "r", "C", &SolverConfig::default()),
            VacuityVerdict::Discard
        );
    }

    #[test]
    fn satisfiable_strengthening_is_kept() {
        let clock = include_str!("../../tests/data/clock_buggy.mcl");
        let (tp, failure) = failing(clock, "increase_hours", Some("hours_increased"));
        let class = tp.program().classes[0].clone();
        let routine = class.routine("increase_hours").unwrap().clone();
        let ces = extract_counterexamples(&failure, &tp, &SolverConfig::default()).unwrap();
        let pi = compound(&infer_basic(&ces));
        let fixes = gen_contract_fixes(&failure, &pi, &tp, &class, &routine, clock);
        let hours_23 = fixes
            .iter()
            .find(|f| {
                f.kind == FixKind::PreconditionStrengthen && f.phi.text() == "hours = 23"
            })
            .expect("not (hours = 23) candidate");
        // hours = 0 is still admitted, so the filter keeps the candidate
        assert_eq!(
            vacuity_filter(hours_23, "increase_hours", "CLOCK", &SolverConfig::default()),
            VacuityVerdict::Keep
        );
    }

    #[test]
    fn require_not_true_is_discarded() {
        let src = "class C feature r do check False end end end";
        let (tp, failure) = failing(src, "r", None);
        let class = tp.program().classes[0].clone();
        let routine = class.routine("r").unwrap().clone();
        let phi = {
            use crate::lang::parser::parse;
            let p = parse("phi.mcl", "class P feature r do check True end end end").unwrap();
            let InstrKind::Check { cond } = &p.classes[0].routines[0].body.instrs[0].kind else {
                panic!()
            };
            predicate_from(cond.clone())
        };
        let fixes = gen_contract_fixes(&failure, &[phi], &tp, &class, &routine, src);
        let pre = fixes
            .iter()
            .find(|f| f.kind == FixKind::PreconditionStrengthen)
            .expect("candidate");
        assert_eq!(
            vacuity_filter(pre, "r", "C", &SolverConfig::default()),
            VacuityVerdict::Discard
        );
    }

    fn predicate_from(expr: Expr) -> crate::inference::Predicate {
        crate::inference::Predicate::from_expr(expr, crate::inference::Template::ConstantEquality)
    }
}
