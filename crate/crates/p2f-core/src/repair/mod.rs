//! Fix synthesis and proof-gated validation.
//!
//! For one proof failure the pipeline is: extract counterexamples, infer
//! their initial-state invariants, generate candidate fixes (contract edits
//! and schema instantiations around the suspicious statement), then accept
//! only candidates whose patched class re-verifies with the original failure
//! gone and no regression elsewhere.

pub mod candidates;
pub mod validate;

pub use candidates::{gen_contract_fixes, gen_impl_fixes, select_old_stmts};
pub use validate::{baseline_verdicts, vacuity_filter, validate, Rejection, VacuityVerdict, Verdict};

use crate::cex::{extract_counterexamples, CexError, Counterexample, ProofFailure};
use crate::inference::{InvariantSet, Predicate};
use crate::lang::ast::Instr;
use crate::lang::typecheck::TypedProgram;
use crate::solver::SolverConfig;
use crate::span::Span;
use crate::vcgen::ObligationKey;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

/// Which fix strategy produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FixKind {
    PreconditionStrengthen,
    PostconditionWeaken,
    ImplSchemaA,
    ImplSchemaB,
    ImplSchemaC,
    ImplSchemaD,
}

impl FixKind {
    pub fn is_contract(self) -> bool {
        matches!(
            self,
            FixKind::PreconditionStrengthen | FixKind::PostconditionWeaken
        )
    }

    /// Ordering group for reports: contract fixes, then schemas A through D.
    pub fn rank(self) -> u8 {
        match self {
            FixKind::PreconditionStrengthen | FixKind::PostconditionWeaken => 0,
            FixKind::ImplSchemaA => 1,
            FixKind::ImplSchemaB => 2,
            FixKind::ImplSchemaC => 3,
            FixKind::ImplSchemaD => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FixKind::PreconditionStrengthen => "PreconditionStrengthen",
            FixKind::PostconditionWeaken => "PostconditionWeaken",
            FixKind::ImplSchemaA => "ImplSchemaA",
            FixKind::ImplSchemaB => "ImplSchemaB",
            FixKind::ImplSchemaC => "ImplSchemaC",
            FixKind::ImplSchemaD => "ImplSchemaD",
        }
    }
}

/// A concrete patch: the edited source plus how it was derived.
#[derive(Debug, Clone)]
pub struct CandidateFix {
    pub kind: FixKind,
    /// The counterexample invariant the fix is built around.
    pub phi: Predicate,
    /// Replaced span (or insertion point) in the original routine.
    pub target: Span,
    /// Inserted instructions for schemas A–C; `None` for contract fixes and
    /// schema D.
    pub snippet: Option<Vec<Instr>>,
    /// Full patched program text; parses and typechecks by construction.
    pub patched_source: String,
    /// Generation index; the deterministic tie-breaker everywhere.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReviewFlag {
    PostconditionWeakened,
    PreconditionStrengthened,
    RecursiveSelfCall,
}

impl ReviewFlag {
    pub fn name(self) -> &'static str {
        match self {
            ReviewFlag::PostconditionWeakened => "PostconditionWeakened",
            ReviewFlag::PreconditionStrengthened => "PreconditionStrengthened",
            ReviewFlag::RecursiveSelfCall => "RecursiveSelfCall",
        }
    }
}

/// A candidate that passed validation: the original failure's obligation is
/// verified in the patched class and nothing that verified before regressed.
#[derive(Debug, Clone)]
pub struct ValidFix {
    pub candidate: CandidateFix,
    pub verification_evidence: Vec<(ObligationKey, Verdict)>,
    pub review_flags: Vec<ReviewFlag>,
}

/// Knobs of the repair loop.
#[derive(Debug, Clone)]
pub struct RepairConfig {
    pub solver: SolverConfig,
    /// Cap on generated candidates per failure; contract fixes are generated
    /// first and never truncated by the cap.
    pub max_candidates: usize,
    /// Maximum snippet length for implementation schemas.
    pub snippet_len: usize,
    /// Wall-clock budget per failure; exceeding it stops validation and
    /// marks the report entry as partial.
    pub time_budget: Option<Duration>,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            solver: SolverConfig::default(),
            max_candidates: 500,
            snippet_len: 2,
            time_budget: Some(Duration::from_secs(120)),
        }
    }
}

/// Everything the repair loop produced for one failure.
#[derive(Debug, Clone)]
pub struct FailureReport {
    pub failure_key: ObligationKey,
    pub location: Span,
    pub counterexamples: Vec<Counterexample>,
    pub invariants: InvariantSet,
    pub candidates_generated: usize,
    pub valid_fixes: Vec<ValidFix>,
    pub elapsed: Duration,
    /// Set when the time budget cut validation short.
    pub partial: bool,
    /// Set when counterexample extraction failed (resource limit).
    pub extraction_error: Option<String>,
}

/// Run the whole pipeline for one refuted obligation.
///
/// `original_verdicts` are the baseline verdicts of every obligation of the
/// class, used to tell regressions from pre-existing failures.
pub fn repair_failure(
    failure: &ProofFailure,
    tp: &TypedProgram,
    source: &str,
    original_verdicts: &BTreeMap<ObligationKey, Verdict>,
    cfg: &RepairConfig,
) -> FailureReport {
    let started = Instant::now();
    let mut report = FailureReport {
        failure_key: failure.key().clone(),
        location: failure.location(),
        counterexamples: Vec::new(),
        invariants: InvariantSet {
            basic: Vec::new(),
            compound: Vec::new(),
        },
        candidates_generated: 0,
        valid_fixes: Vec::new(),
        elapsed: Duration::ZERO,
        partial: false,
        extraction_error: None,
    };

    let ces = match extract_counterexamples(failure, tp, &cfg.solver) {
        Ok(ces) => ces,
        Err(e @ (CexError::ResourceLimit(_) | CexError::InconsistentModel { .. })) => {
            report.extraction_error = Some(e.to_string());
            report.elapsed = started.elapsed();
            return report;
        }
        Err(CexError::NotRefuted(key)) => {
            panic!("repair_failure called on non-refuted obligation {key}")
        }
    };
    report.invariants = InvariantSet::from_counterexamples(&ces);
    report.counterexamples = ces;

    let class = tp
        .class(&failure.obligation.vc.class_name)
        .expect("failure class");
    let routine = class
        .routine(failure.routine())
        .expect("failure routine");

    let mut all = gen_contract_fixes(
        failure,
        &report.invariants.compound,
        tp,
        class,
        routine,
        source,
    );
    let old_stmts = select_old_stmts(failure, &report.counterexamples, routine);
    let impl_budget = cfg.max_candidates.saturating_sub(all.len());
    all.extend(gen_impl_fixes(
        failure,
        &report.invariants.compound,
        &old_stmts,
        tp,
        class,
        routine,
        source,
        cfg.snippet_len,
        impl_budget,
    ));
    report.candidates_generated = all.len();

    for candidate in &all {
        if let Some(budget) = cfg.time_budget {
            if started.elapsed() > budget {
                report.partial = true;
                break;
            }
        }
        if let Ok(valid) = validate(candidate, failure, original_verdicts, &cfg.solver) {
            report.valid_fixes.push(valid);
        }
    }

    report.valid_fixes.sort_by_key(|v| {
        (
            u8::from(!v.candidate.kind.is_contract()),
            v.candidate.kind.rank(),
            v.candidate.index,
        )
    });
    report.elapsed = started.elapsed();
    report
}
