//! Candidate generation: contract edits and fix-schema instantiation.

use super::{CandidateFix, FixKind};
use crate::cex::{path_instrs, ProofFailure};
use crate::cex::{blocks_on_path, Counterexample};
use crate::inference::Predicate;
use crate::lang::ast::*;
use crate::lang::printer::instr_to_string;
use crate::lang::typecheck::{enclosing_block_map, parent_instr_map, TypedProgram};
use crate::lang::{load, render_patch, Edit};
use crate::span::Span;
use crate::vcgen::ObligationKind;
use std::collections::{BTreeSet, HashMap, HashSet};

/// Contract fixes per predicate: strengthen the precondition with `not phi`;
/// when the failing clause is a postcondition or class-invariant clause,
/// also weaken it to `not phi implies clause`.
pub fn gen_contract_fixes(
    failure: &ProofFailure,
    pi: &[Predicate],
    tp: &TypedProgram,
    class: &ClassDecl,
    routine: &RoutineDecl,
    source: &str,
) -> Vec<CandidateFix> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut index = 0;

    for phi in pi {
        let (at, text) = precondition_edit(routine, phi);
        push_checked(
            &mut out,
            &mut seen,
            &mut index,
            tp,
            source,
            CandidateSketch {
                kind: FixKind::PreconditionStrengthen,
                phi: phi.clone(),
                target: at,
                snippet: None,
                edit: Edit::new(at, text),
            },
        );
    }

    if let Some(clause) = failing_clause(failure, class, routine) {
        for phi in pi {
            let pred_span = clause.predicate.span;
            let original = &source[pred_span.start..pred_span.end];
            let text = format!("not ({}) implies ({})", phi.text(), original);
            push_checked(
                &mut out,
                &mut seen,
                &mut index,
                tp,
                source,
                CandidateSketch {
                    kind: FixKind::PostconditionWeaken,
                    phi: phi.clone(),
                    target: pred_span,
                    snippet: None,
                    edit: Edit::new(pred_span, text),
                },
            );
        }
    }

    out
}

/// Where to append `not (phi)` to the routine's precondition.
fn precondition_edit(routine: &RoutineDecl, phi: &Predicate) -> (Span, String) {
    match routine.precondition_end {
        Some(end) => (Span::point(end), format!(" not ({})", phi.text())),
        None => (
            Span::point(routine.contract_insert_at),
            format!("require not ({}) ", phi.text()),
        ),
    }
}

/// The source clause an obligation checks, when it is a contract clause.
fn failing_clause<'a>(
    failure: &ProofFailure,
    class: &'a ClassDecl,
    routine: &'a RoutineDecl,
) -> Option<&'a LabeledClause> {
    let clauses: &[LabeledClause] = match failure.kind() {
        ObligationKind::Postcondition => &routine.postcondition,
        ObligationKind::ClassInvariantOnExit => &class.invariant_clauses,
        _ => return None,
    };
    let label = failure.clause_label();
    clauses
        .iter()
        .filter(|c| c.label.as_ref().map(|l| l.text.as_str()) == label)
        .nth(failure.key().occurrence as usize)
}

/// Candidate replacement targets: per counterexample, the last instruction on
/// the failing path assigning a suspicious variable, and the block (`if` or
/// loop instruction, or the whole body) immediately containing it. Targets
/// whose enclosing block lies on every counterexample's path come first.
pub fn select_old_stmts(
    failure: &ProofFailure,
    ces: &[Counterexample],
    routine: &RoutineDecl,
) -> Vec<(Span, u32)> {
    let suspicious = failure.obligation.suspicious_names();
    let parents = parent_instr_map(routine);
    let blocks_of = enclosing_block_map(routine);
    let by_id: HashMap<InstrId, &Instr> = routine
        .body
        .all_instrs()
        .into_iter()
        .map(|i| (i.id, i))
        .collect();

    // blocks on every counterexample's path
    let mut common_blocks: Option<BTreeSet<BlockId>> = None;
    for ce in ces {
        let blocks = blocks_on_path(ce, routine);
        common_blocks = Some(match common_blocks {
            None => blocks,
            Some(acc) => acc.intersection(&blocks).copied().collect(),
        });
    }
    let common_blocks = common_blocks.unwrap_or_default();

    let mut out: Vec<(Span, u32)> = Vec::new();
    let mut seen: HashSet<Span> = HashSet::new();
    for ce in ces {
        let path = path_instrs(ce, routine);
        let last_assign = path
            .iter()
            .rev()
            .filter_map(|id| by_id.get(id))
            .find(|instr| match &instr.kind {
                InstrKind::Assign { target, .. } => suspicious.contains(&target.text),
                _ => false,
            });
        let Some(assign) = last_assign else { continue };

        let container_span = match parents.get(&assign.id).copied().flatten() {
            Some(parent) => by_id[&parent].span,
            None => routine.body.span,
        };
        let priority = |instr_id: InstrId| -> u32 {
            match blocks_of.get(&instr_id) {
                Some(block) if common_blocks.contains(block) => 0,
                _ => 1,
            }
        };
        for (span, prio) in [
            (assign.span, priority(assign.id)),
            (
                container_span,
                match parents.get(&assign.id).copied().flatten() {
                    Some(parent) => priority(parent),
                    None => 0,
                },
            ),
        ] {
            if seen.insert(span) {
                out.push((span, prio));
            }
        }
    }

    if out.is_empty() {
        // no suspicious assignment anywhere: fall back to the whole body
        return vec![(routine.body.span, 0)];
    }
    out.sort_by_key(|(_, prio)| *prio);
    out
}

/// Instantiate the four fix schemas over predicates, replacement targets,
/// and snippets from the instruction menu, cheapest first: schema D (no
/// snippet), then single-instruction snippets through schemas A–C, then
/// two-instruction snippets. `budget` caps the number of candidates.
#[allow(clippy::too_many_arguments)]
pub fn gen_impl_fixes(
    failure: &ProofFailure,
    pi: &[Predicate],
    old_stmts: &[(Span, u32)],
    tp: &TypedProgram,
    class: &ClassDecl,
    routine: &RoutineDecl,
    source: &str,
    snippet_len: usize,
    budget: usize,
) -> Vec<CandidateFix> {
    let menu = instruction_menu(failure, tp, class, routine);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut index = 0;

    let emit = |out: &mut Vec<CandidateFix>,
                    seen: &mut HashSet<String>,
                    index: &mut usize,
                    kind: FixKind,
                    phi: &Predicate,
                    target: Span,
                    snippet: Option<&[Instr]>| {
        if out.len() >= budget {
            return;
        }
        let old_text = &source[target.start..target.end];
        let text = match kind {
            FixKind::ImplSchemaA => format!(
                "if {} then {} else {} end",
                phi.text(),
                snippet_text(snippet.unwrap()),
                old_text
            ),
            FixKind::ImplSchemaB => format!(
                "if {} then {} {} else {} end",
                phi.text(),
                snippet_text(snippet.unwrap()),
                old_text,
                old_text
            ),
            FixKind::ImplSchemaC => format!(
                "if {} then {} {} else {} end",
                phi.text(),
                old_text,
                snippet_text(snippet.unwrap()),
                old_text
            ),
            FixKind::ImplSchemaD => format!("if not ({}) then {} end", phi.text(), old_text),
            _ => unreachable!("contract kinds are not schemas"),
        };
        push_checked(
            out,
            seen,
            index,
            tp,
            source,
            CandidateSketch {
                kind,
                phi: phi.clone(),
                target,
                snippet: snippet.map(|s| s.to_vec()),
                edit: Edit::new(target, text),
            },
        );
    };

    // schema D takes no snippet, so its candidates are the cheapest
    for phi in pi {
        for (target, _) in old_stmts {
            emit(&mut out, &mut seen, &mut index, FixKind::ImplSchemaD, phi, *target, None);
        }
    }
    // single-instruction snippets, then pairs
    for len in 1..=snippet_len.min(2) {
        for phi in pi {
            for (target, _) in old_stmts {
                for kind in [FixKind::ImplSchemaA, FixKind::ImplSchemaB, FixKind::ImplSchemaC] {
                    match len {
                        1 => {
                            for m in &menu {
                                emit(
                                    &mut out,
                                    &mut seen,
                                    &mut index,
                                    kind,
                                    phi,
                                    *target,
                                    Some(std::slice::from_ref(m)),
                                );
                            }
                        }
                        _ => {
                            for m1 in &menu {
                                for m2 in &menu {
                                    let pair = [m1.clone(), m2.clone()];
                                    emit(&mut out, &mut seen, &mut index, kind, phi, *target, Some(&pair));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    out
}

fn snippet_text(snippet: &[Instr]) -> String {
    snippet
        .iter()
        .map(instr_to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The snippet instruction menu: command calls with argument expressions
/// drawn from attributes, arguments, and small constants; then assignments
/// that alter each suspicious variable according to its type.
fn instruction_menu(
    failure: &ProofFailure,
    tp: &TypedProgram,
    class: &ClassDecl,
    routine: &RoutineDecl,
) -> Vec<Instr> {
    let suspicious = failure.obligation.suspicious_names();
    let mut menu = Vec::new();
    let mut next_id = 0u32;
    let mut instr = |kind: InstrKind| {
        let i = Instr {
            id: InstrId(u32::MAX - next_id),
            kind,
            span: Span::default(),
        };
        next_id += 1;
        i
    };

    // command calls; argument pools are attributes, the routine's own
    // arguments, and the constants 0, 1, -1
    for callee in class.routines.iter().filter(|r| !r.is_function()) {
        let pools: Vec<Vec<Expr>> = callee
            .args
            .iter()
            .map(|formal| arg_pool(formal.ty, class, routine))
            .collect();
        for combo in cartesian(&pools) {
            menu.push(instr(InstrKind::Call {
                routine: Ident::new(callee.name.text.clone(), Span::default()),
                args: combo,
            }));
        }
    }

    // assignments to suspicious assignable variables, in declaration order
    let mut targets: Vec<(String, Ty)> = Vec::new();
    for attr in &class.attributes {
        if suspicious.contains(&attr.name.text) {
            targets.push((attr.name.text.clone(), attr.ty));
        }
    }
    for local in &routine.locals {
        if suspicious.contains(&local.name.text) {
            targets.push((local.name.text.clone(), local.ty));
        }
    }
    if let Some(ty) = routine.return_type {
        if suspicious.contains("Result") {
            targets.push(("Result".to_string(), ty));
        }
    }
    let _ = tp;
    for (name, ty) in targets {
        let target = || Ident::new(name.clone(), Span::default());
        let var = || Expr::new(ExprKind::Var(name.clone()), Span::default());
        let assigns: Vec<Expr> = match ty {
            Ty::Bool => vec![
                Expr::new(ExprKind::BoolLit(true), Span::default()),
                Expr::new(ExprKind::BoolLit(false), Span::default()),
                Expr::new(ExprKind::Unary(UnOp::Not, Box::new(var())), Span::default()),
            ],
            Ty::Int => vec![
                Expr::new(ExprKind::IntLit(0), Span::default()),
                Expr::new(ExprKind::IntLit(1), Span::default()),
                Expr::new(
                    ExprKind::Unary(
                        UnOp::Neg,
                        Box::new(Expr::new(ExprKind::IntLit(1), Span::default())),
                    ),
                    Span::default(),
                ),
                Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(var())), Span::default()),
                Expr::new(
                    ExprKind::Binary(
                        BinOp::Add,
                        Box::new(var()),
                        Box::new(Expr::new(ExprKind::IntLit(1), Span::default())),
                    ),
                    Span::default(),
                ),
                Expr::new(
                    ExprKind::Binary(
                        BinOp::Sub,
                        Box::new(var()),
                        Box::new(Expr::new(ExprKind::IntLit(1), Span::default())),
                    ),
                    Span::default(),
                ),
            ],
        };
        for value in assigns {
            menu.push(instr(InstrKind::Assign {
                target: target(),
                value,
            }));
        }
    }

    menu
}

fn arg_pool(ty: Ty, class: &ClassDecl, routine: &RoutineDecl) -> Vec<Expr> {
    let mut pool = Vec::new();
    for attr in class.attributes.iter().filter(|a| a.ty == ty) {
        pool.push(Expr::new(
            ExprKind::Var(attr.name.text.clone()),
            Span::default(),
        ));
    }
    for arg in routine.args.iter().filter(|a| a.ty == ty) {
        pool.push(Expr::new(
            ExprKind::Var(arg.name.text.clone()),
            Span::default(),
        ));
    }
    if ty == Ty::Int {
        pool.push(Expr::new(ExprKind::IntLit(0), Span::default()));
        pool.push(Expr::new(ExprKind::IntLit(1), Span::default()));
        pool.push(Expr::new(
            ExprKind::Unary(
                UnOp::Neg,
                Box::new(Expr::new(ExprKind::IntLit(1), Span::default())),
            ),
            Span::default(),
        ));
    }
    pool
}

fn cartesian(pools: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let mut out = vec![Vec::new()];
    for pool in pools {
        let mut next = Vec::new();
        for combo in &out {
            for item in pool {
                let mut c = combo.clone();
                c.push(item.clone());
                next.push(c);
            }
        }
        out = next;
    }
    out
}

struct CandidateSketch {
    kind: FixKind,
    phi: Predicate,
    target: Span,
    snippet: Option<Vec<Instr>>,
    edit: Edit,
}

/// Materialize a candidate and keep it only when the patched program passes
/// the front end and is new.
fn push_checked(
    out: &mut Vec<CandidateFix>,
    seen: &mut HashSet<String>,
    index: &mut usize,
    _tp: &TypedProgram,
    source: &str,
    sketch: CandidateSketch,
) {
    let Ok(patched_source) = render_patch(source, &[sketch.edit]) else {
        return;
    };
    if patched_source == source || !seen.insert(patched_source.clone()) {
        return;
    }
    if load("candidate.mcl", &patched_source).is_err() {
        return;
    }
    out.push(CandidateFix {
        kind: sketch.kind,
        phi: sketch.phi,
        target: sketch.target,
        snippet: sketch.snippet,
        patched_source,
        index: *index,
    });
    *index += 1;
}
