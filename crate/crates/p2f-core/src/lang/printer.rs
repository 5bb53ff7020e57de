//! Rendering of MCL syntax back to concrete text.
//!
//! Used for predicate strings in reports, for instantiating fix schemas, and
//! for printing whole programs in tests. Output re-parses to the same AST
//! (modulo spans).

use super::ast::*;

/// Render an expression with minimal parentheses.
pub fn expr_to_string(expr: &Expr) -> String {
    render_expr(expr, 0)
}

/// Precedence levels, loosest first; must mirror the parser.
fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Binary(BinOp::Implies, _, _) => 1,
        ExprKind::Binary(BinOp::Or, _, _) => 2,
        ExprKind::Binary(BinOp::And, _, _) => 3,
        ExprKind::Unary(UnOp::Not, _) => 4,
        ExprKind::Binary(op, _, _) if op.is_comparison() => 5,
        ExprKind::Binary(BinOp::Add, _, _) | ExprKind::Binary(BinOp::Sub, _, _) => 6,
        ExprKind::Binary(BinOp::Mul, _, _) | ExprKind::Binary(BinOp::Mod, _, _) => 7,
        ExprKind::Unary(UnOp::Neg, _) => 8,
        _ => 9,
    }
}

fn op_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Mod => "\\\\",
        BinOp::Eq => "=",
        BinOp::Ne => "/=",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Implies => "implies",
    }
}

fn render_expr(expr: &Expr, min_prec: u8) -> String {
    let prec = precedence(&expr.kind);
    let body = match &expr.kind {
        ExprKind::IntLit(n) => n.to_string(),
        ExprKind::BoolLit(true) => "True".to_string(),
        ExprKind::BoolLit(false) => "False".to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Old(name) => format!("old {}", name.text),
        ExprKind::Unary(UnOp::Neg, inner) => format!("-{}", render_expr(inner, prec + 1)),
        ExprKind::Unary(UnOp::Not, inner) => format!("not {}", render_expr(inner, prec + 1)),
        ExprKind::Binary(op, lhs, rhs) => {
            // left-assoc operators need a tighter right side; implies is
            // right-assoc; comparisons do not chain, so both sides bind up
            let (lmin, rmin) = match op {
                BinOp::Implies => (prec + 1, prec),
                op if op.is_comparison() => (prec + 1, prec + 1),
                _ => (prec, prec + 1),
            };
            format!(
                "{} {} {}",
                render_expr(lhs, lmin),
                op_text(*op),
                render_expr(rhs, rmin)
            )
        }
    };
    if prec < min_prec {
        format!("({body})")
    } else {
        body
    }
}

/// Render one instruction on a single line (nested blocks inline).
pub fn instr_to_string(instr: &Instr) -> String {
    match &instr.kind {
        InstrKind::Assign { target, value } => {
            format!("{} := {}", target.text, expr_to_string(value))
        }
        InstrKind::If {
            cond,
            then_blk,
            else_blk,
            has_else,
        } => {
            let mut s = format!("if {} then {}", expr_to_string(cond), block_inline(then_blk));
            if *has_else || !else_blk.is_empty() {
                s.push_str(&format!(" else {}", block_inline(else_blk)));
            }
            s.push_str(" end");
            s
        }
        InstrKind::Loop {
            init,
            exit_cond,
            invariant,
            body,
        } => {
            let mut s = format!("from {} until {}", block_inline(init), expr_to_string(exit_cond));
            if !invariant.is_empty() {
                s.push_str(" invariant");
                for clause in invariant {
                    s.push(' ');
                    s.push_str(&clause_to_string(clause));
                }
            }
            s.push_str(&format!(" loop {} end", block_inline(body)));
            s
        }
        InstrKind::Check { cond } => format!("check {} end", expr_to_string(cond)),
        InstrKind::Call { routine, args } => {
            if args.is_empty() {
                routine.text.clone()
            } else {
                let rendered: Vec<_> = args.iter().map(expr_to_string).collect();
                format!("{} ({})", routine.text, rendered.join(", "))
            }
        }
    }
}

fn block_inline(block: &Block) -> String {
    block
        .instrs
        .iter()
        .map(instr_to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn clause_to_string(clause: &LabeledClause) -> String {
    match &clause.label {
        Some(label) => format!("{}: {}", label.text, expr_to_string(&clause.predicate)),
        None => expr_to_string(&clause.predicate),
    }
}

/// Render a whole program in the canonical layout.
pub fn program_to_string(program: &Program) -> String {
    let mut out = String::new();
    for class in &program.classes {
        out.push_str(&format!("class {} feature\n", class.name.text));
        for attr in &class.attributes {
            out.push_str(&format!("  {}: {}\n", attr.name.text, attr.ty.name()));
        }
        for routine in &class.routines {
            out.push_str(&routine_to_string(routine));
        }
        if !class.invariant_clauses.is_empty() {
            out.push_str("invariant\n");
            for clause in &class.invariant_clauses {
                out.push_str(&format!("  {}\n", clause_to_string(clause)));
            }
        }
        out.push_str("end\n");
    }
    out
}

fn routine_to_string(routine: &RoutineDecl) -> String {
    let mut out = String::new();
    out.push_str(&format!("  {}", routine.name.text));
    if !routine.args.is_empty() {
        let args: Vec<_> = routine
            .args
            .iter()
            .map(|a| format!("{}: {}", a.name.text, a.ty.name()))
            .collect();
        out.push_str(&format!(" ({})", args.join(", ")));
    }
    if let Some(ty) = routine.return_type {
        out.push_str(&format!(": {}", ty.name()));
    }
    out.push('\n');
    if !routine.precondition.is_empty() {
        out.push_str("    require\n");
        for clause in &routine.precondition {
            out.push_str(&format!("      {}\n", clause_to_string(clause)));
        }
    }
    if let Some(modify) = &routine.modify {
        let names: Vec<_> = modify.iter().map(|n| n.text.clone()).collect();
        out.push_str(&format!("    modify {}\n", names.join(", ")));
    }
    if !routine.locals.is_empty() {
        out.push_str("    local\n");
        for decl in &routine.locals {
            out.push_str(&format!("      {}: {}\n", decl.name.text, decl.ty.name()));
        }
    }
    out.push_str("    do\n");
    for instr in &routine.body.instrs {
        out.push_str(&format!("      {}\n", instr_to_string(instr)));
    }
    if !routine.postcondition.is_empty() {
        out.push_str("    ensure\n");
        for clause in &routine.postcondition {
            out.push_str(&format!("      {}\n", clause_to_string(clause)));
        }
    }
    out.push_str("    end\n");
    out
}
