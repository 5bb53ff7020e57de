//! Static checks for parsed MCL programs.
//!
//! Beyond expression typing this enforces the structural rules the verifier
//! depends on: name resolution, frame discipline (`modify`), purity of
//! functions, and the placement of `old`. Passing programs are wrapped in
//! [`TypedProgram`], which the later pipeline stages take as input.

use super::ast::*;
use crate::span::Span;
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message}")]
pub struct TypeError {
    pub message: String,
    pub span: Span,
}

impl TypeError {
    fn new(message: impl Into<String>, span: Span) -> Self {
        TypeError {
            message: message.into(),
            span,
        }
    }

    pub fn render(&self, file: &str, source: &str) -> String {
        let (line, col) = self.span.line_col(source);
        format!("{file}:{line}:{col}: type error: {self}")
    }
}

/// How a name resolves inside a routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Attribute,
    Argument,
    Local,
    Result,
}

impl VarKind {
    /// Assignment targets are attributes, locals, and `Result`.
    pub fn assignable(self) -> bool {
        !matches!(self, VarKind::Argument)
    }
}

/// A program that passed all static checks.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    program: Program,
}

pub fn typecheck(program: Program) -> Result<TypedProgram, Vec<TypeError>> {
    let mut checker = Checker::default();
    checker.check_program(&program);
    if checker.errors.is_empty() {
        Ok(TypedProgram { program })
    } else {
        Err(checker.errors)
    }
}

impl TypedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.program.class(name)
    }

    /// Resolve a plain variable reference within `routine` of `class`.
    pub fn resolve(&self, class: &ClassDecl, routine: &RoutineDecl, name: &str) -> Option<(VarKind, Ty)> {
        resolve_in(class, routine, name)
    }

    /// The attributes a routine may modify: the declared `modify` list, all
    /// attributes for commands without one, nothing for functions.
    pub fn effective_modify(&self, class: &ClassDecl, routine: &RoutineDecl) -> BTreeSet<String> {
        effective_modify(class, routine)
    }

    /// Type of an expression already known to be well-formed.
    pub fn expr_ty(&self, class: &ClassDecl, routine: &RoutineDecl, expr: &Expr) -> Ty {
        expr_ty_in(class, routine, expr)
    }
}

fn resolve_in(class: &ClassDecl, routine: &RoutineDecl, name: &str) -> Option<(VarKind, Ty)> {
    if name == "Result" {
        return routine.return_type.map(|ty| (VarKind::Result, ty));
    }
    if let Some(a) = routine.args.iter().find(|a| a.name.text == name) {
        return Some((VarKind::Argument, a.ty));
    }
    if let Some(l) = routine.locals.iter().find(|l| l.name.text == name) {
        return Some((VarKind::Local, l.ty));
    }
    if let Some(a) = class.attribute(name) {
        return Some((VarKind::Attribute, a.ty));
    }
    None
}

fn effective_modify(class: &ClassDecl, routine: &RoutineDecl) -> BTreeSet<String> {
    if routine.is_function() {
        return BTreeSet::new();
    }
    match &routine.modify {
        Some(names) => names.iter().map(|n| n.text.clone()).collect(),
        None => class.attributes.iter().map(|a| a.name.text.clone()).collect(),
    }
}

fn expr_ty_in(class: &ClassDecl, routine: &RoutineDecl, expr: &Expr) -> Ty {
    match &expr.kind {
        ExprKind::IntLit(_) => Ty::Int,
        ExprKind::BoolLit(_) => Ty::Bool,
        ExprKind::Var(name) => resolve_in(class, routine, name).map(|(_, ty)| ty).unwrap_or(Ty::Int),
        ExprKind::Old(name) => class
            .attribute(&name.text)
            .map(|a| a.ty)
            .unwrap_or(Ty::Int),
        ExprKind::Unary(UnOp::Neg, _) => Ty::Int,
        ExprKind::Unary(UnOp::Not, _) => Ty::Bool,
        ExprKind::Binary(op, _, _) => {
            if op.is_arith() {
                Ty::Int
            } else {
                Ty::Bool
            }
        }
    }
}

/// Contexts in which an expression may appear; controls `old` and purity.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ExprCtx {
    Body,
    Precondition,
    Postcondition,
    LoopInvariant,
    ClassInvariant,
}

impl ExprCtx {
    fn allows_old(self) -> bool {
        matches!(self, ExprCtx::Postcondition | ExprCtx::LoopInvariant)
    }
}

#[derive(Default)]
struct Checker {
    errors: Vec<TypeError>,
}

impl Checker {
    fn error(&mut self, message: impl Into<String>, span: Span) {
        self.errors.push(TypeError::new(message, span));
    }

    fn check_program(&mut self, program: &Program) {
        let mut class_names = HashSet::new();
        for class in &program.classes {
            if !class_names.insert(class.name.text.clone()) {
                self.error(
                    format!("duplicate class `{}`", class.name.text),
                    class.name.span,
                );
            }
            self.check_class(class);
        }
    }

    fn check_class(&mut self, class: &ClassDecl) {
        let mut attr_names = HashSet::new();
        for attr in &class.attributes {
            if !attr_names.insert(attr.name.text.clone()) {
                self.error(
                    format!("duplicate attribute `{}`", attr.name.text),
                    attr.name.span,
                );
            }
            if attr.name.text == "Result" {
                self.error("`Result` is reserved", attr.name.span);
            }
        }
        let mut routine_names = HashSet::new();
        for routine in &class.routines {
            if !routine_names.insert(routine.name.text.clone()) {
                self.error(
                    format!("duplicate routine `{}`", routine.name.text),
                    routine.name.span,
                );
            }
            if class.attribute(&routine.name.text).is_some() {
                self.error(
                    format!(
                        "routine `{}` collides with an attribute of the same name",
                        routine.name.text
                    ),
                    routine.name.span,
                );
            }
        }
        for clause in &class.invariant_clauses {
            // class invariants speak about attributes only
            let dummy = dummy_routine();
            self.check_clause(class, &dummy, clause, ExprCtx::ClassInvariant);
        }
        for routine in &class.routines {
            self.check_routine(class, routine);
        }
    }

    fn check_routine(&mut self, class: &ClassDecl, routine: &RoutineDecl) {
        // args and locals: unique, no shadowing of attributes or each other
        let mut seen = HashSet::new();
        for decl in routine.args.iter().chain(routine.locals.iter()) {
            if decl.name.text == "Result" {
                self.error("`Result` is reserved", decl.name.span);
                continue;
            }
            if !seen.insert(decl.name.text.clone()) {
                self.error(
                    format!("duplicate name `{}` in routine `{}`", decl.name.text, routine.name.text),
                    decl.name.span,
                );
            }
            if class.attribute(&decl.name.text).is_some() {
                self.error(
                    format!("`{}` shadows an attribute", decl.name.text),
                    decl.name.span,
                );
            }
        }

        if let Some(modify) = &routine.modify {
            if routine.is_function() && !modify.is_empty() {
                self.error(
                    format!("function `{}` must not declare a modify clause", routine.name.text),
                    routine.name.span,
                );
            }
            let mut listed = HashSet::new();
            for name in modify {
                if class.attribute(&name.text).is_none() {
                    self.error(
                        format!("modify clause names unknown attribute `{}`", name.text),
                        name.span,
                    );
                }
                if !listed.insert(name.text.clone()) {
                    self.error(format!("duplicate `{}` in modify clause", name.text), name.span);
                }
            }
        }

        for clause in &routine.precondition {
            self.check_clause(class, routine, clause, ExprCtx::Precondition);
        }
        for clause in &routine.postcondition {
            self.check_clause(class, routine, clause, ExprCtx::Postcondition);
        }

        let frame = effective_modify(class, routine);
        self.check_block(class, routine, &routine.body, &frame);
    }

    fn check_block(
        &mut self,
        class: &ClassDecl,
        routine: &RoutineDecl,
        block: &Block,
        frame: &BTreeSet<String>,
    ) {
        for instr in &block.instrs {
            self.check_instr(class, routine, instr, frame);
        }
    }

    fn check_instr(
        &mut self,
        class: &ClassDecl,
        routine: &RoutineDecl,
        instr: &Instr,
        frame: &BTreeSet<String>,
    ) {
        match &instr.kind {
            InstrKind::Assign { target, value } => {
                let value_ty = self.check_expr(class, routine, value, ExprCtx::Body);
                match resolve_in(class, routine, &target.text) {
                    None => self.error(
                        format!("unknown name `{}`", target.text),
                        target.span,
                    ),
                    Some((kind, ty)) => {
                        if !kind.assignable() {
                            self.error(
                                format!("cannot assign to argument `{}`", target.text),
                                target.span,
                            );
                        }
                        if kind == VarKind::Attribute {
                            if routine.is_function() {
                                self.error(
                                    format!(
                                        "function `{}` assigns attribute `{}`",
                                        routine.name.text, target.text
                                    ),
                                    instr.span,
                                );
                            } else if !frame.contains(&target.text) {
                                self.error(
                                    format!(
                                        "assignment to `{}` outside the modify clause of `{}`",
                                        target.text, routine.name.text
                                    ),
                                    instr.span,
                                );
                            }
                        }
                        if let Some(vty) = value_ty {
                            if vty != ty {
                                self.error(
                                    format!(
                                        "cannot assign {} expression to `{}` of type {}",
                                        vty.name(),
                                        target.text,
                                        ty.name()
                                    ),
                                    instr.span,
                                );
                            }
                        }
                    }
                }
            }
            InstrKind::If {
                cond,
                then_blk,
                else_blk,
                ..
            } => {
                self.expect_bool(class, routine, cond, ExprCtx::Body, "if condition");
                self.check_block(class, routine, then_blk, frame);
                self.check_block(class, routine, else_blk, frame);
            }
            InstrKind::Loop {
                init,
                exit_cond,
                invariant,
                body,
            } => {
                self.check_block(class, routine, init, frame);
                self.expect_bool(class, routine, exit_cond, ExprCtx::Body, "loop exit condition");
                for clause in invariant {
                    self.check_clause(class, routine, clause, ExprCtx::LoopInvariant);
                }
                self.check_block(class, routine, body, frame);
            }
            InstrKind::Check { cond } => {
                self.expect_bool(class, routine, cond, ExprCtx::Body, "check condition");
            }
            InstrKind::Call {
                routine: callee_name,
                args,
            } => {
                if routine.is_function() {
                    self.error(
                        format!("function `{}` calls a command", routine.name.text),
                        instr.span,
                    );
                }
                let Some(callee) = class.routine(&callee_name.text) else {
                    self.error(
                        format!("unknown routine `{}`", callee_name.text),
                        callee_name.span,
                    );
                    for arg in args {
                        self.check_expr(class, routine, arg, ExprCtx::Body);
                    }
                    return;
                };
                if callee.is_function() {
                    self.error(
                        format!("`{}` is a function and cannot be called as an instruction", callee_name.text),
                        callee_name.span,
                    );
                }
                if args.len() != callee.args.len() {
                    self.error(
                        format!(
                            "`{}` takes {} argument(s), {} given",
                            callee_name.text,
                            callee.args.len(),
                            args.len()
                        ),
                        instr.span,
                    );
                }
                for (actual, formal) in args.iter().zip(callee.args.iter()) {
                    if let Some(ty) = self.check_expr(class, routine, actual, ExprCtx::Body) {
                        if ty != formal.ty {
                            self.error(
                                format!(
                                    "argument `{}` of `{}` expects {}",
                                    formal.name.text,
                                    callee_name.text,
                                    formal.ty.name()
                                ),
                                actual.span,
                            );
                        }
                    }
                }
                // frame containment: a call's effects must fit the caller's frame
                if !routine.is_function() {
                    let callee_frame = effective_modify(class, callee);
                    for touched in &callee_frame {
                        if !frame.contains(touched) {
                            self.error(
                                format!(
                                    "call to `{}` may modify `{}`, which is outside the modify clause of `{}`",
                                    callee_name.text, touched, routine.name.text
                                ),
                                instr.span,
                            );
                        }
                    }
                }
            }
        }
    }

    fn check_clause(
        &mut self,
        class: &ClassDecl,
        routine: &RoutineDecl,
        clause: &LabeledClause,
        ctx: ExprCtx,
    ) {
        self.expect_bool(class, routine, &clause.predicate, ctx, "contract clause");
    }

    fn expect_bool(
        &mut self,
        class: &ClassDecl,
        routine: &RoutineDecl,
        expr: &Expr,
        ctx: ExprCtx,
        what: &str,
    ) {
        if let Some(ty) = self.check_expr(class, routine, expr, ctx) {
            if ty != Ty::Bool {
                self.error(format!("{what} must be BOOLEAN"), expr.span);
            }
        }
    }

    /// Returns the type, or None when an error was already reported below.
    fn check_expr(
        &mut self,
        class: &ClassDecl,
        routine: &RoutineDecl,
        expr: &Expr,
        ctx: ExprCtx,
    ) -> Option<Ty> {
        match &expr.kind {
            ExprKind::IntLit(_) => Some(Ty::Int),
            ExprKind::BoolLit(_) => Some(Ty::Bool),
            ExprKind::Var(name) => {
                if ctx == ExprCtx::ClassInvariant {
                    match class.attribute(name) {
                        Some(a) => Some(a.ty),
                        None => {
                            self.error(
                                format!("class invariant references non-attribute `{name}`"),
                                expr.span,
                            );
                            None
                        }
                    }
                } else {
                    match resolve_in(class, routine, name) {
                        Some((_, ty)) => Some(ty),
                        None => {
                            self.error(format!("unknown name `{name}`"), expr.span);
                            None
                        }
                    }
                }
            }
            ExprKind::Old(name) => {
                if !ctx.allows_old() {
                    self.error(
                        "`old` is only allowed in postconditions and loop invariants",
                        expr.span,
                    );
                }
                match class.attribute(&name.text) {
                    Some(a) => Some(a.ty),
                    None => {
                        self.error(
                            format!("`old` applies to attributes, `{}` is not one", name.text),
                            name.span,
                        );
                        None
                    }
                }
            }
            ExprKind::Unary(UnOp::Neg, inner) => {
                let ty = self.check_expr(class, routine, inner, ctx)?;
                if ty != Ty::Int {
                    self.error("unary `-` needs an INTEGER operand", expr.span);
                    return None;
                }
                Some(Ty::Int)
            }
            ExprKind::Unary(UnOp::Not, inner) => {
                let ty = self.check_expr(class, routine, inner, ctx)?;
                if ty != Ty::Bool {
                    self.error("`not` needs a BOOLEAN operand", expr.span);
                    return None;
                }
                Some(Ty::Bool)
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let lt = self.check_expr(class, routine, lhs, ctx);
                let rt = self.check_expr(class, routine, rhs, ctx);
                let (lt, rt) = (lt?, rt?);
                if op.is_arith() {
                    if lt != Ty::Int || rt != Ty::Int {
                        self.error("arithmetic needs INTEGER operands", expr.span);
                        return None;
                    }
                    Some(Ty::Int)
                } else if op.is_comparison() {
                    if lt != rt {
                        self.error("comparison operands must have the same type", expr.span);
                        return None;
                    }
                    if !matches!(op, BinOp::Eq | BinOp::Ne) && lt != Ty::Int {
                        self.error("ordering comparisons need INTEGER operands", expr.span);
                        return None;
                    }
                    Some(Ty::Bool)
                } else {
                    if lt != Ty::Bool || rt != Ty::Bool {
                        self.error("boolean connectives need BOOLEAN operands", expr.span);
                        return None;
                    }
                    Some(Ty::Bool)
                }
            }
        }
    }
}

fn dummy_routine() -> RoutineDecl {
    RoutineDecl {
        name: Ident::new("<invariant>", Span::default()),
        args: Vec::new(),
        return_type: None,
        precondition: Vec::new(),
        modify: Some(Vec::new()),
        locals: Vec::new(),
        body: Block {
            id: BlockId(u32::MAX),
            instrs: Vec::new(),
            span: Span::default(),
        },
        postcondition: Vec::new(),
        span: Span::default(),
        contract_insert_at: 0,
        precondition_end: None,
        end_span: Span::default(),
    }
}

/// Convenience: all (class, routine) pairs of a typed program.
pub fn routines_of(tp: &TypedProgram) -> Vec<(&ClassDecl, &RoutineDecl)> {
    let mut out = Vec::new();
    for class in &tp.program().classes {
        for routine in &class.routines {
            out.push((class, routine));
        }
    }
    out
}

/// Keep a map from instruction id to its enclosing container: the `if`/loop
/// instruction holding its block, or none for top-level instructions.
pub fn parent_instr_map(routine: &RoutineDecl) -> HashMap<InstrId, Option<InstrId>> {
    let mut map = HashMap::new();
    fn walk(block: &Block, parent: Option<InstrId>, map: &mut HashMap<InstrId, Option<InstrId>>) {
        for instr in &block.instrs {
            map.insert(instr.id, parent);
            match &instr.kind {
                InstrKind::If {
                    then_blk, else_blk, ..
                } => {
                    walk(then_blk, Some(instr.id), map);
                    walk(else_blk, Some(instr.id), map);
                }
                InstrKind::Loop { init, body, .. } => {
                    walk(init, Some(instr.id), map);
                    walk(body, Some(instr.id), map);
                }
                _ => {}
            }
        }
    }
    walk(&routine.body, None, &mut map);
    map
}

/// Block that directly holds each instruction.
pub fn enclosing_block_map(routine: &RoutineDecl) -> HashMap<InstrId, BlockId> {
    let mut map = HashMap::new();
    fn walk(block: &Block, map: &mut HashMap<InstrId, BlockId>) {
        for instr in &block.instrs {
            map.insert(instr.id, block.id);
            match &instr.kind {
                InstrKind::If {
                    then_blk, else_blk, ..
                } => {
                    walk(then_blk, map);
                    walk(else_blk, map);
                }
                InstrKind::Loop { init, body, .. } => {
                    walk(init, map);
                    walk(body, map);
                }
                _ => {}
            }
        }
    }
    walk(&routine.body, &mut map);
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;

    fn check(src: &str) -> Result<TypedProgram, Vec<TypeError>> {
        typecheck(parse("t.mcl", src).expect("parse"))
    }

    fn errors(src: &str) -> Vec<TypeError> {
        check(src).err().unwrap_or_default()
    }

    #[test]
    fn accepts_well_typed_class() {
        assert!(check(
            "class C feature\n\
             x: INTEGER\n\
             b: BOOLEAN\n\
             set (v: INTEGER) modify x do x := v ensure done: x = v end\n\
             invariant x_ok: x >= 0 or b\n\
             end"
        )
        .is_ok());
    }

    #[test]
    fn bool_assigned_to_int_is_an_error() {
        let errs = errors("class C feature x: INTEGER r modify x do x := True end end");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("cannot assign"));
    }

    #[test]
    fn frame_violation_points_at_assignment() {
        let src = "class C feature hours: INTEGER r modify do hours := 1 end end";
        // `modify` with empty list is a parse error, use a different attribute
        let src2 = "class C feature hours: INTEGER other: INTEGER r modify other do hours := 1 end end";
        assert!(parse("t.mcl", src).is_err() || !errors(src).is_empty());
        let errs = errors(src2);
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("outside the modify clause"));
    }

    #[test]
    fn modulo_by_zero_typechecks() {
        // semantic concern, handled by the verifier as an obligation
        assert!(check(
            "class C feature f (a: INTEGER): INTEGER do Result := a ensure ok: Result = a \\\\ 0 end end"
        )
        .is_ok());
    }

    #[test]
    fn old_outside_postcondition_rejected() {
        let errs = errors("class C feature x: INTEGER r require old x = 1 modify x do x := 0 end end");
        assert!(errs.iter().any(|e| e.message.contains("`old`")));
    }

    #[test]
    fn functions_must_be_pure() {
        let errs = errors(
            "class C feature x: INTEGER\n\
             c modify x do x := 1 end\n\
             f: INTEGER do x := 2 ensure t: True end\n\
             g: INTEGER do c ensure t: True end\n\
             end",
        );
        assert!(errs.iter().any(|e| e.message.contains("assigns attribute")));
        assert!(errs.iter().any(|e| e.message.contains("calls a command")));
    }

    #[test]
    fn call_frame_containment() {
        let errs = errors(
            "class C feature x: INTEGER y: INTEGER\n\
             inner modify x, y do x := 1 y := 1 end\n\
             outer modify x do inner end\n\
             end",
        );
        assert!(errs.iter().any(|e| e.message.contains("outside the modify clause of `outer`")));
    }

    #[test]
    fn calls_target_commands_only() {
        let errs = errors(
            "class C feature\n\
             f: INTEGER do Result := 1 ensure t: True end\n\
             r do f end\n\
             end",
        );
        assert!(errs.iter().any(|e| e.message.contains("cannot be called")));
    }

    #[test]
    fn arguments_are_immutable() {
        let errs = errors("class C feature r (a: INTEGER) do a := 1 end end");
        assert!(errs.iter().any(|e| e.message.contains("cannot assign to argument")));
    }

    #[test]
    fn deterministic_error_order() {
        let src = "class C feature r do x := 1 y := 2 end end";
        let a = errors(src);
        let b = errors(src);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a[0].span.start < a[1].span.start);
    }

    #[test]
    fn diagnostics_stay_in_bounds() {
        let src = "class C feature r do x := 1 end end";
        for e in errors(src) {
            assert!(e.span.end <= src.len());
        }
    }
}
