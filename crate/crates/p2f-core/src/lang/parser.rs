//! Recursive descent parser for MCL.
//!
//! Grammar (authoritative EBNF, also in `docs/mcl.md`):
//!
//! ```text
//! program  ::= class+
//! class    ::= "class" ID "feature" attr* routine* ["invariant" clause+] "end"
//! attr     ::= ID ":" ("INTEGER" | "BOOLEAN")
//! routine  ::= ID ["(" ID ":" type ("," ID ":" type)* ")"] [":" type]
//!              ["require" clause+] ["modify" ID ("," ID)*] ["local" attr+]
//!              "do" instr* ["ensure" clause+] "end"
//! clause   ::= [ID ":"] expr
//! instr    ::= ID ":=" expr | "if" expr "then" instr* ["else" instr*] "end"
//!            | "from" instr* "until" expr ["invariant" clause+] "loop" instr* "end"
//!            | "check" expr "end" | ID ["(" expr ("," expr)* ")"]
//! ```
//!
//! Operator precedence, loosest first: `implies` (right-assoc), `or`, `and`,
//! `not`, comparisons (non-chaining), `+ -`, `* \\`, unary `-`.

use super::ast::*;
use super::lexer::{tokenize, LexError};
use super::token::{Token, TokenKind};
use crate::span::Span;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{0}")]
    Lex(#[from] LexError),
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: String,
        found: String,
        span: Span,
    },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Lex(e) => e.span(),
            ParseError::Unexpected { span, .. } => *span,
        }
    }

    /// Render with 1-based line/column against the source text.
    pub fn render(&self, file: &str, source: &str) -> String {
        let (line, col) = self.span().line_col(source);
        format!("{file}:{line}:{col}: parse error: {self}")
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Parse a full MCL program. `file` is used only for diagnostics.
pub fn parse(file: &str, source: &str) -> ParseResult<Program> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_instr: 0,
        next_block: 0,
    };
    p.program(file, source.len())
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_instr: u32,
    next_block: u32,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_ahead(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> ParseResult<Token> {
        if self.at(&kind) {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&format!("{kind}")))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Unexpected {
            expected: expected.to_string(),
            found: format!("{}", t.kind),
            span: t.span,
        }
    }

    fn ident(&mut self) -> ParseResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                let t = self.advance();
                Ok(Ident::new(name, t.span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn ty(&mut self) -> ParseResult<Ty> {
        if self.eat(&TokenKind::IntegerTy) {
            Ok(Ty::Int)
        } else if self.eat(&TokenKind::BooleanTy) {
            Ok(Ty::Bool)
        } else {
            Err(self.unexpected("`INTEGER` or `BOOLEAN`"))
        }
    }

    fn new_instr_id(&mut self) -> InstrId {
        let id = InstrId(self.next_instr);
        self.next_instr += 1;
        id
    }

    fn new_block_id(&mut self) -> BlockId {
        let id = BlockId(self.next_block);
        self.next_block += 1;
        id
    }

    fn program(&mut self, file: &str, source_len: usize) -> ParseResult<Program> {
        let mut classes = Vec::new();
        while !self.at(&TokenKind::Eof) {
            classes.push(self.class()?);
        }
        if classes.is_empty() {
            return Err(self.unexpected("`class`"));
        }
        Ok(Program {
            file: file.to_string(),
            classes,
            span: Span::new(0, source_len),
        })
    }

    fn class(&mut self) -> ParseResult<ClassDecl> {
        let start = self.expect(TokenKind::Class)?.span;
        let name = self.ident()?;
        self.expect(TokenKind::Feature)?;

        let mut attributes = Vec::new();
        let mut routines = Vec::new();
        loop {
            match &self.peek().kind {
                TokenKind::Ident(_) => {
                    if self.is_attribute_decl() {
                        attributes.push(self.var_decl()?);
                    } else {
                        routines.push(self.routine()?);
                    }
                }
                _ => break,
            }
        }

        let mut invariant_clauses = Vec::new();
        if self.eat(&TokenKind::Invariant) {
            invariant_clauses = self.clause_list()?;
            if invariant_clauses.is_empty() {
                return Err(self.unexpected("invariant clause"));
            }
        }
        let end = self.expect(TokenKind::End)?.span;
        Ok(ClassDecl {
            name,
            attributes,
            routines,
            invariant_clauses,
            span: start.merge(end),
        })
    }

    /// At an `ID` in the feature section: attribute iff `ID : TYPE` is not
    /// followed by a routine-section keyword.
    fn is_attribute_decl(&self) -> bool {
        if self.peek_ahead(1).kind != TokenKind::Colon {
            return false;
        }
        match self.peek_ahead(2).kind {
            TokenKind::IntegerTy | TokenKind::BooleanTy => !matches!(
                self.peek_ahead(3).kind,
                TokenKind::Require | TokenKind::Modify | TokenKind::Local | TokenKind::Do
            ),
            _ => false,
        }
    }

    fn var_decl(&mut self) -> ParseResult<VarDecl> {
        let name = self.ident()?;
        self.expect(TokenKind::Colon)?;
        let ty_start = self.peek().span;
        let ty = self.ty()?;
        let span = name.span.merge(ty_start);
        Ok(VarDecl { name, ty, span })
    }

    fn routine(&mut self) -> ParseResult<RoutineDecl> {
        let name = self.ident()?;
        let start = name.span;

        let mut args = Vec::new();
        if self.eat(&TokenKind::LParen) {
            loop {
                args.push(self.var_decl()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RParen)?;
        }

        let return_type = if self.eat(&TokenKind::Colon) {
            Some(self.ty()?)
        } else {
            None
        };

        let mut precondition = Vec::new();
        let mut precondition_end = None;
        if self.eat(&TokenKind::Require) {
            precondition = self.clause_list()?;
            if precondition.is_empty() {
                return Err(self.unexpected("precondition clause"));
            }
            precondition_end = precondition.last().map(|c| c.span.end);
        }

        let contract_insert_at = self.peek().span.start;

        let mut modify = None;
        if self.eat(&TokenKind::Modify) {
            let mut names = vec![self.ident()?];
            while self.eat(&TokenKind::Comma) {
                names.push(self.ident()?);
            }
            modify = Some(names);
        }

        let mut locals = Vec::new();
        if self.eat(&TokenKind::Local) {
            while matches!(self.peek().kind, TokenKind::Ident(_)) {
                locals.push(self.var_decl()?);
            }
            if locals.is_empty() {
                return Err(self.unexpected("local declaration"));
            }
        }

        let do_tok = self.expect(TokenKind::Do)?;
        let body = self.block(do_tok.span.end)?;

        let mut postcondition = Vec::new();
        if self.eat(&TokenKind::Ensure) {
            postcondition = self.clause_list()?;
            if postcondition.is_empty() {
                return Err(self.unexpected("postcondition clause"));
            }
        }
        let end_span = self.expect(TokenKind::End)?.span;

        Ok(RoutineDecl {
            name,
            args,
            return_type,
            precondition,
            modify,
            locals,
            body,
            postcondition,
            span: start.merge(end_span),
            contract_insert_at,
            precondition_end,
            end_span,
        })
    }

    /// Instruction list; `empty_at` positions the span of an empty block.
    fn block(&mut self, empty_at: usize) -> ParseResult<Block> {
        let id = self.new_block_id();
        let mut instrs = Vec::new();
        while self.starts_instr() {
            instrs.push(self.instr()?);
        }
        let span = match (instrs.first(), instrs.last()) {
            (Some(first), Some(last)) => Span::new(first.span.start, last.span.end),
            _ => Span::point(empty_at),
        };
        Ok(Block { id, instrs, span })
    }

    fn starts_instr(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::Ident(_) | TokenKind::If | TokenKind::From | TokenKind::Check
        )
    }

    fn instr(&mut self) -> ParseResult<Instr> {
        let id = self.new_instr_id();
        match self.peek().kind.clone() {
            TokenKind::Ident(_) => {
                let name = self.ident()?;
                if self.eat(&TokenKind::Assign) {
                    let value = self.expr()?;
                    let span = name.span.merge(value.span);
                    Ok(Instr {
                        id,
                        kind: InstrKind::Assign {
                            target: name,
                            value,
                        },
                        span,
                    })
                } else if self.at(&TokenKind::LParen) {
                    self.advance();
                    let mut call_args = vec![self.expr()?];
                    while self.eat(&TokenKind::Comma) {
                        call_args.push(self.expr()?);
                    }
                    let rparen = self.expect(TokenKind::RParen)?;
                    let span = name.span.merge(rparen.span);
                    Ok(Instr {
                        id,
                        kind: InstrKind::Call {
                            routine: name,
                            args: call_args,
                        },
                        span,
                    })
                } else {
                    // bare call with no arguments
                    let span = name.span;
                    Ok(Instr {
                        id,
                        kind: InstrKind::Call {
                            routine: name,
                            args: Vec::new(),
                        },
                        span,
                    })
                }
            }
            TokenKind::If => {
                let start = self.advance().span;
                let cond = self.expr()?;
                let then_tok = self.expect(TokenKind::Then)?;
                let then_blk = self.block(then_tok.span.end)?;
                let (else_blk, has_else) = if self.at(&TokenKind::Else) {
                    let else_tok = self.advance();
                    (self.block(else_tok.span.end)?, true)
                } else {
                    (
                        Block {
                            id: self.new_block_id(),
                            instrs: Vec::new(),
                            span: Span::point(self.peek().span.start),
                        },
                        false,
                    )
                };
                let end = self.expect(TokenKind::End)?.span;
                Ok(Instr {
                    id,
                    kind: InstrKind::If {
                        cond,
                        then_blk,
                        else_blk,
                        has_else,
                    },
                    span: start.merge(end),
                })
            }
            TokenKind::From => {
                let start = self.advance().span;
                let init = self.block(start.end)?;
                self.expect(TokenKind::Until)?;
                let exit_cond = self.expr()?;
                let mut invariant = Vec::new();
                if self.eat(&TokenKind::Invariant) {
                    invariant = self.clause_list()?;
                    if invariant.is_empty() {
                        return Err(self.unexpected("loop invariant clause"));
                    }
                }
                let loop_tok = self.expect(TokenKind::Loop)?;
                let body = self.block(loop_tok.span.end)?;
                let end = self.expect(TokenKind::End)?.span;
                Ok(Instr {
                    id,
                    kind: InstrKind::Loop {
                        init,
                        exit_cond,
                        invariant,
                        body,
                    },
                    span: start.merge(end),
                })
            }
            TokenKind::Check => {
                let start = self.advance().span;
                let cond = self.expr()?;
                let end = self.expect(TokenKind::End)?.span;
                Ok(Instr {
                    id,
                    kind: InstrKind::Check { cond },
                    span: start.merge(end),
                })
            }
            _ => Err(self.unexpected("instruction")),
        }
    }

    fn clause_list(&mut self) -> ParseResult<Vec<LabeledClause>> {
        let mut clauses = Vec::new();
        while self.starts_clause() {
            clauses.push(self.clause()?);
        }
        Ok(clauses)
    }

    fn starts_clause(&self) -> bool {
        match self.peek().kind {
            TokenKind::Ident(_) => true,
            TokenKind::Int(_)
            | TokenKind::True
            | TokenKind::False
            | TokenKind::Not
            | TokenKind::Minus
            | TokenKind::Old
            | TokenKind::LParen => true,
            _ => false,
        }
    }

    fn clause(&mut self) -> ParseResult<LabeledClause> {
        let label = if matches!(self.peek().kind, TokenKind::Ident(_))
            && self.peek_ahead(1).kind == TokenKind::Colon
        {
            let l = self.ident()?;
            self.expect(TokenKind::Colon)?;
            Some(l)
        } else {
            None
        };
        let predicate = self.expr()?;
        let span = match &label {
            Some(l) => l.span.merge(predicate.span),
            None => predicate.span,
        };
        Ok(LabeledClause {
            label,
            predicate,
            span,
        })
    }

    fn expr(&mut self) -> ParseResult<Expr> {
        self.implies_expr()
    }

    fn implies_expr(&mut self) -> ParseResult<Expr> {
        let lhs = self.or_expr()?;
        if self.eat(&TokenKind::Implies) {
            // right-associative
            let rhs = self.implies_expr()?;
            let span = lhs.span.merge(rhs.span);
            Ok(Expr::new(
                ExprKind::Binary(BinOp::Implies, Box::new(lhs), Box::new(rhs)),
                span,
            ))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&TokenKind::Or) {
            let rhs = self.and_expr()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat(&TokenKind::And) {
            let rhs = self.not_expr()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> ParseResult<Expr> {
        if self.at(&TokenKind::Not) {
            let start = self.advance().span;
            let inner = self.not_expr()?;
            let span = start.merge(inner.span);
            Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(inner)), span))
        } else {
            self.comparison_expr()
        }
    }

    fn comparison_expr(&mut self) -> ParseResult<Expr> {
        let lhs = self.additive_expr()?;
        let op = match self.peek().kind {
            TokenKind::Eq => Some(BinOp::Eq),
            TokenKind::Ne => Some(BinOp::Ne),
            TokenKind::Lt => Some(BinOp::Lt),
            TokenKind::Le => Some(BinOp::Le),
            TokenKind::Gt => Some(BinOp::Gt),
            TokenKind::Ge => Some(BinOp::Ge),
            _ => None,
        };
        match op {
            Some(op) => {
                self.advance();
                let rhs = self.additive_expr()?;
                let span = lhs.span.merge(rhs.span);
                Ok(Expr::new(
                    ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                    span,
                ))
            }
            None => Ok(lhs),
        }
    }

    fn additive_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.multiplicative_expr()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative_expr()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn multiplicative_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Backslash2 => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.unary_expr()?;
            let span = lhs.span.merge(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> ParseResult<Expr> {
        if self.at(&TokenKind::Minus) {
            let start = self.advance().span;
            let inner = self.unary_expr()?;
            let span = start.merge(inner.span);
            Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(inner)), span))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> ParseResult<Expr> {
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                let t = self.advance();
                Ok(Expr::new(ExprKind::IntLit(n), t.span))
            }
            TokenKind::True => {
                let t = self.advance();
                Ok(Expr::new(ExprKind::BoolLit(true), t.span))
            }
            TokenKind::False => {
                let t = self.advance();
                Ok(Expr::new(ExprKind::BoolLit(false), t.span))
            }
            TokenKind::Old => {
                let start = self.advance().span;
                let name = self.ident()?;
                let span = start.merge(name.span);
                Ok(Expr::new(ExprKind::Old(name), span))
            }
            TokenKind::Ident(name) => {
                let t = self.advance();
                Ok(Expr::new(ExprKind::Var(name), t.span))
            }
            TokenKind::LParen => {
                let start = self.advance().span;
                let inner = self.expr()?;
                let end = self.expect(TokenKind::RParen)?.span;
                // keep the parenthesized extent so patches replace whole groups
                Ok(Expr::new(inner.kind, start.merge(end)))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Program {
        parse("test.mcl", src).expect("parse failed")
    }

    #[test]
    fn empty_class() {
        let p = parse_ok("class C feature end");
        assert_eq!(p.classes.len(), 1);
        assert_eq!(p.classes[0].attributes.len(), 0);
        assert_eq!(p.classes[0].routines.len(), 0);
    }

    #[test]
    fn attribute_vs_function_disambiguation() {
        let p = parse_ok(
            "class C feature\n\
             x: INTEGER\n\
             f: INTEGER do Result := 1 end\n\
             end",
        );
        let c = &p.classes[0];
        assert_eq!(c.attributes.len(), 1);
        assert_eq!(c.routines.len(), 1);
        assert!(c.routines[0].is_function());
    }

    #[test]
    fn routine_sections_and_spans() {
        let src = "class C feature\n\
                   x: INTEGER\n\
                   r (a: INTEGER) require pos: a > 0 modify x local t: INTEGER do\n\
                   t := a\n\
                   x := t\n\
                   ensure set: x = a\n\
                   end\n\
                   end";
        let p = parse_ok(src);
        let r = &p.classes[0].routines[0];
        assert_eq!(r.args.len(), 1);
        assert_eq!(r.precondition.len(), 1);
        assert_eq!(r.precondition[0].label.as_ref().unwrap().text, "pos");
        assert_eq!(r.modify.as_ref().unwrap().len(), 1);
        assert_eq!(r.locals.len(), 1);
        assert_eq!(r.body.instrs.len(), 2);
        assert_eq!(r.postcondition.len(), 1);
        assert!(r.body.span.within(r.span));
        assert!(&src[r.end_span.start..r.end_span.end] == "end");
    }

    #[test]
    fn expression_precedence() {
        let p = parse_ok("class C feature x: INTEGER r do check x + 1 * 2 = 3 implies True end end end");
        let r = &p.classes[0].routines[0];
        let InstrKind::Check { cond } = &r.body.instrs[0].kind else {
            panic!()
        };
        // implies at the top
        let ExprKind::Binary(BinOp::Implies, lhs, _) = &cond.kind else {
            panic!("expected implies at top, got {:?}", cond.kind)
        };
        let ExprKind::Binary(BinOp::Eq, add, _) = &lhs.kind else {
            panic!()
        };
        let ExprKind::Binary(BinOp::Add, _, mul) = &add.kind else {
            panic!()
        };
        assert!(matches!(mul.kind, ExprKind::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn loop_and_if_structure() {
        let src = "class C feature\n\
                   n: INTEGER\n\
                   r modify n do\n\
                   from n := 0 until n >= 3 invariant small: n <= 3 loop n := n + 1 end\n\
                   if n = 3 then n := 0 else check True end end\n\
                   end\n\
                   end";
        let p = parse_ok(src);
        let body = &p.classes[0].routines[0].body;
        assert_eq!(body.instrs.len(), 2);
        assert!(matches!(body.instrs[0].kind, InstrKind::Loop { .. }));
        let InstrKind::If {
            then_blk, else_blk, ..
        } = &body.instrs[1].kind
        else {
            panic!()
        };
        assert_eq!(then_blk.instrs.len(), 1);
        assert_eq!(else_blk.instrs.len(), 1);
    }

    #[test]
    fn bare_and_parenthesized_calls() {
        let p = parse_ok("class C feature r do s t(1, 2) end s do end t (a: INTEGER, b: INTEGER) do end end");
        let body = &p.classes[0].routines[0].body;
        assert!(matches!(
            &body.instrs[0].kind,
            InstrKind::Call { routine, args } if routine.text == "s" && args.is_empty()
        ));
        assert!(matches!(
            &body.instrs[1].kind,
            InstrKind::Call { routine, args } if routine.text == "t" && args.len() == 2
        ));
    }

    #[test]
    fn old_binds_one_identifier() {
        let p = parse_ok("class C feature x: INTEGER r modify x do x := 0 ensure p: old x = 1 end end");
        let post = &p.classes[0].routines[0].postcondition[0];
        let ExprKind::Binary(BinOp::Eq, lhs, _) = &post.predicate.kind else {
            panic!()
        };
        assert!(matches!(&lhs.kind, ExprKind::Old(id) if id.text == "x"));
    }

    #[test]
    fn error_has_position() {
        let err = parse("t.mcl", "class C feature x: end").unwrap_err();
        assert!(err.span().start > 0);
        assert!(err.render("t.mcl", "class C feature x: end").contains("t.mcl:1:"));
    }

    #[test]
    fn unlabeled_clause_sequences() {
        let p = parse_ok("class C feature x: INTEGER r require x > 0 x < 9 do end end");
        assert_eq!(p.classes[0].routines[0].precondition.len(), 2);
    }

    #[test]
    fn instr_ids_are_unique() {
        let p = parse_ok("class C feature x: INTEGER r modify x do x := 1 if x = 1 then x := 2 end end end");
        let ids: Vec<_> = p.classes[0].routines[0].body.all_instrs().iter().map(|i| i.id).collect();
        let mut dedup = ids.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(ids.len(), dedup.len());
    }
}
