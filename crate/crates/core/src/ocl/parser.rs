//! Recursive-descent parser for OCL expressions.
//!
//! Precedence, loosest first: `let`/`if` prefix forms, `or`, `and`,
//! comparison (non-associative), `+ -`, `* /`, unary `not`/`-`, then
//! postfix navigation (`.name`, `.op()`, `->op(...)`, `@pre`).

use std::sync::Arc;

use super::{ArithOp, BoolOp, CmpOp, CollectionOp, Expr, ExprKind, LetBinding, StandardOp, Type};
use crate::diag::{DiagCode, Diagnostic};
use crate::lexer::{tokenize, Tok, Token};
use crate::span::Span;

/// Words that cannot be used as variable names inside expressions.
pub const RESERVED: &[&str] = &[
    "and", "or", "not", "if", "then", "else", "endif", "let", "in", "true", "false",
];

pub type PResult<T> = Result<T, Diagnostic>;

/// Token cursor with the expression grammar. The model parser drives the
/// same cursor for the surrounding declarations.
pub struct ExprParser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> ExprParser<'t> {
    pub fn new(toks: &'t [Token]) -> Self {
        debug_assert!(matches!(toks.last(), Some(Token { tok: Tok::Eof, .. })));
        ExprParser { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    pub fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(DiagCode::SyntaxError, self.span(), msg)
    }

    pub fn unexpected(&self, wanted: &str) -> Diagnostic {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn expect(&mut self, tok: &Tok) -> PResult<Span> {
        if self.peek() == tok {
            let span = self.span();
            self.bump();
            Ok(span)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    pub fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.span();
                self.bump();
                Ok((s, span))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn var_name(&mut self) -> PResult<(String, Span)> {
        let (name, span) = self.ident()?;
        if RESERVED.contains(&name.as_str()) {
            return Err(Diagnostic::error(
                DiagCode::SyntaxError,
                span,
                format!("`{name}` is a reserved word"),
            ));
        }
        Ok((name, span))
    }

    /// `Integer | Real | Boolean | String | Date | Name | Set(Name)`.
    /// A bare name is read as an object type; the checker turns it into
    /// an enum type when the name denotes an enumeration.
    pub fn type_ref(&mut self) -> PResult<Type> {
        let (name, _) = self.ident()?;
        Ok(match name.as_str() {
            "Integer" => Type::Integer,
            "Real" => Type::Real,
            "Boolean" => Type::Boolean,
            "String" => Type::String,
            "Date" => Type::Date,
            "Set" => {
                self.expect(&Tok::LParen)?;
                let (inner, _) = self.ident()?;
                self.expect(&Tok::RParen)?;
                Type::Set(inner)
            }
            _ => Type::Object(name),
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        if self.is_word("let") {
            return self.let_expr();
        }
        self.or_expr()
    }

    fn let_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        self.expect_word("let")?;
        let (name, _) = self.var_name()?;
        let declared = if self.eat(&Tok::Colon) {
            Some(self.type_ref()?)
        } else {
            None
        };
        let init = if self.eat(&Tok::Eq) {
            Some(self.expr()?)
        } else {
            None
        };
        if declared.is_none() && init.is_none() {
            return Err(self.error("`let` needs a type or an initializer"));
        }
        self.expect_word("in")?;
        let body = self.expr()?;
        Ok(Expr::new(
            ExprKind::Let {
                binding: Box::new(LetBinding {
                    name,
                    declared,
                    init,
                }),
                body: Box::new(body),
            },
            span,
        ))
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.is_word("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = bin_bool(lhs, BoolOp::Or, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.cmp_expr()?;
        while self.is_word("and") {
            self.bump();
            let rhs = self.cmp_expr()?;
            lhs = bin_bool(lhs, BoolOp::And, rhs);
        }
        Ok(lhs)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let rhs = self.add_expr()?;
            if self.cmp_op().is_some() {
                return Err(self.error("comparison operators do not chain; add parentheses"));
            }
            let span = lhs.span.clone();
            return Ok(Expr::new(
                ExprKind::Compare {
                    lhs: Box::new(lhs),
                    op,
                    rhs: Box::new(rhs),
                },
                span,
            ));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = bin_arith(lhs, op, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = bin_arith(lhs, op, rhs);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat_word("not") {
            let inner = self.unary_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        if self.peek() == &Tok::Minus {
            // only numeric literals may be negated
            match self.peek_at(1).clone() {
                Tok::Int(n) => {
                    self.bump();
                    self.bump();
                    return self.postfix(Expr::new(ExprKind::IntLit(-n), span));
                }
                Tok::Real(x) => {
                    self.bump();
                    self.bump();
                    return self.postfix(Expr::new(ExprKind::RealLit(-x), span));
                }
                _ => return Err(self.error("unary minus is only allowed on numeric literals")),
            }
        }
        let prim = self.primary()?;
        self.postfix(prim)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::IntLit(n), span))
            }
            Tok::Real(x) => {
                self.bump();
                Ok(Expr::new(ExprKind::RealLit(x), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::StrLit(s), span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(w) => match w.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::new(ExprKind::BoolLit(w == "true"), span))
                }
                "if" => self.if_expr(),
                "let" => self.let_expr(),
                _ => {
                    let (name, span) = self.var_name()?;
                    if self.eat(&Tok::ColonColon) {
                        let (literal, _) = self.ident()?;
                        return Ok(Expr::new(ExprKind::EnumLit { ty: name, literal }, span));
                    }
                    if self.peek() == &Tok::Dot
                        && matches!(self.peek_at(1), Tok::Ident(s) if s == "allInstances")
                    {
                        self.bump();
                        self.bump();
                        self.expect(&Tok::LParen)?;
                        self.expect(&Tok::RParen)?;
                        return Ok(Expr::new(ExprKind::AllInstances(name), span));
                    }
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            },
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        self.expect_word("if")?;
        let cond = self.expr()?;
        self.expect_word("then")?;
        let then = self.expr()?;
        self.expect_word("else")?;
        let otherwise = self.expr()?;
        self.expect_word("endif")?;
        Ok(Expr::new(
            ExprKind::If {
                cond: Box::new(cond),
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            },
            span,
        ))
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let (name, name_span) = self.ident()?;
                    if self.eat(&Tok::LParen) {
                        self.expect(&Tok::RParen)?;
                        let op = match name.as_str() {
                            "oclIsNew" => StandardOp::OclIsNew,
                            "oclIsUndefined" => StandardOp::OclIsUndefined,
                            "allInstances" => {
                                return Err(Diagnostic::error(
                                    DiagCode::SyntaxError,
                                    name_span,
                                    "`allInstances()` must be applied to an entity name",
                                ))
                            }
                            _ => {
                                return Err(Diagnostic::error(
                                    DiagCode::SyntaxError,
                                    name_span,
                                    format!("unknown standard operation `{name}()`"),
                                ))
                            }
                        };
                        let span = e.span.clone();
                        e = Expr::new(
                            ExprKind::Standard {
                                target: Box::new(e),
                                op,
                            },
                            span,
                        );
                    } else {
                        let at_pre = self.eat(&Tok::AtPre);
                        let span = e.span.clone();
                        e = Expr::new(
                            ExprKind::Nav {
                                target: Box::new(e),
                                name,
                                at_pre,
                            },
                            span,
                        );
                    }
                }
                Tok::Arrow => {
                    self.bump();
                    e = self.arrow_call(e)?;
                }
                Tok::AtPre => return Err(self.error("`@pre` must follow a navigation")),
                _ => return Ok(e),
            }
        }
    }

    fn arrow_call(&mut self, source: Expr) -> PResult<Expr> {
        let (name, name_span) = self.ident()?;
        self.expect(&Tok::LParen)?;
        let span = source.span.clone();
        if name == "any" || name == "select" {
            let (var, _) = self.var_name()?;
            self.expect(&Tok::Bar)?;
            let body = Box::new(self.expr()?);
            self.expect(&Tok::RParen)?;
            let source = Box::new(source);
            let kind = if name == "any" {
                ExprKind::Any { source, var, body }
            } else {
                ExprKind::Select { source, var, body }
            };
            return Ok(Expr::new(kind, span));
        }
        let Some(op) = CollectionOp::from_name(&name) else {
            let hint = match name.as_str() {
                "include" => "; did you mean `includes`?",
                "exclude" => "; did you mean `excludes`?",
                "includeAll" => "; did you mean `includesAll`?",
                "excludeAll" => "; did you mean `excludesAll`?",
                _ => "",
            };
            return Err(Diagnostic::error(
                DiagCode::SyntaxError,
                name_span,
                format!("unknown collection operation `{name}`{hint}"),
            ));
        };
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
        }
        self.expect(&Tok::RParen)?;
        if args.len() != op.arity() {
            return Err(Diagnostic::error(
                DiagCode::SyntaxError,
                name_span,
                format!(
                    "`{}` takes {} argument(s), found {}",
                    op.name(),
                    op.arity(),
                    args.len()
                ),
            ));
        }
        Ok(Expr::new(
            ExprKind::Collection {
                source: Box::new(source),
                op,
                args,
            },
            span,
        ))
    }
}

fn bin_bool(lhs: Expr, op: BoolOp, rhs: Expr) -> Expr {
    let span = lhs.span.clone();
    Expr::new(
        ExprKind::Bool {
            lhs: Box::new(lhs),
            op,
            rhs: Box::new(rhs),
        },
        span,
    )
}

fn bin_arith(lhs: Expr, op: ArithOp, rhs: Expr) -> Expr {
    let span = lhs.span.clone();
    Expr::new(
        ExprKind::Arith {
            lhs: Box::new(lhs),
            op,
            rhs: Box::new(rhs),
        },
        span,
    )
}

/// Parses a complete token slice as one expression.
pub fn parse_expression_tokens(toks: &[Token]) -> Result<Expr, Diagnostic> {
    let mut p = ExprParser::new(toks);
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

/// Parses expression text without type checking.
pub fn parse_expression_text(source: &str, file: &str) -> Result<Expr, Diagnostic> {
    let file: Arc<str> = Arc::from(file);
    let toks = tokenize(source, &file)?;
    parse_expression_tokens(&toks)
}
