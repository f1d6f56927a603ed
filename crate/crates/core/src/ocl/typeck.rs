//! Static checking: resolves navigations against the schema, annotates
//! every node with its type, and enforces the `@pre`/`oclIsNew` scoping.

use std::sync::Arc;

use super::{ArithOp, CmpOp, CollectionOp, Expr, ExprKind, StandardOp, Type};
use crate::diag::{DiagCode, Diagnostic};
use crate::lexer::tokenize;
use crate::model::{Multiplicity, Schema};
use crate::span::Span;

/// Which part of a contract an expression belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Definition,
    Precondition,
    Postcondition,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Definition => "definition",
            Phase::Precondition => "precondition",
            Phase::Postcondition => "postcondition",
        }
    }
}

/// Variables in scope plus the schema they are typed against.
#[derive(Clone, Debug)]
pub struct TypeEnv<'s> {
    pub schema: &'s Schema,
    pub phase: Phase,
    vars: Vec<(String, Type)>,
}

impl<'s> TypeEnv<'s> {
    pub fn new(schema: &'s Schema, phase: Phase) -> Self {
        TypeEnv {
            schema,
            phase,
            vars: Vec::new(),
        }
    }

    pub fn with_var(mut self, name: &str, ty: Type) -> Self {
        self.bind(name, ty);
        self
    }

    pub fn bind(&mut self, name: &str, ty: Type) {
        self.vars.push((name.to_string(), ty));
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    fn pop(&mut self) {
        self.vars.pop();
    }
}

/// Maps a written type to its resolved form: bare names become enum or
/// object types, and set element types must be entities.
pub(crate) fn resolve_type(schema: &Schema, ty: &Type, span: &Span) -> Result<Type, Diagnostic> {
    match ty {
        Type::Object(n) | Type::Enum(n) => {
            if schema.enum_decl(n).is_some() {
                Ok(Type::Enum(n.clone()))
            } else if schema.entity(n).is_some() {
                Ok(Type::Object(n.clone()))
            } else {
                Err(Diagnostic::error(
                    DiagCode::ResolutionError,
                    span.clone(),
                    format!("unknown type `{n}`"),
                ))
            }
        }
        Type::Set(n) => {
            if schema.entity(n).is_some() {
                Ok(ty.clone())
            } else {
                Err(Diagnostic::error(
                    DiagCode::ResolutionError,
                    span.clone(),
                    format!("unknown entity `{n}` in set type"),
                ))
            }
        }
        other => Ok(other.clone()),
    }
}

/// Whether a value of type `value` may be stored where `target` is expected.
pub(crate) fn assignable(target: &Type, value: &Type) -> bool {
    target == value
        || matches!(
            (target, value),
            (Type::Real, Type::Integer) | (Type::Date, Type::Integer)
        )
}

fn comparable(op: CmpOp, a: &Type, b: &Type) -> bool {
    let numeric_like = |t: &Type| matches!(t, Type::Integer | Type::Real | Type::Date);
    if numeric_like(a) && numeric_like(b) {
        // Date and Real never mix
        return !matches!((a, b), (Type::Date, Type::Real) | (Type::Real, Type::Date));
    }
    if op.is_equality() {
        return a == b;
    }
    a == b && matches!(a, Type::String)
}

/// Type checks `expr` in place. Returns all diagnostics found.
pub fn check_expression(expr: &mut Expr, env: &TypeEnv<'_>) -> Vec<Diagnostic> {
    let mut ck = Checker {
        env: env.clone(),
        diags: Vec::new(),
    };
    ck.check(expr);
    ck.diags
}

/// Parses and checks expression text against `env`.
pub fn parse_expression(source: &str, env: &TypeEnv<'_>) -> Result<Expr, Vec<Diagnostic>> {
    let file: Arc<str> = Arc::from("<expr>");
    let toks = tokenize(source, &file).map_err(|d| vec![d])?;
    let mut e = super::parse_expression_tokens(&toks).map_err(|d| vec![d])?;
    let diags = check_expression(&mut e, env);
    if diags.is_empty() {
        Ok(e)
    } else {
        Err(diags)
    }
}

struct Checker<'s> {
    env: TypeEnv<'s>,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn err(&mut self, code: DiagCode, span: &Span, msg: String) -> Type {
        self.diags.push(Diagnostic::error(code, span.clone(), msg));
        Type::Unknown
    }

    fn expect_bool(&mut self, e: &Expr, what: &str) {
        if e.ty != Type::Boolean && e.ty != Type::Unknown {
            self.err(
                DiagCode::TypeError,
                &e.span,
                format!("{what} must be Boolean, found {}", e.ty),
            );
        }
    }

    fn check(&mut self, e: &mut Expr) {
        let ty = self.infer(e);
        e.ty = ty;
    }

    fn infer(&mut self, e: &mut Expr) -> Type {
        let span = e.span.clone();
        let phase = self.env.phase;
        let is_any = matches!(e.kind, ExprKind::Any { .. });
        match &mut e.kind {
            ExprKind::BoolLit(_) => Type::Boolean,
            ExprKind::IntLit(_) => Type::Integer,
            ExprKind::RealLit(_) => Type::Real,
            ExprKind::StrLit(_) => Type::String,
            ExprKind::EnumLit { ty, literal } => match self.env.schema.enum_decl(ty) {
                None => self.err(
                    DiagCode::ResolutionError,
                    &span,
                    format!("unknown enumeration `{ty}`"),
                ),
                Some(d) if !d.literals.contains(literal) => self.err(
                    DiagCode::ResolutionError,
                    &span,
                    format!("`{ty}` has no literal `{literal}`"),
                ),
                Some(_) => Type::Enum(ty.clone()),
            },
            ExprKind::Var(name) => match self.env.lookup(name) {
                Some(t) => t.clone(),
                None => self.err(
                    DiagCode::ScopeError,
                    &span,
                    format!("unknown variable `{name}`"),
                ),
            },
            ExprKind::Nav { .. } | ExprKind::AttrNav { .. } | ExprKind::AssocNav { .. } => {
                self.navigation(e)
            }
            ExprKind::AllInstances(entity) => {
                if self.env.schema.entity(entity).is_some() {
                    Type::Set(entity.clone())
                } else {
                    self.err(
                        DiagCode::ResolutionError,
                        &span,
                        format!("unknown entity `{entity}`"),
                    )
                }
            }
            ExprKind::Any { source, var, body } | ExprKind::Select { source, var, body } => {
                self.check(source);
                let elem = match &source.ty {
                    Type::Set(ent) => Type::Object(ent.clone()),
                    Type::Unknown => Type::Unknown,
                    other => {
                        let msg = format!("iteration needs a collection, found {other}");
                        self.err(DiagCode::TypeError, &source.span, msg);
                        Type::Unknown
                    }
                };
                self.env.bind(var, elem.clone());
                self.check(body);
                self.env.pop();
                self.expect_bool(body, "iterator body");
                match elem {
                    Type::Object(ent) if is_any => Type::Object(ent),
                    Type::Object(ent) => Type::Set(ent),
                    _ => Type::Unknown,
                }
            }
            ExprKind::Collection { source, op, args } => {
                self.check(source);
                for a in args.iter_mut() {
                    self.check(a);
                }
                let op = *op;
                let ent = match &source.ty {
                    Type::Set(ent) => ent.clone(),
                    Type::Unknown => return Type::Unknown,
                    other => {
                        let msg = format!("`{}` needs a collection, found {other}", op.name());
                        return self.err(DiagCode::TypeError, &source.span, msg);
                    }
                };
                match op {
                    CollectionOp::Size => Type::Integer,
                    CollectionOp::IsEmpty | CollectionOp::NotEmpty => Type::Boolean,
                    CollectionOp::Includes | CollectionOp::Excludes => {
                        let arg = &args[0];
                        if arg.ty != Type::Unknown && arg.ty != Type::Object(ent.clone()) {
                            let msg = format!(
                                "`{}` on Set({ent}) needs a {ent}, found {}",
                                op.name(),
                                arg.ty
                            );
                            let sp = arg.span.clone();
                            return self.err(DiagCode::TypeError, &sp, msg);
                        }
                        Type::Boolean
                    }
                    CollectionOp::IncludesAll | CollectionOp::ExcludesAll => {
                        let arg = &args[0];
                        if arg.ty != Type::Unknown && arg.ty != Type::Set(ent.clone()) {
                            let msg = format!(
                                "`{}` on Set({ent}) needs a Set({ent}), found {}",
                                op.name(),
                                arg.ty
                            );
                            let sp = arg.span.clone();
                            return self.err(DiagCode::TypeError, &sp, msg);
                        }
                        Type::Boolean
                    }
                }
            }
            ExprKind::Standard { target, op } => {
                let op = *op;
                self.check(target);
                if op == StandardOp::OclIsNew {
                    if phase != Phase::Postcondition {
                        return self.err(
                            DiagCode::ScopeError,
                            &span,
                            format!("`oclIsNew()` is not allowed in a {}", phase.name()),
                        );
                    }
                    if !matches!(target.ty, Type::Object(_) | Type::Unknown) {
                        let msg = format!("`oclIsNew()` needs an object, found {}", target.ty);
                        return self.err(DiagCode::TypeError, &span, msg);
                    }
                }
                Type::Boolean
            }
            ExprKind::Compare { lhs, op, rhs } => {
                let op = *op;
                self.check(lhs);
                self.check(rhs);
                if lhs.ty == Type::Unknown || rhs.ty == Type::Unknown {
                    return Type::Boolean;
                }
                if !comparable(op, &lhs.ty, &rhs.ty) {
                    let msg = format!("cannot compare {} {op} {}", lhs.ty, rhs.ty);
                    self.err(DiagCode::TypeError, &span, msg);
                }
                Type::Boolean
            }
            ExprKind::Arith { lhs, op, rhs } => {
                let op = *op;
                self.check(lhs);
                self.check(rhs);
                let (l, r) = (&lhs.ty, &rhs.ty);
                if *l == Type::Unknown || *r == Type::Unknown {
                    return Type::Unknown;
                }
                match (l, op, r) {
                    (Type::Integer, _, Type::Integer) => Type::Integer,
                    (a, _, b) if a.is_numeric() && b.is_numeric() => Type::Real,
                    (Type::Date, ArithOp::Add | ArithOp::Sub, Type::Integer) => Type::Date,
                    (Type::Integer, ArithOp::Add, Type::Date) => Type::Date,
                    (Type::Date, ArithOp::Sub, Type::Date) => Type::Integer,
                    _ => {
                        let msg = format!("cannot apply `{op}` to {l} and {r}");
                        self.err(DiagCode::TypeError, &span, msg)
                    }
                }
            }
            ExprKind::Bool { lhs, rhs, .. } => {
                self.check(lhs);
                self.check(rhs);
                self.expect_bool(lhs, "operand of `and`/`or`");
                self.expect_bool(rhs, "operand of `and`/`or`");
                Type::Boolean
            }
            ExprKind::Not(inner) => {
                self.check(inner);
                self.expect_bool(inner, "operand of `not`");
                Type::Boolean
            }
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.check(cond);
                self.expect_bool(cond, "`if` condition");
                self.check(then);
                self.check(otherwise);
                let (a, b) = (&then.ty, &otherwise.ty);
                if *a == Type::Unknown || *b == Type::Unknown {
                    Type::Unknown
                } else if a == b {
                    a.clone()
                } else if a.is_numeric() && b.is_numeric() {
                    Type::Real
                } else if assignable(a, b) {
                    a.clone()
                } else if assignable(b, a) {
                    b.clone()
                } else {
                    let msg = format!("`if` branches have different types {a} and {b}");
                    self.err(DiagCode::TypeError, &span, msg)
                }
            }
            ExprKind::Let { binding, body } => {
                if let Some(init) = &mut binding.init {
                    self.check(init);
                }
                let declared = match &binding.declared {
                    Some(t) => match resolve_type(self.env.schema, t, &span) {
                        Ok(t) => Some(t),
                        Err(d) => {
                            self.diags.push(d);
                            Some(Type::Unknown)
                        }
                    },
                    None => None,
                };
                if declared.is_some() {
                    binding.declared = declared.clone();
                }
                let ty = match (&declared, &binding.init) {
                    (Some(d), Some(init)) => {
                        if *d != Type::Unknown
                            && init.ty != Type::Unknown
                            && !assignable(d, &init.ty)
                        {
                            let msg = format!(
                                "`{}` is declared {d} but initialized with {}",
                                binding.name, init.ty
                            );
                            self.err(DiagCode::TypeError, &span, msg);
                        }
                        d.clone()
                    }
                    (Some(d), None) => {
                        if phase != Phase::Postcondition {
                            let msg = format!(
                                "fresh object `{}` can only be introduced in a postcondition",
                                binding.name
                            );
                            self.err(DiagCode::ScopeError, &span, msg);
                        } else if !matches!(d, Type::Object(_) | Type::Unknown) {
                            let msg = format!(
                                "`{}` without initializer must have an entity type, found {d}",
                                binding.name
                            );
                            self.err(DiagCode::TypeError, &span, msg);
                        }
                        d.clone()
                    }
                    (None, Some(init)) => init.ty.clone(),
                    (None, None) => Type::Unknown,
                };
                self.env.bind(&binding.name, ty);
                self.check(body);
                self.env.pop();
                body.ty.clone()
            }
        }
    }

    /// Resolves `target.name` to an attribute or association navigation.
    fn navigation(&mut self, e: &mut Expr) -> Type {
        let span = e.span.clone();
        let placeholder = ExprKind::BoolLit(false);
        let (mut target, name, at_pre) = match std::mem::replace(&mut e.kind, placeholder) {
            ExprKind::Nav {
                target,
                name,
                at_pre,
            }
            | ExprKind::AttrNav {
                target,
                attribute: name,
                at_pre,
            }
            | ExprKind::AssocNav {
                target,
                association: name,
                at_pre,
            } => (target, name, at_pre),
            _ => unreachable!("navigation called on non-navigation"),
        };
        self.check(&mut target);
        if at_pre && self.env.phase != Phase::Postcondition {
            self.err(
                DiagCode::ScopeError,
                &span,
                format!("`@pre` is not allowed in a {}", self.env.phase.name()),
            );
        }
        let target_ty = target.ty.clone();
        let result = match &target_ty {
            Type::Object(ent) => {
                let schema = self.env.schema;
                match schema.entity(ent) {
                    Some(es) => {
                        if let Some((_, t)) = es.attribute(&name) {
                            Some((false, t.to_type()))
                        } else if let Some((_, a)) = es.association(&name) {
                            let t = match a.multiplicity {
                                Multiplicity::One => Type::Object(a.target.clone()),
                                Multiplicity::Many => Type::Set(a.target.clone()),
                            };
                            Some((true, t))
                        } else {
                            self.err(
                                DiagCode::ResolutionError,
                                &span,
                                format!("`{ent}` has no attribute or association `{name}`"),
                            );
                            None
                        }
                    }
                    None => None,
                }
            }
            Type::Unknown => None,
            other => {
                self.err(
                    DiagCode::TypeError,
                    &span,
                    format!("cannot navigate `.{name}` from {other}"),
                );
                None
            }
        };
        let (kind, ty) = match result {
            Some((false, ty)) => (
                ExprKind::AttrNav {
                    target,
                    attribute: name,
                    at_pre,
                },
                ty,
            ),
            Some((true, ty)) => (
                ExprKind::AssocNav {
                    target,
                    association: name,
                    at_pre,
                },
                ty,
            ),
            None => (
                ExprKind::Nav {
                    target,
                    name,
                    at_pre,
                },
                Type::Unknown,
            ),
        };
        e.kind = kind;
        ty
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const MODEL: &str = "
        enum Level { BACHELOR, MASTER }
        entity User { UserID : Integer; Level : Level; LoanedNumber : Integer;
                      Loans : Loan[*] inverse LoanedUser[1]; }
        entity Loan { DueDate : Date; }
    ";

    fn schema() -> Schema {
        let m = parse_model(MODEL, "m.rm").unwrap();
        Schema::from_model(&m).0
    }

    #[test]
    fn resolves_navigation_kinds() {
        let s = schema();
        let env = TypeEnv::new(&s, Phase::Postcondition).with_var("u", Type::Object("User".into()));
        let e = parse_expression("u.LoanedNumber = u.LoanedNumber@pre + 1", &env).unwrap();
        let ExprKind::Compare { lhs, rhs, .. } = &e.kind else {
            panic!()
        };
        assert!(matches!(lhs.kind, ExprKind::AttrNav { at_pre: false, .. }));
        assert_eq!(rhs.ty, Type::Integer);
        let e = parse_expression("u.Loans->size()", &env).unwrap();
        assert_eq!(e.ty, Type::Integer);
        let e = parse_expression("u.Loans->any(l | l.DueDate < 3).LoanedUser", &env).unwrap();
        assert_eq!(e.ty, Type::Object("User".into()));
    }

    #[test]
    fn any_over_extent() {
        let s = schema();
        let env = TypeEnv::new(&s, Phase::Definition).with_var("uid", Type::Integer);
        let e = parse_expression("User.allInstances()->any(u | u.UserID = uid)", &env).unwrap();
        assert_eq!(e.ty, Type::Object("User".into()));
    }

    #[test]
    fn scope_errors() {
        let s = schema();
        let env = TypeEnv::new(&s, Phase::Precondition).with_var("u", Type::Object("User".into()));
        let err = parse_expression("u.LoanedNumber@pre = 1", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::ScopeError);
        let err = parse_expression("u.oclIsNew()", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::ScopeError);
        let err = parse_expression("v.Level = Level::MASTER", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::ScopeError);
    }

    #[test]
    fn type_errors() {
        let s = schema();
        let env = TypeEnv::new(&s, Phase::Precondition).with_var("u", Type::Object("User".into()));
        let err = parse_expression("u.UserID = 'x'", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::TypeError);
        let err = parse_expression("u.Level = Level::PHD", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::ResolutionError);
        let err = parse_expression("u.Nope = 1", &env).unwrap_err();
        assert_eq!(err[0].code, DiagCode::ResolutionError);
        assert!(parse_expression("u.LoanedNumber + 1", &env).is_ok());
    }

    #[test]
    fn date_arithmetic() {
        let s = schema();
        let env = TypeEnv::new(&s, Phase::Precondition).with_var("today", Type::Date);
        assert_eq!(parse_expression("today + 30", &env).unwrap().ty, Type::Date);
        assert_eq!(
            parse_expression("today - today", &env).unwrap().ty,
            Type::Integer
        );
        assert!(parse_expression("today * 2", &env).is_err());
    }
}
