//! The OCL subset used by operation contracts: AST, parser, type checker,
//! pretty-printer and the two-state evaluator.

mod eval;
mod parser;
mod print;
mod typeck;

use std::fmt;

use crate::span::Span;

pub(crate) use eval::arith;
pub use eval::{evaluate, EvalError, Evaluator, Scope};
pub use parser::{parse_expression_text, parse_expression_tokens, ExprParser};
pub use print::print_expr;
pub(crate) use print::{quote_str, real_text};
pub(crate) use typeck::{assignable, resolve_type};
pub use typeck::{check_expression, parse_expression, Phase, TypeEnv};

/// Static types of OCL expressions. Object and set types name an entity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Boolean,
    Integer,
    Real,
    String,
    Date,
    Enum(String),
    Object(String),
    Set(String),
    /// Not yet checked.
    Unknown,
}

impl Type {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Integer | Type::Real)
    }

    pub fn entity(&self) -> Option<&str> {
        match self {
            Type::Object(e) | Type::Set(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Boolean => f.write_str("Boolean"),
            Type::Integer => f.write_str("Integer"),
            Type::Real => f.write_str("Real"),
            Type::String => f.write_str("String"),
            Type::Date => f.write_str("Date"),
            Type::Enum(n) | Type::Object(n) => f.write_str(n),
            Type::Set(n) => write!(f, "Set({n})"),
            Type::Unknown => f.write_str("?"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "<>" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

/// `->op(...)` collection operations other than the iterators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CollectionOp {
    Includes,
    Excludes,
    IncludesAll,
    ExcludesAll,
    Size,
    IsEmpty,
    NotEmpty,
}

impl CollectionOp {
    pub fn name(self) -> &'static str {
        match self {
            CollectionOp::Includes => "includes",
            CollectionOp::Excludes => "excludes",
            CollectionOp::IncludesAll => "includesAll",
            CollectionOp::ExcludesAll => "excludesAll",
            CollectionOp::Size => "size",
            CollectionOp::IsEmpty => "isEmpty",
            CollectionOp::NotEmpty => "notEmpty",
        }
    }

    pub fn from_name(s: &str) -> Option<CollectionOp> {
        Some(match s {
            "includes" => CollectionOp::Includes,
            "excludes" => CollectionOp::Excludes,
            "includesAll" => CollectionOp::IncludesAll,
            "excludesAll" => CollectionOp::ExcludesAll,
            "size" => CollectionOp::Size,
            "isEmpty" => CollectionOp::IsEmpty,
            "notEmpty" => CollectionOp::NotEmpty,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            CollectionOp::Includes
            | CollectionOp::Excludes
            | CollectionOp::IncludesAll
            | CollectionOp::ExcludesAll => 1,
            CollectionOp::Size | CollectionOp::IsEmpty | CollectionOp::NotEmpty => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StandardOp {
    OclIsNew,
    OclIsUndefined,
}

impl StandardOp {
    pub fn name(self) -> &'static str {
        match self {
            StandardOp::OclIsNew => "oclIsNew",
            StandardOp::OclIsUndefined => "oclIsUndefined",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetBinding {
    pub name: String,
    pub declared: Option<Type>,
    /// `None` declares a fresh object variable (`let loan: Loan in ...`).
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    BoolLit(bool),
    IntLit(i64),
    RealLit(f64),
    StrLit(String),
    EnumLit {
        ty: String,
        literal: String,
    },
    Var(String),
    /// A `.name` navigation the parser could not yet classify.
    Nav {
        target: Box<Expr>,
        name: String,
        at_pre: bool,
    },
    AttrNav {
        target: Box<Expr>,
        attribute: String,
        at_pre: bool,
    },
    AssocNav {
        target: Box<Expr>,
        association: String,
        at_pre: bool,
    },
    AllInstances(String),
    Any {
        source: Box<Expr>,
        var: String,
        body: Box<Expr>,
    },
    Select {
        source: Box<Expr>,
        var: String,
        body: Box<Expr>,
    },
    Collection {
        source: Box<Expr>,
        op: CollectionOp,
        args: Vec<Expr>,
    },
    Standard {
        target: Box<Expr>,
        op: StandardOp,
    },
    Compare {
        lhs: Box<Expr>,
        op: CmpOp,
        rhs: Box<Expr>,
    },
    Arith {
        lhs: Box<Expr>,
        op: ArithOp,
        rhs: Box<Expr>,
    },
    Bool {
        lhs: Box<Expr>,
        op: BoolOp,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Let {
        binding: Box<LetBinding>,
        body: Box<Expr>,
    },
}

/// An OCL expression node with its source position and (after checking)
/// its static type.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub ty: Type,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr {
            kind,
            span,
            ty: Type::Unknown,
        }
    }

    pub fn typed(kind: ExprKind, ty: Type) -> Self {
        Expr {
            kind,
            span: Span::synthetic(),
            ty,
        }
    }

    pub fn var(name: &str, ty: Type) -> Self {
        Expr::typed(ExprKind::Var(name.to_string()), ty)
    }

    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            BoolLit(_)
            | IntLit(_)
            | RealLit(_)
            | StrLit(_)
            | EnumLit { .. }
            | Var(_)
            | AllInstances(_) => vec![],
            Nav { target, .. }
            | AttrNav { target, .. }
            | AssocNav { target, .. }
            | Standard { target, .. } => vec![target],
            Any { source, body, .. } | Select { source, body, .. } => vec![source, body],
            Collection { source, args, .. } => {
                let mut v = vec![&**source];
                v.extend(args.iter());
                v
            }
            Compare { lhs, rhs, .. } | Arith { lhs, rhs, .. } | Bool { lhs, rhs, .. } => {
                vec![lhs, rhs]
            }
            Not(e) => vec![e],
            If {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
            Let { binding, body } => {
                let mut v = Vec::new();
                if let Some(init) = &binding.init {
                    v.push(init);
                }
                v.push(body);
                v
            }
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        use ExprKind::*;
        match &mut self.kind {
            BoolLit(_)
            | IntLit(_)
            | RealLit(_)
            | StrLit(_)
            | EnumLit { .. }
            | Var(_)
            | AllInstances(_) => vec![],
            Nav { target, .. }
            | AttrNav { target, .. }
            | AssocNav { target, .. }
            | Standard { target, .. } => vec![target],
            Any { source, body, .. } | Select { source, body, .. } => vec![source, body],
            Collection { source, args, .. } => {
                let mut v = vec![&mut **source];
                v.extend(args.iter_mut());
                v
            }
            Compare { lhs, rhs, .. } | Arith { lhs, rhs, .. } | Bool { lhs, rhs, .. } => {
                vec![lhs, rhs]
            }
            Not(e) => vec![e],
            If {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
            Let { binding, body } => {
                let mut v = Vec::new();
                if let Some(init) = &mut binding.init {
                    v.push(init);
                }
                v.push(body);
                v
            }
        }
    }

    /// Resets spans and types so that trees can be compared structurally.
    pub fn normalize(&mut self) {
        self.span = Span::synthetic();
        self.ty = Type::Unknown;
        for c in self.children_mut() {
            c.normalize();
        }
    }

    pub fn normalized(&self) -> Expr {
        let mut e = self.clone();
        e.normalize();
        e
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Whether `name` occurs free (not shadowed by an iterator or let).
    pub fn mentions_var(&self, name: &str) -> bool {
        match &self.kind {
            ExprKind::Var(v) => v == name,
            ExprKind::Any { source, var, body } | ExprKind::Select { source, var, body } => {
                source.mentions_var(name) || (var != name && body.mentions_var(name))
            }
            ExprKind::Let { binding, body } => {
                binding.init.as_ref().is_some_and(|i| i.mentions_var(name))
                    || (binding.name != name && body.mentions_var(name))
            }
            _ => self.children().into_iter().any(|c| c.mentions_var(name)),
        }
    }

    /// Whether any navigation in this tree is marked `@pre`.
    pub fn uses_pre(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Nav { at_pre: true, .. }
            | ExprKind::AttrNav { at_pre: true, .. }
            | ExprKind::AssocNav { at_pre: true, .. } = e.kind
            {
                found = true;
            }
        });
        found
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}
