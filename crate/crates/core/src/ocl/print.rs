//! Precedence-aware printer producing text that reparses to the same tree.

use super::{ArithOp, BoolOp, Expr, ExprKind};

const LET: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const CMP: u8 = 3;
const ADD: u8 = 4;
const MUL: u8 = 5;
const UNARY: u8 = 6;
const POSTFIX: u8 = 7;
const ATOM: u8 = 8;

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, LET);
    out
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let { .. } => LET,
        ExprKind::Bool { op: BoolOp::Or, .. } => OR,
        ExprKind::Bool {
            op: BoolOp::And, ..
        } => AND,
        ExprKind::Compare { .. } => CMP,
        ExprKind::Arith {
            op: ArithOp::Add | ArithOp::Sub,
            ..
        } => ADD,
        ExprKind::Arith { .. } => MUL,
        ExprKind::Not(_) => UNARY,
        ExprKind::IntLit(n) if *n < 0 => UNARY,
        ExprKind::RealLit(x) if x.is_sign_negative() => UNARY,
        ExprKind::Nav { .. }
        | ExprKind::AttrNav { .. }
        | ExprKind::AssocNav { .. }
        | ExprKind::Standard { .. }
        | ExprKind::Collection { .. }
        | ExprKind::Any { .. }
        | ExprKind::Select { .. }
        | ExprKind::AllInstances(_) => POSTFIX,
        _ => ATOM,
    }
}

pub(crate) fn real_text(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('e') {
        let s = format!("{x}");
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        s
    }
}

pub(crate) fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    let paren = p < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::IntLit(n) => out.push_str(&n.to_string()),
        ExprKind::RealLit(x) => out.push_str(&real_text(*x)),
        ExprKind::StrLit(s) => out.push_str(&quote_str(s)),
        ExprKind::EnumLit { ty, literal } => {
            out.push_str(ty);
            out.push_str("::");
            out.push_str(literal);
        }
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Nav {
            target,
            name: field,
            at_pre,
        }
        | ExprKind::AttrNav {
            target,
            attribute: field,
            at_pre,
        }
        | ExprKind::AssocNav {
            target,
            association: field,
            at_pre,
        } => {
            write_expr(out, target, POSTFIX);
            out.push('.');
            out.push_str(field);
            if *at_pre {
                out.push_str("@pre");
            }
        }
        ExprKind::AllInstances(entity) => {
            out.push_str(entity);
            out.push_str(".allInstances()");
        }
        ExprKind::Any { source, var, body } | ExprKind::Select { source, var, body } => {
            write_expr(out, source, POSTFIX);
            out.push_str(if matches!(e.kind, ExprKind::Any { .. }) {
                "->any("
            } else {
                "->select("
            });
            out.push_str(var);
            out.push_str(" | ");
            write_expr(out, body, LET);
            out.push(')');
        }
        ExprKind::Collection { source, op, args } => {
            write_expr(out, source, POSTFIX);
            out.push_str("->");
            out.push_str(op.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, LET);
            }
            out.push(')');
        }
        ExprKind::Standard { target, op } => {
            write_expr(out, target, POSTFIX);
            out.push('.');
            out.push_str(op.name());
            out.push_str("()");
        }
        ExprKind::Compare { lhs, op, rhs } => {
            write_expr(out, lhs, ADD);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, ADD);
        }
        ExprKind::Arith { lhs, op, rhs } => {
            let level = p;
            write_expr(out, lhs, level);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, level + 1);
        }
        ExprKind::Bool { lhs, op, rhs } => {
            write_expr(out, lhs, p);
            out.push_str(match op {
                BoolOp::And => " and ",
                BoolOp::Or => " or ",
            });
            write_expr(out, rhs, p + 1);
        }
        ExprKind::Not(inner) => {
            out.push_str("not ");
            write_expr(out, inner, UNARY);
        }
        ExprKind::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            write_expr(out, cond, LET);
            out.push_str(" then ");
            write_expr(out, then, LET);
            out.push_str(" else ");
            write_expr(out, otherwise, LET);
            out.push_str(" endif");
        }
        ExprKind::Let { binding, body } => {
            out.push_str("let ");
            out.push_str(&binding.name);
            if let Some(t) = &binding.declared {
                out.push_str(": ");
                out.push_str(&t.to_string());
            }
            if let Some(init) = &binding.init {
                out.push_str(" = ");
                write_expr(out, init, LET);
            }
            out.push_str(" in ");
            write_expr(out, body, LET);
        }
    }
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression_text;
    use super::*;

    fn roundtrip(s: &str) -> String {
        let e = parse_expression_text(s, "t").unwrap();
        let printed = print_expr(&e);
        let again = parse_expression_text(&printed, "t").unwrap();
        assert_eq!(e.normalized(), again.normalized(), "{printed}");
        printed
    }

    #[test]
    fn keeps_needed_parens_only() {
        assert_eq!(roundtrip("(a + b) * c"), "(a + b) * c");
        assert_eq!(roundtrip("a - (b - c)"), "a - (b - c)");
        assert_eq!(roundtrip("((a - b)) - c"), "a - b - c");
        assert_eq!(roundtrip("(a or b) and c"), "(a or b) and c");
        assert_eq!(roundtrip("not (a and b)"), "not (a and b)");
    }

    #[test]
    fn literals() {
        assert_eq!(roundtrip("x = 'it\\'s'"), "x = 'it\\'s'");
        assert_eq!(roundtrip("x = 1.5 + 2.0 - -1"), "x = 1.5 + 2.0 - -1");
    }

    #[test]
    fn forms() {
        roundtrip("let l: Loan in l.oclIsNew() and Loan.allInstances()->includes(l)");
        roundtrip("if a.b@pre = E::X then c.d = 1 else true endif and x");
        roundtrip("S.allInstances()->select(s | s.v < today + 3)->size() >= -2");
        roundtrip("(let x = 1 in x) + 2 = 3");
    }
}
