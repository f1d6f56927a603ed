//! Two-state evaluation. Navigations marked `@pre` read the pre-state
//! snapshot, all others read the post-state.

use std::cell::Cell;

use thiserror::Error;

use super::{ArithOp, BoolOp, CollectionOp, Expr, ExprKind, StandardOp};
use crate::runtime::{EntityStore, ObjectId, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("type mismatch at runtime: {0}")]
    TypeMismatch(String),
    #[error("unbound name `{0}`")]
    Unresolved(String),
}

/// Variable bindings, innermost last.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scope {
    vars: Vec<(String, Value)>,
}

impl Scope {
    pub fn new() -> Self {
        Scope::default()
    }

    pub fn bind(&mut self, name: &str, value: Value) {
        self.vars.push((name.to_string(), value));
    }

    /// Replaces the innermost binding of `name`, or adds one.
    pub fn set(&mut self, name: &str, value: Value) {
        match self.vars.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.bind(name, value),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(n, v)| (n.as_str(), v))
    }
}

impl<S: Into<String>> FromIterator<(S, Value)> for Scope {
    fn from_iter<I: IntoIterator<Item = (S, Value)>>(iter: I) -> Self {
        Scope {
            vars: iter.into_iter().map(|(n, v)| (n.into(), v)).collect(),
        }
    }
}

/// Evaluates checked expressions against a (pre, post) state pair.
/// Counts node visits so tests can observe short-circuiting.
pub struct Evaluator<'s> {
    pre: &'s EntityStore,
    post: &'s EntityStore,
    visits: Cell<u64>,
}

/// Evaluates `expr` with the given bindings.
pub fn evaluate(
    expr: &Expr,
    pre: &EntityStore,
    post: &EntityStore,
    bindings: &Scope,
) -> Result<Value, EvalError> {
    Evaluator::new(pre, post).eval(expr, &mut bindings.clone())
}

fn mismatch(what: &str, v: &Value) -> EvalError {
    EvalError::TypeMismatch(format!("{what}, found {v}"))
}

impl<'s> Evaluator<'s> {
    pub fn new(pre: &'s EntityStore, post: &'s EntityStore) -> Self {
        Evaluator {
            pre,
            post,
            visits: Cell::new(0),
        }
    }

    pub fn visits(&self) -> u64 {
        self.visits.get()
    }

    pub fn pre(&self) -> &'s EntityStore {
        self.pre
    }

    pub fn post(&self) -> &'s EntityStore {
        self.post
    }

    fn state(&self, at_pre: bool) -> &'s EntityStore {
        if at_pre {
            self.pre
        } else {
            self.post
        }
    }

    pub fn eval_bool(&self, e: &Expr, scope: &mut Scope) -> Result<bool, EvalError> {
        Ok(self.eval(e, scope)?.truthy())
    }

    pub fn eval(&self, e: &Expr, scope: &mut Scope) -> Result<Value, EvalError> {
        self.visits.set(self.visits.get() + 1);
        Ok(match &e.kind {
            ExprKind::BoolLit(b) => Value::Bool(*b),
            ExprKind::IntLit(n) => Value::Int(*n),
            ExprKind::RealLit(x) => Value::Real(*x),
            ExprKind::StrLit(s) => Value::Str(s.clone()),
            ExprKind::EnumLit { ty, literal } => Value::enum_lit(ty, literal),
            ExprKind::Var(name) => scope
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::Unresolved(name.clone()))?,
            ExprKind::Nav { name, .. } => {
                return Err(EvalError::TypeMismatch(format!(
                    "unresolved navigation `.{name}`; expression was not type checked"
                )))
            }
            ExprKind::AttrNav {
                target,
                attribute,
                at_pre,
            } => match self.eval(target, scope)? {
                Value::Object(id) => {
                    let st = self.state(*at_pre);
                    if st.contains(id) {
                        st.attribute(id, attribute)
                            .map_err(|err| EvalError::TypeMismatch(err.to_string()))?
                            .clone()
                    } else {
                        Value::Undefined
                    }
                }
                Value::Undefined => Value::Undefined,
                other => return Err(mismatch("navigation needs an object", &other)),
            },
            ExprKind::AssocNav {
                target,
                association,
                at_pre,
            } => match self.eval(target, scope)? {
                Value::Object(id) => {
                    let st = self.state(*at_pre);
                    if st.contains(id) {
                        st.link(id, association)
                            .map_err(|err| EvalError::TypeMismatch(err.to_string()))?
                            .to_value()
                    } else {
                        Value::Undefined
                    }
                }
                Value::Undefined => Value::Undefined,
                other => return Err(mismatch("navigation needs an object", &other)),
            },
            ExprKind::AllInstances(entity) => Value::Set(
                self.post
                    .all_instances(entity)
                    .map_err(|err| EvalError::TypeMismatch(err.to_string()))?
                    .to_vec(),
            ),
            ExprKind::Any { source, var, body } => {
                let ids = match self.eval(source, scope)? {
                    Value::Set(ids) => ids,
                    Value::Undefined => return Ok(Value::Undefined),
                    other => return Err(mismatch("`any` needs a collection", &other)),
                };
                for id in ids {
                    scope.bind(var, Value::Object(id));
                    let hit = self.eval_bool(body, scope);
                    scope.pop();
                    if hit? {
                        return Ok(Value::Object(id));
                    }
                }
                Value::Undefined
            }
            ExprKind::Select { source, var, body } => {
                let ids = match self.eval(source, scope)? {
                    Value::Set(ids) => ids,
                    Value::Undefined => return Ok(Value::Undefined),
                    other => return Err(mismatch("`select` needs a collection", &other)),
                };
                let mut out = Vec::new();
                for id in ids {
                    scope.bind(var, Value::Object(id));
                    let hit = self.eval_bool(body, scope);
                    scope.pop();
                    if hit? {
                        out.push(id);
                    }
                }
                Value::Set(out)
            }
            ExprKind::Collection { source, op, args } => {
                let ids = match self.eval(source, scope)? {
                    Value::Set(ids) => ids,
                    Value::Undefined => return Ok(Value::Undefined),
                    other => return Err(mismatch("collection operation needs a set", &other)),
                };
                let arg = match args.first() {
                    Some(a) => self.eval(a, scope)?,
                    None => Value::Undefined,
                };
                collection_op(*op, &ids, &arg)?
            }
            ExprKind::Standard { target, op } => {
                let v = self.eval(target, scope)?;
                match op {
                    StandardOp::OclIsUndefined => Value::Bool(match v {
                        Value::Undefined => true,
                        Value::Object(id) => !self.post.contains(id),
                        _ => false,
                    }),
                    StandardOp::OclIsNew => Value::Bool(match v {
                        Value::Object(id) => !self.pre.contains(id) && self.post.contains(id),
                        _ => false,
                    }),
                }
            }
            ExprKind::Compare { lhs, op, rhs } => {
                let l = self.eval(lhs, scope)?;
                let r = self.eval(rhs, scope)?;
                Value::Bool(l.compare(*op, &r) == Some(true))
            }
            ExprKind::Arith { lhs, op, rhs } => {
                let l = self.eval(lhs, scope)?;
                let r = self.eval(rhs, scope)?;
                arith(*op, l, r)?
            }
            ExprKind::Bool { lhs, op, rhs } => {
                let l = self.eval_bool(lhs, scope)?;
                Value::Bool(match op {
                    BoolOp::And => l && self.eval_bool(rhs, scope)?,
                    BoolOp::Or => l || self.eval_bool(rhs, scope)?,
                })
            }
            ExprKind::Not(inner) => Value::Bool(!self.eval_bool(inner, scope)?),
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.eval_bool(cond, scope)? {
                    self.eval(then, scope)?
                } else {
                    self.eval(otherwise, scope)?
                }
            }
            ExprKind::Let { binding, body } => {
                // a fresh-object let keeps whatever the caller bound
                let v = match &binding.init {
                    Some(init) => self.eval(init, scope)?,
                    None => scope
                        .get(&binding.name)
                        .cloned()
                        .unwrap_or(Value::Undefined),
                };
                scope.bind(&binding.name, v);
                let out = self.eval(body, scope);
                scope.pop();
                out?
            }
        })
    }
}

fn collection_op(op: CollectionOp, ids: &[ObjectId], arg: &Value) -> Result<Value, EvalError> {
    let set_arg = |v: &Value| -> Result<Vec<ObjectId>, EvalError> {
        match v {
            Value::Set(s) => Ok(s.clone()),
            Value::Undefined => Ok(Vec::new()),
            other => Err(mismatch("expected a set argument", other)),
        }
    };
    Ok(match op {
        CollectionOp::Size => Value::Int(ids.len() as i64),
        CollectionOp::IsEmpty => Value::Bool(ids.is_empty()),
        CollectionOp::NotEmpty => Value::Bool(!ids.is_empty()),
        CollectionOp::Includes => Value::Bool(arg.as_object().is_some_and(|o| ids.contains(&o))),
        CollectionOp::Excludes => Value::Bool(!arg.as_object().is_some_and(|o| ids.contains(&o))),
        CollectionOp::IncludesAll => Value::Bool(set_arg(arg)?.iter().all(|o| ids.contains(o))),
        CollectionOp::ExcludesAll => Value::Bool(set_arg(arg)?.iter().all(|o| !ids.contains(o))),
    })
}

/// Arithmetic with the type rules of the checker. Integer division
/// truncates toward zero.
pub(crate) fn arith(op: ArithOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use Value::*;
    let int = |a: i64, b: i64| -> Result<i64, EvalError> {
        match op {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
            ArithOp::Div => {
                if b == 0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.checked_div(b)
            }
        }
        .ok_or(EvalError::Overflow)
    };
    Ok(match (l, r) {
        (Undefined, _) | (_, Undefined) => Undefined,
        (Int(a), Int(b)) => Int(int(a, b)?),
        (Date(a), Int(b)) if matches!(op, ArithOp::Add | ArithOp::Sub) => Date(int(a, b)?),
        (Int(a), Date(b)) if op == ArithOp::Add => Date(int(a, b)?),
        (Date(a), Date(b)) if op == ArithOp::Sub => Int(int(a, b)?),
        (a @ (Int(_) | Real(_)), b @ (Int(_) | Real(_))) => {
            let to = |v: &Value| match v {
                Int(n) => *n as f64,
                Real(x) => *x,
                _ => unreachable!(),
            };
            let (x, y) = (to(&a), to(&b));
            let z = match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
            };
            if !z.is_finite() {
                return Err(EvalError::Overflow);
            }
            Real(z)
        }
        (a, b) => {
            return Err(EvalError::TypeMismatch(format!(
                "cannot apply `{op}` to {a} and {b}"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{parse_model, Schema};
    use crate::ocl::{parse_expression, Phase, Type, TypeEnv};

    fn setup() -> (Arc<Schema>, EntityStore) {
        let m = parse_model("entity Book { Title : String; N : Integer; }", "t.rm").unwrap();
        let schema = Arc::new(Schema::from_model(&m).0);
        let mut s = EntityStore::new(schema.clone());
        for (t, n) in [("a", 1), ("b", 2), ("c", 3)] {
            let b = s.create_object("Book").unwrap();
            s.set_attribute(b, "Title", Value::Str(t.into())).unwrap();
            s.set_attribute(b, "N", Value::Int(n)).unwrap();
        }
        (schema, s)
    }

    #[test]
    fn extent_size_and_undefined() {
        let (schema, s) = setup();
        let env =
            TypeEnv::new(&schema, Phase::Precondition).with_var("u", Type::Object("Book".into()));
        let e = parse_expression("Book.allInstances()->size()", &env).unwrap();
        assert_eq!(evaluate(&e, &s, &s, &Scope::new()).unwrap(), Value::Int(3));
        let e = parse_expression("u.oclIsUndefined()", &env).unwrap();
        let b: Scope = [("u", Value::Undefined)].into_iter().collect();
        assert_eq!(evaluate(&e, &s, &s, &b).unwrap(), Value::Bool(true));
        let e = parse_expression("u.N = 1", &env).unwrap();
        assert_eq!(evaluate(&e, &s, &s, &b).unwrap(), Value::Bool(false));
    }

    #[test]
    fn any_returns_first_match() {
        let (schema, s) = setup();
        let env = TypeEnv::new(&schema, Phase::Definition);
        let e = parse_expression("Book.allInstances()->any(b | b.N >= 2)", &env).unwrap();
        assert_eq!(
            evaluate(&e, &s, &s, &Scope::new()).unwrap(),
            Value::Object(ObjectId(2))
        );
        let e = parse_expression("Book.allInstances()->any(b | b.N > 9)", &env).unwrap();
        assert_eq!(
            evaluate(&e, &s, &s, &Scope::new()).unwrap(),
            Value::Undefined
        );
    }

    #[test]
    fn short_circuit_skips_right_operand() {
        let (schema, s) = setup();
        let env = TypeEnv::new(&schema, Phase::Precondition);
        let heavy = "Book.allInstances()->select(b | b.N > 0)->size() = 3";
        let e = parse_expression(&format!("false and {heavy}"), &env).unwrap();
        let ev = Evaluator::new(&s, &s);
        assert!(!ev.eval_bool(&e, &mut Scope::new()).unwrap());
        assert_eq!(ev.visits(), 2);
        let e = parse_expression(&format!("true or {heavy}"), &env).unwrap();
        let ev = Evaluator::new(&s, &s);
        assert!(ev.eval_bool(&e, &mut Scope::new()).unwrap());
        assert_eq!(ev.visits(), 2);
    }

    #[test]
    fn pre_reads_snapshot() {
        let (schema, pre) = setup();
        let mut post = pre.clone();
        post.set_attribute(ObjectId(1), "N", Value::Int(2)).unwrap();
        let env =
            TypeEnv::new(&schema, Phase::Postcondition).with_var("b", Type::Object("Book".into()));
        let e = parse_expression("b.N = b.N@pre + 1", &env).unwrap();
        let bind: Scope = [("b", Value::Object(ObjectId(1)))].into_iter().collect();
        assert_eq!(evaluate(&e, &pre, &post, &bind).unwrap(), Value::Bool(true));
        assert_eq!(evaluate(&e, &pre, &pre, &bind).unwrap(), Value::Bool(false));
    }

    #[test]
    fn arithmetic_faults() {
        assert_eq!(
            arith(ArithOp::Div, Value::Int(1), Value::Int(0)),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(
            arith(ArithOp::Div, Value::Int(-7), Value::Int(2)),
            Ok(Value::Int(-3))
        );
        assert_eq!(
            arith(ArithOp::Add, Value::Int(i64::MAX), Value::Int(1)),
            Err(EvalError::Overflow)
        );
        assert_eq!(
            arith(ArithOp::Sub, Value::Date(10), Value::Date(4)),
            Ok(Value::Int(6))
        );
    }
}
