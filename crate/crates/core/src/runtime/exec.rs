//! The executor: runs a business-logic unit against a store with guard
//! checking and all-or-nothing commit.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use super::store::{EntityStore, StoreError};
use super::value::{ObjectId, Value};
use crate::classify::{Action, ClassifiedContract, EffectNode, GuardTree};
use crate::logic::BusinessLogicUnit;
use crate::model::{Multiplicity, TODAY};
use crate::ocl::{print_expr, CollectionOp, EvalError, Evaluator, Expr, Scope, StandardOp, Type};
use crate::span::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Success,
    /// The guard was false. `clause` is the first failing leaf.
    PreconditionFailure {
        operation: String,
        clause: String,
        span: Span,
    },
    RuntimeFault(String),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        *self == Outcome::Success
    }
}

#[derive(Clone, Debug)]
pub struct ExecutionResult {
    pub outcome: Outcome,
    /// The operation's output; `Undefined` unless the run succeeded.
    pub value: Value,
    pub duration: Duration,
    /// Objects created, changed or released by the run.
    pub touched: BTreeSet<ObjectId>,
    /// Every variable bound during the run.
    pub bindings: Scope,
}

#[derive(Debug)]
struct Fault(String);

impl From<EvalError> for Fault {
    fn from(e: EvalError) -> Self {
        Fault(e.to_string())
    }
}

impl From<StoreError> for Fault {
    fn from(e: StoreError) -> Self {
        Fault(e.to_string())
    }
}

/// Converts an input to its declared parameter type.
fn input_value(ty: &Type, v: &Value) -> Option<Value> {
    Some(match (ty, v) {
        (Type::Integer, Value::Int(_))
        | (Type::Real, Value::Real(_))
        | (Type::Boolean, Value::Bool(_))
        | (Type::String, Value::Str(_))
        | (Type::Date, Value::Date(_)) => v.clone(),
        (Type::Real, Value::Int(n)) => Value::Real(*n as f64),
        (Type::Date, Value::Int(n)) => Value::Date(*n),
        (Type::Enum(e), Value::Enum { ty, .. }) if e == ty => v.clone(),
        (Type::Object(_), Value::Object(_) | Value::Undefined) => v.clone(),
        _ => return None,
    })
}

/// Runs `unit` on `store`. The store changes only when the outcome is
/// [`Outcome::Success`].
pub fn execute(
    unit: &BusinessLogicUnit,
    store: &mut EntityStore,
    inputs: &[(String, Value)],
    today: i64,
) -> ExecutionResult {
    let start = Instant::now();
    let mut run = Run {
        c: &unit.contract,
        scope: Scope::new(),
        touched: BTreeSet::new(),
    };
    let outcome = match run.run(store, inputs, today) {
        Ok(Ok((working, value))) => {
            *store = working;
            Ok(value)
        }
        Ok(Err(failure)) => Err(failure),
        Err(Fault(msg)) => Err(Outcome::RuntimeFault(msg)),
    };
    let (outcome, value, touched) = match outcome {
        Ok(v) => (Outcome::Success, v, run.touched),
        Err(o) => (o, Value::Undefined, BTreeSet::new()),
    };
    ExecutionResult {
        outcome,
        value,
        duration: start.elapsed(),
        touched,
        bindings: run.scope,
    }
}

struct Run<'c> {
    c: &'c ClassifiedContract,
    scope: Scope,
    touched: BTreeSet<ObjectId>,
}

type Committed = Result<(EntityStore, Value), Outcome>;

impl Run<'_> {
    fn run(
        &mut self,
        pre: &EntityStore,
        inputs: &[(String, Value)],
        today: i64,
    ) -> Result<Committed, Fault> {
        let c = self.c;
        for p in &c.inputs {
            let v = inputs
                .iter()
                .find(|(n, _)| *n == p.name)
                .map(|(_, v)| v)
                .ok_or_else(|| Fault(format!("missing input `{}`", p.name)))?;
            let v = input_value(&p.ty, v)
                .ok_or_else(|| Fault(format!("input `{}` must be {}, got {v}", p.name, p.ty)))?;
            self.scope.bind(&p.name, v);
        }
        self.scope.bind(TODAY, Value::Date(today));

        for a in &c.definition_actions {
            let v = self.define(&a.action, pre)?;
            self.scope
                .bind(a.action.binds().expect("definitions bind"), v);
        }
        for l in &c.pre_locals {
            let v = match &l.init {
                Some(init) => Evaluator::new(pre, pre).eval(init, &mut self.scope)?,
                None => Value::Undefined,
            };
            self.scope.bind(&l.name, v);
        }

        let (ok, blame) = self.guard(&c.guard, pre)?;
        if !ok {
            let (clause, span) = match blame {
                Some(i) => {
                    let a = &c.guard_actions[i];
                    (print_expr(&a.action.pattern()), a.origin.clone())
                }
                None => ("false".to_string(), c.span.clone()),
            };
            return Ok(Err(Outcome::PreconditionFailure {
                operation: c.operation.clone(),
                clause,
                span,
            }));
        }

        let mut working = pre.clone();
        for l in &c.post_locals {
            let v = match &l.init {
                Some(init) => Evaluator::new(pre, &working).eval(init, &mut self.scope)?,
                None => Value::Undefined,
            };
            self.scope.bind(&l.name, v);
        }
        self.effects(&c.effects, pre, &mut working)?;

        let value = match &c.result {
            Some(r) => {
                let v = Evaluator::new(pre, &working).eval(r, &mut self.scope)?;
                match (&c.output, v) {
                    (Type::Real, Value::Int(n)) => Value::Real(n as f64),
                    (Type::Date, Value::Int(n)) => Value::Date(n),
                    (_, v) => v,
                }
            }
            None => Value::Bool(true),
        };
        Ok(Ok((working, value)))
    }

    fn eval(&mut self, e: &Expr, pre: &EntityStore, post: &EntityStore) -> Result<Value, Fault> {
        Ok(Evaluator::new(pre, post).eval(e, &mut self.scope)?)
    }

    fn define(&mut self, a: &Action, pre: &EntityStore) -> Result<Value, Fault> {
        Ok(match a {
            Action::FindObject {
                entity, criteria, ..
            }
            | Action::FindObjects {
                entity, criteria, ..
            } => {
                let mut crit = Vec::new();
                for c in criteria {
                    let v = self.eval(&c.value, pre, pre)?;
                    crit.push(super::Criterion::new(&c.feature, c.op, v));
                }
                if matches!(a, Action::FindObject { .. }) {
                    match pre.find_object_where(entity, &crit)? {
                        Some(id) => Value::Object(id),
                        None => Value::Undefined,
                    }
                } else {
                    Value::Set(pre.find_objects_where(entity, &crit)?)
                }
            }
            Action::FindAssociationObject {
                ob, association, ..
            }
            | Action::FindAssociationObjects {
                ob, association, ..
            } => match self.eval(ob, pre, pre)? {
                Value::Object(id) if pre.contains(id) => pre.link(id, association)?.to_value(),
                _ => Value::Undefined,
            },
            other => return Err(Fault(format!("{} is not a definition", other.kind()))),
        })
    }

    /// Evaluates a guard on the pre-state. Returns the verdict and, when
    /// false, the leaf to blame.
    fn guard(&mut self, g: &GuardTree, pre: &EntityStore) -> Result<(bool, Option<usize>), Fault> {
        Ok(match g {
            GuardTree::True => (true, None),
            GuardTree::False => (false, None),
            GuardTree::Leaf(i) => {
                let ok = self.leaf(&self.c.guard_actions[*i].action, pre)?;
                (ok, (!ok).then_some(*i))
            }
            GuardTree::And(cs) => {
                for c in cs {
                    let (ok, blame) = self.guard(c, pre)?;
                    if !ok {
                        return Ok((false, blame));
                    }
                }
                (true, None)
            }
            GuardTree::Or(cs) => {
                let mut last = None;
                for c in cs {
                    let (ok, blame) = self.guard(c, pre)?;
                    if ok {
                        return Ok((true, None));
                    }
                    last = blame;
                }
                (false, last)
            }
            GuardTree::Not(c) => {
                let (ok, _) = self.guard(c, pre)?;
                (
                    !ok,
                    if ok {
                        c.leaves().first().copied()
                    } else {
                        None
                    },
                )
            }
            GuardTree::If {
                cond,
                then,
                otherwise,
            } => {
                if self.guard(cond, pre)?.0 {
                    self.guard(then, pre)?
                } else {
                    self.guard(otherwise, pre)?
                }
            }
        })
    }

    fn leaf(&mut self, a: &Action, pre: &EntityStore) -> Result<bool, Fault> {
        Ok(match a {
            Action::CheckAttributeState {
                ob,
                feature,
                link,
                op,
                value,
                ..
            } => {
                let actual = match self.eval(ob, pre, pre)? {
                    Value::Object(id) if pre.contains(id) => {
                        if *link {
                            pre.link(id, feature)?.to_value()
                        } else {
                            pre.attribute(id, feature)?.clone()
                        }
                    }
                    _ => Value::Undefined,
                };
                let expected = self.eval(value, pre, pre)?;
                actual.compare(*op, &expected) == Some(true)
            }
            Action::CheckObjectState {
                ob,
                standard,
                op,
                value,
            } => {
                let actual = Value::Bool(standard_op(*standard, &self.eval(ob, pre, pre)?, pre));
                let expected = self.eval(value, pre, pre)?;
                actual.compare(*op, &expected) == Some(true)
            }
            Action::CheckCollectionState {
                collection,
                collection_op,
                args,
                op,
                value,
            } => {
                let actual = self.collection(collection, *collection_op, args, pre)?;
                let expected = self.eval(value, pre, pre)?;
                actual.compare(*op, &expected) == Some(true)
            }
            Action::StandardOperationToObject { ob, op } => {
                standard_op(*op, &self.eval(ob, pre, pre)?, pre)
            }
            Action::StandardOperationToObjects {
                collection,
                op,
                args,
            } => self.collection(collection, *op, args, pre)?.truthy(),
            other => return Err(Fault(format!("{} is not a guard", other.kind()))),
        })
    }

    fn collection(
        &mut self,
        source: &Expr,
        op: CollectionOp,
        args: &[Expr],
        pre: &EntityStore,
    ) -> Result<Value, Fault> {
        let ids = match self.eval(source, pre, pre)? {
            Value::Set(ids) => ids,
            Value::Undefined => return Ok(Value::Undefined),
            other => return Err(Fault(format!("expected a collection, found {other}"))),
        };
        let arg = match args.first() {
            Some(a) => self.eval(a, pre, pre)?,
            None => Value::Undefined,
        };
        let member = |v: &Value| matches!(v, Value::Object(id) if ids.contains(id));
        let members = |v: &Value| -> Result<Vec<ObjectId>, Fault> {
            match v {
                Value::Set(s) => Ok(s.clone()),
                Value::Undefined => Ok(Vec::new()),
                other => Err(Fault(format!(
                    "expected a collection argument, found {other}"
                ))),
            }
        };
        Ok(match op {
            CollectionOp::Size => Value::Int(ids.len() as i64),
            CollectionOp::IsEmpty => Value::Bool(ids.is_empty()),
            CollectionOp::NotEmpty => Value::Bool(!ids.is_empty()),
            CollectionOp::Includes => Value::Bool(member(&arg)),
            CollectionOp::Excludes => Value::Bool(!member(&arg)),
            CollectionOp::IncludesAll => {
                Value::Bool(members(&arg)?.iter().all(|x| ids.contains(x)))
            }
            CollectionOp::ExcludesAll => {
                Value::Bool(!members(&arg)?.iter().any(|x| ids.contains(x)))
            }
        })
    }

    fn object(
        &mut self,
        e: &Expr,
        pre: &EntityStore,
        working: &EntityStore,
    ) -> Result<ObjectId, Fault> {
        match self.eval(e, pre, working)? {
            Value::Object(id) if working.contains(id) => Ok(id),
            v => Err(Fault(format!(
                "`{}` is {v}, not an existing object",
                print_expr(e)
            ))),
        }
    }

    fn effects(
        &mut self,
        nodes: &[EffectNode],
        pre: &EntityStore,
        working: &mut EntityStore,
    ) -> Result<(), Fault> {
        for n in nodes {
            match n {
                EffectNode::Action(i) => {
                    let a = &self.c.effect_actions[*i].action;
                    self.effect(a, pre, working)?;
                }
                EffectNode::Branch {
                    cond,
                    then,
                    otherwise,
                } => {
                    if self.guard(cond, pre)?.0 {
                        self.effects(then, pre, working)?;
                    } else {
                        self.effects(otherwise, pre, working)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn effect(
        &mut self,
        a: &Action,
        pre: &EntityStore,
        working: &mut EntityStore,
    ) -> Result<(), Fault> {
        match a {
            Action::CreateObject { var, entity } => {
                let id = working.create_object(entity)?;
                self.touched.insert(id);
                self.scope.bind(var, Value::Object(id));
            }
            Action::AddOneToManyAssociation {
                ob,
                association,
                target,
            } => {
                let id = self.object(ob, pre, working)?;
                let t = self.object(target, pre, working)?;
                working.add_link(id, association, t)?;
                self.touched.extend([id, t]);
            }
            Action::AddOneToOneAssociation {
                ob,
                association,
                target,
            } => {
                let id = self.object(ob, pre, working)?;
                let t = match self.eval(target, pre, working)? {
                    Value::Undefined => None,
                    Value::Object(t) if working.contains(t) => Some(t),
                    v => return Err(Fault(format!("cannot link `{}` to {v}", print_expr(ob)))),
                };
                working.set_link_one(id, association, t)?;
                self.touched.insert(id);
                self.touched.extend(t);
            }
            Action::UpdateObject {
                ob,
                attribute,
                op,
                value,
            } => {
                let id = self.object(ob, pre, working)?;
                if !pre.contains(id) {
                    return Err(Fault(format!(
                        "`{}` has no previous `{attribute}` to update",
                        print_expr(ob)
                    )));
                }
                let old = pre.attribute(id, attribute)?.clone();
                let v = self.eval(value, pre, working)?;
                let new = crate::ocl::arith(*op, old, v)?;
                if new.is_undefined() {
                    return Err(Fault(format!(
                        "`{}.{attribute}` would become undefined",
                        print_expr(ob)
                    )));
                }
                working.set_attribute(id, attribute, new)?;
                self.touched.insert(id);
            }
            Action::UpdateObjectWithNew {
                ob,
                attribute,
                value,
            } => {
                let id = self.object(ob, pre, working)?;
                let v = self.eval(value, pre, working)?;
                if v.is_undefined() {
                    return Err(Fault(format!(
                        "`{}.{attribute}` would become undefined",
                        print_expr(ob)
                    )));
                }
                working.set_attribute(id, attribute, v)?;
                self.touched.insert(id);
            }
            Action::ReleaseObject { ob } => {
                let id = self.object(ob, pre, working)?;
                working.release_object(id)?;
                self.touched.insert(id);
            }
            Action::RemoveOneToManyAssociation {
                ob,
                association,
                target,
            } => {
                let id = self.object(ob, pre, working)?;
                if let Some(t) = self.eval(target, pre, working)?.as_object() {
                    working.remove_link(id, association, t)?;
                    self.touched.insert(t);
                }
                self.touched.insert(id);
            }
            Action::RemoveOneToOneAssociation { ob, association } => {
                let id = self.object(ob, pre, working)?;
                let end = working
                    .entity_of(id)
                    .and_then(|e| e.association(association))
                    .map(|(_, end)| end.multiplicity);
                if end != Some(Multiplicity::One) {
                    return Err(Fault(format!("`{association}` is not a single-valued end")));
                }
                working.set_link_one(id, association, None)?;
                self.touched.insert(id);
            }
            other => return Err(Fault(format!("{} is not an effect", other.kind()))),
        }
        Ok(())
    }
}

fn standard_op(op: StandardOp, v: &Value, state: &EntityStore) -> bool {
    match op {
        StandardOp::OclIsUndefined => match v {
            Value::Undefined => true,
            Value::Object(id) => !state.contains(*id),
            _ => false,
        },
        // in a single state nothing is new
        StandardOp::OclIsNew => false,
    }
}
