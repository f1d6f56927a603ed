//! The classification rules.

use super::{
    Action, ActionKind, AtomicAction, ClassifiedContract, EffectNode, FindCriterion, GuardTree,
    Role,
};
use crate::diag::{sort_diagnostics, DiagCode, Diagnostic};
use crate::model::{ContractDecl, Definition, RequirementModel, RESULT};
use crate::ocl::{
    assignable, print_expr, BoolOp, CmpOp, CollectionOp, Expr, ExprKind, StandardOp, Type,
};
use crate::span::Span;

type CResult<T> = Result<T, Diagnostic>;

/// Classifies every contract, in service order.
pub fn classify_model(
    model: &RequirementModel,
) -> Result<Vec<ClassifiedContract>, Vec<Diagnostic>> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for c in model.operations_in_order() {
        match classify_contract(c) {
            Ok(cc) => out.push(cc),
            Err(d) => diags.extend(d),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

/// Classifies one type-checked contract.
pub fn classify_contract(c: &ContractDecl) -> Result<ClassifiedContract, Vec<Diagnostic>> {
    let mut cl = Classifier {
        op: &c.operation,
        fresh: Vec::new(),
        guards: Vec::new(),
        diags: Vec::new(),
        pre_companions: Vec::new(),
        post_companions: Vec::new(),
        result: None,
    };

    let mut definition_actions = Vec::new();
    for d in &c.definitions {
        match cl.definition(d) {
            Ok(Some(a)) => definition_actions.push(a),
            Ok(None) => {}
            Err(e) => cl.diags.push(e),
        }
    }

    let mut pre = &c.precondition;
    let mut pre_locals = Vec::new();
    while let ExprKind::Let { binding, body } = &pre.kind {
        pre_locals.push((**binding).clone());
        pre = body;
    }
    let guard = match cl.guard(pre, Role::Precondition, true) {
        Ok(g) => g,
        Err(e) => {
            cl.diags.push(e);
            GuardTree::True
        }
    };

    let mut post = &c.postcondition;
    let mut post_locals = Vec::new();
    while let ExprKind::Let { binding, body } = &post.kind {
        match (&binding.init, &binding.declared) {
            (None, Some(Type::Object(e))) => cl.fresh.push((binding.name.clone(), e.clone())),
            _ => post_locals.push((**binding).clone()),
        }
        post = body;
    }
    let mut nodes = Vec::new();
    cl.block(post, &mut nodes);
    cl.fold_companions(&mut nodes);
    hoist(&mut nodes, &cl.guards);

    if !cl.diags.is_empty() {
        sort_diagnostics(&mut cl.diags);
        return Err(cl.diags);
    }
    let mut effect_actions = Vec::new();
    let effects = flatten(nodes, &mut effect_actions);
    Ok(ClassifiedContract {
        service: c.service.clone(),
        operation: c.operation.clone(),
        inputs: c.inputs.clone(),
        output: c.output.clone(),
        span: c.span.clone(),
        definition_actions,
        fresh: cl.fresh,
        pre_locals,
        guard_actions: cl.guards,
        guard,
        post_locals,
        effect_actions,
        effects,
        result: cl.result,
    })
}

/// Effects before numbering.
#[allow(clippy::large_enum_variant)]
enum Node {
    Act(AtomicAction),
    Branch {
        cond: GuardTree,
        then: Vec<Node>,
        otherwise: Vec<Node>,
    },
}

/// A clause that only restates another action's effect on an extent.
enum Companion {
    Create { var: String, span: Span },
    Release { ob: Expr, span: Span },
}

struct Classifier<'a> {
    op: &'a str,
    fresh: Vec<(String, String)>,
    guards: Vec<AtomicAction>,
    diags: Vec<Diagnostic>,
    pre_companions: Vec<(String, Span)>,
    post_companions: Vec<Companion>,
    result: Option<Expr>,
}

fn var_name(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Var(v) => Some(v),
        _ => None,
    }
}

fn is_object(e: &Expr) -> bool {
    matches!(e.ty, Type::Object(_))
}

fn is_set(e: &Expr) -> bool {
    matches!(e.ty, Type::Set(_))
}

fn has_iteration(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |n| {
        if matches!(n.kind, ExprKind::Any { .. } | ExprKind::Select { .. }) {
            found = true;
        }
    });
    found
}

fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Bool {
            lhs,
            op: BoolOp::And,
            rhs,
        } => {
            let mut v = conjuncts(lhs);
            v.extend(conjuncts(rhs));
            v
        }
        _ => vec![e],
    }
}

fn disjuncts(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Bool {
            lhs,
            op: BoolOp::Or,
            rhs,
        } => {
            let mut v = disjuncts(lhs);
            v.extend(disjuncts(rhs));
            v
        }
        _ => vec![e],
    }
}

impl Classifier<'_> {
    fn error(&self, code: DiagCode, e: &Expr, why: &str) -> Diagnostic {
        Diagnostic::error(
            code,
            e.span.clone(),
            format!("in `{}`: `{}` {why}", self.op, print_expr(e)),
        )
    }

    fn is_fresh(&self, v: &str, entity: Option<&str>) -> bool {
        self.fresh
            .iter()
            .any(|(n, e)| n == v && entity.is_none_or(|x| x == e))
    }

    fn definition(&mut self, d: &Definition) -> CResult<Option<AtomicAction>> {
        let Some(init) = &d.init else {
            if let Some(Type::Object(e)) = &d.declared {
                self.fresh.push((d.name.clone(), e.clone()));
            }
            return Ok(None);
        };
        let bad = |why: &str| self.error(DiagCode::UnclassifiableDefinition, init, why);
        let var = d.name.clone();
        let action = match &init.kind {
            ExprKind::Any {
                source,
                var: it,
                body,
            } => {
                let ExprKind::AllInstances(entity) = &source.kind else {
                    return Err(bad("searches something other than an entity extent"));
                };
                Action::FindObject {
                    var,
                    entity: entity.clone(),
                    iterator: it.clone(),
                    criteria: criteria(body, it).map_err(|w| bad(&w))?,
                }
            }
            ExprKind::Select {
                source,
                var: it,
                body,
            } => {
                let ExprKind::AllInstances(entity) = &source.kind else {
                    return Err(bad("searches something other than an entity extent"));
                };
                Action::FindObjects {
                    var,
                    entity: entity.clone(),
                    iterator: Some(it.clone()),
                    criteria: criteria(body, it).map_err(|w| bad(&w))?,
                }
            }
            ExprKind::AllInstances(entity) => Action::FindObjects {
                var,
                entity: entity.clone(),
                iterator: None,
                criteria: Vec::new(),
            },
            ExprKind::AssocNav {
                target,
                association,
                at_pre: false,
            } if is_object(target) => {
                if is_set(init) {
                    Action::FindAssociationObjects {
                        var,
                        ob: (**target).clone(),
                        association: association.clone(),
                    }
                } else {
                    Action::FindAssociationObject {
                        var,
                        ob: (**target).clone(),
                        association: association.clone(),
                    }
                }
            }
            _ => return Err(bad("is not a find or an association navigation")),
        };
        Ok(Some(AtomicAction::new(
            action,
            Role::Definition,
            init.span.clone(),
        )))
    }

    fn push_guard(&mut self, a: Action, role: Role, e: &Expr) -> GuardTree {
        self.guards.push(AtomicAction::new(a, role, e.span.clone()));
        GuardTree::Leaf(self.guards.len() - 1)
    }

    /// `positive` is true while `e` sits only under conjunctions of the
    /// precondition, where extent companions may be folded.
    fn guard(&mut self, e: &Expr, role: Role, positive: bool) -> CResult<GuardTree> {
        Ok(match &e.kind {
            ExprKind::BoolLit(true) => GuardTree::True,
            ExprKind::BoolLit(false) => GuardTree::False,
            ExprKind::Bool {
                op: BoolOp::And, ..
            } => GuardTree::And(
                conjuncts(e)
                    .into_iter()
                    .map(|c| self.guard(c, role, positive))
                    .collect::<CResult<_>>()?,
            ),
            ExprKind::Bool { op: BoolOp::Or, .. } => GuardTree::Or(
                disjuncts(e)
                    .into_iter()
                    .map(|c| self.guard(c, role, false))
                    .collect::<CResult<_>>()?,
            ),
            ExprKind::Not(inner) => GuardTree::Not(Box::new(self.guard(inner, role, false)?)),
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => GuardTree::If {
                cond: Box::new(self.guard(cond, role, false)?),
                then: Box::new(self.guard(then, role, false)?),
                otherwise: Box::new(self.guard(otherwise, role, false)?),
            },
            ExprKind::Collection {
                source,
                op: CollectionOp::Excludes,
                args,
            } if positive && role == Role::Precondition => {
                let fresh = match (&source.kind, var_name(&args[0])) {
                    (ExprKind::AllInstances(ent), Some(v)) if self.is_fresh(v, Some(ent)) => {
                        Some(v.to_string())
                    }
                    _ => None,
                };
                match fresh {
                    Some(v) => {
                        self.pre_companions.push((v, e.span.clone()));
                        GuardTree::True
                    }
                    None => {
                        let a = self.guard_leaf(e, role)?;
                        self.push_guard(a, role, e)
                    }
                }
            }
            _ => {
                let a = self.guard_leaf(e, role)?;
                self.push_guard(a, role, e)
            }
        })
    }

    fn guard_leaf(&self, e: &Expr, role: Role) -> CResult<Action> {
        let code = match role {
            Role::Postcondition => DiagCode::UnclassifiablePostcondition,
            _ => DiagCode::UnclassifiablePrecondition,
        };
        Ok(match &e.kind {
            ExprKind::Compare { lhs, op, rhs } => match &lhs.kind {
                ExprKind::AttrNav {
                    target,
                    attribute,
                    at_pre,
                } => Action::CheckAttributeState {
                    ob: (**target).clone(),
                    feature: attribute.clone(),
                    link: false,
                    at_pre: *at_pre,
                    op: *op,
                    value: (**rhs).clone(),
                },
                ExprKind::AssocNav {
                    target,
                    association,
                    at_pre,
                } if is_object(lhs) => Action::CheckAttributeState {
                    ob: (**target).clone(),
                    feature: association.clone(),
                    link: true,
                    at_pre: *at_pre,
                    op: *op,
                    value: (**rhs).clone(),
                },
                ExprKind::Standard { target, op: std } if is_object(target) => {
                    Action::CheckObjectState {
                        ob: (**target).clone(),
                        standard: *std,
                        op: *op,
                        value: (**rhs).clone(),
                    }
                }
                ExprKind::Collection {
                    source,
                    op: cop,
                    args,
                } if is_set(source) => Action::CheckCollectionState {
                    collection: (**source).clone(),
                    collection_op: *cop,
                    args: args.clone(),
                    op: *op,
                    value: (**rhs).clone(),
                },
                _ => {
                    return Err(self.error(
                        code,
                        e,
                        "compares something other than an attribute, a standard operation or a collection operation",
                    ))
                }
            },
            ExprKind::Standard { target, op } if is_object(target) => {
                Action::StandardOperationToObject {
                    ob: (**target).clone(),
                    op: *op,
                }
            }
            ExprKind::Collection { source, op, args }
                if is_set(source) && *op != CollectionOp::Size =>
            {
                Action::StandardOperationToObjects {
                    collection: (**source).clone(),
                    op: *op,
                    args: args.clone(),
                }
            }
            _ => return Err(self.error(code, e, "is not a state check")),
        })
    }

    fn block(&mut self, e: &Expr, out: &mut Vec<Node>) {
        for c in conjuncts(e) {
            if let Err(d) = self.clause(c, out) {
                self.diags.push(d);
            }
        }
    }

    fn effect(&self, a: Action, e: &Expr) -> Node {
        Node::Act(AtomicAction::new(a, Role::Postcondition, e.span.clone()))
    }

    fn clause(&mut self, e: &Expr, out: &mut Vec<Node>) -> CResult<()> {
        let bad = |why: &str| self.error(DiagCode::UnclassifiablePostcondition, e, why);
        match &e.kind {
            ExprKind::BoolLit(true) => {}
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let cond = self.guard(cond, Role::Postcondition, false)?;
                let mut t = Vec::new();
                let mut o = Vec::new();
                self.block(then, &mut t);
                self.block(otherwise, &mut o);
                out.push(Node::Branch {
                    cond,
                    then: t,
                    otherwise: o,
                });
            }
            ExprKind::Standard {
                target,
                op: StandardOp::OclIsNew,
            } => {
                let Some(v) = var_name(target).filter(|v| self.is_fresh(v, None)) else {
                    return Err(bad(
                        "marks as new something that is not a declared fresh variable",
                    ));
                };
                let entity = self
                    .fresh
                    .iter()
                    .find(|(n, _)| n == v)
                    .map(|(_, e)| e.clone())
                    .unwrap_or_default();
                out.push(self.effect(
                    Action::CreateObject {
                        var: v.to_string(),
                        entity,
                    },
                    e,
                ));
            }
            ExprKind::Collection {
                source,
                op: op @ (CollectionOp::Includes | CollectionOp::Excludes),
                args,
            } => {
                let x = &args[0];
                match &source.kind {
                    ExprKind::AllInstances(ent) if *op == CollectionOp::Includes => {
                        match var_name(x).filter(|v| self.is_fresh(v, Some(ent))) {
                            Some(v) => self.post_companions.push(Companion::Create {
                                var: v.to_string(),
                                span: e.span.clone(),
                            }),
                            None => {
                                return Err(bad("adds to an extent something not created here"))
                            }
                        }
                    }
                    ExprKind::AllInstances(ent) => {
                        if x.ty.entity() != Some(ent.as_str()) {
                            return Err(bad("removes from an extent an object of another entity"));
                        }
                        self.post_companions.push(Companion::Release {
                            ob: x.normalized(),
                            span: e.span.clone(),
                        });
                    }
                    ExprKind::AssocNav {
                        target,
                        association,
                        at_pre: false,
                    } if is_set(source) => {
                        let (ob, association, target) =
                            ((**target).clone(), association.clone(), x.clone());
                        let a = if *op == CollectionOp::Includes {
                            Action::AddOneToManyAssociation {
                                ob,
                                association,
                                target,
                            }
                        } else {
                            Action::RemoveOneToManyAssociation {
                                ob,
                                association,
                                target,
                            }
                        };
                        out.push(self.effect(a, e));
                    }
                    _ => return Err(bad("does not name an association end of an object")),
                }
            }
            ExprKind::Compare {
                lhs,
                op: CmpOp::Eq,
                rhs,
            } => {
                let a = self.assignment(e, lhs, rhs)?;
                if let Some(a) = a {
                    out.push(self.effect(a, e));
                }
            }
            _ => return Err(bad("is not one of the recognized effect forms")),
        }
        Ok(())
    }

    /// Classifies `lhs = rhs`. `None` means the clause fixed the result.
    fn assignment(&mut self, e: &Expr, lhs: &Expr, rhs: &Expr) -> CResult<Option<Action>> {
        let equation = || {
            Diagnostic::error(
                DiagCode::EquationFormError,
                e.span.clone(),
                format!(
                    "in `{}`: `{}` is an equation, not an update; state the new value \
                     directly as `object.attribute = expression`",
                    self.op,
                    print_expr(e)
                ),
            )
        };
        let stores = matches!(&lhs.kind, ExprKind::Var(v) if v == RESULT)
            || matches!(&lhs.kind, ExprKind::AttrNav { at_pre: false, .. });
        if stores && !assignable(&lhs.ty, &rhs.ty) {
            let why = format!("stores a {} where {} is expected", rhs.ty, lhs.ty);
            return Err(self.error(DiagCode::TypeError, e, &why));
        }
        Ok(Some(match &lhs.kind {
            ExprKind::Var(v) if v == RESULT => {
                if self.result.is_some() {
                    return Err(self.error(
                        DiagCode::UnclassifiablePostcondition,
                        e,
                        "sets the result a second time",
                    ));
                }
                self.result = Some(rhs.clone());
                return Ok(None);
            }
            ExprKind::Standard {
                target,
                op: StandardOp::OclIsUndefined,
            } if rhs.kind == ExprKind::BoolLit(true) => match &target.kind {
                ExprKind::AssocNav {
                    target: ob,
                    association,
                    at_pre: false,
                } if is_object(target) => Action::RemoveOneToOneAssociation {
                    ob: (**ob).clone(),
                    association: association.clone(),
                },
                _ if is_object(target) => Action::ReleaseObject {
                    ob: (**target).clone(),
                },
                _ => {
                    return Err(self.error(
                        DiagCode::UnclassifiablePostcondition,
                        e,
                        "undefines something that is not an object",
                    ))
                }
            },
            ExprKind::AttrNav {
                target: ob,
                attribute,
                at_pre: false,
            } => {
                let ob_n = ob.normalized();
                let is_pre = |x: &Expr| match &x.kind {
                    ExprKind::AttrNav {
                        target,
                        attribute: a,
                        at_pre: true,
                    } => a == attribute && target.normalized() == ob_n,
                    _ => false,
                };
                let mentions_pre = |x: &Expr| {
                    let mut found = false;
                    x.walk(&mut |n| found |= is_pre(n));
                    found
                };
                match &rhs.kind {
                    ExprKind::Arith { lhs: l, op, rhs: v } if is_pre(l) && !mentions_pre(v) => {
                        Action::UpdateObject {
                            ob: (**ob).clone(),
                            attribute: attribute.clone(),
                            op: *op,
                            value: (**v).clone(),
                        }
                    }
                    _ if mentions_pre(rhs) => return Err(equation()),
                    _ => Action::UpdateObjectWithNew {
                        ob: (**ob).clone(),
                        attribute: attribute.clone(),
                        value: rhs.clone(),
                    },
                }
            }
            ExprKind::AssocNav {
                target: ob,
                association,
                at_pre: false,
            } if is_object(lhs) => Action::AddOneToOneAssociation {
                ob: (**ob).clone(),
                association: association.clone(),
                target: rhs.clone(),
            },
            _ => return Err(equation()),
        }))
    }

    fn fold_companions(&mut self, nodes: &mut [Node]) {
        for (v, span) in std::mem::take(&mut self.pre_companions) {
            let hit = find_act(
                nodes,
                &mut |a| matches!(&a.action, Action::CreateObject { var, .. } if *var == v),
            );
            match hit {
                Some(a) => a.folded.push(span),
                None => self.diags.push(Diagnostic::error(
                    DiagCode::UnclassifiablePrecondition,
                    span,
                    format!(
                        "in `{}`: `{v}` is required to be absent but is never created",
                        self.op
                    ),
                )),
            }
        }
        for c in std::mem::take(&mut self.post_companions) {
            let (hit, span, what) = match c {
                Companion::Create { var, span } => (
                    find_act(nodes, &mut |a| {
                        matches!(&a.action, Action::CreateObject { var: v, .. } if *v == var)
                    })
                    .map(|a| a.folded.push(span.clone()))
                    .is_some(),
                    span,
                    "extent inclusion has no matching object creation",
                ),
                Companion::Release { ob, span } => (
                    find_act(nodes, &mut |a| {
                        matches!(&a.action, Action::ReleaseObject { ob: o } if o.normalized() == ob)
                    })
                    .map(|a| a.folded.push(span.clone()))
                    .is_some(),
                    span,
                    "extent exclusion has no matching object release",
                ),
            };
            if !hit {
                self.diags.push(Diagnostic::error(
                    DiagCode::UnclassifiablePostcondition,
                    span,
                    format!("in `{}`: {what}", self.op),
                ));
            }
        }
    }
}

/// Splits a find body into `it.feature op value` criteria.
fn criteria(body: &Expr, it: &str) -> Result<Vec<FindCriterion>, String> {
    if body.kind == ExprKind::BoolLit(true) {
        return Ok(Vec::new());
    }
    conjuncts(body)
        .into_iter()
        .map(|c| {
            let ExprKind::Compare { lhs, op, rhs } = &c.kind else {
                return Err(format!(
                    "has a criterion `{}` that is not a comparison",
                    print_expr(c)
                ));
            };
            let (target, feature, link) = match &lhs.kind {
                ExprKind::AttrNav {
                    target,
                    attribute,
                    at_pre: false,
                } => (target, attribute, false),
                ExprKind::AssocNav {
                    target,
                    association,
                    at_pre: false,
                } if is_object(lhs) => (target, association, true),
                _ => {
                    return Err(format!(
                        "has a criterion `{}` whose left side is not a feature of `{it}`",
                        print_expr(c)
                    ))
                }
            };
            if var_name(target) != Some(it) {
                return Err(format!(
                    "has a criterion `{}` whose left side is not a feature of `{it}`",
                    print_expr(c)
                ));
            }
            if rhs.mentions_var(it) || has_iteration(rhs) {
                return Err(format!(
                    "has a criterion `{}` whose value depends on the iteration",
                    print_expr(c)
                ));
            }
            Ok(FindCriterion {
                feature: feature.clone(),
                link,
                op: *op,
                value: (**rhs).clone(),
            })
        })
        .collect()
}

fn find_act<'n>(
    nodes: &'n mut [Node],
    pred: &mut dyn FnMut(&AtomicAction) -> bool,
) -> Option<&'n mut AtomicAction> {
    for n in nodes {
        match n {
            Node::Act(a) => {
                if pred(a) {
                    return Some(a);
                }
            }
            Node::Branch {
                then, otherwise, ..
            } => {
                if let Some(a) = find_act(then, pred) {
                    return Some(a);
                }
                if let Some(a) = find_act(otherwise, pred) {
                    return Some(a);
                }
            }
        }
    }
    None
}

fn node_mentions(n: &Node, var: &str, guards: &[AtomicAction]) -> bool {
    match n {
        Node::Act(a) => a.action.mentions(var),
        Node::Branch {
            cond,
            then,
            otherwise,
        } => {
            cond.leaves()
                .iter()
                .any(|i| guards[*i].action.mentions(var))
                || then
                    .iter()
                    .chain(otherwise)
                    .any(|c| node_mentions(c, var, guards))
        }
    }
}

/// Moves each object creation in a block in front of the first sibling
/// that uses the new object.
fn hoist(nodes: &mut Vec<Node>, guards: &[AtomicAction]) {
    for n in nodes.iter_mut() {
        if let Node::Branch {
            then, otherwise, ..
        } = n
        {
            hoist(then, guards);
            hoist(otherwise, guards);
        }
    }
    let creates: Vec<String> = nodes
        .iter()
        .filter_map(|n| match n {
            Node::Act(a) if a.kind() == ActionKind::CreateObject => {
                a.action.binds().map(str::to_string)
            }
            _ => None,
        })
        .collect();
    for v in creates {
        let at = nodes
            .iter()
            .position(|n| matches!(n, Node::Act(a) if a.kind() == ActionKind::CreateObject && a.action.binds() == Some(&v)))
            .expect("create node present");
        if let Some(first) = nodes[..at]
            .iter()
            .position(|n| node_mentions(n, &v, guards))
        {
            let node = nodes.remove(at);
            nodes.insert(first, node);
        }
    }
}

fn flatten(nodes: Vec<Node>, actions: &mut Vec<AtomicAction>) -> Vec<EffectNode> {
    nodes
        .into_iter()
        .map(|n| match n {
            Node::Act(a) => {
                actions.push(a);
                EffectNode::Action(actions.len() - 1)
            }
            Node::Branch {
                cond,
                then,
                otherwise,
            } => {
                let then = flatten(then, actions);
                let otherwise = flatten(otherwise, actions);
                EffectNode::Branch {
                    cond,
                    then,
                    otherwise,
                }
            }
        })
        .collect()
}
