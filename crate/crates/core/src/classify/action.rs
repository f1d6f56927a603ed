//! The seventeen atomic CRUD actions and their textual forms.

use std::fmt;

use crate::ocl::{print_expr, ArithOp, BoolOp, CmpOp, CollectionOp, Expr, ExprKind, StandardOp};
use crate::span::Span;

/// Where in the contract an action came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Definition,
    Precondition,
    Postcondition,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Definition => "definition",
            Role::Precondition => "precondition",
            Role::Postcondition => "postcondition",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    CreateObject,
    AddOneToManyAssociation,
    AddOneToOneAssociation,
    FindObject,
    FindObjects,
    FindAssociationObject,
    FindAssociationObjects,
    StandardOperationToObject,
    StandardOperationToObjects,
    CheckAttributeState,
    CheckObjectState,
    CheckCollectionState,
    UpdateObject,
    UpdateObjectWithNew,
    ReleaseObject,
    RemoveOneToManyAssociation,
    RemoveOneToOneAssociation,
}

impl ActionKind {
    pub const ALL: [ActionKind; 17] = [
        ActionKind::CreateObject,
        ActionKind::AddOneToManyAssociation,
        ActionKind::AddOneToOneAssociation,
        ActionKind::FindObject,
        ActionKind::FindObjects,
        ActionKind::FindAssociationObject,
        ActionKind::FindAssociationObjects,
        ActionKind::StandardOperationToObject,
        ActionKind::StandardOperationToObjects,
        ActionKind::CheckAttributeState,
        ActionKind::CheckObjectState,
        ActionKind::CheckCollectionState,
        ActionKind::UpdateObject,
        ActionKind::UpdateObjectWithNew,
        ActionKind::ReleaseObject,
        ActionKind::RemoveOneToManyAssociation,
        ActionKind::RemoveOneToOneAssociation,
    ];

    /// The entity-manager style name used in dumps and listings.
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::CreateObject => "createObject",
            ActionKind::AddOneToManyAssociation => "addOneToManyAssociation",
            ActionKind::AddOneToOneAssociation => "addOneToOneAssociation",
            ActionKind::FindObject => "findObject",
            ActionKind::FindObjects => "findObjects",
            ActionKind::FindAssociationObject => "findAssociationObject",
            ActionKind::FindAssociationObjects => "findAssociationObjects",
            ActionKind::StandardOperationToObject => "standardOperationToObject",
            ActionKind::StandardOperationToObjects => "standardOperationToObjects",
            ActionKind::CheckAttributeState => "checkAttributeState",
            ActionKind::CheckObjectState => "checkObjectState",
            ActionKind::CheckCollectionState => "checkCollectionState",
            ActionKind::UpdateObject => "updateObject",
            ActionKind::UpdateObjectWithNew => "updateObjectWithNew",
            ActionKind::ReleaseObject => "releaseObject",
            ActionKind::RemoveOneToManyAssociation => "removeOneToManyAssociation",
            ActionKind::RemoveOneToOneAssociation => "removeOneToOneAssociation",
        }
    }

    pub fn from_name(s: &str) -> Option<ActionKind> {
        ActionKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_definition(self) -> bool {
        matches!(
            self,
            ActionKind::FindObject
                | ActionKind::FindObjects
                | ActionKind::FindAssociationObject
                | ActionKind::FindAssociationObjects
        )
    }

    pub fn is_guard(self) -> bool {
        matches!(
            self,
            ActionKind::StandardOperationToObject
                | ActionKind::StandardOperationToObjects
                | ActionKind::CheckAttributeState
                | ActionKind::CheckObjectState
                | ActionKind::CheckCollectionState
        )
    }

    pub fn is_effect(self) -> bool {
        !self.is_definition() && !self.is_guard()
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One `it.feature op value` conjunct of a find.
#[derive(Clone, Debug, PartialEq)]
pub struct FindCriterion {
    pub feature: String,
    /// The feature is a single-valued association end.
    pub link: bool,
    pub op: CmpOp,
    pub value: Expr,
}

/// Operands of an action, shaped after its entity-manager signature.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    CreateObject {
        var: String,
        entity: String,
    },
    AddOneToManyAssociation {
        ob: Expr,
        association: String,
        target: Expr,
    },
    AddOneToOneAssociation {
        ob: Expr,
        association: String,
        target: Expr,
    },
    FindObject {
        var: String,
        entity: String,
        iterator: String,
        criteria: Vec<FindCriterion>,
    },
    /// `iterator` is `None` for a bare `E.allInstances()`.
    FindObjects {
        var: String,
        entity: String,
        iterator: Option<String>,
        criteria: Vec<FindCriterion>,
    },
    FindAssociationObject {
        var: String,
        ob: Expr,
        association: String,
    },
    FindAssociationObjects {
        var: String,
        ob: Expr,
        association: String,
    },
    StandardOperationToObject {
        ob: Expr,
        op: StandardOp,
    },
    StandardOperationToObjects {
        collection: Expr,
        op: CollectionOp,
        args: Vec<Expr>,
    },
    CheckAttributeState {
        ob: Expr,
        feature: String,
        link: bool,
        at_pre: bool,
        op: CmpOp,
        value: Expr,
    },
    CheckObjectState {
        ob: Expr,
        standard: StandardOp,
        op: CmpOp,
        value: Expr,
    },
    CheckCollectionState {
        collection: Expr,
        collection_op: CollectionOp,
        args: Vec<Expr>,
        op: CmpOp,
        value: Expr,
    },
    UpdateObject {
        ob: Expr,
        attribute: String,
        op: ArithOp,
        value: Expr,
    },
    UpdateObjectWithNew {
        ob: Expr,
        attribute: String,
        value: Expr,
    },
    ReleaseObject {
        ob: Expr,
    },
    RemoveOneToManyAssociation {
        ob: Expr,
        association: String,
        target: Expr,
    },
    RemoveOneToOneAssociation {
        ob: Expr,
        association: String,
    },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::CreateObject { .. } => ActionKind::CreateObject,
            Action::AddOneToManyAssociation { .. } => ActionKind::AddOneToManyAssociation,
            Action::AddOneToOneAssociation { .. } => ActionKind::AddOneToOneAssociation,
            Action::FindObject { .. } => ActionKind::FindObject,
            Action::FindObjects { .. } => ActionKind::FindObjects,
            Action::FindAssociationObject { .. } => ActionKind::FindAssociationObject,
            Action::FindAssociationObjects { .. } => ActionKind::FindAssociationObjects,
            Action::StandardOperationToObject { .. } => ActionKind::StandardOperationToObject,
            Action::StandardOperationToObjects { .. } => ActionKind::StandardOperationToObjects,
            Action::CheckAttributeState { .. } => ActionKind::CheckAttributeState,
            Action::CheckObjectState { .. } => ActionKind::CheckObjectState,
            Action::CheckCollectionState { .. } => ActionKind::CheckCollectionState,
            Action::UpdateObject { .. } => ActionKind::UpdateObject,
            Action::UpdateObjectWithNew { .. } => ActionKind::UpdateObjectWithNew,
            Action::ReleaseObject { .. } => ActionKind::ReleaseObject,
            Action::RemoveOneToManyAssociation { .. } => ActionKind::RemoveOneToManyAssociation,
            Action::RemoveOneToOneAssociation { .. } => ActionKind::RemoveOneToOneAssociation,
        }
    }

    /// The variable this action binds, if any.
    pub fn binds(&self) -> Option<&str> {
        match self {
            Action::CreateObject { var, .. }
            | Action::FindObject { var, .. }
            | Action::FindObjects { var, .. }
            | Action::FindAssociationObject { var, .. }
            | Action::FindAssociationObjects { var, .. } => Some(var),
            _ => None,
        }
    }

    /// Operand expressions, in signature order.
    pub fn operands(&self) -> Vec<&Expr> {
        match self {
            Action::CreateObject { .. } => vec![],
            Action::FindObject { criteria, .. } | Action::FindObjects { criteria, .. } => {
                criteria.iter().map(|c| &c.value).collect()
            }
            Action::AddOneToManyAssociation { ob, target, .. }
            | Action::AddOneToOneAssociation { ob, target, .. }
            | Action::RemoveOneToManyAssociation { ob, target, .. } => vec![ob, target],
            Action::FindAssociationObject { ob, .. }
            | Action::FindAssociationObjects { ob, .. }
            | Action::StandardOperationToObject { ob, .. }
            | Action::ReleaseObject { ob }
            | Action::RemoveOneToOneAssociation { ob, .. } => vec![ob],
            Action::StandardOperationToObjects {
                collection, args, ..
            } => {
                let mut v = vec![collection];
                v.extend(args);
                v
            }
            Action::CheckAttributeState { ob, value, .. }
            | Action::CheckObjectState { ob, value, .. }
            | Action::UpdateObject { ob, value, .. }
            | Action::UpdateObjectWithNew { ob, value, .. } => vec![ob, value],
            Action::CheckCollectionState {
                collection,
                args,
                value,
                ..
            } => {
                let mut v = vec![collection];
                v.extend(args);
                v.push(value);
                v
            }
        }
    }

    /// Whether any operand mentions `var` free.
    pub fn mentions(&self, var: &str) -> bool {
        self.operands().iter().any(|e| e.mentions_var(var))
    }

    /// Rebuilds the OCL clause this action was classified from (without
    /// any folded companion clause).
    pub fn pattern(&self) -> Expr {
        let b = Box::new;
        let mk = |kind| Expr::new(kind, Span::synthetic());
        let nav = |ob: &Expr, name: &str, link: bool, at_pre: bool| {
            let target = b(ob.clone());
            mk(if link {
                ExprKind::AssocNav {
                    target,
                    association: name.to_string(),
                    at_pre,
                }
            } else {
                ExprKind::AttrNav {
                    target,
                    attribute: name.to_string(),
                    at_pre,
                }
            })
        };
        let cmp = |l: Expr, op: CmpOp, r: Expr| {
            mk(ExprKind::Compare {
                lhs: b(l),
                op,
                rhs: b(r),
            })
        };
        let coll = |source: Expr, op: CollectionOp, args: Vec<Expr>| {
            mk(ExprKind::Collection {
                source: b(source),
                op,
                args,
            })
        };
        let std = |target: Expr, op: StandardOp| {
            mk(ExprKind::Standard {
                target: b(target),
                op,
            })
        };
        let tru = || mk(ExprKind::BoolLit(true));
        let var = |v: &str| mk(ExprKind::Var(v.to_string()));
        let body = |it: &str, criteria: &[FindCriterion]| {
            let mut parts = criteria.iter().map(|c| {
                cmp(
                    nav(&var(it), &c.feature, c.link, false),
                    c.op,
                    c.value.clone(),
                )
            });
            let first = parts.next().unwrap_or_else(tru);
            parts.fold(first, |acc, p| {
                mk(ExprKind::Bool {
                    lhs: b(acc),
                    op: BoolOp::And,
                    rhs: b(p),
                })
            })
        };
        match self {
            Action::CreateObject { var: v, .. } => std(var(v), StandardOp::OclIsNew),
            Action::AddOneToManyAssociation {
                ob,
                association,
                target,
            } => coll(
                nav(ob, association, true, false),
                CollectionOp::Includes,
                vec![target.clone()],
            ),
            Action::AddOneToOneAssociation {
                ob,
                association,
                target,
            } => cmp(nav(ob, association, true, false), CmpOp::Eq, target.clone()),
            Action::FindObject {
                entity,
                iterator,
                criteria,
                ..
            } => mk(ExprKind::Any {
                source: b(mk(ExprKind::AllInstances(entity.clone()))),
                var: iterator.clone(),
                body: b(body(iterator, criteria)),
            }),
            Action::FindObjects {
                entity,
                iterator,
                criteria,
                ..
            } => {
                let all = mk(ExprKind::AllInstances(entity.clone()));
                match iterator {
                    None => all,
                    Some(it) => mk(ExprKind::Select {
                        source: b(all),
                        var: it.clone(),
                        body: b(body(it, criteria)),
                    }),
                }
            }
            Action::FindAssociationObject {
                ob, association, ..
            }
            | Action::FindAssociationObjects {
                ob, association, ..
            } => nav(ob, association, true, false),
            Action::StandardOperationToObject { ob, op } => std(ob.clone(), *op),
            Action::StandardOperationToObjects {
                collection,
                op,
                args,
            } => coll(collection.clone(), *op, args.clone()),
            Action::CheckAttributeState {
                ob,
                feature,
                link,
                at_pre,
                op,
                value,
            } => cmp(nav(ob, feature, *link, *at_pre), *op, value.clone()),
            Action::CheckObjectState {
                ob,
                standard,
                op,
                value,
            } => cmp(std(ob.clone(), *standard), *op, value.clone()),
            Action::CheckCollectionState {
                collection,
                collection_op,
                args,
                op,
                value,
            } => cmp(
                coll(collection.clone(), *collection_op, args.clone()),
                *op,
                value.clone(),
            ),
            Action::UpdateObject {
                ob,
                attribute,
                op,
                value,
            } => cmp(
                nav(ob, attribute, false, false),
                CmpOp::Eq,
                mk(ExprKind::Arith {
                    lhs: b(nav(ob, attribute, false, true)),
                    op: *op,
                    rhs: b(value.clone()),
                }),
            ),
            Action::UpdateObjectWithNew {
                ob,
                attribute,
                value,
            } => cmp(nav(ob, attribute, false, false), CmpOp::Eq, value.clone()),
            Action::ReleaseObject { ob } => cmp(
                std(ob.clone(), StandardOp::OclIsUndefined),
                CmpOp::Eq,
                tru(),
            ),
            Action::RemoveOneToManyAssociation {
                ob,
                association,
                target,
            } => coll(
                nav(ob, association, true, false),
                CollectionOp::Excludes,
                vec![target.clone()],
            ),
            Action::RemoveOneToOneAssociation { ob, association } => cmp(
                std(
                    nav(ob, association, true, false),
                    StandardOp::OclIsUndefined,
                ),
                CmpOp::Eq,
                tru(),
            ),
        }
    }

    /// Operand list as shown in dumps: `user, LoanedNumber, +, 1`.
    pub fn args_text(&self) -> String {
        self.arg_parts().join(", ")
    }

    /// The entity-manager call without the bound variable:
    /// `findObject(User, UserID = uid)`.
    pub fn call_text(&self) -> String {
        let parts = self.arg_parts();
        let skip = usize::from(self.binds().is_some());
        format!("{}({})", self.kind(), parts[skip..].join(", "))
    }

    fn arg_parts(&self) -> Vec<String> {
        let p = print_expr;
        let crit = |cs: &[FindCriterion]| {
            if cs.is_empty() {
                "true".to_string()
            } else {
                cs.iter()
                    .map(|c| format!("{} {} {}", c.feature, c.op, p(&c.value)))
                    .collect::<Vec<_>>()
                    .join(" and ")
            }
        };
        let call = |op: CollectionOp, args: &[Expr]| {
            let a: Vec<String> = args.iter().map(p).collect();
            format!("{}({})", op.name(), a.join(", "))
        };
        let parts: Vec<String> = match self {
            Action::CreateObject { var, entity } => vec![var.clone(), entity.clone()],
            Action::AddOneToManyAssociation {
                ob,
                association,
                target,
            }
            | Action::AddOneToOneAssociation {
                ob,
                association,
                target,
            }
            | Action::RemoveOneToManyAssociation {
                ob,
                association,
                target,
            } => vec![p(ob), association.clone(), p(target)],
            Action::FindObject {
                var,
                entity,
                criteria,
                ..
            } => vec![var.clone(), entity.clone(), crit(criteria)],
            Action::FindObjects {
                var,
                entity,
                criteria,
                ..
            } => vec![var.clone(), entity.clone(), crit(criteria)],
            Action::FindAssociationObject {
                var,
                ob,
                association,
            }
            | Action::FindAssociationObjects {
                var,
                ob,
                association,
            } => vec![var.clone(), p(ob), association.clone()],
            Action::StandardOperationToObject { ob, op } => vec![p(ob), op.name().to_string()],
            Action::StandardOperationToObjects {
                collection,
                op,
                args,
            } => vec![p(collection), call(*op, args)],
            Action::CheckAttributeState {
                ob,
                feature,
                at_pre,
                op,
                value,
                ..
            } => {
                let f = if *at_pre {
                    format!("{feature}@pre")
                } else {
                    feature.clone()
                };
                vec![p(ob), f, op.symbol().to_string(), p(value)]
            }
            Action::CheckObjectState {
                ob,
                standard,
                op,
                value,
            } => vec![
                p(ob),
                standard.name().to_string(),
                op.symbol().to_string(),
                p(value),
            ],
            Action::CheckCollectionState {
                collection,
                collection_op,
                args,
                op,
                value,
            } => vec![
                p(collection),
                call(*collection_op, args),
                op.symbol().to_string(),
                p(value),
            ],
            Action::UpdateObject {
                ob,
                attribute,
                op,
                value,
            } => vec![p(ob), attribute.clone(), op.symbol().to_string(), p(value)],
            Action::UpdateObjectWithNew {
                ob,
                attribute,
                value,
            } => vec![p(ob), attribute.clone(), p(value)],
            Action::ReleaseObject { ob } => vec![p(ob)],
            Action::RemoveOneToOneAssociation { ob, association } => {
                vec![p(ob), association.clone()]
            }
        };
        parts
    }
}

/// A classified action with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicAction {
    pub action: Action,
    pub role: Role,
    /// Position of the clause the action was matched from.
    pub origin: Span,
    /// Positions of companion clauses folded into this action.
    pub folded: Vec<Span>,
}

impl AtomicAction {
    pub fn new(action: Action, role: Role, origin: Span) -> Self {
        AtomicAction {
            action,
            role,
            origin,
            folded: Vec::new(),
        }
    }

    pub fn kind(&self) -> ActionKind {
        self.action.kind()
    }
}

/// `kind(args) @ file:line:col`
impl fmt::Display for AtomicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}) @ {}",
            self.kind(),
            self.action.args_text(),
            self.origin
        )
    }
}
