//! The requirement model: conceptual classes, actors with use cases,
//! services arranging operations, and operation contracts.

mod parser;
mod print;
mod schema;
mod validate;

use crate::ocl::{Expr, Type};
use crate::span::Span;

pub use parser::{parse_model, parse_models, parse_syntax};
pub use print::print_model;
pub use schema::{AssociationEnd, AttrType, EntitySchema, Multiplicity, Schema};
pub use validate::{check_model, validate_model, RESULT, TODAY};

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RequirementModel {
    pub enums: Vec<EnumDecl>,
    pub entities: Vec<EntityDecl>,
    pub actors: Vec<ActorDecl>,
    pub services: Vec<ServiceDecl>,
    pub contracts: Vec<ContractDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumDecl {
    pub name: String,
    pub literals: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntityDecl {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
    /// Ends declared on this entity; inverse ends are derived in [`Schema`].
    pub associations: Vec<AssociationDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationDecl {
    pub name: String,
    pub target: String,
    pub multiplicity: Multiplicity,
    pub inverse: Option<(String, Multiplicity)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActorDecl {
    pub name: String,
    pub usecases: Vec<UseCaseDecl>,
    pub span: Span,
}

/// A use case names the operation that realizes it.
#[derive(Clone, Debug, PartialEq)]
pub struct UseCaseDecl {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceDecl {
    pub name: String,
    pub operations: Vec<OperationRef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperationRef {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

/// A named binding in a contract's definition block. Without an
/// initializer it declares a fresh object variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: String,
    pub declared: Option<Type>,
    pub init: Option<Expr>,
    pub span: Span,
}

impl Definition {
    /// Static type after checking: the declared type, else the
    /// initializer's inferred type.
    pub fn ty(&self) -> Type {
        match (&self.declared, &self.init) {
            (Some(t), _) => t.clone(),
            (None, Some(init)) => init.ty.clone(),
            (None, None) => Type::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractDecl {
    pub service: String,
    pub operation: String,
    pub inputs: Vec<Param>,
    pub output: Type,
    pub definitions: Vec<Definition>,
    pub precondition: Expr,
    pub postcondition: Expr,
    pub span: Span,
}

impl RequirementModel {
    pub fn contract(&self, operation: &str) -> Option<&ContractDecl> {
        self.contracts.iter().find(|c| c.operation == operation)
    }

    pub fn entity(&self, name: &str) -> Option<&EntityDecl> {
        self.entities.iter().find(|e| e.name == name)
    }

    /// Operations in service order, then any contracts no service lists.
    pub fn operations_in_order(&self) -> Vec<&ContractDecl> {
        let mut out: Vec<&ContractDecl> = Vec::new();
        for s in &self.services {
            for op in &s.operations {
                if let Some(c) = self.contract(&op.name) {
                    if !out.iter().any(|o| std::ptr::eq(*o, c)) {
                        out.push(c);
                    }
                }
            }
        }
        for c in &self.contracts {
            if !out.iter().any(|o| std::ptr::eq(*o, c)) {
                out.push(c);
            }
        }
        out
    }

    /// Concatenates the declarations of several models, preserving order.
    pub fn merge(models: impl IntoIterator<Item = RequirementModel>) -> RequirementModel {
        let mut out = RequirementModel::default();
        for m in models {
            out.enums.extend(m.enums);
            out.entities.extend(m.entities);
            out.actors.extend(m.actors);
            out.services.extend(m.services);
            out.contracts.extend(m.contracts);
        }
        out
    }

    /// Clears spans and inferred types for structural comparison.
    pub fn normalize(&mut self) {
        for e in &mut self.enums {
            e.span = Span::synthetic();
        }
        for e in &mut self.entities {
            e.span = Span::synthetic();
            for a in &mut e.attributes {
                a.span = Span::synthetic();
            }
            for a in &mut e.associations {
                a.span = Span::synthetic();
            }
        }
        for a in &mut self.actors {
            a.span = Span::synthetic();
            for u in &mut a.usecases {
                u.span = Span::synthetic();
            }
        }
        for s in &mut self.services {
            s.span = Span::synthetic();
            for o in &mut s.operations {
                o.span = Span::synthetic();
            }
        }
        for c in &mut self.contracts {
            c.span = Span::synthetic();
            for p in &mut c.inputs {
                p.span = Span::synthetic();
            }
            for d in &mut c.definitions {
                d.span = Span::synthetic();
                if let Some(init) = &mut d.init {
                    init.normalize();
                }
            }
            c.precondition.normalize();
            c.postcondition.normalize();
        }
    }

    pub fn normalized(&self) -> RequirementModel {
        let mut m = self.clone();
        m.normalize();
        m
    }
}
