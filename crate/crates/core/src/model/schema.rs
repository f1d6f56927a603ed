//! Resolved entity schema: attribute types, both ends of every association,
//! and the enumerations. Shared by the type checker and the runtime.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{EnumDecl, RequirementModel};
use crate::diag::{DiagCode, Diagnostic};
use crate::ocl::Type;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Multiplicity {
    One,
    Many,
}

impl Multiplicity {
    pub fn symbol(self) -> &'static str {
        match self {
            Multiplicity::One => "1",
            Multiplicity::Many => "*",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttrType {
    Integer,
    Real,
    Boolean,
    String,
    Date,
    Enum(String),
}

impl AttrType {
    pub fn to_type(&self) -> Type {
        match self {
            AttrType::Integer => Type::Integer,
            AttrType::Real => Type::Real,
            AttrType::Boolean => Type::Boolean,
            AttrType::String => Type::String,
            AttrType::Date => Type::Date,
            AttrType::Enum(e) => Type::Enum(e.clone()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AttrType::Integer => "Integer",
            AttrType::Real => "Real",
            AttrType::Boolean => "Boolean",
            AttrType::String => "String",
            AttrType::Date => "Date",
            AttrType::Enum(e) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssociationEnd {
    pub name: String,
    pub target: String,
    pub multiplicity: Multiplicity,
    pub inverse: Option<String>,
    /// False for ends derived from an `inverse` clause on the other side.
    pub declared: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EntitySchema {
    pub name: String,
    pub attributes: Vec<(String, AttrType)>,
    pub associations: Vec<AssociationEnd>,
}

impl EntitySchema {
    pub fn attribute(&self, name: &str) -> Option<(usize, &AttrType)> {
        self.attributes
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| (i, &self.attributes[i].1))
    }

    pub fn association(&self, name: &str) -> Option<(usize, &AssociationEnd)> {
        self.associations
            .iter()
            .position(|a| a.name == name)
            .map(|i| (i, &self.associations[i]))
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Schema {
    pub entities: Vec<EntitySchema>,
    pub enums: Vec<EnumDecl>,
}

impl Schema {
    /// Builds the schema, reporting unresolved types and clashing ends.
    /// Entities with duplicate names keep their first declaration.
    pub fn from_model(model: &RequirementModel) -> (Schema, Vec<Diagnostic>) {
        let mut diags = Vec::new();
        let mut schema = Schema::default();
        for e in &model.enums {
            if schema.enum_decl(&e.name).is_none() {
                let mut e = e.clone();
                e.span = Default::default();
                schema.enums.push(e);
            }
        }
        let decls: Vec<_> = {
            let mut seen = Vec::new();
            model
                .entities
                .iter()
                .filter(|e| {
                    if seen.contains(&e.name.as_str()) {
                        false
                    } else {
                        seen.push(e.name.as_str());
                        true
                    }
                })
                .collect()
        };
        for decl in &decls {
            let mut attributes = Vec::new();
            for a in &decl.attributes {
                let ty = match &a.ty {
                    Type::Integer => AttrType::Integer,
                    Type::Real => AttrType::Real,
                    Type::Boolean => AttrType::Boolean,
                    Type::String => AttrType::String,
                    Type::Date => AttrType::Date,
                    Type::Enum(n) | Type::Object(n) if schema.enum_decl(n).is_some() => {
                        AttrType::Enum(n.clone())
                    }
                    Type::Object(n) if decls.iter().any(|d| &d.name == n) => {
                        diags.push(Diagnostic::error(
                            DiagCode::TypeError,
                            a.span.clone(),
                            format!(
                                "attribute `{}` has entity type `{n}`; declare an association instead",
                                a.name
                            ),
                        ));
                        continue;
                    }
                    other => {
                        diags.push(Diagnostic::error(
                            DiagCode::ResolutionError,
                            a.span.clone(),
                            format!("unknown attribute type `{other}` for `{}`", a.name),
                        ));
                        continue;
                    }
                };
                attributes.push((a.name.clone(), ty));
            }
            schema.entities.push(EntitySchema {
                name: decl.name.clone(),
                attributes,
                associations: Vec::new(),
            });
        }
        // declared ends first, in declaration order, then derived inverses
        for decl in &decls {
            for a in &decl.associations {
                if schema.entity(&a.target).is_none() {
                    diags.push(Diagnostic::error(
                        DiagCode::ResolutionError,
                        a.span.clone(),
                        format!(
                            "association `{}.{}` targets unknown entity `{}`",
                            decl.name, a.name, a.target
                        ),
                    ));
                    continue;
                }
                let end = AssociationEnd {
                    name: a.name.clone(),
                    target: a.target.clone(),
                    multiplicity: a.multiplicity,
                    inverse: a.inverse.as_ref().map(|(n, _)| n.clone()),
                    declared: true,
                };
                schema.entity_mut(&decl.name).associations.push(end);
            }
        }
        for decl in &decls {
            for a in &decl.associations {
                let Some((inv, mult)) = &a.inverse else {
                    continue;
                };
                if schema.entity(&a.target).is_none() {
                    continue;
                }
                let target = schema.entity_mut(&a.target);
                if target.association(inv).is_some() || target.attribute(inv).is_some() {
                    diags.push(Diagnostic::error(
                        DiagCode::DuplicateError,
                        a.span.clone(),
                        format!("inverse end `{inv}` already exists on `{}`", a.target),
                    ));
                    continue;
                }
                target.associations.push(AssociationEnd {
                    name: inv.clone(),
                    target: decl.name.clone(),
                    multiplicity: *mult,
                    inverse: Some(a.name.clone()),
                    declared: false,
                });
            }
        }
        for e in &schema.entities {
            for (i, (n, _)) in e.attributes.iter().enumerate() {
                if e.attributes[..i].iter().any(|(m, _)| m == n) {
                    let span = decls
                        .iter()
                        .find(|d| d.name == e.name)
                        .and_then(|d| d.attributes.iter().filter(|a| &a.name == n).nth(1))
                        .map(|a| a.span.clone())
                        .unwrap_or_default();
                    diags.push(Diagnostic::error(
                        DiagCode::DuplicateError,
                        span,
                        format!("attribute `{n}` declared twice on `{}`", e.name),
                    ));
                }
            }
            for (i, a) in e.associations.iter().enumerate() {
                let clash = e.associations[..i].iter().any(|b| b.name == a.name)
                    || e.attribute(&a.name).is_some();
                if clash && a.declared {
                    let span = decls
                        .iter()
                        .find(|d| d.name == e.name)
                        .and_then(|d| d.associations.iter().find(|x| x.name == a.name))
                        .map(|x| x.span.clone())
                        .unwrap_or_default();
                    diags.push(Diagnostic::error(
                        DiagCode::DuplicateError,
                        span,
                        format!("feature `{}` declared twice on `{}`", a.name, e.name),
                    ));
                }
            }
        }
        (schema, diags)
    }

    pub fn entity(&self, name: &str) -> Option<&EntitySchema> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.name == name)
    }

    fn entity_mut(&mut self, name: &str) -> &mut EntitySchema {
        self.entities
            .iter_mut()
            .find(|e| e.name == name)
            .expect("entity present")
    }

    pub fn enum_decl(&self, name: &str) -> Option<&EnumDecl> {
        self.enums.iter().find(|e| e.name == name)
    }

    /// Canonical text used for the store header hash.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for e in &self.enums {
            let _ = writeln!(out, "enum {} {}", e.name, e.literals.join(","));
        }
        for e in &self.entities {
            let _ = writeln!(out, "entity {}", e.name);
            for (n, t) in &e.attributes {
                let _ = writeln!(out, "  attr {n} {}", t.name());
            }
            for a in &e.associations {
                let _ = writeln!(
                    out,
                    "  assoc {} {} {} {}",
                    a.name,
                    a.target,
                    a.multiplicity.symbol(),
                    a.inverse.as_deref().unwrap_or("-")
                );
            }
        }
        out
    }

    /// Hex SHA-256 of [`Schema::canonical_text`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}
