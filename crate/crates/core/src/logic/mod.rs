//! Business-logic units: one per classified contract, grouped by service,
//! after a dataflow check of every variable use.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::classify::{classify_model, Action, ClassifiedContract, EffectNode};
use crate::diag::{sort_diagnostics, DiagCode, Diagnostic};
use crate::model::{Param, RequirementModel, Schema, TODAY};
use crate::ocl::{Expr, ExprKind, Type};
use crate::span::Span;

/// Name of the exception raised when a guard fails.
pub const FAILURE_NAME: &str = "PreconditionIsNotSatisfied";
/// Misspelling accepted as an alias in listings and tests.
pub const FAILURE_ALIAS: &str = "PreconditionIsNotSatified";

#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub name: String,
    pub inputs: Vec<Param>,
    pub output: Type,
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inputs: Vec<String> = self
            .inputs
            .iter()
            .map(|p| format!("{} : {}", p.name, p.ty))
            .collect();
        write!(f, "{}({}) : {}", self.name, inputs.join(", "), self.output)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureDescriptor {
    pub name: String,
    pub operation: String,
}

impl FailureDescriptor {
    pub fn matches_name(name: &str) -> bool {
        name == FAILURE_NAME || name == FAILURE_ALIAS
    }
}

/// An executable operation: definitions, a guard, effects and a result,
/// all held by the classified contract.
#[derive(Clone, Debug, PartialEq)]
pub struct BusinessLogicUnit {
    pub service: String,
    pub signature: Signature,
    pub contract: ClassifiedContract,
    pub failure: FailureDescriptor,
}

impl BusinessLogicUnit {
    pub fn operation(&self) -> &str {
        &self.signature.name
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceUnits {
    pub name: String,
    pub units: Vec<BusinessLogicUnit>,
}

/// The generated two-layer application: a schema for the entity store
/// and the units of every service.
#[derive(Clone, Debug)]
pub struct Application {
    pub schema: Arc<Schema>,
    pub services: Vec<ServiceUnits>,
}

impl Application {
    pub fn units(&self) -> impl Iterator<Item = &BusinessLogicUnit> {
        self.services.iter().flat_map(|s| &s.units)
    }

    pub fn unit(&self, operation: &str) -> Option<&BusinessLogicUnit> {
        self.units().find(|u| u.operation() == operation)
    }
}

/// Builds the unit for one contract after checking its dataflow.
pub fn generate_logic(c: &ClassifiedContract) -> Result<BusinessLogicUnit, Vec<Diagnostic>> {
    let mut diags = check_dataflow(c);
    if !diags.is_empty() {
        sort_diagnostics(&mut diags);
        return Err(diags);
    }
    Ok(BusinessLogicUnit {
        service: c.service.clone(),
        signature: Signature {
            name: c.operation.clone(),
            inputs: c.inputs.clone(),
            output: c.output.clone(),
        },
        contract: c.clone(),
        failure: FailureDescriptor {
            name: FAILURE_NAME.to_string(),
            operation: c.operation.clone(),
        },
    })
}

/// Classifies and generates every contract of a checked model.
pub fn generate_application(model: &RequirementModel) -> Result<Application, Vec<Diagnostic>> {
    let (schema, mut diags) = Schema::from_model(model);
    let classified = match classify_model(model) {
        Ok(c) => c,
        Err(d) => {
            diags.extend(d);
            Vec::new()
        }
    };
    let mut services: Vec<ServiceUnits> = model
        .services
        .iter()
        .map(|s| ServiceUnits {
            name: s.name.clone(),
            units: Vec::new(),
        })
        .collect();
    for c in &classified {
        match generate_logic(c) {
            Ok(u) => match services.iter_mut().find(|s| s.name == u.service) {
                Some(s) => s.units.push(u),
                None => services.push(ServiceUnits {
                    name: u.service.clone(),
                    units: vec![u],
                }),
            },
            Err(d) => diags.extend(d),
        }
    }
    if diags.is_empty() {
        Ok(Application {
            schema: Arc::new(schema),
            services,
        })
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

/// Free variables of an expression.
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    fn go(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match &e.kind {
            ExprKind::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            ExprKind::Any { source, var, body } | ExprKind::Select { source, var, body } => {
                go(source, bound, out);
                bound.push(var.clone());
                go(body, bound, out);
                bound.pop();
            }
            ExprKind::Let { binding, body } => {
                if let Some(init) = &binding.init {
                    go(init, bound, out);
                }
                bound.push(binding.name.clone());
                go(body, bound, out);
                bound.pop();
            }
            _ => {
                for c in e.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

struct Flow<'c> {
    c: &'c ClassifiedContract,
    diags: Vec<Diagnostic>,
}

impl Flow<'_> {
    fn uses(&mut self, exprs: &[&Expr], avail: &BTreeSet<String>, span: &Span) {
        for e in exprs {
            for v in free_vars(e) {
                if !avail.contains(&v) {
                    let why = if self.c.fresh_entity(&v).is_some() {
                        "is used before the object is created"
                    } else {
                        "has no value at this point"
                    };
                    self.diags.push(Diagnostic::error(
                        DiagCode::DataflowError,
                        span.clone(),
                        format!("in `{}`: `{v}` {why}", self.c.operation),
                    ));
                }
            }
        }
    }

    fn guard(&mut self, leaves: Vec<usize>, avail: &BTreeSet<String>) {
        for i in leaves {
            let a = &self.c.guard_actions[i];
            self.uses(&a.action.operands(), avail, &a.origin);
        }
    }

    /// Walks a block and returns the variables it creates.
    fn block(&mut self, nodes: &[EffectNode], avail: &mut BTreeSet<String>) -> BTreeSet<String> {
        let mut created = BTreeSet::new();
        for n in nodes {
            match n {
                EffectNode::Action(i) => {
                    let a = &self.c.effect_actions[*i];
                    self.uses(&a.action.operands(), avail, &a.origin);
                    if let Action::CreateObject { var, .. } = &a.action {
                        avail.insert(var.clone());
                        created.insert(var.clone());
                    }
                }
                EffectNode::Branch {
                    cond,
                    then,
                    otherwise,
                } => {
                    self.guard(cond.leaves(), avail);
                    let mut t_avail = avail.clone();
                    let mut o_avail = avail.clone();
                    let t = self.block(then, &mut t_avail);
                    let o = self.block(otherwise, &mut o_avail);
                    for v in t.intersection(&o) {
                        avail.insert(v.clone());
                        created.insert(v.clone());
                    }
                }
            }
        }
        created
    }
}

/// Every variable must have a value wherever it is read: inputs and
/// `today` always, finds and locals after their definition, fresh objects
/// after their creation. A creation inside one branch only is visible
/// after the branch if the other branch creates it too.
pub fn check_dataflow(c: &ClassifiedContract) -> Vec<Diagnostic> {
    let mut flow = Flow {
        c,
        diags: Vec::new(),
    };
    let mut avail: BTreeSet<String> = c.inputs.iter().map(|p| p.name.clone()).collect();
    avail.insert(TODAY.to_string());
    for a in &c.definition_actions {
        flow.uses(&a.action.operands(), &avail, &a.origin);
        if let Some(v) = a.action.binds() {
            avail.insert(v.to_string());
        }
    }
    for l in &c.pre_locals {
        if let Some(init) = &l.init {
            flow.uses(&[init], &avail, &init.span);
        }
        avail.insert(l.name.clone());
    }
    flow.guard(c.guard.leaves(), &avail);
    for l in &c.post_locals {
        if let Some(init) = &l.init {
            flow.uses(&[init], &avail, &init.span);
        }
        avail.insert(l.name.clone());
    }
    flow.block(&c.effects, &mut avail);
    match &c.result {
        Some(r) => flow.uses(&[r], &avail, &r.span),
        None if c.output != Type::Boolean => flow.diags.push(Diagnostic::error(
            DiagCode::DataflowError,
            c.span.clone(),
            format!(
                "in `{}`: output is {} but the postcondition never sets `result`",
                c.operation, c.output
            ),
        )),
        None => {}
    }
    flow.diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const SCHEMA: &str = "
        entity User { UserID : Integer; N : Integer; Loans : Loan[*] inverse Owner[1]; }
        entity Loan { Done : Boolean; }
        service S { op; }
    ";

    fn generate(contract: &str) -> Result<Application, Vec<Diagnostic>> {
        let m = parse_model(&format!("{SCHEMA}\n{contract}"), "t.rm").unwrap();
        generate_application(&m)
    }

    #[test]
    fn creation_in_one_branch_is_not_visible_after() {
        let err = generate(
            "contract S::op(id : Integer) : Boolean {
               definition: u = User.allInstances()->any(x | x.UserID = id); l : Loan;
               postcondition: (if u.N@pre > 1 then l.oclIsNew() else true endif) and u.Loans->includes(l)
             }",
        )
        .unwrap_err();
        assert_eq!(err[0].code, DiagCode::DataflowError);
        assert!(err[0].message.contains("`l`"), "{}", err[0].message);

        let ok = generate(
            "contract S::op(id : Integer) : Boolean {
               definition: u = User.allInstances()->any(x | x.UserID = id); l : Loan;
               postcondition: (if u.N@pre > 1 then l.oclIsNew() and l.Done = true else l.oclIsNew() endif)
                  and u.Loans->includes(l)
             }",
        );
        assert!(ok.is_ok(), "{ok:?}");
    }

    #[test]
    fn result_is_required_for_non_boolean_output() {
        let err = generate("contract S::op() : Integer { }").unwrap_err();
        assert_eq!(err[0].code, DiagCode::DataflowError);
        let app = generate("contract S::op() : Integer { postcondition: result = 3 }").unwrap();
        assert_eq!(app.unit("op").unwrap().failure.name, FAILURE_NAME);
    }

    #[test]
    fn fresh_object_in_guard_is_rejected() {
        let err = generate(
            "contract S::op() : Boolean {
               definition: l : Loan;
               precondition: l.Done = false
               postcondition: l.oclIsNew()
             }",
        )
        .unwrap_err();
        assert_eq!(err[0].code, DiagCode::DataflowError);
    }

    #[test]
    fn free_vars_respect_binders() {
        let m = parse_model(
            &format!(
                "{SCHEMA} contract S::op(id : Integer) : Boolean {{
                   precondition: User.allInstances()->exists(u | u.UserID = id) or true }}"
            ),
            "t.rm",
        );
        // `exists` is not part of the language
        assert!(m.is_err());
        let m = parse_model(
            &format!(
                "{SCHEMA} contract S::op(id : Integer) : Boolean {{
                   definition: us = User.allInstances()->select(u | u.UserID = id);
                   precondition: us->notEmpty() }}"
            ),
            "t.rm",
        )
        .unwrap();
        let init = m.contracts[0].definitions[0].init.as_ref().unwrap();
        assert_eq!(free_vars(init).into_iter().collect::<Vec<_>>(), ["id"]);
    }
}
