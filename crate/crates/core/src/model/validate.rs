//! Structural validation and contract type checking.

use std::collections::HashMap;

use super::{ContractDecl, RequirementModel, Schema};
use crate::diag::{sort_diagnostics, DiagCode, Diagnostic};
use crate::ocl::{check_expression, resolve_type, Phase, Type, TypeEnv};
use crate::span::Span;

/// Names bound implicitly in every contract.
pub const TODAY: &str = "today";
pub const RESULT: &str = "result";

/// Returns every diagnostic for `model`; empty when it is well formed.
pub fn validate_model(model: &RequirementModel) -> Vec<Diagnostic> {
    match check_model(model.clone()) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

/// Validates the model and returns it with every contract expression
/// resolved and type annotated.
pub fn check_model(mut model: RequirementModel) -> Result<RequirementModel, Vec<Diagnostic>> {
    let (schema, mut diags) = Schema::from_model(&model);
    structure(&model, &mut diags);
    for c in &mut model.contracts {
        check_contract(c, &schema, &mut diags);
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

fn dup(diags: &mut Vec<Diagnostic>, span: &Span, msg: String) {
    diags.push(Diagnostic::error(
        DiagCode::DuplicateError,
        span.clone(),
        msg,
    ));
}

fn structure(model: &RequirementModel, diags: &mut Vec<Diagnostic>) {
    let mut types: HashMap<&str, &Span> = HashMap::new();
    for e in &model.enums {
        if types.insert(&e.name, &e.span).is_some() {
            dup(
                diags,
                &e.span,
                format!("type `{}` is already declared", e.name),
            );
        }
        for (i, l) in e.literals.iter().enumerate() {
            if e.literals[..i].contains(l) {
                dup(
                    diags,
                    &e.span,
                    format!("literal `{l}` repeated in `{}`", e.name),
                );
            }
        }
    }
    for e in &model.entities {
        if types.insert(&e.name, &e.span).is_some() {
            dup(
                diags,
                &e.span,
                format!("type `{}` is already declared", e.name),
            );
        }
    }

    let mut actors: HashMap<&str, ()> = HashMap::new();
    let mut usecases: HashMap<&str, ()> = HashMap::new();
    for a in &model.actors {
        if actors.insert(&a.name, ()).is_some() {
            dup(
                diags,
                &a.span,
                format!("actor `{}` is already declared", a.name),
            );
        }
        for u in &a.usecases {
            if usecases.insert(&u.name, ()).is_some() {
                dup(
                    diags,
                    &u.span,
                    format!("use case `{}` is already declared", u.name),
                );
            }
            if model.contract(&u.name).is_none() {
                diags.push(Diagnostic::error(
                    DiagCode::ResolutionError,
                    u.span.clone(),
                    format!("use case `{}` has no operation contract", u.name),
                ));
            }
        }
    }

    let mut services: HashMap<&str, ()> = HashMap::new();
    let mut listed: HashMap<&str, &str> = HashMap::new();
    for s in &model.services {
        if services.insert(&s.name, ()).is_some() {
            dup(
                diags,
                &s.span,
                format!("service `{}` is already declared", s.name),
            );
        }
        for op in &s.operations {
            if let Some(other) = listed.insert(&op.name, &s.name) {
                dup(
                    diags,
                    &op.span,
                    format!("operation `{}` is already listed by `{other}`", op.name),
                );
            }
            let n = model
                .contracts
                .iter()
                .filter(|c| c.operation == op.name)
                .count();
            if n != 1 {
                diags.push(Diagnostic::error(
                    DiagCode::ContractArityError,
                    op.span.clone(),
                    format!(
                        "operation `{}` needs exactly one contract, found {n}",
                        op.name
                    ),
                ));
            }
        }
    }

    let mut seen: HashMap<&str, ()> = HashMap::new();
    for c in &model.contracts {
        let first = seen.insert(&c.operation, ()).is_none();
        if !first && !listed.contains_key(c.operation.as_str()) {
            dup(
                diags,
                &c.span,
                format!("operation `{}` has more than one contract", c.operation),
            );
        }
        match model.services.iter().find(|s| s.name == c.service) {
            None => diags.push(Diagnostic::error(
                DiagCode::ResolutionError,
                c.span.clone(),
                format!("contract names unknown service `{}`", c.service),
            )),
            Some(s) if !s.operations.iter().any(|o| o.name == c.operation) => {
                diags.push(Diagnostic::error(
                    DiagCode::ResolutionError,
                    c.span.clone(),
                    format!(
                        "service `{}` does not list operation `{}`",
                        c.service, c.operation
                    ),
                ))
            }
            Some(_) => {}
        }
    }
}

fn resolve(schema: &Schema, ty: &mut Type, span: &Span, diags: &mut Vec<Diagnostic>) -> bool {
    match resolve_type(schema, ty, span) {
        Ok(t) => {
            *ty = t;
            true
        }
        Err(d) => {
            diags.push(d);
            *ty = Type::Unknown;
            false
        }
    }
}

fn check_contract(c: &mut ContractDecl, schema: &Schema, diags: &mut Vec<Diagnostic>) {
    let mut env = TypeEnv::new(schema, Phase::Definition);
    env.bind(TODAY, Type::Date);
    let mut names: Vec<String> = Vec::new();
    let mut declare = |name: &str, span: &Span, diags: &mut Vec<Diagnostic>| {
        if name == TODAY || name == RESULT {
            diags.push(Diagnostic::error(
                DiagCode::ScopeError,
                span.clone(),
                format!("`{name}` is reserved and cannot be redeclared"),
            ));
        } else if names.iter().any(|n| n == name) {
            dup(
                diags,
                span,
                format!("`{name}` is already declared in this contract"),
            );
        }
        names.push(name.to_string());
    };
    for p in &mut c.inputs {
        declare(&p.name, &p.span, diags);
        resolve(schema, &mut p.ty, &p.span, diags);
        env.bind(&p.name, p.ty.clone());
    }
    let out_span = c.span.clone();
    resolve(schema, &mut c.output, &out_span, diags);

    for d in &mut c.definitions {
        declare(&d.name, &d.span, diags);
        if let Some(t) = &mut d.declared {
            resolve(schema, t, &d.span, diags);
        }
        if let Some(init) = &mut d.init {
            diags.extend(check_expression(init, &env));
        }
        match (&d.declared, &d.init) {
            (Some(t), Some(init)) => {
                if *t != Type::Unknown
                    && init.ty != Type::Unknown
                    && !crate::ocl::assignable(t, &init.ty)
                {
                    diags.push(Diagnostic::error(
                        DiagCode::TypeError,
                        d.span.clone(),
                        format!("`{}` is declared {t} but defined as {}", d.name, init.ty),
                    ));
                }
            }
            (Some(t), None) if !matches!(t, Type::Object(_) | Type::Unknown) => {
                diags.push(Diagnostic::error(
                    DiagCode::TypeError,
                    d.span.clone(),
                    format!(
                        "`{}` has no definition, so its type must be an entity, found {t}",
                        d.name
                    ),
                ));
            }
            _ => {}
        }
        env.bind(&d.name, d.ty());
    }

    env.phase = Phase::Precondition;
    check_condition(&mut c.precondition, &env, "precondition", diags);
    env.phase = Phase::Postcondition;
    env.bind(RESULT, c.output.clone());
    check_condition(&mut c.postcondition, &env, "postcondition", diags);
}

fn check_condition(
    e: &mut crate::ocl::Expr,
    env: &TypeEnv<'_>,
    what: &str,
    diags: &mut Vec<Diagnostic>,
) {
    let found = check_expression(e, env);
    let clean = found.is_empty();
    diags.extend(found);
    if clean && e.ty != Type::Boolean {
        diags.push(Diagnostic::error(
            DiagCode::TypeError,
            e.span.clone(),
            format!("{what} must be Boolean, found {}", e.ty),
        ));
    }
}
