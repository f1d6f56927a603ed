//! Helpers shared by the integration tests: the library model, random
//! stores and inputs, and oracles that read contracts directly.

#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use rmcodec::corpus::{LIBRARY_DEMO_STORE, LIBRARY_MODEL, LIBRARY_MODEL_PATH};
use rmcodec::logic::{generate_application, Application, BusinessLogicUnit};
use rmcodec::model::{
    parse_model, AttrType, ContractDecl, Multiplicity, RequirementModel, Schema, RESULT, TODAY,
};
use rmcodec::ocl::{
    BoolOp, CmpOp, CollectionOp, EvalError, Evaluator, Expr, ExprKind, Scope, Type,
};
use rmcodec::runtime::{parse_store, EntityStore, ExecutionResult, Link, ObjectId, Value};

pub fn library() -> (RequirementModel, Application) {
    let model = parse_model(LIBRARY_MODEL, LIBRARY_MODEL_PATH).expect("corpus parses");
    let app = generate_application(&model).expect("corpus generates");
    (model, app)
}

pub fn demo_store(app: &Application) -> EntityStore {
    parse_store(LIBRARY_DEMO_STORE, app.schema.clone()).expect("demo store loads")
}

/// Keys in stores run over `1..=KEYS`; inputs also try one missing key.
const KEYS: i64 = 3;
const MAX_PER_ENTITY: usize = 3;
const SMALL_INTS: [i64; 13] = [0, 0, 0, 1, 2, 3, 7, 19, 20, 39, 40, 59, 60];
const REALS: [f64; 3] = [0.0, 0.5, 1.5];

fn random_string(name: &str, rng: &mut impl Rng) -> String {
    format!("{}-{}", name.to_ascii_lowercase(), rng.gen_range(1..=KEYS))
}

fn random_attr(name: &str, ty: &AttrType, schema: &Schema, rng: &mut impl Rng) -> Value {
    match ty {
        AttrType::Integer if name.ends_with("ID") => Value::Int(rng.gen_range(1..=KEYS)),
        AttrType::Integer => Value::Int(*SMALL_INTS.choose(rng).unwrap()),
        AttrType::Real => Value::Real(*REALS.choose(rng).unwrap()),
        AttrType::Date => Value::Date(rng.gen_range(0..=60)),
        AttrType::Boolean => Value::Bool(rng.gen()),
        AttrType::String => Value::Str(random_string(name, rng)),
        AttrType::Enum(e) => {
            let lits = &schema.enum_decl(e).expect("declared enum").literals;
            Value::enum_lit(e, lits.choose(rng).unwrap())
        }
    }
}

/// A store with up to [`MAX_PER_ENTITY`] objects per entity, attributes drawn from small
/// domains so that lookups hit, and links chosen at random. Inverse ends
/// are not kept consistent.
pub fn random_store(schema: &Arc<Schema>, rng: &mut impl Rng) -> EntityStore {
    let mut store = EntityStore::new(schema.clone());
    let mut order: Vec<usize> = Vec::new();
    for e in 0..schema.entities.len() {
        for _ in 0..rng.gen_range(0..=MAX_PER_ENTITY) {
            order.push(e);
        }
    }
    order.shuffle(rng);
    for e in order {
        let es = &schema.entities[e];
        let id = store.create_object(&es.name).unwrap();
        for (name, ty) in &es.attributes {
            let v = random_attr(name, ty, schema, rng);
            store.set_attribute(id, name, v).unwrap();
        }
    }
    let ids: Vec<(ObjectId, usize)> = store.iter().map(|r| (r.id, r.entity)).collect();
    for (id, e) in ids {
        for end in &schema.entities[e].associations {
            let targets = store.all_instances(&end.target).unwrap().to_vec();
            if targets.is_empty() {
                continue;
            }
            match end.multiplicity {
                Multiplicity::One => {
                    if rng.gen_bool(0.75) {
                        let t = *targets.choose(rng).unwrap();
                        store.set_link_one(id, &end.name, Some(t)).unwrap();
                    }
                }
                Multiplicity::Many => {
                    for _ in 0..rng.gen_range(0..=3) {
                        let t = *targets.choose(rng).unwrap();
                        store.add_link(id, &end.name, t).unwrap();
                    }
                }
            }
        }
    }
    store
}

/// Values of attributes an input of this name and type could look up:
/// `*ID` integers for integer inputs, same-named strings for strings.
fn existing_keys(name: &str, ty: &Type, store: &EntityStore) -> Vec<Value> {
    let schema = store.schema();
    let mut out = Vec::new();
    for rec in store.iter() {
        for ((attr, aty), v) in schema.entities[rec.entity]
            .attributes
            .iter()
            .zip(&rec.attributes)
        {
            let fits = match (ty, aty) {
                (Type::Integer, AttrType::Integer) => attr.ends_with("ID"),
                (Type::String, AttrType::String) => attr.eq_ignore_ascii_case(name),
                _ => false,
            };
            if fits {
                out.push(v.clone());
            }
        }
    }
    out
}

fn random_input(name: &str, ty: &Type, store: &EntityStore, rng: &mut impl Rng) -> Value {
    if rng.gen_bool(0.5) {
        if let Some(v) = existing_keys(name, ty, store).choose(rng) {
            return v.clone();
        }
    }
    match ty {
        Type::Integer => Value::Int(rng.gen_range(1..=KEYS + 1)),
        Type::Real => Value::Real(*REALS.choose(rng).unwrap()),
        Type::Date => Value::Date(rng.gen_range(0..=60)),
        Type::Boolean => Value::Bool(rng.gen()),
        Type::String => Value::Str(format!(
            "{}-{}",
            name.to_ascii_lowercase(),
            rng.gen_range(1..=KEYS + 1)
        )),
        Type::Enum(e) => {
            let lits = &store.schema().enum_decl(e).expect("declared enum").literals;
            Value::enum_lit(e, lits.choose(rng).unwrap())
        }
        other => panic!("no random inputs of type {other}"),
    }
}

/// Random inputs for `unit`; about half of the key-like inputs are taken
/// from values present in `store`.
pub fn random_inputs(
    unit: &BusinessLogicUnit,
    store: &EntityStore,
    rng: &mut impl Rng,
) -> Vec<(String, Value)> {
    unit.signature
        .inputs
        .iter()
        .map(|p| (p.name.clone(), random_input(&p.name, &p.ty, store, rng)))
        .collect()
}

/// Inputs, `today` and every definition, evaluated by the expression
/// evaluator on the pre-state alone. Fresh variables are Undefined.
pub fn oracle_scope(
    contract: &ContractDecl,
    pre: &EntityStore,
    inputs: &[(String, Value)],
    today: i64,
) -> Result<Scope, EvalError> {
    let mut scope: Scope = inputs.iter().cloned().collect();
    scope.bind(TODAY, Value::Date(today));
    let ev = Evaluator::new(pre, pre);
    for d in &contract.definitions {
        let v = match &d.init {
            Some(init) => ev.eval(init, &mut scope)?,
            None => Value::Undefined,
        };
        scope.bind(&d.name, v);
    }
    Ok(scope)
}

pub fn precondition_oracle(
    contract: &ContractDecl,
    pre: &EntityStore,
    scope: &Scope,
) -> Result<bool, EvalError> {
    Evaluator::new(pre, pre).eval_bool(&contract.precondition, &mut scope.clone())
}

/// Evaluates the postcondition on (pre, post). Fresh objects come from
/// the run's bindings; `result` is the run's value.
pub fn postcondition_oracle(
    contract: &ContractDecl,
    pre: &EntityStore,
    post: &EntityStore,
    scope: &Scope,
    run: &ExecutionResult,
) -> Result<bool, EvalError> {
    let mut scope = scope.clone();
    for d in &contract.definitions {
        if d.init.is_none() {
            let v = run
                .bindings
                .get(&d.name)
                .cloned()
                .unwrap_or(Value::Undefined);
            scope.bind(&d.name, v);
        }
    }
    bind_let_fresh(&contract.postcondition, run, &mut scope);
    scope.bind(RESULT, run.value.clone());
    Evaluator::new(pre, post).eval_bool(&contract.postcondition, &mut scope)
}

fn bind_let_fresh(e: &Expr, run: &ExecutionResult, scope: &mut Scope) {
    if let ExprKind::Let { binding, body } = &e.kind {
        if binding.init.is_none() {
            let v = run
                .bindings
                .get(&binding.name)
                .cloned()
                .unwrap_or(Value::Undefined);
            scope.bind(&binding.name, v);
        }
        bind_let_fresh(body, run, scope);
    }
}

fn is_all_instances_membership(e: &Expr, ops: &[CollectionOp]) -> bool {
    matches!(&e.kind, ExprKind::Collection { source, op, .. }
        if ops.contains(op) && matches!(source.kind, ExprKind::AllInstances(_)))
}

fn is_result_clause(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Compare { lhs, op: CmpOp::Eq, .. }
        if matches!(&lhs.kind, ExprKind::Var(v) if v == RESULT))
}

fn precondition_count(e: &Expr) -> usize {
    match &e.kind {
        ExprKind::BoolLit(_) => 0,
        ExprKind::Bool { lhs, rhs, .. } => precondition_count(lhs) + precondition_count(rhs),
        ExprKind::Not(inner) => precondition_count(inner),
        ExprKind::If {
            cond,
            then,
            otherwise,
        } => precondition_count(cond) + precondition_count(then) + precondition_count(otherwise),
        ExprKind::Let { body, .. } => precondition_count(body),
        // `E.allInstances()->excludes(v)` is folded into v's creation
        _ if is_all_instances_membership(e, &[CollectionOp::Excludes]) => 0,
        _ => 1,
    }
}

fn postcondition_count(e: &Expr) -> usize {
    match &e.kind {
        ExprKind::BoolLit(_) => 0,
        ExprKind::Bool {
            lhs,
            op: BoolOp::And,
            rhs,
        } => postcondition_count(lhs) + postcondition_count(rhs),
        ExprKind::If {
            cond,
            then,
            otherwise,
        } => precondition_count(cond) + postcondition_count(then) + postcondition_count(otherwise),
        ExprKind::Let { body, .. } => postcondition_count(body),
        _ if is_all_instances_membership(e, &[CollectionOp::Includes, CollectionOp::Excludes]) => 0,
        _ if is_result_clause(e) => 0,
        _ => 1,
    }
}

/// Atomic action count by counting clauses of the contract text:
/// initialized definitions, precondition leaves and postcondition
/// clauses, where extent membership clauses and the result clause add
/// nothing.
pub fn count_actions_by_clauses(contract: &ContractDecl) -> usize {
    let defs = contract
        .definitions
        .iter()
        .filter(|d| d.init.is_some())
        .count();
    defs + precondition_count(&contract.precondition) + postcondition_count(&contract.postcondition)
}

pub fn diagnostics_text(diags: &[rmcodec::diag::Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

/// borrowBook written out by hand against the store primitives.
pub fn reference_borrow(
    pre: &EntityStore,
    uid: i64,
    barcode: &str,
    today: i64,
) -> Option<EntityStore> {
    let attr = |id: ObjectId, name: &str| pre.attribute(id, name).unwrap().clone();
    let one = |id: ObjectId, name: &str| match pre.link(id, name).unwrap() {
        Link::One(t) => *t,
        Link::Many(_) => unreachable!(),
    };
    let lit = |e: &str, l: &str| Value::enum_lit(e, l);
    let user = pre
        .all_instances("User")
        .unwrap()
        .iter()
        .copied()
        .find(|u| attr(*u, "UserID") == Value::Int(uid))?;
    let copy = pre
        .all_instances("BookCopy")
        .unwrap()
        .iter()
        .copied()
        .find(|c| attr(*c, "Barcode") == Value::Str(barcode.to_string()))?;
    let reserve = pre
        .all_instances("Reserve")
        .unwrap()
        .iter()
        .copied()
        .find(|r| {
            one(*r, "ReservedUser") == Some(user)
                && one(*r, "ReservedCopy") == Some(copy)
                && attr(*r, "IsReservedClosed") == Value::Bool(false)
        });
    if attr(user, "Status") != lit("UserStatus", "NORMAL") {
        return None;
    }
    let limit = match &attr(user, "Level") {
        Value::Enum { literal, .. } if literal == "BACHELOR" => 20,
        Value::Enum { literal, .. } if literal == "MASTER" => 40,
        _ => 60,
    };
    let Value::Int(loaned) = attr(user, "LoanedNumber") else {
        unreachable!()
    };
    if loaned >= limit {
        return None;
    }
    let status = attr(copy, "Status");
    let on_hold = status == lit("CopyStatus", "ONHOLDSHELF");
    let reserved_here =
        on_hold && attr(copy, "IsReserved") == Value::Bool(true) && reserve.is_some();
    if !reserved_here && status != lit("CopyStatus", "AVAILABLE") {
        return None;
    }

    let mut s = pre.clone();
    let loan = s.create_object("Loan").unwrap();
    s.set_attribute(loan, "LoanDate", Value::Date(today))
        .unwrap();
    let days = if attr(user, "Level") == lit("Level", "TEACHER") {
        60
    } else {
        30
    };
    s.set_attribute(loan, "DueDate", Value::Date(today + days))
        .unwrap();
    s.set_attribute(loan, "RenewedTimes", Value::Int(0))
        .unwrap();
    s.set_attribute(loan, "IsReturned", Value::Bool(false))
        .unwrap();
    s.set_link_one(loan, "LoanedUser", Some(user)).unwrap();
    s.set_link_one(loan, "LoanedCopy", Some(copy)).unwrap();
    s.add_link(user, "LoanedBooks", loan).unwrap();
    s.add_link(copy, "LoanedRecords", loan).unwrap();
    s.set_attribute(user, "LoanedNumber", Value::Int(loaned + 1))
        .unwrap();
    if on_hold {
        s.set_attribute(copy, "IsReserved", Value::Bool(false))
            .unwrap();
        s.set_attribute(reserve.unwrap(), "IsReservedClosed", Value::Bool(true))
            .unwrap();
    }
    s.set_attribute(copy, "Status", lit("CopyStatus", "LOANED"))
        .unwrap();
    Some(s)
}

pub fn borrow_fixture(app: &rmcodec::logic::Application) -> EntityStore {
    let mut s = EntityStore::new(app.schema.clone());
    let mut user = |uid: i64, level: &str, status: &str, loaned: i64| {
        let u = s.create_object("User").unwrap();
        s.set_attribute(u, "UserID", Value::Int(uid)).unwrap();
        s.set_attribute(u, "Name", Value::Str(format!("user {uid}")))
            .unwrap();
        s.set_attribute(u, "Level", Value::enum_lit("Level", level))
            .unwrap();
        s.set_attribute(u, "Status", Value::enum_lit("UserStatus", status))
            .unwrap();
        s.set_attribute(u, "LoanedNumber", Value::Int(loaned))
            .unwrap();
        u
    };
    let ann = user(1, "BACHELOR", "NORMAL", 3);
    user(2, "MASTER", "NORMAL", 39);
    user(3, "MASTER", "NORMAL", 40);
    user(4, "PHD", "SUSPENDED", 0);
    user(5, "TEACHER", "NORMAL", 59);
    let book = s.create_object("Book").unwrap();
    s.set_attribute(book, "Title", Value::Str("Dune".into()))
        .unwrap();
    let mut copy = |code: &str, status: &str, reserved: bool| {
        let c = s.create_object("BookCopy").unwrap();
        s.set_attribute(c, "Barcode", Value::Str(code.into()))
            .unwrap();
        s.set_attribute(c, "Status", Value::enum_lit("CopyStatus", status))
            .unwrap();
        s.set_attribute(c, "IsReserved", Value::Bool(reserved))
            .unwrap();
        s.set_link_one(c, "BookOf", Some(book)).unwrap();
        s.add_link(book, "Copies", c).unwrap();
        c
    };
    copy("A-1", "AVAILABLE", false);
    let held = copy("H-1", "ONHOLDSHELF", true);
    copy("L-1", "LOANED", false);
    let r = s.create_object("Reserve").unwrap();
    s.set_attribute(r, "ReserveDate", Value::Date(5)).unwrap();
    s.set_link_one(r, "ReservedUser", Some(ann)).unwrap();
    s.set_link_one(r, "ReservedCopy", Some(held)).unwrap();
    s.add_link(ann, "ReservedBooks", r).unwrap();
    s.add_link(held, "ReservationRecords", r).unwrap();
    s
}
