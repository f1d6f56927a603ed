//! Corpus-level checks beyond the acceptance criteria.

mod support;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rmcodec::classify::{ActionKind, EffectNode, GuardTree};
use rmcodec::corpus::{LIBRARY_DEMO_STORE, LIBRARY_MODEL, LIBRARY_MODEL_PATH, LIBRARY_SCENARIOS};
use rmcodec::diag::DiagCode;
use rmcodec::emit::{count_loc, parse_scenarios, render_ir, render_listing};
use rmcodec::logic::generate_application;
use rmcodec::model::{parse_model, print_model, RequirementModel};
use rmcodec::ocl::{ExprKind, Type};
use rmcodec::runtime::{execute, parse_store, render_store, PersistError};

use support::*;

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(golden_path(name)).unwrap()
}

/// Rewrites the AA/LOC golden from the clause-counting oracle and the
/// borrowBook listing goldens. Run with `--ignored` after a deliberate
/// corpus change.
#[test]
#[ignore]
fn regenerate_goldens() {
    let (model, app) = library();
    let mut out = String::from("UseCase,LOC,AA\n");
    for u in app.units() {
        let aa = count_actions_by_clauses(model.contract(u.operation()).unwrap());
        out.push_str(&format!(
            "{},{},{aa}\n",
            u.operation(),
            count_loc(&render_listing(u))
        ));
    }
    std::fs::write(golden_path("library_aa.csv"), out).unwrap();
    let borrow = app.unit("borrowBook").unwrap();
    std::fs::write(golden_path("borrowBook.txt"), render_listing(borrow)).unwrap();
    std::fs::write(golden_path("borrowBook.ir"), render_ir(borrow)).unwrap();
}

#[test]
fn borrow_book_unit_shape() {
    let (_, app) = library();
    let unit = app.unit("borrowBook").unwrap();
    assert_eq!(
        unit.signature.to_string(),
        "borrowBook(uid : Integer, barcode : String) : Boolean"
    );
    let c = &unit.contract;

    let finds: Vec<&str> = c
        .definition_actions
        .iter()
        .filter(|a| a.kind() == ActionKind::FindObject)
        .filter_map(|a| a.action.binds())
        .collect();
    assert_eq!(finds, ["user", "copy", "reserve"]);

    let count = |k: ActionKind| c.effect_actions.iter().filter(|a| a.kind() == k).count();
    assert_eq!(count(ActionKind::CreateObject), 1);
    assert!(
        count(ActionKind::AddOneToOneAssociation) + count(ActionKind::AddOneToManyAssociation) >= 4
    );
    assert!(count(ActionKind::UpdateObject) + count(ActionKind::UpdateObjectWithNew) >= 2);

    let guard_text: Vec<String> = c
        .guard
        .leaves()
        .iter()
        .map(|i| c.guard_actions[*i].to_string())
        .collect();
    let covers = |needle: &str| guard_text.iter().any(|g| g.starts_with(needle));
    assert!(
        covers("checkObjectState(user, oclIsUndefined"),
        "{guard_text:?}"
    );
    assert!(covers("checkObjectState(copy, oclIsUndefined"));
    assert!(covers(
        "checkAttributeState(user, Status, =, UserStatus::NORMAL)"
    ));
    assert!(covers("checkAttributeState(user, LoanedNumber, <, 40)"));
    assert!(covers("checkObjectState(reserve, oclIsUndefined"));
    assert!(
        matches!(&c.guard, GuardTree::And(parts) if parts.iter().any(|p| matches!(p, GuardTree::Or(_))))
    );
    assert!(c
        .effects
        .iter()
        .any(|n| matches!(n, EffectNode::Branch { .. })));
}

#[test]
fn return_book_updates_copy_status() {
    let (_, app) = library();
    let c = &app.unit("returnBook").unwrap().contract;
    assert!(c.effect_actions.iter().any(|a| {
        a.kind() == ActionKind::RemoveOneToManyAssociation
            || (a.kind() == ActionKind::UpdateObjectWithNew && a.to_string().contains(", Status, "))
    }));
}

#[test]
fn borrow_book_listing_matches_golden() {
    let (_, app) = library();
    let unit = app.unit("borrowBook").unwrap();
    let listing = render_listing(unit);
    assert_eq!(listing, golden("borrowBook.txt"));
    assert_eq!(listing.matches("createObject(").count(), 1);
    let loc: usize = golden("library_aa.csv")
        .lines()
        .find_map(|l| l.strip_prefix("borrowBook,"))
        .and_then(|rest| rest.split(',').next())
        .and_then(|n| n.parse().ok())
        .unwrap();
    assert_eq!(count_loc(&listing), loc);
    assert_eq!(render_ir(unit), golden("borrowBook.ir"));
}

fn corpus_sources() -> Vec<(String, String)> {
    let mut out = vec![(LIBRARY_MODEL_PATH.to_string(), LIBRARY_MODEL.to_string())];
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/conformance");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for p in files
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "rm"))
    {
        out.push((
            p.display().to_string(),
            std::fs::read_to_string(&p).unwrap(),
        ));
    }
    out
}

#[test]
fn printed_models_reparse_equal() {
    for (origin, source) in corpus_sources() {
        let model = parse_model(&source, &origin).unwrap();
        let printed = print_model(&model);
        let again = parse_model(&printed, "printed.rm")
            .unwrap_or_else(|d| panic!("{origin}:\n{}\n{printed}", diagnostics_text(&d)));
        assert_eq!(model.normalized(), again.normalized(), "{origin}");
        assert_eq!(
            print_model(&again),
            printed,
            "{origin}: printing is not a fixpoint"
        );
    }
}

/// Start positions (line, column, length) of every name a contract
/// resolves: variables, extents, attributes and association ends.
fn name_sites(model: &RequirementModel, source: &str) -> BTreeSet<(usize, usize, usize)> {
    let lines: Vec<&str> = source.lines().collect();
    let mut sites = BTreeSet::new();
    for c in &model.contracts {
        let exprs = c
            .definitions
            .iter()
            .filter_map(|d| d.init.as_ref())
            .chain([&c.precondition, &c.postcondition]);
        for e in exprs {
            e.walk(&mut |n| {
                let (line, col) = (n.span.line as usize, n.span.col as usize);
                match &n.kind {
                    ExprKind::Var(v) => {
                        sites.insert((line, col, v.len()));
                    }
                    ExprKind::AllInstances(ent) => {
                        sites.insert((line, col, ent.len()));
                    }
                    ExprKind::AttrNav {
                        attribute: name, ..
                    }
                    | ExprKind::AssocNav {
                        association: name, ..
                    } => {
                        let text = lines[line - 1];
                        let from = col - 1;
                        let dotted = format!(".{name}");
                        let at = text[from..]
                            .match_indices(&dotted)
                            .map(|(i, _)| from + i + 1)
                            .find(|&i| {
                                !text[i + name.len()..]
                                    .starts_with(|ch: char| ch.is_alphanumeric() || ch == '_')
                            })
                            .unwrap_or_else(|| panic!("no `{dotted}` after {line}:{col}"));
                        sites.insert((line, at + 1, name.len()));
                    }
                    _ => {}
                }
            });
        }
    }
    sites
}

#[test]
fn validator_flags_every_unresolved_name_mutation() {
    let model = parse_model(LIBRARY_MODEL, LIBRARY_MODEL_PATH).unwrap();
    let sites = name_sites(&model, LIBRARY_MODEL);
    assert!(sites.len() > 300, "only {} mutation sites", sites.len());
    let mut missed = Vec::new();
    for &(line, col, len) in &sites {
        let mut lines: Vec<String> = LIBRARY_MODEL.lines().map(str::to_string).collect();
        let l = &mut lines[line - 1];
        let name = l[col - 1..col - 1 + len].to_string();
        let mutant = format!("{name}Zq");
        l.replace_range(col - 1..col - 1 + len, &mutant);
        let source = lines.join("\n");
        match parse_model(&source, LIBRARY_MODEL_PATH) {
            Ok(_) => missed.push(format!("{line}:{col} `{name}`")),
            Err(diags) => {
                let flagged = diags.iter().any(|d| {
                    matches!(d.code, DiagCode::ResolutionError | DiagCode::ScopeError)
                        && d.message.contains(&mutant)
                        && d.span.line as usize == line
                });
                if !flagged {
                    missed.push(format!(
                        "{line}:{col} `{name}`: {}",
                        diagnostics_text(&diags)
                    ));
                }
            }
        }
    }
    assert!(
        missed.is_empty(),
        "{} of {} mutations not flagged:\n{}",
        missed.len(),
        sites.len(),
        missed.join("\n")
    );
}

#[test]
fn demo_store_round_trips() {
    let (_, app) = library();
    let store = parse_store(LIBRARY_DEMO_STORE, app.schema.clone()).unwrap();
    assert!(store.len() >= 20);
    for e in &app.schema.entities {
        assert!(
            !store.all_instances(&e.name).unwrap().is_empty(),
            "no {}",
            e.name
        );
    }
    assert_eq!(render_store(&store), LIBRARY_DEMO_STORE);
    assert!(
        store.check_integrity().is_empty(),
        "{:?}",
        store.check_integrity()
    );
}

#[test]
fn store_with_unknown_entity_is_a_schema_mismatch() {
    let (_, app) = library();
    let text = format!(
        "{}Magazine|99|Title=x|\n",
        LIBRARY_DEMO_STORE.replace("#next_id 26", "#next_id 100")
    );
    match parse_store(&text, app.schema.clone()) {
        Err(PersistError::SchemaMismatch(m)) => assert!(m.contains("Magazine"), "{m}"),
        other => panic!("{other:?}"),
    }
    let text = LIBRARY_DEMO_STORE.replace("CopyNum=3", "Copies=3");
    assert!(matches!(
        parse_store(&text, app.schema.clone()),
        Err(PersistError::SchemaMismatch(_))
    ));
}

#[test]
fn scenarios_cover_every_operation_and_run() {
    let (_, app) = library();
    let scenarios = parse_scenarios(LIBRARY_SCENARIOS, &app).unwrap();
    let named: BTreeSet<&str> = scenarios.iter().map(|s| s.operation.as_str()).collect();
    assert_eq!(named.len(), 31);
    let demo = demo_store(&app);
    for s in &scenarios {
        let mut store = demo.clone();
        let run = execute(
            app.unit(&s.operation).unwrap(),
            &mut store,
            &s.inputs,
            s.today,
        );
        let expect_success = s.operation != "deleteBook";
        assert_eq!(
            run.outcome.is_success(),
            expect_success,
            "{}: {:?}",
            s.operation,
            run.outcome
        );
        assert!(store.check_integrity().is_empty(), "{}", s.operation);
    }
}

#[test]
fn equation_form_mutation_names_only_that_operation() {
    let source = LIBRARY_MODEL.replace(
        "loan.RenewedTimes = loan.RenewedTimes@pre + 1",
        "loan.RenewedTimes = 1 + loan.RenewedTimes@pre",
    );
    let model = parse_model(&source, LIBRARY_MODEL_PATH).unwrap();
    let diags = generate_application(&model).unwrap_err();
    assert_eq!(diags.len(), 1, "{}", diagnostics_text(&diags));
    assert_eq!(diags[0].code, DiagCode::EquationFormError);
    assert!(diags[0].message.contains("`renewBook`"), "{}", diags[0]);
}

#[test]
fn unclassifiable_contract_is_reported_by_operation() {
    let source = LIBRARY_MODEL.replace(
        "result = books\n}\n\ncontract BookManagementService::addBook",
        "result = books and books->includesAll(books)\n}\n\ncontract BookManagementService::addBook",
    );
    assert_ne!(source, LIBRARY_MODEL);
    let model = parse_model(&source, LIBRARY_MODEL_PATH).unwrap();
    let diags = generate_application(&model).unwrap_err();
    assert!(
        diags
            .iter()
            .all(|d| d.message.contains("searchBookBySubject")),
        "{}",
        diagnostics_text(&diags)
    );
}

#[test]
fn query_outputs_have_declared_types() {
    let (_, app) = library();
    for u in app.units() {
        let c = &u.contract;
        match &c.output {
            Type::Boolean => {}
            out => {
                let r = c
                    .result
                    .as_ref()
                    .unwrap_or_else(|| panic!("{} has no result", u.operation()));
                assert_eq!(&r.ty, out, "{}", u.operation());
            }
        }
    }
}
