mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rmcodec::emit::{parse_csv, render_csv, MetricsRow};
use rmcodec::ocl::{parse_expression_text, print_expr, Evaluator, Scope};
use rmcodec::runtime::{execute, parse_store, render_store, EntityStore, Outcome, Value};

use support::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn random_stores_round_trip(seed in any::<u64>()) {
        let (_, app) = library();
        let store = random_store(&app.schema, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = render_store(&store);
        let back = parse_store(&text, app.schema.clone()).unwrap();
        prop_assert_eq!(&back, &store);
        prop_assert_eq!(render_store(&back), text);
    }

    #[test]
    fn awkward_strings_round_trip(title in "[ -~\n\r\té|;,=\\\\]{0,24}", fee in -1.0e6f64..1.0e6) {
        let (_, app) = library();
        let mut store = EntityStore::new(app.schema.clone());
        let book = store.create_object("Book").unwrap();
        store.set_attribute(book, "Title", Value::Str(title.clone())).unwrap();
        let user = store.create_object("User").unwrap();
        store.set_attribute(user, "OverDueFee", Value::Real(fee)).unwrap();
        let back = parse_store(&render_store(&store), app.schema.clone()).unwrap();
        prop_assert_eq!(back.attribute(book, "Title").unwrap(), &Value::Str(title));
        prop_assert_eq!(back.attribute(user, "OverDueFee").unwrap(), &Value::Real(fee));
    }

    #[test]
    fn execution_is_deterministic_and_keeps_integrity(seed in any::<u64>(), op in 0usize..31, today in 0i64..60) {
        let (_, app) = library();
        let unit = app.units().nth(op).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pre = random_store(&app.schema, &mut rng);
        let inputs = random_inputs(unit, &pre, &mut rng);
        let mut a = pre.clone();
        let mut b = pre.clone();
        let ra = execute(unit, &mut a, &inputs, today);
        let rb = execute(unit, &mut b, &inputs, today);
        prop_assert_eq!(&ra.outcome, &rb.outcome);
        prop_assert_eq!(&ra.value, &rb.value);
        prop_assert_eq!(render_store(&a), render_store(&b));
        prop_assert!(!matches!(ra.outcome, Outcome::RuntimeFault(_)), "{}: {:?}", unit.operation(), ra.outcome);
        if ra.outcome != Outcome::Success {
            prop_assert_eq!(&a, &pre);
        }
        prop_assert_eq!(a.check_integrity(), Vec::<String>::new());
    }
}

#[derive(Debug, Clone)]
struct BorrowCase {
    level: &'static str,
    status: &'static str,
    loaned: i64,
    copy_status: &'static str,
    reserved: bool,
    reserver: Option<i64>,
    closed: bool,
    uid: i64,
    barcode: &'static str,
}

fn borrow_case() -> impl Strategy<Value = BorrowCase> {
    (
        prop::sample::select(vec!["BACHELOR", "MASTER", "PHD", "TEACHER"]),
        prop::sample::select(vec!["NORMAL", "SUSPENDED"]),
        prop_oneof![
            0i64..70,
            prop::sample::select(vec![19i64, 20, 39, 40, 59, 60])
        ],
        prop::sample::select(vec!["AVAILABLE", "LOANED", "ONHOLDSHELF", "LOST"]),
        any::<bool>(),
        prop::option::of(prop::sample::select(vec![1i64, 2])),
        any::<bool>(),
        prop::sample::select(vec![1i64, 2, 3]),
        prop::sample::select(vec!["X-1", "X-2"]),
    )
        .prop_map(
            |(level, status, loaned, copy_status, reserved, reserver, closed, uid, barcode)| {
                BorrowCase {
                    level,
                    status,
                    loaned,
                    copy_status,
                    reserved,
                    reserver,
                    closed,
                    uid,
                    barcode,
                }
            },
        )
}

fn borrow_store(app: &rmcodec::logic::Application, c: &BorrowCase) -> EntityStore {
    let mut s = EntityStore::new(app.schema.clone());
    let mut users = Vec::new();
    for uid in 1..=2 {
        let u = s.create_object("User").unwrap();
        s.set_attribute(u, "UserID", Value::Int(uid)).unwrap();
        s.set_attribute(u, "Level", Value::enum_lit("Level", c.level))
            .unwrap();
        s.set_attribute(u, "Status", Value::enum_lit("UserStatus", c.status))
            .unwrap();
        s.set_attribute(u, "LoanedNumber", Value::Int(c.loaned))
            .unwrap();
        users.push(u);
    }
    let copy = s.create_object("BookCopy").unwrap();
    s.set_attribute(copy, "Barcode", Value::Str("X-1".into()))
        .unwrap();
    s.set_attribute(copy, "Status", Value::enum_lit("CopyStatus", c.copy_status))
        .unwrap();
    s.set_attribute(copy, "IsReserved", Value::Bool(c.reserved))
        .unwrap();
    if let Some(owner) = c.reserver {
        let r = s.create_object("Reserve").unwrap();
        s.set_attribute(r, "IsReservedClosed", Value::Bool(c.closed))
            .unwrap();
        let u = users[owner as usize - 1];
        s.set_link_one(r, "ReservedUser", Some(u)).unwrap();
        s.set_link_one(r, "ReservedCopy", Some(copy)).unwrap();
        s.add_link(u, "ReservedBooks", r).unwrap();
        s.add_link(copy, "ReservationRecords", r).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(config(512))]

    #[test]
    fn borrow_book_matches_reference(c in borrow_case(), today in 0i64..100) {
        let (_, app) = library();
        let unit = app.unit("borrowBook").unwrap();
        let pre = borrow_store(&app, &c);
        let inputs = vec![
            ("uid".to_string(), Value::Int(c.uid)),
            ("barcode".to_string(), Value::Str(c.barcode.into())),
        ];
        let mut store = pre.clone();
        let run = execute(unit, &mut store, &inputs, today);
        match reference_borrow(&pre, c.uid, c.barcode, today) {
            Some(expected) => {
                prop_assert_eq!(&run.outcome, &Outcome::Success);
                prop_assert_eq!(render_store(&store), render_store(&expected));
            }
            None => {
                prop_assert!(matches!(run.outcome, Outcome::PreconditionFailure { .. }), "{:?}", run.outcome);
                prop_assert_eq!(&store, &pre);
            }
        }
    }
}

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..50).prop_map(|n| n.to_string()),
        (0i64..50).prop_map(|n| format!("-{n}")),
        Just("true".to_string()),
        Just("false".to_string()),
        Just("x".to_string()),
        Just("y".to_string()),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let binop = prop::sample::select(vec![
            "+", "-", "*", "=", "<>", "<", "<=", ">", ">=", "and", "or",
        ]);
        prop_oneof![
            (inner.clone(), binop, inner.clone()).prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            (inner.clone(), binop_free(), inner.clone())
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("not ({a})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, t, e)| format!("(if {c} then {t} else {e} endif)")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("(let z = {a} in ({b} = z))")),
        ]
    })
}

fn binop_free() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["+", "-", "*", "and", "or", "="])
}

proptest! {
    #![proptest_config(config(512))]

    #[test]
    fn printed_expressions_reparse_to_the_same_meaning(text in expression(), x in -5i64..5, y in -5i64..5) {
        let Ok(e) = parse_expression_text(&text, "<prop>") else {
            return Ok(());
        };
        let printed = print_expr(&e);
        let again = parse_expression_text(&printed, "<prop>").unwrap();
        prop_assert_eq!(print_expr(&again), printed.clone());

        let (_, app) = library();
        let empty = EntityStore::new(app.schema.clone());
        let ev = Evaluator::new(&empty, &empty);
        let scope = || {
            let mut s = Scope::default();
            s.bind("x", Value::Int(x));
            s.bind("y", Value::Int(y));
            s
        };
        let a = ev.eval(&e, &mut scope());
        let b = ev.eval(&again, &mut scope());
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"), "{} vs {}", text, printed);
    }
}

fn metrics_row() -> impl Strategy<Value = MetricsRow> {
    (
        "[a-zA-Z][a-zA-Z0-9]{0,12}",
        0usize..500,
        0usize..100,
        0.0f64..1.0e4,
        prop::option::of(0.0f64..1.0e4),
    )
        .prop_map(|(use_case, loc, aa, gt_ms, et_ms)| MetricsRow {
            use_case,
            loc,
            aa,
            gt_ms,
            et_ms,
        })
}

proptest! {
    #[test]
    fn metrics_csv_parses_back(rows in prop::collection::vec(metrics_row(), 0..40)) {
        let back = parse_csv(&render_csv(&rows)).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (b, r) in back.iter().zip(&rows) {
            prop_assert_eq!(&b.use_case, &r.use_case);
            prop_assert_eq!((b.loc, b.aa), (r.loc, r.aa));
            prop_assert!((b.gt_ms - r.gt_ms).abs() <= 5e-6 * (1.0 + r.gt_ms));
            prop_assert_eq!(b.et_ms.is_some(), r.et_ms.is_some());
            if let (Some(x), Some(y)) = (b.et_ms, r.et_ms) {
                prop_assert!((x - y).abs() <= 5e-6 * (1.0 + y));
            }
        }
        prop_assert_eq!(render_csv(&back), render_csv(&rows));
    }
}
