//! Per-use-case metrics: listing size, action count and timings.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use super::listing::{count_loc, render_listing};
use super::scenario::Scenario;
use crate::classify::classify_contract;
use crate::logic::{generate_logic, Application};
use crate::model::RequirementModel;
use crate::runtime::{execute, EntityStore};

pub const CSV_HEADER: &str = "UseCase,LOC,AA,GT,ET";

/// Timed runs after one warm-up run.
pub const TIMED_RUNS: u32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub use_case: String,
    pub loc: usize,
    pub aa: usize,
    /// Milliseconds to classify and generate the unit.
    pub gt_ms: f64,
    /// Milliseconds to execute the unit's scenario, if it has one.
    pub et_ms: Option<f64>,
}

/// Mean of [`TIMED_RUNS`] runs of `f`, after one untimed run.
fn time_ms(mut f: impl FnMut() -> Duration) -> f64 {
    f();
    let total: Duration = (0..TIMED_RUNS).map(|_| f()).sum();
    total.as_secs_f64() * 1000.0 / f64::from(TIMED_RUNS)
}

/// One row per unit, in service order. ET uses the first scenario naming
/// the operation, run on a fresh copy of `demo` each time.
pub fn compute_metrics(
    model: &RequirementModel,
    app: &Application,
    demo: &EntityStore,
    scenarios: &[Scenario],
) -> Vec<MetricsRow> {
    app.units()
        .map(|unit| {
            let op = unit.operation();
            let contract = model.contract(op).expect("unit comes from the model");
            let gt_ms = time_ms(|| {
                let start = Instant::now();
                let cc = classify_contract(contract).expect("model already generated");
                let u = generate_logic(&cc).expect("model already generated");
                let elapsed = start.elapsed();
                std::hint::black_box(u);
                elapsed
            });
            let et_ms = scenarios.iter().find(|s| s.operation == op).map(|s| {
                time_ms(|| {
                    let mut store = demo.clone();
                    execute(unit, &mut store, &s.inputs, s.today).duration
                })
            });
            MetricsRow {
                use_case: op.to_string(),
                loc: count_loc(&render_listing(unit)),
                aa: unit.contract.action_count(),
                gt_ms,
                et_ms,
            }
        })
        .collect()
}

pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in rows {
        let et = r.et_ms.map_or(String::new(), |e| format!("{e:.5}"));
        let _ = writeln!(out, "{},{},{},{:.5},{et}", r.use_case, r.loc, r.aa, r.gt_ms);
    }
    out
}

/// Reads a table written by [`render_csv`]. Timings come back at the
/// printed precision.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>, String> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, CSV_HEADER)) => {}
        other => return Err(format!("line 1: expected `{CSV_HEADER}`, found {other:?}")),
    }
    lines
        .map(|(n, line)| {
            let bad = |what: &str| format!("line {n}: {what} in `{line}`");
            let cols: Vec<&str> = line.split(',').collect();
            let [use_case, loc, aa, gt, et] = cols[..] else {
                return Err(bad("expected 5 columns"));
            };
            Ok(MetricsRow {
                use_case: use_case.to_string(),
                loc: loc.parse().map_err(|_| bad("bad LOC"))?,
                aa: aa.parse().map_err(|_| bad("bad AA"))?,
                gt_ms: gt.parse().map_err(|_| bad("bad GT"))?,
                et_ms: match et {
                    "" => None,
                    t => Some(t.parse().map_err(|_| bad("bad ET"))?),
                },
            })
        })
        .collect()
}

/// Writes every listing to `<out>/<service>/<operation>.txt`.
pub fn write_listings(app: &Application, out: &Path) -> std::io::Result<()> {
    for s in &app.services {
        let dir = out.join(&s.name);
        std::fs::create_dir_all(&dir)?;
        for u in &s.units {
            std::fs::write(
                dir.join(format!("{}.txt", u.operation())),
                render_listing(u),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![
            MetricsRow {
                use_case: "a".into(),
                loc: 4,
                aa: 0,
                gt_ms: 0.123456,
                et_ms: None,
            },
            MetricsRow {
                use_case: "b".into(),
                loc: 9,
                aa: 3,
                gt_ms: 1.0,
                et_ms: Some(0.5),
            },
        ];
        assert_eq!(
            render_csv(&rows),
            "UseCase,LOC,AA,GT,ET\na,4,0,0.12346,\nb,9,3,1.00000,0.50000\n"
        );
        let back = parse_csv(&render_csv(&rows)).unwrap();
        assert_eq!(back[1], rows[1]);
        assert_eq!(back[0].gt_ms, 0.12346);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("UseCase,LOC,AA,GT\n").is_err());
        assert_eq!(
            parse_csv(&format!("{CSV_HEADER}\na,1,2\n")).unwrap_err(),
            "line 2: expected 5 columns in `a,1,2`"
        );
        assert!(parse_csv(&format!("{CSV_HEADER}\na,x,2,0.1,\n")).is_err());
    }
}
