//! Output artifacts: listings, IR text, scenarios and the metrics table.

mod listing;
mod metrics;
mod scenario;

pub use listing::{count_loc, guard_text, render_ir, render_listing};
pub use metrics::{
    compute_metrics, parse_csv, render_csv, write_listings, MetricsRow, CSV_HEADER, TIMED_RUNS,
};
pub use scenario::{parse_input_value, parse_scenarios, Scenario, ScenarioError};
