//! The persistence layer: entity store, entity manager, store files, and
//! the executor for business-logic units.

mod exec;
mod persist;
mod store;
mod value;

pub use exec::{execute, ExecutionResult, Outcome};
pub use persist::{load_store, parse_store, render_record, render_store, save_store, PersistError};
pub use store::{coerce, default_value, Criterion, EntityStore, Link, ObjectRecord, StoreError};
pub use value::{ObjectId, Value};
