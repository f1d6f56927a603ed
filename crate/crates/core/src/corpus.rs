//! The bundled library-management example: model, demo store and scenarios.

/// Origin used in diagnostics for [`LIBRARY_MODEL`].
pub const LIBRARY_MODEL_PATH: &str = "corpus/library.rm";

pub const LIBRARY_MODEL: &str = include_str!("../corpus/library.rm");

/// A store for [`LIBRARY_MODEL`]'s schema.
pub const LIBRARY_DEMO_STORE: &str = include_str!("../corpus/library_demo.store");

/// One scenario per operation, run against [`LIBRARY_DEMO_STORE`].
pub const LIBRARY_SCENARIOS: &str = include_str!("../corpus/library.scenarios");
