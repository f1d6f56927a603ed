//! Compiler and runtime for requirement models with OCL operation contracts.
//!
//! The pipeline: [`model::parse_model`] reads the textual model,
//! [`classify::classify_contract`] maps every contract clause to an atomic
//! CRUD action, [`logic::generate_application`] assembles executable units
//! grouped by service, and [`runtime::execute`] runs a unit against an
//! [`runtime::EntityStore`] with guard checking and rollback.

pub mod classify;
pub mod corpus;
pub mod diag;
pub mod emit;
pub mod lexer;
pub mod logic;
pub mod model;
pub mod ocl;
pub mod runtime;
pub mod span;
