//! Scenario description language for the consistent-histories engine.
//!
//! A scenario file (`.chq`) declares a Hilbert-space dimension, named
//! kets, unitaries, and PDIs, a time grid, a history family, optionally
//! an intervened variant of that family, and a list of queries. Parsing
//! validates everything eagerly, so [`parse_scenario`] either returns a
//! document whose families are already built and ready to run, or a
//! [`ParseError`] with the line and column of the first problem.
//!
//! [`render_scenario`] is the inverse: it prints a document in canonical
//! form (fixed statement order, all matrices as literals, full-precision
//! numbers), and reparsing the output reproduces the document.

pub mod parse;
pub mod render;

pub use parse::{
    parse_scalar, parse_scenario, parse_scenario_with, EventRef, FamilyDef, InterventionDef,
    ParseError, Query, ScenarioDoc, MAX_DIM,
};
pub use render::render_scenario;
