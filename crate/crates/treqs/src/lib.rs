//! Requirements management for git-versioned markdown.
//!
//! Requirements live as tagged elements inside ordinary markdown files:
//!
//! ```markdown
//! <treqs-element id="REQ-12" type="requirement">
//! ## Pump shutdown
//! The pump shall stop within 2 seconds of a stop command.
//! <treqs-link type="refines" target="REQ-3" />
//! </treqs-element>
//! ```
//!
//! This crate parses those elements ([`parser`]), assembles them into a
//! repository-wide [`model`], validates the trace [`graph`] spanned by their
//! links, tracks element changes between git revisions ([`vcs`]), and renders
//! traceability and change [`report`]s. The `treqs` binary exposes all of it
//! on the command line ([`cli`]).

pub mod cli;
pub mod config;
pub mod graph;
pub mod model;
pub mod parser;
pub mod report;
pub mod vcs;
pub mod workspace;
