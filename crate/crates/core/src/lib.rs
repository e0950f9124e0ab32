//! Core of the perspecml toolchain: the method catalog, the `.psml`
//! specification language, semantic analysis, renderers, and the guided
//! elicitation session engine.

pub mod analysis;
pub mod catalog;
pub mod diagnostics;
pub mod render;
pub mod session;
pub mod specformat;

pub use catalog::{load_catalog, validate_catalog, Catalog, ConcernId, PerspectiveId, RoleCode};
pub use diagnostics::{Code, Finding, Severity, Span};
