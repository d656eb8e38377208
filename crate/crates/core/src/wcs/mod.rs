//! The workcell scripting language: lexer, parser, static checker,
//! formatter and code-block extraction.

mod ast;
pub mod builtins;
mod catalog;
mod check;
mod error;
mod extract;
mod format;
mod lexer;
mod parser;

pub use ast::*;
pub use catalog::{ApiCatalog, ApiEntry, ApiKind, CatalogError};
pub use check::check;
pub use error::{render_errors, source_line, write_feedback, ScriptError, ScriptErrorKind, Span};
pub use extract::{extract_code_block, ExtractError};
pub use format::{expr as format_expr, format};
pub use lexer::MAX_INDENT_DEPTH;
pub use parser::parse;

/// Parses and checks a script, returning every static error on failure.
pub fn load(source: &str, api: &ApiCatalog) -> Result<WcsScript, Vec<ScriptError>> {
    let script = parse(source).map_err(|e| vec![e])?;
    let errors = check(&script, api, source);
    if errors.is_empty() {
        Ok(script)
    } else {
        Err(errors)
    }
}
