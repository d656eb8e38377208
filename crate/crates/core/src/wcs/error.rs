use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based line and column (columns count characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptErrorKind {
    Lex,
    Parse,
    Check,
}

impl ScriptErrorKind {
    pub fn label(self) -> &'static str {
        match self {
            ScriptErrorKind::Lex => "LexError",
            ScriptErrorKind::Parse => "ParseError",
            ScriptErrorKind::Check => "CheckError",
        }
    }
}

/// A static error in a script, with the offending source line attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptError {
    pub kind: ScriptErrorKind,
    pub message: String,
    pub span: Span,
    pub excerpt: String,
}

impl ScriptError {
    pub fn new(kind: ScriptErrorKind, message: impl Into<String>, span: Span, source: &str) -> Self {
        let span = clamp_span(span, source);
        Self { kind, message: message.into(), span, excerpt: source_line(source, span.line) }
    }

    /// The excerpt with a caret under the offending column.
    pub fn caret(&self) -> String {
        let pad: String = self
            .excerpt
            .chars()
            .take(self.span.column.saturating_sub(1) as usize)
            .map(|c| if c == '\t' { '\t' } else { ' ' })
            .collect();
        format!("{}\n{pad}^", self.excerpt)
    }
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_feedback(f, self.kind.label(), &self.message, self.span, &self.excerpt)
    }
}

impl std::error::Error for ScriptError {}

/// Feedback layout shared by static and runtime errors:
/// `kind: message` / ` at line L, column C:` / ` <excerpt>`.
pub fn write_feedback(
    f: &mut impl fmt::Write,
    kind: &str,
    message: &str,
    span: Span,
    excerpt: &str,
) -> fmt::Result {
    write!(f, "{kind}: {message}\n at line {}, column {}:\n {excerpt}", span.line, span.column)
}

/// The given 1-based line of `source`, without its line terminator.
pub fn source_line(source: &str, line: u32) -> String {
    source
        .split('\n')
        .nth(line.saturating_sub(1) as usize)
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .unwrap_or_default()
}

fn clamp_span(span: Span, source: &str) -> Span {
    let lines = source.split('\n').count().max(1) as u32;
    let line = span.line.clamp(1, lines);
    let width = source_line(source, line).chars().count() as u32 + 1;
    Span { line, column: span.column.clamp(1, width) }
}

pub fn render_errors(errors: &[ScriptError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n\n")
}
