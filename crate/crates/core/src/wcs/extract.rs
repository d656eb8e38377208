const FENCE: &str = "```";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("the response contains an empty code block")]
    EmptyBlock,
}

/// Returns the content of the first fenced code block in a chat reply, or the
/// reply itself when it has no fence.
pub fn extract_code_block(markdown: &str) -> Result<String, ExtractError> {
    let Some(open) = markdown.find(FENCE) else {
        return Ok(markdown.to_string());
    };
    let mut rest = &markdown[open + FENCE.len()..];
    // drop the info string (language tag) when the fence is on its own line
    if let Some(nl) = rest.find('\n') {
        let info = rest[..nl].trim();
        if !info.contains(FENCE) && info.chars().all(|c| c.is_ascii_alphanumeric() || "+-_.".contains(c)) {
            rest = &rest[nl + 1..];
        }
    }
    let body = match rest.find(FENCE) {
        Some(close) => &rest[..close],
        None => rest,
    };
    if body.trim().is_empty() {
        return Err(ExtractError::EmptyBlock);
    }
    Ok(body.trim_end_matches(['\n', '\r']).to_string())
}
