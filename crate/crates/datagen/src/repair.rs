//! Bounded recovery of JSON embedded in model output.

use serde_json::Value;

/// Parses `text` as JSON. On failure, strips everything before the first
/// `{` or `[` and after the matching last closer, then tries exactly once more.
pub fn parse_json(text: &str) -> Result<Value, String> {
    let first_err = match serde_json::from_str(text.trim()) {
        Ok(v) => return Ok(v),
        Err(e) => e,
    };
    let start = text
        .find(['{', '['])
        .ok_or_else(|| format!("no JSON found: {first_err}"))?;
    let closer = if text.as_bytes()[start] == b'{' { '}' } else { ']' };
    let end = text
        .rfind(closer)
        .filter(|&e| e > start)
        .ok_or_else(|| format!("unterminated JSON: {first_err}"))?;
    serde_json::from_str(&text[start..=end]).map_err(|e| format!("unparseable JSON after repair: {e}"))
}
