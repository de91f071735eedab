use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use super::DesignerError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignerResponse {
    pub raw_text: String,
    /// First brace-enclosed span outside code blocks.
    pub parsed_thought: Option<String>,
    /// Body of the first fenced code block.
    pub parsed_code: Option<String>,
}

const FENCE: &str = "```";

/// Split a reply into its design thought and first fenced code block.
pub fn parse_response(raw: &str) -> DesignerResponse {
    DesignerResponse {
        raw_text: raw.to_string(),
        parsed_thought: first_brace_span(&strip_code_blocks(raw)),
        parsed_code: first_code_block(raw),
    }
}

fn first_code_block(raw: &str) -> Option<String> {
    let open = raw.find(FENCE)?;
    let after = &raw[open + FENCE.len()..];
    let close = after.find(FENCE)?;
    let inner = &after[..close];
    // Anything on the opening fence line is the language tag.
    let body = match inner.find('\n') {
        Some(nl) => &inner[nl + 1..],
        None => inner,
    };
    let body = body.trim_end_matches(['\n', '\r']);
    Some(body.to_string())
}

fn strip_code_blocks(raw: &str) -> String {
    let mut out = String::new();
    let mut rest = raw;
    loop {
        match rest.find(FENCE) {
            Some(open) => {
                out.push_str(&rest[..open]);
                let after = &rest[open + FENCE.len()..];
                match after.find(FENCE) {
                    Some(close) => rest = &after[close + FENCE.len()..],
                    None => return out,
                }
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

fn first_brace_span(text: &str) -> Option<String> {
    let open = text.find('{')?;
    let mut depth = 0usize;
    for (i, c) in text[open..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    let inner = text[open + 1..open + i].trim();
                    return Some(inner.to_string());
                }
            }
            _ => {}
        }
    }
    None
}

/// The last bracketed decimal in `raw`, clamped to `[-1, 1]`.
pub fn parse_self_verify(raw: &str) -> Result<f64, DesignerError> {
    let mut found = None;
    let mut rest = raw;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        if let Some(close) = after.find(']') {
            let inner = after[..close].trim();
            if is_decimal(inner) {
                if let Ok(v) = inner.parse::<f64>() {
                    found = Some(v);
                }
            }
        }
        rest = after;
    }
    found.map(|v| v.clamp(-1.0, 1.0)).ok_or(DesignerError::NoScore)
}

fn is_decimal(s: &str) -> bool {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut parts = digits.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let int_ok = int.chars().all(|c| c.is_ascii_digit());
    let frac_ok = frac.is_none_or(|f| !f.is_empty() && f.chars().all(|c| c.is_ascii_digit()));
    int_ok && frac_ok && (!int.is_empty() || frac.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thought_and_code() {
        let r = parse_response("{idea} ```\ncode\n```");
        assert_eq!(r.parsed_thought.as_deref(), Some("idea"));
        assert_eq!(r.parsed_code.as_deref(), Some("code"));
    }

    #[test]
    fn language_tag_dropped() {
        let r = parse_response("{a {nested} idea}\n```python\ndef f():\n    return {}\n```\ntrailing {x}");
        assert_eq!(r.parsed_thought.as_deref(), Some("a {nested} idea"));
        assert_eq!(r.parsed_code.as_deref(), Some("def f():\n    return {}"));
    }

    #[test]
    fn thought_ignores_braces_in_code() {
        let r = parse_response("```\nx = {1: 2}\n```\n{after}");
        assert_eq!(r.parsed_thought.as_deref(), Some("after"));
    }

    #[test]
    fn missing_block() {
        let r = parse_response("{idea} but no code");
        assert_eq!(r.parsed_code, None);
    }

    #[test]
    fn self_verify_last_wins_and_clamps() {
        assert_eq!(parse_self_verify("…similarity is moderate. [0.5]"), Ok(0.5));
        assert_eq!(parse_self_verify("[2.0]"), Ok(1.0));
        assert_eq!(parse_self_verify("range [-1,1] then [0.2] and finally [-0.7]"), Ok(-0.7));
        assert_eq!(parse_self_verify("[-3]"), Ok(-1.0));
        assert_eq!(parse_self_verify("no brackets here"), Err(DesignerError::NoScore));
        assert_eq!(parse_self_verify("[nan] [inf] [.] [-]"), Err(DesignerError::NoScore));
        assert_eq!(parse_self_verify("[.25]"), Ok(0.25));
    }
}
