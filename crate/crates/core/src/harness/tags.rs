use serde_json::Value;
use thiserror::Error;

use crate::backend::{Backend, ChatMessage, CompletionRequest};
use crate::domain::{normalize_title, PaperMeta, TechnicalErrorClass};

pub const TAG_COUNT: usize = 3;

/// Tags too broad to be useful for browsing.
pub const DENY_LIST: [&str; 2] = ["Machine Learning", "Deep Networks"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagError {
    #[error("tag generation failed for `{paper_id}`: {reason}")]
    TagGenerationFailed { paper_id: String, reason: String },
}

const TAG_SYSTEM: &str = "You label scientific papers with topic tags for a benchmark browser.";

fn tag_request(paper: &PaperMeta) -> String {
    format!(
        "Give exactly {TAG_COUNT} short, general topic tags for the paper below. Avoid tags as broad as \
\"Machine Learning\". Reply with a JSON array of strings and nothing else.\n\nTitle: {}\nAbstract: {}",
        paper.title,
        if paper.r#abstract.is_empty() { "(not available)" } else { &paper.r#abstract }
    )
}

fn clean(tag: &str) -> String {
    tag.trim()
        .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '-' | '*' | '.' | ')' | ' '))
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '[' | ']' | '`') || c.is_whitespace())
        .to_string()
}

/// Tags in a reply: a JSON array if one is present, otherwise comma- or
/// line-separated items after an optional `Tags:` prefix.
pub fn parse_tags(reply: &str) -> Vec<String> {
    if let (Some(start), Some(end)) = (reply.find('['), reply.rfind(']')) {
        if start < end {
            if let Ok(Value::Array(items)) = serde_json::from_str::<Value>(&reply[start..=end]) {
                return items.iter().filter_map(Value::as_str).map(clean).filter(|t| !t.is_empty()).collect();
            }
        }
    }
    let body = reply.trim();
    let body = match body.to_ascii_lowercase().find("tags:") {
        Some(i) => &body[i + 5..],
        None => body,
    };
    body.split([',', '\n']).map(clean).filter(|t| !t.is_empty()).collect()
}

fn denied(tag: &str) -> bool {
    DENY_LIST.iter().any(|d| normalize_title(d) == normalize_title(tag))
}

/// Three topic tags for `paper`. A reply with the wrong number of tags, or
/// with deny-listed tags (which are dropped), triggers one regeneration.
pub fn generate_tags(paper: &PaperMeta, backend: &dyn Backend) -> Result<Vec<String>, TagError> {
    let fail = |reason: String| TagError::TagGenerationFailed { paper_id: paper.paper_id.clone(), reason };
    let mut messages = vec![ChatMessage::system(TAG_SYSTEM), ChatMessage::user(tag_request(paper))];
    let mut last_problem = String::new();
    for attempt in 0..2 {
        let request = CompletionRequest::new(backend.id(), messages.clone(), 0.0)
            .with_conversation(format!("tags/{}", paper.paper_id));
        let reply = backend.complete(&request).map_err(|e| match e.class {
            TechnicalErrorClass::ContentFilter => fail("content filter".into()),
            _ => fail(e.message),
        })?;
        let parsed = parse_tags(&reply.text);
        let removed: Vec<&String> = parsed.iter().filter(|t| denied(t)).collect();
        let tags: Vec<String> = parsed.iter().filter(|t| !denied(t)).cloned().collect();
        if removed.is_empty() && tags.len() == TAG_COUNT {
            return Ok(tags);
        }
        last_problem = if removed.is_empty() {
            format!("expected {TAG_COUNT} tags, got {}", tags.len())
        } else {
            format!("deny-listed tag(s): {}", removed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))
        };
        if attempt == 0 {
            messages.push(ChatMessage::assistant(reply.text));
            messages.push(ChatMessage::user(format!(
                "That reply had a problem ({last_problem}). Reply again with a JSON array of exactly \
{TAG_COUNT} tags, none of them as broad as: {}.",
                DENY_LIST.join(", ")
            )));
        }
    }
    Err(fail(last_problem))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_tags(r#"Sure: ["A", "B", "C"]"#), ["A", "B", "C"]);
        assert_eq!(parse_tags("Tags: A, B, C"), ["A", "B", "C"]);
        assert_eq!(parse_tags("1. A\n2. B\n- C"), ["A", "B", "C"]);
    }
}
