//! The action message grammar:
//! `{"reason": <string>, "action": {"name": <string>, ...}}`.
//!
//! Parsing tolerates prose around the object and raw newlines inside string
//! values, both of which models produce routinely.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::domain::{Action, CommandClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no well-formed action object found: {0}")]
    BadFormat(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{action}` is not allowed here: {reason}")]
    IllegalForCommandClass { action: String, reason: String },
    #[error("missing or empty field `{0}`")]
    MissingField(String),
}

/// Which actions a turn may legally contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionRules {
    pub class: CommandClass,
    /// Only `select` is accepted (the forced final turn).
    pub select_only: bool,
}

impl From<CommandClass> for ActionRules {
    fn from(class: CommandClass) -> Self {
        ActionRules { class, select_only: false }
    }
}

impl ActionRules {
    pub fn select_only(class: CommandClass) -> Self {
        ActionRules { class, select_only: true }
    }

    pub fn permits(&self, action: &Action) -> Result<(), ParseError> {
        if !action.is_legal_for(self.class) {
            return Err(ParseError::IllegalForCommandClass {
                action: action.name().to_string(),
                reason: format!("command class is {}", self.class),
            });
        }
        if self.select_only && !matches!(action, Action::Select { .. }) {
            return Err(ParseError::IllegalForCommandClass {
                action: action.name().to_string(),
                reason: "a select action is required now".to_string(),
            });
        }
        Ok(())
    }
}

/// Parses a full assistant turn into its reason and action.
pub fn parse_action(raw: &str, class: CommandClass) -> Result<(String, Action), ParseError> {
    parse_action_with(raw, class.into())
}

pub fn parse_action_with(raw: &str, rules: ActionRules) -> Result<(String, Action), ParseError> {
    let object = extract_json_object(raw)?;
    let reason = match object.get("reason") {
        Some(Value::String(s)) => s.trim().to_string(),
        _ => return Err(ParseError::MissingField("reason".into())),
    };
    let action = match object.get("action") {
        Some(Value::Object(a)) => a,
        _ => return Err(ParseError::MissingField("action".into())),
    };
    let name = match action.get("name") {
        Some(Value::String(s)) => s.trim().to_ascii_lowercase(),
        _ => return Err(ParseError::MissingField("action.name".into())),
    };
    let parsed = match name.as_str() {
        "search_relevance" => Action::SearchRelevance { query: field(action, "query")? },
        "search_citations" | "search_citation_count" => {
            Action::SearchCitations { query: field(action, "query")? }
        }
        "search" => {
            let query = field(action, "query")?;
            match action.get("sort").and_then(Value::as_str).map(sort_key) {
                None => Action::SearchRelevance { query },
                Some(s) if s == "relevance" => Action::SearchRelevance { query },
                Some(s) if matches!(s.as_str(), "citations" | "citationcount" | "citation") => {
                    Action::SearchCitations { query }
                }
                Some(s) => return Err(ParseError::UnknownAction(format!("search sorted by `{s}`"))),
            }
        }
        "read" => Action::Read { paper_id: field(action, "paper_id")? },
        "select" => Action::Select { paper_id: field(action, "paper_id")? },
        "answer" => Action::DirectAnswer { title: field(action, "title")? },
        other => return Err(ParseError::UnknownAction(other.to_string())),
    };
    rules.permits(&parsed)?;
    Ok((reason, parsed))
}

fn sort_key(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace(['_', ' ', '-'], "")
}

fn field(action: &Map<String, Value>, key: &str) -> Result<String, ParseError> {
    match action.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        _ => Err(ParseError::MissingField(key.to_string())),
    }
}

/// Finds the first balanced `{...}` span that decodes as a JSON object,
/// preferring one with an `action` key.
pub fn extract_json_object(raw: &str) -> Result<Map<String, Value>, ParseError> {
    let mut fallback = None;
    for (start, _) in raw.match_indices('{') {
        let Some(end) = matching_brace(&raw[start..]) else { continue };
        let candidate = escape_raw_controls(&raw[start..start + end + 1]);
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&candidate) {
            if map.contains_key("action") {
                return Ok(map);
            }
            fallback.get_or_insert(map);
        }
    }
    fallback.ok_or_else(|| {
        let preview: String = raw.chars().take(80).collect();
        ParseError::BadFormat(format!("no JSON object in `{preview}`"))
    })
}

/// Byte offset of the `}` closing the object that starts at `s[0]`.
fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in s.char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Escapes literal control characters that appear inside string literals.
fn escape_raw_controls(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_string = false;
    let mut escaped = false;
    for ch in s.chars() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            } else if ch.is_control() {
                match ch {
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c => out.push_str(&format!("\\u{:04x}", c as u32)),
                }
                continue;
            }
        } else if ch == '"' {
            in_string = true;
        }
        out.push(ch);
    }
    out
}

#[derive(Serialize)]
struct Turn<'a> {
    reason: &'a str,
    action: &'a Action,
}

/// Renders a turn in the grammar. `parse_action` inverts it.
pub fn render_action(reason: &str, action: &Action) -> String {
    serde_json::to_string_pretty(&Turn { reason, action }).expect("action serializes")
}

/// Command reference for the system prompt, listing only legal commands.
pub fn command_descriptions(class: CommandClass) -> String {
    let mut lines = Vec::new();
    if class == CommandClass::NoCommands {
        return String::new();
    }
    lines.push(
        "- search_relevance(query): search the paper index for `query`, most relevant first. \
Each result lists the paper ID, title, abstract and citation count."
            .to_string(),
    );
    lines.push(
        "- search_citations(query): same as search_relevance, but results are ordered by \
citation count, most cited first."
            .to_string(),
    );
    if class == CommandClass::SearchAndRead {
        lines.push(
            "- read(paper_id): fetch the full text of a paper from the results (title, authors, \
abstract and body)."
                .to_string(),
        );
    }
    lines.push(
        "- select(paper_id): give `paper_id` as your final answer. This ends the session."
            .to_string(),
    );
    lines.join("\n")
}

/// The reply format instruction for the commands `rules` allow.
pub fn reply_format(rules: ActionRules) -> String {
    let names: Vec<&str> = if rules.select_only {
        vec!["select"]
    } else {
        match rules.class {
            CommandClass::NoCommands => vec!["answer"],
            CommandClass::SearchOnly => vec!["search_relevance", "search_citations", "select"],
            CommandClass::SearchAndRead => {
                vec!["search_relevance", "search_citations", "read", "select"]
            }
        }
    };
    format!(
        "Reply with exactly one JSON object of the form \
{{\"reason\": \"<your reasoning>\", \"action\": {{\"name\": \"<command>\", ...}}}}. \
Allowed commands: {}. Searches take \"query\"; read and select take \"paper_id\".",
        names.join(", ")
    )
}

/// User message sent after an unparseable turn.
pub fn corrective_message(error: &ParseError, rules: ActionRules) -> String {
    format!("Your last reply could not be used ({error}). {}", reply_format(rules))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BN_ID: &str = "995c5f5e62614fcb4d2796ad2faab969da51713e";

    #[test]
    fn parses_search_relevance() {
        let raw = r#"{"reason": "look it up", "action": {"name": "search_relevance", "query": "batch normalization"}}"#;
        let (reason, action) = parse_action(raw, CommandClass::SearchOnly).unwrap();
        assert_eq!(reason, "look it up");
        assert_eq!(action, Action::SearchRelevance { query: "batch normalization".into() });
    }

    #[test]
    fn parses_select_with_wrapped_reason_and_prose() {
        let raw = format!(
            "Sure, here is my answer:\n{{\n    \"reason\": \"The paper precisely\n               matches.\",\n    \"action\": {{\n        \"name\": \"select\",\n        \"paper_id\": \"{BN_ID}\"\n    }}\n}}\nThanks!"
        );
        let (_, action) = parse_action(&raw, CommandClass::SearchAndRead).unwrap();
        assert_eq!(action, Action::Select { paper_id: BN_ID.into() });
    }

    #[test]
    fn free_prose_is_bad_format() {
        let err = parse_action("I think we should look for the GAN paper", CommandClass::SearchOnly)
            .unwrap_err();
        assert!(matches!(err, ParseError::BadFormat(_)));
    }

    #[test]
    fn error_kinds() {
        let unknown = r#"{"reason": "r", "action": {"name": "browse", "url": "x"}}"#;
        assert_eq!(
            parse_action(unknown, CommandClass::SearchAndRead),
            Err(ParseError::UnknownAction("browse".into()))
        );
        let read = r#"{"reason": "r", "action": {"name": "read", "paper_id": "abc"}}"#;
        assert!(matches!(
            parse_action(read, CommandClass::SearchOnly),
            Err(ParseError::IllegalForCommandClass { .. })
        ));
        let missing = r#"{"reason": "r", "action": {"name": "search_relevance"}}"#;
        assert_eq!(
            parse_action(missing, CommandClass::SearchOnly),
            Err(ParseError::MissingField("query".into()))
        );
        let no_reason = r#"{"action": {"name": "select", "paper_id": "a"}}"#;
        assert_eq!(
            parse_action(no_reason, CommandClass::SearchOnly),
            Err(ParseError::MissingField("reason".into()))
        );
    }

    #[test]
    fn table_style_search_with_sort() {
        let raw = r#"{"reason": "r", "action": {"name": "search", "query": "gan", "sort": "citation_count"}}"#;
        assert_eq!(
            parse_action(raw, CommandClass::SearchOnly).unwrap().1,
            Action::SearchCitations { query: "gan".into() }
        );
        let raw = r#"{"reason": "r", "action": {"name": "search", "query": "gan"}}"#;
        assert_eq!(
            parse_action(raw, CommandClass::SearchOnly).unwrap().1,
            Action::SearchRelevance { query: "gan".into() }
        );
    }

    #[test]
    fn select_only_rules() {
        let raw = r#"{"reason": "r", "action": {"name": "search_relevance", "query": "q"}}"#;
        let rules = ActionRules::select_only(CommandClass::SearchOnly);
        assert!(parse_action_with(raw, rules).is_err());
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_scanner() {
        let raw = r#"note {not json} {"reason": "uses } and { inside", "action": {"name": "select", "paper_id": "p"}}"#;
        let (reason, _) = parse_action(raw, CommandClass::SearchOnly).unwrap();
        assert_eq!(reason, "uses } and { inside");
    }

    fn action_for(class: CommandClass) -> impl Strategy<Value = Action> {
        let text = "[A-Za-z0-9 \"\\\\{}:,.\n-]{0,20}[A-Za-z0-9]";
        let id = "[a-f0-9]{1,40}";
        match class {
            CommandClass::NoCommands => text.prop_map(|t| Action::DirectAnswer { title: t.trim().to_string() }).boxed(),
            CommandClass::SearchOnly => prop_oneof![
                text.prop_map(|q| Action::SearchRelevance { query: q.trim().to_string() }),
                text.prop_map(|q| Action::SearchCitations { query: q.trim().to_string() }),
                id.prop_map(|p| Action::Select { paper_id: p }),
            ]
            .boxed(),
            CommandClass::SearchAndRead => prop_oneof![
                text.prop_map(|q| Action::SearchRelevance { query: q.trim().to_string() }),
                text.prop_map(|q| Action::SearchCitations { query: q.trim().to_string() }),
                id.prop_map(|p| Action::Read { paper_id: p }),
                id.prop_map(|p| Action::Select { paper_id: p }),
            ]
            .boxed(),
        }
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(
            (class, action) in prop_oneof![Just(CommandClass::NoCommands), Just(CommandClass::SearchOnly), Just(CommandClass::SearchAndRead)]
                .prop_flat_map(|c| (Just(c), action_for(c))),
            reason in "[a-z {}\"]{0,30}[a-z]",
        ) {
            let rendered = render_action(&reason, &action);
            let (r, a) = parse_action(&rendered, class).unwrap();
            prop_assert_eq!(a, action);
            prop_assert_eq!(r, reason.trim());
        }
    }
}
