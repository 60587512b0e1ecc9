use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AmbiguityError {
    #[error("no citation group found")]
    MarkupUnrecognized,
}

fn cite_group() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // \cite, \citep, \citet*, \citeauthor[p. 3]{...} and friends.
    RE.get_or_init(|| Regex::new(r"\\[a-zA-Z]*cite[a-zA-Z]*\*?(?:\[[^\]]*\])*\{([^}]*)\}").expect("valid regex"))
}

/// Keys of every citation group in `text`, group by group.
pub fn citation_groups(text: &str) -> Vec<Vec<String>> {
    cite_group()
        .captures_iter(text)
        .map(|c| c[1].split(',').map(str::trim).filter(|k| !k.is_empty()).map(str::to_string).collect())
        .collect()
}

/// True when `target` appears in a citation group holding two or more keys.
pub fn detect_multicite_ambiguity(text: &str, target: &str) -> Result<bool, AmbiguityError> {
    let groups = citation_groups(text);
    if groups.is_empty() {
        return Err(AmbiguityError::MarkupUnrecognized);
    }
    Ok(groups.iter().any(|g| g.len() >= 2 && g.iter().any(|k| k == target)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityLine {
    pub text: String,
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityStats {
    /// Lines with at least one citation group.
    pub recognized: usize,
    pub flagged: usize,
    /// Lines without citation markup, left out of the percentage.
    pub unrecognized: usize,
    /// 1-based positions of flagged lines.
    pub flagged_lines: Vec<usize>,
}

impl AmbiguityStats {
    /// Share of recognized lines whose target sits in a multi-key group.
    /// A lower bound on ambiguity: other sources of it go undetected.
    pub fn flagged_pct(&self) -> f64 {
        if self.recognized == 0 {
            0.0
        } else {
            100.0 * self.flagged as f64 / self.recognized as f64
        }
    }
}

pub fn ambiguity_stats<'a>(lines: impl IntoIterator<Item = (&'a str, &'a str)>) -> AmbiguityStats {
    let mut stats = AmbiguityStats::default();
    for (i, (text, target)) in lines.into_iter().enumerate() {
        match detect_multicite_ambiguity(text, target) {
            Ok(flag) => {
                stats.recognized += 1;
                if flag {
                    stats.flagged += 1;
                    stats.flagged_lines.push(i + 1);
                }
            }
            Err(AmbiguityError::MarkupUnrecognized) => stats.unrecognized += 1,
        }
    }
    stats
}
