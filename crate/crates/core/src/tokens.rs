//! Token counting used for context-window checks and reading budgets.

/// Counts tokens and cuts text at token boundaries.
///
/// The default `head`/`tail` implementations binary-search over character
/// boundaries and assume `count` is monotone in the length of a prefix or
/// suffix.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;

    /// Longest prefix holding at most `n` tokens.
    fn head<'a>(&self, text: &'a str, n: usize) -> &'a str {
        let bounds: Vec<usize> = char_bounds(text);
        let (mut lo, mut hi) = (0usize, bounds.len() - 1);
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.count(&text[..bounds[mid]]) <= n {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        &text[..bounds[lo]]
    }

    /// Longest suffix holding at most `n` tokens.
    fn tail<'a>(&self, text: &'a str, n: usize) -> &'a str {
        let bounds: Vec<usize> = char_bounds(text);
        let (mut lo, mut hi) = (0usize, bounds.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.count(&text[bounds[mid]..]) <= n {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        &text[bounds[lo]..]
    }
}

fn char_bounds(text: &str) -> Vec<usize> {
    text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len())).collect()
}

/// Whitespace-delimited word count. Deterministic and vendor independent.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn head<'a>(&self, text: &'a str, n: usize) -> &'a str {
        if n == 0 {
            return "";
        }
        let mut seen = 0;
        let mut in_word = false;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                if in_word {
                    seen += 1;
                    if seen == n {
                        return &text[..i];
                    }
                }
                in_word = false;
            } else {
                in_word = true;
            }
        }
        text
    }

    fn tail<'a>(&self, text: &'a str, n: usize) -> &'a str {
        if n == 0 {
            return "";
        }
        let mut seen = 0;
        let mut in_word = false;
        for (i, ch) in text.char_indices().rev() {
            if ch.is_whitespace() {
                if in_word {
                    seen += 1;
                    if seen == n {
                        return &text[i + ch.len_utf8()..];
                    }
                }
                in_word = false;
            } else {
                in_word = true;
            }
        }
        text
    }
}
