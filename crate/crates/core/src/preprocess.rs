//! Tweet text normalization and token-sequence framing.
//!
//! Normalization rewrites user mentions to `@USER` and URLs to `HTTPURL`,
//! then collapses whitespace. Framing wraps a token list in begin/end
//! boundary tokens and truncates to a maximum length. Sub-token vocabulary
//! work belongs to each encoder, not here.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:https?://|www\.)\S+").unwrap());

/// A framed token sequence: boundary tokens at both ends, length capped by
/// the framing call that built it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Framed length n, boundary tokens included. Always >= 2.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // framing guarantees at least [bos, eos]
    }
}

/// Masks mentions and URLs, collapses runs of whitespace to single spaces,
/// and trims. Idempotent; never introduces tabs or newlines.
pub fn normalize(text: &str) -> String {
    let masked = MENTION_RE.replace_all(text, "@USER");
    let masked = URL_RE.replace_all(&masked, "HTTPURL");
    masked.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits normalized text on whitespace. The toy encoder tokenizes this way;
/// adapter encoders bring their own sub-token vocabularies.
pub fn whitespace_tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Frames `tokens` as `[bos] + tokens[..max_len-2] + [eos]`.
///
/// Truncation keeps the front of the input. Fails when `max_len < 2`.
pub fn frame(tokens: &[String], max_len: usize, bos: &str, eos: &str) -> Result<TokenSequence> {
    if max_len < 2 {
        return Err(Error::InvalidArgument(format!(
            "max_len must be at least 2 to hold the boundary tokens, got {max_len}"
        )));
    }
    let keep = tokens.len().min(max_len - 2);
    let mut framed = Vec::with_capacity(keep + 2);
    framed.push(bos.to_string());
    framed.extend(tokens[..keep].iter().cloned());
    framed.push(eos.to_string());
    Ok(TokenSequence { tokens: framed })
}
