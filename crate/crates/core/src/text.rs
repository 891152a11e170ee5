//! Shallow tokenization shared by fill rules, gazetteers and the matcher.
//!
//! Tokens are whitespace-separated, case-folded, and have non-alphanumeric
//! characters stripped from both edges. Offsets are in characters, not bytes.

/// A folded token and the character span it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Tokenize `text`, dropping tokens that are pure punctuation.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].is_whitespace() {
            j += 1;
        }
        let (mut s, mut e) = (i, j);
        while s < e && !chars[s].is_alphanumeric() {
            s += 1;
        }
        while e > s && !chars[e - 1].is_alphanumeric() {
            e -= 1;
        }
        if s < e {
            let raw: String = chars[s..e].iter().collect();
            tokens.push(Token {
                text: fold(&raw),
                start: s,
                end: e,
            });
        }
        i = j;
    }
    tokens
}

/// Folded token texts only.
pub fn token_texts(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// First index at which `needle` occurs as a contiguous run of `haystack`.
pub fn find_run(haystack: &[Token], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    (0..=haystack.len() - needle.len()).find(|&i| {
        haystack[i..i + needle.len()]
            .iter()
            .zip(needle)
            .all(|(t, n)| &t.text == n)
    })
}

/// Slice `text` by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

/// Convert a byte offset into a character offset.
pub fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Trim whitespace and edge punctuation.
pub fn trim_edges(s: &str) -> &str {
    s.trim_matches(|c: char| !c.is_alphanumeric())
}
