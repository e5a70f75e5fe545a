//! Word tokenization shared by the word-level analyses.
//!
//! Words are whitespace-delimited tokens with punctuation trimmed from both
//! edges. Token indices always refer to the whitespace tokenization, so a
//! token made only of punctuation keeps its slot and has an empty core.

/// Punctuation test covering ASCII, Latin-1, General Punctuation, CJK and
/// fullwidth forms.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{3014}'..='\u{301F}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}

/// One whitespace token with byte offsets into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub raw: &'a str,
    pub start: usize,
    /// Byte range of the token with edge punctuation removed.
    pub core_start: usize,
    pub core_end: usize,
}

impl<'a> Token<'a> {
    pub fn core(&self) -> &'a str {
        let offset = self.core_start - self.start;
        &self.raw[offset..offset + (self.core_end - self.core_start)]
    }
}

pub fn tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        match (start, c.is_whitespace()) {
            (None, false) => start = Some(i),
            (Some(s), true) => {
                out.push(make_token(text, s, i));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn make_token(text: &str, start: usize, end: usize) -> Token<'_> {
    let raw = &text[start..end];
    let trimmed_front = raw.trim_start_matches(is_punctuation);
    let core = trimmed_front.trim_end_matches(is_punctuation);
    let core_start = start + (raw.len() - trimmed_front.len());
    Token {
        raw,
        start,
        core_start,
        core_end: core_start + core.len(),
    }
}

/// Punctuation-trimmed words, one per whitespace token.
pub fn words(text: &str) -> Vec<&str> {
    tokens(text).into_iter().map(|t| t.core()).collect()
}

pub fn fold(word: &str) -> String {
    word.to_lowercase()
}
