//! Vocabulary with a two-language partition.
//!
//! Token index 0 is always the CTC blank, written as the reserved literal
//! `<blk>`. Every other token is classified as Chinese or English from its
//! codepoints alone; tags are derived, never stored in files.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::Result;

/// Reserved blank literal; must be line 0 of every vocabulary file.
pub const BLANK_TOKEN: &str = "<blk>";
/// The blank token id is fixed.
pub const BLANK_ID: u32 = 0;

/// One of the two languages a non-blank token can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanguageTag {
    Cn,
    En,
}

impl LanguageTag {
    /// The other language.
    pub fn other(self) -> Self {
        match self {
            LanguageTag::Cn => LanguageTag::En,
            LanguageTag::En => LanguageTag::Cn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::Cn => "cn",
            LanguageTag::En => "en",
        }
    }
}

impl core::fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification of a vocabulary token: the blank, or one of two languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    Blank,
    Lang(LanguageTag),
}

impl TokenClass {
    pub fn lang(self) -> Option<LanguageTag> {
        match self {
            TokenClass::Blank => None,
            TokenClass::Lang(l) => Some(l),
        }
    }
}

const CJK_RANGES: [(u32, u32); 3] = [
    (0x4E00, 0x9FFF), // CJK Unified Ideographs
    (0x3400, 0x4DBF), // CJK Extension A
    (0xF900, 0xFAFF), // CJK Compatibility Ideographs
];

/// True if the codepoint falls in one of the recognized CJK ranges.
pub fn is_cjk(c: char) -> bool {
    let cp = c as u32;
    CJK_RANGES.iter().any(|&(lo, hi)| cp >= lo && cp <= hi)
}

/// Classify a token string.
///
/// `<blk>` is the blank; anything containing a CJK codepoint is Chinese
/// (mixed-script tokens count as Chinese); everything else is English.
/// The empty string is rejected.
pub fn classify_token(token: &str) -> Result<TokenClass> {
    if token.is_empty() {
        return Err(CoreError::InvalidToken("empty string".to_string()));
    }
    if token == BLANK_TOKEN {
        return Ok(TokenClass::Blank);
    }
    if token.chars().any(is_cjk) {
        Ok(TokenClass::Lang(LanguageTag::Cn))
    } else {
        Ok(TokenClass::Lang(LanguageTag::En))
    }
}

/// Ordered token list with the derived per-token language partition.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    classes: Vec<TokenClass>,
}

impl Vocabulary {
    /// Build a vocabulary from token strings in id order.
    ///
    /// Line 0 must be `<blk>`; tokens must be unique and non-empty.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(CoreError::InvalidToken(
                "vocabulary has no tokens".to_string(),
            ));
        }
        if tokens[0] != BLANK_TOKEN {
            return Err(CoreError::InvalidToken(alloc::format!(
                "token 0 must be {BLANK_TOKEN:?}, got {:?}",
                tokens[0]
            )));
        }
        let mut classes = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let class = classify_token(tok)?;
            if class == TokenClass::Blank && i != 0 {
                return Err(CoreError::InvalidToken(alloc::format!(
                    "duplicate token {tok:?} at id {i}"
                )));
            }
            classes.push(class);
        }
        // Uniqueness without a hash map: sort a copy.
        let mut sorted: Vec<&str> = tokens.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(CoreError::InvalidToken(alloc::format!(
                    "duplicate token {:?}",
                    pair[0]
                )));
            }
        }
        Ok(Vocabulary { tokens, classes })
    }

    /// Parse the one-token-per-line text format. A single trailing newline is
    /// allowed; interior empty lines are invalid tokens.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines: Vec<&str> = text.split('\n').collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        Self::from_tokens(lines)
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn class_of(&self, id: u32) -> Option<TokenClass> {
        self.classes.get(id as usize).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn classes(&self) -> &[TokenClass] {
        &self.classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_blank_literal() {
        assert_eq!(classify_token("<blk>").unwrap(), TokenClass::Blank);
    }

    #[test]
    fn classify_cjk_char() {
        // U+732B is inside U+4E00..=U+9FFF.
        assert_eq!(
            classify_token("猫").unwrap(),
            TokenClass::Lang(LanguageTag::Cn)
        );
    }

    #[test]
    fn classify_ascii_word() {
        assert_eq!(
            classify_token("cat").unwrap(),
            TokenClass::Lang(LanguageTag::En)
        );
    }

    #[test]
    fn classify_mixed_script_is_cn() {
        assert_eq!(
            classify_token("猫cat").unwrap(),
            TokenClass::Lang(LanguageTag::Cn)
        );
    }

    #[test]
    fn classify_empty_rejected() {
        assert!(matches!(
            classify_token(""),
            Err(CoreError::InvalidToken(_))
        ));
    }

    #[test]
    fn classify_extension_a_and_compat() {
        assert_eq!(
            classify_token("\u{3400}").unwrap(),
            TokenClass::Lang(LanguageTag::Cn)
        );
        assert_eq!(
            classify_token("\u{F900}").unwrap(),
            TokenClass::Lang(LanguageTag::Cn)
        );
        // Just outside the ranges.
        assert_eq!(
            classify_token("\u{33FF}").unwrap(),
            TokenClass::Lang(LanguageTag::En)
        );
    }

    #[test]
    fn vocab_requires_blank_first() {
        assert!(Vocabulary::from_tokens(["猫", "cat"]).is_err());
        let v = Vocabulary::from_tokens(["<blk>", "猫", "cat"]).unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(v.class_of(0), Some(TokenClass::Blank));
        assert_eq!(v.class_of(1), Some(TokenClass::Lang(LanguageTag::Cn)));
        assert_eq!(v.class_of(2), Some(TokenClass::Lang(LanguageTag::En)));
    }

    #[test]
    fn vocab_rejects_duplicates() {
        assert!(Vocabulary::from_tokens(["<blk>", "a", "a"]).is_err());
        assert!(Vocabulary::from_tokens(["<blk>", "a", "<blk>"]).is_err());
    }

    #[test]
    fn vocab_parse_trailing_newline() {
        let v = Vocabulary::parse("<blk>\n猫\ncat\n").unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(v.token(1), Some("猫"));
        // Interior empty line is an invalid token.
        assert!(Vocabulary::parse("<blk>\n\ncat\n").is_err());
    }
}
