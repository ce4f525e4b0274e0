//! Tokenization, sentence boundaries and part-of-speech tagging.
//!
//! Token text is never lowercased, stemmed or lemmatized here; case folding
//! happens only when content features are extracted.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters that always form single-character punctuation tokens.
pub const PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '\'', '"', '(', ')', '-'];

const SENTENCE_TERMINALS: &[char] = &['.', '!', '?'];

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
    /// Byte offset into the source text.
    pub offset: usize,
}

impl Token<'_> {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    fn is_terminal(&self) -> bool {
        self.kind == TokenKind::Punctuation && self.text.starts_with(SENTENCE_TERMINALS)
    }
}

/// Splits on whitespace, then breaks every punctuation character out into
/// its own token.
pub fn tokenize<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |start: &mut Option<usize>, end: usize, tokens: &mut Vec<Token<'a>>| {
        if let Some(s) = start.take() {
            tokens.push(Token {
                text: &text[s..end],
                kind: TokenKind::Word,
                offset: s,
            });
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            flush(&mut word_start, i, &mut tokens);
        } else if is_punctuation(c) {
            flush(&mut word_start, i, &mut tokens);
            tokens.push(Token {
                text: &text[i..i + c.len_utf8()],
                kind: TokenKind::Punctuation,
                offset: i,
            });
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    flush(&mut word_start, text.len(), &mut tokens);
    tokens
}

/// Sentence spans over token indices. A run of `.`, `!` or `?` closes a
/// sentence; trailing tokens without a terminal form a final sentence.
pub fn detect_sentences(tokens: &[Token<'_>]) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 0..tokens.len() {
        let closes = tokens[i].is_terminal() && !tokens.get(i + 1).is_some_and(Token::is_terminal);
        if closes {
            spans.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        spans.push(start..tokens.len());
    }
    spans
}

/// Coarse Penn-style tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    NN,
    NNP,
    VB,
    VBD,
    VBG,
    JJ,
    RB,
    PRP,
    DT,
    IN,
    CC,
    CD,
    UH,
    PUNCT,
    OTHER,
}

impl PosTag {
    pub const ALL: [PosTag; 15] = [
        PosTag::NN,
        PosTag::NNP,
        PosTag::VB,
        PosTag::VBD,
        PosTag::VBG,
        PosTag::JJ,
        PosTag::RB,
        PosTag::PRP,
        PosTag::DT,
        PosTag::IN,
        PosTag::CC,
        PosTag::CD,
        PosTag::UH,
        PosTag::PUNCT,
        PosTag::OTHER,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::NN => "NN",
            PosTag::NNP => "NNP",
            PosTag::VB => "VB",
            PosTag::VBD => "VBD",
            PosTag::VBG => "VBG",
            PosTag::JJ => "JJ",
            PosTag::RB => "RB",
            PosTag::PRP => "PRP",
            PosTag::DT => "DT",
            PosTag::IN => "IN",
            PosTag::CC => "CC",
            PosTag::CD => "CD",
            PosTag::UH => "UH",
            PosTag::PUNCT => "PUNCT",
            PosTag::OTHER => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PosTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown POS tag {s:?}")))
    }
}

/// Case-folded word → tag table.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, PosTag>,
}

const BUNDLED_LEXICON: &str = include_str!("../assets/lexicon.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../assets/stopwords.txt");

impl Lexicon {
    /// Parses `word<TAB>TAG` lines; `#` starts a comment line.
    pub fn parse(source: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::validation(format!("lexicon line {}: expected word<TAB>TAG", i + 1)))?;
            let tag = tag
                .trim()
                .parse()
                .map_err(|e| Error::validation(format!("lexicon line {}: {e}", i + 1)))?;
            entries.insert(word.trim().to_lowercase(), tag);
        }
        Ok(Lexicon { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }

    pub fn get(&self, word: &str) -> Option<PosTag> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a one-word-per-line list (blank lines and `#` comments ignored).
pub fn parse_word_list(source: &str) -> HashSet<String> {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn bundled_stopwords() -> HashSet<String> {
    parse_word_list(BUNDLED_STOPWORDS)
}

fn has_suffix(word: &str, suffix: &str) -> bool {
    word.len() > suffix.len() + 1 && word.ends_with(suffix)
}

fn tag_word(token: &Token<'_>, sentence_initial: bool, lexicon: &Lexicon) -> PosTag {
    let folded = token.text.to_lowercase();
    if let Some(tag) = lexicon.get(&folded) {
        return tag;
    }
    if has_suffix(&folded, "ly") {
        PosTag::RB
    } else if has_suffix(&folded, "ing") {
        PosTag::VBG
    } else if has_suffix(&folded, "ed") {
        PosTag::VBD
    } else if token.text.chars().any(|c| c.is_ascii_digit()) {
        PosTag::CD
    } else if !sentence_initial && token.text.starts_with(char::is_uppercase) {
        PosTag::NNP
    } else if !token.text.chars().any(char::is_alphanumeric) {
        PosTag::OTHER
    } else {
        PosTag::NN
    }
}

/// Tags each token: punctuation → `PUNCT`; words go through the lexicon,
/// then suffix and shape rules, then default to `NN`.
pub fn pos_tag(tokens: &[Token<'_>], lexicon: &Lexicon) -> Vec<PosTag> {
    let mut tags = Vec::with_capacity(tokens.len());
    let mut sentence_initial = true;
    for token in tokens {
        match token.kind {
            TokenKind::Punctuation => {
                tags.push(PosTag::PUNCT);
                sentence_initial = token.is_terminal();
            }
            TokenKind::Word => {
                tags.push(tag_word(token, sentence_initial, lexicon));
                sentence_initial = false;
            }
        }
    }
    tags
}

/// Tokens, sentence spans and tags for one document.
#[derive(Debug, Clone)]
pub struct TokenizedDocument<'a> {
    pub tokens: Vec<Token<'a>>,
    pub sentences: Vec<Range<usize>>,
    pub pos: Vec<PosTag>,
}

impl<'a> TokenizedDocument<'a> {
    pub fn new(text: &'a str, lexicon: &Lexicon) -> Self {
        let tokens = tokenize(text);
        let sentences = detect_sentences(&tokens);
        let pos = pos_tag(&tokens, lexicon);
        TokenizedDocument { tokens, sentences, pos }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
