//! Deterministic two-stage tokenizer.
//!
//! Stage one splits on whitespace with letter runs, digit runs and single
//! punctuation characters as tokens. Stage two optionally splits each token
//! into subword pieces by greedy longest match against a vocabulary;
//! characters not covered by any piece become single-character pieces.

use std::collections::HashSet;

use super::{Document, Token};
use crate::error::{Error, Result};

/// Subword vocabulary: one piece per line in the file form. Pieces are
/// kept sorted so serialization is deterministic.
#[derive(Debug, Clone)]
pub struct SubwordVocab {
    sorted: Vec<String>,
    pieces: HashSet<String>,
    max_chars: usize,
}

impl SubwordVocab {
    pub fn new<I, S>(pieces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pieces: HashSet<String> = pieces
            .into_iter()
            .map(Into::into)
            .filter(|p| !p.is_empty())
            .collect();
        let mut sorted: Vec<String> = pieces.iter().cloned().collect();
        sorted.sort();
        let max_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(0);
        Self {
            sorted,
            pieces,
            max_chars,
        }
    }

    /// Parses the plain-text form: one piece per line, blank lines ignored.
    pub fn from_lines(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Pieces in sorted order.
    pub fn pieces(&self) -> &[String] {
        &self.sorted
    }

    fn contains(&self, piece: &str) -> bool {
        self.pieces.contains(piece)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Letter,
    Digit,
    Punct,
}

fn classify(c: char) -> Option<CharClass> {
    if c.is_whitespace() {
        None
    } else if c.is_alphabetic() {
        Some(CharClass::Letter)
    } else if c.is_numeric() {
        Some(CharClass::Digit)
    } else {
        Some(CharClass::Punct)
    }
}

/// Tokenizes a document with exact character offsets. With a subword
/// vocabulary, tokens are further split by greedy longest match and every
/// piece keeps exact offsets; the concatenation of piece surfaces always
/// equals the original token surface.
pub fn tokenize(doc: &Document, vocab: Option<&SubwordVocab>) -> Result<Vec<Token>> {
    if doc.text.is_empty() {
        return Err(Error::Integrity(format!(
            "cannot tokenize empty document {:?}",
            doc.id
        )));
    }
    let chars: Vec<char> = doc.text.chars().collect();
    let mut words: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let Some(class) = classify(chars[i]) else {
            i += 1;
            continue;
        };
        match class {
            CharClass::Punct => {
                words.push((i, i + 1));
                i += 1;
            }
            run_class => {
                let start = i;
                while i < chars.len() && classify(chars[i]) == Some(run_class) {
                    i += 1;
                }
                words.push((start, i));
            }
        }
    }
    let mut tokens = Vec::with_capacity(words.len());
    for (start, end) in words {
        match vocab {
            None => tokens.push(make_token(&chars, start, end)),
            Some(v) => split_subwords(&chars, start, end, v, &mut tokens),
        }
    }
    Ok(tokens)
}

fn make_token(chars: &[char], start: usize, end: usize) -> Token {
    Token {
        surface: chars[start..end].iter().collect(),
        start,
        end,
        sentence_index: 0,
    }
}

fn split_subwords(
    chars: &[char],
    start: usize,
    end: usize,
    vocab: &SubwordVocab,
    out: &mut Vec<Token>,
) {
    let mut pos = start;
    while pos < end {
        let limit = (end - pos).min(vocab.max_chars.max(1));
        let mut matched = 1;
        for len in (1..=limit).rev() {
            let candidate: String = chars[pos..pos + len].iter().collect();
            if vocab.contains(&candidate) {
                matched = len;
                break;
            }
        }
        out.push(make_token(chars, pos, pos + matched));
        pos += matched;
    }
}
