//! Rule-based sentence segmentation.
//!
//! A boundary is placed after a sentence-final punctuation token ('.', '!',
//! '?', ':') when it is followed by whitespace and an uppercase letter or
//! digit, and at blank lines regardless of punctuation.

use super::{char_byte_table, Token};

const TERMINATORS: [&str; 4] = [".", "!", "?", ":"];

fn is_blank_gap(gap: &str) -> bool {
    let mut newlines = 0;
    for c in gap.chars() {
        if c == '\n' {
            newlines += 1;
        } else if !c.is_whitespace() {
            return false;
        }
    }
    newlines >= 2
}

/// Assigns non-decreasing sentence indices to the token sequence.
pub fn segment_sentences(mut tokens: Vec<Token>, text: &str) -> Vec<Token> {
    let table = char_byte_table(text);
    let mut index = 0usize;
    for i in 0..tokens.len() {
        tokens[i].sentence_index = index;
        if i + 1 >= tokens.len() {
            break;
        }
        let gap = &text[table[tokens[i].end]..table[tokens[i + 1].start]];
        let next_first = tokens[i + 1].surface.chars().next();
        let terminator = TERMINATORS.contains(&tokens[i].surface.as_str());
        let capitalized = next_first.is_some_and(|c| c.is_uppercase() || c.is_numeric());
        if is_blank_gap(gap) || (terminator && !gap.is_empty() && capitalized) {
            index += 1;
        }
    }
    tokens
}
