//! Corpus ingestion and serialization.
//!
//! All offsets across the crate are character offsets (Unicode scalar
//! values) into the raw document text, matching the standoff convention.

mod conll;
mod sentences;
mod standoff;
mod tokenizer;
mod windows;

pub use conll::{read_conll, write_conll};
pub use sentences::segment_sentences;
pub use standoff::{parse_standoff, read_standoff_dir, write_standoff, write_standoff_dir};
pub use tokenizer::{tokenize, SubwordVocab};
pub use windows::{make_windows, Window, DEFAULT_MAX_CONTEXT, DEFAULT_MAX_CORE};

use crate::error::{Error, Result};

/// A single annotated span over the raw document text.
///
/// `start` is inclusive, `end` exclusive, both in character offsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanAnnotation {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl SpanAnnotation {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if start >= end {
            return Err(Error::Range(format!(
                "span start {start} must be less than end {end}"
            )));
        }
        if label.is_empty() {
            return Err(Error::Integrity("span label must be non-empty".into()));
        }
        Ok(Self { start, end, label })
    }
}

/// A raw document plus its span annotations; the unit of corpus IO,
/// splitting and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Sorted by (start, end, label). Nested or disjoint only, no duplicates.
    pub annotations: Vec<SpanAnnotation>,
}

impl Document {
    /// Builds a document, sorting annotations and checking the invariants:
    /// offsets in range, no duplicates, no partial overlap.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        mut annotations: Vec<SpanAnnotation>,
    ) -> Result<Self> {
        let text = text.into();
        let n_chars = text.chars().count();
        annotations.sort();
        for ann in &annotations {
            if ann.start >= ann.end {
                return Err(Error::Range(format!(
                    "annotation ({}, {}, {}) has start >= end",
                    ann.start, ann.end, ann.label
                )));
            }
            if ann.end > n_chars {
                return Err(Error::Range(format!(
                    "annotation ({}, {}, {}) exceeds text length {}",
                    ann.start, ann.end, ann.label, n_chars
                )));
            }
        }
        for pair in annotations.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Integrity(format!(
                    "duplicate annotation ({}, {}, {})",
                    pair[0].start, pair[0].end, pair[0].label
                )));
            }
        }
        // Partial-overlap sweep: with (start asc, end desc) order every open
        // span on the stack must fully contain the next overlapping one.
        let mut by_containment: Vec<&SpanAnnotation> = annotations.iter().collect();
        by_containment.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
        let mut stack: Vec<&SpanAnnotation> = Vec::new();
        for ann in by_containment {
            while let Some(top) = stack.last() {
                if top.end <= ann.start {
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(top) = stack.last() {
                if top.end < ann.end {
                    return Err(Error::Integrity(format!(
                        "partially overlapping annotations ({}, {}, {}) and ({}, {}, {})",
                        top.start, top.end, top.label, ann.start, ann.end, ann.label
                    )));
                }
            }
            stack.push(ann);
        }
        Ok(Self {
            id: id.into(),
            text,
            annotations,
        })
    }
}

/// A token with exact character offsets into its parent document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub sentence_index: usize,
}

/// Byte offset of every character, plus the total byte length at the end.
/// Used to slice text by character offsets.
pub(crate) fn char_byte_table(text: &str) -> Vec<usize> {
    let mut table: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    table.push(text.len());
    table
}

pub(crate) fn slice_chars<'a>(text: &'a str, table: &[usize], start: usize, end: usize) -> &'a str {
    &text[table[start]..table[end]]
}

/// Snaps annotations to token boundaries: a span whose edge falls inside a
/// token is expanded to the enclosing token boundaries. Returns the adjusted
/// spans together with the number of adjusted or dropped-as-duplicate spans.
///
/// A span that overlaps no token at all (whitespace-only) is an integrity
/// error: it could never be encoded as token tags.
pub fn align_to_tokens(
    annotations: &[SpanAnnotation],
    tokens: &[Token],
) -> Result<(Vec<SpanAnnotation>, usize)> {
    let mut out: Vec<SpanAnnotation> = Vec::with_capacity(annotations.len());
    let mut adjusted = 0usize;
    for ann in annotations {
        let first = tokens
            .iter()
            .position(|t| t.end > ann.start && t.start < ann.end);
        let last = tokens
            .iter()
            .rposition(|t| t.end > ann.start && t.start < ann.end);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::Integrity(format!(
                "annotation ({}, {}, {}) overlaps no token",
                ann.start, ann.end, ann.label
            )));
        };
        let expanded = SpanAnnotation {
            start: tokens[first].start,
            end: tokens[last].end,
            label: ann.label.clone(),
        };
        if expanded.start != ann.start || expanded.end != ann.end {
            adjusted += 1;
        }
        if out.contains(&expanded) {
            // Two gold spans collapsed onto the same token range.
            adjusted += 1;
            continue;
        }
        out.push(expanded);
    }
    out.sort();
    Ok((out, adjusted))
}
