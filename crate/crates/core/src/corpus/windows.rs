//! Long sentences are split into cores of bounded length; each core gets up
//! to `max_context` adjacent tokens of left/right context from the document.
//! Core ranges partition the document's token sequence exactly once.

use std::ops::Range;

use super::Token;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_CORE: usize = 300;
pub const DEFAULT_MAX_CONTEXT: usize = 100;

/// Token index ranges (absolute into the document token sequence) of one
/// tagging window. Predictions count only for the core range; context
/// tokens contribute features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    /// Full covered range, contexts included.
    pub range: Range<usize>,
    /// Sub-range whose predictions count.
    pub core: Range<usize>,
}

impl Window {
    pub fn left_context_len(&self) -> usize {
        self.core.start - self.range.start
    }

    pub fn right_context_len(&self) -> usize {
        self.range.end - self.core.end
    }

    pub fn core_len(&self) -> usize {
        self.core.end - self.core.start
    }

    pub fn tokens<'a>(&self, all: &'a [Token]) -> &'a [Token] {
        &all[self.range.clone()]
    }

    pub fn core_tokens<'a>(&self, all: &'a [Token]) -> &'a [Token] {
        &all[self.core.clone()]
    }
}

/// Builds windows over tokens that already carry sentence indices.
/// Sentences up to `max_core` tokens stay intact in one core; longer ones
/// are chunked. Contexts are truncated at document boundaries.
pub fn make_windows(tokens: &[Token], max_core: usize, max_context: usize) -> Result<Vec<Window>> {
    if max_core < 1 {
        return Err(Error::Config("max_core must be at least 1".into()));
    }
    let n = tokens.len();
    let mut cores: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let sentence = tokens[start].sentence_index;
        let mut end = start;
        while end < n && tokens[end].sentence_index == sentence {
            end += 1;
        }
        let mut cursor = start;
        while end - cursor > max_core {
            cores.push(cursor..cursor + max_core);
            cursor += max_core;
        }
        if cursor < end {
            cores.push(cursor..end);
        }
        start = end;
    }
    Ok(cores
        .into_iter()
        .map(|core| {
            let left = core.start.min(max_context);
            let right = (n - core.end).min(max_context);
            Window {
                range: core.start - left..core.end + right,
                core,
            }
        })
        .collect())
}
