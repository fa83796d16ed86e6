//! Columnar token/label format: two columns (surface, tag), blank line
//! between windows. Written with tabs; either spaces or tabs accepted on
//! read, so one read/write pass normalizes a file byte-exactly.

use crate::error::{Error, Result};
use crate::tags::{Scheme, TagSequence};

pub fn write_conll(blocks: &[(Vec<String>, TagSequence)]) -> Result<String> {
    let mut out = String::new();
    for (b, (surfaces, tags)) in blocks.iter().enumerate() {
        if surfaces.len() != tags.tags.len() {
            return Err(Error::Integrity(format!(
                "block {b}: {} surfaces vs {} tags",
                surfaces.len(),
                tags.tags.len()
            )));
        }
        if b > 0 {
            out.push('\n');
        }
        for (surface, tag) in surfaces.iter().zip(&tags.tags) {
            if surface.chars().any(char::is_whitespace) || surface.is_empty() {
                return Err(Error::Integrity(format!(
                    "surface {surface:?} cannot be written in columnar form"
                )));
            }
            out.push_str(surface);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn read_conll(text: &str, scheme: Scheme) -> Result<Vec<(Vec<String>, TagSequence)>> {
    let mut blocks = Vec::new();
    let mut surfaces: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut close = |surfaces: &mut Vec<String>, tags: &mut Vec<String>| {
        if !surfaces.is_empty() {
            blocks.push((
                std::mem::take(surfaces),
                TagSequence::new(std::mem::take(tags), scheme),
            ));
        }
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            close(&mut surfaces, &mut tags);
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 2 columns, got {}", cols.len()),
            });
        }
        surfaces.push(cols[0].to_string());
        tags.push(cols[1].to_string());
    }
    close(&mut surfaces, &mut tags);
    Ok(blocks)
}
