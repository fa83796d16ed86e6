//! Per-token tag sequences in BIO and BIOSE schemes: span encoding and
//! decoding, scheme conversion, grammar validation and repair.

use std::fmt;

use crate::corpus::{SpanAnnotation, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Bio,
    Biose,
}

impl Scheme {
    /// Span prefixes in canonical order; used to build label alphabets.
    pub fn prefixes(self) -> &'static [char] {
        match self {
            Scheme::Bio => &['B', 'I'],
            Scheme::Biose => &['B', 'I', 'E', 'S'],
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bio" => Ok(Scheme::Bio),
            "biose" => Ok(Scheme::Biose),
            other => Err(Error::Config(format!("unknown tag scheme {other:?}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bio => write!(f, "bio"),
            Scheme::Biose => write!(f, "biose"),
        }
    }
}

/// Tags for one token sequence under a declared scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub tags: Vec<String>,
    pub scheme: Scheme,
}

impl TagSequence {
    pub fn new(tags: Vec<String>, scheme: Scheme) -> Self {
        Self { tags, scheme }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// I- or E- tag with no live entity of its label before it.
    OrphanInside,
    /// Continuation tag whose label differs from the open entity.
    LabelMismatch,
    /// BIOSE entity that was opened but never closed with E-.
    DanglingBegin,
    /// Tag string outside the scheme's shape.
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parsed<'a> {
    Outside,
    Span(char, &'a str),
}

fn parse_tag(tag: &str, scheme: Scheme) -> Option<Parsed<'_>> {
    if tag == "O" {
        return Some(Parsed::Outside);
    }
    let (prefix, label) = tag.split_once('-')?;
    let mut chars = prefix.chars();
    let p = chars.next()?;
    if chars.next().is_some() || label.is_empty() || !scheme.prefixes().contains(&p) {
        return None;
    }
    Some(Parsed::Span(p, label))
}

/// Encodes aligned flat spans as per-token tags. Tokens outside every span
/// get "O". Spans must align exactly with token boundaries (run
/// `corpus::align_to_tokens` first) and must not nest or overlap.
pub fn encode(
    tokens: &[Token],
    annotations: &[SpanAnnotation],
    scheme: Scheme,
) -> Result<TagSequence> {
    let mut tags = vec!["O".to_string(); tokens.len()];
    let mut taken = vec![false; tokens.len()];
    for ann in annotations {
        let first = tokens.iter().position(|t| t.start == ann.start);
        let last = tokens.iter().position(|t| t.end == ann.end);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::Encode(format!(
                "span ({}, {}, {}) is not aligned with token boundaries",
                ann.start, ann.end, ann.label
            )));
        };
        if first > last {
            return Err(Error::Encode(format!(
                "span ({}, {}, {}) maps to an empty token range",
                ann.start, ann.end, ann.label
            )));
        }
        if taken[first..=last].iter().any(|&t| t) {
            return Err(Error::Encode(format!(
                "span ({}, {}, {}) nests or overlaps another span",
                ann.start, ann.end, ann.label
            )));
        }
        for (i, slot) in taken[first..=last].iter_mut().enumerate() {
            *slot = true;
            let pos = first + i;
            tags[pos] = match scheme {
                Scheme::Bio => {
                    if pos == first {
                        format!("B-{}", ann.label)
                    } else {
                        format!("I-{}", ann.label)
                    }
                }
                Scheme::Biose => {
                    if first == last {
                        format!("S-{}", ann.label)
                    } else if pos == first {
                        format!("B-{}", ann.label)
                    } else if pos == last {
                        format!("E-{}", ann.label)
                    } else {
                        format!("I-{}", ann.label)
                    }
                }
            };
        }
    }
    Ok(TagSequence::new(tags, scheme))
}

/// Decodes a valid tag sequence back to character-offset spans; the inverse
/// of [`encode`]. Invalid sequences produce a decode error at the first
/// violating index; run [`validate`] or [`repair`] first.
pub fn decode(tags: &TagSequence, tokens: &[Token]) -> Result<Vec<SpanAnnotation>> {
    if tags.len() != tokens.len() {
        return Err(Error::Integrity(format!(
            "{} tags vs {} tokens",
            tags.len(),
            tokens.len()
        )));
    }
    let fail = |index: usize, msg: &str| -> Error {
        Error::Decode {
            index,
            msg: msg.to_string(),
        }
    };
    let mut spans = Vec::new();
    // Open entity: (label, first token index).
    let mut open: Option<(String, usize)> = None;
    for (i, tag) in tags.tags.iter().enumerate() {
        let parsed = parse_tag(tag, tags.scheme)
            .ok_or_else(|| fail(i, &format!("malformed tag {tag:?}")))?;
        match tags.scheme {
            Scheme::Bio => match parsed {
                Parsed::Outside => {
                    if let Some((label, first)) = open.take() {
                        spans.push(span(&label, first, i - 1, tokens));
                    }
                }
                Parsed::Span('B', label) => {
                    if let Some((prev, first)) = open.take() {
                        spans.push(span(&prev, first, i - 1, tokens));
                    }
                    open = Some((label.to_string(), i));
                }
                Parsed::Span('I', label) => match &open {
                    Some((prev, _)) if prev == label => {}
                    Some(_) => return Err(fail(i, "continuation label mismatch")),
                    None => return Err(fail(i, "I- tag without an open entity")),
                },
                Parsed::Span(..) => return Err(fail(i, "prefix not valid in BIO")),
            },
            Scheme::Biose => match parsed {
                Parsed::Outside => {
                    if open.is_some() {
                        return Err(fail(i, "entity not closed before O"));
                    }
                }
                Parsed::Span('S', label) => {
                    if open.is_some() {
                        return Err(fail(i, "entity not closed before S-"));
                    }
                    spans.push(span(label, i, i, tokens));
                }
                Parsed::Span('B', label) => {
                    if open.is_some() {
                        return Err(fail(i, "entity not closed before B-"));
                    }
                    open = Some((label.to_string(), i));
                }
                Parsed::Span('I', label) => match &open {
                    Some((prev, _)) if prev == label => {}
                    Some(_) => return Err(fail(i, "continuation label mismatch")),
                    None => return Err(fail(i, "I- tag without an open entity")),
                },
                Parsed::Span('E', label) => match open.take() {
                    Some((prev, first)) if prev == label => {
                        spans.push(span(&prev, first, i, tokens));
                    }
                    Some(_) => return Err(fail(i, "end label mismatch")),
                    None => return Err(fail(i, "E- tag without an open entity")),
                },
                Parsed::Span(..) => unreachable!("prefix checked by parse_tag"),
            },
        }
    }
    if let Some((label, first)) = open {
        match tags.scheme {
            Scheme::Bio => spans.push(span(&label, first, tokens.len() - 1, tokens)),
            Scheme::Biose => {
                return Err(fail(tokens.len() - 1, "entity still open at sequence end"))
            }
        }
    }
    spans.sort();
    Ok(spans)
}

fn span(label: &str, first: usize, last: usize, tokens: &[Token]) -> SpanAnnotation {
    SpanAnnotation {
        start: tokens[first].start,
        end: tokens[last].end,
        label: label.to_string(),
    }
}

/// Maps BIOSE tags onto BIO: S- becomes B-, E- becomes I-; B/I/O pass
/// through. Total on any input; entity sets are preserved for valid input.
pub fn biose_to_bio(tags: &TagSequence) -> TagSequence {
    let mapped = tags
        .tags
        .iter()
        .map(|t| {
            if let Some(rest) = t.strip_prefix("S-") {
                format!("B-{rest}")
            } else if let Some(rest) = t.strip_prefix("E-") {
                format!("I-{rest}")
            } else {
                t.clone()
            }
        })
        .collect();
    TagSequence::new(mapped, Scheme::Bio)
}

/// Lists grammar violations; empty iff the sequence is valid under its
/// scheme. After a violation the walk resumes as if the offending tag had
/// opened or closed an entity, so one bad transition is reported once.
pub fn validate(tags: &TagSequence) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut report = |index, kind| violations.push(Violation { index, kind });
    // Label of the live entity, and whether it can still be continued
    // (in BIO an entity is continuable right up to the next O/B).
    let mut open: Option<String> = None;
    for (i, tag) in tags.tags.iter().enumerate() {
        let Some(parsed) = parse_tag(tag, tags.scheme) else {
            report(i, ViolationKind::Malformed);
            open = None;
            continue;
        };
        match tags.scheme {
            Scheme::Bio => match parsed {
                Parsed::Outside => open = None,
                Parsed::Span('B', label) => open = Some(label.to_string()),
                Parsed::Span(_, label) => {
                    match &open {
                        Some(prev) if prev == label => {}
                        Some(_) => report(i, ViolationKind::LabelMismatch),
                        None => report(i, ViolationKind::OrphanInside),
                    }
                    open = Some(label.to_string());
                }
            },
            Scheme::Biose => match parsed {
                Parsed::Outside => {
                    if open.take().is_some() {
                        report(i, ViolationKind::DanglingBegin);
                    }
                }
                Parsed::Span('B', label) => {
                    if open.is_some() {
                        report(i, ViolationKind::DanglingBegin);
                    }
                    open = Some(label.to_string());
                }
                Parsed::Span('S', _) => {
                    if open.take().is_some() {
                        report(i, ViolationKind::DanglingBegin);
                    }
                }
                Parsed::Span(p, label) => {
                    // I- or E-
                    match &open {
                        Some(prev) if prev == label => {}
                        Some(_) => report(i, ViolationKind::LabelMismatch),
                        None => report(i, ViolationKind::OrphanInside),
                    }
                    open = if p == 'E' {
                        None
                    } else {
                        Some(label.to_string())
                    };
                }
            },
        }
    }
    if open.is_some() && tags.scheme == Scheme::Biose {
        report(tags.len() - 1, ViolationKind::DanglingBegin);
    }
    violations
}

/// Single left-to-right repair pass over a BIO sequence: every I-X whose
/// predecessor is neither B-X nor I-X becomes B-X. Malformed tags become
/// "O". Returns the repaired sequence and the number of changed positions;
/// idempotent, and the output always validates cleanly.
pub fn repair(tags: &TagSequence) -> Result<(TagSequence, usize)> {
    if tags.scheme != Scheme::Bio {
        return Err(Error::Scheme(
            "repair operates on BIO sequences; convert with biose_to_bio first".into(),
        ));
    }
    let mut out: Vec<String> = Vec::with_capacity(tags.len());
    let mut repaired = 0usize;
    let mut open: Option<String> = None;
    for tag in &tags.tags {
        let fixed = match parse_tag(tag, Scheme::Bio) {
            None => {
                repaired += 1;
                open = None;
                "O".to_string()
            }
            Some(Parsed::Outside) => {
                open = None;
                tag.clone()
            }
            Some(Parsed::Span('B', label)) => {
                open = Some(label.to_string());
                tag.clone()
            }
            Some(Parsed::Span(_, label)) => {
                let continues = open.as_deref() == Some(label);
                open = Some(label.to_string());
                if continues {
                    tag.clone()
                } else {
                    repaired += 1;
                    format!("B-{label}")
                }
            }
        };
        out.push(fixed);
    }
    Ok((TagSequence::new(out, Scheme::Bio), repaired))
}
