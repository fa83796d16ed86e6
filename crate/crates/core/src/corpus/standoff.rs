//! Standoff annotation format: one tab-separated "T" line per span,
//! `T<id><TAB><label> <start> <end><TAB><surface>`, alongside the raw text
//! in a companion file.

use std::collections::BTreeMap;
use std::path::Path;

use super::{char_byte_table, slice_chars, Document, SpanAnnotation};
use crate::error::{Error, Result};

/// Newlines and tabs inside a span surface are written as spaces so the
/// line format stays intact; comparisons use the same mapping.
fn flatten_surface(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c == '\n' || c == '\r' || c == '\t' {
                ' '
            } else {
                c
            }
        })
        .collect()
}

/// Parses standoff annotation text against its document text.
///
/// Lines not starting with `T` are ignored (other standoff line types such
/// as attributes or notes are out of scope). The document id is left empty;
/// callers usually assign the file stem.
pub fn parse_standoff(ann_text: &str, doc_text: &str) -> Result<Document> {
    let table = char_byte_table(doc_text);
    let n_chars = table.len() - 1;
    let mut spans = Vec::new();
    for (i, line) in ann_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || !line.starts_with('T') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        let Some(mid) = fields.next() else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected tab-separated fields in {id:?}"),
            });
        };
        let surface_col = fields.next();
        let parts: Vec<&str> = mid.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected \"<label> <start> <end>\", got {mid:?}"),
            });
        }
        let label = parts[0];
        let start: usize = parts[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid start offset {:?}", parts[1]),
        })?;
        let end: usize = parts[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid end offset {:?}", parts[2]),
        })?;
        if start >= end || end > n_chars {
            return Err(Error::Range(format!(
                "annotation {id} has offsets ({start}, {end}) outside text of length {n_chars}"
            )));
        }
        if let Some(expected) = surface_col {
            let actual = slice_chars(doc_text, &table, start, end);
            if flatten_surface(actual) != flatten_surface(expected) {
                return Err(Error::Integrity(format!(
                    "annotation {id}: surface {expected:?} does not match text slice {actual:?}"
                )));
            }
        }
        spans.push(SpanAnnotation::new(start, end, label)?);
    }
    Document::new("", doc_text, spans)
}

/// Serializes a document to standoff form. Annotations are numbered T1, T2,
/// ... in offset order; `parse_standoff` reproduces the document exactly.
pub fn write_standoff(doc: &Document) -> (String, String) {
    let table = char_byte_table(&doc.text);
    let mut ann_text = String::new();
    for (i, ann) in doc.annotations.iter().enumerate() {
        let surface = flatten_surface(slice_chars(&doc.text, &table, ann.start, ann.end));
        ann_text.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            ann.label,
            ann.start,
            ann.end,
            surface
        ));
    }
    (ann_text, doc.text.clone())
}

/// Reads a directory of standoff pairs (`<stem>.txt` plus optional
/// `<stem>.ann`), sorted by stem. A missing `.ann` yields zero annotations,
/// so prediction inputs and gold corpora share one reader.
pub fn read_standoff_dir(dir: &Path) -> Result<Vec<Document>> {
    let mut stems: BTreeMap<String, std::path::PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string(), path.clone());
            }
        }
    }
    if stems.is_empty() {
        return Err(Error::Integrity(format!(
            "no .txt documents found in {}",
            dir.display()
        )));
    }
    let mut docs = Vec::with_capacity(stems.len());
    for (stem, txt_path) in stems {
        let text = std::fs::read_to_string(&txt_path)?;
        let ann_path = txt_path.with_extension("ann");
        let ann_text = if ann_path.exists() {
            std::fs::read_to_string(&ann_path)?
        } else {
            String::new()
        };
        let mut doc = parse_standoff(&ann_text, &text).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line,
                msg: format!("{}: {msg}", ann_path.display()),
            },
            other => other,
        })?;
        doc.id = stem;
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes documents as standoff pairs named after their ids.
pub fn write_standoff_dir(docs: &[Document], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for doc in docs {
        if doc.id.is_empty() {
            return Err(Error::Integrity("document id must be non-empty".into()));
        }
        let (ann, text) = write_standoff(doc);
        std::fs::write(dir.join(format!("{}.txt", doc.id)), text)?;
        std::fs::write(dir.join(format!("{}.ann", doc.id)), ann)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_annotation() {
        let doc_text = "Aqui cocinero cocina.";
        let ann = "T1\tPROFESION 5 13\tcocinero";
        let doc = parse_standoff(ann, doc_text).unwrap();
        assert_eq!(
            doc.annotations,
            vec![SpanAnnotation::new(5, 13, "PROFESION").unwrap()]
        );
    }

    #[test]
    fn empty_annotation_text_yields_no_spans() {
        let doc = parse_standoff("", "anything at all").unwrap();
        assert!(doc.annotations.is_empty());
    }

    #[test]
    fn surface_mismatch_is_integrity_error() {
        let doc_text = "Aqui cocinero cocina.";
        let ann = "T1\tPROF 5 13\txxxxxxxx";
        let err = parse_standoff(ann, doc_text).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
        assert!(err.to_string().contains("T1"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_standoff("T1\tPROF five 13\tx", "some text here").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn out_of_range_offsets_rejected() {
        let err = parse_standoff("T1\tPROF 2 99\tx", "short").unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn roundtrip_is_exact() {
        let text = "El cocinero y la enfermera trabajan aqui.";
        let doc = Document::new(
            "d1",
            text,
            vec![
                SpanAnnotation::new(3, 11, "PROF").unwrap(),
                SpanAnnotation::new(17, 26, "PROF").unwrap(),
            ],
        )
        .unwrap();
        let (ann, txt) = write_standoff(&doc);
        assert!(ann.starts_with("T1\tPROF 3 11\tcocinero\n"));
        assert!(ann.contains("T2\tPROF 17 26\tenfermera\n"));
        let mut parsed = parse_standoff(&ann, &txt).unwrap();
        parsed.id = doc.id.clone();
        assert_eq!(parsed, doc);
    }

    #[test]
    fn non_ascii_offsets_are_character_based() {
        let text = "La señora trabaja";
        let doc =
            Document::new("d", text, vec![SpanAnnotation::new(3, 9, "PER").unwrap()]).unwrap();
        let (ann, _) = write_standoff(&doc);
        assert!(ann.contains("\tseñora"), "{ann}");
        let parsed = parse_standoff(&ann, text).unwrap();
        assert_eq!(parsed.annotations, doc.annotations);
    }

    #[test]
    fn non_t_lines_are_ignored() {
        let text = "la enfermera llega";
        let ann = "T1\tPROF 3 12\tenfermera\n#1\tAnnotatorNotes T1\tnota\nA1\tNegation T1\n";
        let doc = parse_standoff(ann, text).unwrap();
        assert_eq!(doc.annotations.len(), 1);
    }

    #[test]
    fn newline_inside_span_surface_flattens_and_roundtrips() {
        let text = "ante el\njuez supremo";
        let doc = Document::new("d", text, vec![SpanAnnotation::new(5, 12, "X").unwrap()]).unwrap();
        let (ann, txt) = write_standoff(&doc);
        // The surface column stays a single line.
        assert!(ann.contains("\tel juez\n"), "{ann}");
        let parsed = parse_standoff(&ann, &txt).unwrap();
        assert_eq!(parsed.annotations, doc.annotations);
    }

    #[test]
    fn empty_document_serializes_to_empty_ann() {
        let doc = Document::new("d", "text", vec![]).unwrap();
        assert_eq!(write_standoff(&doc).0, "");
    }
}
