//! Glue between raw documents and the tagger: tokenize, segment, align
//! annotations, encode tags; and back from predicted spans to documents.

use crate::corpus::{align_to_tokens, segment_sentences, tokenize, Document, SubwordVocab, Token};
use crate::crf::{CrfModel, LabeledDoc};
use crate::error::Result;
use crate::tags::{encode, Scheme};

/// Tokenizes and sentence-segments a document.
pub fn tokenize_document(doc: &Document, vocab: Option<&SubwordVocab>) -> Result<Vec<Token>> {
    let tokens = tokenize(doc, vocab)?;
    Ok(segment_sentences(tokens, &doc.text))
}

/// Prepares one document for training: tokenize, segment, snap annotations
/// to token boundaries, encode tags. Returns the labeled document and the
/// number of boundary-adjusted annotations.
pub fn prepare_labeled(
    doc: &Document,
    vocab: Option<&SubwordVocab>,
    scheme: Scheme,
) -> Result<(LabeledDoc, usize)> {
    let tokens = tokenize_document(doc, vocab)?;
    let (aligned, adjusted) = align_to_tokens(&doc.annotations, &tokens)?;
    let tags = encode(&tokens, &aligned, scheme)?;
    Ok((
        LabeledDoc {
            id: doc.id.clone(),
            tokens,
            tags,
        },
        adjusted,
    ))
}

/// Prepares a whole corpus; returns the labeled documents and the total
/// boundary-adjustment count (worth reporting, not failing, on real data).
pub fn prepare_corpus(
    docs: &[Document],
    vocab: Option<&SubwordVocab>,
    scheme: Scheme,
) -> Result<(Vec<LabeledDoc>, usize)> {
    let mut labeled = Vec::with_capacity(docs.len());
    let mut adjusted = 0;
    for doc in docs {
        let (l, a) = prepare_labeled(doc, vocab, scheme)?;
        labeled.push(l);
        adjusted += a;
    }
    Ok((labeled, adjusted))
}

/// Runs a model over a raw document and returns the predicted document
/// plus the number of repaired tag positions. Tokenization uses the
/// model's own subword vocabulary so predictions match training.
pub fn predict_document(model: &CrfModel, doc: &Document) -> Result<(Document, usize)> {
    let tokens = tokenize_document(doc, model.subword_vocab())?;
    let (spans, repaired) = model.predict_spans(&tokens)?;
    Ok((
        Document::new(doc.id.clone(), doc.text.clone(), spans)?,
        repaired,
    ))
}

/// Token surfaces grouped by sentence; the feed for co-occurrence counting.
pub fn sentence_surfaces(doc: &Document) -> Result<Vec<Vec<String>>> {
    let tokens = tokenize_document(doc, None)?;
    let mut out: Vec<Vec<String>> = Vec::new();
    for token in tokens {
        if token.sentence_index >= out.len() {
            out.resize_with(token.sentence_index + 1, Vec::new);
        }
        out[token.sentence_index].push(token.surface);
    }
    Ok(out)
}

/// All token surfaces of a document in order; the feed for document
/// vectors.
pub fn token_surfaces(doc: &Document) -> Result<Vec<String>> {
    Ok(tokenize_document(doc, None)?
        .into_iter()
        .map(|t| t.surface)
        .collect())
}
