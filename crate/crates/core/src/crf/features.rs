//! Sparse emission features.
//!
//! Templates: surface identity, lowercase form, character prefixes and
//! suffixes of length 1-3, collapsed word shape, digit/punctuation flags,
//! neighbor surfaces at offsets -2..+2 with adjacent conjunctions. Neighbor
//! lookups stop at the window edge and emit boundary markers there.
//!
//! Optionally each token's embedding vector is attached as quantized
//! features: every dimension is binned into five ranges at thresholds of
//! plus/minus 0.5 and 1.5 per-dimension standard deviations, so the
//! emission model stays log-linear.

use std::ops::Range;

use crate::corpus::Token;
use crate::embeddings::EmbeddingModel;

/// Embedding model plus the per-dimension standard deviations that anchor
/// the quantization thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingAttachment {
    model: EmbeddingModel,
    sigma: Vec<f64>,
}

impl EmbeddingAttachment {
    pub fn new(model: EmbeddingModel) -> Self {
        let sigma = model.dimension_stddevs();
        Self { model, sigma }
    }

    pub(crate) fn from_parts(model: EmbeddingModel, sigma: Vec<f64>) -> Self {
        Self { model, sigma }
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub(crate) fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    fn bin(value: f64, sigma: f64) -> &'static str {
        if sigma <= 0.0 || !sigma.is_finite() {
            return "0";
        }
        if value < -1.5 * sigma {
            "--"
        } else if value < -0.5 * sigma {
            "-"
        } else if value <= 0.5 * sigma {
            "0"
        } else if value <= 1.5 * sigma {
            "+"
        } else {
            "++"
        }
    }
}

/// What the extractor attaches on top of the hand-crafted templates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureConfig {
    pub embedding: Option<EmbeddingAttachment>,
}

impl FeatureConfig {
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn with_embeddings(model: EmbeddingModel) -> Self {
        Self {
            embedding: Some(EmbeddingAttachment::new(model)),
        }
    }

    pub fn variant_tag(&self) -> &str {
        self.embedding
            .as_ref()
            .map(|e| e.model.variant.as_str())
            .unwrap_or("plain")
    }
}

fn shape(surface: &str) -> String {
    let mut out = String::new();
    let mut last = '\0';
    for c in surface.chars() {
        let mapped = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            '9'
        } else {
            '#'
        };
        if mapped != last {
            out.push(mapped);
            last = mapped;
        }
    }
    out
}

fn neighbor<'a>(tokens: &'a [Token], window: &Range<usize>, pos: isize) -> &'a str {
    if pos < window.start as isize {
        "<bos>"
    } else if pos >= window.end as isize {
        "<eos>"
    } else {
        &tokens[pos as usize].surface
    }
}

/// Emits the feature multiset for the token at absolute index `pos`.
/// `window` bounds neighbor lookups; identical windows always yield
/// identical features.
pub fn features_at(
    tokens: &[Token],
    window: &Range<usize>,
    pos: usize,
    config: &FeatureConfig,
    out: &mut Vec<String>,
) {
    let token = &tokens[pos];
    let surface = token.surface.as_str();
    out.push(format!("w={surface}"));
    out.push(format!("lw={}", surface.to_lowercase()));

    let chars: Vec<char> = surface.chars().collect();
    for len in 1..=3usize.min(chars.len()) {
        let prefix: String = chars[..len].iter().collect();
        let suffix: String = chars[chars.len() - len..].iter().collect();
        out.push(format!("p{len}={prefix}"));
        out.push(format!("s{len}={suffix}"));
    }
    out.push(format!("sh={}", shape(surface)));
    if chars.iter().all(|c| c.is_numeric()) {
        out.push("num".to_string());
    } else if chars.iter().any(|c| c.is_numeric()) {
        out.push("has-num".to_string());
    }
    if chars.iter().all(|c| !c.is_alphanumeric()) {
        out.push("punct".to_string());
    }

    let p = pos as isize;
    for offset in [-2isize, -1, 1, 2] {
        out.push(format!(
            "w[{offset:+}]={}",
            neighbor(tokens, window, p + offset)
        ));
    }
    out.push(format!(
        "w[-1]|w[0]={}|{surface}",
        neighbor(tokens, window, p - 1)
    ));
    out.push(format!(
        "w[0]|w[+1]={surface}|{}",
        neighbor(tokens, window, p + 1)
    ));

    if let Some(att) = &config.embedding {
        match att.model.vector(surface) {
            Some(v) => {
                for (j, (&x, &s)) in v.iter().zip(&att.sigma).enumerate() {
                    out.push(format!("e{j}={}", EmbeddingAttachment::bin(x, s)));
                }
            }
            None => out.push("e=oov".to_string()),
        }
    }
}
