//! Count-based distributional word embeddings.
//!
//! Co-occurrence counting with 1/distance weighting, positive pointwise
//! mutual information, and truncated factorization of the (symmetric) PPMI
//! matrix yield static word vectors. Domain adaptation is count
//! interpolation: a base corpus's counts merged with a target corpus's
//! counts, producing adapted variants that feed the same downstream
//! machinery. No case folding or other normalization is applied anywhere;
//! callers decide what a token is.

pub(crate) mod io;

pub use io::{export_text, load_model, save_model};

use indexmap::IndexMap;
use nalgebra::DMatrix;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_SHIFT: f64 = 0.0;
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Sparse symmetric co-occurrence counts over a vocabulary.
#[derive(Debug, Clone)]
pub struct CooccurrenceCounts {
    pub vocab: Alphabet,
    rows: Vec<IndexMap<u32, f64>>,
    pub window: usize,
    pub total: f64,
}

impl CooccurrenceCounts {
    pub fn count(&self, word: u32, context: u32) -> f64 {
        self.rows
            .get(word as usize)
            .and_then(|r| r.get(&context))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Accumulates co-occurrence counts over token sequences (co-occurrence
/// never crosses a sequence boundary). Each ordered pair within `window`
/// contributes weight 1/distance, accumulated symmetrically.
pub fn count_cooccurrences<I, S>(sequences: I, window: usize) -> Result<CooccurrenceCounts>
where
    I: IntoIterator<Item = Vec<S>>,
    S: AsRef<str>,
{
    if window < 1 {
        return Err(Error::Config(
            "co-occurrence window must be at least 1".into(),
        ));
    }
    let mut vocab = Alphabet::new();
    let mut rows: Vec<IndexMap<u32, f64>> = Vec::new();
    let mut total = 0.0;
    for sequence in sequences {
        let ids: Vec<u32> = sequence
            .iter()
            .map(|t| {
                let id = vocab.intern(t.as_ref());
                if id as usize == rows.len() {
                    rows.push(IndexMap::new());
                }
                id
            })
            .collect();
        for i in 0..ids.len() {
            for d in 1..=window {
                let Some(j) = i.checked_add(d).filter(|&j| j < ids.len()) else {
                    break;
                };
                let w = 1.0 / d as f64;
                *rows[ids[i] as usize].entry(ids[j]).or_insert(0.0) += w;
                *rows[ids[j] as usize].entry(ids[i]).or_insert(0.0) += w;
                total += 2.0 * w;
            }
        }
    }
    Ok(CooccurrenceCounts {
        vocab,
        rows,
        window,
        total,
    })
}

/// Interpolates two normalized count tables over their union vocabulary:
/// `(1 - lambda) * base + lambda * domain`. This is the "continued
/// pretraining" mechanism: lambda 0 keeps the base distribution, lambda 1
/// replaces it with the domain's.
pub fn merge_counts(
    base: &CooccurrenceCounts,
    domain: &CooccurrenceCounts,
    lambda: f64,
) -> Result<CooccurrenceCounts> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if base.window != domain.window {
        return Err(Error::Config(format!(
            "window mismatch: base {} vs domain {}",
            base.window, domain.window
        )));
    }
    if base.total <= 0.0 || domain.total <= 0.0 {
        return Err(Error::Config(
            "merge requires non-empty counts on both sides".into(),
        ));
    }
    let mut vocab = base.vocab.clone();
    for word in domain.vocab.entries() {
        vocab.intern(word);
    }
    let mut rows: Vec<IndexMap<u32, f64>> = vec![IndexMap::new(); vocab.len()];
    let mut total = 0.0;
    let mut add = |counts: &CooccurrenceCounts, weight: f64| {
        if weight == 0.0 {
            return;
        }
        for (w, row) in counts.rows.iter().enumerate() {
            let w_new = vocab
                .lookup(counts.vocab.get(w as u32).expect("row within vocab"))
                .expect("union vocabulary");
            for (&c, &v) in row {
                let c_new = vocab
                    .lookup(counts.vocab.get(c).expect("column within vocab"))
                    .expect("union vocabulary");
                let contribution = weight * v / counts.total;
                *rows[w_new as usize].entry(c_new).or_insert(0.0) += contribution;
                total += contribution;
            }
        }
    };
    add(base, 1.0 - lambda);
    add(domain, lambda);
    Ok(CooccurrenceCounts {
        vocab,
        rows,
        window: base.window,
        total,
    })
}

/// Sparse positive PMI matrix with its vocabulary.
#[derive(Debug, Clone)]
pub struct PpmiMatrix {
    pub vocab: Alphabet,
    /// Row-major sparse entries, column-sorted within each row.
    pub rows: Vec<Vec<(u32, f64)>>,
}

/// Positive pointwise mutual information with an optional shift:
/// `max(0, log(P(w,c) / (P(w) P(c))) - shift)`, zero where the count is.
pub fn ppmi(counts: &CooccurrenceCounts, shift: f64) -> Result<PpmiMatrix> {
    if counts.total <= 0.0 {
        return Err(Error::Config("PPMI requires a positive total count".into()));
    }
    if shift < 0.0 {
        return Err(Error::Config(format!("shift must be >= 0, got {shift}")));
    }
    let n = counts.vocab.len();
    let mut row_sums = vec![0.0f64; n];
    let mut col_sums = vec![0.0f64; n];
    for (w, row) in counts.rows.iter().enumerate() {
        for (&c, &v) in row {
            row_sums[w] += v;
            col_sums[c as usize] += v;
        }
    }
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for (w, row) in counts.rows.iter().enumerate() {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for (&c, &v) in row {
            if v <= 0.0 {
                continue;
            }
            let pmi = (v * counts.total / (row_sums[w] * col_sums[c as usize])).ln() - shift;
            if pmi > 0.0 {
                out.push((c, pmi));
            }
        }
        out.sort_by_key(|&(c, _)| c);
        rows.push(out);
    }
    while rows.len() < n {
        rows.push(Vec::new());
    }
    Ok(PpmiMatrix {
        vocab: counts.vocab.clone(),
        rows,
    })
}

/// Static word vectors: one row per vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: Alphabet,
    vectors: Vec<Vec<f64>>,
    pub dim: usize,
    pub variant: String,
}

impl EmbeddingModel {
    pub fn new(
        vocab: Alphabet,
        vectors: Vec<Vec<f64>>,
        variant: impl Into<String>,
    ) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || vocab.is_empty() {
            return Err(Error::Config("embedding model must be non-empty".into()));
        }
        if vectors.len() != vocab.len() {
            return Err(Error::Integrity(format!(
                "{} vectors for {} vocabulary words",
                vectors.len(),
                vocab.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Integrity(format!(
                    "vector {i} has length {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Integrity(format!(
                    "vector {i} has non-finite entries"
                )));
            }
        }
        Ok(Self {
            vocab,
            vectors,
            dim,
            variant: variant.into(),
        })
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab
            .lookup(word)
            .map(|i| self.vectors[i as usize].as_slice())
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Per-dimension standard deviation over the vocabulary; used to
    /// quantize vectors into sparse features.
    pub fn dimension_stddevs(&self) -> Vec<f64> {
        let n = self.vectors.len() as f64;
        let mut means = vec![0.0; self.dim];
        for v in &self.vectors {
            for (m, x) in means.iter_mut().zip(v) {
                *m += x / n;
            }
        }
        let mut vars = vec![0.0; self.dim];
        for v in &self.vectors {
            for ((s, x), m) in vars.iter_mut().zip(v).zip(&means) {
                *s += (x - m) * (x - m) / n;
            }
        }
        vars.into_iter().map(f64::sqrt).collect()
    }
}

/// Truncated factorization of a PPMI matrix.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub model: EmbeddingModel,
    /// Top-d singular values (eigenvalue magnitudes), non-increasing.
    pub singular_values: Vec<f64>,
    /// Eigenvalue signs matching the retained components.
    pub signs: Vec<f64>,
}

/// Factorizes the symmetric PPMI matrix to `dim` dimensions; word vectors
/// are the dominant eigenvectors scaled by the square root of the
/// eigenvalue magnitudes.
pub fn factorize(ppmi: &PpmiMatrix, dim: usize, variant: &str) -> Result<Factorization> {
    let n = ppmi.vocab.len();
    if dim < 1 {
        return Err(Error::Config(
            "embedding dimension must be at least 1".into(),
        ));
    }
    if dim > n {
        return Err(Error::Config(format!(
            "embedding dimension {dim} exceeds vocabulary size {n}"
        )));
    }
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for (w, row) in ppmi.rows.iter().enumerate() {
        for &(c, v) in row {
            dense[(w, c as usize)] += v / 2.0;
            dense[(c as usize, w)] += v / 2.0;
        }
    }
    let eigen = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .abs()
            .total_cmp(&eigen.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let top = &order[..dim];
    let mut vectors = vec![vec![0.0f64; dim]; n];
    let mut singular_values = Vec::with_capacity(dim);
    let mut signs = Vec::with_capacity(dim);
    for (j, &k) in top.iter().enumerate() {
        let lambda = eigen.eigenvalues[k];
        singular_values.push(lambda.abs());
        signs.push(if lambda < 0.0 { -1.0 } else { 1.0 });
        let col = eigen.eigenvectors.column(k);
        // Canonical sign: the entry of largest magnitude is positive.
        let mut flip = 1.0;
        let mut best = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                flip = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        let scale = lambda.abs().sqrt();
        for (w, row) in vectors.iter_mut().enumerate() {
            row[j] = flip * col[w] * scale;
        }
    }
    Ok(Factorization {
        model: EmbeddingModel::new(ppmi.vocab.clone(), vectors, variant)?,
        singular_values,
        signs,
    })
}

/// Frobenius distance between the PPMI matrix and its rank-d reconstruction
/// from a factorization. Non-increasing in d.
pub fn reconstruction_error(ppmi: &PpmiMatrix, factor: &Factorization) -> f64 {
    let n = ppmi.vocab.len();
    let vectors = factor.model.vectors();
    let mut dense = vec![vec![0.0f64; n]; n];
    for (w, row) in ppmi.rows.iter().enumerate() {
        for &(c, v) in row {
            dense[w][c as usize] += v / 2.0;
            dense[c as usize][w] += v / 2.0;
        }
    }
    let mut err = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut approx = 0.0;
            for (k, sign) in factor.signs.iter().enumerate() {
                approx += sign * vectors[i][k] * vectors[j][k];
            }
            let d = dense[i][j] - approx;
            err += d * d;
        }
    }
    err.sqrt()
}

/// Mean of the vectors of in-vocabulary tokens; out-of-vocabulary tokens
/// contribute the zero vector but still count in the denominator, so an
/// all-OOV (or empty) document maps to the zero vector.
pub fn doc_vector<S: AsRef<str>>(tokens: &[S], model: &EmbeddingModel) -> Vec<f64> {
    let mut out = vec![0.0f64; model.dim];
    if tokens.is_empty() {
        return out;
    }
    for token in tokens {
        if let Some(v) = model.vector(token.as_ref()) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
    }
    let n = tokens.len() as f64;
    for o in &mut out {
        *o /= n;
    }
    out
}
