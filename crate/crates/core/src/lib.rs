//! Sequence labeling toolkit for low-resource span extraction and classification.
//!
//! The crate is organized around a linear-chain CRF tagger with pluggable
//! feature inputs, plus the machinery needed to squeeze extra quality out of
//! small corpora:
//!
//! - [`corpus`]: standoff/CoNLL ingestion, offset-exact tokenization,
//!   sentence segmentation and windowing with left/right context.
//! - [`tags`]: BIO and BIOSE tag codecs with validation and repair.
//! - [`embeddings`]: count-based distributional embeddings (PPMI + truncated
//!   factorization) with a count-interpolation mechanism for domain
//!   adaptation, feeding both CRF features and document vectors.
//! - [`crf`]: exact inference (Viterbi, forward-backward), maximum-likelihood
//!   training with adaptive-moment updates, model serialization.
//! - [`splits`]: strategic datasplits via PCA plus equally-sized k-means.
//! - [`ensemble`]: hard majority voting and cross-validation ensembles.
//! - [`transfer`]: warm-starting a main-task model from an auxiliary task.
//! - [`eval`]: entity-level exact-match precision/recall/F1.
//! - [`synth`]: deterministic synthetic corpora for benchmarks and tests.

pub mod alphabet;
pub mod corpus;
pub mod crf;
pub mod embeddings;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod splits;
pub mod synth;
pub mod tags;
pub mod transfer;

pub use error::{Error, Result};
