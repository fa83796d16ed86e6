//! Linear-chain CRF sequence tagger.
//!
//! Emissions are log-linear over sparse features; transitions couple
//! adjacent labels, with synthetic begin/end states. Inference is exact.
//! The chain spans a window's core positions; context tokens contribute
//! through the neighbor feature templates. Training maximizes the
//! conditional likelihood with adaptive-moment updates and decoupled weight
//! decay.

mod features;
mod inference;
mod io;
mod train;

pub use features::{features_at, EmbeddingAttachment, FeatureConfig};
pub use inference::{forward_backward, log_partition, viterbi, Marginals, TransitionMatrix};
pub use io::{load_model, save_model};
pub use train::{
    mean_nll, EarlyStopping, EpochStats, TrainConfig, TrainOutcome, TrainReport, Trainer,
};

use crate::alphabet::Alphabet;
use crate::corpus::{make_windows, SpanAnnotation, SubwordVocab, Token};
use crate::error::{Error, Result};
use crate::tags::{biose_to_bio, decode, repair, Scheme, TagSequence};

const MODEL_VERSION: u32 = 1;

/// A tokenized document paired with its gold tag sequence; the unit of
/// training and prediction.
#[derive(Debug, Clone)]
pub struct LabeledDoc {
    pub id: String,
    pub tokens: Vec<Token>,
    pub tags: TagSequence,
}

/// One training window: interned features and gold label indices for the
/// core positions.
#[derive(Debug, Clone)]
pub struct WindowInstance {
    pub features: Vec<Vec<u32>>,
    pub gold: Vec<usize>,
}

/// Gradient accumulator matching a model's weight shapes.
#[derive(Debug, Clone)]
pub struct GradBuf {
    pub w: Vec<f64>,
    pub t: Vec<f64>,
}

impl GradBuf {
    pub fn zeros_like(model: &CrfModel) -> Self {
        Self {
            w: vec![0.0; model.w.len()],
            t: vec![0.0; model.t.len()],
        }
    }

    pub fn clear(&mut self) {
        self.w.fill(0.0);
        self.t.fill(0.0);
    }
}

/// Tag alphabet in canonical order: "O" first, then per entity label
/// (sorted) the scheme prefixes in fixed order. Index 0 is always "O".
pub fn build_label_alphabet(entity_labels: &[String], scheme: Scheme) -> Alphabet {
    let mut sorted: Vec<&String> = entity_labels.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut alphabet = Alphabet::new();
    alphabet.intern("O");
    for label in sorted {
        for &prefix in scheme.prefixes() {
            alphabet.intern(&format!("{prefix}-{label}"));
        }
    }
    alphabet
}

/// Trained tagger: alphabets, emission and transition weights, and the
/// extraction configuration needed to reproduce its inputs.
#[derive(Debug, Clone)]
pub struct CrfModel {
    pub(crate) scheme: Scheme,
    pub(crate) labels: Alphabet,
    pub(crate) features: Alphabet,
    /// Emission weights, feature-major: `w[f * |L| + y]`.
    pub(crate) w: Vec<f64>,
    /// Transition weights over `|L| + 2` states (begin, end included).
    pub(crate) t: Vec<f64>,
    pub(crate) constrained: bool,
    pub(crate) max_core: usize,
    pub(crate) max_context: usize,
    pub(crate) feature_config: FeatureConfig,
    pub(crate) subword: Option<SubwordVocab>,
}

impl CrfModel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn zeroed(
        scheme: Scheme,
        labels: Alphabet,
        features: Alphabet,
        constrained: bool,
        max_core: usize,
        max_context: usize,
        feature_config: FeatureConfig,
        subword: Option<SubwordVocab>,
    ) -> Self {
        let n_labels = labels.len();
        let n_features = features.len();
        Self {
            scheme,
            labels,
            features,
            w: vec![0.0; n_features * n_labels],
            t: vec![0.0; (n_labels + 2) * (n_labels + 2)],
            constrained,
            max_core,
            max_context,
            feature_config,
            subword,
        }
    }

    /// Builds a model from explicit parts. Label entries must be "O" or
    /// `<prefix>-<label>` under the scheme, weight slices must match the
    /// alphabet sizes, and all weights must be finite.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        scheme: Scheme,
        labels: Alphabet,
        features: Alphabet,
        w: Vec<f64>,
        t: Vec<f64>,
        constrained: bool,
        max_core: usize,
        max_context: usize,
        feature_config: FeatureConfig,
        subword: Option<SubwordVocab>,
    ) -> Result<Self> {
        let n_labels = labels.len();
        if n_labels == 0 {
            return Err(Error::Config("label alphabet is empty".into()));
        }
        for tag in labels.entries() {
            let ok = tag == "O"
                || matches!(tag.split_once('-'),
                    Some((p, rest)) if !rest.is_empty()
                        && p.chars().count() == 1
                        && scheme.prefixes().contains(&p.chars().next().expect("one char")));
            if !ok {
                return Err(Error::Integrity(format!(
                    "label {tag:?} is not a valid {scheme} tag"
                )));
            }
        }
        if w.len() != features.len() * n_labels {
            return Err(Error::Config(format!(
                "emission weights must have {} entries, got {}",
                features.len() * n_labels,
                w.len()
            )));
        }
        if t.len() != (n_labels + 2) * (n_labels + 2) {
            return Err(Error::Config(format!(
                "transition weights must have {} entries, got {}",
                (n_labels + 2) * (n_labels + 2),
                t.len()
            )));
        }
        if w.iter().chain(&t).any(|x| !x.is_finite()) {
            return Err(Error::Integrity("weights must be finite".into()));
        }
        Ok(Self {
            scheme,
            labels,
            features,
            w,
            t,
            constrained,
            max_core,
            max_context,
            feature_config,
            subword,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn labels(&self) -> &Alphabet {
        &self.labels
    }

    pub fn features(&self) -> &Alphabet {
        &self.features
    }

    pub fn constrained(&self) -> bool {
        self.constrained
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.feature_config
    }

    pub fn subword_vocab(&self) -> Option<&SubwordVocab> {
        self.subword.as_ref()
    }

    /// Entity labels (prefixes stripped) in alphabet order.
    pub fn entity_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for tag in self.labels.entries() {
            if let Some((_, label)) = tag.split_once('-') {
                if !out.iter().any(|l| l == label) {
                    out.push(label.to_string());
                }
            }
        }
        out
    }

    pub fn emission_weight(&self, feature: u32, label: usize) -> f64 {
        self.w[feature as usize * self.labels.len() + label]
    }

    pub fn transition_weight(&self, from: usize, to: usize) -> f64 {
        self.t[from * (self.labels.len() + 2) + to]
    }

    pub fn set_emission_weight(&mut self, feature: u32, label: usize, value: f64) {
        self.w[feature as usize * self.labels.len() + label] = value;
    }

    pub fn set_transition_weight(&mut self, from: usize, to: usize, value: f64) {
        self.t[from * (self.labels.len() + 2) + to] = value;
    }

    /// Emission score matrix for the given per-position feature sets:
    /// `score[i][y]` is the sum of the weights of the features active at i.
    pub fn score_window(&self, features: &[Vec<u32>]) -> Vec<Vec<f64>> {
        let n_labels = self.labels.len();
        features
            .iter()
            .map(|active| {
                let mut row = vec![0.0f64; n_labels];
                for &f in active {
                    let base = f as usize * n_labels;
                    for (y, r) in row.iter_mut().enumerate() {
                        *r += self.w[base + y];
                    }
                }
                row
            })
            .collect()
    }

    /// Transition matrix with scheme constraints applied when enabled.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        self.masked_transitions(true)
    }

    /// Training-time transition matrix: inner-chain constraints only. A
    /// window core can start or end mid-entity (long sentences are cut at
    /// a fixed length), so the begin/end boundary stays unconstrained or
    /// the gold fragment would be forbidden.
    pub(crate) fn training_transition_matrix(&self) -> TransitionMatrix {
        self.masked_transitions(false)
    }

    fn masked_transitions(&self, mask_boundaries: bool) -> TransitionMatrix {
        let n = self.labels.len();
        let mut m = TransitionMatrix::zeros(n);
        for from in 0..n + 2 {
            for to in 0..n + 2 {
                m.set(from, to, self.t[from * (n + 2) + to]);
            }
        }
        if self.constrained {
            for from in 0..n + 2 {
                for to in 0..n + 2 {
                    if !mask_boundaries && (from >= n || to >= n) {
                        continue;
                    }
                    if !self.transition_allowed(from, to) {
                        m.set(from, to, f64::NEG_INFINITY);
                    }
                }
            }
        }
        m
    }

    /// Whether a transition can appear in a grammatical tag sequence.
    /// `from`/`to` index labels, or begin/end at `|L|` and `|L| + 1`.
    pub(crate) fn transition_allowed(&self, from: usize, to: usize) -> bool {
        let n = self.labels.len();
        let begin = n;
        let end = n + 1;
        if from == end || to == begin || (from == begin && to == end) {
            return false;
        }
        let split = |idx: usize| -> Option<(char, &str)> {
            let tag = self.labels.get(idx as u32).expect("label index");
            if tag == "O" {
                None
            } else {
                let (p, l) = tag.split_once('-').expect("span tag");
                Some((p.chars().next().expect("prefix"), l))
            }
        };
        match self.scheme {
            Scheme::Bio => {
                if to == end {
                    return true;
                }
                match split(to) {
                    Some(('I', label)) => {
                        if from == begin {
                            return false;
                        }
                        match split(from) {
                            Some((p, prev)) => (p == 'B' || p == 'I') && prev == label,
                            None => false,
                        }
                    }
                    _ => true,
                }
            }
            Scheme::Biose => {
                // States that end an entity (or none): O, E-, S-; states that
                // keep one open: B-, I-.
                let from_open = if from == begin {
                    None
                } else {
                    match split(from) {
                        Some(('B', l)) | Some(('I', l)) => Some(l),
                        _ => None,
                    }
                };
                if to == end {
                    return from_open.is_none();
                }
                match split(to) {
                    None | Some(('B', _)) | Some(('S', _)) => from_open.is_none(),
                    Some(('I', label)) | Some(('E', label)) => from_open == Some(label),
                    Some(_) => false,
                }
            }
        }
    }

    /// Negative log-likelihood of the gold labels over one window's core
    /// positions, accumulating the gradient (model expectation minus
    /// empirical counts) into `grad`.
    pub fn nll_and_gradient(&self, instance: &WindowInstance, grad: &mut GradBuf) -> Result<f64> {
        let n = instance.features.len();
        if n == 0 || n != instance.gold.len() {
            return Err(Error::Train(format!(
                "instance with {} feature rows and {} gold labels",
                n,
                instance.gold.len()
            )));
        }
        let n_labels = self.labels.len();
        let states = n_labels + 2;
        let emissions = self.score_window(&instance.features);
        let trans = self.training_transition_matrix();
        let marginals = forward_backward(&emissions, &trans)?;

        let mut gold_score =
            trans.get(trans.begin(), instance.gold[0]) + emissions[0][instance.gold[0]];
        for i in 1..n {
            gold_score +=
                trans.get(instance.gold[i - 1], instance.gold[i]) + emissions[i][instance.gold[i]];
        }
        gold_score += trans.get(instance.gold[n - 1], trans.end());
        if !gold_score.is_finite() {
            return Err(Error::Train(
                "gold path is forbidden by the transition constraints".into(),
            ));
        }
        let loss = marginals.log_z - gold_score;

        for (i, active) in instance.features.iter().enumerate() {
            let node = &marginals.node[i];
            let gold = instance.gold[i];
            for &f in active {
                let base = f as usize * n_labels;
                for (y, &p) in node.iter().enumerate() {
                    grad.w[base + y] += p;
                }
                grad.w[base + gold] -= 1.0;
            }
        }
        // Begin and end rows see the first/last node marginals.
        for (y, &p) in marginals.node[0].iter().enumerate() {
            grad.t[trans.begin() * states + y] += p;
        }
        grad.t[trans.begin() * states + instance.gold[0]] -= 1.0;
        for (y, &p) in marginals.node[n - 1].iter().enumerate() {
            grad.t[y * states + trans.end()] += p;
        }
        grad.t[instance.gold[n - 1] * states + trans.end()] -= 1.0;
        for (i, edge) in marginals.edge.iter().enumerate() {
            for a in 0..n_labels {
                for b in 0..n_labels {
                    grad.t[a * states + b] += edge[a * n_labels + b];
                }
            }
            grad.t[instance.gold[i] * states + instance.gold[i + 1]] -= 1.0;
        }
        Ok(loss)
    }

    /// Features for the core positions of one window, interned against the
    /// model alphabet; unknown features are dropped.
    fn lookup_features(&self, tokens: &[Token], window: &crate::corpus::Window) -> Vec<Vec<u32>> {
        let mut scratch = Vec::new();
        window
            .core
            .clone()
            .map(|pos| {
                scratch.clear();
                features_at(
                    tokens,
                    &window.range,
                    pos,
                    &self.feature_config,
                    &mut scratch,
                );
                scratch
                    .iter()
                    .filter_map(|f| self.features.lookup(f))
                    .collect()
            })
            .collect()
    }

    /// Viterbi tags for a whole document: windows are decoded independently
    /// and their core ranges concatenated, which covers each token exactly
    /// once. Output scheme is the model scheme.
    pub fn predict_document(&self, tokens: &[Token]) -> Result<TagSequence> {
        let windows = make_windows(tokens, self.max_core, self.max_context)?;
        let trans = self.transition_matrix();
        let mut tags: Vec<String> = Vec::with_capacity(tokens.len());
        for window in &windows {
            let features = self.lookup_features(tokens, window);
            let emissions = self.score_window(&features);
            let (path, _) = viterbi(&emissions, &trans)?;
            for y in path {
                tags.push(self.labels.get(y as u32).expect("label index").to_string());
            }
        }
        Ok(TagSequence::new(tags, self.scheme))
    }

    /// Predicted character-offset spans for a document, via the uniform
    /// BIO voting path: convert to BIO, repair, decode. Returns the spans
    /// and the number of repaired positions (zero under constrained
    /// decoding).
    pub fn predict_spans(&self, tokens: &[Token]) -> Result<(Vec<SpanAnnotation>, usize)> {
        let tags = self.predict_document(tokens)?;
        let bio = match self.scheme {
            Scheme::Biose => biose_to_bio(&tags),
            Scheme::Bio => tags,
        };
        let (fixed, repaired) = repair(&bio)?;
        Ok((decode(&fixed, tokens)?, repaired))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model(scheme: Scheme) -> CrfModel {
        let labels = build_label_alphabet(&["X".to_string()], scheme);
        let features = Alphabet::from_entries(["f0", "f1", "f2"]);
        CrfModel::zeroed(
            scheme,
            labels,
            features,
            true,
            300,
            100,
            FeatureConfig::plain(),
            None,
        )
    }

    #[test]
    fn label_alphabet_is_canonical() {
        let a = build_label_alphabet(&["B".into(), "A".into(), "B".into()], Scheme::Biose);
        assert_eq!(
            a.entries(),
            &["O", "B-A", "I-A", "E-A", "S-A", "B-B", "I-B", "E-B", "S-B"]
        );
        assert_eq!(a.get(0), Some("O"));
    }

    #[test]
    fn score_window_is_linear_in_features() {
        let mut model = tiny_model(Scheme::Bio);
        // labels: O, B-X, I-X
        model.set_emission_weight(0, 1, 0.5); // f0 -> B-X
        model.set_emission_weight(2, 1, 0.25); // f2 -> B-X
        let scores = model.score_window(&[vec![], vec![0], vec![0, 2]]);
        assert_eq!(scores[0], vec![0.0, 0.0, 0.0]);
        assert!((scores[1][1] - 0.5).abs() < 1e-12);
        assert!((scores[2][1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn constraints_forbid_invalid_bio_transitions() {
        let model = tiny_model(Scheme::Bio);
        let labels = &model.labels;
        let o = labels.lookup("O").unwrap() as usize;
        let b = labels.lookup("B-X").unwrap() as usize;
        let i = labels.lookup("I-X").unwrap() as usize;
        let begin = labels.len();
        assert!(!model.transition_allowed(o, i));
        assert!(!model.transition_allowed(begin, i));
        assert!(model.transition_allowed(b, i));
        assert!(model.transition_allowed(i, i));
        assert!(model.transition_allowed(o, b));
    }

    #[test]
    fn constraints_enforce_biose_grammar() {
        let model = tiny_model(Scheme::Biose);
        let labels = &model.labels;
        let o = labels.lookup("O").unwrap() as usize;
        let b = labels.lookup("B-X").unwrap() as usize;
        let i = labels.lookup("I-X").unwrap() as usize;
        let e = labels.lookup("E-X").unwrap() as usize;
        let s = labels.lookup("S-X").unwrap() as usize;
        let begin = labels.len();
        let end = labels.len() + 1;
        assert!(model.transition_allowed(b, i));
        assert!(model.transition_allowed(b, e));
        assert!(!model.transition_allowed(b, o));
        assert!(!model.transition_allowed(b, b));
        assert!(!model.transition_allowed(b, end));
        assert!(model.transition_allowed(e, o));
        assert!(model.transition_allowed(e, end));
        assert!(model.transition_allowed(s, end));
        assert!(!model.transition_allowed(o, i));
        assert!(model.transition_allowed(begin, s));
        assert!(!model.transition_allowed(begin, e));
    }

    #[test]
    fn zero_model_single_position_loss_is_log_num_labels() {
        let labels = build_label_alphabet(&[], Scheme::Bio);
        assert_eq!(labels.len(), 1);
        // Use two artificial labels to match the stated example.
        let labels = Alphabet::from_entries(["O", "B-X"]);
        let features = Alphabet::from_entries(["f"]);
        let model = CrfModel::zeroed(
            Scheme::Bio,
            labels,
            features,
            false,
            300,
            100,
            FeatureConfig::plain(),
            None,
        );
        let mut grad = GradBuf::zeros_like(&model);
        let loss = model
            .nll_and_gradient(
                &WindowInstance {
                    features: vec![vec![0]],
                    gold: vec![0],
                },
                &mut grad,
            )
            .unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-12);
    }
}
