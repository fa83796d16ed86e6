//! Cross-task model transfer: warm-start a main-task model from a model
//! trained on an auxiliary task over the same documents.
//!
//! The feature alphabet always carries over. Emission and transition
//! weights are copied through an optional entity-label map ("O" and the
//! begin/end states map to themselves whenever the map is non-empty); with
//! an empty map the main model starts at zero and only the features-side
//! vocabulary is reused. Nothing is frozen; fine-tuning touches all
//! weights.

use std::collections::BTreeSet;

use crate::crf::{build_label_alphabet, CrfModel, LabeledDoc, TrainOutcome, Trainer};
use crate::error::{Error, Result};

/// Entity-label correspondence from the auxiliary task to the main task.
/// Each auxiliary label maps to at most one main label; several auxiliary
/// labels may share a main label, in which case their weights accumulate.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    pairs: Vec<(String, String)>,
}

impl LabelMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(a, m)| (a.into(), m.into()))
            .collect();
        for (i, (aux, _)) in pairs.iter().enumerate() {
            if pairs[..i].iter().any(|(a, _)| a == aux) {
                return Err(Error::Config(format!(
                    "auxiliary label {aux:?} mapped more than once"
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Parses the file form: one `aux_label<TAB>main_label` pair per line;
    /// blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((aux, main)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected aux_label<TAB>main_label".into(),
                });
            };
            pairs.push((aux.to_string(), main.to_string()));
        }
        Self::new(pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn identity<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String> + Clone,
    {
        Self::new(labels.into_iter().map(|l| (l.clone().into(), l.into())))
    }
}

/// Builds an untrained main-task model warm-started from the auxiliary
/// model: the feature alphabet is carried over, and weights are copied for
/// every (feature, tag) and (tag, tag) pair linked by the label map.
pub fn transfer_init(
    aux: &CrfModel,
    main_entity_labels: &[String],
    map: &LabelMap,
) -> Result<CrfModel> {
    if main_entity_labels.is_empty() {
        return Err(Error::Config("main task label set is empty".into()));
    }
    let aux_entities = aux.entity_labels();
    for (a, m) in map.pairs() {
        if !aux_entities.iter().any(|l| l == a) {
            return Err(Error::Config(format!(
                "label map references unknown auxiliary label {a:?}"
            )));
        }
        if !main_entity_labels.iter().any(|l| l == m) {
            return Err(Error::Config(format!(
                "label map references unknown main label {m:?}"
            )));
        }
    }
    let labels = build_label_alphabet(main_entity_labels, aux.scheme());
    let mut model = CrfModel::zeroed(
        aux.scheme(),
        labels,
        aux.features().clone(),
        aux.constrained(),
        aux.max_core,
        aux.max_context,
        aux.feature_config().clone(),
        aux.subword_vocab().cloned(),
    );
    if map.is_empty() {
        return Ok(model);
    }

    // Tag-level map induced by the entity-label map; "O" follows along.
    let aux_labels = aux.labels();
    let main_count = model.labels().len();
    let mut tag_map: Vec<Option<usize>> = vec![None; aux_labels.len()];
    for (idx, tag) in aux_labels.entries().iter().enumerate() {
        let mapped = if tag == "O" {
            model.labels().lookup("O")
        } else {
            let (prefix, label) = tag.split_once('-').expect("span tag");
            map.pairs()
                .iter()
                .find(|(a, _)| a == label)
                .and_then(|(_, m)| model.labels().lookup(&format!("{prefix}-{m}")))
        };
        tag_map[idx] = mapped.map(|i| i as usize);
    }

    for f in 0..aux.features().len() {
        for (aux_y, mapped) in tag_map.iter().enumerate() {
            if let Some(main_y) = mapped {
                model.w[f * main_count + main_y] += aux.emission_weight(f as u32, aux_y);
            }
        }
    }
    // Transition states: labels plus begin/end, which map to themselves.
    let aux_states = aux_labels.len() + 2;
    let main_states = main_count + 2;
    let state_map = |s: usize| -> Option<usize> {
        if s == aux_labels.len() {
            Some(main_count)
        } else if s == aux_labels.len() + 1 {
            Some(main_count + 1)
        } else {
            tag_map[s]
        }
    };
    for from in 0..aux_states {
        let Some(from_main) = state_map(from) else {
            continue;
        };
        for to in 0..aux_states {
            if let Some(to_main) = state_map(to) {
                model.t[from_main * main_states + to_main] += aux.transition_weight(from, to);
            }
        }
    }
    if model.w.iter().chain(&model.t).any(|x| !x.is_finite()) {
        return Err(Error::Integrity(
            "transfer produced non-finite weights".into(),
        ));
    }
    Ok(model)
}

#[derive(Debug)]
pub struct TransferOutcome {
    pub aux: TrainOutcome,
    pub main: TrainOutcome,
}

/// Trains on the auxiliary annotations, transfers, then fine-tunes on the
/// main annotations. Both layers must cover the same documents.
pub fn train_transfer(
    aux_docs: &[LabeledDoc],
    main_docs: &[LabeledDoc],
    map: &LabelMap,
    aux_trainer: &Trainer,
    main_trainer: &Trainer,
    main_dev: Option<&[LabeledDoc]>,
) -> Result<TransferOutcome> {
    let aux_ids: BTreeSet<&str> = aux_docs.iter().map(|d| d.id.as_str()).collect();
    let main_ids: BTreeSet<&str> = main_docs.iter().map(|d| d.id.as_str()).collect();
    if aux_ids != main_ids {
        return Err(Error::Integrity(
            "auxiliary and main annotation layers must cover the same documents".into(),
        ));
    }
    let main_labels = entity_labels(main_docs);
    if main_labels.is_empty() {
        return Err(Error::Train("main task has no annotations".into()));
    }
    let aux = aux_trainer.fit(aux_docs, None)?;
    let init = transfer_init(&aux.model, &main_labels, map)?;
    let main = main_trainer.fit_from(init, main_docs, main_dev)?;
    Ok(TransferOutcome { aux, main })
}

fn entity_labels(docs: &[LabeledDoc]) -> Vec<String> {
    let mut labels: BTreeSet<String> = BTreeSet::new();
    for doc in docs {
        for tag in &doc.tags.tags {
            if let Some((_, label)) = tag.split_once('-') {
                labels.insert(label.to_string());
            }
        }
    }
    labels.into_iter().collect()
}
