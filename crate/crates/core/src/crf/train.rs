//! Maximum-likelihood training.
//!
//! Mini-batch gradient descent with adaptive moments and decoupled weight
//! decay over a convex objective; all weights start at zero. Early stopping
//! selects the best snapshot either by epoch training loss or by dev-set
//! entity F1. Training is sequential and bit-reproducible given the seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{features_at, FeatureConfig};
use super::{build_label_alphabet, CrfModel, GradBuf, LabeledDoc, WindowInstance};
use crate::alphabet::Alphabet;
use crate::corpus::{make_windows, SubwordVocab, DEFAULT_MAX_CONTEXT, DEFAULT_MAX_CORE};
use crate::error::{Error, Result};
use crate::eval::micro_f1;
use crate::tags::{decode, validate, Scheme};

const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStopping {
    /// Keep the epoch with the lowest mean training loss.
    TrainLoss,
    /// Keep the epoch with the highest dev entity F1; requires dev data.
    DevF1,
}

impl EarlyStopping {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "loss" => Ok(Self::TrainLoss),
            "dev-f1" => Ok(Self::DevF1),
            other => Err(Error::Config(format!(
                "unknown early stopping mode {other:?} (expected loss or dev-f1)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub early_stopping: EarlyStopping,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 16,
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.0,
            early_stopping: EarlyStopping::TrainLoss,
            patience: 3,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("beta1 and beta2 must lie in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub selected_epoch: usize,
}

impl TrainReport {
    /// One line per epoch, loss and dev F1 when present.
    pub fn log_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            match e.dev_f1 {
                Some(f1) => out.push_str(&format!(
                    "epoch {} loss {:.6} dev_f1 {:.4}\n",
                    e.epoch, e.train_loss, f1
                )),
                None => out.push_str(&format!("epoch {} loss {:.6}\n", e.epoch, e.train_loss)),
            }
        }
        out.push_str(&format!("selected epoch {}\n", self.selected_epoch));
        out
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: CrfModel,
    pub report: TrainReport,
}

/// Training harness: extraction configuration, windowing, constraints and
/// the optimizer settings.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub feature_config: FeatureConfig,
    pub max_core: usize,
    pub max_context: usize,
    pub constrained: bool,
    pub subword: Option<SubwordVocab>,
    pub config: TrainConfig,
}

impl Trainer {
    pub fn new(feature_config: FeatureConfig, config: TrainConfig) -> Self {
        Self {
            feature_config,
            max_core: DEFAULT_MAX_CORE,
            max_context: DEFAULT_MAX_CONTEXT,
            constrained: true,
            subword: None,
            config,
        }
    }

    /// Trains a model from zero-initialized weights.
    pub fn fit(&self, train: &[LabeledDoc], dev: Option<&[LabeledDoc]>) -> Result<TrainOutcome> {
        let scheme = self.check_inputs(train, dev)?;
        let mut entity_labels: Vec<String> = Vec::new();
        for doc in train {
            for tag in &doc.tags.tags {
                if let Some((_, label)) = tag.split_once('-') {
                    if !entity_labels.iter().any(|l| l == label) {
                        entity_labels.push(label.to_string());
                    }
                }
            }
        }
        let labels = build_label_alphabet(&entity_labels, scheme);
        let (features, instances) = self.build_instances(train, &labels, None)?;
        let model = CrfModel::zeroed(
            scheme,
            labels,
            features,
            self.constrained,
            self.max_core,
            self.max_context,
            self.feature_config.clone(),
            self.subword.clone(),
        );
        self.optimize(model, instances, dev)
    }

    /// Fine-tunes from an existing model (warm start). The training data's
    /// label set must match the model's; the feature alphabet is carried
    /// over and extended with unseen features.
    pub fn fit_from(
        &self,
        init: CrfModel,
        train: &[LabeledDoc],
        dev: Option<&[LabeledDoc]>,
    ) -> Result<TrainOutcome> {
        let scheme = self.check_inputs(train, dev)?;
        if scheme != init.scheme {
            return Err(Error::Train(format!(
                "training data scheme {scheme} does not match model scheme {}",
                init.scheme
            )));
        }
        for doc in train {
            for tag in &doc.tags.tags {
                if init.labels.lookup(tag).is_none() {
                    return Err(Error::Train(format!(
                        "gold tag {tag:?} in document {:?} is not in the model label alphabet",
                        doc.id
                    )));
                }
            }
        }
        let (features, instances) =
            self.build_instances(train, &init.labels, Some(&init.features))?;
        let mut model = init;
        let added = features.len() - model.features.len();
        if added > 0 {
            let grown = model.w.len() + added * model.labels.len();
            model.w.resize(grown, 0.0);
        }
        model.features = features;
        model.feature_config = self.feature_config.clone();
        model.constrained = self.constrained;
        model.max_core = self.max_core;
        model.max_context = self.max_context;
        self.optimize(model, instances, dev)
    }

    fn check_inputs(&self, train: &[LabeledDoc], dev: Option<&[LabeledDoc]>) -> Result<Scheme> {
        self.config.validate()?;
        if train.is_empty() {
            return Err(Error::Train("training set is empty".into()));
        }
        if self.config.early_stopping == EarlyStopping::DevF1 && dev.is_none() {
            return Err(Error::Train(
                "dev-F1 early stopping requires dev documents".into(),
            ));
        }
        let scheme = train[0].tags.scheme;
        for doc in train.iter().chain(dev.unwrap_or(&[])) {
            if doc.tags.scheme != scheme {
                return Err(Error::Train(format!(
                    "document {:?} uses scheme {}, expected {}",
                    doc.id, doc.tags.scheme, scheme
                )));
            }
            if doc.tags.len() != doc.tokens.len() {
                return Err(Error::Train(format!(
                    "document {:?} has {} tags for {} tokens",
                    doc.id,
                    doc.tags.len(),
                    doc.tokens.len()
                )));
            }
            let violations = validate(&doc.tags);
            if !violations.is_empty() {
                return Err(Error::Train(format!(
                    "document {:?} has an invalid gold sequence at index {}",
                    doc.id, violations[0].index
                )));
            }
        }
        Ok(scheme)
    }

    /// Windows every document and interns features (extending `base` when
    /// given). Gold labels are mapped through the label alphabet.
    fn build_instances(
        &self,
        docs: &[LabeledDoc],
        labels: &Alphabet,
        base: Option<&Alphabet>,
    ) -> Result<(Alphabet, Vec<WindowInstance>)> {
        let mut features = base.cloned().unwrap_or_default();
        let mut instances = Vec::new();
        let mut scratch = Vec::new();
        for doc in docs {
            let windows = make_windows(&doc.tokens, self.max_core, self.max_context)?;
            for window in windows {
                let mut rows = Vec::with_capacity(window.core_len());
                let mut gold = Vec::with_capacity(window.core_len());
                for pos in window.core.clone() {
                    scratch.clear();
                    features_at(
                        &doc.tokens,
                        &window.range,
                        pos,
                        &self.feature_config,
                        &mut scratch,
                    );
                    rows.push(scratch.iter().map(|f| features.intern(f)).collect());
                    let tag = &doc.tags.tags[pos];
                    gold.push(labels.lookup(tag).ok_or_else(|| {
                        Error::Train(format!("gold tag {tag:?} missing from label alphabet"))
                    })? as usize);
                }
                instances.push(WindowInstance {
                    features: rows,
                    gold,
                });
            }
        }
        Ok((features, instances))
    }

    fn optimize(
        &self,
        mut model: CrfModel,
        instances: Vec<WindowInstance>,
        dev: Option<&[LabeledDoc]>,
    ) -> Result<TrainOutcome> {
        let cfg = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut grad = GradBuf::zeros_like(&model);
        let mut m_w = vec![0.0f64; model.w.len()];
        let mut v_w = vec![0.0f64; model.w.len()];
        let mut m_t = vec![0.0f64; model.t.len()];
        let mut v_t = vec![0.0f64; model.t.len()];
        let mut step = 0usize;
        let mut order: Vec<usize> = (0..instances.len()).collect();

        let mut report = TrainReport {
            epochs: Vec::with_capacity(cfg.epochs),
            selected_epoch: 0,
        };
        let mut best_key = f64::NEG_INFINITY;
        let mut best_snapshot: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut stale = 0usize;

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                grad.clear();
                let mut batch_loss = 0.0;
                for &idx in batch {
                    batch_loss += model.nll_and_gradient(&instances[idx], &mut grad)?;
                }
                if !batch_loss.is_finite() {
                    return Err(Error::Train("non-finite training loss".into()));
                }
                loss_sum += batch_loss;
                let scale = 1.0 / batch.len() as f64;
                step += 1;
                adam_step(&mut model.w, &mut m_w, &mut v_w, &grad.w, scale, step, cfg);
                adam_step(&mut model.t, &mut m_t, &mut v_t, &grad.t, scale, step, cfg);
            }
            let train_loss = loss_sum / instances.len() as f64;
            let dev_f1 = match dev {
                Some(docs) => Some(dev_entity_f1(&model, docs)?),
                None => None,
            };
            report.epochs.push(EpochStats {
                epoch,
                train_loss,
                dev_f1,
            });

            let key = match cfg.early_stopping {
                EarlyStopping::TrainLoss => -train_loss,
                EarlyStopping::DevF1 => dev_f1.expect("dev checked in check_inputs"),
            };
            if key > best_key {
                best_key = key;
                best_snapshot = Some((model.w.clone(), model.t.clone()));
                report.selected_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
        if let Some((w, t)) = best_snapshot {
            model.w = w;
            model.t = t;
        }
        Ok(TrainOutcome { model, report })
    }
}

fn adam_step(
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grad: &[f64],
    scale: f64,
    step: usize,
    cfg: &TrainConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grad[i] * scale;
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate
            * (m_hat / (v_hat.sqrt() + ADAM_EPSILON) + cfg.weight_decay * params[i]);
    }
}

/// Micro-averaged entity F1 of the current model on dev documents.
fn dev_entity_f1(model: &CrfModel, docs: &[LabeledDoc]) -> Result<f64> {
    let mut pairs = Vec::with_capacity(docs.len());
    for doc in docs {
        let gold = decode(&doc.tags, &doc.tokens)?;
        let (pred, _) = model.predict_spans(&doc.tokens)?;
        pairs.push((gold, pred));
    }
    Ok(micro_f1(&pairs))
}

/// Mean negative log-likelihood of a model over labeled documents; used to
/// inspect training behaviour without running the optimizer.
pub fn mean_nll(model: &CrfModel, trainer: &Trainer, docs: &[LabeledDoc]) -> Result<f64> {
    let (_, instances) = trainer.build_instances(docs, &model.labels, Some(&model.features))?;
    let mut grad = GradBuf::zeros_like(model);
    let mut extended = model.clone();
    let needed = instances
        .iter()
        .flat_map(|i| i.features.iter())
        .flatten()
        .copied()
        .max()
        .map(|m| m as usize + 1)
        .unwrap_or(0);
    if needed * extended.labels.len() > extended.w.len() {
        extended.w.resize(needed * extended.labels.len(), 0.0);
    }
    grad.w.resize(extended.w.len(), 0.0);
    let mut total = 0.0;
    for instance in &instances {
        total += extended.nll_and_gradient(instance, &mut grad)?;
    }
    Ok(total / instances.len() as f64)
}
