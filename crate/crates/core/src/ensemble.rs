//! Hard majority voting over tag sequences, cross-validation ensembles
//! over a datasplit plan, and the submission recipes that name which
//! member models go into which ensemble.
//!
//! Voting counts tag strings per position and ignores model scores.
//! Members vote in BIO (callers convert BIOSE via `tags::biose_to_bio`),
//! and the winner sequence is repaired before it leaves this module.

use crate::crf::{CrfModel, FeatureConfig, LabeledDoc, TrainConfig, TrainOutcome, Trainer};
use crate::error::{Error, Result};
use crate::splits::SplitPlan;
use crate::tags::{biose_to_bio, repair, Scheme, TagSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// The tag of the earliest-listed member among the tied tags wins.
    Priority,
    /// Any tie resolves to "O"; makes the vote member-order invariant.
    PreferO,
}

impl TieBreak {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "priority" => Ok(Self::Priority),
            "prefer-o" => Ok(Self::PreferO),
            other => Err(Error::Config(format!("unknown tie-break {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    /// Member identifiers in priority order (highest priority first).
    pub member_ids: Vec<String>,
    pub tie_break: TieBreak,
}

impl EnsembleConfig {
    pub fn new<I, S>(member_ids: I, tie_break: TieBreak) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let member_ids: Vec<String> = member_ids.into_iter().map(Into::into).collect();
        if member_ids.is_empty() {
            return Err(Error::Config(
                "an ensemble needs at least one member".into(),
            ));
        }
        for (i, id) in member_ids.iter().enumerate() {
            if member_ids[..i].contains(id) {
                return Err(Error::Config(format!("duplicate member id {id:?}")));
            }
        }
        Ok(Self {
            member_ids,
            tie_break,
        })
    }
}

/// Hard majority vote per position over equal-length BIO sequences,
/// followed by repair. Returns the voted sequence and the repair count.
pub fn vote(predictions: &[TagSequence], config: &EnsembleConfig) -> Result<(TagSequence, usize)> {
    if predictions.len() != config.member_ids.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} members",
            predictions.len(),
            config.member_ids.len()
        )));
    }
    let len = predictions[0].len();
    for (i, p) in predictions.iter().enumerate() {
        if p.scheme != Scheme::Bio {
            return Err(Error::Scheme(format!(
                "member {:?} votes in {}, expected bio",
                config.member_ids[i], p.scheme
            )));
        }
        if p.len() != len {
            return Err(Error::Integrity(format!(
                "member {:?} has {} tags, expected {len}",
                config.member_ids[i],
                p.len()
            )));
        }
    }
    let mut tags: Vec<String> = Vec::with_capacity(len);
    // (tag, count, first member that produced it)
    let mut counts: Vec<(&str, usize, usize)> = Vec::new();
    for pos in 0..len {
        counts.clear();
        for (member, p) in predictions.iter().enumerate() {
            let tag = p.tags[pos].as_str();
            match counts.iter_mut().find(|(t, _, _)| *t == tag) {
                Some(entry) => entry.1 += 1,
                None => counts.push((tag, 1, member)),
            }
        }
        let best = counts.iter().map(|&(_, c, _)| c).max().expect("non-empty");
        let tied: Vec<&(&str, usize, usize)> =
            counts.iter().filter(|&&(_, c, _)| c == best).collect();
        let winner = if tied.len() == 1 {
            tied[0].0
        } else {
            match config.tie_break {
                TieBreak::PreferO => "O",
                TieBreak::Priority => {
                    tied.iter()
                        .min_by_key(|&&&(_, _, first)| first)
                        .expect("non-empty")
                        .0
                }
            }
        };
        tags.push(winner.to_string());
    }
    repair(&TagSequence::new(tags, Scheme::Bio))
}

/// Stable seed for a named ensemble member derived from a base seed.
pub fn derive_seed(base: u64, member_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in member_id.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash ^ base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// One trained cross-validation member.
#[derive(Debug)]
pub struct CvMember {
    pub variant: String,
    pub dev_cluster: usize,
    pub dev_f1: f64,
    pub outcome: TrainOutcome,
}

#[derive(Debug)]
pub struct CvEnsemble {
    pub members: Vec<CvMember>,
    /// Voted (repaired BIO) prediction per test document.
    pub voted: Vec<(String, TagSequence)>,
    /// Per member, per test document, the BIO-converted predictions, in
    /// `members` order.
    pub member_predictions: Vec<Vec<TagSequence>>,
    pub repaired_positions: usize,
}

/// Trainer settings shared by the cross-validation members.
#[derive(Debug, Clone)]
pub struct CvSettings {
    pub max_core: usize,
    pub max_context: usize,
    pub constrained: bool,
    pub config: TrainConfig,
    pub tie_break: TieBreak,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            max_core: crate::corpus::DEFAULT_MAX_CORE,
            max_context: crate::corpus::DEFAULT_MAX_CONTEXT,
            constrained: true,
            config: TrainConfig::default(),
            tie_break: TieBreak::Priority,
        }
    }
}

/// Trains one model per (embedding variant, plan cluster): the cluster is
/// held out as the dev set with dev-F1 early stopping, the rest trains the
/// model. Every model predicts the test documents and the predictions are
/// combined by majority vote, members ordered by descending dev F1.
pub fn run_cv_ensemble(
    train: &[LabeledDoc],
    test: &[LabeledDoc],
    plan: &SplitPlan,
    variants: &[(String, FeatureConfig)],
    settings: &CvSettings,
) -> Result<CvEnsemble> {
    if variants.is_empty() {
        return Err(Error::Config(
            "at least one embedding variant required".into(),
        ));
    }
    let missing: Vec<&str> = train
        .iter()
        .filter(|d| plan.cluster_of(&d.id).is_none())
        .map(|d| d.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "plan does not cover training documents {missing:?}"
        )));
    }

    let mut members: Vec<CvMember> = Vec::with_capacity(variants.len() * plan.k());
    for (variant, feature_config) in variants {
        for cluster in 0..plan.k() {
            let member_id = cv_member_id(variant, cluster);
            let train_split: Vec<LabeledDoc> = train
                .iter()
                .filter(|d| plan.cluster_of(&d.id) != Some(cluster))
                .cloned()
                .collect();
            let dev_split: Vec<LabeledDoc> = train
                .iter()
                .filter(|d| plan.cluster_of(&d.id) == Some(cluster))
                .cloned()
                .collect();
            let trainer = Trainer {
                feature_config: feature_config.clone(),
                max_core: settings.max_core,
                max_context: settings.max_context,
                constrained: settings.constrained,
                subword: None,
                config: TrainConfig {
                    early_stopping: crate::crf::EarlyStopping::DevF1,
                    seed: derive_seed(settings.config.seed, &member_id),
                    ..settings.config.clone()
                },
            };
            let outcome = trainer.fit(&train_split, Some(&dev_split)).map_err(|e| {
                Error::Train(format!(
                    "member {member_id} (variant {variant}, cluster {cluster}): {e}"
                ))
            })?;
            let dev_f1 = outcome
                .report
                .epochs
                .iter()
                .find(|s| s.epoch == outcome.report.selected_epoch)
                .and_then(|s| s.dev_f1)
                .unwrap_or(0.0);
            members.push(CvMember {
                variant: variant.clone(),
                dev_cluster: cluster,
                dev_f1,
                outcome,
            });
        }
    }

    // Vote with members ordered by descending dev F1 (stable on ties).
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        members[b]
            .dev_f1
            .total_cmp(&members[a].dev_f1)
            .then(a.cmp(&b))
    });
    let member_ids: Vec<String> = order
        .iter()
        .map(|&i| cv_member_id(&members[i].variant, members[i].dev_cluster))
        .collect();
    let config = EnsembleConfig::new(member_ids, settings.tie_break)?;

    let mut member_predictions: Vec<Vec<TagSequence>> = Vec::with_capacity(order.len());
    for &i in &order {
        let model = &members[i].outcome.model;
        let mut per_doc = Vec::with_capacity(test.len());
        for doc in test {
            per_doc.push(to_bio(model.predict_document(&doc.tokens)?));
        }
        member_predictions.push(per_doc);
    }
    let mut voted = Vec::with_capacity(test.len());
    let mut repaired_positions = 0;
    for (d, doc) in test.iter().enumerate() {
        let slice: Vec<TagSequence> = member_predictions
            .iter()
            .map(|per_doc| per_doc[d].clone())
            .collect();
        let (winner, repaired) = vote(&slice, &config)?;
        repaired_positions += repaired;
        voted.push((doc.id.clone(), winner));
    }
    Ok(CvEnsemble {
        members,
        voted,
        member_predictions,
        repaired_positions,
    })
}

fn to_bio(tags: TagSequence) -> TagSequence {
    match tags.scheme {
        Scheme::Biose => biose_to_bio(&tags),
        Scheme::Bio => tags,
    }
}

/// Converts a model's document prediction to BIO for voting.
pub fn predict_bio(model: &CrfModel, doc: &LabeledDoc) -> Result<TagSequence> {
    Ok(to_bio(model.predict_document(&doc.tokens)?))
}

// --- Submission recipes ---------------------------------------------------

/// The five submission flavors, plus both readings of the third: the
/// intended 15-model cross-validation ensemble (`s3_clean`) and the
/// as-submitted variant that additionally carried the general-domain
/// transfer model (`s3_submitted`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    S1,
    S2,
    S3Clean,
    S3Submitted,
    S4,
    S5,
}

impl Recipe {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3_clean" => Ok(Self::S3Clean),
            "s3_submitted" => Ok(Self::S3Submitted),
            "s4" => Ok(Self::S4),
            "s5" => Ok(Self::S5),
            other => Err(Error::Config(format!("unknown recipe {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3Clean => "s3_clean",
            Self::S3Submitted => "s3_submitted",
            Self::S4 => "s4",
            Self::S5 => "s5",
        }
    }

    /// Every recipe except the single-model baseline votes.
    pub fn uses_vote(&self) -> bool {
        !matches!(self, Self::S1)
    }
}

/// How one member model is trained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberKind {
    /// Trained on the complete training data, loss-based stopping.
    FullTrain,
    /// Trained on the plan minus one cluster, dev-F1 stopping.
    CrossVal { dev_cluster: usize },
    /// Warm-started from the auxiliary task, then fine-tuned.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberSpec {
    pub id: String,
    pub variant: String,
    pub kind: MemberKind,
}

/// The three embedding variants by role: the unadapted base model, the
/// general-domain adapted model and the target-domain adapted model.
#[derive(Debug, Clone)]
pub struct VariantRoles {
    pub base: String,
    pub general: String,
    pub domain: String,
}

impl VariantRoles {
    pub fn standard() -> Self {
        Self {
            base: "base".into(),
            general: "general-adapted".into(),
            domain: "domain-adapted".into(),
        }
    }

    fn all(&self) -> [&str; 3] {
        [&self.base, &self.general, &self.domain]
    }
}

pub fn full_member_id(variant: &str) -> String {
    format!("full_{variant}")
}

pub fn cv_member_id(variant: &str, cluster: usize) -> String {
    format!("cv_{variant}_c{cluster}")
}

pub fn transfer_member_id(variant: &str) -> String {
    format!("tsx_{variant}")
}

impl Recipe {
    /// Member models the recipe is composed of, in priority order.
    pub fn member_specs(&self, k: usize, roles: &VariantRoles) -> Vec<MemberSpec> {
        let full = |variant: &str| MemberSpec {
            id: full_member_id(variant),
            variant: variant.to_string(),
            kind: MemberKind::FullTrain,
        };
        let transfer = |variant: &str| MemberSpec {
            id: transfer_member_id(variant),
            variant: variant.to_string(),
            kind: MemberKind::Transfer,
        };
        let cross_val = || {
            let mut specs = Vec::with_capacity(3 * k);
            for variant in roles.all() {
                for cluster in 0..k {
                    specs.push(MemberSpec {
                        id: cv_member_id(variant, cluster),
                        variant: variant.to_string(),
                        kind: MemberKind::CrossVal {
                            dev_cluster: cluster,
                        },
                    });
                }
            }
            specs
        };
        match self {
            Self::S1 => vec![full(&roles.domain)],
            Self::S2 => roles.all().map(full).to_vec(),
            Self::S3Clean => cross_val(),
            Self::S3Submitted => {
                let mut specs = cross_val();
                specs.push(transfer(&roles.general));
                specs
            }
            Self::S4 => roles.all().map(transfer).to_vec(),
            Self::S5 => {
                let mut specs = roles.all().map(full).to_vec();
                specs.extend(cross_val());
                specs.extend(roles.all().map(transfer));
                specs
            }
        }
    }
}

/// One member's predictions over the test documents, BIO scheme, plus its
/// dev F1 when it was trained against a dev split.
#[derive(Debug, Clone)]
pub struct MemberPrediction {
    pub spec: MemberSpec,
    pub dev_f1: Option<f64>,
    /// (document id, BIO tags), one entry per test document, same order
    /// across members.
    pub docs: Vec<(String, TagSequence)>,
}

/// Combines member predictions according to the recipe: the single-model
/// recipe returns its member's repaired prediction without voting; all
/// others vote with members ordered by descending dev F1, falling back to
/// the given order for members without one.
pub fn compose_submission(
    recipe: Recipe,
    members: &[MemberPrediction],
    tie_break: TieBreak,
) -> Result<Vec<(String, TagSequence)>> {
    if members.is_empty() {
        return Err(Error::Config("recipe has no member predictions".into()));
    }
    let doc_ids: Vec<&String> = members[0].docs.iter().map(|(id, _)| id).collect();
    for m in members {
        let ids: Vec<&String> = m.docs.iter().map(|(id, _)| id).collect();
        if ids != doc_ids {
            return Err(Error::Integrity(format!(
                "member {:?} predicts a different document set",
                m.spec.id
            )));
        }
    }
    if recipe == Recipe::S1 {
        if members.len() != 1 {
            return Err(Error::Config(format!(
                "recipe s1 takes exactly one member, got {}",
                members.len()
            )));
        }
        return members[0]
            .docs
            .iter()
            .map(|(id, tags)| Ok((id.clone(), repair(tags)?.0)))
            .collect();
    }
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = members[a].dev_f1.unwrap_or(f64::NEG_INFINITY);
        let fb = members[b].dev_f1.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let config = EnsembleConfig::new(order.iter().map(|&i| members[i].spec.id.clone()), tie_break)?;
    let mut out = Vec::with_capacity(doc_ids.len());
    for (d, id) in doc_ids.iter().enumerate() {
        let slice: Vec<TagSequence> = order
            .iter()
            .map(|&i| members[i].docs[d].1.clone())
            .collect();
        let (winner, _) = vote(&slice, &config)?;
        out.push(((*id).clone(), winner));
    }
    Ok(out)
}
