//! Recipe workspaces.
//!
//! Layout under the workspace root:
//!
//! ```text
//! pretrain/base.txt general.txt domain.txt   raw text for the embedding variants
//! train/*.txt *.ann                          main-task gold corpus
//! aux/*.txt *.ann                            auxiliary-task gold (transfer recipes)
//! test/*.txt                                 documents to annotate
//! train.conf                                 optional key=value settings
//! label_map.tsv                              optional aux->main label map
//! subword.vocab                              optional subword pieces
//! embeddings/ plans/ models/ logs/ predictions/<recipe>/ manifest.txt   outputs
//! ```
//!
//! Member models are shared across recipes and skipped when the manifest
//! says they are already built and unchanged.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use seqtag::corpus::{read_standoff_dir, write_standoff_dir, Document, SubwordVocab};
use seqtag::crf::{
    load_model, save_model, EarlyStopping, FeatureConfig, LabeledDoc, TrainConfig, TrainOutcome,
    Trainer,
};
use seqtag::embeddings::{
    count_cooccurrences, factorize, merge_counts, ppmi, save_model as save_embeddings,
    CooccurrenceCounts,
};
use seqtag::ensemble::{
    compose_submission, derive_seed, MemberKind, MemberPrediction, MemberSpec, Recipe, TieBreak,
    VariantRoles,
};
use seqtag::error::{Error, Result};
use seqtag::pipeline::{prepare_corpus, sentence_surfaces, tokenize_document};
use seqtag::splits::{make_plan, SplitConfig, SplitMode, SplitPlan};
use seqtag::tags::{decode, Scheme};
use seqtag::transfer::{transfer_init, LabelMap};

use crate::config::FlatConfig;
use crate::manifest::Manifest;

pub struct RecipeParams {
    pub train: TrainConfig,
    pub scheme: Scheme,
    pub k: usize,
    pub pca_dims: usize,
    pub embed_window: usize,
    pub embed_dim: usize,
    pub embed_shift: f64,
    pub lambda: f64,
    pub max_core: usize,
    pub max_context: usize,
    pub constrained: bool,
}

impl RecipeParams {
    pub fn from_config(config: &FlatConfig) -> Result<Self> {
        Ok(Self {
            train: config.train_config()?,
            scheme: config.scheme()?,
            k: config.usize_or("k", 5)?,
            pca_dims: config.usize_or("pca_dims", 5)?,
            embed_window: config.usize_or("embed_window", seqtag::embeddings::DEFAULT_WINDOW)?,
            embed_dim: config.usize_or("embed_dim", seqtag::embeddings::DEFAULT_DIM)?,
            embed_shift: config.f64_or("embed_shift", seqtag::embeddings::DEFAULT_SHIFT)?,
            lambda: config.f64_or("lambda", seqtag::embeddings::DEFAULT_LAMBDA)?,
            max_core: config.usize_or("max_core", seqtag::corpus::DEFAULT_MAX_CORE)?,
            max_context: config.usize_or("max_context", seqtag::corpus::DEFAULT_MAX_CONTEXT)?,
            constrained: config.bool_or("constrained", true)?,
        })
    }
}

pub struct Workspace {
    root: PathBuf,
    params: RecipeParams,
    roles: VariantRoles,
    subword: Option<SubwordVocab>,
    train_docs: Vec<Document>,
    train_labeled: Vec<LabeledDoc>,
    aux_labeled: Option<Vec<LabeledDoc>>,
    test_docs: Vec<Document>,
    label_map: LabelMap,
}

impl Workspace {
    pub fn open(root: &Path, seed_override: Option<u64>) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("workspace {} does not exist", root.display()),
            )));
        }
        let conf_path = root.join("train.conf");
        let config = if conf_path.exists() {
            FlatConfig::load(&conf_path)?
        } else {
            FlatConfig::default()
        };
        let mut params = RecipeParams::from_config(&config)?;
        if let Some(seed) = seed_override {
            params.train.seed = seed;
        }
        let subword_path = root.join("subword.vocab");
        let subword = if subword_path.exists() {
            Some(SubwordVocab::from_lines(&std::fs::read_to_string(
                &subword_path,
            )?))
        } else {
            None
        };
        let train_docs = read_standoff_dir(&root.join("train"))?;
        let (train_labeled, adjusted) =
            prepare_corpus(&train_docs, subword.as_ref(), params.scheme)?;
        if adjusted > 0 {
            eprintln!("note: {adjusted} training annotations snapped to token boundaries");
        }
        let aux_dir = root.join("aux");
        let aux_labeled = if aux_dir.is_dir() {
            let docs = read_standoff_dir(&aux_dir)?;
            Some(prepare_corpus(&docs, subword.as_ref(), params.scheme)?.0)
        } else {
            None
        };
        let test_docs = read_standoff_dir(&root.join("test"))?;
        let map_path = root.join("label_map.tsv");
        let label_map = if map_path.exists() {
            LabelMap::from_text(&std::fs::read_to_string(&map_path)?)?
        } else {
            LabelMap::empty()
        };
        Ok(Self {
            root: root.to_path_buf(),
            params,
            roles: VariantRoles::standard(),
            subword,
            train_docs,
            train_labeled,
            aux_labeled,
            test_docs,
            label_map,
        })
    }

    fn rel(&self, parts: &[&str]) -> String {
        parts.join("/")
    }

    fn ensure_dir(&self, name: &str) -> Result<()> {
        std::fs::create_dir_all(self.root.join(name))?;
        Ok(())
    }

    /// Builds (or reuses) the three embedding variants. The base variant
    /// counts the base corpus alone; the adapted variants interpolate the
    /// base counts with the general/domain corpora.
    fn ensure_embeddings(&self, manifest: &mut Manifest) -> Result<Vec<(String, PathBuf)>> {
        self.ensure_dir("embeddings")?;
        let pretrain = self.root.join("pretrain");
        let specs: [(&str, Option<&str>); 3] = [
            (self.roles.base.as_str(), None),
            (self.roles.general.as_str(), Some("general.txt")),
            (self.roles.domain.as_str(), Some("domain.txt")),
        ];
        let base_counts = self.corpus_counts(&pretrain.join("base.txt"))?;
        let mut out = Vec::new();
        for (variant, adapt) in specs {
            let rel = self.rel(&["embeddings", &format!("{variant}.emb")]);
            let path = self.root.join(&rel);
            if !manifest.is_current(&rel) {
                let counts = match adapt {
                    None => base_counts.clone(),
                    Some(file) => {
                        let domain_counts = self.corpus_counts(&pretrain.join(file))?;
                        merge_counts(&base_counts, &domain_counts, self.params.lambda)?
                    }
                };
                let matrix = ppmi(&counts, self.params.embed_shift)?;
                let dim = self.params.embed_dim.min(counts.vocab.len());
                if dim < self.params.embed_dim {
                    eprintln!(
                        "note: embedding dimension clamped to vocabulary size {dim} for {variant}"
                    );
                }
                let factor = factorize(&matrix, dim, variant)?;
                save_embeddings(&factor.model, &path)?;
                manifest.record(&rel)?;
                manifest.save()?;
            }
            out.push((variant.to_string(), path));
        }
        Ok(out)
    }

    fn corpus_counts(&self, file: &Path) -> Result<CooccurrenceCounts> {
        if !file.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("pretraining corpus {} not found", file.display()),
            )));
        }
        let text = std::fs::read_to_string(file)?;
        let doc = Document::new("pretrain", text, vec![])?;
        count_cooccurrences(sentence_surfaces(&doc)?, self.params.embed_window)
    }

    fn ensure_plan(&self, manifest: &mut Manifest, base_embedding: &Path) -> Result<SplitPlan> {
        self.ensure_dir("plans")?;
        let rel = self.rel(&["plans", "strategic.plan"]);
        let path = self.root.join(&rel);
        if manifest.is_current(&rel) {
            return SplitPlan::load(&path);
        }
        let model = seqtag::embeddings::load_model(base_embedding)?;
        let config = SplitConfig {
            k: self.params.k,
            pca_dims: self.params.pca_dims,
            seed: self.params.train.seed,
            mode: SplitMode::Strategic,
        };
        let build = make_plan(&self.train_docs, Some(&model), &config)?;
        build.plan.save(&path)?;
        let export = seqtag::splits::export_plan_2d(&build.plan, &build.projected)?;
        std::fs::write(self.root.join("plans").join("strategic_2d.tsv"), export)?;
        manifest.record(&rel)?;
        manifest.record(&self.rel(&["plans", "strategic_2d.tsv"]))?;
        manifest.save()?;
        Ok(build.plan)
    }

    fn model_rel(&self, member: &str) -> String {
        self.rel(&["models", &format!("{member}.model")])
    }

    fn feature_config(
        &self,
        embeddings: &[(String, PathBuf)],
        variant: &str,
    ) -> Result<FeatureConfig> {
        let path = embeddings
            .iter()
            .find(|(v, _)| v == variant)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| Error::Config(format!("unknown embedding variant {variant:?}")))?;
        Ok(FeatureConfig::with_embeddings(
            seqtag::embeddings::load_model(&path)?,
        ))
    }

    fn trainer(
        &self,
        feature_config: FeatureConfig,
        member_id: &str,
        stopping: EarlyStopping,
    ) -> Trainer {
        Trainer {
            feature_config,
            max_core: self.params.max_core,
            max_context: self.params.max_context,
            constrained: self.params.constrained,
            subword: self.subword.clone(),
            config: TrainConfig {
                early_stopping: stopping,
                seed: derive_seed(self.params.train.seed, member_id),
                ..self.params.train.clone()
            },
        }
    }

    fn write_outcome(
        &self,
        member: &str,
        outcome: &TrainOutcome,
        dev_f1: Option<f64>,
    ) -> Result<()> {
        save_model(&outcome.model, &self.root.join(self.model_rel(member)))?;
        std::fs::write(
            self.root.join("logs").join(format!("{member}.log")),
            outcome.report.log_lines(),
        )?;
        let mut meta = format!("selected_epoch={}\n", outcome.report.selected_epoch);
        if let Some(f1) = dev_f1 {
            meta.push_str(&format!("dev_f1={f1:.6}\n"));
        }
        std::fs::write(
            self.root.join("models").join(format!("{member}.meta")),
            meta,
        )?;
        Ok(())
    }

    /// Trains one member model end to end and writes its artifacts.
    fn train_member(
        &self,
        spec: &MemberSpec,
        embeddings: &[(String, PathBuf)],
        plan: Option<&SplitPlan>,
    ) -> Result<()> {
        let feature_config = self.feature_config(embeddings, &spec.variant)?;
        match &spec.kind {
            MemberKind::FullTrain => {
                let trainer = self.trainer(feature_config, &spec.id, EarlyStopping::TrainLoss);
                let outcome = trainer.fit(&self.train_labeled, None)?;
                self.write_outcome(&spec.id, &outcome, None)
            }
            MemberKind::CrossVal { dev_cluster } => {
                let plan = plan.ok_or_else(|| {
                    Error::Config("cross-validation member without a split plan".into())
                })?;
                let train: Vec<LabeledDoc> = self
                    .train_labeled
                    .iter()
                    .filter(|d| plan.cluster_of(&d.id) != Some(*dev_cluster))
                    .cloned()
                    .collect();
                let dev: Vec<LabeledDoc> = self
                    .train_labeled
                    .iter()
                    .filter(|d| plan.cluster_of(&d.id) == Some(*dev_cluster))
                    .cloned()
                    .collect();
                let trainer = self.trainer(feature_config, &spec.id, EarlyStopping::DevF1);
                let outcome = trainer.fit(&train, Some(&dev))?;
                let dev_f1 = outcome
                    .report
                    .epochs
                    .iter()
                    .find(|e| e.epoch == outcome.report.selected_epoch)
                    .and_then(|e| e.dev_f1);
                self.write_outcome(&spec.id, &outcome, dev_f1)
            }
            MemberKind::Transfer => {
                let aux_docs = self.aux_labeled.as_ref().ok_or_else(|| {
                    Error::Config("transfer recipes need an aux/ directory".into())
                })?;
                let aux_trainer = self.trainer(
                    feature_config.clone(),
                    &format!("{}_aux", spec.id),
                    EarlyStopping::TrainLoss,
                );
                let aux_outcome = aux_trainer.fit(aux_docs, None)?;
                let main_labels: Vec<String> = {
                    let mut labels: Vec<String> = Vec::new();
                    for doc in &self.train_labeled {
                        for tag in &doc.tags.tags {
                            if let Some((_, label)) = tag.split_once('-') {
                                if !labels.iter().any(|l| l == label) {
                                    labels.push(label.to_string());
                                }
                            }
                        }
                    }
                    labels.sort();
                    labels
                };
                let init = transfer_init(&aux_outcome.model, &main_labels, &self.label_map)?;
                let trainer = self.trainer(feature_config, &spec.id, EarlyStopping::TrainLoss);
                let outcome = trainer.fit_from(init, &self.train_labeled, None)?;
                std::fs::write(
                    self.root.join("logs").join(format!("{}_aux.log", spec.id)),
                    aux_outcome.report.log_lines(),
                )?;
                self.write_outcome(&spec.id, &outcome, None)
            }
        }
    }

    fn read_dev_f1(&self, member: &str) -> Result<Option<f64>> {
        let path = self.root.join("models").join(format!("{member}.meta"));
        if !path.exists() {
            return Ok(None);
        }
        for line in std::fs::read_to_string(&path)?.lines() {
            if let Some(value) = line.strip_prefix("dev_f1=") {
                return Ok(Some(value.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("invalid dev_f1 in {}", path.display()),
                })?));
            }
        }
        Ok(None)
    }

    /// Runs a recipe end to end: embeddings, plan, member models (with
    /// manifest-based reuse), predictions and the vote.
    pub fn run_recipe(&self, recipe: Recipe, jobs: usize) -> Result<()> {
        for dir in ["models", "logs", "predictions"] {
            self.ensure_dir(dir)?;
        }
        let mut manifest = Manifest::load(&self.root)?;
        let embeddings = self.ensure_embeddings(&mut manifest)?;
        let specs = recipe.member_specs(self.params.k, &self.roles);
        let needs_plan = specs
            .iter()
            .any(|s| matches!(s.kind, MemberKind::CrossVal { .. }));
        let plan = if needs_plan {
            Some(self.ensure_plan(&mut manifest, &embeddings[0].1)?)
        } else {
            None
        };

        let pending: Vec<&MemberSpec> = specs
            .iter()
            .filter(|s| !manifest.is_current(&self.model_rel(&s.id)))
            .collect();
        eprintln!(
            "recipe {}: {} members, {} to train",
            recipe.name(),
            specs.len(),
            pending.len()
        );
        if jobs <= 1 || pending.len() <= 1 {
            for spec in &pending {
                self.train_member(spec, &embeddings, plan.as_ref())
                    .map_err(|e| Error::Train(format!("member {}: {e}", spec.id)))?;
            }
        } else {
            let next = AtomicUsize::new(0);
            let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());
            std::thread::scope(|scope| {
                for _ in 0..jobs.min(pending.len()) {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= pending.len() || !failures.lock().unwrap().is_empty() {
                            break;
                        }
                        let spec = pending[i];
                        if let Err(e) = self.train_member(spec, &embeddings, plan.as_ref()) {
                            failures
                                .lock()
                                .unwrap()
                                .push(format!("member {}: {e}", spec.id));
                        }
                    });
                }
            });
            let failures = failures.into_inner().unwrap();
            if let Some(first) = failures.into_iter().next() {
                return Err(Error::Train(first));
            }
        }
        for spec in &specs {
            manifest.record(&self.model_rel(&spec.id))?;
        }
        manifest.save()?;

        // Prediction phase: every member votes on the test documents.
        let mut members: Vec<MemberPrediction> = Vec::with_capacity(specs.len());
        let mut token_cache: Vec<Vec<seqtag::corpus::Token>> = Vec::new();
        for doc in &self.test_docs {
            token_cache.push(tokenize_document(doc, self.subword.as_ref())?);
        }
        for spec in &specs {
            let model = load_model(&self.root.join(self.model_rel(&spec.id)))?;
            let mut docs = Vec::with_capacity(self.test_docs.len());
            for (doc, tokens) in self.test_docs.iter().zip(&token_cache) {
                let tags = model.predict_document(tokens)?;
                let bio = match tags.scheme {
                    Scheme::Biose => seqtag::tags::biose_to_bio(&tags),
                    Scheme::Bio => tags,
                };
                docs.push((doc.id.clone(), bio));
            }
            members.push(MemberPrediction {
                spec: spec.clone(),
                dev_f1: self.read_dev_f1(&spec.id)?,
                docs,
            });
        }
        let voted = compose_submission(recipe, &members, TieBreak::Priority)?;

        let out_dir = self.root.join("predictions").join(recipe.name());
        let mut predicted_docs = Vec::with_capacity(voted.len());
        for ((id, tags), (doc, tokens)) in voted.iter().zip(self.test_docs.iter().zip(&token_cache))
        {
            debug_assert_eq!(id, &doc.id);
            let spans = decode(tags, tokens)?;
            predicted_docs.push(Document::new(doc.id.clone(), doc.text.clone(), spans)?);
        }
        write_standoff_dir(&predicted_docs, &out_dir)?;

        let mut recipe_manifest = format!(
            "recipe {}\nvote {}\nmembers {}\n",
            recipe.name(),
            recipe.uses_vote(),
            specs.len()
        );
        for spec in &specs {
            let rel = self.model_rel(&spec.id);
            let hash = manifest
                .recorded_hash(&rel)
                .ok_or_else(|| Error::Integrity(format!("{rel} missing from manifest")))?;
            recipe_manifest.push_str(&format!("member {} {rel} {hash:016x}\n", spec.id));
        }
        std::fs::write(out_dir.join("recipe.manifest"), recipe_manifest)?;

        let mut manifest = Manifest::load(&self.root)?;
        for doc in &predicted_docs {
            for ext in ["txt", "ann"] {
                manifest.record(&self.rel(&[
                    "predictions",
                    recipe.name(),
                    &format!("{}.{ext}", doc.id),
                ]))?;
            }
        }
        manifest.record(&self.rel(&["predictions", recipe.name(), "recipe.manifest"]))?;
        manifest.save()?;
        eprintln!(
            "recipe {}: wrote {} prediction files to {}",
            recipe.name(),
            predicted_docs.len(),
            out_dir.display()
        );
        Ok(())
    }
}
