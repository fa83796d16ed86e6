//! Command-line pipeline: embedding training, datasplit planning, tagger
//! training, prediction, ensembling, submission recipes and evaluation.

mod config;
mod manifest;
mod workspace;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use seqtag::corpus::{read_standoff_dir, write_standoff_dir, Document, SubwordVocab};
use seqtag::crf::{load_model, save_model, FeatureConfig, LabeledDoc, Trainer};
use seqtag::embeddings::{count_cooccurrences, factorize, merge_counts, ppmi};
use seqtag::ensemble::{vote, EnsembleConfig, Recipe, TieBreak};
use seqtag::error::{Error, Result};
use seqtag::pipeline::{predict_document, prepare_corpus, sentence_surfaces, tokenize_document};
use seqtag::splits::{export_plan_2d, make_plan, SplitConfig, SplitMode};
use seqtag::tags::{biose_to_bio, decode, Scheme};
use seqtag::transfer::{transfer_init, LabelMap};

use config::FlatConfig;
use workspace::Workspace;

#[derive(Parser)]
#[command(
    name = "seqtag",
    version,
    about = "Low-resource sequence labeling: CRF tagging, strategic datasplits and ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train count-based embeddings from a directory of raw text files
    EmbedTrain(EmbedTrainArgs),
    /// Build a datasplit plan over a training corpus
    Split(SplitArgs),
    /// Train a tagger model
    Train(TrainArgs),
    /// Annotate documents with a trained model
    Predict(PredictArgs),
    /// Combine several models by hard majority voting
    Ensemble(EnsembleArgs),
    /// Run an end-to-end submission recipe inside a workspace
    Recipe(RecipeArgs),
    /// Entity-level exact-match evaluation
    Eval(EvalArgs),
}

#[derive(Args)]
struct EmbedTrainArgs {
    /// Directory of .txt files to count
    #[arg(long)]
    corpus: PathBuf,
    /// Co-occurrence window
    #[arg(long, default_value_t = seqtag::embeddings::DEFAULT_WINDOW)]
    window: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = seqtag::embeddings::DEFAULT_DIM)]
    dim: usize,
    /// PPMI shift
    #[arg(long, default_value_t = seqtag::embeddings::DEFAULT_SHIFT)]
    shift: f64,
    /// Adaptation corpus directory; its counts are interpolated in
    #[arg(long)]
    merge: Option<PathBuf>,
    /// Interpolation weight of the adaptation corpus
    #[arg(long, default_value_t = seqtag::embeddings::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Variant tag stored in the model
    #[arg(long, default_value = "base")]
    variant: String,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// Also write a plain-text export next to the model
    #[arg(long)]
    text_export: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Training corpus directory (standoff pairs)
    #[arg(long)]
    train: PathBuf,
    /// Embedding model file (strategic mode)
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    pca_dims: usize,
    /// strategic or random
    #[arg(long, default_value = "strategic")]
    mode: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output plan file
    #[arg(long)]
    out: PathBuf,
    /// Optional TSV with 2D PCA coordinates per document
    #[arg(long)]
    export_2d: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training corpus directory (standoff pairs)
    #[arg(long)]
    train: PathBuf,
    /// Tag scheme: biose or bio
    #[arg(long, default_value = "biose")]
    scheme: String,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Datasplit plan; requires --dev-cluster
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Cluster held out as the dev set
    #[arg(long)]
    dev_cluster: Option<usize>,
    /// Warm-start from an auxiliary-task model
    #[arg(long)]
    init_from: Option<PathBuf>,
    /// aux<TAB>main label map used with --init-from
    #[arg(long)]
    label_map: Option<PathBuf>,
    /// Attach quantized embedding features from this model
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Subword vocabulary file (one piece per line)
    #[arg(long)]
    subword_vocab: Option<PathBuf>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// Training log file (defaults to stderr)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory of .txt documents
    #[arg(long)]
    input: PathBuf,
    /// Output directory for standoff pairs
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Comma-separated member model files, in priority order
    #[arg(long, value_delimiter = ',', conflicts_with = "members_file")]
    members: Vec<PathBuf>,
    /// Text file naming the member models: one path per line in priority
    /// order, optional `tie_break=...` header
    #[arg(long)]
    members_file: Option<PathBuf>,
    /// priority or prefer-o (overrides the members file)
    #[arg(long)]
    tie_break: Option<String>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecipeArgs {
    /// s1, s2, s3_clean, s3_submitted, s4 or s5
    #[arg(long)]
    name: String,
    /// Workspace root (falls back to SEQTAG_WORKSPACE)
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// Seed override for the whole recipe
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel member trainings
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Also print per-label metrics
    #[arg(long)]
    per_label: bool,
    /// Write the report as TSV
    #[arg(long)]
    tsv: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error class={}: {e}", e.class());
        std::process::exit(exit_code(e.class()));
    }
}

fn exit_code(class: &str) -> i32 {
    match class {
        "io" => 3,
        "config" => 4,
        "parse" | "format" => 5,
        "integrity" | "range" | "encode" | "decode" | "scheme" => 6,
        "version" => 7,
        "train" | "eval" => 8,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EmbedTrain(args) => embed_train(args),
        Command::Split(args) => split(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Ensemble(args) => ensemble(args),
        Command::Recipe(args) => recipe(args),
        Command::Eval(args) => eval(args),
    }
}

fn read_text_corpus(dir: &Path) -> Result<Vec<Vec<String>>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Integrity(format!(
            "no .txt files in {}",
            dir.display()
        )));
    }
    let mut sequences = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file)?;
        let doc = Document::new("corpus", text, vec![])?;
        sequences.extend(sentence_surfaces(&doc)?);
    }
    Ok(sequences)
}

fn embed_train(args: EmbedTrainArgs) -> Result<()> {
    let base = count_cooccurrences(read_text_corpus(&args.corpus)?, args.window)?;
    let counts = match &args.merge {
        None => base,
        Some(dir) => {
            let domain = count_cooccurrences(read_text_corpus(dir)?, args.window)?;
            merge_counts(&base, &domain, args.lambda)?
        }
    };
    let matrix = ppmi(&counts, args.shift)?;
    let factor = factorize(&matrix, args.dim, &args.variant)?;
    seqtag::embeddings::save_model(&factor.model, &args.out)?;
    if let Some(path) = &args.text_export {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        seqtag::embeddings::export_text(&factor.model, &mut file)?;
    }
    eprintln!(
        "embeddings: {} words, dimension {}, variant {}",
        factor.model.vocab.len(),
        factor.model.dim,
        factor.model.variant
    );
    Ok(())
}

fn split(args: SplitArgs) -> Result<()> {
    let mode = SplitMode::parse(&args.mode)?;
    let docs = read_standoff_dir(&args.train)?;
    let embedding = match (&args.embeddings, mode) {
        (Some(path), _) => Some(seqtag::embeddings::load_model(path)?),
        (None, SplitMode::Strategic) => {
            return Err(Error::Config("strategic mode requires --embeddings".into()))
        }
        (None, SplitMode::Random) => None,
    };
    let config = SplitConfig {
        k: args.k,
        pca_dims: args.pca_dims,
        seed: args.seed,
        mode,
    };
    let build = make_plan(&docs, embedding.as_ref(), &config)?;
    build.plan.save(&args.out)?;
    if let Some(path) = &args.export_2d {
        std::fs::write(path, export_plan_2d(&build.plan, &build.projected)?)?;
    }
    eprintln!(
        "plan: {} documents into k={} clusters, sizes {:?}",
        build.plan.assignment().len(),
        build.plan.k(),
        build.plan.sizes()
    );
    Ok(())
}

fn load_labeled(
    dir: &Path,
    vocab: Option<&SubwordVocab>,
    scheme: Scheme,
) -> Result<Vec<LabeledDoc>> {
    let docs = read_standoff_dir(dir)?;
    let (labeled, adjusted) = prepare_corpus(&docs, vocab, scheme)?;
    if adjusted > 0 {
        eprintln!("note: {adjusted} annotations snapped to token boundaries");
    }
    Ok(labeled)
}

fn train(args: TrainArgs) -> Result<()> {
    let scheme = Scheme::parse(&args.scheme)?;
    let flat = match &args.config {
        Some(path) => FlatConfig::load(path)?,
        None => FlatConfig::default(),
    };
    let mut train_config = flat.train_config()?;
    if let Some(seed) = args.seed {
        train_config.seed = seed;
    }
    let subword = match &args.subword_vocab {
        Some(path) => Some(SubwordVocab::from_lines(&std::fs::read_to_string(path)?)),
        None => None,
    };
    let feature_config = match &args.embeddings {
        Some(path) => FeatureConfig::with_embeddings(seqtag::embeddings::load_model(path)?),
        None => FeatureConfig::plain(),
    };
    let labeled = load_labeled(&args.train, subword.as_ref(), scheme)?;

    let (train_docs, dev_docs): (Vec<LabeledDoc>, Option<Vec<LabeledDoc>>) =
        match (&args.plan, args.dev_cluster) {
            (Some(plan_path), Some(cluster)) => {
                let plan = seqtag::splits::SplitPlan::load(plan_path)?;
                if cluster >= plan.k() {
                    return Err(Error::Config(format!(
                        "dev cluster {cluster} out of range for k={}",
                        plan.k()
                    )));
                }
                let (dev, train): (Vec<LabeledDoc>, Vec<LabeledDoc>) = labeled
                    .into_iter()
                    .partition(|d| plan.cluster_of(&d.id) == Some(cluster));
                (train, Some(dev))
            }
            (None, None) => (labeled, None),
            _ => {
                return Err(Error::Config(
                    "--plan and --dev-cluster must be used together".into(),
                ))
            }
        };

    let trainer = Trainer {
        feature_config,
        max_core: flat.usize_or("max_core", seqtag::corpus::DEFAULT_MAX_CORE)?,
        max_context: flat.usize_or("max_context", seqtag::corpus::DEFAULT_MAX_CONTEXT)?,
        constrained: flat.bool_or("constrained", true)?,
        subword,
        config: train_config,
    };
    let outcome = match &args.init_from {
        None => trainer.fit(&train_docs, dev_docs.as_deref())?,
        Some(path) => {
            let aux = load_model(path)?;
            let map = match &args.label_map {
                Some(map_path) => LabelMap::from_text(&std::fs::read_to_string(map_path)?)?,
                None => LabelMap::empty(),
            };
            let mut labels: Vec<String> = Vec::new();
            for doc in &train_docs {
                for tag in &doc.tags.tags {
                    if let Some((_, label)) = tag.split_once('-') {
                        if !labels.iter().any(|l| l == label) {
                            labels.push(label.to_string());
                        }
                    }
                }
            }
            labels.sort();
            let init = transfer_init(&aux, &labels, &map)?;
            trainer.fit_from(init, &train_docs, dev_docs.as_deref())?
        }
    };
    save_model(&outcome.model, &args.out)?;
    let log = outcome.report.log_lines();
    match &args.log {
        Some(path) => std::fs::write(path, log)?,
        None => eprint!("{log}"),
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let docs = read_standoff_dir(&args.input)?;
    let mut out_docs = Vec::with_capacity(docs.len());
    let mut repaired = 0usize;
    let mut tokens_total = 0usize;
    for doc in &docs {
        let (predicted, fixed) = predict_document(&model, doc)?;
        repaired += fixed;
        tokens_total += tokenize_document(doc, model.subword_vocab())?.len();
        out_docs.push(predicted);
    }
    write_standoff_dir(&out_docs, &args.out)?;
    let fraction = if tokens_total == 0 {
        0.0
    } else {
        100.0 * repaired as f64 / tokens_total as f64
    };
    eprintln!(
        "predicted {} documents; repaired {repaired} of {tokens_total} tags ({fraction:.2}%)",
        out_docs.len()
    );
    Ok(())
}

/// Member file: optional `tie_break=...` line, then one model path per
/// line in priority order. Blank lines and `#` comments are ignored.
fn parse_members_file(path: &Path) -> Result<(Vec<PathBuf>, Option<TieBreak>)> {
    let mut members = Vec::new();
    let mut tie_break = None;
    for line in std::fs::read_to_string(path)?.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(value) = line.strip_prefix("tie_break=") {
            tie_break = Some(TieBreak::parse(value)?);
        } else {
            members.push(PathBuf::from(line));
        }
    }
    Ok((members, tie_break))
}

fn ensemble(args: EnsembleArgs) -> Result<()> {
    let (members, file_tie_break) = match &args.members_file {
        Some(path) => parse_members_file(path)?,
        None => (args.members.clone(), None),
    };
    if members.is_empty() {
        return Err(Error::Config(
            "pass member models via --members or --members-file".into(),
        ));
    }
    let tie_break = match &args.tie_break {
        Some(raw) => TieBreak::parse(raw)?,
        None => file_tie_break.unwrap_or(TieBreak::Priority),
    };
    let models: Vec<_> = members
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<_>>()?;
    let member_ids: Vec<String> = members.iter().map(|p| p.display().to_string()).collect();
    let config = EnsembleConfig::new(member_ids, tie_break)?;
    let docs = read_standoff_dir(&args.input)?;
    let mut out_docs = Vec::with_capacity(docs.len());
    let mut repaired_total = 0usize;
    for doc in &docs {
        // The first member's tokenizer drives; all models see one stream.
        let tokens = tokenize_document(doc, models[0].subword_vocab())?;
        let predictions: Vec<_> = models
            .iter()
            .map(|m| m.predict_document(&tokens).map(|t| biose_to_bio(&t)))
            .collect::<Result<_>>()?;
        let (voted, repaired) = vote(&predictions, &config)?;
        repaired_total += repaired;
        let spans = decode(&voted, &tokens)?;
        out_docs.push(Document::new(doc.id.clone(), doc.text.clone(), spans)?);
    }
    write_standoff_dir(&out_docs, &args.out)?;
    eprintln!(
        "ensemble of {}: {} documents, {repaired_total} repaired positions",
        models.len(),
        out_docs.len()
    );
    Ok(())
}

fn recipe(args: RecipeArgs) -> Result<()> {
    let recipe = Recipe::parse(&args.name)?;
    let root = match args.workspace {
        Some(path) => path,
        None => std::env::var("SEQTAG_WORKSPACE")
            .map(PathBuf::from)
            .map_err(|_| Error::Config("pass --workspace or set SEQTAG_WORKSPACE".into()))?,
    };
    let workspace = Workspace::open(&root, args.seed)?;
    workspace.run_recipe(recipe, args.jobs.max(1))
}

fn eval(args: EvalArgs) -> Result<()> {
    let gold = read_standoff_dir(&args.gold)?;
    let pred = read_standoff_dir(&args.pred)?;
    let report = seqtag::eval::evaluate(&gold, &pred)?;
    println!(
        "tp {} fp {} fn {}",
        report.counts.tp, report.counts.fp, report.counts.fn_
    );
    println!("precision {:.3}", report.precision);
    println!("recall {:.3}", report.recall);
    println!("F1 {:.3}", report.f1);
    if args.per_label {
        for (label, counts) in &report.per_label {
            println!(
                "label {label}: tp {} fp {} fn {} precision {:.3} recall {:.3} F1 {:.3}",
                counts.tp,
                counts.fp,
                counts.fn_,
                counts.precision(),
                counts.recall(),
                counts.f1()
            );
        }
    }
    if let Some(path) = &args.tsv {
        let mut out = String::from("label\ttp\tfp\tfn\tprecision\trecall\tf1\n");
        out.push_str(&format!(
            "ALL\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\n",
            report.counts.tp,
            report.counts.fp,
            report.counts.fn_,
            report.precision,
            report.recall,
            report.f1
        ));
        for (label, counts) in &report.per_label {
            out.push_str(&format!(
                "{label}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\n",
                counts.tp,
                counts.fp,
                counts.fn_,
                counts.precision(),
                counts.recall(),
                counts.f1()
            ));
        }
        std::fs::write(path, out)?;
    }
    Ok(())
}
