//! Strategic datasplits: document vectors, PCA reduction and equally-sized
//! k-means clustering, plus a seeded random baseline. Plans drive
//! cross-validation training and are serialized for reproducibility.

mod kmeans;
mod pca;

pub use kmeans::{balanced_kmeans, BalancedKmeans};
pub use pca::{pca, Pca};

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::embeddings::{doc_vector, EmbeddingModel};
use crate::error::{Error, Result};
use crate::pipeline::token_surfaces;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Strategic,
    Random,
}

impl SplitMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "strategic" => Ok(Self::Strategic),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!("unknown split mode {other:?}"))),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitMode::Strategic => write!(f, "strategic"),
            SplitMode::Random => write!(f, "random"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitConfig {
    pub k: usize,
    pub pca_dims: usize,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            k: 5,
            pca_dims: 5,
            seed: 42,
            mode: SplitMode::Strategic,
        }
    }
}

/// Assignment of every training document to exactly one of k clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub config: SplitConfig,
    /// Embedding variant the document vectors came from; empty in random mode.
    pub variant: String,
    /// (document id, cluster), sorted by id.
    assignment: Vec<(String, usize)>,
    /// Cluster centroids in PCA space; strategic mode only.
    pub centroids: Option<Vec<Vec<f64>>>,
}

impl SplitPlan {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn assignment(&self) -> &[(String, usize)] {
        &self.assignment
    }

    pub fn cluster_of(&self, id: &str) -> Option<usize> {
        self.assignment
            .binary_search_by(|(doc, _)| doc.as_str().cmp(id))
            .ok()
            .map(|i| self.assignment[i].1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.config.k];
        for &(_, c) in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Text form: a `#key=value` header followed by `id<TAB>cluster` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#k={}\n", self.config.k));
        out.push_str(&format!("#pca_dims={}\n", self.config.pca_dims));
        out.push_str(&format!("#seed={}\n", self.config.seed));
        out.push_str(&format!("#mode={}\n", self.config.mode));
        out.push_str(&format!("#variant={}\n", self.variant));
        for (id, cluster) in &self.assignment {
            out.push_str(&format!("{id}\t{cluster}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = SplitConfig::default();
        let mut variant = String::new();
        let mut assignment: Vec<(String, usize)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let Some((key, value)) = header.split_once('=') else {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected #key=value, got {line:?}"),
                    });
                };
                let bad = |_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid value for {key}: {value:?}"),
                };
                match key {
                    "k" => config.k = value.parse().map_err(bad)?,
                    "pca_dims" => config.pca_dims = value.parse().map_err(bad)?,
                    "seed" => config.seed = value.parse().map_err(bad)?,
                    "mode" => config.mode = SplitMode::parse(value)?,
                    "variant" => variant = value.to_string(),
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unknown header key {other:?}"),
                        })
                    }
                }
                continue;
            }
            let Some((id, cluster)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected id<TAB>cluster".into(),
                });
            };
            let cluster: usize = cluster.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid cluster index {cluster:?}"),
            })?;
            if cluster >= config.k {
                return Err(Error::Range(format!(
                    "cluster {cluster} out of range for k={}",
                    config.k
                )));
            }
            assignment.push((id.to_string(), cluster));
        }
        assignment.sort();
        let plan = Self {
            config,
            variant,
            assignment,
            centroids: None,
        };
        plan.check_balance()?;
        Ok(plan)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    fn check_balance(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.assignment.iter().map(|(id, _)| id.as_str()).collect();
        if ids.len() != self.assignment.len() {
            return Err(Error::Integrity("duplicate document ids in plan".into()));
        }
        let sizes = self.sizes();
        let max = sizes.iter().max().copied().unwrap_or(0);
        let min = sizes.iter().min().copied().unwrap_or(0);
        if max - min > 1 {
            return Err(Error::Integrity(format!(
                "cluster sizes are not balanced: {sizes:?}"
            )));
        }
        Ok(())
    }
}

/// A built plan plus the PCA-space coordinates behind it (strategic mode).
#[derive(Debug, Clone)]
pub struct PlanBuild {
    pub plan: SplitPlan,
    /// (document id, PCA coordinates), plan order; empty in random mode.
    pub projected: Vec<(String, Vec<f64>)>,
}

/// Builds a datasplit plan. Documents are ordered canonically by id first,
/// so the plan is invariant to input order. Strategic mode runs document
/// vectors, PCA and balanced k-means; random mode shuffles by seed.
pub fn make_plan(
    documents: &[Document],
    model: Option<&EmbeddingModel>,
    config: &SplitConfig,
) -> Result<PlanBuild> {
    if config.k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    if documents.len() < config.k {
        return Err(Error::Config(format!(
            "{} documents cannot fill k={} clusters",
            documents.len(),
            config.k
        )));
    }
    let mut ids: Vec<&Document> = documents.iter().collect();
    ids.sort_by(|a, b| a.id.cmp(&b.id));
    let unique: BTreeSet<&str> = ids.iter().map(|d| d.id.as_str()).collect();
    if unique.len() != ids.len() {
        return Err(Error::Integrity("duplicate document ids".into()));
    }
    if ids.iter().any(|d| d.id.is_empty()) {
        return Err(Error::Integrity(
            "documents must carry non-empty ids".into(),
        ));
    }

    match config.mode {
        SplitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut order: Vec<usize> = (0..ids.len()).collect();
            order.shuffle(&mut rng);
            let mut assignment: Vec<(String, usize)> = order
                .iter()
                .enumerate()
                .map(|(pos, &doc)| (ids[doc].id.clone(), pos % config.k))
                .collect();
            assignment.sort();
            let plan = SplitPlan {
                config: config.clone(),
                variant: String::new(),
                assignment,
                centroids: None,
            };
            plan.check_balance()?;
            Ok(PlanBuild {
                plan,
                projected: Vec::new(),
            })
        }
        SplitMode::Strategic => {
            let model = model.ok_or_else(|| {
                Error::Config("strategic mode requires an embedding model".into())
            })?;
            let vectors: Vec<Vec<f64>> = ids
                .iter()
                .map(|doc| Ok(doc_vector(&token_surfaces(doc)?, model)))
                .collect::<Result<_>>()?;
            let reduced = pca(&vectors, config.pca_dims)?;
            let clustered = balanced_kmeans(&reduced.projected, config.k, config.seed)?;
            let assignment: Vec<(String, usize)> = ids
                .iter()
                .zip(&clustered.assignment)
                .map(|(doc, &c)| (doc.id.clone(), c))
                .collect();
            let projected: Vec<(String, Vec<f64>)> = ids
                .iter()
                .zip(&reduced.projected)
                .map(|(doc, p)| (doc.id.clone(), p.clone()))
                .collect();
            let plan = SplitPlan {
                config: config.clone(),
                variant: model.variant.clone(),
                assignment,
                centroids: Some(clustered.centroids),
            };
            plan.check_balance()?;
            Ok(PlanBuild { plan, projected })
        }
    }
}

/// Tab-separated table of the first two PCA coordinates per document with
/// its cluster; the data behind a 2D scatter of the splits.
pub fn export_plan_2d(plan: &SplitPlan, projected: &[(String, Vec<f64>)]) -> Result<String> {
    let mut out = String::from("doc_id\tx\ty\tcluster\n");
    for (id, coords) in projected {
        if coords.len() < 2 {
            return Err(Error::Config(
                "2D export needs at least two PCA dimensions".into(),
            ));
        }
        let cluster = plan
            .cluster_of(id)
            .ok_or_else(|| Error::Integrity(format!("document {id:?} missing from plan")))?;
        out.push_str(&format!(
            "{id}\t{:.6}\t{:.6}\t{cluster}\n",
            coords[0], coords[1]
        ));
    }
    Ok(out)
}
