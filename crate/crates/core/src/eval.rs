//! Entity-level exact-match evaluation: a prediction counts only when its
//! start offset, end offset and label all equal a gold annotation's.
//! Zero-denominator metrics are 0 by convention.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::corpus::{Document, SpanAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-label counts, sorted by label.
    pub per_label: Vec<(String, Counts)>,
}

impl EvalReport {
    fn from_label_counts(per_label: BTreeMap<String, Counts>) -> Self {
        let mut micro = Counts::default();
        for counts in per_label.values() {
            micro.add(counts);
        }
        Self {
            counts: micro,
            precision: micro.precision(),
            recall: micro.recall(),
            f1: micro.f1(),
            per_label: per_label.into_iter().collect(),
        }
    }
}

/// Evaluates predicted documents against gold. Both sides must cover the
/// same document ids; pairing is by id, so ordering does not matter.
pub fn evaluate(gold: &[Document], predicted: &[Document]) -> Result<EvalReport> {
    let gold_ids: BTreeSet<&str> = gold.iter().map(|d| d.id.as_str()).collect();
    let pred_ids: BTreeSet<&str> = predicted.iter().map(|d| d.id.as_str()).collect();
    if gold_ids.len() != gold.len() || pred_ids.len() != predicted.len() {
        return Err(Error::Eval("duplicate document ids".into()));
    }
    if gold_ids != pred_ids {
        let missing: Vec<&&str> = gold_ids.difference(&pred_ids).collect();
        let extra: Vec<&&str> = pred_ids.difference(&gold_ids).collect();
        return Err(Error::Eval(format!(
            "document id mismatch: missing {missing:?}, extra {extra:?}"
        )));
    }
    let by_id: BTreeMap<&str, &Document> = predicted.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut per_label: BTreeMap<String, Counts> = BTreeMap::new();
    for g in gold {
        let p = by_id[g.id.as_str()];
        tally(&g.annotations, &p.annotations, &mut per_label);
    }
    Ok(EvalReport::from_label_counts(per_label))
}

fn tally(
    gold: &[SpanAnnotation],
    pred: &[SpanAnnotation],
    per_label: &mut BTreeMap<String, Counts>,
) {
    let gold_set: HashSet<&SpanAnnotation> = gold.iter().collect();
    let pred_set: HashSet<&SpanAnnotation> = pred.iter().collect();
    for p in pred {
        let slot = per_label.entry(p.label.clone()).or_default();
        if gold_set.contains(p) {
            slot.tp += 1;
        } else {
            slot.fp += 1;
        }
    }
    for g in gold {
        if !pred_set.contains(g) {
            per_label.entry(g.label.clone()).or_default().fn_ += 1;
        }
    }
}

/// Micro-averaged F1 over (gold, predicted) span-set pairs; the in-memory
/// path used for dev-set early stopping.
pub fn micro_f1(pairs: &[(Vec<SpanAnnotation>, Vec<SpanAnnotation>)]) -> f64 {
    let mut counts = Counts::default();
    for (gold, pred) in pairs {
        let gold_set: HashSet<&SpanAnnotation> = gold.iter().collect();
        let pred_set: HashSet<&SpanAnnotation> = pred.iter().collect();
        for p in pred {
            if gold_set.contains(p) {
                counts.tp += 1;
            } else {
                counts.fp += 1;
            }
        }
        counts.fn_ += gold.iter().filter(|g| !pred_set.contains(*g)).count();
    }
    counts.f1()
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// F1 difference against the baseline, in percentage points.
    pub delta_f1: f64,
}

/// Side-by-side system comparison with deltas against a named baseline.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare(reports: &[(String, EvalReport)], baseline: &str) -> Result<Comparison> {
    let base = reports
        .iter()
        .find(|(name, _)| name == baseline)
        .ok_or_else(|| Error::Eval(format!("baseline {baseline:?} not among the reports")))?
        .1
        .f1;
    Ok(Comparison {
        baseline: baseline.to_string(),
        rows: reports
            .iter()
            .map(|(name, r)| ComparisonRow {
                name: name.clone(),
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
                delta_f1: (r.f1 - base) * 100.0,
            })
            .collect(),
    })
}

impl Comparison {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("system\tprecision\trecall\tf1\tdelta_f1\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{:+.1}\n",
                row.name, row.precision, row.recall, row.f1, row.delta_f1
            ));
        }
        out
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(6)
            .max(6);
        writeln!(
            f,
            "{:width$}  {:>9}  {:>7}  {:>6}  {:>6}",
            "system", "Precision", "Recall", "F1", "dF1"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:width$}  {:>9.1}  {:>7.1}  {:>6.1}  {:>+6.1}",
                row.name,
                row.precision * 100.0,
                row.recall * 100.0,
                row.f1 * 100.0,
                row.delta_f1
            )?;
        }
        Ok(())
    }
}
