//! Deterministic synthetic corpora for benchmarks and end-to-end tests.
//!
//! Documents are built from a filler word pool plus two dictionaries of
//! entity phrases; every dictionary word appears in exactly one phrase
//! position, so the tagging task is fully determined by token surfaces and
//! a capable tagger can saturate it. The auxiliary layer carries the same
//! spans under one coarse label, giving a paired task for transfer
//! experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, SpanAnnotation};

pub const MAIN_LABELS: [&str; 2] = ["PROF", "SITE"];
pub const AUX_LABEL: &str = "MENT";

const PROF_PHRASES: &[&[&str]] = &[
    &["cocinero"],
    &["enfermera"],
    &["medico", "interno"],
    &["jefe", "cocina"],
    &["auxiliar", "administrativo"],
    &["camarero"],
    &["profesor", "titular"],
    &["albanil"],
    &["soldador", "industrial"],
    &["panadero"],
];

const SITE_PHRASES: &[&[&str]] = &[
    &["hospital"],
    &["clinica", "privada"],
    &["farmacia"],
    &["quirofano"],
    &["laboratorio"],
    &["consulta", "externa"],
    &["planta", "tercera"],
    &["taller"],
    &["fabrica", "textil"],
    &["oficina"],
];

const FILLERS: &[&str] = &[
    "el",
    "paciente",
    "trabaja",
    "desde",
    "hace",
    "anos",
    "refiere",
    "dolor",
    "tras",
    "turno",
    "noche",
    "actualmente",
    "sin",
    "antecedentes",
    "acude",
    "por",
    "molestias",
    "y",
    "durante",
    "manana",
    "revision",
    "tratamiento",
    "pauta",
    "mejoria",
    "leve",
    "persiste",
    "cuadro",
    "control",
    "acompanado",
    "familiar",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub seed: u64,
    /// Probability that a sentence slot becomes an entity phrase.
    pub entity_rate: f64,
    pub sentences_per_doc: (usize, usize),
    pub slots_per_sentence: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 200,
            seed: 42,
            entity_rate: 0.25,
            sentences_per_doc: (3, 6),
            slots_per_sentence: (5, 12),
        }
    }
}

/// A paired synthetic corpus: the same documents with the fine-grained
/// two-label annotation layer and the coarse single-label layer.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub main: Vec<Document>,
    pub aux: Vec<Document>,
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut main = Vec::with_capacity(config.n_docs);
    let mut aux = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let id = format!("doc{i:04}");
        let (text, spans) = generate_document(config, &mut rng);
        let aux_spans = spans
            .iter()
            .map(|s| SpanAnnotation {
                start: s.start,
                end: s.end,
                label: AUX_LABEL.to_string(),
            })
            .collect();
        main.push(
            Document::new(id.clone(), text.clone(), spans).expect("generated spans are valid"),
        );
        aux.push(Document::new(id, text, aux_spans).expect("generated spans are valid"));
    }
    SynthCorpus { main, aux }
}

fn generate_document(config: &SynthConfig, rng: &mut ChaCha8Rng) -> (String, Vec<SpanAnnotation>) {
    let mut text = String::new();
    let mut spans: Vec<SpanAnnotation> = Vec::new();
    let n_sentences = rng.random_range(config.sentences_per_doc.0..=config.sentences_per_doc.1);
    for s in 0..n_sentences {
        if s > 0 {
            // Blank lines separate sentences so segmentation is exercised.
            text.push_str("\n\n");
        }
        let slots = rng.random_range(config.slots_per_sentence.0..=config.slots_per_sentence.1);
        let mut first = true;
        for _ in 0..slots {
            if !first {
                text.push(' ');
            }
            first = false;
            if rng.random_range(0.0..1.0) < config.entity_rate {
                let (label, phrase) = if rng.random_range(0..2) == 0 {
                    (
                        "PROF",
                        PROF_PHRASES[rng.random_range(0..PROF_PHRASES.len())],
                    )
                } else {
                    (
                        "SITE",
                        SITE_PHRASES[rng.random_range(0..SITE_PHRASES.len())],
                    )
                };
                let start = text.chars().count();
                text.push_str(&phrase.join(" "));
                let end = text.chars().count();
                spans.push(SpanAnnotation {
                    start,
                    end,
                    label: label.to_string(),
                });
            } else {
                text.push_str(FILLERS[rng.random_range(0..FILLERS.len())]);
            }
        }
        text.push_str(" .");
    }
    (text, spans)
}
