//! Shared helpers for the CLI test suites: synthetic workspaces on disk
//! and binary invocation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seqtag::corpus::{write_standoff_dir, Document};
use seqtag::synth::{generate, SynthConfig};

pub fn seqtag_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_seqtag"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(seqtag_bin())
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "seqtag {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Builds a recipe workspace under `root`. Returns the gold test documents
/// (the on-disk `test/` directory carries only the raw text).
pub fn build_workspace(
    root: &Path,
    n_train: usize,
    n_test: usize,
    seed: u64,
    conf: &str,
) -> Vec<Document> {
    let corpus = generate(&SynthConfig {
        n_docs: n_train + n_test,
        seed,
        ..Default::default()
    });
    let train_main = &corpus.main[..n_train];
    let train_aux = &corpus.aux[..n_train];
    let test_gold = corpus.main[n_train..].to_vec();

    write_standoff_dir(train_main, &root.join("train")).unwrap();
    write_standoff_dir(train_aux, &root.join("aux")).unwrap();
    std::fs::create_dir_all(root.join("test")).unwrap();
    for doc in &test_gold {
        std::fs::write(root.join("test").join(format!("{}.txt", doc.id)), &doc.text).unwrap();
    }

    std::fs::create_dir_all(root.join("pretrain")).unwrap();
    for (name, pretrain_seed, rate) in [
        ("base.txt", seed + 101, 0.05),
        ("general.txt", seed + 202, 0.15),
        ("domain.txt", seed + 303, 0.3),
    ] {
        let text_corpus = generate(&SynthConfig {
            n_docs: 30,
            seed: pretrain_seed,
            entity_rate: rate,
            ..Default::default()
        });
        let joined: Vec<String> = text_corpus.main.iter().map(|d| d.text.clone()).collect();
        std::fs::write(root.join("pretrain").join(name), joined.join("\n\n")).unwrap();
    }

    std::fs::write(root.join("train.conf"), conf).unwrap();
    std::fs::write(root.join("label_map.tsv"), "MENT\tPROF\n").unwrap();
    test_gold
}

/// Reads `predictions/<recipe>/recipe.manifest` and returns the member
/// lines plus whether the recipe voted.
#[allow(dead_code)] // not every test binary exercises recipes
pub fn read_recipe_manifest(root: &Path, recipe: &str) -> (bool, Vec<String>) {
    let text = std::fs::read_to_string(
        root.join("predictions")
            .join(recipe)
            .join("recipe.manifest"),
    )
    .expect("recipe manifest exists");
    let mut vote = false;
    let mut members = Vec::new();
    for line in text.lines() {
        if let Some(value) = line.strip_prefix("vote ") {
            vote = value == "true";
        }
        if let Some(member) = line.strip_prefix("member ") {
            members.push(member.split(' ').next().unwrap().to_string());
        }
    }
    (vote, members)
}
