//! Tagger model file format.
//!
//! Versioned binary: magic "SEQC", u32 version, scheme and flags, window
//! settings, label and feature alphabets, little-endian 64-bit float weight
//! blocks, then the optional embedding attachment (embedding model plus its
//! quantization sigmas) and the optional subword vocabulary. Loading a file
//! written by a newer version fails cleanly.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CrfModel, EmbeddingAttachment, FeatureConfig, MODEL_VERSION};
use crate::alphabet::Alphabet;
use crate::corpus::SubwordVocab;
use crate::embeddings::io::{
    read_f64, read_model_from, read_string, read_u32, write_f64, write_model_to, write_string,
    write_u32,
};
use crate::error::{Error, Result};
use crate::tags::Scheme;

const MAGIC: &[u8; 4] = b"SEQC";

pub fn save_model(model: &CrfModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    write_u32(&mut w, MODEL_VERSION)?;
    w.write_all(&[
        match model.scheme {
            Scheme::Bio => 0u8,
            Scheme::Biose => 1u8,
        },
        model.constrained as u8,
    ])?;
    write_u32(&mut w, model.max_core as u32)?;
    write_u32(&mut w, model.max_context as u32)?;
    write_alphabet(&mut w, &model.labels)?;
    write_alphabet(&mut w, &model.features)?;
    for &x in &model.w {
        write_f64(&mut w, x)?;
    }
    for &x in &model.t {
        write_f64(&mut w, x)?;
    }
    match &model.feature_config.embedding {
        None => w.write_all(&[0u8])?,
        Some(att) => {
            w.write_all(&[1u8])?;
            write_model_to(&mut w, att.model())?;
            for &s in att.sigma() {
                write_f64(&mut w, s)?;
            }
        }
    }
    match &model.subword {
        None => w.write_all(&[0u8])?,
        Some(vocab) => {
            w.write_all(&[1u8])?;
            write_u32(&mut w, vocab.pieces().len() as u32)?;
            for piece in vocab.pieces() {
                write_string(&mut w, piece)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CrfModel> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a tagger model file".into()));
    }
    let version = read_u32(&mut r)?;
    if version > MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let mut flags = [0u8; 2];
    r.read_exact(&mut flags)?;
    let scheme = match flags[0] {
        0 => Scheme::Bio,
        1 => Scheme::Biose,
        other => return Err(Error::Format(format!("unknown scheme byte {other}"))),
    };
    let constrained = flags[1] != 0;
    let max_core = read_u32(&mut r)? as usize;
    let max_context = read_u32(&mut r)? as usize;
    let labels = read_alphabet(&mut r)?;
    let features = read_alphabet(&mut r)?;
    let n_labels = labels.len();
    let mut w = Vec::with_capacity(features.len() * n_labels);
    for _ in 0..features.len() * n_labels {
        w.push(read_f64(&mut r)?);
    }
    let mut t = Vec::with_capacity((n_labels + 2) * (n_labels + 2));
    for _ in 0..(n_labels + 2) * (n_labels + 2) {
        t.push(read_f64(&mut r)?);
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let feature_config = if byte[0] == 0 {
        FeatureConfig::plain()
    } else {
        let embedding = read_model_from(&mut r)?;
        let mut sigma = Vec::with_capacity(embedding.dim);
        for _ in 0..embedding.dim {
            sigma.push(read_f64(&mut r)?);
        }
        FeatureConfig {
            embedding: Some(EmbeddingAttachment::from_parts(embedding, sigma)),
        }
    };
    r.read_exact(&mut byte)?;
    let subword = if byte[0] == 0 {
        None
    } else {
        let count = read_u32(&mut r)? as usize;
        let mut pieces = Vec::with_capacity(count);
        for _ in 0..count {
            pieces.push(read_string(&mut r)?);
        }
        Some(SubwordVocab::new(pieces))
    };
    if r.read(&mut byte)? != 0 {
        return Err(Error::Format("trailing data after model".into()));
    }
    // from_parts re-checks label shapes, sizes and finiteness, so corrupt
    // files fail with an error instead of tripping invariants later.
    CrfModel::from_parts(
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
    )
}

fn write_alphabet<W: Write>(w: &mut W, alphabet: &Alphabet) -> Result<()> {
    write_u32(w, alphabet.len() as u32)?;
    for entry in alphabet.entries() {
        write_string(w, entry)?;
    }
    Ok(())
}

fn read_alphabet<R: Read>(r: &mut R) -> Result<Alphabet> {
    let count = read_u32(r)? as usize;
    let mut alphabet = Alphabet::new();
    for _ in 0..count {
        alphabet.intern(&read_string(r)?);
    }
    if alphabet.len() != count {
        return Err(Error::Format("duplicate alphabet entries".into()));
    }
    Ok(alphabet)
}
