//! Embedding model file format.
//!
//! Binary layout: magic "SEQE", u32 version, u32 dimension, u32 vocabulary
//! size, variant string, vocabulary block, then the matrix as little-endian
//! 32-bit floats in row-major order. A plain-text export (one word plus its
//! vector per line) is available for inspection and external tools.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingModel;
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SEQE";
const VERSION: u32 = 1;

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f32<W: Write>(w: &mut W, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("invalid UTF-8 in string block".into()))
}

pub(crate) fn write_model_to<W: Write>(w: &mut W, model: &EmbeddingModel) -> Result<()> {
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    write_u32(w, model.dim as u32)?;
    write_u32(w, model.vocab.len() as u32)?;
    write_string(w, &model.variant)?;
    for word in model.vocab.entries() {
        write_string(w, word)?;
    }
    for row in model.vectors() {
        for &v in row {
            write_f32(w, v as f32)?;
        }
    }
    Ok(())
}

pub(crate) fn read_model_from<R: Read>(r: &mut R) -> Result<EmbeddingModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an embedding model file".into()));
    }
    let version = read_u32(r)?;
    if version > VERSION {
        return Err(Error::Version {
            found: version,
            supported: VERSION,
        });
    }
    let dim = read_u32(r)? as usize;
    let vocab_len = read_u32(r)? as usize;
    let variant = read_string(r)?;
    let mut vocab = Alphabet::new();
    for _ in 0..vocab_len {
        vocab.intern(&read_string(r)?);
    }
    if vocab.len() != vocab_len {
        return Err(Error::Format("duplicate words in vocabulary block".into()));
    }
    let mut vectors = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            row.push(read_f32(r)? as f64);
        }
        vectors.push(row);
    }
    EmbeddingModel::new(vocab, vectors, variant)
}

pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_model_to(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let model = read_model_from(&mut r)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing data after embedding matrix".into()));
    }
    Ok(model)
}

/// Plain-text export: `word v1 v2 ... vd` per line.
pub fn export_text<W: Write>(model: &EmbeddingModel, w: &mut W) -> Result<()> {
    for (word, row) in model.vocab.entries().iter().zip(model.vectors()) {
        write!(w, "{word}")?;
        for &v in row {
            write!(w, " {}", v as f32)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EmbeddingModel {
        EmbeddingModel::new(
            Alphabet::from_entries(["uno", "dos", "ñu"]),
            vec![vec![0.5, -1.25], vec![3.0, 0.0], vec![-0.75, 2.5]],
            "base",
        )
        .unwrap()
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        let m = model();
        save_model(&m, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        // All test values are f32-representable, so the roundtrip is exact.
        assert_eq!(loaded, m);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.emb");
        std::fs::write(&path, b"NOPE....").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));
    }

    #[test]
    fn newer_version_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.emb");
        let mut bytes = Vec::new();
        write_model_to(&mut bytes, &model()).unwrap();
        bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::Version { found: 99, .. })
        ));
    }

    #[test]
    fn text_export_lists_every_word() {
        let mut out = Vec::new();
        export_text(&model(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("uno 0.5 -1.25\n"));
    }
}
