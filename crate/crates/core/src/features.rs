//! Tokenization and the fact feature vector: mean word embedding of the
//! provenance sentences followed by one 0/1 flag per relevance criterion.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::relevance::{RelevanceFlags, RelevantSentence};

/// Number of binary relevance features appended to the embedding.
pub const NUM_FLAGS: usize = RelevanceFlags::COUNT;

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// Lowercases, splits on whitespace and strips leading/trailing punctuation.
/// Interior punctuation is kept ("u.s.-based").
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(is_edge_punct).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    embedding_dim: usize,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, embedding_dim: usize) -> Result<Self> {
        if values.len() != embedding_dim + NUM_FLAGS {
            return Err(Error::Dimension(format!(
                "feature vector of length {} for e={embedding_dim}, n={NUM_FLAGS}",
                values.len()
            )));
        }
        if values[embedding_dim..].iter().any(|&f| f != 0.0 && f != 1.0) {
            return Err(Error::Invalid("flag components must be 0 or 1".into()));
        }
        Ok(FeatureVector { values, embedding_dim })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn embedding(&self) -> &[f64] {
        &self.values[..self.embedding_dim]
    }

    pub fn flags(&self) -> &[f64] {
        &self.values[self.embedding_dim..]
    }
}

/// Mean embedding over the pooled token stream of all sentences, followed by
/// the OR of each relevance flag. OOV tokens count in the denominator.
pub fn build_features(sentences: &[RelevantSentence], emb: &EmbeddingTable) -> Result<FeatureVector> {
    if sentences.is_empty() {
        return Err(Error::Invalid("cannot build features from zero sentences".into()));
    }
    let e = emb.dimension();
    let mut values = vec![0.0; e + NUM_FLAGS];
    let mut count = 0usize;
    let mut flags = RelevanceFlags::default();
    for sentence in sentences {
        for token in tokenize(&sentence.text) {
            if let Some(v) = emb.get(&token) {
                for (acc, x) in values[..e].iter_mut().zip(v) {
                    *acc += x;
                }
            }
            count += 1;
        }
        flags = flags.union(&sentence.flags);
    }
    if count > 0 {
        let inv = count as f64;
        values[..e].iter_mut().for_each(|v| *v /= inv);
    }
    for (slot, on) in values[e..].iter_mut().zip(flags.to_array()) {
        *slot = if on { 1.0 } else { 0.0 };
    }
    FeatureVector::new(values, e)
}

const CACHE_MAGIC: &[u8; 4] = b"KGFC";
const CACHE_VERSION: u32 = 1;

/// Writes `(fact id, feature vector)` records to a versioned binary cache.
///
/// Layout (little endian): magic, version u32, e u32, n u32, count u64, then
/// per record a u32-length-prefixed UTF-8 id and e+n f64 values.
pub fn write_feature_cache(
    path: impl AsRef<Path>,
    embedding_dim: usize,
    records: &[(String, FeatureVector)],
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(CACHE_MAGIC).map_err(io)?;
    w.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(embedding_dim as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(NUM_FLAGS as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(records.len() as u64).to_le_bytes()).map_err(io)?;
    for (id, fv) in records {
        if fv.embedding_dim() != embedding_dim {
            return Err(Error::Dimension(format!("record `{id}` has e={}", fv.embedding_dim())));
        }
        w.write_all(&(id.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(id.as_bytes()).map_err(io)?;
        for v in fv.values() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_feature_cache(path: impl AsRef<Path>) -> Result<Vec<(String, FeatureVector)>> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let corrupt = |m: &str| Error::Corrupt {
        path: path.to_path_buf(),
        message: m.to_string(),
    };
    let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|_| corrupt("truncated"));
    let mut magic = [0u8; 4];
    read(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    read(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CACHE_VERSION {
        return Err(Error::Version {
            found: version,
            expected: CACHE_VERSION,
        });
    }
    read(&mut u32buf)?;
    let e = u32::from_le_bytes(u32buf) as usize;
    read(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    if n != NUM_FLAGS {
        return Err(Error::Dimension(format!("cache has n={n}, expected {NUM_FLAGS}")));
    }
    let mut u64buf = [0u8; 8];
    read(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf);
    let mut out = Vec::new();
    for _ in 0..count {
        read(&mut u32buf)?;
        let mut id = vec![0u8; u32::from_le_bytes(u32buf) as usize];
        read(&mut id)?;
        let id = String::from_utf8(id).map_err(|_| corrupt("non-UTF-8 id"))?;
        let mut values = Vec::with_capacity(e + n);
        for _ in 0..e + n {
            read(&mut u64buf)?;
            values.push(f64::from_le_bytes(u64buf));
        }
        out.push((id, FeatureVector::new(values, e)?));
    }
    Ok(out)
}
