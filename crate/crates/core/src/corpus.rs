//! Facts, provenance documents, the word-embedding table and dataset splits.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::catalog::{RelationCatalog, CANNOT_REPAIR};
use crate::error::{Error, Result};
use crate::seeds;

/// A ⟨subject, relation, object⟩ triple with its provenance document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fact {
    #[serde(alias = "s")]
    pub subject: String,
    #[serde(alias = "p")]
    pub relation: String,
    #[serde(alias = "o")]
    pub object: String,
    #[serde(alias = "doc")]
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_credible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_repair: Option<String>,
    /// Set on sampled negatives.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub faux: bool,
}

impl Fact {
    pub fn new(subject: &str, relation: &str, object: &str, doc_id: &str) -> Self {
        Fact {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: object.to_string(),
            doc_id: doc_id.to_string(),
            gold_credible: None,
            gold_repair: None,
            faux: false,
        }
    }

    /// Credible unless explicitly labeled otherwise or sampled as a negative.
    pub fn is_credible(&self) -> bool {
        self.gold_credible.unwrap_or(!self.faux)
    }

    /// Gold repair class name: the fact's own relation when credible,
    /// otherwise the recorded repair or [`CANNOT_REPAIR`].
    pub fn repair_target(&self) -> &str {
        match (&self.gold_repair, self.is_credible()) {
            (Some(r), _) => r,
            (None, true) => &self.relation,
            (None, false) => CANNOT_REPAIR,
        }
    }

    pub fn validate(&self, catalog: &RelationCatalog) -> Result<()> {
        if self.subject.trim().is_empty() || self.object.trim().is_empty() {
            return Err(Error::Invalid(format!("fact with empty subject or object: {self:?}")));
        }
        catalog.require(&self.relation)?;
        if let Some(repair) = &self.gold_repair {
            catalog.require(repair)?;
        }
        Ok(())
    }
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, context: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| Error::parse(format!("{context}:{}", i + 1), e)))
        .collect()
}

/// Serializes records one JSON object per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_jsonl(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_facts(text: &str, context: &str, catalog: &RelationCatalog) -> Result<Vec<Fact>> {
    let facts: Vec<Fact> = parse_jsonl(text, context)?;
    for (i, fact) in facts.iter().enumerate() {
        fact.validate(catalog).map_err(|e| match e {
            Error::UnknownRelation(_) => e,
            other => Error::parse(format!("{context}:{}", i + 1), other),
        })?;
    }
    Ok(facts)
}

/// Loads newline-delimited fact records, rejecting unknown relations.
pub fn load_facts(path: impl AsRef<Path>, catalog: &RelationCatalog) -> Result<Vec<Fact>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_facts(&text, &path.display().to_string(), catalog)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct DocumentStore {
    docs: BTreeMap<String, Document>,
}

impl DocumentStore {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for doc in docs {
            if map.contains_key(&doc.doc_id) {
                return Err(Error::Invalid(format!("duplicate doc_id `{}`", doc.doc_id)));
            }
            map.insert(doc.doc_id.clone(), doc);
        }
        Ok(DocumentStore { docs: map })
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        Self::new(parse_jsonl(text, context)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.get(doc_id)
    }

    pub fn require(&self, doc_id: &str) -> Result<&Document> {
        self.get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn num_sentences(&self) -> usize {
        self.docs.values().map(|d| d.sentences.len()).sum()
    }
}

/// Naive sentence splitter: breaks after `.`, `?` or `!` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    let s = text[start..i + c.len_utf8()].trim();
                    if !s.is_empty() {
                        out.push(s.to_string());
                    }
                    start = j;
                }
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

/// Word → dense vector of fixed dimension. Unknown words map to zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Inserts `word` unless already present. Returns whether it was added.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::Dimension(format!(
                "vector for `{word}` has {} components, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    /// Parses the `count dimension` header format, one `word v1 .. ve` row per line.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(context, "missing `count dimension` header"))?;
        let mut fields = header.split_whitespace();
        let bad_header = || Error::parse(format!("{context}:1"), "header must be `count dimension`");
        let declared: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad_header)?;
        let dimension: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad_header)?;
        if fields.next().is_some() {
            return Err(bad_header());
        }
        let mut table = Self::new(dimension).map_err(|e| Error::parse(format!("{context}:1"), e))?;
        let mut duplicates = 0usize;
        let mut row = Vec::with_capacity(dimension);
        for (i, line) in lines {
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line has a field");
            row.clear();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| {
                    Error::parse(
                        format!("{context}:{lineno}"),
                        format_args!("non-numeric component `{f}`"),
                    )
                })?;
                row.push(v);
            }
            if row.len() != dimension {
                return Err(Error::parse(
                    format!("{context}:{lineno}"),
                    format_args!("row for `{word}` has {} values, expected {dimension}", row.len()),
                ));
            }
            if !table.insert(word, &row)? {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("{context}: {duplicates} duplicate word(s) ignored; first occurrence kept");
        }
        if table.len() + duplicates != declared {
            log::warn!(
                "{context}: header declares {declared} rows, found {}",
                table.len() + duplicates
            );
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        writeln!(out, "{} {}", self.len(), self.dimension).unwrap();
        for (i, w) in self.words.iter().enumerate() {
            write!(out, "{w}").unwrap();
            for v in &self.data[i * self.dimension..(i + 1) * self.dimension] {
                write!(out, " {v}").unwrap();
            }
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    /// Vector for `word`, or the zero vector when out of vocabulary.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        self.get(word)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.dimension])
    }

    /// Largest absolute component over the whole table.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<Fact>,
    pub dev: Vec<Fact>,
    pub test: Vec<Fact>,
    pub seed: u64,
}

/// Train/dev/test proportions of the full-size benchmark (463,164 / 100K / 100K).
pub const DEFAULT_FRACTIONS: [f64; 3] = [463_164.0 / 663_164.0, 100_000.0 / 663_164.0, 100_000.0 / 663_164.0];

/// Shuffles with the `split` substream of `seed`, then partitions. Dev and
/// test sizes are rounded from their fractions; train takes the remainder.
pub fn split_dataset(facts: &[Fact], fractions: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "split fractions {fractions:?} must be non-negative and sum to 1"
        )));
    }
    let n = facts.len();
    let dev_n = (n as f64 * fractions[1]).round() as usize;
    let test_n = (n as f64 * fractions[2]).round() as usize;
    if dev_n + test_n > n {
        return Err(Error::Invalid("split fractions leave no room for train".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeds::rng(seed, "split"));
    let pick = |idx: &[usize]| idx.iter().map(|&i| facts[i].clone()).collect::<Vec<_>>();
    let train_n = n - dev_n - test_n;
    Ok(DatasetSplit {
        train: pick(&order[..train_n]),
        dev: pick(&order[train_n..train_n + dev_n]),
        test: pick(&order[train_n + dev_n..]),
        seed,
    })
}
