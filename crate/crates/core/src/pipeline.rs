//! Data-directory loading, frozen negative sampling and per-fact sentence
//! selection shared by training, evaluation and the ablations.

use std::borrow::Cow;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{
    auto_frame_mapping, load_catalog, load_frames, AliasDb, FrameDef, FrameMode, ParaphraseTable, RelationCatalog,
};
use crate::corpus::{load_facts, split_dataset, write_jsonl, DatasetSplit, DocumentStore, EmbeddingTable, Fact};
use crate::error::{Error, Result};
use crate::relevance::{FrameFilter, RelevanceContext, RelevantSentence, SentenceCount};
use crate::sampler::NegativeSampler;
use crate::seeds;

pub const CATALOG_FILE: &str = "catalog.json";
pub const FACTS_FILE: &str = "facts.jsonl";
pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const ALIASES_FILE: &str = "aliases.tsv";
pub const PARAPHRASES_FILE: &str = "paraphrases.tsv";
pub const FRAMES_FILE: &str = "frames.json";

/// Everything read from a data directory.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub catalog: RelationCatalog,
    pub facts: Vec<Fact>,
    pub documents: DocumentStore,
    pub embeddings: EmbeddingTable,
    pub aliases: AliasDb,
    pub paraphrases: ParaphraseTable,
    /// Frame inventory for the automatic mapping, when provided.
    pub frames: Option<Vec<FrameDef>>,
}

impl DataBundle {
    /// Reads the fixed file names under `dir`. Alias, paraphrase and frame
    /// files are optional.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let catalog = load_catalog(dir.join(CATALOG_FILE))?;
        let facts = load_facts(dir.join(FACTS_FILE), &catalog)?;
        let documents = DocumentStore::load(dir.join(DOCUMENTS_FILE))?;
        let embeddings = EmbeddingTable::load(dir.join(EMBEDDINGS_FILE))?;
        let optional = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        let aliases = optional(ALIASES_FILE)
            .map(AliasDb::load)
            .transpose()?
            .unwrap_or_default();
        let paraphrases = optional(PARAPHRASES_FILE)
            .map(ParaphraseTable::load)
            .transpose()?
            .unwrap_or_default();
        let frames = optional(FRAMES_FILE).map(load_frames).transpose()?;
        let bundle = DataBundle {
            catalog,
            facts,
            documents,
            embeddings,
            aliases,
            paraphrases,
            frames,
        };
        bundle.check_documents(&bundle.facts)?;
        Ok(bundle)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.catalog.save(dir.join(CATALOG_FILE))?;
        write_jsonl(dir.join(FACTS_FILE), &self.facts)?;
        let docs: Vec<_> = self.documents.iter().cloned().collect();
        write_jsonl(dir.join(DOCUMENTS_FILE), &docs)?;
        self.embeddings.save(dir.join(EMBEDDINGS_FILE))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        write(ALIASES_FILE, self.aliases.to_tsv())?;
        write(PARAPHRASES_FILE, self.paraphrases.to_tsv())?;
        if let Some(frames) = &self.frames {
            write(
                FRAMES_FILE,
                serde_json::to_string_pretty(frames).expect("frames serialize") + "\n",
            )?;
        }
        Ok(())
    }

    pub fn check_documents(&self, facts: &[Fact]) -> Result<()> {
        for f in facts {
            self.documents.require(&f.doc_id)?;
        }
        Ok(())
    }

    /// The catalog with automatic frames filled in when `mode` needs them.
    pub fn catalog_for(&self, mode: FrameMode, min_overlap: usize) -> Result<Cow<'_, RelationCatalog>> {
        match mode {
            FrameMode::Auto => {
                let frames = self
                    .frames
                    .as_ref()
                    .ok_or_else(|| Error::Invalid(format!("automatic frame mapping needs {FRAMES_FILE}")))?;
                Ok(Cow::Owned(auto_frame_mapping(&self.catalog, frames, min_overlap)?))
            }
            _ => Ok(Cow::Borrowed(&self.catalog)),
        }
    }

    pub fn relevance<'a>(&'a self, catalog: &'a RelationCatalog, mode: FrameMode) -> RelevanceContext<'a> {
        RelevanceContext {
            aliases: &self.aliases,
            paraphrases: &self.paraphrases,
            catalog,
            frame_mode: mode,
        }
    }
}

/// How provenance sentences are chosen for each fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionOptions {
    pub frame_mode: FrameMode,
    pub frame_filter: FrameFilter,
    pub sentences: SentenceCount,
    /// Minimum shared tokens for the automatic frame mapping.
    pub min_overlap: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            frame_mode: FrameMode::Expert,
            frame_filter: FrameFilter::AllRelevant,
            sentences: SentenceCount::All,
            min_overlap: 1,
        }
    }
}

/// Positive splits plus the negatives frozen for each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSplits {
    pub train: Vec<Fact>,
    pub dev: Vec<Fact>,
    pub test: Vec<Fact>,
    pub train_neg: Vec<Fact>,
    pub dev_neg: Vec<Fact>,
    pub test_neg: Vec<Fact>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SplitName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown split `{s}` (train, dev, test)"))
    }
}

/// Draws tried per positive before giving up on finding a negative with at
/// least one relevant sentence.
pub const MAX_NEGATIVE_ATTEMPTS: usize = 50;

impl FrozenSplits {
    pub fn positives(&self, split: SplitName) -> &[Fact] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    pub fn negatives(&self, split: SplitName) -> &[Fact] {
        match split {
            SplitName::Train => &self.train_neg,
            SplitName::Dev => &self.dev_neg,
            SplitName::Test => &self.test_neg,
        }
    }

    /// Writes `<split>.jsonl` and `<split>.neg.jsonl` for every split.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in SplitName::ALL {
            write_jsonl(dir.join(format!("{}.jsonl", split.as_str())), self.positives(split))?;
            write_jsonl(dir.join(format!("{}.neg.jsonl", split.as_str())), self.negatives(split))?;
        }
        let meta = dir.join("seed.txt");
        fs::write(&meta, format!("{}\n", self.seed)).map_err(|e| Error::io(&meta, e))
    }

    pub fn load(dir: impl AsRef<Path>, catalog: &RelationCatalog) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: String| -> Result<Vec<Fact>> {
            let path = dir.join(&name);
            if !path.exists() {
                return Err(Error::Invalid(format!("missing split file {}", path.display())));
            }
            load_facts(path, catalog)
        };
        let seed_path = dir.join("seed.txt");
        let seed = fs::read_to_string(&seed_path)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(0);
        Ok(FrozenSplits {
            train: read("train.jsonl".into())?,
            dev: read("dev.jsonl".into())?,
            test: read("test.jsonl".into())?,
            train_neg: read("train.neg.jsonl".into())?,
            dev_neg: read("dev.neg.jsonl".into())?,
            test_neg: read("test.neg.jsonl".into())?,
            seed,
        })
    }
}

/// Splits the bundle's facts and samples one negative per positive, drawing
/// each split's negatives from that split's own positives.
///
/// A draw whose provenance document yields no relevant sentence (expert
/// frames, all criteria) is unusable downstream, so it is redrawn up to
/// [`MAX_NEGATIVE_ATTEMPTS`] times.
pub fn freeze_negatives(bundle: &DataBundle, fractions: [f64; 3], seed: u64) -> Result<FrozenSplits> {
    let split = split_dataset(&bundle.facts, fractions, seed)?;
    let DatasetSplit { train, dev, test, .. } = split;
    let ctx = bundle.relevance(&bundle.catalog, FrameMode::Expert);
    let mut negs = Vec::with_capacity(3);
    for (name, pos) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let mut out = Vec::with_capacity(pos.len());
        if pos.is_empty() {
            negs.push(out);
            continue;
        }
        let sampler = NegativeSampler::new(pos, &bundle.catalog)?;
        let mut rng = seeds::rng(seed, &format!("sampler-{name}"));
        let mut failures = 0usize;
        for fact in pos {
            let mut accepted = None;
            for _ in 0..MAX_NEGATIVE_ATTEMPTS {
                let neg = sampler.sample(fact, &mut rng)?;
                let doc = bundle.documents.require(&neg.doc_id)?;
                if doc.sentences.iter().any(|s| ctx.sentence_relevance(s, &neg).is_some()) {
                    accepted = Some(neg);
                    break;
                }
            }
            match accepted {
                Some(n) => out.push(n),
                None => failures += 1,
            }
        }
        if failures > 0 {
            log::warn!("{name}: {failures} positive(s) got no usable negative");
        }
        negs.push(out);
    }
    let test_neg = negs.pop().unwrap();
    let dev_neg = negs.pop().unwrap();
    let train_neg = negs.pop().unwrap();
    Ok(FrozenSplits {
        train,
        dev,
        test,
        train_neg,
        dev_neg,
        test_neg,
        seed,
    })
}

/// A fact with its selected provenance and gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub fact: Fact,
    pub sentences: Vec<RelevantSentence>,
    pub cred_label: u8,
    pub repair_label: usize,
}

/// Selects sentences for each fact. Facts without any eligible sentence are
/// dropped; the second value counts them. The `index`-th fact samples with
/// the `index`-th member of the `label` substream of `seed`.
pub fn prepare_examples(
    bundle: &DataBundle,
    catalog: &RelationCatalog,
    facts: &[Fact],
    opts: &SelectionOptions,
    seed: u64,
    label: &str,
) -> Result<(Vec<Example>, usize)> {
    let ctx = bundle.relevance(catalog, opts.frame_mode);
    let mut out = Vec::with_capacity(facts.len());
    let mut dropped = 0;
    for (i, fact) in facts.iter().enumerate() {
        let doc = bundle.documents.require(&fact.doc_id)?;
        let sentences = ctx.select_sentences(
            doc,
            fact,
            opts.sentences,
            seeds::indexed(seed, label, i as u64),
            opts.frame_filter,
        );
        if sentences.is_empty() {
            dropped += 1;
            continue;
        }
        out.push(Example {
            fact: fact.clone(),
            sentences,
            cred_label: u8::from(fact.is_credible()),
            repair_label: catalog.require(fact.repair_target())?,
        });
    }
    Ok((out, dropped))
}

/// Examples for one split, positives and negatives kept apart.
#[derive(Debug, Clone, Default)]
pub struct SplitExamples {
    pub pos: Vec<Example>,
    pub neg: Vec<Example>,
}

impl SplitExamples {
    pub fn all(&self) -> impl Iterator<Item = &Example> {
        self.pos.iter().chain(&self.neg)
    }

    pub fn len(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

pub fn prepare_split(
    bundle: &DataBundle,
    catalog: &RelationCatalog,
    splits: &FrozenSplits,
    split: SplitName,
    opts: &SelectionOptions,
    seed: u64,
) -> Result<SplitExamples> {
    let name = split.as_str();
    let (pos, dp) = prepare_examples(
        bundle,
        catalog,
        splits.positives(split),
        opts,
        seed,
        &format!("{name}-pos"),
    )?;
    let (neg, dn) = prepare_examples(
        bundle,
        catalog,
        splits.negatives(split),
        opts,
        seed,
        &format!("{name}-neg"),
    )?;
    if dp + dn > 0 {
        log::info!("{name}: dropped {dp} positive(s) and {dn} negative(s) without eligible sentences");
    }
    Ok(SplitExamples { pos, neg })
}
