//! Seeded synthetic corpus with planted relation triggers.
//!
//! Every relation owns a few trigger words that are also the lexical units
//! of its expert frame and appear in its description, so the automatic
//! frame mapping recovers the expert one. A credible fact's document holds
//! evidence sentences that mention the subject (or an alias), one of the
//! relation's triggers and the object (or a paraphrase), mixed with noise
//! sentences about random entities and filler-only sentences.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::catalog::{AliasDb, FrameDef, ParaphraseTable, RelationCatalog, RelationDef};
use crate::corpus::{Document, DocumentStore, EmbeddingTable, Fact};
use crate::error::{Error, Result};
use crate::pipeline::DataBundle;
use crate::seeds::{self, Rng};

pub const TRIGGERS_PER_RELATION: usize = 3;
const DISTRACTOR_FRAMES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_relations: usize,
    pub facts_per_relation: usize,
    /// Number of filler words.
    pub vocab_size: usize,
    /// Probability that an evidence slot holds a real evidence sentence
    /// rather than noise. 0 removes all evidence.
    pub signal_strength: f64,
    pub embedding_dim: usize,
    /// Scale of each trigger's offset from its relation's centroid.
    pub trigger_spread: f64,
    /// Size of each relation's object pool.
    pub objects_per_relation: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_relations: 5,
            facts_per_relation: 200,
            vocab_size: 200,
            signal_strength: 1.0,
            embedding_dim: 32,
            trigger_spread: 0.25,
            objects_per_relation: 20,
            seed: 17,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_relations < 2 {
            return Err(Error::Invalid("synthetic corpus needs at least 2 relations".into()));
        }
        if self.facts_per_relation == 0 || self.objects_per_relation == 0 {
            return Err(Error::Invalid("facts and objects per relation must be positive".into()));
        }
        if self.vocab_size < 2 {
            return Err(Error::Invalid("vocab_size must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::Invalid(format!(
                "signal_strength must be in [0, 1], got {}",
                self.signal_strength
            )));
        }
        if self.trigger_spread.is_nan() || self.trigger_spread < 0.0 {
            return Err(Error::Invalid("trigger_spread must be non-negative".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Invalid("embedding_dim must be positive".into()));
        }
        Ok(())
    }
}

pub fn relation_name(i: usize) -> String {
    format!("relation_{i}")
}

pub fn trigger(relation: usize, j: usize) -> String {
    format!("trig{relation}x{j}")
}

fn filler(j: usize) -> String {
    format!("w{j}")
}

struct Vocab<'a> {
    cfg: &'a SynthConfig,
    subjects: &'a [String],
    objects: &'a [Vec<String>],
}

impl Vocab<'_> {
    fn fillers(&self, rng: &mut Rng, lo: usize, hi: usize) -> Vec<String> {
        let n = rng.gen_range(lo..=hi);
        (0..n).map(|_| filler(rng.gen_range(0..self.cfg.vocab_size))).collect()
    }

    fn noise_sentence(&self, rng: &mut Rng) -> String {
        let r = rng.gen_range(0..self.cfg.num_relations);
        let subject = self.subjects.choose(rng).expect("subjects");
        let object = self.objects[rng.gen_range(0..self.objects.len())]
            .choose(rng)
            .expect("objects");
        let mut toks = self.fillers(rng, 0, 2);
        toks.push(subject.clone());
        toks.extend(self.fillers(rng, 0, 2));
        toks.push(trigger(r, rng.gen_range(0..TRIGGERS_PER_RELATION)));
        toks.extend(self.fillers(rng, 0, 2));
        toks.push(object.clone());
        sentence(toks)
    }

    fn filler_sentence(&self, rng: &mut Rng) -> String {
        sentence(self.fillers(rng, 3, 8))
    }
}

fn sentence(tokens: Vec<String>) -> String {
    let mut s = tokens.join(" ");
    s.push('.');
    s
}

/// Builds the corpus described in the module docs. The same config yields
/// an identical bundle.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<DataBundle> {
    cfg.validate()?;
    let mut rng = seeds::rng(cfg.seed, "synth");
    let r = cfg.num_relations;

    let mut relations = Vec::with_capacity(r);
    for i in 0..r {
        let triggers: Vec<String> = (0..TRIGGERS_PER_RELATION).map(|j| trigger(i, j)).collect();
        relations.push(RelationDef {
            name: relation_name(i),
            aliases: vec![triggers[0].clone()],
            description: format!("links a subject to an object, as in {}", triggers.join(" or ")),
            expert_frames: vec![FrameDef::new(format!("Frame_{i}"), &triggers)?],
            auto_frames: Vec::new(),
        });
    }
    let catalog = RelationCatalog::new(relations)?;
    let mut frames: Vec<FrameDef> = catalog
        .relations()
        .iter()
        .flat_map(|rel| rel.expert_frames.iter().cloned())
        .collect();
    for d in 0..DISTRACTOR_FRAMES {
        let units: Vec<String> = (0..3).map(|_| filler(rng.gen_range(0..cfg.vocab_size))).collect();
        frames.push(FrameDef::new(format!("Distractor_{d}"), units)?);
    }

    let mut embeddings = EmbeddingTable::new(cfg.embedding_dim)?;
    let vector = |rng: &mut Rng| -> Vec<f64> { (0..cfg.embedding_dim).map(|_| rng.gen_range(-1.0..=1.0)).collect() };
    for j in 0..cfg.vocab_size {
        embeddings.insert(&filler(j), &vector(&mut rng))?;
    }
    // a relation's triggers are near-synonyms: a shared centroid plus a
    // small per-word offset
    for i in 0..r {
        let centroid = vector(&mut rng);
        for j in 0..TRIGGERS_PER_RELATION {
            let v: Vec<f64> = centroid
                .iter()
                .zip(vector(&mut rng))
                .map(|(c, o)| c + cfg.trigger_spread * o)
                .collect();
            embeddings.insert(&trigger(i, j), &v)?;
        }
    }

    let total = r * cfg.facts_per_relation;
    let subjects: Vec<String> = (0..total).map(|k| format!("subj{k}")).collect();
    let objects: Vec<Vec<String>> = (0..r)
        .map(|i| (0..cfg.objects_per_relation).map(|m| format!("obj{i}_{m}")).collect())
        .collect();

    let mut aliases = AliasDb::new();
    let mut paraphrases = ParaphraseTable::new();
    let mut subject_alias = vec![None; total];
    for (k, slot) in subject_alias.iter_mut().enumerate() {
        if rng.gen_bool(0.3) {
            let alias = format!("alias{k}");
            aliases.insert(&subjects[k], &alias);
            *slot = Some(alias);
        }
    }
    let mut object_para = vec![vec![None; cfg.objects_per_relation]; r];
    for i in 0..r {
        for m in 0..cfg.objects_per_relation {
            if rng.gen_bool(0.3) {
                let p = format!("objp{i}_{m}");
                paraphrases.insert(&objects[i][m], &p);
                object_para[i][m] = Some(p);
            }
        }
    }

    let vocab = Vocab {
        cfg,
        subjects: &subjects,
        objects: &objects,
    };
    let mut facts = Vec::with_capacity(total);
    let mut docs = Vec::with_capacity(total);
    for k in 0..total {
        let i = k / cfg.facts_per_relation;
        let m = rng.gen_range(0..cfg.objects_per_relation);
        let doc_id = format!("doc{k}");
        facts.push(Fact::new(&subjects[k], &relation_name(i), &objects[i][m], &doc_id));

        let mut sentences = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            if rng.gen_bool(cfg.signal_strength) {
                let subj = match &subject_alias[k] {
                    Some(a) if rng.gen_bool(0.5) => a.clone(),
                    _ => subjects[k].clone(),
                };
                let obj = match &object_para[i][m] {
                    Some(p) if rng.gen_bool(0.5) => p.clone(),
                    _ => objects[i][m].clone(),
                };
                let mut toks = vocab.fillers(&mut rng, 0, 2);
                toks.push(subj);
                toks.extend(vocab.fillers(&mut rng, 0, 2));
                toks.push(trigger(i, rng.gen_range(0..TRIGGERS_PER_RELATION)));
                toks.extend(vocab.fillers(&mut rng, 0, 2));
                toks.push(obj);
                toks.extend(vocab.fillers(&mut rng, 0, 1));
                sentences.push(sentence(toks));
            } else {
                sentences.push(vocab.noise_sentence(&mut rng));
            }
        }
        for _ in 0..rng.gen_range(2..=4) {
            sentences.push(vocab.noise_sentence(&mut rng));
        }
        for _ in 0..rng.gen_range(1..=2) {
            sentences.push(vocab.filler_sentence(&mut rng));
        }
        sentences.shuffle(&mut rng);
        docs.push(Document { doc_id, sentences });
    }

    Ok(DataBundle {
        catalog,
        facts,
        documents: DocumentStore::new(docs)?,
        embeddings,
        aliases,
        paraphrases,
        frames: Some(frames),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{auto_frame_mapping, FrameMode};
    use crate::features::tokenize;
    use crate::relevance::FrameFilter;

    fn small() -> SynthConfig {
        SynthConfig {
            facts_per_relation: 20,
            ..Default::default()
        }
    }

    #[test]
    fn sizes_and_validity() {
        let b = gen_synthetic(&SynthConfig::default()).unwrap();
        assert_eq!(b.facts.len(), 1000);
        assert_eq!(b.catalog.num_real(), 5);
        for f in &b.facts {
            f.validate(&b.catalog).unwrap();
            b.documents.require(&f.doc_id).unwrap();
        }
    }

    #[test]
    fn seeded_regeneration_is_identical() {
        let a = gen_synthetic(&small()).unwrap();
        let b = gen_synthetic(&small()).unwrap();
        assert_eq!(a.facts, b.facts);
        assert_eq!(
            a.documents.iter().collect::<Vec<_>>(),
            b.documents.iter().collect::<Vec<_>>()
        );
        assert_eq!(a.embeddings, b.embeddings);
        let c = gen_synthetic(&SynthConfig { seed: 18, ..small() }).unwrap();
        assert_ne!(
            a.documents.iter().collect::<Vec<_>>(),
            c.documents.iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn positives_have_evidence_and_auto_mapping_matches_expert() {
        let b = gen_synthetic(&small()).unwrap();
        let ctx = b.relevance(&b.catalog, FrameMode::Expert);
        for f in &b.facts {
            let doc = b.documents.require(&f.doc_id).unwrap();
            let framed = ctx.relevant_sentences(doc, f, FrameFilter::FramesOnly);
            assert!(!framed.is_empty(), "{} has no trigger sentence", f.subject);
        }
        let auto = auto_frame_mapping(&b.catalog, b.frames.as_ref().unwrap(), 1).unwrap();
        for rel in auto.relations() {
            assert_eq!(rel.auto_frames, rel.expert_frames, "{}", rel.name);
        }
    }

    #[test]
    fn zero_signal_emits_no_subject_evidence() {
        let b = gen_synthetic(&SynthConfig {
            signal_strength: 0.0,
            ..small()
        })
        .unwrap();
        let with_own_trigger_and_subject = b.facts.iter().filter(|f| {
            let i: usize = f.relation["relation_".len()..].parse().unwrap();
            b.documents.require(&f.doc_id).unwrap().sentences.iter().any(|s| {
                let toks = tokenize(s);
                toks.contains(&f.subject) && (0..TRIGGERS_PER_RELATION).any(|j| toks.contains(&trigger(i, j)))
            })
        });
        // only chance co-occurrences from noise sentences remain
        assert!(with_own_trigger_and_subject.count() < b.facts.len() / 10);
    }
}
