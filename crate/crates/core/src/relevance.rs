//! Provenance sentence selection.
//!
//! A sentence is relevant to a fact when it mentions the subject or object
//! (or one of their aliases), a paraphrase of the object, the predicate or
//! one of its aliases, or a lexical unit of a frame mapped to the predicate.
//! All matching is whole-token-sequence containment over [`tokenize`] output.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::catalog::{AliasDb, FrameMode, ParaphraseTable, RelationCatalog};
use crate::corpus::{Document, Fact};
use crate::features::tokenize;
use crate::seeds;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelevanceFlags {
    pub subject_match: bool,
    pub subject_alias: bool,
    pub object_match: bool,
    pub object_alias: bool,
    pub object_paraphrase: bool,
    pub predicate_alias: bool,
    pub frame_trigger: bool,
}

impl RelevanceFlags {
    pub const COUNT: usize = 7;
    pub const NAMES: [&'static str; Self::COUNT] = [
        "subject_match",
        "subject_alias",
        "object_match",
        "object_alias",
        "object_paraphrase",
        "predicate_alias",
        "frame_trigger",
    ];

    /// Flags in feature order.
    pub fn to_array(&self) -> [bool; Self::COUNT] {
        [
            self.subject_match,
            self.subject_alias,
            self.object_match,
            self.object_alias,
            self.object_paraphrase,
            self.predicate_alias,
            self.frame_trigger,
        ]
    }

    pub fn any(&self) -> bool {
        self.to_array().iter().any(|&f| f)
    }

    pub fn union(&self, other: &Self) -> Self {
        RelevanceFlags {
            subject_match: self.subject_match || other.subject_match,
            subject_alias: self.subject_alias || other.subject_alias,
            object_match: self.object_match || other.object_match,
            object_alias: self.object_alias || other.object_alias,
            object_paraphrase: self.object_paraphrase || other.object_paraphrase,
            predicate_alias: self.predicate_alias || other.predicate_alias,
            frame_trigger: self.frame_trigger || other.frame_trigger,
        }
    }

    /// True when the frame trigger is the only criterion that fired.
    pub fn frame_only(&self) -> bool {
        self.frame_trigger
            && !RelevanceFlags {
                frame_trigger: false,
                ..*self
            }
            .any()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevantSentence {
    pub text: String,
    pub flags: RelevanceFlags,
}

/// Which relevant sentences are eligible for selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FrameFilter {
    #[default]
    AllRelevant,
    /// Keep only sentences that trigger a mapped frame.
    FramesOnly,
    /// Drop sentences selected by the frame trigger alone.
    NoFrames,
}

impl FrameFilter {
    pub fn keeps(&self, flags: &RelevanceFlags) -> bool {
        match self {
            FrameFilter::AllRelevant => true,
            FrameFilter::FramesOnly => flags.frame_trigger,
            FrameFilter::NoFrames => !flags.frame_only(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FrameFilter::AllRelevant => "all_relevant",
            FrameFilter::FramesOnly => "frames_only",
            FrameFilter::NoFrames => "no_frames",
        }
    }
}

/// Number of sentences to sample per fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentenceCount {
    Count(usize),
    All,
}

impl SentenceCount {
    /// The sweep used by the sentence-count ablation.
    pub const SWEEP: [SentenceCount; 7] = [
        SentenceCount::Count(1),
        SentenceCount::Count(2),
        SentenceCount::Count(3),
        SentenceCount::Count(5),
        SentenceCount::Count(7),
        SentenceCount::Count(10),
        SentenceCount::All,
    ];
}

impl fmt::Display for SentenceCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceCount::Count(k) => write!(f, "{k}"),
            SentenceCount::All => f.write_str("all"),
        }
    }
}

impl FromStr for SentenceCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(SentenceCount::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(SentenceCount::Count(k)),
            _ => Err(format!("sentence count must be a positive integer or `all`, got `{s}`")),
        }
    }
}

impl Serialize for SentenceCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SentenceCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => SentenceCount::from_str(&k.to_string()),
            Raw::Str(s) => SentenceCount::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

fn contains_seq(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

fn any_seq(hay: &[String], needles: &[Vec<String>]) -> bool {
    needles.iter().any(|n| contains_seq(hay, n))
}

/// Shared lookup tables for relevance testing.
#[derive(Debug, Clone, Copy)]
pub struct RelevanceContext<'a> {
    pub aliases: &'a AliasDb,
    pub paraphrases: &'a ParaphraseTable,
    pub catalog: &'a RelationCatalog,
    pub frame_mode: FrameMode,
}

/// Token sequences to look for, precomputed once per fact.
#[derive(Debug, Clone)]
pub struct FactMatcher {
    subject: Vec<String>,
    subject_aliases: Vec<Vec<String>>,
    object: Vec<String>,
    object_aliases: Vec<Vec<String>>,
    object_paraphrases: Vec<Vec<String>>,
    predicate_aliases: Vec<Vec<String>>,
    frame_units: Vec<Vec<String>>,
}

impl<'a> RelevanceContext<'a> {
    pub fn matcher(&self, fact: &Fact) -> FactMatcher {
        let subject = tokenize(&fact.subject);
        let object = tokenize(&fact.object);
        let others = |entity: &str, own: &[String]| -> Vec<Vec<String>> {
            self.aliases
                .aliases(entity)
                .iter()
                .map(|a| tokenize(a))
                .filter(|t| !t.is_empty() && t.as_slice() != own)
                .collect()
        };
        let subject_aliases = others(&fact.subject, &subject);
        let object_aliases = others(&fact.object, &object);
        let object_paraphrases = self
            .paraphrases
            .paraphrases(&fact.object)
            .map(|ps| ps.iter().map(|p| tokenize(p)).filter(|t| !t.is_empty()).collect())
            .unwrap_or_default();

        let mut predicate_aliases: Vec<Vec<String>> = self
            .aliases
            .aliases(&fact.relation)
            .iter()
            .map(|a| tokenize(a))
            .collect();
        if let Some(rel) = self.catalog.get(&fact.relation) {
            predicate_aliases.extend(rel.aliases.iter().map(|a| tokenize(a)));
        }
        predicate_aliases.retain(|t| !t.is_empty());
        predicate_aliases.sort();
        predicate_aliases.dedup();

        let mut frame_units: Vec<Vec<String>> = self
            .catalog
            .frames(&fact.relation, self.frame_mode)
            .iter()
            .flat_map(|f| f.lexical_units.iter().map(|u| tokenize(u)))
            .filter(|t| !t.is_empty())
            .collect();
        frame_units.sort();
        frame_units.dedup();

        FactMatcher {
            subject,
            subject_aliases,
            object,
            object_aliases,
            object_paraphrases,
            predicate_aliases,
            frame_units,
        }
    }

    /// Flags for one sentence, or `None` when no criterion fires.
    pub fn sentence_relevance(&self, sentence: &str, fact: &Fact) -> Option<RelevantSentence> {
        self.matcher(fact).relevance(sentence)
    }

    /// All relevant sentences of `doc` passing `filter`, in document order.
    pub fn relevant_sentences(&self, doc: &Document, fact: &Fact, filter: FrameFilter) -> Vec<RelevantSentence> {
        let matcher = self.matcher(fact);
        doc.sentences
            .iter()
            .filter_map(|s| matcher.relevance(s))
            .filter(|s| filter.keeps(&s.flags))
            .collect()
    }

    /// Samples up to `k` eligible sentences uniformly without replacement.
    /// The result keeps document order; fewer than `k` eligible sentences
    /// are all returned.
    pub fn select_sentences(
        &self,
        doc: &Document,
        fact: &Fact,
        k: SentenceCount,
        seed: u64,
        filter: FrameFilter,
    ) -> Vec<RelevantSentence> {
        let eligible = self.relevant_sentences(doc, fact, filter);
        match k {
            SentenceCount::Count(k) if k < eligible.len() => {
                let mut rng = seeds::rng(seed, "select");
                let mut picked = index::sample(&mut rng, eligible.len(), k).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| eligible[i].clone()).collect()
            }
            _ => eligible,
        }
    }
}

impl FactMatcher {
    pub fn flags(&self, tokens: &[String]) -> RelevanceFlags {
        RelevanceFlags {
            subject_match: contains_seq(tokens, &self.subject),
            subject_alias: any_seq(tokens, &self.subject_aliases),
            object_match: contains_seq(tokens, &self.object),
            object_alias: any_seq(tokens, &self.object_aliases),
            object_paraphrase: any_seq(tokens, &self.object_paraphrases),
            predicate_alias: any_seq(tokens, &self.predicate_aliases),
            frame_trigger: any_seq(tokens, &self.frame_units),
        }
    }

    pub fn relevance(&self, sentence: &str) -> Option<RelevantSentence> {
        let flags = self.flags(&tokenize(sentence));
        flags.any().then(|| RelevantSentence {
            text: sentence.to_string(),
            flags,
        })
    }
}
