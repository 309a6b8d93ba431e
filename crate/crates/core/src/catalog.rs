//! Relation inventory, entity aliases, object paraphrases and relation→frame
//! mappings.
//!
//! The catalog is immutable once loaded. Class indices are the positions in
//! [`RelationCatalog::relations`]; the reserved [`CANNOT_REPAIR`] class is
//! always last so that the repair softmax covers it like any other relation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::tokenize;

/// Name of the reserved "no valid correction" class.
pub const CANNOT_REPAIR: &str = "CANNOT_REPAIR";

/// Function words ignored when matching descriptions against lexical units.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "an", "and", "any", "are", "as", "at", "be", "been", "before", "but", "by", "can",
    "do", "for", "from", "had", "has", "have", "he", "her", "his", "if", "in", "into", "is", "it", "its", "not", "of",
    "on", "or", "other", "she", "some", "such", "than", "that", "the", "their", "them", "there", "they", "this", "to",
    "was", "were", "which", "who", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDef {
    pub frame_name: String,
    pub lexical_units: Vec<String>,
}

impl FrameDef {
    /// Lowercases and deduplicates the lexical units, keeping first-seen order.
    pub fn new(frame_name: impl Into<String>, units: impl IntoIterator<Item = impl AsRef<str>>) -> Result<Self> {
        let frame_name = frame_name.into();
        let mut seen = BTreeSet::new();
        let mut lexical_units = Vec::new();
        for unit in units {
            let unit = normalize(unit.as_ref());
            if !unit.is_empty() && seen.insert(unit.clone()) {
                lexical_units.push(unit);
            }
        }
        if frame_name.trim().is_empty() {
            return Err(Error::Invalid("frame with empty name".into()));
        }
        if lexical_units.is_empty() {
            return Err(Error::Invalid(format!("frame `{frame_name}` has no lexical units")));
        }
        Ok(FrameDef {
            frame_name,
            lexical_units,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub expert_frames: Vec<FrameDef>,
    #[serde(default)]
    pub auto_frames: Vec<FrameDef>,
}

impl RelationDef {
    fn cannot_repair() -> Self {
        RelationDef {
            name: CANNOT_REPAIR.to_string(),
            aliases: vec![CANNOT_REPAIR.to_lowercase()],
            description: String::new(),
            expert_frames: Vec::new(),
            auto_frames: Vec::new(),
        }
    }

    /// Applies the alias and frame invariants in place.
    fn normalize(&mut self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Invalid("relation with empty name".into()));
        }
        let mut seen = BTreeSet::new();
        let mut aliases = Vec::new();
        for alias in std::iter::once(self.name.as_str()).chain(self.aliases.iter().map(String::as_str)) {
            let alias = normalize(alias);
            if !alias.is_empty() && seen.insert(alias.clone()) {
                aliases.push(alias);
            }
        }
        self.aliases = aliases;
        for frames in [&mut self.expert_frames, &mut self.auto_frames] {
            for frame in frames.iter_mut() {
                *frame = FrameDef::new(frame.frame_name.clone(), &frame.lexical_units)
                    .map_err(|e| Error::Invalid(format!("relation `{}`: {e}", self.name)))?;
            }
        }
        Ok(())
    }
}

/// Which relation→frame mapping drives frame-trigger relevance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    Expert,
    Auto,
    Off,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationCatalog {
    relations: Vec<RelationDef>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct CatalogDocument {
    relations: Vec<RelationDef>,
}

impl RelationCatalog {
    /// Builds a catalog, normalizing aliases and appending [`CANNOT_REPAIR`]
    /// when it is not already present.
    pub fn new(relations: Vec<RelationDef>) -> Result<Self> {
        let mut regular = Vec::with_capacity(relations.len() + 1);
        let mut reserved = None;
        for mut rel in relations {
            rel.normalize()?;
            if rel.name == CANNOT_REPAIR {
                if reserved.is_some() {
                    return Err(Error::DuplicateRelation(rel.name));
                }
                reserved = Some(rel);
            } else {
                regular.push(rel);
            }
        }
        regular.push(reserved.unwrap_or_else(RelationDef::cannot_repair));
        let mut index = BTreeMap::new();
        for (i, rel) in regular.iter().enumerate() {
            if index.insert(rel.name.clone(), i).is_some() {
                return Err(Error::DuplicateRelation(rel.name.clone()));
            }
        }
        Ok(RelationCatalog {
            relations: regular,
            index,
        })
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let doc: CatalogDocument = serde_json::from_str(text)
            .map_err(|e| Error::parse(context, format_args!("line {} column {}: {e}", e.line(), e.column())))?;
        Self::new(doc.relations)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    /// Number of classes including [`CANNOT_REPAIR`].
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Number of real (repairable) relations.
    pub fn num_real(&self) -> usize {
        self.relations.len() - 1
    }

    pub fn cannot_repair_index(&self) -> usize {
        self.relations.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.relations[index].name
    }

    pub fn get(&self, name: &str) -> Option<&RelationDef> {
        self.index_of(name).map(|i| &self.relations[i])
    }

    pub fn names(&self) -> Vec<String> {
        self.relations.iter().map(|r| r.name.clone()).collect()
    }

    /// Frames mapped to `relation` under `mode`.
    pub fn frames(&self, relation: &str, mode: FrameMode) -> &[FrameDef] {
        match (self.get(relation), mode) {
            (Some(rel), FrameMode::Expert) => &rel.expert_frames,
            (Some(rel), FrameMode::Auto) => &rel.auto_frames,
            _ => &[],
        }
    }
}

/// Loads a catalog document (JSON with a top-level `relations` array).
pub fn load_catalog(path: impl AsRef<Path>) -> Result<RelationCatalog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RelationCatalog::from_json(&text, &path.display().to_string())
}

/// Loads a frame inventory: a JSON array of `{frame_name, lexical_units}`.
pub fn load_frames(path: impl AsRef<Path>) -> Result<Vec<FrameDef>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<FrameDef> = serde_json::from_str(&text).map_err(|e| {
        Error::parse(
            path.display().to_string(),
            format_args!("line {} column {}: {e}", e.line(), e.column()),
        )
    })?;
    raw.into_iter()
        .map(|f| FrameDef::new(f.frame_name, f.lexical_units))
        .collect()
}

fn content_tokens(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

/// Recomputes every relation's automatic frames by bag-of-words overlap.
///
/// A frame is mapped to a relation when at least `min_overlap` content tokens
/// of the relation's description and aliases also occur in the frame's
/// lexical units. Frames with the same name are merged, and the result is
/// sorted by frame name, so the mapping does not depend on inventory order.
pub fn auto_frame_mapping(
    catalog: &RelationCatalog,
    inventory: &[FrameDef],
    min_overlap: usize,
) -> Result<RelationCatalog> {
    if inventory.is_empty() {
        return Err(Error::Invalid("frame inventory is empty".into()));
    }
    let min_overlap = min_overlap.max(1);

    let mut merged: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for frame in inventory {
        merged
            .entry(frame.frame_name.as_str())
            .or_default()
            .extend(frame.lexical_units.iter().map(String::as_str));
    }
    let frames: Vec<(FrameDef, BTreeSet<String>)> = merged
        .into_iter()
        .map(|(name, units)| {
            let def = FrameDef {
                frame_name: name.to_string(),
                lexical_units: units.iter().map(|u| u.to_string()).collect(),
            };
            let bag = units.iter().flat_map(|u| content_tokens(u)).collect();
            (def, bag)
        })
        .collect();

    let cannot = catalog.cannot_repair_index();
    let mut relations = catalog.relations.clone();
    for (i, rel) in relations.iter_mut().enumerate() {
        rel.auto_frames.clear();
        if i == cannot {
            continue;
        }
        let mut bag = content_tokens(&rel.description);
        for alias in &rel.aliases {
            bag.extend(content_tokens(alias));
        }
        for (def, units) in &frames {
            if bag.intersection(units).count() >= min_overlap {
                rel.auto_frames.push(def.clone());
            }
        }
    }
    RelationCatalog::new(relations)
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Directed `key -> {values}` lookup loaded from `key<TAB>value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TsvMultiMap {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl TsvMultiMap {
    fn parse(text: &str, context: &str) -> Result<Self> {
        let mut map = TsvMultiMap::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(format!("{context}:{}", lineno + 1), "expected `key<TAB>value`"))?;
            let (key, value) = (normalize(key), normalize(value));
            if key.is_empty() || value.is_empty() {
                return Err(Error::parse(format!("{context}:{}", lineno + 1), "empty key or value"));
            }
            map.insert(key, value);
        }
        Ok(map)
    }

    fn insert(&mut self, key: String, value: String) {
        self.entries.entry(key).or_default().insert(value);
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, vs) in &self.entries {
            for v in vs {
                out.push_str(k);
                out.push('\t');
                out.push_str(v);
                out.push('\n');
            }
        }
        out
    }
}

fn read_tsv(path: &Path) -> Result<TsvMultiMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TsvMultiMap::parse(&text, &path.display().to_string())
}

/// Entity (or predicate) → alias strings. Every entity is its own alias.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasDb(TsvMultiMap);

impl AliasDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_tsv(path.as_ref()).map(AliasDb)
    }

    pub fn parse(text: &str) -> Result<Self> {
        TsvMultiMap::parse(text, "aliases").map(AliasDb)
    }

    pub fn insert(&mut self, entity: &str, alias: &str) {
        let (entity, alias) = (normalize(entity), normalize(alias));
        if !entity.is_empty() && !alias.is_empty() {
            self.0.insert(entity, alias);
        }
    }

    /// All aliases of `entity`, including the entity itself.
    pub fn aliases(&self, entity: &str) -> BTreeSet<String> {
        let key = normalize(entity);
        let mut out = self.0.entries.get(&key).cloned().unwrap_or_default();
        out.insert(key);
        out
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }
}

/// Phrase → paraphrases. Lookups are directed; no symmetric closure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseTable(TsvMultiMap);

impl ParaphraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_tsv(path.as_ref()).map(ParaphraseTable)
    }

    pub fn parse(text: &str) -> Result<Self> {
        TsvMultiMap::parse(text, "paraphrases").map(ParaphraseTable)
    }

    pub fn insert(&mut self, phrase: &str, paraphrase: &str) {
        let (phrase, paraphrase) = (normalize(phrase), normalize(paraphrase));
        if !phrase.is_empty() && !paraphrase.is_empty() {
            self.0.insert(phrase, paraphrase);
        }
    }

    pub fn paraphrases(&self, phrase: &str) -> Option<&BTreeSet<String>> {
        self.0.entries.get(&normalize(phrase))
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }
}
