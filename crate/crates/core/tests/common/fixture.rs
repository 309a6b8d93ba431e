//! Twenty hand-labeled sentences about one fact.

use kgcred::catalog::{AliasDb, FrameDef, FrameMode, ParaphraseTable, RelationCatalog, RelationDef};
use kgcred::corpus::{Document, Fact};
use kgcred::relevance::{RelevanceContext, RelevanceFlags};

// subject_match, subject_alias, object_match, object_alias,
// object_paraphrase, predicate_alias, frame_trigger
pub const SM: usize = 0;
pub const SA: usize = 1;
pub const OM: usize = 2;
pub const OA: usize = 3;
pub const OP: usize = 4;
pub const PA: usize = 5;
pub const FT: usize = 6;

pub const FIXTURE: [(&str, &[usize]); 20] = [
    ("Barack Obama taught at Harvard University.", &[SM, SA, OM, OA]),
    ("Obama gave a speech.", &[SA]),
    ("The president spoke today.", &[SA]),
    ("Harvard hosted the event.", &[OA]),
    ("She visited the Cambridge college last year.", &[OP]),
    ("He works for a large firm.", &[PA]),
    ("The company hired 40 people.", &[FT]),
    ("Nobody noticed the rain.", &[]),
    // paraphrases apply to the object only
    ("The senator arrived.", &[]),
    ("Obamacare passed.", &[]),
    ("Obama's legacy is debated.", &[]),
    ("BARACK OBAMA, HARVARD UNIVERSITY!", &[SM, SA, OM, OA]),
    ("Barack met Michelle Obama.", &[SA]),
    ("The University of Harvard.", &[OA]),
    ("His employment with the employer ended.", &[PA, FT]),
    ("Get a job.", &[]),
    ("The employed workers protested.", &[]),
    ("He was employed by Harvard.", &[PA, OA]),
    ("Spouse of Barack Obama.", &[SM, SA]),
    (
        "Harvard University hired Barack Obama after the Cambridge college deal.",
        &[SM, SA, OM, OA, OP, FT],
    ),
];

pub struct World {
    pub catalog: RelationCatalog,
    pub aliases: AliasDb,
    pub paraphrases: ParaphraseTable,
}

pub fn world() -> World {
    let employer = RelationDef {
        name: "employer".into(),
        aliases: vec!["works for".into(), "employed by".into()],
        description: "organization that employs the person".into(),
        expert_frames: vec![FrameDef::new("Employing", ["hired", "Employment"]).unwrap()],
        auto_frames: vec![FrameDef::new("Work", ["job"]).unwrap()],
    };
    let spouse = RelationDef {
        name: "spouse".into(),
        aliases: vec!["married to".into()],
        description: String::new(),
        expert_frames: vec![],
        auto_frames: vec![],
    };
    let mut aliases = AliasDb::new();
    aliases.insert("Barack Obama", "Obama");
    aliases.insert("Barack Obama", "the president");
    aliases.insert("Harvard University", "Harvard");
    let mut paraphrases = ParaphraseTable::new();
    paraphrases.insert("Harvard University", "the Cambridge college");
    paraphrases.insert("Barack Obama", "the senator");
    World {
        catalog: RelationCatalog::new(vec![employer, spouse]).unwrap(),
        aliases,
        paraphrases,
    }
}

pub fn ctx(w: &World, mode: FrameMode) -> RelevanceContext<'_> {
    RelevanceContext {
        aliases: &w.aliases,
        paraphrases: &w.paraphrases,
        catalog: &w.catalog,
        frame_mode: mode,
    }
}

pub fn fact() -> Fact {
    Fact::new("Barack Obama", "employer", "Harvard University", "d1")
}

pub fn document() -> Document {
    Document {
        doc_id: "d1".into(),
        sentences: FIXTURE.iter().map(|(s, _)| s.to_string()).collect(),
    }
}

pub fn expected(labels: &[usize]) -> [bool; RelevanceFlags::COUNT] {
    let mut out = [false; RelevanceFlags::COUNT];
    for &i in labels {
        out[i] = true;
    }
    out
}
