mod common;

use std::collections::BTreeMap;

use common::chi_square_uniform;
use kgcred::catalog::{RelationCatalog, RelationDef};
use kgcred::corpus::Fact;
use kgcred::sampler::NegativeSampler;
use kgcred::seeds;

fn catalog(n: usize) -> RelationCatalog {
    RelationCatalog::new(
        (0..n)
            .map(|i| RelationDef {
                name: format!("rel{i}"),
                aliases: vec![],
                description: String::new(),
                expert_frames: vec![],
                auto_frames: vec![],
            })
            .collect(),
    )
    .unwrap()
}

fn pool() -> Vec<Fact> {
    (0..40)
        .map(|i| {
            Fact::new(
                &format!("s{}", i % 7),
                &format!("rel{}", i % 6),
                &format!("o{}", i % 11),
                &format!("d{i}"),
            )
        })
        .collect()
}

#[test]
fn relation_draws_are_uniform_over_alternatives() {
    // six relations: every positive has five alternatives
    let cat = catalog(6);
    let pool = pool();
    let sampler = NegativeSampler::new(&pool, &cat).unwrap();
    let pos = &pool[0];
    let mut rng = seeds::rng(123, "chi");
    let mut rel_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut obj_counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..10_000 {
        let neg = sampler.sample(pos, &mut rng).unwrap();
        assert_eq!(neg.subject, pos.subject);
        assert_ne!(neg.relation, pos.relation);
        assert_ne!(neg.object, pos.object);
        assert_ne!((&neg.relation, &neg.object), (&pos.relation, &pos.object));
        assert!(neg.faux && !neg.is_credible());
        *rel_counts.entry(neg.relation).or_default() += 1;
        *obj_counts.entry(neg.object).or_default() += 1;
    }
    assert_eq!(rel_counts.len(), 5);
    let (_, p) = chi_square_uniform(&rel_counts.values().copied().collect::<Vec<_>>());
    assert!(p > 0.01, "relation p-value {p}");
    assert_eq!(obj_counts.len(), 10);
    let (_, p) = chi_square_uniform(&obj_counts.values().copied().collect::<Vec<_>>());
    assert!(p > 0.01, "object p-value {p}");
}

#[test]
fn same_seed_same_negatives() {
    let cat = catalog(4);
    let pool = pool();
    let sampler = NegativeSampler::new(&pool, &cat).unwrap();
    let draw = |seed| {
        let mut rng = seeds::rng(seed, "neg");
        (0..50)
            .map(|i| sampler.sample(&pool[i % pool.len()], &mut rng).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}

#[test]
fn single_relation_catalog_is_rejected() {
    let cat = catalog(1);
    let pool = vec![Fact::new("a", "rel0", "b", "d")];
    assert!(NegativeSampler::new(&pool, &cat).is_err());
}
