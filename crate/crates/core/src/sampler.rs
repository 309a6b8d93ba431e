//! Faux-fact generation and balanced minibatches.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::catalog::{RelationCatalog, CANNOT_REPAIR};
use crate::corpus::Fact;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::seeds::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub features: FeatureVector,
    /// 1 = credible, 0 = not credible.
    pub cred_label: u8,
    /// Catalog class index of the repair target.
    pub repair_label: usize,
}

impl LabeledInstance {
    /// Labels `fact`: credible facts target their own relation, the rest
    /// their recorded repair (the reserved class for sampled negatives).
    pub fn from_fact(features: FeatureVector, fact: &Fact, catalog: &RelationCatalog) -> Result<Self> {
        Ok(LabeledInstance {
            features,
            cred_label: u8::from(fact.is_credible()),
            repair_label: catalog.require(fact.repair_target())?,
        })
    }

    pub fn is_positive(&self) -> bool {
        self.cred_label == 1
    }
}

/// Draws corrupted copies of positive facts.
///
/// Relation, object and provenance document are each drawn uniformly; the
/// original relation and object are excluded so every draw is a true negative.
#[derive(Debug, Clone)]
pub struct NegativeSampler<'a> {
    catalog: &'a RelationCatalog,
    objects: Vec<&'a str>,
    docs: Vec<&'a str>,
}

impl<'a> NegativeSampler<'a> {
    pub fn new(pool: &'a [Fact], catalog: &'a RelationCatalog) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Sampling("empty fact pool".into()));
        }
        if catalog.num_real() < 2 {
            return Err(Error::Sampling(format!(
                "catalog has {} relation(s); at least 2 are needed to corrupt a fact",
                catalog.num_real()
            )));
        }
        let objects: BTreeSet<&str> = pool.iter().map(|f| f.object.as_str()).collect();
        Ok(NegativeSampler {
            catalog,
            objects: objects.into_iter().collect(),
            docs: pool.iter().map(|f| f.doc_id.as_str()).collect(),
        })
    }

    pub fn sample(&self, pos: &Fact, rng: &mut Rng) -> Result<Fact> {
        let cannot = self.catalog.cannot_repair_index();
        let own = self.catalog.index_of(&pos.relation);
        let alternatives = self.catalog.num_real() - usize::from(own.is_some_and(|i| i != cannot));
        let mut pick = rng.gen_range(0..alternatives);
        if let Some(own) = own.filter(|&i| i != cannot) {
            if pick >= own {
                pick += 1;
            }
        }
        let relation = self.catalog.name(pick).to_string();

        let own_obj = self.objects.binary_search(&pos.object.as_str()).ok();
        let choices = self.objects.len() - usize::from(own_obj.is_some());
        if choices == 0 {
            return Err(Error::Sampling(format!(
                "no object in the pool differs from `{}`",
                pos.object
            )));
        }
        let mut o = rng.gen_range(0..choices);
        if let Some(own) = own_obj {
            if o >= own {
                o += 1;
            }
        }
        let doc = self.docs[rng.gen_range(0..self.docs.len())];

        Ok(Fact {
            subject: pos.subject.clone(),
            relation,
            object: self.objects[o].to_string(),
            doc_id: doc.to_string(),
            gold_credible: Some(false),
            gold_repair: Some(CANNOT_REPAIR.to_string()),
            faux: true,
        })
    }
}

/// One-shot convenience over [`NegativeSampler`].
pub fn sample_negative(pos: &Fact, pool: &[Fact], catalog: &RelationCatalog, rng: &mut Rng) -> Result<Fact> {
    NegativeSampler::new(pool, catalog)?.sample(pos, rng)
}

#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub instances: Vec<&'a LabeledInstance>,
}

impl Batch<'_> {
    pub fn size(&self) -> usize {
        self.instances.len()
    }
}

/// Splits one epoch into balanced batches of `batch_size/2` positives and
/// `batch_size/2` negatives, each side shuffled and drawn without
/// replacement. The last batch is truncated to an even split.
pub fn make_batches<'a>(
    pos: &'a [LabeledInstance],
    neg: &'a [LabeledInstance],
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch<'a>>> {
    if batch_size == 0 || !batch_size.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "batch size must be even and positive, got {batch_size}"
        )));
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Invalid("balanced batches need positives and negatives".into()));
    }
    let mut p: Vec<&LabeledInstance> = pos.iter().collect();
    let mut n: Vec<&LabeledInstance> = neg.iter().collect();
    p.shuffle(&mut seeds::rng(seed, "batch-pos"));
    n.shuffle(&mut seeds::rng(seed, "batch-neg"));
    let half = batch_size / 2;
    let pairs = p.len().min(n.len());
    Ok(p[..pairs]
        .chunks(half)
        .zip(n[..pairs].chunks(half))
        .map(|(ps, ns)| Batch {
            instances: ps.iter().chain(ns).copied().collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn catalog(n: usize) -> RelationCatalog {
        let rels = (0..n)
            .map(|i| format!("{{\"name\": \"r{}\"}}", i + 1))
            .collect::<Vec<_>>()
            .join(",");
        RelationCatalog::from_json(&format!("{{\"relations\": [{rels}]}}"), "t").unwrap()
    }

    fn inst(label: u8, tag: f64) -> LabeledInstance {
        let mut v = vec![tag];
        v.extend([0.0; crate::features::NUM_FLAGS]);
        LabeledInstance {
            features: FeatureVector::new(v, 1).unwrap(),
            cred_label: label,
            repair_label: 0,
        }
    }

    #[test]
    fn single_alternative_relation() {
        let cat = catalog(2);
        let pool = vec![Fact::new("a", "r1", "b", "d1"), Fact::new("c", "r2", "e", "d2")];
        let mut rng = Rng::seed_from_u64(1);
        for _ in 0..50 {
            let neg = sample_negative(&pool[0], &pool, &cat, &mut rng).unwrap();
            assert_eq!(neg.relation, "r2");
            assert_eq!(neg.object, "e");
            assert_eq!(neg.subject, "a");
            assert!(neg.faux && !neg.is_credible());
            assert_eq!(neg.repair_target(), CANNOT_REPAIR);
        }
    }

    #[test]
    fn sampling_errors() {
        let pool = vec![Fact::new("a", "r1", "b", "d1")];
        let mut rng = Rng::seed_from_u64(1);
        assert!(sample_negative(&pool[0], &pool, &catalog(1), &mut rng).is_err());
        assert!(sample_negative(&pool[0], &pool, &catalog(3), &mut rng).is_err());
        assert!(sample_negative(&pool[0], &[], &catalog(3), &mut rng).is_err());
    }

    #[test]
    fn batches_are_balanced() {
        let pos: Vec<_> = (0..64).map(|i| inst(1, i as f64)).collect();
        let neg: Vec<_> = (0..64).map(|i| inst(0, i as f64)).collect();
        let batches = make_batches(&pos, &neg, 64, 3).unwrap();
        assert_eq!(batches.len(), 2);
        for b in &batches {
            assert_eq!(b.size(), 64);
            assert_eq!(b.instances.iter().filter(|i| i.is_positive()).count(), 32);
        }
        assert!(make_batches(&pos, &neg, 63, 3).is_err());
    }

    #[test]
    fn partial_batch_truncated_to_even_split() {
        let pos: Vec<_> = (0..10).map(|i| inst(1, i as f64)).collect();
        let neg: Vec<_> = (0..7).map(|i| inst(0, i as f64)).collect();
        let batches = make_batches(&pos, &neg, 4, 9).unwrap();
        let sizes: Vec<usize> = batches.iter().map(Batch::size).collect();
        assert_eq!(sizes, vec![4, 4, 4, 2]);
        let last = &batches[3];
        assert_eq!(last.instances.iter().filter(|i| i.is_positive()).count(), 1);
    }
}
