use serde::Serialize;

/// Binary credibility scores; the positive class is "credible".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CredReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// F1 with "not credible" as the positive class.
    pub negative_f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl CredReport {
    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        if total == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / total as f64
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_from(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and F1. Undefined ratios (no predicted or no gold
/// positives) are reported as 0.
pub fn binary_f1(preds: &[bool], golds: &[bool]) -> CredReport {
    assert_eq!(preds.len(), golds.len(), "prediction/gold length mismatch");
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let negative_f1 = f1_from(ratio(tn, tn + fn_), ratio(tn, tn + fp));
    CredReport {
        precision,
        recall,
        f1: f1_from(precision, recall),
        negative_f1,
        tp,
        fp,
        tn,
        fn_,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MulticlassF1 {
    /// Mean per-class F1 over classes that occur in the gold labels.
    pub macro_f1: f64,
    /// F1 from counts pooled over all classes.
    pub micro_f1: f64,
    pub per_class: Vec<ClassScore>,
}

pub fn multiclass_f1(preds: &[usize], golds: &[usize], num_classes: usize) -> MulticlassF1 {
    assert_eq!(preds.len(), golds.len(), "prediction/gold length mismatch");
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    let mut support = vec![0usize; num_classes];
    for (&p, &g) in preds.iter().zip(golds) {
        support[g] += 1;
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let per_class: Vec<ClassScore> = (0..num_classes)
        .map(|c| {
            let precision = ratio(tp[c], tp[c] + fp[c]);
            let recall = ratio(tp[c], tp[c] + fn_[c]);
            ClassScore {
                precision,
                recall,
                f1: f1_from(precision, recall),
                support: support[c],
            }
        })
        .collect();
    let present: Vec<&ClassScore> = per_class.iter().filter(|s| s.support > 0).collect();
    let macro_f1 = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|s| s.f1).sum::<f64>() / present.len() as f64
    };
    let (stp, sfp, sfn): (usize, usize, usize) = (tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let micro_f1 = f1_from(ratio(stp, stp + sfp), ratio(stp, stp + sfn));
    MulticlassF1 {
        macro_f1,
        micro_f1,
        per_class,
    }
}

/// Mean of `1 / rank` of each gold class in its ranking. A gold class missing
/// from its ranking contributes 0; an empty population gives 0.
pub fn mrr(rankings: &[Vec<usize>], golds: &[usize]) -> f64 {
    assert_eq!(rankings.len(), golds.len(), "ranking/gold length mismatch");
    if golds.is_empty() {
        return 0.0;
    }
    let total: f64 = rankings
        .iter()
        .zip(golds)
        .map(|(ranking, g)| {
            ranking
                .iter()
                .position(|c| c == g)
                .map_or(0.0, |p| 1.0 / (p + 1) as f64)
        })
        .sum();
    total / golds.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairReport {
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// MRR over instances whose gold repair is a real relation.
    pub mrr: f64,
    /// Share of reserved-class instances whose top-ranked class is that class.
    pub cannot_repair_top1: f64,
    pub per_class: Vec<ClassScore>,
}

/// Repair metrics from full class rankings: the top-ranked class is the
/// prediction for macro/micro F1; MRR covers real-relation golds only.
pub fn repair_report(
    rankings: &[Vec<usize>],
    golds: &[usize],
    num_classes: usize,
    cannot_repair: usize,
) -> RepairReport {
    let preds: Vec<usize> = rankings.iter().map(|r| r[0]).collect();
    let f1 = multiclass_f1(&preds, golds, num_classes);
    let (real_r, real_g): (Vec<Vec<usize>>, Vec<usize>) = rankings
        .iter()
        .zip(golds)
        .filter(|(_, &g)| g != cannot_repair)
        .map(|(r, &g)| (r.clone(), g))
        .unzip();
    let reserved: Vec<&usize> = preds
        .iter()
        .zip(golds)
        .filter(|(_, &g)| g == cannot_repair)
        .map(|(p, _)| p)
        .collect();
    let cannot_repair_top1 = ratio(
        reserved.iter().filter(|&&&p| p == cannot_repair).count(),
        reserved.len(),
    );
    RepairReport {
        macro_f1: f1.macro_f1,
        micro_f1: f1.micro_f1,
        mrr: mrr(&real_r, &real_g),
        cannot_repair_top1,
        per_class: f1.per_class,
    }
}
