//! Logistic-regression baselines over bag-of-words, summed/averaged word
//! embeddings and TF-IDF features.
//!
//! The solver minimizes
//! `(1/N) Σ log(1 + exp(-s_i (w·x_i + b))) + (penalty/N) ‖w‖₁`
//! by proximal gradient descent with backtracking, which never increases the
//! objective from one pass to the next. The penalty is on the summed-loss
//! scale, so the grid `{0.01 … 100}` spans weak to strong regularization.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binio::{BinReader, BinWriter};
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{tokenize, NUM_FLAGS};
use crate::mlp::{rank_classes, sigmoid};
use crate::relevance::RelevantSentence;

/// Default L1 penalty grid.
pub const PENALTY_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Sorted `(index, value)` pairs; zeros are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn from_map(map: BTreeMap<usize, f64>, dim: usize) -> Self {
        SparseVector {
            entries: map.into_iter().filter(|(_, v)| *v != 0.0).collect(),
            dim,
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(),
            dim: values.len(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Appends `extra` dense components after the current dimension.
    pub fn extend_dense(&mut self, extra: &[f64]) {
        let base = self.dim;
        self.entries.extend(
            extra
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (base + i, *v)),
        );
        self.dim += extra.len();
    }
}

/// Training-split token inventory with document frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u32>,
    num_docs: usize,
}

impl Vocabulary {
    /// Builds from one token bag per training instance. Tokens are indexed
    /// in sorted order.
    pub fn build<'a, I>(bags: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        let mut num_docs = 0;
        for bag in bags {
            num_docs += 1;
            let mut uniq: Vec<&str> = bag.iter().map(String::as_str).collect();
            uniq.sort_unstable();
            uniq.dedup();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut vocab = Vocabulary {
            num_docs,
            ..Default::default()
        };
        for (i, (t, d)) in df.into_iter().enumerate() {
            vocab.index.insert(t.to_string(), i);
            vocab.tokens.push(t.to_string());
            vocab.df.push(d);
        }
        vocab
    }

    fn from_parts(tokens: Vec<String>, df: Vec<u32>, num_docs: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens,
            index,
            df,
            num_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn df(&self, index: usize) -> u32 {
        self.df[index]
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.num_docs as f64) / (1.0 + f64::from(self.df[index]))).ln() + 1.0
    }

    /// `token<TAB>index<TAB>df` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!("{t}\t{i}\t{}\n", self.df[i]));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the TSV form. The document count is not part of that format
    /// and must be supplied.
    pub fn parse_tsv(text: &str, num_docs: usize) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut df = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let ctx = || format!("vocabulary:{}", lineno + 1);
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(ctx(), "expected `token<TAB>index<TAB>df`"));
            }
            let idx: usize = fields[1].parse().map_err(|e| Error::parse(ctx(), e))?;
            if idx != tokens.len() {
                return Err(Error::parse(ctx(), "indices must be contiguous from 0"));
            }
            tokens.push(fields[0].to_string());
            df.push(fields[2].parse().map_err(|e| Error::parse(ctx(), e))?);
        }
        Ok(Self::from_parts(tokens, df, num_docs))
    }
}

/// Token frequencies restricted to the vocabulary.
pub fn bow_count(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    SparseVector::from_map(counts, vocab.len())
}

/// Presence indicators restricted to the vocabulary.
pub fn bow_binary(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut v = bow_count(tokens, vocab);
    v.entries.iter_mut().for_each(|(_, x)| *x = 1.0);
    v
}

pub fn w2v_sum(tokens: &[String], emb: &EmbeddingTable) -> Vec<f64> {
    let mut out = vec![0.0; emb.dimension()];
    for t in tokens {
        if let Some(v) = emb.get(t) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
    }
    out
}

/// Sum divided by the token count (OOV tokens included); zeros when empty.
pub fn w2v_avg(tokens: &[String], emb: &EmbeddingTable) -> Vec<f64> {
    let mut out = w2v_sum(tokens, emb);
    if !tokens.is_empty() {
        let n = tokens.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
    }
    out
}

/// Raw count × smoothed idf, then L2-normalized.
pub fn tfidf(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut v = bow_count(tokens, vocab);
    for (i, x) in v.entries.iter_mut() {
        *x *= vocab.idf(*i);
    }
    let norm = v.l2_norm();
    if norm > 0.0 {
        v.entries.iter_mut().for_each(|(_, x)| *x /= norm);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Count,
    Binary,
    Sum,
    Avg,
    Tfidf,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Count,
        FeatureKind::Binary,
        FeatureKind::Sum,
        FeatureKind::Avg,
        FeatureKind::Tfidf,
    ];

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    fn uses_vocab(self) -> bool {
        matches!(self, FeatureKind::Count | FeatureKind::Binary | FeatureKind::Tfidf)
    }

    /// CLI model name, e.g. `lr-tfidf`.
    pub fn model_name(self) -> &'static str {
        match self {
            FeatureKind::Count => "lr-count",
            FeatureKind::Binary => "lr-binary",
            FeatureKind::Sum => "lr-sum",
            FeatureKind::Avg => "lr-avg",
            FeatureKind::Tfidf => "lr-tfidf",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model_name())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.model_name() == s || k.model_name().trim_start_matches("lr-") == s)
            .ok_or_else(|| format!("unknown LR feature kind `{s}`"))
    }
}

/// Turns provenance sentences into LR input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub kind: FeatureKind,
    pub vocab: Option<Vocabulary>,
    pub embedding_dim: usize,
    /// Append the binary relevance flags after the base features.
    pub append_flags: bool,
}

/// Pooled token stream of a set of sentences.
pub fn sentence_tokens(sentences: &[RelevantSentence]) -> Vec<String> {
    sentences.iter().flat_map(|s| tokenize(&s.text)).collect()
}

impl Featurizer {
    /// Fits the vocabulary (when the kind needs one) on training bags.
    pub fn fit<'a, I>(kind: FeatureKind, training_bags: I, embedding_dim: usize, append_flags: bool) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        Featurizer {
            kind,
            vocab: kind.uses_vocab().then(|| Vocabulary::build(training_bags)),
            embedding_dim,
            append_flags,
        }
    }

    pub fn dim(&self) -> usize {
        let base = match self.kind {
            FeatureKind::Sum | FeatureKind::Avg => self.embedding_dim,
            _ => self.vocab.as_ref().map_or(0, Vocabulary::len),
        };
        base + if self.append_flags { NUM_FLAGS } else { 0 }
    }

    pub fn transform(&self, sentences: &[RelevantSentence], emb: &EmbeddingTable) -> Result<SparseVector> {
        let tokens = sentence_tokens(sentences);
        self.transform_tokens(&tokens, sentences, emb)
    }

    pub fn transform_tokens(
        &self,
        tokens: &[String],
        sentences: &[RelevantSentence],
        emb: &EmbeddingTable,
    ) -> Result<SparseVector> {
        let vocab = || {
            self.vocab
                .as_ref()
                .ok_or_else(|| Error::Invalid("featurizer has no vocabulary".into()))
        };
        let mut v = match self.kind {
            FeatureKind::Count => bow_count(tokens, vocab()?),
            FeatureKind::Binary => bow_binary(tokens, vocab()?),
            FeatureKind::Tfidf => tfidf(tokens, vocab()?),
            FeatureKind::Sum | FeatureKind::Avg => {
                if emb.dimension() != self.embedding_dim {
                    return Err(Error::Dimension(format!(
                        "embedding table has e={}, featurizer expects {}",
                        emb.dimension(),
                        self.embedding_dim
                    )));
                }
                let dense = if self.kind == FeatureKind::Sum {
                    w2v_sum(tokens, emb)
                } else {
                    w2v_avg(tokens, emb)
                };
                SparseVector::from_dense(&dense)
            }
        };
        if self.append_flags {
            let flags = sentences
                .iter()
                .fold(Default::default(), |acc: crate::relevance::RelevanceFlags, s| {
                    acc.union(&s.flags)
                });
            let f: Vec<f64> = flags.to_array().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            v.extend_dense(&f);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrTask {
    Credibility,
    /// One-vs-rest over `num_classes` catalog classes.
    Repair {
        num_classes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_passes: usize,
    pub fit_intercept: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            max_passes: 1000,
            fit_intercept: true,
        }
    }
}

/// Result of fitting one binary L1-logistic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value after each pass, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `log(1 + exp(-s z))` without overflow.
fn logistic_loss(z: f64, positive: bool) -> f64 {
    let m = if positive { -z } else { z };
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

struct Problem<'a> {
    xs: &'a [SparseVector],
    ys: &'a [bool],
    dim: usize,
    lambda: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.xs.iter().map(|x| x.dot(w) + b).collect()
    }

    fn smooth(&self, margins: &[f64]) -> f64 {
        margins
            .iter()
            .zip(self.ys)
            .map(|(&z, &y)| logistic_loss(z, y))
            .sum::<f64>()
            / self.xs.len() as f64
    }

    fn objective(&self, w: &[f64], b: f64) -> f64 {
        self.smooth(&self.margins(w, b)) + self.lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn gradient(&self, margins: &[f64]) -> (Vec<f64>, f64) {
        let n = self.xs.len() as f64;
        let mut gw = vec![0.0; self.dim];
        let mut gb = 0.0;
        for ((x, &z), &y) in self.xs.iter().zip(margins).zip(self.ys) {
            let r = (sigmoid(z) - if y { 1.0 } else { 0.0 }) / n;
            gb += r;
            for &(i, v) in x.entries() {
                gw[i] += r * v;
            }
        }
        (gw, gb)
    }
}

/// Proximal gradient with backtracking on the L1-regularized logistic loss.
/// `penalty` multiplies `‖w‖₁` on the summed-loss scale (divided by N here).
pub fn fit_binary(xs: &[SparseVector], ys: &[bool], dim: usize, penalty: f64, cfg: &SolverConfig) -> Result<BinaryFit> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Invalid("LR needs a nonempty, aligned training set".into()));
    }
    if penalty.is_nan() || penalty < 0.0 {
        return Err(Error::Invalid(format!("penalty must be ≥ 0, got {penalty}")));
    }
    if xs.iter().any(|x| x.entries().last().is_some_and(|&(i, _)| i >= dim)) {
        return Err(Error::Dimension(format!("feature index beyond dimension {dim}")));
    }
    let prob = Problem {
        xs,
        ys,
        dim,
        lambda: penalty / xs.len() as f64,
    };
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut margins = prob.margins(&w, b);
    let mut smooth = prob.smooth(&margins);
    let mut obj = smooth;
    let mut trace = vec![obj];
    let mut step = 1.0;
    for _ in 0..cfg.max_passes {
        let (gw, gb) = prob.gradient(&margins);
        let (new_w, new_b, new_margins, new_smooth) = loop {
            let cand_w: Vec<f64> = w
                .iter()
                .zip(&gw)
                .map(|(wi, gi)| soft_threshold(wi - step * gi, step * prob.lambda))
                .collect();
            let cand_b = if cfg.fit_intercept { b - step * gb } else { b };
            let cand_margins = prob.margins(&cand_w, cand_b);
            let cand_smooth = prob.smooth(&cand_margins);
            let mut lin = (cand_b - b) * gb;
            let mut quad = (cand_b - b).powi(2);
            for ((c, o), g) in cand_w.iter().zip(&w).zip(&gw) {
                let d = c - o;
                lin += d * g;
                quad += d * d;
            }
            if cand_smooth <= smooth + lin + quad / (2.0 * step) + 1e-15 || step < 1e-12 {
                break (cand_w, cand_b, cand_margins, cand_smooth);
            }
            step *= 0.5;
        };
        let new_obj = new_smooth + prob.lambda * new_w.iter().map(|v| v.abs()).sum::<f64>();
        if new_obj > obj {
            // only reachable once the step has collapsed; keep the incumbent
            break;
        }
        let change = (obj - new_obj).abs() / obj.abs().max(1e-12);
        w = new_w;
        b = new_b;
        margins = new_margins;
        smooth = new_smooth;
        obj = new_obj;
        trace.push(obj);
        if change < cfg.tolerance {
            break;
        }
        step *= 1.5;
    }
    debug_assert!((prob.objective(&w, b) - obj).abs() <= 1e-9 * obj.abs().max(1.0));
    Ok(BinaryFit {
        weights: w,
        bias: b,
        objective_trace: trace,
    })
}

/// Value of the solver's objective at `(w, b)`.
pub fn lr_objective(xs: &[SparseVector], ys: &[bool], w: &[f64], b: f64, penalty: f64) -> f64 {
    let prob = Problem {
        xs,
        ys,
        dim: w.len(),
        lambda: penalty / xs.len() as f64,
    };
    prob.objective(w, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    pub task: LrTask,
    pub penalty: f64,
    pub featurizer: Featurizer,
    /// One row for credibility, one per class for repair.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Trains a credibility (labels 0/1) or one-vs-rest repair model.
pub fn lr_train(
    xs: &[SparseVector],
    labels: &[usize],
    featurizer: Featurizer,
    penalty: f64,
    task: LrTask,
    cfg: &SolverConfig,
) -> Result<LrModel> {
    if xs.len() != labels.len() || xs.is_empty() {
        return Err(Error::Invalid("LR needs a nonempty, aligned training set".into()));
    }
    let dim = featurizer.dim();
    let classes = match task {
        LrTask::Credibility => 2,
        LrTask::Repair { num_classes } => num_classes,
    };
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Invalid(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Invalid("degenerate training set: only one class present".into()));
    }
    let (weights, bias) = match task {
        LrTask::Credibility => {
            let ys: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
            let fit = fit_binary(xs, &ys, dim, penalty, cfg)?;
            (vec![fit.weights], vec![fit.bias])
        }
        LrTask::Repair { num_classes } => {
            let mut ws = Vec::with_capacity(num_classes);
            let mut bs = Vec::with_capacity(num_classes);
            for k in 0..num_classes {
                let ys: Vec<bool> = labels.iter().map(|&l| l == k).collect();
                let fit = fit_binary(xs, &ys, dim, penalty, cfg)?;
                ws.push(fit.weights);
                bs.push(fit.bias);
            }
            (ws, bs)
        }
    };
    Ok(LrModel {
        task,
        penalty,
        featurizer,
        weights,
        bias,
    })
}

const LR_MAGIC: &[u8; 4] = b"KGLR";
pub const LR_VERSION: u32 = 1;

impl LrModel {
    /// Per-row probabilities `σ(w·x + b)`.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| sigmoid(x.dot(w) + b))
            .collect()
    }

    pub fn predict_credible(&self, x: &SparseVector) -> bool {
        self.scores(x)[0] >= 0.5
    }

    /// Classes by decreasing one-vs-rest score.
    pub fn rank(&self, x: &SparseVector) -> Vec<usize> {
        rank_classes(&self.scores(x))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_lr_models(&[self], path)
    }

    /// Loads a file holding exactly one model.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut models = load_lr_models(path, 1)?;
        Ok(models.pop().expect("one model"))
    }

    fn write_body(&self, w: &mut BinWriter) {
        match self.task {
            LrTask::Credibility => {
                w.u8(0);
                w.u32(2);
            }
            LrTask::Repair { num_classes } => {
                w.u8(1);
                w.u32(num_classes as u32);
            }
        }
        let f = &self.featurizer;
        w.u8(f.kind.code());
        w.u8(u8::from(f.append_flags));
        w.u32(f.embedding_dim as u32);
        match &f.vocab {
            Some(v) => {
                w.u8(1);
                w.u64(v.num_docs as u64);
                w.u32(v.len() as u32);
                for (t, d) in v.tokens.iter().zip(&v.df) {
                    w.str(t);
                    w.u32(*d);
                }
            }
            None => w.u8(0),
        }
        w.f64(self.penalty);
        w.u32(f.dim() as u32);
        w.u32(self.weights.len() as u32);
        for row in &self.weights {
            w.f64s(row);
        }
        w.f64s(&self.bias);
    }

    fn read_body(r: &mut BinReader) -> Result<Self> {
        let task_code = r.u8()?;
        let classes = r.u32()? as usize;
        let task = match task_code {
            0 => LrTask::Credibility,
            1 => LrTask::Repair { num_classes: classes },
            c => return Err(r.corrupt(format!("unknown task code {c}"))),
        };
        let kind_code = r.u8()?;
        let kind =
            FeatureKind::from_code(kind_code).ok_or_else(|| r.corrupt(format!("unknown feature kind {kind_code}")))?;
        let append_flags = r.u8()? != 0;
        let embedding_dim = r.u32()? as usize;
        let vocab = match r.u8()? {
            0 => None,
            _ => {
                let num_docs = r.u64()? as usize;
                let n = r.u32()? as usize;
                let mut tokens = Vec::new();
                let mut df = Vec::new();
                for _ in 0..n {
                    tokens.push(r.str()?);
                    df.push(r.u32()?);
                }
                Some(Vocabulary::from_parts(tokens, df, num_docs))
            }
        };
        let featurizer = Featurizer {
            kind,
            vocab,
            embedding_dim,
            append_flags,
        };
        let penalty = r.f64()?;
        let dim = r.u32()? as usize;
        if dim != featurizer.dim() {
            return Err(r.corrupt("weight dimension disagrees with featurizer"));
        }
        let rows = r.u32()? as usize;
        let expected_rows = match task {
            LrTask::Credibility => 1,
            LrTask::Repair { num_classes } => num_classes,
        };
        if rows != expected_rows {
            return Err(r.corrupt(format!("{rows} weight rows for {expected_rows} expected")));
        }
        let weights = (0..rows).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
        let bias = r.f64s(rows)?;
        Ok(LrModel {
            task,
            penalty,
            featurizer,
            weights,
            bias,
        })
    }
}

/// Writes several LR models into one file, e.g. a credibility and a repair
/// model trained on the same features.
pub fn save_lr_models(models: &[&LrModel], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BinWriter::new(LR_MAGIC, LR_VERSION);
    w.u32(models.len() as u32);
    for m in models {
        m.write_body(&mut w);
    }
    w.finish(path.as_ref())
}

/// Reads a file written by [`save_lr_models`] holding exactly `expected` models.
pub fn load_lr_models(path: impl AsRef<Path>, expected: usize) -> Result<Vec<LrModel>> {
    let mut r = BinReader::open(path.as_ref(), LR_MAGIC, LR_VERSION)?;
    let count = r.u32()? as usize;
    if count != expected {
        return Err(r.corrupt(format!("file holds {count} LR model(s), expected {expected}")));
    }
    let models = (0..count)
        .map(|_| LrModel::read_body(&mut r))
        .collect::<Result<Vec<_>>>()?;
    r.expect_end()?;
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn vocab() -> Vocabulary {
        let bags = [toks("a b c"), toks("a b"), toks("a")];
        Vocabulary::build(bags.iter().map(Vec::as_slice))
    }

    #[test]
    fn counting_and_binary() {
        let v = vocab();
        let c = bow_count(&toks("a b a"), &v);
        assert_eq!(c.entries(), &[(0, 2.0), (1, 1.0)]);
        assert_eq!(bow_binary(&toks("a b a"), &v).entries(), &[(0, 1.0), (1, 1.0)]);
        assert!(bow_count(&[], &v).entries().is_empty());
        assert!(bow_count(&toks("zzz q"), &v).entries().is_empty());
    }

    #[test]
    fn embedding_sum_and_avg() {
        let emb = EmbeddingTable::parse("2 2\nx 1 0\ny 0 1\n", "t").unwrap();
        assert_eq!(w2v_sum(&toks("x y"), &emb), vec![1.0, 1.0]);
        assert_eq!(w2v_avg(&toks("x y"), &emb), vec![0.5, 0.5]);
        assert_eq!(w2v_avg(&toks("q r"), &emb), vec![0.0, 0.0]);
        assert_eq!(w2v_avg(&[], &emb), vec![0.0, 0.0]);
    }

    #[test]
    fn idf_of_ubiquitous_token_is_one() {
        let v = vocab();
        assert_eq!(v.idf(v.index_of("a").unwrap()), 1.0);
        let t = tfidf(&toks("a b c c"), &v);
        assert!((t.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let v = vocab();
        assert_eq!(v.to_tsv(), "a\t0\t3\nb\t1\t2\nc\t2\t1\n");
        assert_eq!(Vocabulary::parse_tsv(&v.to_tsv(), 3).unwrap(), v);
        assert!(Vocabulary::parse_tsv("a\t1\t3\n", 3).is_err());
    }

    #[test]
    fn single_class_is_degenerate() {
        let f = Featurizer {
            kind: FeatureKind::Avg,
            vocab: None,
            embedding_dim: 1,
            append_flags: false,
        };
        let xs = vec![SparseVector::from_dense(&[1.0]); 3];
        assert!(lr_train(&xs, &[1, 1, 1], f, 1.0, LrTask::Credibility, &SolverConfig::default()).is_err());
    }

    #[test]
    fn strong_penalty_predicts_majority() {
        let f = Featurizer {
            kind: FeatureKind::Avg,
            vocab: None,
            embedding_dim: 2,
            append_flags: false,
        };
        let xs: Vec<SparseVector> = [[1.0, 0.2], [0.9, -0.1], [-1.0, 0.3], [0.8, 0.0], [0.7, 0.1]]
            .iter()
            .map(|v| SparseVector::from_dense(v))
            .collect();
        let labels = [1, 1, 0, 1, 1];
        let m = lr_train(&xs, &labels, f, 100.0, LrTask::Credibility, &SolverConfig::default()).unwrap();
        assert!(m.weights[0].iter().all(|&w| w == 0.0));
        assert!(xs.iter().all(|x| m.predict_credible(x)));
    }

    #[test]
    fn feature_kind_names() {
        for k in FeatureKind::ALL {
            assert_eq!(k.model_name().parse::<FeatureKind>().unwrap(), k);
        }
        assert!("lr-bogus".parse::<FeatureKind>().is_err());
    }
}
