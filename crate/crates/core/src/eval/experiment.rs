//! Model training, scoring and the multi-run experiment report.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{binary_f1, repair_report, CredReport, RepairReport};
use crate::baselines::{
    load_lr_models, lr_objective, lr_train, save_lr_models, sentence_tokens, FeatureKind, Featurizer, LrModel, LrTask,
    SolverConfig,
};
use crate::catalog::RelationCatalog;
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{build_features, NUM_FLAGS};
use crate::mlp::{
    load_model, save_model, train_balanced, verdict_from_scores, MlpModel, ModelDims, TrainConfig, Verdict,
};
use crate::pipeline::{prepare_split, DataBundle, FrozenSplits, SelectionOptions, SplitExamples, SplitName};
use crate::relevance::{RelevantSentence, SentenceCount};
use crate::sampler::LabeledInstance;
use crate::tuner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Mlp,
    Lr(FeatureKind),
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Mlp,
        ModelKind::Lr(FeatureKind::Count),
        ModelKind::Lr(FeatureKind::Binary),
        ModelKind::Lr(FeatureKind::Sum),
        ModelKind::Lr(FeatureKind::Avg),
        ModelKind::Lr(FeatureKind::Tfidf),
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Lr(kind) => kind.model_name(),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown model `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl TryFrom<String> for ModelKind {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> String {
        k.name().to_string()
    }
}

/// Hyperparameters for every model kind; each kind reads its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden layers of the MLP.
    pub depth: usize,
    pub train: TrainConfig,
    /// L1 penalty of the LR baselines.
    pub penalty: f64,
    /// Append relevance flags to LR features.
    pub lr_flags: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            depth: 2,
            train: TrainConfig::default(),
            penalty: 1.0,
            lr_flags: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mlp(MlpModel),
    /// A credibility model and a one-vs-rest repair model on shared features.
    Lr {
        cred: LrModel,
        repair: LrModel,
    },
}

/// Scores for one fact.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub cred: f64,
    pub repair: Vec<f64>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Mlp(_) => ModelKind::Mlp,
            TrainedModel::Lr { cred, .. } => ModelKind::Lr(cred.featurizer.kind),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TrainedModel::Mlp(m) => m.num_classes(),
            TrainedModel::Lr { repair, .. } => repair.weights.len(),
        }
    }

    pub fn scores(&self, sentences: &[RelevantSentence], emb: &EmbeddingTable) -> Result<Scores> {
        match self {
            TrainedModel::Mlp(m) => {
                let x = build_features(sentences, emb)?;
                let (cred, repair) = m.infer(x.values())?;
                Ok(Scores { cred, repair })
            }
            TrainedModel::Lr { cred, repair } => {
                let x = cred.featurizer.transform(sentences, emb)?;
                Ok(Scores {
                    cred: cred.scores(&x)[0],
                    repair: repair.scores(&x),
                })
            }
        }
    }

    pub fn verdict(
        &self,
        sentences: &[RelevantSentence],
        emb: &EmbeddingTable,
        cannot_repair: usize,
    ) -> Result<Verdict> {
        let s = self.scores(sentences, emb)?;
        Ok(verdict_from_scores(s.cred, &s.repair, cannot_repair))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            TrainedModel::Mlp(m) => save_model(m, path),
            TrainedModel::Lr { cred, repair } => save_lr_models(&[cred, repair], path),
        }
    }

    /// Loads either model format, telling them apart by the file's magic.
    pub fn load(path: impl AsRef<Path>, expected_classes: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let mut magic = [0u8; 4];
        fs::File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .map_err(|e| Error::io(path, e))?;
        if &magic == b"KGLR" {
            let mut models = load_lr_models(path, 2)?;
            let repair = models.pop().expect("two models");
            let cred = models.pop().expect("two models");
            if cred.task != LrTask::Credibility || !matches!(repair.task, LrTask::Repair { .. }) {
                return Err(Error::Corrupt {
                    path: path.to_path_buf(),
                    message: "expected a credibility then a repair model".into(),
                });
            }
            if let Some(expected) = expected_classes {
                if repair.weights.len() != expected {
                    return Err(Error::Dimension(format!(
                        "model has {} repair classes, catalog has {expected}",
                        repair.weights.len()
                    )));
                }
            }
            Ok(TrainedModel::Lr { cred, repair })
        } else {
            Ok(TrainedModel::Mlp(load_model(path, expected_classes)?))
        }
    }
}

pub struct TrainResult {
    pub model: TrainedModel,
    /// Mean loss per epoch for the MLP; final credibility and repair
    /// objectives for LR.
    pub loss_trace: Vec<f64>,
}

fn labeled(examples: &[crate::pipeline::Example], emb: &EmbeddingTable) -> Result<Vec<LabeledInstance>> {
    examples
        .iter()
        .map(|ex| {
            Ok(LabeledInstance {
                features: build_features(&ex.sentences, emb)?,
                cred_label: ex.cred_label,
                repair_label: ex.repair_label,
            })
        })
        .collect()
}

/// Trains `kind` on prepared training examples. `seed` drives
/// initialization, dropout and batch order.
pub fn train_model(
    kind: ModelKind,
    cfg: &ModelConfig,
    train: &SplitExamples,
    num_classes: usize,
    emb: &EmbeddingTable,
    seed: u64,
) -> Result<TrainResult> {
    if train.pos.is_empty() || train.neg.is_empty() {
        return Err(Error::Invalid(
            "training split needs both positives and negatives".into(),
        ));
    }
    match kind {
        ModelKind::Mlp => {
            let dims = ModelDims {
                embedding_dim: emb.dimension(),
                num_flags: NUM_FLAGS,
                num_classes,
                depth: cfg.depth,
            };
            let model = MlpModel::init_xavier(dims, seed)?;
            let tc = TrainConfig {
                seed,
                ..cfg.train.clone()
            };
            let pos = labeled(&train.pos, emb)?;
            let neg = labeled(&train.neg, emb)?;
            let out = train_balanced(model, &pos, &neg, &tc)?;
            Ok(TrainResult {
                model: TrainedModel::Mlp(out.model),
                loss_trace: out.loss_trace,
            })
        }
        ModelKind::Lr(fk) => {
            let examples: Vec<_> = train.all().collect();
            let bags: Vec<Vec<String>> = examples.iter().map(|ex| sentence_tokens(&ex.sentences)).collect();
            let featurizer = Featurizer::fit(fk, bags.iter().map(Vec::as_slice), emb.dimension(), cfg.lr_flags);
            let xs = examples
                .iter()
                .zip(&bags)
                .map(|(ex, toks)| featurizer.transform_tokens(toks, &ex.sentences, emb))
                .collect::<Result<Vec<_>>>()?;
            let cred_labels: Vec<usize> = examples.iter().map(|ex| ex.cred_label as usize).collect();
            let repair_labels: Vec<usize> = examples.iter().map(|ex| ex.repair_label).collect();
            let solver = SolverConfig::default();
            let cred = lr_train(
                &xs,
                &cred_labels,
                featurizer.clone(),
                cfg.penalty,
                LrTask::Credibility,
                &solver,
            )?;
            let repair = lr_train(
                &xs,
                &repair_labels,
                featurizer,
                cfg.penalty,
                LrTask::Repair { num_classes },
                &solver,
            )?;
            let ys: Vec<bool> = cred_labels.iter().map(|&l| l == 1).collect();
            let mut trace = vec![lr_objective(&xs, &ys, &cred.weights[0], cred.bias[0], cfg.penalty)];
            let repair_obj: f64 = (0..num_classes)
                .map(|k| {
                    let ys: Vec<bool> = repair_labels.iter().map(|&l| l == k).collect();
                    lr_objective(&xs, &ys, &repair.weights[k], repair.bias[k], cfg.penalty)
                })
                .sum();
            trace.push(repair_obj);
            Ok(TrainResult {
                model: TrainedModel::Lr { cred, repair },
                loss_trace: trace,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cred: CredReport,
    pub repair: RepairReport,
    pub num_positive: usize,
    pub num_negative: usize,
}

impl EvalReport {
    /// `(task, metric, value)` triples in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, &'static str, f64)> {
        vec![
            ("credibility", "precision", self.cred.precision),
            ("credibility", "recall", self.cred.recall),
            ("credibility", "f1", self.cred.f1),
            ("credibility", "negative_f1", self.cred.negative_f1),
            ("credibility", "accuracy", self.cred.accuracy()),
            ("repair", "macro_f1", self.repair.macro_f1),
            ("repair", "micro_f1", self.repair.micro_f1),
            ("repair", "mrr", self.repair.mrr),
            ("repair", "cannot_repair_top1", self.repair.cannot_repair_top1),
        ]
    }
}

pub fn evaluate(
    model: &TrainedModel,
    examples: &SplitExamples,
    emb: &EmbeddingTable,
    catalog: &RelationCatalog,
) -> Result<EvalReport> {
    if examples.is_empty() {
        return Err(Error::Invalid("nothing to evaluate".into()));
    }
    let mut preds = Vec::with_capacity(examples.len());
    let mut golds = Vec::with_capacity(examples.len());
    let mut rankings = Vec::with_capacity(examples.len());
    let mut repair_golds = Vec::with_capacity(examples.len());
    let cannot = catalog.cannot_repair_index();
    for ex in examples.all() {
        let v = model.verdict(&ex.sentences, emb, cannot)?;
        preds.push(v.credible);
        golds.push(ex.cred_label == 1);
        rankings.push(v.ranking);
        repair_golds.push(ex.repair_label);
    }
    Ok(EvalReport {
        cred: binary_f1(&preds, &golds),
        repair: repair_report(&rankings, &repair_golds, catalog.len(), cannot),
        num_positive: examples.pos.len(),
        num_negative: examples.neg.len(),
    })
}

/// Dev metric used to pick hyperparameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    CredF1,
    RepairMacroF1,
    RepairMicroF1,
    RepairMrr,
}

impl Metric {
    pub fn value(self, r: &EvalReport) -> f64 {
        match self {
            Metric::CredF1 => r.cred.f1,
            Metric::RepairMacroF1 => r.repair.macro_f1,
            Metric::RepairMicroF1 => r.repair.micro_f1,
            Metric::RepairMrr => r.repair.mrr,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::CredF1 => "cred_f1",
            Metric::RepairMacroF1 => "repair_macro_f1",
            Metric::RepairMicroF1 => "repair_micro_f1",
            Metric::RepairMrr => "repair_mrr",
        }
    }
}

/// Train, dev and test examples under one selection setting.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: SplitExamples,
    pub dev: SplitExamples,
    pub test: SplitExamples,
}

/// Selects sentences for all splits. Train and dev follow `opts`; the test
/// split always uses every eligible sentence so that sweeps over the
/// sentence count share one test set.
pub fn prepare_data(
    bundle: &DataBundle,
    catalog: &RelationCatalog,
    splits: &FrozenSplits,
    opts: &SelectionOptions,
    seed: u64,
) -> Result<PreparedData> {
    let test_opts = SelectionOptions {
        sentences: SentenceCount::All,
        ..*opts
    };
    Ok(PreparedData {
        train: prepare_split(bundle, catalog, splits, SplitName::Train, opts, seed)?,
        dev: prepare_split(bundle, catalog, splits, SplitName::Dev, opts, seed)?,
        test: prepare_split(bundle, catalog, splits, SplitName::Test, &test_opts, seed)?,
    })
}

/// Trains one model and reports it on the test split.
pub fn run_single(
    kind: ModelKind,
    cfg: &ModelConfig,
    data: &PreparedData,
    emb: &EmbeddingTable,
    catalog: &RelationCatalog,
    seed: u64,
) -> Result<EvalReport> {
    let trained = train_model(kind, cfg, &data.train, catalog.len(), emb, seed)?;
    evaluate(&trained.model, &data.test, emb, catalog)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub models: Vec<ModelKind>,
    /// Independent runs; run `i` uses seed `seed + i`.
    pub runs: usize,
    pub seed: u64,
    pub selection: SelectionOptions,
    pub model: ModelConfig,
    /// Tune each model on dev (on the first run's seed) before the runs.
    pub tune: bool,
    pub tune_metric: Metric,
    pub max_cycles: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: ModelKind::ALL.to_vec(),
            runs: 3,
            seed: 0,
            selection: SelectionOptions::default(),
            model: ModelConfig::default(),
            tune: false,
            tune_metric: Metric::CredF1,
            max_cycles: tuner::DEFAULT_MAX_CYCLES,
        }
    }
}

pub fn run_seeds(seed: u64, runs: usize) -> impl Iterator<Item = u64> {
    (0..runs as u64).map(move |i| seed.wrapping_add(i))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub model: String,
    pub task: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub task: String,
    pub metric: String,
    pub mean: f64,
    /// Largest minus smallest value over runs.
    pub spread: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Per-model tuning logs when tuning ran.
    pub tuning: Vec<(ModelKind, ModelConfig, Vec<tuner::TrialRecord>)>,
}

/// Mean and max−min spread of `values`.
pub fn mean_spread(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mean, hi - lo)
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String, String)> = Vec::new();
    for r in rows {
        let key = (r.model.clone(), r.task.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(model, task, metric)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.model == model && r.task == task && r.metric == metric)
                .map(|r| r.value)
                .collect();
            let (mean, spread) = mean_spread(&values);
            SummaryRow {
                model,
                task,
                metric,
                mean,
                spread,
                runs: values.len(),
            }
        })
        .collect()
}

/// Trains every configured model on train, optionally tunes it on dev, and
/// reports each run on test.
pub fn run_experiment(bundle: &DataBundle, splits: &FrozenSplits, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.models.is_empty() || cfg.runs == 0 {
        return Err(Error::Invalid("experiment needs at least one model and one run".into()));
    }
    for split in SplitName::ALL {
        if splits.positives(split).is_empty() || splits.negatives(split).is_empty() {
            return Err(Error::Invalid(format!(
                "split `{}` is missing or empty",
                split.as_str()
            )));
        }
    }
    let catalog = bundle.catalog_for(cfg.selection.frame_mode, cfg.selection.min_overlap)?;
    let emb = &bundle.embeddings;
    let mut result = ExperimentResult::default();
    let mut per_seed_data = Vec::new();
    for seed in run_seeds(cfg.seed, cfg.runs) {
        per_seed_data.push((seed, prepare_data(bundle, &catalog, splits, &cfg.selection, seed)?));
    }
    for &kind in &cfg.models {
        let model_cfg = if cfg.tune {
            let (seed, data) = &per_seed_data[0];
            let outcome = tuner::tune_model(
                kind,
                &cfg.model,
                data,
                emb,
                &catalog,
                cfg.tune_metric,
                cfg.max_cycles,
                *seed,
            )?;
            result.tuning.push((kind, outcome.config.clone(), outcome.log));
            outcome.config
        } else {
            cfg.model.clone()
        };
        for (seed, data) in &per_seed_data {
            log::info!("{kind}: run with seed {seed}");
            let report = run_single(kind, &model_cfg, data, emb, &catalog, *seed)?;
            for (task, metric, value) in report.rows() {
                result.rows.push(ResultRow {
                    model: kind.name().into(),
                    task: task.into(),
                    metric: metric.into(),
                    value,
                    seed: *seed,
                });
            }
        }
    }
    result.summary = summarize(&result.rows);
    Ok(result)
}

/// Serializes records as CSV with a header row.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T], header: &[&str]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Invalid(format!("CSV encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invalid(format!("CSV encoding failed: {e}")))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub const RESULT_HEADER: [&str; 5] = ["model", "task", "metric", "value", "seed"];
pub const SUMMARY_HEADER: [&str; 6] = ["model", "task", "metric", "mean", "spread", "runs"];

/// Plain-text table of summary rows.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<10} {:<12} {:<20} {:>8} {:>8}\n",
        "model", "task", "metric", "mean", "spread"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<12} {:<20} {:>8.4} {:>8.4}\n",
            r.model, r.task, r.metric, r.mean, r.spread
        ));
    }
    out
}

impl ExperimentResult {
    /// Writes `results.csv`, `summary.csv` and `summary.txt` (plus
    /// `tuning_<model>.csv` per tuned model) into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_csv(dir.join("results.csv"), &self.rows, &RESULT_HEADER)?;
        write_csv(dir.join("summary.csv"), &self.summary, &SUMMARY_HEADER)?;
        let txt = dir.join("summary.txt");
        fs::write(&txt, summary_table(&self.summary)).map_err(|e| Error::io(&txt, e))?;
        for (kind, _, log) in &self.tuning {
            tuner::write_log(dir.join(format!("tuning_{}.csv", kind.name())), log)?;
        }
        Ok(())
    }

    pub fn mean(&self, model: ModelKind, task: &str, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.model == model.name() && r.task == task && r.metric == metric)
            .map(|r| r.mean)
    }
}
