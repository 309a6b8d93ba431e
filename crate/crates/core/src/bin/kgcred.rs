use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use kgcred::catalog::FrameMode;
use kgcred::corpus::{load_facts, to_jsonl, DEFAULT_FRACTIONS};
use kgcred::eval::{
    evaluate, gen_synthetic, prepare_data, run_experiment, train_model, write_csv, ExperimentConfig, Metric,
    ModelConfig, ModelKind, ResultRow, SynthConfig, TrainedModel, RESULT_HEADER,
};
use kgcred::pipeline::{freeze_negatives, prepare_split, DataBundle, FrozenSplits, SelectionOptions, SplitName};
use kgcred::relevance::{FrameFilter, RelevanceFlags, SentenceCount};
use kgcred::tuner::{self, Ablation, AblationConfig};
use kgcred::{Error, Result};

#[derive(Parser)]
#[command(
    name = "kgcred",
    version,
    about = "Fact credibility and relation repair from textual provenance"
)]
struct Cli {
    /// Log level (error, warn, info, debug, trace); RUST_LOG overrides.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a data directory and write corpus statistics as JSON.
    Ingest(IngestArgs),
    /// Split the facts and freeze one sampled negative per positive.
    SampleNegatives(SampleArgs),
    /// Train a model; writes model.bin, loss.csv (per-epoch loss, or final LR
    /// objectives) and the resolved config.toml.
    Train(TrainArgs),
    /// Score a saved model on one split; writes report.csv and per_class.csv.
    Eval(EvalArgs),
    /// Per-fact verdicts as JSON lines.
    Predict(PredictArgs),
    /// Coordinate-descent tuning on the dev split.
    Tune(TuneArgs),
    /// Ablation sweeps.
    Ablate(AblateArgs),
    /// Train, optionally tune, and report several models over multiple runs.
    Experiment(ExperimentArgs),
    /// Generate a synthetic data directory.
    GenSynth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Data directory (catalog.json, facts.jsonl, documents.jsonl, embeddings.txt, ...).
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Directory written by `sample-negatives`.
    #[arg(long)]
    splits: PathBuf,
}

/// Overrides for the config file; flags win.
#[derive(Args, Default)]
struct Overrides {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    frame_mode: Option<FrameMode>,
    #[arg(long, value_enum)]
    frame_filter: Option<FrameFilter>,
    /// Sentences per fact: a count or `all`.
    #[arg(long)]
    sentences: Option<SentenceCount>,
    /// Hidden layers of the MLP.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// L1 penalty of the LR baselines.
    #[arg(long)]
    penalty: Option<f64>,
    /// Append relevance flags to LR features.
    #[arg(long)]
    lr_flags: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "expert")]
    frame_mode: FrameMode,
    /// Also write per-fact relevance flag counts as CSV.
    #[arg(long)]
    dump_flags: Option<PathBuf>,
    /// Statistics JSON output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train, dev and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    fractions: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    splits: SplitArgs,
    #[arg(long, default_value = "mlp")]
    model: ModelKind,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    splits: SplitArgs,
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long, default_value = "test")]
    split: SplitName,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model_file: PathBuf,
    /// Facts to score, JSON lines.
    #[arg(long)]
    facts: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verdicts output, JSON lines.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    splits: SplitArgs,
    #[arg(long, default_value = "mlp")]
    model: ModelKind,
    #[arg(long, value_enum, default_value = "cred-f1")]
    metric: Metric,
    #[arg(long, default_value_t = tuner::DEFAULT_MAX_CYCLES)]
    max_cycles: usize,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for tuning_log.csv and best.toml.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(value_enum)]
    which: Ablation,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    splits: SplitArgs,
    /// Models to sweep (ignored by the depth sweep).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    /// Frame filters for the sentence sweep.
    #[arg(long, value_enum, value_delimiter = ',')]
    filters: Option<Vec<FrameFilter>>,
    /// Sentence counts for the sentence sweep.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<SentenceCount>>,
    /// Depths for the depth sweep.
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    splits: SplitArgs,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long)]
    runs: Option<usize>,
    /// Tune each model on dev first.
    #[arg(long)]
    tune: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    relations: usize,
    #[arg(long, default_value_t = 200)]
    facts_per_relation: usize,
    #[arg(long, default_value_t = 200)]
    vocab_size: usize,
    #[arg(long, default_value_t = 1.0)]
    signal_strength: f64,
    #[arg(long, default_value_t = 32)]
    embedding_dim: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Output data directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentSection {
    models: Option<Vec<ModelKind>>,
    runs: Option<usize>,
    tune: bool,
    tune_metric: Metric,
    max_cycles: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AblationSection {
    models: Option<Vec<ModelKind>>,
    runs: Option<usize>,
    ks: Option<Vec<SentenceCount>>,
    filters: Option<Vec<FrameFilter>>,
    depths: Option<Vec<usize>>,
}

/// Config file layout.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    selection: SelectionOptions,
    model: ModelConfig,
    experiment: ExperimentSection,
    ablation: AblationSection,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                toml::from_str::<RunConfig>(&text).map_err(|e| Error::Parse {
                    context: path.display().to_string(),
                    message: e.message().to_string(),
                })?
            }
            None => RunConfig::default(),
        };
        let sel = &mut cfg.selection;
        if let Some(v) = self.frame_mode {
            sel.frame_mode = v;
        }
        if let Some(v) = self.frame_filter {
            sel.frame_filter = v;
        }
        if let Some(v) = self.sentences {
            sel.sentences = v;
        }
        let m = &mut cfg.model;
        if let Some(v) = self.depth {
            m.depth = v;
        }
        if let Some(v) = self.penalty {
            m.penalty = v;
        }
        if self.lr_flags {
            m.lr_flags = true;
        }
        let t = &mut m.train;
        if let Some(v) = self.lr {
            t.lr = v;
        }
        if let Some(v) = self.momentum {
            t.momentum = v;
        }
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.l1 {
            t.l1_lambda = v;
        }
        if let Some(v) = self.dropout {
            t.dropout = v;
        }
        t.validate()?;
        if m.depth == 0 {
            return Err(Error::Invalid("depth must be at least 1".into()));
        }
        if m.penalty.is_nan() || m.penalty < 0.0 {
            return Err(Error::Invalid(format!(
                "penalty must be non-negative, got {}",
                m.penalty
            )));
        }
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("config serializes to TOML")
}

fn load_splits(bundle: &DataBundle, dir: &Path) -> Result<FrozenSplits> {
    let splits = FrozenSplits::load(dir, &bundle.catalog)?;
    for split in SplitName::ALL {
        bundle.check_documents(splits.positives(split))?;
        bundle.check_documents(splits.negatives(split))?;
    }
    Ok(splits)
}

#[derive(Serialize)]
struct CorpusStats {
    relations: usize,
    facts: usize,
    documents: usize,
    sentences: usize,
    embedding_dim: usize,
    embedding_words: usize,
    alias_entries: usize,
    paraphrase_entries: usize,
    facts_with_relevant_sentences: usize,
    relevant_sentences: usize,
    flag_counts: BTreeMap<&'static str, usize>,
}

#[derive(Serialize)]
struct FlagRow<'a> {
    subject: &'a str,
    relation: &'a str,
    object: &'a str,
    doc_id: &'a str,
    relevant: usize,
    subject_match: usize,
    subject_alias: usize,
    object_match: usize,
    object_alias: usize,
    object_paraphrase: usize,
    predicate_alias: usize,
    frame_trigger: usize,
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let bundle = DataBundle::load(&a.data.data)?;
    let catalog = bundle.catalog_for(a.frame_mode, 1)?;
    let ctx = bundle.relevance(&catalog, a.frame_mode);
    let mut counts = [0usize; RelevanceFlags::COUNT];
    let mut covered = 0;
    let mut total_relevant = 0;
    let mut rows = Vec::new();
    for f in &bundle.facts {
        let doc = bundle.documents.require(&f.doc_id)?;
        let relevant = ctx.relevant_sentences(doc, f, FrameFilter::AllRelevant);
        let mut per_fact = [0usize; RelevanceFlags::COUNT];
        for s in &relevant {
            for (c, on) in per_fact.iter_mut().zip(s.flags.to_array()) {
                *c += usize::from(on);
            }
        }
        for (t, c) in counts.iter_mut().zip(per_fact) {
            *t += c;
        }
        covered += usize::from(!relevant.is_empty());
        total_relevant += relevant.len();
        rows.push(FlagRow {
            subject: &f.subject,
            relation: &f.relation,
            object: &f.object,
            doc_id: &f.doc_id,
            relevant: relevant.len(),
            subject_match: per_fact[0],
            subject_alias: per_fact[1],
            object_match: per_fact[2],
            object_alias: per_fact[3],
            object_paraphrase: per_fact[4],
            predicate_alias: per_fact[5],
            frame_trigger: per_fact[6],
        });
    }
    let stats = CorpusStats {
        relations: bundle.catalog.num_real(),
        facts: bundle.facts.len(),
        documents: bundle.documents.len(),
        sentences: bundle.documents.num_sentences(),
        embedding_dim: bundle.embeddings.dimension(),
        embedding_words: bundle.embeddings.len(),
        alias_entries: bundle.aliases.len(),
        paraphrase_entries: bundle.paraphrases.len(),
        facts_with_relevant_sentences: covered,
        relevant_sentences: total_relevant,
        flag_counts: RelevanceFlags::NAMES.into_iter().zip(counts).collect(),
    };
    write_file(
        &a.out,
        serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n",
    )?;
    if let Some(path) = &a.dump_flags {
        let mut header = vec!["subject", "relation", "object", "doc_id", "relevant"];
        header.extend(RelevanceFlags::NAMES);
        write_csv(path, &rows, &header)?;
    }
    Ok(())
}

fn sample_negatives(a: &SampleArgs) -> Result<()> {
    let bundle = DataBundle::load(&a.data.data)?;
    let fractions = match &a.fractions {
        Some(v) => [v[0], v[1], v[2]],
        None => DEFAULT_FRACTIONS,
    };
    let splits = freeze_negatives(&bundle, fractions, a.seed)?;
    splits.write(&a.out)
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

fn train(a: &TrainArgs) -> Result<()> {
    let mut cfg = a.overrides.resolve()?;
    cfg.model.train.seed = a.seed;
    let bundle = DataBundle::load(&a.data.data)?;
    let splits = load_splits(&bundle, &a.splits.splits)?;
    let catalog = bundle.catalog_for(cfg.selection.frame_mode, cfg.selection.min_overlap)?;
    let examples = prepare_split(&bundle, &catalog, &splits, SplitName::Train, &cfg.selection, a.seed)?;
    let trained = train_model(
        a.model,
        &cfg.model,
        &examples,
        catalog.len(),
        &bundle.embeddings,
        a.seed,
    )?;
    create_dir(&a.out)?;
    trained.model.save(a.out.join("model.bin"))?;
    match a.model {
        ModelKind::Mlp => {
            let loss: Vec<LossRow> = trained
                .loss_trace
                .iter()
                .enumerate()
                .map(|(i, &loss)| LossRow { epoch: i + 1, loss })
                .collect();
            write_csv(a.out.join("loss.csv"), &loss, &["epoch", "loss"])?;
        }
        ModelKind::Lr(_) => {
            let rows: Vec<(&str, f64)> = ["credibility", "repair"]
                .into_iter()
                .zip(trained.loss_trace.iter().copied())
                .collect();
            write_csv(a.out.join("loss.csv"), &rows, &["task", "objective"])?;
        }
    }
    write_file(&a.out.join("config.toml"), to_toml(&cfg))
}

#[derive(Serialize)]
struct PerClassRow<'a> {
    class: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: usize,
}

fn eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let bundle = DataBundle::load(&a.data.data)?;
    let splits = load_splits(&bundle, &a.splits.splits)?;
    let catalog = bundle.catalog_for(cfg.selection.frame_mode, cfg.selection.min_overlap)?;
    let model = TrainedModel::load(&a.model_file, Some(catalog.len()))?;
    let examples = prepare_split(&bundle, &catalog, &splits, a.split, &cfg.selection, a.seed)?;
    let report = evaluate(&model, &examples, &bundle.embeddings, &catalog)?;
    let rows: Vec<ResultRow> = report
        .rows()
        .into_iter()
        .map(|(task, metric, value)| ResultRow {
            model: model.kind().name().into(),
            task: task.into(),
            metric: metric.into(),
            value,
            seed: a.seed,
        })
        .collect();
    write_csv(a.out.join("report.csv"), &rows, &RESULT_HEADER)?;
    let per_class: Vec<PerClassRow> = report
        .repair
        .per_class
        .iter()
        .enumerate()
        .map(|(i, s)| PerClassRow {
            class: catalog.name(i),
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            support: s.support,
        })
        .collect();
    write_csv(
        a.out.join("per_class.csv"),
        &per_class,
        &["class", "precision", "recall", "f1", "support"],
    )
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    subject: &'a str,
    relation: &'a str,
    object: &'a str,
    doc_id: &'a str,
    /// `ok`, or `no_provenance` when no sentence qualified.
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    credible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cred_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repair: Option<&'a str>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    unrepairable: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    ranking: Vec<&'a str>,
}

fn predict(a: &PredictArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let bundle = DataBundle::load(&a.data.data)?;
    let catalog = bundle.catalog_for(cfg.selection.frame_mode, cfg.selection.min_overlap)?;
    let model = TrainedModel::load(&a.model_file, Some(catalog.len()))?;
    let facts = load_facts(&a.facts, &catalog)?;
    bundle.check_documents(&facts)?;
    let ctx = bundle.relevance(&catalog, cfg.selection.frame_mode);
    let cannot = catalog.cannot_repair_index();
    let mut records = Vec::with_capacity(facts.len());
    for (i, f) in facts.iter().enumerate() {
        let doc = bundle.documents.require(&f.doc_id)?;
        let seed = kgcred::seeds::indexed(a.seed, "predict", i as u64);
        let sentences = ctx.select_sentences(doc, f, cfg.selection.sentences, seed, cfg.selection.frame_filter);
        let mut rec = VerdictRecord {
            subject: &f.subject,
            relation: &f.relation,
            object: &f.object,
            doc_id: &f.doc_id,
            status: "no_provenance",
            credible: None,
            cred_score: None,
            repair: None,
            unrepairable: false,
            ranking: Vec::new(),
        };
        if !sentences.is_empty() {
            let v = model.verdict(&sentences, &bundle.embeddings, cannot)?;
            rec.status = "ok";
            rec.credible = Some(v.credible);
            rec.cred_score = Some(v.cred_score);
            rec.repair = v.repair.map(|c| catalog.name(c));
            rec.unrepairable = v.unrepairable;
            rec.ranking = v.ranking.iter().map(|&c| catalog.name(c)).collect();
        }
        records.push(rec);
    }
    write_file(&a.out, to_jsonl(&records))
}

fn tune(a: &TuneArgs) -> Result<()> {
    let mut cfg = a.overrides.resolve()?;
    cfg.model.train.seed = a.seed;
    let bundle = DataBundle::load(&a.data.data)?;
    let splits = load_splits(&bundle, &a.splits.splits)?;
    let catalog = bundle.catalog_for(cfg.selection.frame_mode, cfg.selection.min_overlap)?;
    let data = prepare_data(&bundle, &catalog, &splits, &cfg.selection, a.seed)?;
    let outcome = tuner::tune_model(
        a.model,
        &cfg.model,
        &data,
        &bundle.embeddings,
        &catalog,
        a.metric,
        a.max_cycles,
        a.seed,
    )?;
    create_dir(&a.out)?;
    tuner::write_log(a.out.join("tuning_log.csv"), &outcome.log)?;
    let best = RunConfig {
        model: outcome.config,
        ..cfg
    };
    write_file(&a.out.join("best.toml"), to_toml(&best))
}

fn ablate(a: &AblateArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let bundle = DataBundle::load(&a.data.data)?;
    let splits = load_splits(&bundle, &a.splits.splits)?;
    let defaults = AblationConfig::default();
    let sec = &cfg.ablation;
    let ab = AblationConfig {
        models: a
            .models
            .clone()
            .or_else(|| sec.models.clone())
            .unwrap_or(defaults.models),
        runs: a.runs.or(sec.runs).unwrap_or(defaults.runs),
        seed: a.seed,
        model: cfg.model.clone(),
        selection: cfg.selection,
        ks: a.ks.clone().or_else(|| sec.ks.clone()).unwrap_or(defaults.ks),
        filters: a
            .filters
            .clone()
            .or_else(|| sec.filters.clone())
            .unwrap_or(defaults.filters),
        depths: a
            .depths
            .clone()
            .or_else(|| sec.depths.clone())
            .unwrap_or(defaults.depths),
    };
    let rows = tuner::run_ablation(a.which, &bundle, &splits, &ab)?;
    tuner::write_ablation(&a.out, &format!("ablate_{}", a.which.as_str()), &rows)
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let bundle = DataBundle::load(&a.data.data)?;
    let splits = load_splits(&bundle, &a.splits.splits)?;
    let defaults = ExperimentConfig::default();
    let sec = &cfg.experiment;
    let ex = ExperimentConfig {
        models: a
            .models
            .clone()
            .or_else(|| sec.models.clone())
            .unwrap_or(defaults.models),
        runs: a.runs.or(sec.runs).unwrap_or(defaults.runs),
        seed: a.seed,
        selection: cfg.selection,
        model: cfg.model.clone(),
        tune: a.tune || sec.tune,
        tune_metric: sec.tune_metric,
        max_cycles: sec.max_cycles.unwrap_or(defaults.max_cycles),
    };
    let result = run_experiment(&bundle, &splits, &ex)?;
    result.write(&a.out)?;
    print!("{}", kgcred::eval::summary_table(&result.summary));
    Ok(())
}

fn gen_synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        num_relations: a.relations,
        facts_per_relation: a.facts_per_relation,
        vocab_size: a.vocab_size,
        signal_strength: a.signal_strength,
        embedding_dim: a.embedding_dim,
        seed: a.seed,
        ..Default::default()
    };
    gen_synthetic(&cfg)?.write(&a.out)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::SampleNegatives(a) => sample_negatives(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::Tune(a) => tune(a),
        Command::Ablate(a) => ablate(a),
        Command::Experiment(a) => experiment(a),
        Command::GenSynth(a) => gen_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = if e.is_data_error() { ("data", 2) } else { ("runtime", 3) };
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{class}]: {msg}");
            ExitCode::from(code)
        }
    }
}
