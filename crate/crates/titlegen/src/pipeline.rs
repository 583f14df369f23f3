//! The pipeline stages behind the command-line subcommands.
//!
//! Stages talk only through artifacts in the working directory:
//!
//! | stage            | reads                                   | writes |
//! |------------------|-----------------------------------------|--------|
//! | `ingest`         | `paths.corpus`                          | `corpus.jsonl`, `ingest_report.json` |
//! | `stats`          | `corpus.jsonl`                          | `stats.json`, `stats.txt` |
//! | `filter`         | `corpus.jsonl`                          | `filtered.jsonl`, `filter_report.json` |
//! | `split`          | `filtered.jsonl`                        | `split.json`, `{train,validation,test}.jsonl` |
//! | `build-vocab`    | `train.jsonl`                           | `vocab.txt` |
//! | `train`          | `vocab.txt`, `train.jsonl`, `validation.jsonl` | `model.ckpt`, `model.json`, `train_log.csv` |
//! | `generate`       | model, `vocab.txt`, `<split>.jsonl`     | `model_<split>.jsonl` |
//! | `baseline-tfidf` | `train.jsonl`, `<split>.jsonl`          | `tfidf.index`, `tfidf_<split>.jsonl` |
//! | `baseline-oracle`| `<split>.jsonl`                         | `oracle_<split>.jsonl` |
//! | `evaluate`       | `<system>_<split>.jsonl`, `<split>.jsonl` | `metrics_<system>_<split>.{json,txt}` |
//! | `report`         | every `metrics_*_<split>.json`          | `report.json`, `report.txt` |
//! | `gradcheck`      | nothing                                 | `gradcheck.json` |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use titlegen_core::baselines::{oracle_title, BaselineError, TfIdfDocument, TfIdfIndex};
use titlegen_core::corpus::{corpus_stats, filter_corpus, sample_fraction, split_chronological, CorpusError, DatasetSplit, QuestionPost, RejectionReason};
use titlegen_core::decode::{beam_decode, greedy_decode, Hypothesis, ModelScorer};
use titlegen_core::metrics::{evaluate_corpus, MetricReport};
use titlegen_core::model::{train, Dropout, Model, ModelConfig};
use titlegen_core::tensor::{grad_check, GradCheckConfig};
use titlegen_core::tokenizer::{encode_source_tokens, encode_target_tokens, Special, Tokenizer, Vocabulary};

use crate::checkpoint::{self, CheckpointMeta};
use crate::config::{RunConfig, Strategy};
use crate::dataset::{build_vocabulary, prepare_posts, tokenize_post};
use crate::error::AppError;
use crate::hash::{file_sha256, sha256_hex};
use crate::manifest::Workdir;
use crate::parallel::Rayon;
use crate::report::{comparison_table, metrics_table, stats_table};
use crate::{importer, index_file, jsonl, vocab_file};

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const STATS_JSON: &str = "stats.json";
pub const STATS_TXT: &str = "stats.txt";
pub const FILTERED: &str = "filtered.jsonl";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const SPLIT: &str = "split.json";
pub const VOCAB: &str = "vocab.txt";
pub const MODEL_STEM: &str = "model";
pub const CHECKPOINT: &str = "model.ckpt";
pub const CHECKPOINT_META: &str = "model.json";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const TFIDF_INDEX: &str = "tfidf.index";
pub const GRADCHECK: &str = "gradcheck.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }

    pub fn file(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(SplitName::Train),
            "validation" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            _ => Err(format!("unknown split {s:?}; expected train, validation or test")),
        }
    }
}

/// Producers of generated titles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Model,
    Tfidf,
    Oracle,
}

impl System {
    pub const ALL: [System; 3] = [System::Tfidf, System::Oracle, System::Model];

    pub fn as_str(self) -> &'static str {
        match self {
            System::Model => "model",
            System::Tfidf => "tfidf",
            System::Oracle => "oracle",
        }
    }

    pub fn generations(self, split: SplitName) -> String {
        format!("{}_{}.jsonl", self.as_str(), split)
    }

    pub fn metrics(self, split: SplitName) -> (String, String) {
        let stem = format!("metrics_{}_{}", self.as_str(), split);
        (format!("{stem}.json"), format!("{stem}.txt"))
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "model" => Ok(System::Model),
            "tfidf" => Ok(System::Tfidf),
            "oracle" => Ok(System::Oracle),
            _ => Err(format!("unknown system {s:?}; expected model, tfidf or oracle")),
        }
    }
}

/// One line of a generation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub post_id: u64,
    /// Tokens joined by single spaces.
    pub generated_title: String,
    /// Unnormalized log probability; absent for the baselines.
    pub log_prob: Option<f64>,
    /// Title positions holding tokens only the copy path can produce.
    pub copied_token_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source_sha256: String,
    pub posts: usize,
    pub non_questions: usize,
    /// `(row number, reason)` of unreadable rows in an XML dump.
    pub invalid_rows: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonCount {
    pub reason: RejectionReason,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_posts: usize,
    pub retained: usize,
    /// In constraint order, every reason listed.
    pub rejected: Vec<ReasonCount>,
    pub malformed: Vec<u64>,
    pub rejections: Vec<(u64, RejectionReason)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub fraction: usize,
    pub seed: u64,
    /// Train size before fraction sampling.
    pub full_train: usize,
    pub split: DatasetSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckSummary {
    pub passed: bool,
    pub tolerance: f64,
    pub eps: f64,
    pub parameters: usize,
    pub max_rel_error: f64,
    pub groups: Vec<GroupCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub system: System,
    pub split: SplitName,
    pub post_ids: Vec<u64>,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub split: SplitName,
    pub config_hash: String,
    pub vocabulary_sha256: Option<String>,
    pub checkpoint_sha256: Option<String>,
    pub systems: BTreeMap<String, MetricReport>,
}

/// Tokens for scoring: whitespace chunks that spell a special token stay
/// whole, everything else goes through the corpus tokenizer.
pub fn metric_tokens(text: &str, tokenizer: &Tokenizer) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if Special::ALL.iter().any(|s| s.surface() == chunk) {
            out.push(chunk.to_string());
        } else {
            out.extend(tokenizer.tokenize(chunk));
        }
    }
    out
}

fn check_unique(posts: &[QuestionPost]) -> Result<(), AppError> {
    let mut seen = BTreeSet::new();
    for p in posts {
        if !seen.insert(p.id) {
            return Err(CorpusError::DuplicateId(p.id).into());
        }
    }
    Ok(())
}

fn is_xml(path: &std::path::Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"))
}

/// Every stage, bound to one configuration and working directory.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub work: Workdir,
    pub tokenizer: Tokenizer,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        let work = Workdir::new(cfg.paths.workdir.clone(), cfg.hash());
        Pipeline {
            cfg,
            work,
            tokenizer: Tokenizer::default(),
        }
    }

    fn posts(&self, name: &str) -> Result<Vec<QuestionPost>, AppError> {
        jsonl::read(&self.work.input(name)?)
    }

    fn write_json<T: Serialize>(&self, stage: &str, name: &str, value: &T, inputs: &[&str]) -> Result<(), AppError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
        bytes.push(b'\n');
        self.work.write(stage, name, &bytes, inputs)
    }

    pub fn ingest(&self) -> Result<IngestReport, AppError> {
        self.work.ensure()?;
        let src = &self.cfg.paths.corpus;
        let raw = fs::read(src).map_err(AppError::io(src))?;
        let (mut posts, non_questions, invalid_rows) = if is_xml(src) {
            let out = importer::import(BufReader::new(raw.as_slice())).map_err(|e| AppError::format(src, e.to_string()))?;
            (out.posts, out.non_questions, out.invalid)
        } else {
            (jsonl::read(src)?, 0, Vec::new())
        };
        posts.sort_by_key(|p| p.id);
        check_unique(&posts)?;
        self.work.write("ingest", CORPUS, &jsonl::to_bytes(&posts), &[])?;
        let report = IngestReport {
            source_sha256: sha256_hex(&raw),
            posts: posts.len(),
            non_questions,
            invalid_rows,
        };
        self.write_json("ingest", INGEST_REPORT, &report, &[CORPUS])?;
        Ok(report)
    }

    pub fn stats(&self) -> Result<String, AppError> {
        let posts = self.posts(CORPUS)?;
        let report = corpus_stats(&posts, &self.tokenizer, self.cfg.metrics.overlap);
        self.write_json("stats", STATS_JSON, &report, &[CORPUS])?;
        let text = stats_table(&report);
        self.work.write("stats", STATS_TXT, text.as_bytes(), &[CORPUS])?;
        Ok(text)
    }

    pub fn filter(&self) -> Result<FilterReport, AppError> {
        let posts = self.posts(CORPUS)?;
        let out = filter_corpus(&posts, &self.cfg.filter, &self.tokenizer);
        self.work.write("filter", FILTERED, &jsonl::to_bytes(&out.retained), &[CORPUS])?;
        let report = FilterReport {
            input_posts: posts.len(),
            retained: out.retained.len(),
            rejected: out.histogram().into_iter().map(|(reason, count)| ReasonCount { reason, count }).collect(),
            malformed: out.malformed.clone(),
            rejections: out.rejected.clone(),
        };
        self.write_json("filter", FILTER_REPORT, &report, &[CORPUS])?;
        Ok(report)
    }

    pub fn split(&self) -> Result<SplitReport, AppError> {
        let posts = self.posts(FILTERED)?;
        let mut split = split_chronological(&posts, self.cfg.split.plan)?;
        let full_train = split.train.len();
        split.train = sample_fraction(&split.train, self.cfg.fraction, self.cfg.seed)?;
        let by_id: BTreeMap<u64, &QuestionPost> = posts.iter().map(|p| (p.id, p)).collect();
        let pick = |ids: &[u64]| ids.iter().map(|id| by_id[id].clone()).collect::<Vec<_>>();
        for (name, ids) in [(SplitName::Train, &split.train), (SplitName::Validation, &split.validation), (SplitName::Test, &split.test)] {
            self.work.write("split", &name.file(), &jsonl::to_bytes(&pick(ids)), &[FILTERED])?;
        }
        let report = SplitReport {
            fraction: self.cfg.fraction,
            seed: self.cfg.seed,
            full_train,
            split,
        };
        self.write_json("split", SPLIT, &report, &[FILTERED])?;
        Ok(report)
    }

    pub fn build_vocab(&self) -> Result<Vocabulary, AppError> {
        let train = SplitName::Train.file();
        let posts = self.posts(&train)?;
        let vocab = build_vocabulary(&posts, &self.tokenizer, self.cfg.filter.source_view(), self.cfg.vocab.max_size, self.cfg.vocab.min_count)?;
        self.work.write("build-vocab", VOCAB, &vocab_file::to_bytes(&vocab), &[&train])?;
        Ok(vocab)
    }

    fn vocab(&self) -> Result<Vocabulary, AppError> {
        vocab_file::read(&self.work.input(VOCAB)?)
    }

    fn model_config(&self, vocab: &Vocabulary) -> ModelConfig {
        ModelConfig {
            vocab_size: vocab.len(),
            ..self.cfg.model.clone()
        }
    }

    /// Trains from scratch; keeps the lowest-validation-loss parameters
    /// when a validation split exists and the final ones otherwise.
    pub fn train(&self) -> Result<CheckpointMeta, AppError> {
        let vocab = self.vocab()?;
        let mcfg = self.model_config(&vocab);
        let view = self.cfg.filter.source_view();
        let langs = self.cfg.languages();
        let (tr, va) = (SplitName::Train.file(), SplitName::Validation.file());
        let train_set: Vec<_> = prepare_posts(&self.posts(&tr)?, &langs, &vocab, &self.tokenizer, view, &mcfg)?.into_iter().map(|p| p.example).collect();
        let val_set: Vec<_> = prepare_posts(&self.posts(&va)?, &langs, &vocab, &self.tokenizer, view, &mcfg)?.into_iter().map(|p| p.example).collect();
        let mut model = Model::new(mcfg.clone())?;
        let outcome = train(&mut model, &train_set, &val_set, &self.cfg.train, &Rayon)?;

        let mut csv = String::from("step,epoch,lr,train_loss,val_loss\n");
        for r in &outcome.log {
            let val = r.val_loss.map_or_else(String::new, |v| v.to_string());
            csv.push_str(&format!("{},{},{},{},{}\n", r.step, r.epoch, r.lr, r.train_loss, val));
        }
        let (params, best_epoch, best_val_loss) = match outcome.best {
            Some((epoch, loss, params)) => (params, Some(epoch), Some(loss)),
            None => (model.params().clone(), None, None),
        };
        let meta = CheckpointMeta {
            format_version: checkpoint::VERSION,
            model: mcfg,
            train: self.cfg.train.clone(),
            vocab_sha256: file_sha256(&self.work.input(VOCAB)?)?,
            steps: outcome.steps,
            best_epoch,
            best_val_loss,
        };
        let inputs = [VOCAB, tr.as_str(), va.as_str()];
        self.work.write("train", TRAIN_LOG, csv.as_bytes(), &inputs)?;
        self.work.write("train", CHECKPOINT, &checkpoint::encode(&params), &inputs)?;
        self.write_json("train", CHECKPOINT_META, &meta, &inputs)?;
        Ok(meta)
    }

    pub fn load_model(&self) -> Result<(Model, Vocabulary), AppError> {
        let vocab = self.vocab()?;
        let (model, meta) = checkpoint::load(self.work.root(), MODEL_STEM)?;
        if meta.vocab_sha256 != file_sha256(&self.work.input(VOCAB)?)? {
            return Err(AppError::format(self.work.path(CHECKPOINT_META), "checkpoint was trained on a different vocabulary"));
        }
        Ok((model, vocab))
    }

    /// Decodes every post of `split` with the configured strategy.
    pub fn generate(&self, split: SplitName) -> Result<Vec<GenerationRecord>, AppError> {
        let (model, vocab) = self.load_model()?;
        let posts = self.posts(&split.file())?;
        let prepared = prepare_posts(&posts, &self.cfg.languages(), &vocab, &self.tokenizer, self.cfg.filter.source_view(), model.config())?;
        let decode = &self.cfg.decode;
        let records = prepared
            .par_iter()
            .map(|p| {
                let scorer = ModelScorer::new(&model, &p.example.source)?;
                let best: Hypothesis = match decode.strategy {
                    Strategy::Greedy => greedy_decode(&scorer, decode.max_len)?,
                    Strategy::Beam => beam_decode(&scorer, &decode.decode_config())?.into_iter().next().expect("beam search returns a hypothesis"),
                };
                Ok(GenerationRecord {
                    post_id: p.id,
                    generated_title: best.title(&p.example.source, &vocab),
                    log_prob: Some(best.log_prob),
                    copied_token_positions: best.copied_token_positions(vocab.len()),
                })
            })
            .collect::<Result<Vec<_>, AppError>>()?;
        let inputs = [CHECKPOINT, CHECKPOINT_META, VOCAB];
        let file = split.file();
        let mut all = inputs.to_vec();
        all.push(&file);
        self.work.write("generate", &System::Model.generations(split), &jsonl::to_bytes(&records), &all)?;
        Ok(records)
    }

    fn tfidf_document(&self, post: &QuestionPost) -> Result<TfIdfDocument, AppError> {
        let (body, _) = tokenize_post(post, &self.tokenizer, self.cfg.filter.source_view())?;
        Ok(TfIdfDocument {
            id: post.id,
            title: post.title.clone(),
            tokens: body,
        })
    }

    /// Indexes the training bodies and answers each post of `split` with
    /// the title of its most similar training post.
    pub fn baseline_tfidf(&self, split: SplitName) -> Result<Vec<GenerationRecord>, AppError> {
        let train_file = SplitName::Train.file();
        let docs = self.posts(&train_file)?.iter().map(|p| self.tfidf_document(p)).collect::<Result<Vec<_>, _>>()?;
        let index = TfIdfIndex::build(&docs)?;
        self.work.write("baseline-tfidf", TFIDF_INDEX, &index_file::encode(&index), &[&train_file])?;
        let file = split.file();
        let mut records = Vec::new();
        for post in self.posts(&file)? {
            let query = self.tfidf_document(&post)?;
            let title = match index.retrieve(&query.tokens) {
                Ok(hit) => metric_tokens(&hit.title, &self.tokenizer).join(" "),
                Err(BaselineError::EmptyQuery) => String::new(),
                Err(e) => return Err(e.into()),
            };
            records.push(GenerationRecord {
                post_id: post.id,
                generated_title: title,
                log_prob: None,
                copied_token_positions: Vec::new(),
            });
        }
        self.work.write("baseline-tfidf", &System::Tfidf.generations(split), &jsonl::to_bytes(&records), &[TFIDF_INDEX, &file])?;
        Ok(records)
    }

    /// Keeps the title tokens that occur in the body.
    pub fn baseline_oracle(&self, split: SplitName) -> Result<Vec<GenerationRecord>, AppError> {
        let file = split.file();
        let mut records = Vec::new();
        for post in self.posts(&file)? {
            let (body, title) = tokenize_post(&post, &self.tokenizer, self.cfg.filter.source_view())?;
            records.push(GenerationRecord {
                post_id: post.id,
                generated_title: oracle_title(&title, &body).join(" "),
                log_prob: None,
                copied_token_positions: Vec::new(),
            });
        }
        self.work.write("baseline-oracle", &System::Oracle.generations(split), &jsonl::to_bytes(&records), &[&file])?;
        Ok(records)
    }

    /// Scores `system`'s generations for `split` against the reference
    /// titles. Generations must cover the split's posts in order.
    pub fn evaluate(&self, system: System, split: SplitName) -> Result<MetricsArtifact, AppError> {
        let gen_file = system.generations(split);
        let gen_path = self.work.input(&gen_file)?;
        let records: Vec<GenerationRecord> = jsonl::read(&gen_path)?;
        let file = split.file();
        let posts = self.posts(&file)?;
        if records.len() != posts.len() || records.iter().zip(&posts).any(|(r, p)| r.post_id != p.id) {
            return Err(AppError::format(gen_path, format!("generations do not match the posts of {file}")));
        }
        let langs = self.cfg.languages();
        let candidates: Vec<Vec<String>> = records.iter().map(|r| metric_tokens(&r.generated_title, &self.tokenizer)).collect();
        let references: Vec<Vec<String>> = posts.iter().map(|p| metric_tokens(&p.title, &self.tokenizer)).collect();
        let labels: Vec<String> = posts.iter().map(|p| p.language(&langs).unwrap_or(crate::dataset::OTHER_LANGUAGE).to_string()).collect();
        let report = evaluate_corpus(&candidates, &references, Some(&labels), self.cfg.metrics.rouge_l)?;
        let artifact = MetricsArtifact {
            system,
            split,
            post_ids: posts.iter().map(|p| p.id).collect(),
            report,
        };
        let (json, txt) = system.metrics(split);
        self.write_json("evaluate", &json, &artifact, &[&gen_file, &file])?;
        self.work.write("evaluate", &txt, metrics_table(&artifact.report).as_bytes(), &[&gen_file, &file])?;
        Ok(artifact)
    }

    /// Side-by-side table of every system evaluated on `split`.
    pub fn report(&self, split: SplitName) -> Result<String, AppError> {
        let mut systems = BTreeMap::new();
        let mut inputs = Vec::new();
        for s in System::ALL {
            let (json, _) = s.metrics(split);
            if self.work.path(&json).is_file() {
                let a: MetricsArtifact = jsonl::read_json(&self.work.path(&json))?;
                systems.insert(s.as_str().to_string(), a.report);
                inputs.push(json);
            }
        }
        if systems.is_empty() {
            return Err(AppError::MissingArtifact(self.work.path(&System::Model.metrics(split).0)));
        }
        let manifest = self.work.manifest()?;
        let report = ComparisonReport {
            split,
            config_hash: self.cfg.hash(),
            vocabulary_sha256: manifest.sha(VOCAB).map(String::from),
            checkpoint_sha256: manifest.sha(CHECKPOINT).map(String::from),
            systems,
        };
        let order: Vec<&str> = System::ALL.iter().map(|s| s.as_str()).collect();
        let mut text = format!("split: {split}\nconfig: {}\n", report.config_hash);
        if let Some(v) = &report.vocabulary_sha256 {
            text.push_str(&format!("vocabulary: {v}\n"));
        }
        if let Some(c) = &report.checkpoint_sha256 {
            text.push_str(&format!("checkpoint: {c}\n"));
        }
        text.push('\n');
        text.push_str(&comparison_table(&report.systems, &order));
        let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        self.write_json("report", REPORT_JSON, &report, &inputs)?;
        self.work.write("report", REPORT_TXT, text.as_bytes(), &inputs)?;
        Ok(text)
    }

    /// Finite-difference check of every parameter of a small model
    /// (d_model 16, two encoder and two decoder layers, dropout off).
    pub fn gradcheck(&self) -> Result<GradCheckSummary, AppError> {
        self.work.ensure()?;
        let summary = gradcheck_toy(self.cfg.model.copy_enabled, self.cfg.seed)?;
        self.write_json("gradcheck", GRADCHECK, &summary, &[])?;
        if !summary.passed {
            let worst = summary.groups.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)).expect("model has parameters");
            return Err(AppError::GradCheck {
                group: worst.name.clone(),
                error: worst.max_rel_error,
            });
        }
        Ok(summary)
    }
}

/// The toy gradient check shared by the `gradcheck` stage and the tests.
pub fn gradcheck_toy(copy_enabled: bool, seed: u64) -> Result<GradCheckSummary, AppError> {
    let words = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let vocab = Vocabulary::build([words("how to read a json file in java and parse the map")], 64, 1)?;
    let cfg = ModelConfig {
        vocab_size: vocab.len(),
        d_model: 16,
        n_heads: 2,
        n_encoder_layers: 2,
        n_decoder_layers: 2,
        feedforward_dim: 32,
        dropout_prob: 0.0,
        max_source_len: 16,
        max_target_len: 10,
        copy_enabled,
        seed,
        init_std: 0.3,
        layer_norm_eps: 1e-5,
    };
    let src = encode_source_tokens(words("read the zork json file in java"), &vocab, cfg.max_source_len)?;
    let tgt = encode_target_tokens(words("how to read zork json"), &vocab, cfg.max_target_len)?;
    let model = Model::new(cfg)?;
    let ex = titlegen_core::model::Example::new(&src, &tgt, vocab.len(), copy_enabled)?;
    let gc = GradCheckConfig::default();
    let report = grad_check(model.params(), |t| model.example_loss(t, &ex, &mut Dropout::off(), 0.0), &gc)?;
    Ok(GradCheckSummary {
        passed: report.passed(),
        tolerance: report.tol,
        eps: gc.eps,
        parameters: model.num_parameters(),
        max_rel_error: report.max_rel_error(),
        groups: report
            .groups
            .iter()
            .map(|g| GroupCheck {
                name: g.name.clone(),
                checked: g.checked,
                max_rel_error: g.max_rel_error,
                max_abs_error: g.max_abs_error,
            })
            .collect(),
    })
}
