//! Train, classify, reduce and evaluate over directory corpora.
//!
//! Each `cmd_*` function is what the command-line front end runs; the
//! in-memory counterparts (`train`, `reduce`, `evaluate`) take loaded data
//! and are used by tests. Output files are written to a temporary sibling
//! and renamed into place.

mod model;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{ClassReduction, ModelFile, ReductionOutcome, ReductionSet, TrainOptions, FORMAT_VERSION};
pub use synthetic::{class_dir_name, gen_synthetic, SynthOptions, SIGNAL_SHARE};

use crate::bayes::{self, BayesError};
use crate::centroid::{self, dataset_centroids, CentroidError};
use crate::corpus::{self, CorpusError, Document, LabeledDataset};
use crate::ga::{self, ClassProblem, GaConfig, GaError};
use crate::kl::KlError;
use crate::pc::{self, build_class_model, PcError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Centroid(#[from] CentroidError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Kl(#[from] KlError),
    #[error("class `{class}`: {source}")]
    Pc {
        class: String,
        #[source]
        source: PcError,
    },
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("class `{0}` needs at least two documents to split")]
    TooFewDocs(String),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for usage errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// Writes `contents` to a temporary sibling of `path` and renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    ModelFile::from_json(&bytes)
}

// ---------------------------------------------------------------------------
// train

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSummary {
    pub class: String,
    pub docs: usize,
    pub unique_wordforms: usize,
    pub components: usize,
    pub iterations: usize,
    /// Components that hit the iteration budget before the tolerance.
    pub unconverged: usize,
    pub rank_deficient: bool,
}

impl fmt::Display for ClassSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: docs={} wordforms={} components={} iterations={} unconverged={}{}",
            self.class,
            self.docs,
            self.unique_wordforms,
            self.components,
            self.iterations,
            self.unconverged,
            if self.rank_deficient { " (rank-deficient)" } else { "" }
        )
    }
}

/// Builds centroids, the Bayes model and per-class component models.
pub fn train(dataset: &LabeledDataset, opts: &TrainOptions) -> Result<(ModelFile, Vec<ClassSummary>), HarnessError> {
    if opts.components == 0 {
        return Err(HarnessError::Usage("component count must be at least 1".into()));
    }
    dataset.validate()?;
    let centroids = dataset_centroids(dataset)?;
    let bayes = bayes::fit_bayes(dataset, opts.smoothing)?;
    let mut class_models = Vec::with_capacity(dataset.classes.len());
    let mut summaries = Vec::with_capacity(dataset.classes.len());
    for (class, c) in dataset.classes.iter().zip(&centroids) {
        let docs = dataset.class_documents(&class.id);
        let m = opts.components.min(docs.len());
        let model = build_class_model(&class.id, &docs, m, &opts.kl).map_err(|source| HarnessError::Pc {
            class: class.id.clone(),
            source,
        })?;
        summaries.push(ClassSummary {
            class: class.id.clone(),
            docs: docs.len(),
            unique_wordforms: c.support,
            components: model.basis.len(),
            iterations: model.basis.iterations.iter().sum(),
            unconverged: model.basis.converged.iter().filter(|c| !**c).count(),
            rank_deficient: model.basis.rank_deficient,
        });
        class_models.push(model);
    }
    let model = ModelFile {
        format_version: FORMAT_VERSION,
        train_config: *opts,
        vocabulary: dataset.vocabulary.words().to_vec(),
        centroids,
        bayes,
        class_models,
        ga_masks: None,
    };
    Ok((model, summaries))
}

pub fn cmd_train(corpus_dir: &Path, out_model: &Path, opts: &TrainOptions) -> Result<Vec<ClassSummary>, HarnessError> {
    let dataset = corpus::load_corpus(corpus_dir)?;
    let (model, summary) = train(&dataset, opts)?;
    write_atomic(out_model, model.to_json()?.as_bytes())?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// classify

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pc,
    Cosine,
    Bayes,
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pc" => Ok(Method::Pc),
            "cosine" => Ok(Method::Cosine),
            "bayes" => Ok(Method::Bayes),
            other => Err(HarnessError::Usage(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pc => "pc",
            Method::Cosine => "cosine",
            Method::Bayes => "bayes",
        })
    }
}

/// Outcome for one query document.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub winner: Option<String>,
    pub scores: BTreeMap<String, f64>,
    /// `EMPTY` for documents without known wordforms, `ALL_NULL` when no
    /// class subspace sees the query.
    pub diagnostic: Option<&'static str>,
}

impl Prediction {
    fn failed(diagnostic: &'static str) -> Self {
        Self {
            winner: None,
            scores: BTreeMap::new(),
            diagnostic: Some(diagnostic),
        }
    }
}

/// Scores raw counts with the chosen method. Counts must be over the
/// model vocabulary.
pub fn predict(model: &ModelFile, counts: &corpus::SparseVector, method: Method) -> Prediction {
    let unit = match corpus::normalize_counts(counts) {
        Ok(u) => u,
        Err(_) => return Prediction::failed("EMPTY"),
    };
    match method {
        Method::Cosine => {
            let scores = centroid::similarities(&unit, &model.centroids);
            let winner = centroid::cosine_classify(&unit, &model.centroids)
                .ok()
                .map(str::to_owned);
            Prediction {
                winner,
                scores,
                diagnostic: None,
            }
        }
        Method::Bayes => {
            let scores = bayes::posterior(&model.bayes, counts);
            let winner = bayes::bayes_classify(&model.bayes, counts).ok().map(str::to_owned);
            Prediction {
                winner,
                scores,
                diagnostic: None,
            }
        }
        Method::Pc => match pc::classify(&unit, &model.class_models) {
            Ok(r) => Prediction {
                winner: Some(r.winner),
                scores: r.distances,
                diagnostic: None,
            },
            Err(_) => Prediction::failed("ALL_NULL"),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyLine {
    pub doc_id: String,
    pub prediction: Prediction,
}

fn format_score(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_owned()
    } else {
        format!("{v:.6}")
    }
}

impl fmt::Display for ClassifyLine {
    /// `doc-id <TAB> winner <TAB> class=score ... <TAB> diagnostic`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.prediction;
        let scores = p
            .scores
            .iter()
            .map(|(c, v)| format!("{c}={}", format_score(*v)))
            .collect::<Vec<_>>()
            .join(" ");
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.doc_id,
            p.winner.as_deref().unwrap_or("-"),
            scores,
            p.diagnostic.unwrap_or("OK")
        )
    }
}

/// Classifies one file or every `*.txt` file below a directory. Lines are
/// ordered by document id (relative path without extension).
pub fn cmd_classify(model_path: &Path, input: &Path, method: Method) -> Result<Vec<ClassifyLine>, HarnessError> {
    let model = load_model(model_path)?;
    let vocab = model.vocabulary()?;
    let files: Vec<(String, PathBuf)> = if input.is_dir() {
        corpus::text_files(input)?
            .into_iter()
            .map(|p| {
                let rel = p.strip_prefix(input).unwrap_or(&p).with_extension("");
                (rel.to_string_lossy().replace('\\', "/"), p)
            })
            .collect()
    } else {
        let id = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        vec![(id, input.to_path_buf())]
    };
    let mut lines = Vec::with_capacity(files.len());
    for (doc_id, path) in files {
        let text = corpus::read_text(&path)?;
        let counts = corpus::count_known(&corpus::tokenize(&text), &vocab);
        lines.push(ClassifyLine {
            doc_id,
            prediction: predict(&model, &counts, method),
        });
    }
    lines.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(lines)
}

// ---------------------------------------------------------------------------
// reduce

/// One row of the reduction CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceRow {
    pub class: String,
    pub dim: usize,
    pub zeros: usize,
    pub reduction_pct: f64,
    pub containment: f64,
    /// `None` marks a class that is inseparable at the requested θ.
    pub generations: Option<usize>,
}

pub const REDUCTION_CSV_HEADER: &str = "class,dim,zeros,reduction_pct,containment,generations";

/// CSV with [`REDUCTION_CSV_HEADER`]; infeasible classes carry
/// `infeasible` in the generations column.
pub fn reduction_csv(rows: &[ReduceRow]) -> String {
    let mut out = String::from(REDUCTION_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{}",
            r.class,
            r.dim,
            r.zeros,
            r.reduction_pct,
            r.containment,
            r.generations
                .map(|g| g.to_string())
                .unwrap_or_else(|| "infeasible".into())
        );
    }
    out
}

/// Seed of the GA run for the class at `index`.
pub fn class_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Runs the GA for every model class over the dataset documents.
pub fn reduce(
    model: &ModelFile,
    dataset: &LabeledDataset,
    cfg: &GaConfig,
) -> Result<(ModelFile, Vec<ReduceRow>), HarnessError> {
    cfg.validate()?;
    let mut classes = BTreeMap::new();
    let mut rows = Vec::new();
    for (index, c) in model.centroids.iter().enumerate() {
        let docs = dataset.class_documents(&c.class_id);
        if docs.is_empty() {
            return Err(CorpusError::EmptyClass(c.class_id.clone()).into());
        }
        let problem = ClassProblem::from_class(&c.class_id, &docs, &model.centroids)?;
        let run_cfg = GaConfig {
            seed: class_seed(cfg.seed, index),
            ..*cfg
        };
        let dim = problem.dim();
        let (outcome, row) = match ga::run_ga(&problem, &run_cfg) {
            Ok(r) => {
                let row = ReduceRow {
                    class: c.class_id.clone(),
                    dim,
                    zeros: r.zeros,
                    reduction_pct: 100.0 * r.zeros as f64 / dim as f64,
                    containment: r.containment,
                    generations: Some(r.generations_run),
                };
                (ReductionOutcome::Reduced(r), row)
            }
            Err(GaError::InfeasibleClass { containment }) => (
                ReductionOutcome::Infeasible { containment },
                ReduceRow {
                    class: c.class_id.clone(),
                    dim,
                    zeros: 0,
                    reduction_pct: 0.0,
                    containment,
                    generations: None,
                },
            ),
            Err(e) => return Err(e.into()),
        };
        classes.insert(
            c.class_id.clone(),
            ClassReduction {
                term_order: problem.term_order.clone(),
                outcome,
            },
        );
        rows.push(row);
    }
    let mut out = model.clone();
    out.ga_masks = Some(ReductionSet { config: *cfg, classes });
    Ok((out, rows))
}

/// Loads a corpus against the model vocabulary and checks its classes.
pub fn load_corpus_for(model: &ModelFile, corpus_dir: &Path) -> Result<LabeledDataset, HarnessError> {
    let dataset = corpus::load_corpus_frozen(corpus_dir, &model.vocabulary()?)?;
    for c in &dataset.classes {
        if model.centroid(&c.id).is_none() {
            return Err(HarnessError::Model(format!(
                "corpus class `{}` is not in the model",
                c.id
            )));
        }
    }
    Ok(dataset)
}

pub fn cmd_reduce(
    model_path: &Path,
    corpus_dir: &Path,
    out_model: &Path,
    csv_path: &Path,
    cfg: &GaConfig,
) -> Result<Vec<ReduceRow>, HarnessError> {
    let model = load_model(model_path)?;
    let dataset = load_corpus_for(&model, corpus_dir)?;
    let (reduced, rows) = reduce(&model, &dataset, cfg)?;
    write_atomic(out_model, reduced.to_json()?.as_bytes())?;
    write_atomic(csv_path, reduction_csv(&rows).as_bytes())?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Fraction of each class held out for testing; 0 evaluates the given
    /// model on the whole corpus.
    pub split_fraction: f64,
    pub seed: u64,
    pub method: Method,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            split_fraction: 0.0,
            seed: 0,
            method: Method::Pc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEval {
    pub class: String,
    pub tested: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub containment: f64,
    pub dim_before: usize,
    pub dim_after: usize,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassEval>,
    pub overall_accuracy: f64,
    /// actual class → predicted class (or diagnostic) → count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub options: EvalOptions,
    pub train_config: TrainOptions,
    pub masks_present: bool,
    /// Wall-clock milliseconds; kept out of the JSON so reports are
    /// reproducible.
    #[serde(skip)]
    pub timings_ms: BTreeMap<&'static str, u128>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>8} {:>9} {:>11} {:>6} {:>6} {:>10}",
            "class", "tested", "correct", "accuracy", "containment", "dim", "kept", "reduction%"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<16} {:>6} {:>8} {:>9.6} {:>11.6} {:>6} {:>6} {:>10.6}",
                c.class, c.tested, c.correct, c.accuracy, c.containment, c.dim_before, c.dim_after, c.reduction_pct
            );
        }
        let _ = writeln!(
            out,
            "overall accuracy: {:.6}% ({})",
            self.overall_accuracy, self.options.method
        );
        for (k, v) in &self.timings_ms {
            let _ = writeln!(out, "time {k}: {v} ms");
        }
        out
    }
}

/// Splits each class into (train, test) document lists.
fn split_dataset(
    dataset: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<&Document>, Vec<&Document>), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in &dataset.classes {
        let mut docs = dataset.class_documents(&c.id);
        if docs.len() < 2 {
            return Err(HarnessError::TooFewDocs(c.id.clone()));
        }
        docs.shuffle(&mut rng);
        let held = ((fraction * docs.len() as f64).round() as usize).clamp(1, docs.len() - 1);
        let rest = docs.split_off(held);
        test.extend(docs);
        train.extend(rest);
    }
    Ok((train, test))
}

/// Fraction of a class's documents that stay separated: under the GA mask
/// when one exists, otherwise with the unmasked centroids.
fn class_containment(model: &ModelFile, class: &str, docs: &[&Document]) -> Result<f64, HarnessError> {
    if docs.is_empty() {
        return Ok(0.0);
    }
    let mask = model
        .ga_masks
        .as_ref()
        .and_then(|s| s.classes.get(class))
        .and_then(|r| match &r.outcome {
            ReductionOutcome::Reduced(res) => Some(&res.best),
            ReductionOutcome::Infeasible { .. } => None,
        });
    let satisfied = match mask {
        Some(mask) => {
            let problem = ClassProblem::from_class(class, docs, &model.centroids)?;
            ga::is_allowed(mask, &problem)?.satisfied
        }
        None => {
            let mut n = 0;
            for d in docs {
                if centroid::separated(&d.unit, class, &model.centroids)? {
                    n += 1;
                }
            }
            n
        }
    };
    Ok(satisfied as f64 / docs.len() as f64)
}

pub fn evaluate(model: &ModelFile, dataset: &LabeledDataset, opts: &EvalOptions) -> Result<EvalReport, HarnessError> {
    if !(0.0..1.0).contains(&opts.split_fraction) {
        return Err(HarnessError::Usage("split fraction must lie in [0, 1)".into()));
    }
    let mut timings = BTreeMap::new();
    let started = Instant::now();
    let (scoring_model, test_docs) = if opts.split_fraction > 0.0 {
        let (train_docs, test_docs) = split_dataset(dataset, opts.split_fraction, opts.seed)?;
        let train_set =
            LabeledDataset::from_documents(dataset.vocabulary.clone(), train_docs.into_iter().cloned().collect())?;
        let (m, _) = train(&train_set, &model.train_config)?;
        timings.insert("retrain", started.elapsed().as_millis());
        (m, test_docs)
    } else {
        (model.clone(), dataset.documents.iter().collect())
    };

    let scoring = Instant::now();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut per_class = Vec::new();
    let (mut total, mut correct_all) = (0usize, 0usize);
    for c in &model.centroids {
        let class = &c.class_id;
        let docs: Vec<&Document> = test_docs
            .iter()
            .copied()
            .filter(|d| d.label.as_deref() == Some(class.as_str()))
            .collect();
        let mut correct = 0;
        for d in &docs {
            let p = predict(&scoring_model, &d.counts, opts.method);
            let predicted = p
                .winner
                .clone()
                .unwrap_or_else(|| p.diagnostic.unwrap_or("-").to_owned());
            if &predicted == class {
                correct += 1;
            }
            *confusion
                .entry(class.clone())
                .or_default()
                .entry(predicted)
                .or_default() += 1;
        }
        total += docs.len();
        correct_all += correct;

        let all_docs = dataset.class_documents(class);
        let containment = class_containment(model, class, &all_docs)?;
        let dim_before = c.support;
        let zeros = match model.ga_masks.as_ref().and_then(|s| s.classes.get(class)) {
            Some(ClassReduction {
                outcome: ReductionOutcome::Reduced(r),
                ..
            }) => r.zeros,
            _ => 0,
        };
        let dim_after = dim_before - zeros;
        per_class.push(ClassEval {
            class: class.clone(),
            tested: docs.len(),
            correct,
            accuracy: if docs.is_empty() {
                0.0
            } else {
                100.0 * correct as f64 / docs.len() as f64
            },
            containment,
            dim_before,
            dim_after,
            reduction_pct: 100.0 * (1.0 - dim_after as f64 / dim_before as f64),
        });
    }
    timings.insert("score", scoring.elapsed().as_millis());
    Ok(EvalReport {
        per_class,
        overall_accuracy: if total == 0 {
            0.0
        } else {
            100.0 * correct_all as f64 / total as f64
        },
        confusion,
        options: *opts,
        train_config: model.train_config,
        masks_present: model.ga_masks.is_some(),
        timings_ms: timings,
    })
}

pub fn cmd_evaluate(
    model_path: &Path,
    corpus_dir: &Path,
    report_path: &Path,
    opts: &EvalOptions,
) -> Result<EvalReport, HarnessError> {
    let model = load_model(model_path)?;
    let dataset = load_corpus_for(&model, corpus_dir)?;
    let report = evaluate(&model, &dataset, opts)?;
    write_atomic(report_path, report.to_json()?.as_bytes())?;
    Ok(report)
}
