//! Wordform extraction, sparse term vectors and directory corpora.
//!
//! Documents are reduced to counters of unique wordforms, then to unit
//! vectors. All vectors share one [`Vocabulary`], so a [`TermId`] means the
//! same wordform in every document, centroid and model built from it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the unit-norm invariant of normalized vectors.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document has no terms, it cannot be normalized")]
    EmptyDocument,
    #[error("class `{0}` has no non-empty documents")]
    EmptyClass(String),
    #[error("term id {term} does not fit dimension {dim}")]
    DimensionMismatch { term: usize, dim: usize },
    #[error("invalid sparse vector: {0}")]
    InvalidVector(&'static str),
    #[error("document `{doc}` references undeclared class `{class}`")]
    UnknownClass { doc: String, class: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset: {0}")]
    Malformed(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Position of a wordform in the global vocabulary ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between wordforms and term ids, in first-encounter order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a vocabulary from its wordform list (index = term id).
    /// Fails on duplicate wordforms.
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), TermId(i as u32)).is_some() {
                return Err(CorpusError::Malformed(format!("duplicate wordform `{w}`")));
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Returns the id of `word`, adding it if unseen.
    pub fn intern(&mut self, word: &str) -> TermId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = TermId(self.words.len() as u32);
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<TermId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: TermId) -> Option<&str> {
        self.words.get(id.index()).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Ordered `(term, weight)` pairs with strictly increasing ids and no zero
/// weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(TermId, f64)>", into = "Vec<(TermId, f64)>")]
pub struct SparseVector {
    terms: Vec<(TermId, f64)>,
}

impl SparseVector {
    pub fn new(terms: Vec<(TermId, f64)>) -> Result<Self, CorpusError> {
        for w in terms.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(CorpusError::InvalidVector("term ids not strictly increasing"));
            }
        }
        for &(_, v) in &terms {
            if v == 0.0 {
                return Err(CorpusError::InvalidVector("zero weight stored"));
            }
            if !v.is_finite() {
                return Err(CorpusError::InvalidVector("non-finite weight"));
            }
        }
        Ok(Self { terms })
    }

    /// Builds a vector from unordered entries, summing duplicates and
    /// dropping zero sums.
    pub fn from_unsorted<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (TermId, f64)>,
    {
        let mut acc: BTreeMap<TermId, f64> = BTreeMap::new();
        for (t, v) in entries {
            *acc.entry(t).or_insert(0.0) += v;
        }
        Self {
            terms: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn terms(&self) -> &[(TermId, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: TermId) -> Option<f64> {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .ok()
            .map(|i| self.terms[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> SparseVector {
        SparseVector::from_unsorted(self.terms.iter().map(|&(t, v)| (t, v * factor)))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }
}

impl TryFrom<Vec<(TermId, f64)>> for SparseVector {
    type Error = CorpusError;

    fn try_from(terms: Vec<(TermId, f64)>) -> Result<Self, Self::Error> {
        SparseVector::new(terms)
    }
}

impl From<SparseVector> for Vec<(TermId, f64)> {
    fn from(v: SparseVector) -> Self {
        v.terms
    }
}

/// Splits text into lowercased runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Counts wordform occurrences, growing `vocab` with unseen wordforms.
pub fn count_wordforms<S: AsRef<str>>(tokens: &[S], vocab: &mut Vocabulary) -> SparseVector {
    SparseVector::from_unsorted(tokens.iter().map(|t| (vocab.intern(t.as_ref()), 1.0)))
}

/// Counts wordform occurrences against a frozen vocabulary. Unknown
/// wordforms are dropped.
pub fn count_known<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_unsorted(tokens.iter().filter_map(|t| vocab.get(t.as_ref())).map(|id| (id, 1.0)))
}

/// Divides every weight by the Euclidean norm of the vector.
pub fn normalize_counts(counts: &SparseVector) -> Result<SparseVector, CorpusError> {
    let norm = counts.norm();
    if counts.is_empty() || norm == 0.0 || !norm.is_finite() {
        return Err(CorpusError::EmptyDocument);
    }
    Ok(SparseVector {
        terms: counts.terms.iter().map(|&(t, v)| (t, v / norm)).collect(),
    })
}

pub fn to_dense(v: &SparseVector, dim: usize) -> Result<Vec<f64>, CorpusError> {
    let mut out = vec![0.0; dim];
    for &(t, w) in v.terms() {
        let slot = out
            .get_mut(t.index())
            .ok_or(CorpusError::DimensionMismatch { term: t.index(), dim })?;
        *slot = w;
    }
    Ok(out)
}

/// Dense vector over an explicit coordinate order; terms not in `term_map`
/// are dropped. `term_map` must be sorted.
pub fn restrict_dense(v: &SparseVector, term_map: &[TermId]) -> Vec<f64> {
    term_map.iter().map(|&t| v.get(t).unwrap_or(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub label: Option<String>,
    pub counts: SparseVector,
    pub unit: SparseVector,
}

impl Document {
    pub fn from_counts(
        id: impl Into<String>,
        label: Option<String>,
        counts: SparseVector,
    ) -> Result<Self, CorpusError> {
        let unit = normalize_counts(&counts)?;
        Ok(Self {
            id: id.into(),
            label,
            counts,
            unit,
        })
    }

    /// Tokenizes and counts `text`, growing the vocabulary.
    pub fn from_text(
        id: impl Into<String>,
        label: Option<String>,
        text: &str,
        vocab: &mut Vocabulary,
    ) -> Result<Self, CorpusError> {
        let counts = count_wordforms(&tokenize(text), vocab);
        Self::from_counts(id, label, counts)
    }

    /// Tokenizes and counts `text` against a frozen vocabulary.
    pub fn from_text_frozen(
        id: impl Into<String>,
        label: Option<String>,
        text: &str,
        vocab: &Vocabulary,
    ) -> Result<Self, CorpusError> {
        let counts = count_known(&tokenize(text), vocab);
        Self::from_counts(id, label, counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: String,
    pub docs: Vec<String>,
}

/// The precedent set: documents with known class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub vocabulary: Vocabulary,
    pub documents: Vec<Document>,
    pub classes: Vec<ClassEntry>,
    /// Files that produced no wordforms and were left out.
    pub skipped: Vec<PathBuf>,
}

impl LabeledDataset {
    /// Assembles a dataset from labeled documents, deriving the class list in
    /// first-seen order.
    pub fn from_documents(vocabulary: Vocabulary, documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut classes: Vec<ClassEntry> = Vec::new();
        for d in &documents {
            let label = d
                .label
                .clone()
                .ok_or_else(|| CorpusError::Malformed(format!("document `{}` has no label", d.id)))?;
            match classes.iter_mut().find(|c| c.id == label) {
                Some(c) => c.docs.push(d.id.clone()),
                None => classes.push(ClassEntry {
                    id: label,
                    docs: vec![d.id.clone()],
                }),
            }
        }
        let ds = Self {
            vocabulary,
            documents,
            classes,
            skipped: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for c in &self.classes {
            if c.docs.is_empty() {
                return Err(CorpusError::EmptyClass(c.id.clone()));
            }
        }
        let dim = self.vocabulary.len();
        for d in &self.documents {
            match &d.label {
                Some(l) if self.classes.iter().any(|c| &c.id == l) => {}
                Some(l) => {
                    return Err(CorpusError::UnknownClass {
                        doc: d.id.clone(),
                        class: l.clone(),
                    })
                }
                None => return Err(CorpusError::Malformed(format!("document `{}` has no label", d.id))),
            }
            for v in [&d.counts, &d.unit] {
                if let Some(&(t, _)) = v.terms().last() {
                    if t.index() >= dim {
                        return Err(CorpusError::DimensionMismatch { term: t.index(), dim });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn class_ids(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.id.as_str()).collect()
    }

    /// Documents labeled with `class`, in dataset order.
    pub fn class_documents(&self, class: &str) -> Vec<&Document> {
        self.documents
            .iter()
            .filter(|d| d.label.as_deref() == Some(class))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, CorpusError> {
        let export = DatasetExport {
            vocabulary: self.vocabulary.words().to_vec(),
            classes: self.classes.clone(),
            documents: self
                .documents
                .iter()
                .map(|d| ExportedDocument {
                    id: d.id.clone(),
                    label: d.label.clone(),
                    counts: d.counts.clone(),
                    vector: d.unit.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&export).map_err(|e| CorpusError::Malformed(e.to_string()))
    }

    /// Parses a dataset export. Unit vectors are recomputed from the counts
    /// and checked against the stored ones.
    pub fn from_json(bytes: &[u8]) -> Result<Self, CorpusError> {
        let export: DatasetExport = serde_json::from_slice(bytes).map_err(|e| CorpusError::Malformed(e.to_string()))?;
        let vocabulary = Vocabulary::from_words(export.vocabulary)?;
        let mut documents = Vec::with_capacity(export.documents.len());
        for d in export.documents {
            if d.counts.terms().iter().any(|&(_, v)| v < 0.0) {
                return Err(CorpusError::Malformed(format!(
                    "document `{}` has negative counts",
                    d.id
                )));
            }
            let doc = Document::from_counts(d.id, d.label, d.counts)?;
            if doc.unit.len() != d.vector.len()
                || doc
                    .unit
                    .terms()
                    .iter()
                    .zip(d.vector.terms())
                    .any(|(a, b)| a.0 != b.0 || (a.1 - b.1).abs() > UNIT_NORM_TOLERANCE)
            {
                return Err(CorpusError::Malformed(format!(
                    "document `{}` vector disagrees with its counts",
                    doc.id
                )));
            }
            documents.push(doc);
        }
        let ds = Self {
            vocabulary,
            documents,
            classes: export.classes,
            skipped: Vec::new(),
        };
        ds.validate()?;
        for c in &ds.classes {
            for id in &c.docs {
                let found = ds
                    .documents
                    .iter()
                    .any(|d| &d.id == id && d.label.as_deref() == Some(c.id.as_str()));
                if !found {
                    return Err(CorpusError::Malformed(format!(
                        "class `{}` lists unknown document `{id}`",
                        c.id
                    )));
                }
            }
        }
        Ok(ds)
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetExport {
    vocabulary: Vec<String>,
    classes: Vec<ClassEntry>,
    documents: Vec<ExportedDocument>,
}

#[derive(Serialize, Deserialize)]
struct ExportedDocument {
    id: String,
    label: Option<String>,
    counts: SparseVector,
    vector: SparseVector,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))? {
        out.push(entry.map_err(|e| CorpusError::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn is_text_file(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e == "txt")
}

/// Text files (`*.txt`) below `dir`, recursively, in lexicographic path
/// order.
pub fn text_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for p in sorted_entries(dir)? {
        if p.is_dir() {
            out.extend(text_files(&p)?);
        } else if is_text_file(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))
}

/// How a corpus load treats wordforms that are not yet in the vocabulary.
#[derive(Debug, Clone, Copy)]
enum VocabMode<'a> {
    Grow,
    Frozen(&'a Vocabulary),
}

/// Loads `<root>/<class-id>/<doc-id>.txt`. Classes and documents are
/// enumerated in lexicographic path order and the vocabulary grows in
/// first-encounter order. Files without wordforms are recorded in
/// [`LabeledDataset::skipped`].
pub fn load_corpus(root: &Path) -> Result<LabeledDataset, CorpusError> {
    load_with(root, VocabMode::Grow)
}

/// Loads a corpus against an existing vocabulary; unknown wordforms are
/// dropped and the returned dataset carries a copy of `vocab`.
pub fn load_corpus_frozen(root: &Path, vocab: &Vocabulary) -> Result<LabeledDataset, CorpusError> {
    load_with(root, VocabMode::Frozen(vocab))
}

fn load_with(root: &Path, mode: VocabMode<'_>) -> Result<LabeledDataset, CorpusError> {
    let mut vocabulary = match mode {
        VocabMode::Grow => Vocabulary::new(),
        VocabMode::Frozen(v) => v.clone(),
    };
    let mut documents = Vec::new();
    let mut classes = Vec::new();
    let mut skipped = Vec::new();

    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let class_id = class_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut members = Vec::new();
        for file in sorted_entries(&class_dir)?.into_iter().filter(|p| is_text_file(p)) {
            let text = read_text(&file)?;
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let doc_id = format!("{class_id}/{stem}");
            let tokens = tokenize(&text);
            let counts = match mode {
                VocabMode::Grow => count_wordforms(&tokens, &mut vocabulary),
                VocabMode::Frozen(v) => count_known(&tokens, v),
            };
            match Document::from_counts(doc_id.clone(), Some(class_id.clone()), counts) {
                Ok(doc) => {
                    members.push(doc_id);
                    documents.push(doc);
                }
                Err(CorpusError::EmptyDocument) => skipped.push(file),
                Err(e) => return Err(e),
            }
        }
        if members.is_empty() {
            return Err(CorpusError::EmptyClass(class_id));
        }
        classes.push(ClassEntry {
            id: class_id,
            docs: members,
        });
    }

    Ok(LabeledDataset {
        vocabulary,
        documents,
        classes,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(pairs.iter().map(|&(t, v)| (TermId(t), v)).collect()).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Hello, world! hello"), vec!["hello", "world", "hello"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a1 b-b"), vec!["a1", "b", "b"]);
        assert_eq!(tokenize("Straße ÉTÉ"), vec!["straße", "été"]);
    }

    #[test]
    fn count_examples() {
        let mut v = Vocabulary::new();
        let c = count_wordforms(&["a", "b", "a"], &mut v);
        assert_eq!(c.get(v.get("a").unwrap()), Some(2.0));
        assert_eq!(c.get(v.get("b").unwrap()), Some(1.0));
        assert!(count_wordforms::<&str>(&[], &mut v).is_empty());

        let mut frozen = Vocabulary::new();
        frozen.intern("x");
        let c = count_known(&["x", "y", "x", "x"], &frozen);
        assert_eq!(c.terms(), &[(TermId(0), 3.0)]);
        assert_eq!(frozen.len(), 1);
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_counts(&sv(&[(0, 3.0), (1, 4.0)])).unwrap();
        assert!((n.terms()[0].1 - 0.6).abs() < 1e-12);
        assert!((n.terms()[1].1 - 0.8).abs() < 1e-12);
        let n = normalize_counts(&sv(&[(0, 7.0)])).unwrap();
        assert_eq!(n.terms(), &[(TermId(0), 1.0)]);
        let n = normalize_counts(&sv(&[(0, 1.0), (1, 1.0), (2, 1.0)])).unwrap();
        for &(_, w) in n.terms() {
            assert!((w - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        assert!(matches!(
            normalize_counts(&SparseVector::default()),
            Err(CorpusError::EmptyDocument)
        ));
    }

    #[test]
    fn dense_examples() {
        assert_eq!(
            to_dense(&sv(&[(0, 0.6), (2, 0.8)]), 4).unwrap(),
            vec![0.6, 0.0, 0.8, 0.0]
        );
        assert_eq!(to_dense(&SparseVector::default(), 3).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            to_dense(&sv(&[(5, 1.0)]), 3),
            Err(CorpusError::DimensionMismatch { term: 5, dim: 3 })
        ));
    }

    #[test]
    fn sparse_vector_rejects_bad_input() {
        assert!(SparseVector::new(vec![(TermId(1), 1.0), (TermId(0), 1.0)]).is_err());
        assert!(SparseVector::new(vec![(TermId(1), 1.0), (TermId(1), 1.0)]).is_err());
        assert!(SparseVector::new(vec![(TermId(0), 0.0)]).is_err());
        assert!(SparseVector::new(vec![(TermId(0), f64::NAN)]).is_err());
        let v = SparseVector::from_unsorted([(TermId(3), 1.0), (TermId(1), 2.0), (TermId(3), -1.0)]);
        assert_eq!(v.terms(), &[(TermId(1), 2.0)]);
    }

    #[test]
    fn vocabulary_is_bijective() {
        let mut v = Vocabulary::new();
        assert_eq!(v.intern("b"), TermId(0));
        assert_eq!(v.intern("a"), TermId(1));
        assert_eq!(v.intern("b"), TermId(0));
        assert_eq!(v.word(TermId(1)), Some("a"));
        assert!(Vocabulary::from_words(vec!["x".into(), "x".into()]).is_err());
    }

    #[test]
    fn dataset_json_round_trip() {
        let mut vocab = Vocabulary::new();
        let docs = vec![
            Document::from_text("a/1", Some("a".into()), "red red blue", &mut vocab).unwrap(),
            Document::from_text("b/1", Some("b".into()), "green", &mut vocab).unwrap(),
        ];
        let ds = LabeledDataset::from_documents(vocab, docs).unwrap();
        let back = LabeledDataset::from_json(ds.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(back, ds);
        assert!(LabeledDataset::from_json(b"{\"vocabulary\":[]}").is_err());
    }
}
