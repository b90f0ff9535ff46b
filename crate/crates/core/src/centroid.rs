//! Class central vectors and the inner-product separation test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_counts, CorpusError, LabeledDataset, SparseVector};
use crate::{argmax_by_label, strictly_greater};

#[derive(Debug, Error)]
pub enum CentroidError {
    #[error("cannot build a central vector from an empty set")]
    EmptyClass,
    #[error("no centroid for class `{0}`")]
    MissingCentroid(String),
    #[error("no centroids to compare against")]
    NoCentroids,
}

/// Unit-normalized sum of a class's unit document vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub class_id: String,
    pub vector: SparseVector,
    /// Number of unique wordforms in the class.
    pub support: usize,
}

impl Centroid {
    fn from_sum(class_id: String, sum: SparseVector) -> Result<Self, CentroidError> {
        let vector = normalize_counts(&sum).map_err(|e| match e {
            CorpusError::EmptyDocument => CentroidError::EmptyClass,
            _ => unreachable!("normalize_counts only fails on empty input"),
        })?;
        Ok(Self {
            class_id,
            support: vector.len(),
            vector,
        })
    }
}

/// Sums unit document vectors coordinate-wise and renormalizes.
pub fn class_centroid<'a, I>(class_id: &str, docs: I) -> Result<Centroid, CentroidError>
where
    I: IntoIterator<Item = &'a SparseVector>,
{
    let mut any = false;
    let sum = SparseVector::from_unsorted(docs.into_iter().flat_map(|d| {
        any = true;
        d.terms().iter().copied()
    }));
    if !any {
        return Err(CentroidError::EmptyClass);
    }
    Centroid::from_sum(class_id.to_owned(), sum)
}

/// Central vector of a set of classes: union of wordforms, coordinates
/// summed per wordform, renormalized. The id joins the member ids with `+`.
pub fn superclass_central_vector(centroids: &[Centroid]) -> Result<Centroid, CentroidError> {
    if centroids.is_empty() {
        return Err(CentroidError::EmptyClass);
    }
    let id = centroids
        .iter()
        .map(|c| c.class_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let sum = SparseVector::from_unsorted(centroids.iter().flat_map(|c| c.vector.terms().iter().copied()));
    Centroid::from_sum(id, sum)
}

/// Inner product over common term ids.
pub fn dot(v: &SparseVector, w: &SparseVector) -> f64 {
    let (a, b) = (v.terms(), w.terms());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Dot product of `doc` with each centroid, keyed by class.
pub fn similarities(doc: &SparseVector, centroids: &[Centroid]) -> BTreeMap<String, f64> {
    centroids
        .iter()
        .map(|c| (c.class_id.clone(), dot(doc, &c.vector)))
        .collect()
}

/// Class whose centroid has the largest inner product with `doc`; ties go
/// to the lexicographically smallest class id.
pub fn cosine_classify<'a>(doc: &SparseVector, centroids: &'a [Centroid]) -> Result<&'a str, CentroidError> {
    let winner = argmax_by_label(centroids.iter().map(|c| (c.class_id.as_str(), dot(doc, &c.vector))))
        .ok_or(CentroidError::NoCentroids)?;
    Ok(centroids
        .iter()
        .find(|c| c.class_id == winner)
        .map(|c| c.class_id.as_str())
        .expect("winner comes from the centroid list"))
}

/// True iff `doc` is strictly closer (by inner product) to its own class
/// centroid than to every other centroid.
pub fn separated(doc: &SparseVector, own: &str, centroids: &[Centroid]) -> Result<bool, CentroidError> {
    let own_c = centroids
        .iter()
        .find(|c| c.class_id == own)
        .ok_or_else(|| CentroidError::MissingCentroid(own.to_owned()))?;
    let own_sim = dot(doc, &own_c.vector);
    Ok(centroids
        .iter()
        .filter(|c| c.class_id != own)
        .all(|c| strictly_greater(own_sim, dot(doc, &c.vector))))
}

/// Per-document outcome of the separation test, keyed by document id.
pub fn separation_holds(
    dataset: &LabeledDataset,
    centroids: &[Centroid],
) -> Result<BTreeMap<String, bool>, CentroidError> {
    let mut out = BTreeMap::new();
    for d in &dataset.documents {
        let label = d.label.as_deref().unwrap_or_default();
        out.insert(d.id.clone(), separated(&d.unit, label, centroids)?);
    }
    Ok(out)
}

/// Centroid of every class in the dataset, in class order.
pub fn dataset_centroids(dataset: &LabeledDataset) -> Result<Vec<Centroid>, CentroidError> {
    dataset
        .classes
        .iter()
        .map(|c| class_centroid(&c.id, dataset.class_documents(&c.id).into_iter().map(|d| &d.unit)))
        .collect()
}
