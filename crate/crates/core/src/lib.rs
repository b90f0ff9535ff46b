//! Text classification over wordform vectors.
//!
//! The pipeline: [`corpus`] turns documents into unit term vectors,
//! [`centroid`] builds class central vectors and the inner-product
//! separation test, [`kl`] extracts principal components by normalized
//! power iteration with deflation, [`pc`] scores queries with a Mahalanobis
//! distance in each class's component basis, [`bayes`] provides the
//! multinomial Bayes baseline and full-covariance oracles, and [`ga`]
//! searches binary masks that shrink class dimension while keeping classes
//! separated. [`harness`] wires these into train/classify/reduce/evaluate
//! commands over directory corpora.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod centroid;
pub mod corpus;
pub mod ga;
pub mod harness;
pub mod kl;
pub mod pc;

pub use corpus::{Document, LabeledDataset, SparseVector, TermId, Vocabulary};

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// True when `a` and `b` are equal up to [`TIE_TOLERANCE`].
pub fn scores_tie(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= TIE_TOLERANCE * scale
}

/// True when `a` beats `b` by more than the tie tolerance.
pub fn strictly_greater(a: f64, b: f64) -> bool {
    a > b && !scores_tie(a, b)
}

/// Index of the maximum score. Scores within tolerance of each other tie,
/// and ties go to the lexicographically smallest label.
pub(crate) fn argmax_by_label<'a, I>(scored: I) -> Option<&'a str>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut items: Vec<(&str, f64)> = scored.into_iter().collect();
    items.sort_by(|a, b| a.0.cmp(b.0));
    let mut best: Option<(&str, f64)> = None;
    for (label, score) in items {
        match best {
            None => best = Some((label, score)),
            Some((_, s)) if strictly_greater(score, s) => best = Some((label, score)),
            _ => {}
        }
    }
    best.map(|(l, _)| l)
}
