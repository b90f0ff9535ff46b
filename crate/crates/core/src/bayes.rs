//! Multinomial Bayes baseline over wordform counters, plus the
//! full-covariance Gaussian density and Mahalanobis distance.
//!
//! The full-covariance routines are meant for small dimensions; they back
//! the tests of the component-basis classifier.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argmax_by_label;
use crate::corpus::{LabeledDataset, SparseVector, TermId};

/// Covariances whose smallest eigenvalue is below this fraction of the
/// largest are treated as singular.
pub const SINGULARITY_RATIO: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("smoothing must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("dataset has no documents")]
    EmptyDataset,
    #[error("model has no classes")]
    NoClasses,
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not symmetric")]
    NotSymmetric,
}

/// Class priors and per-class term counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    pub priors: BTreeMap<String, f64>,
    pub term_counts: BTreeMap<String, BTreeMap<TermId, u64>>,
    pub class_doc_counts: BTreeMap<String, u64>,
    pub class_term_totals: BTreeMap<String, u64>,
    pub smoothing: f64,
    pub vocabulary_size: usize,
}

pub fn fit_bayes(dataset: &LabeledDataset, smoothing: f64) -> Result<BayesModel, BayesError> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(BayesError::InvalidSmoothing(smoothing));
    }
    if dataset.documents.is_empty() {
        return Err(BayesError::EmptyDataset);
    }
    let mut term_counts: BTreeMap<String, BTreeMap<TermId, u64>> = BTreeMap::new();
    let mut class_doc_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut class_term_totals: BTreeMap<String, u64> = BTreeMap::new();
    for c in &dataset.classes {
        term_counts.entry(c.id.clone()).or_default();
        class_doc_counts.entry(c.id.clone()).or_default();
        class_term_totals.entry(c.id.clone()).or_default();
    }
    for d in &dataset.documents {
        let class = d.label.clone().unwrap_or_default();
        *class_doc_counts.entry(class.clone()).or_default() += 1;
        let counters = term_counts.entry(class.clone()).or_default();
        let total = class_term_totals.entry(class).or_default();
        for &(t, n) in d.counts.terms() {
            let n = n.round() as u64;
            *counters.entry(t).or_default() += n;
            *total += n;
        }
    }
    let n = dataset.documents.len() as f64;
    let priors = class_doc_counts
        .iter()
        .map(|(c, &k)| (c.clone(), k as f64 / n))
        .collect();
    Ok(BayesModel {
        priors,
        term_counts,
        class_doc_counts,
        class_term_totals,
        smoothing,
        vocabulary_size: dataset.vocabulary.len(),
    })
}

impl BayesModel {
    /// log P(class) + log P(counts | class) under the smoothed multinomial.
    pub fn log_joint(&self, class: &str, counts: &SparseVector) -> f64 {
        let prior = self.priors.get(class).copied().unwrap_or(0.0);
        let total = self.class_term_totals.get(class).copied().unwrap_or(0) as f64;
        let denom = (total + self.smoothing * self.vocabulary_size as f64).ln();
        let counters = self.term_counts.get(class);
        let mut acc = prior.ln();
        for &(t, n) in counts.terms() {
            let k = counters.and_then(|c| c.get(&t)).copied().unwrap_or(0) as f64;
            acc += n * ((k + self.smoothing).ln() - denom);
        }
        acc
    }
}

/// Posterior class probabilities for a raw-count vector, evaluated in log
/// space and renormalized.
pub fn posterior(model: &BayesModel, counts: &SparseVector) -> BTreeMap<String, f64> {
    let logs: Vec<(&String, f64)> = model.priors.keys().map(|c| (c, model.log_joint(c, counts))).collect();
    let max = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&(_, l)| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    logs.iter()
        .zip(weights)
        .map(|(&(c, _), w)| (c.clone(), w / z))
        .collect()
}

pub fn bayes_classify<'a>(model: &'a BayesModel, counts: &SparseVector) -> Result<&'a str, BayesError> {
    let post = posterior(model, counts);
    let winner = argmax_by_label(post.iter().map(|(c, &p)| (c.as_str(), p))).ok_or(BayesError::NoClasses)?;
    Ok(model
        .priors
        .keys()
        .find(|c| c.as_str() == winner)
        .map(String::as_str)
        .expect("winner is a model class"))
}

/// Mean vector and covariance matrix of a Gaussian class model.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl CovarianceModel {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, BayesError> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(BayesError::DimensionMismatch {
                expected: n,
                got: covariance.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-9 {
                    return Err(BayesError::NotSymmetric);
                }
            }
        }
        Ok(Self { mean, covariance })
    }

    /// Sample mean and (population) covariance of the given rows.
    pub fn estimate(rows: &[Vec<f64>]) -> Result<Self, BayesError> {
        let first = rows.first().ok_or(BayesError::EmptyDataset)?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = DVector::zeros(dim);
        for r in rows {
            if r.len() != dim {
                return Err(BayesError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            mean += DVector::from_column_slice(r);
        }
        mean /= n;
        let mut cov = DMatrix::zeros(dim, dim);
        for r in rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov += &c * c.transpose();
        }
        cov /= n;
        Self::new(mean, cov)
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Cholesky factor after the singularity check.
    fn factor(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, BayesError> {
        let eig = self.covariance.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= SINGULARITY_RATIO * max {
            return Err(BayesError::SingularCovariance);
        }
        self.covariance.clone().cholesky().ok_or(BayesError::SingularCovariance)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), BayesError> {
        if x.len() != self.dimension() {
            return Err(BayesError::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// (x-μ) Σ⁻¹ (x-μ)ᵀ and log|Σ|.
    fn quadratic_form(&self, x: &[f64]) -> Result<(f64, f64), BayesError> {
        self.check_dim(x)?;
        let chol = self.factor()?;
        let diff = DVector::from_column_slice(x) - &self.mean;
        let l = chol.l();
        let y = l.solve_lower_triangular(&diff).ok_or(BayesError::SingularCovariance)?;
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok((y.norm_squared(), log_det))
    }
}

/// Multivariate normal density (2π)^{-n/2} |Σ|^{-1/2} exp(-½ (x-μ)Σ⁻¹(x-μ)ᵀ).
pub fn gaussian_density(x: &[f64], model: &CovarianceModel) -> Result<f64, BayesError> {
    let (q, log_det) = model.quadratic_form(x)?;
    let n = model.dimension() as f64;
    Ok((-0.5 * q - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()).exp())
}

/// √((x-μ) Σ⁻¹ (x-μ)ᵀ).
pub fn mahalanobis_full(x: &[f64], model: &CovarianceModel) -> Result<f64, BayesError> {
    Ok(model.quadratic_form(x)?.0.max(0.0).sqrt())
}
