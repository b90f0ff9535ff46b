//! Mahalanobis classification in each class's principal-component basis.
//!
//! In the component basis the class covariance is diagonal with entries
//! `‖Y^k‖²`, so the distance between a query `Z` and a class reduces to
//! coefficient arithmetic. With `β^k = ⟨Z, Y^k⟩ / ‖Y^k‖²` and
//! `Λ^k = Σ_v α_v^k`, both expansions are normalized to unit length and
//!
//! ```text
//! d(Z) = Σ_k ( β^k / ‖Σ_j β^j Y^j‖ − Λ^k / ‖Σ_j Λ^j Y^j‖ )²
//! ```
//!
//! where `‖Σ_j c^j Y^j‖² = Σ_j (c^j)² ‖Y^j‖²` because the components are
//! orthogonal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{restrict_dense, Document, SparseVector, TermId};
use crate::kl::{decompose, dot, norm_sq, DataMatrix, IterationConfig, KlError, PrincipalBasis};
use crate::strictly_greater;

/// Components with `‖Y^k‖²` below this fraction of `‖Y^0‖²` are dropped.
pub const COMPONENT_ENERGY_FLOOR: f64 = 1e-12;

/// A query whose projected norm is below this fraction of its own norm
/// carries no evidence for the class.
pub const NULL_PROJECTION_RATIO: f64 = 1e-12;

/// Default upper bound on components per class.
pub const DEFAULT_COMPONENTS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum PcError {
    #[error("class has no documents")]
    EmptyClass,
    #[error(transparent)]
    Kl(#[from] KlError),
    #[error("query has no projection onto the class subspace")]
    NullProjection,
    #[error("no class model has a nonzero projection of the query")]
    AllNull,
    #[error("no class models")]
    NoModels,
    #[error("class reconstruction sum vanishes")]
    ZeroCentral,
    #[error("malformed class model: {0}")]
    Malformed(String),
}

/// Principal basis of one class plus its Λ sums and central direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class_id: String,
    pub basis: PrincipalBasis,
    /// `Λ^k = Σ_v α_v^k`.
    pub lambda: Vec<f64>,
    /// `X̂ / ‖X̂‖` with `X̂ = Σ_k Λ^k Y^k`.
    pub central_unit: Vec<f64>,
    /// Global term ids of the class-local coordinates, ascending.
    pub term_map: Vec<TermId>,
}

impl ClassModel {
    /// `‖Σ_k Λ^k Y^k‖`.
    pub fn central_norm(&self) -> f64 {
        weighted_norm(&self.lambda, &self.basis.norms_sq)
    }

    /// `X̂ = Σ_k Λ^k Y^k` in class-local coordinates.
    pub fn central_sum(&self) -> Vec<f64> {
        combine(&self.basis.components, &self.lambda, self.basis.dimension)
    }

    /// Restricts a global sparse vector to the class coordinates.
    pub fn localize(&self, v: &SparseVector) -> Vec<f64> {
        restrict_dense(v, &self.term_map)
    }

    pub fn check(&self) -> Result<(), PcError> {
        self.basis.check_shape()?;
        let m = self.basis.len();
        if m == 0 {
            return Err(PcError::Malformed("empty basis".into()));
        }
        if self.lambda.len() != m {
            return Err(PcError::Malformed("lambda length differs from component count".into()));
        }
        if self.term_map.len() != self.basis.dimension || self.central_unit.len() != self.basis.dimension {
            return Err(PcError::Malformed("term map does not match basis dimension".into()));
        }
        if self.term_map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PcError::Malformed("term map not strictly increasing".into()));
        }
        if !self.lambda.iter().chain(&self.central_unit).all(|v| v.is_finite()) {
            return Err(PcError::Malformed("non-finite value".into()));
        }
        if (norm_sq(&self.central_unit).sqrt() - 1.0).abs() > 1e-9 {
            return Err(PcError::Malformed("central vector is not unit length".into()));
        }
        if !(self.central_norm() > 0.0) {
            return Err(PcError::ZeroCentral);
        }
        Ok(())
    }
}

fn weighted_norm(coeffs: &[f64], norms_sq: &[f64]) -> f64 {
    coeffs.iter().zip(norms_sq).map(|(c, e)| c * c * e).sum::<f64>().sqrt()
}

fn combine(components: &[Vec<f64>], coeffs: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (y, &c) in components.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(y) {
            *o += c * v;
        }
    }
    out
}

/// Sorted union of the documents' term ids.
pub fn class_term_map<'a, I>(docs: I) -> Vec<TermId>
where
    I: IntoIterator<Item = &'a SparseVector>,
{
    let mut terms: Vec<TermId> = docs
        .into_iter()
        .flat_map(|d| d.terms().iter().map(|&(t, _)| t))
        .collect();
    terms.sort_unstable();
    terms.dedup();
    terms
}

/// Decomposes the class documents' unit vectors over the class-local
/// coordinates and derives Λ and the central direction.
pub fn build_class_model(
    class_id: &str,
    docs: &[&Document],
    m: usize,
    cfg: &IterationConfig,
) -> Result<ClassModel, PcError> {
    if docs.is_empty() {
        return Err(PcError::EmptyClass);
    }
    let term_map = class_term_map(docs.iter().map(|d| &d.unit));
    let rows = docs.iter().map(|d| restrict_dense(&d.unit, &term_map)).collect();
    let data = DataMatrix::new(rows)?;
    let mut basis = decompose(&data, m, cfg)?;

    let top = basis.norms_sq.first().copied().unwrap_or(0.0);
    let keep = basis
        .norms_sq
        .iter()
        .take_while(|&&e| e >= COMPONENT_ENERGY_FLOOR * top && e > 0.0)
        .count();
    if keep < basis.len() {
        basis.truncate(keep);
        basis.rank_deficient = true;
    }

    let lambda: Vec<f64> = basis.coefficients.iter().map(|a| a.iter().sum()).collect();
    let central = combine(&basis.components, &lambda, basis.dimension);
    let norm = norm_sq(&central).sqrt();
    if !(norm > 0.0) {
        return Err(PcError::ZeroCentral);
    }
    let central_unit = central.iter().map(|v| v / norm).collect();
    Ok(ClassModel {
        class_id: class_id.to_owned(),
        basis,
        lambda,
        central_unit,
        term_map,
    })
}

/// `β^k = ⟨z, Y^k⟩ / ⟨Y^k, Y^k⟩`.
pub fn project(z: &[f64], basis: &PrincipalBasis) -> Result<Vec<f64>, PcError> {
    if z.len() != basis.dimension {
        return Err(KlError::DimensionMismatch {
            expected: basis.dimension,
            got: z.len(),
        }
        .into());
    }
    Ok(basis
        .components
        .iter()
        .zip(&basis.norms_sq)
        .map(|(y, e)| dot(z, y) / e)
        .collect())
}

/// Mahalanobis distance of a class-local query to the class.
pub fn pc_mahalanobis(z: &[f64], model: &ClassModel) -> Result<f64, PcError> {
    let beta = project(z, &model.basis)?;
    let z_norm = norm_sq(z).sqrt();
    let beta_norm = weighted_norm(&beta, &model.basis.norms_sq);
    if !(z_norm > 0.0) || !(beta_norm > NULL_PROJECTION_RATIO * z_norm) {
        return Err(PcError::NullProjection);
    }
    let lambda_norm = model.central_norm();
    Ok(beta
        .iter()
        .zip(&model.lambda)
        .map(|(b, l)| (b / beta_norm - l / lambda_norm).powi(2))
        .sum())
}

/// Distances of a query to every class and the argmin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    /// `+∞` for classes with a null projection.
    pub distances: BTreeMap<String, f64>,
    pub null_classes: Vec<String>,
    pub winner: String,
}

/// Scores a global sparse query against every class model; each class sees
/// the query restricted to its own coordinates.
pub fn classify(z: &SparseVector, models: &[ClassModel]) -> Result<DistanceReport, PcError> {
    if models.is_empty() {
        return Err(PcError::NoModels);
    }
    let mut distances = BTreeMap::new();
    let mut null_classes = Vec::new();
    for m in models {
        let d = match pc_mahalanobis(&m.localize(z), m) {
            Ok(d) => d,
            Err(PcError::NullProjection) => {
                null_classes.push(m.class_id.clone());
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        distances.insert(m.class_id.clone(), d);
    }
    if null_classes.len() == models.len() {
        return Err(PcError::AllNull);
    }
    null_classes.sort();
    // BTreeMap iterates in lexicographic order, so the first minimum wins ties.
    let mut winner: Option<(&String, f64)> = None;
    for (c, &d) in &distances {
        match winner {
            None => winner = Some((c, d)),
            Some((_, best)) if strictly_greater(best, d) => winner = Some((c, d)),
            _ => {}
        }
    }
    let winner = winner.expect("at least one finite distance").0.clone();
    Ok(DistanceReport {
        distances,
        null_classes,
        winner,
    })
}
