//! Iterative Karhunen–Loève decomposition.
//!
//! Each component is found by alternating least squares on a rank-one fit:
//! starting from equal coefficients `α_k = 1/√n`, the component is
//! `Y = Σ_k α_k X^k`, the coefficients are updated to `⟨Y, X^k⟩` and
//! renormalized to unit length. This is power iteration on the Gram matrix
//! `[⟨X^i, X^j⟩]`. The rank-one fit `α_k Y` is then subtracted from every
//! row and the process repeats on the residual.
//!
//! At convergence the coefficient vectors are orthonormal eigenvectors of
//! the Gram matrix and `‖Y^μ‖²` are its eigenvalues in descending order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KlError {
    #[error("data matrix needs at least one row and one column")]
    EmptyData,
    #[error("row {row} has dimension {got}, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("non-finite value in data")]
    NonFinite,
    #[error("data has no nonzero rows")]
    ZeroData,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("component count {requested} outside 1..={available}")]
    InvalidComponentCount { requested: usize, available: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid iteration config: {0}")]
    InvalidConfig(&'static str),
}

/// Residuals whose energy falls below this fraction of the original data
/// energy count as zero.
pub const RESIDUAL_ENERGY_FLOOR: f64 = 1e-20;

/// Rows `X^0..X^{n-1}` of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl DataMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, KlError> {
        let dim = rows.first().map(Vec::len).ok_or(KlError::EmptyData)?;
        if dim == 0 {
            return Err(KlError::EmptyData);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(KlError::RaggedRows {
                    row: i,
                    expected: dim,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(KlError::NonFinite);
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Σ_k ‖X^k‖².
    pub fn energy(&self) -> f64 {
        self.rows.iter().map(|r| norm_sq(r)).sum()
    }

    /// `Σ_k α_k X^k`.
    fn combine(&self, alpha: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (row, &a) in self.rows.iter().zip(alpha) {
            axpy(a, row, &mut y);
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub max_iterations: usize,
    /// Stop once max_k |α_k(i+1) - α_k(i)| falls below this.
    pub tolerance: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-9,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<(), KlError> {
        if self.max_iterations == 0 {
            return Err(KlError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(KlError::InvalidConfig("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstComponent {
    pub component: Vec<f64>,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// One update: `α* = [⟨Y, X^k⟩]` for `Y = Σ α_k X^k`, normalized. `None`
/// when α* vanishes relative to the data energy.
fn step(data: &DataMatrix, energy: f64, alpha: &[f64]) -> Option<Vec<f64>> {
    let y = data.combine(alpha);
    let mut next: Vec<f64> = data.rows.iter().map(|r| dot(&y, r)).collect();
    let norm = norm_sq(&next).sqrt();
    if !(norm > 1e-13 * energy) || !norm.is_finite() {
        return None;
    }
    next.iter_mut().for_each(|a| *a /= norm);
    Some(next)
}

/// Flips `alpha` so its largest-magnitude entry is positive. Returns the
/// applied sign.
fn canonical_sign(alpha: &mut [f64]) -> f64 {
    let pivot = alpha
        .iter()
        .copied()
        .fold(0.0f64, |best, a| if a.abs() > best.abs() { a } else { best });
    if pivot < 0.0 {
        alpha.iter_mut().for_each(|a| *a = -*a);
        -1.0
    } else {
        1.0
    }
}

fn iterate_from(data: &DataMatrix, mut alpha: Vec<f64>, cfg: &IterationConfig) -> Option<FirstComponent> {
    let energy = data.energy();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let next = step(data, energy, &alpha)?;
        iterations += 1;
        // Align signs before measuring the change.
        let sign = if dot(&next, &alpha) < 0.0 { -1.0 } else { 1.0 };
        let change = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - sign * b).abs())
            .fold(0.0, f64::max);
        alpha = next;
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }
    canonical_sign(&mut alpha);
    let component = data.combine(&alpha);
    Some(FirstComponent {
        component,
        alpha,
        iterations,
        converged,
    })
}

/// Dominant component of `data` by normalized power iteration from
/// `α_k = 1/√n`.
///
/// If the uniform start lies in the null space of the Gram matrix (rows
/// that cancel, such as `X` and `-X`), the iteration restarts from the unit
/// coefficient of the largest row. Non-convergence is reported through
/// [`FirstComponent::converged`], not as an error.
pub fn first_component(data: &DataMatrix, cfg: &IterationConfig) -> Result<FirstComponent, KlError> {
    cfg.validate()?;
    let n = data.row_count();
    let uniform = vec![1.0 / (n as f64).sqrt(); n];
    if let Some(fc) = iterate_from(data, uniform, cfg) {
        return Ok(fc);
    }
    let (largest, energy) = data
        .rows
        .iter()
        .map(|r| norm_sq(r))
        .enumerate()
        .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    if !(energy > 0.0) {
        return Err(KlError::ZeroData);
    }
    let mut start = vec![0.0; n];
    start[largest] = 1.0;
    iterate_from(data, start, cfg).ok_or(KlError::ZeroData)
}

/// Residual `X^k - α_k Y` for every row.
pub fn deflate(data: &DataMatrix, component: &[f64], alpha: &[f64]) -> Result<DataMatrix, KlError> {
    if component.len() != data.dim {
        return Err(KlError::DimensionMismatch {
            expected: data.dim,
            got: component.len(),
        });
    }
    if alpha.len() != data.row_count() {
        return Err(KlError::DimensionMismatch {
            expected: data.row_count(),
            got: alpha.len(),
        });
    }
    let rows = data
        .rows
        .iter()
        .zip(alpha)
        .map(|(r, &a)| {
            let mut out = r.clone();
            axpy(-a, component, &mut out);
            out
        })
        .collect();
    Ok(DataMatrix { rows, dim: data.dim })
}

/// Components `Y^μ`, unit coefficient vectors `α^μ` and energies `‖Y^μ‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalBasis {
    pub components: Vec<Vec<f64>>,
    /// `coefficients[μ][k] = α_k^μ`.
    pub coefficients: Vec<Vec<f64>>,
    pub norms_sq: Vec<f64>,
    pub source_count: usize,
    pub dimension: usize,
    /// Power iterations spent on each component.
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Set when the residual vanished before the requested count.
    pub rank_deficient: bool,
}

impl PrincipalBasis {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Keeps only the first `m` components.
    pub fn truncate(&mut self, m: usize) {
        self.components.truncate(m);
        self.coefficients.truncate(m);
        self.norms_sq.truncate(m);
        self.iterations.truncate(m);
        self.converged.truncate(m);
    }

    /// Structural consistency, used when loading a basis from disk.
    pub fn check_shape(&self) -> Result<(), KlError> {
        let m = self.components.len();
        if self.coefficients.len() != m
            || self.norms_sq.len() != m
            || self.iterations.len() != m
            || self.converged.len() != m
        {
            return Err(KlError::DimensionMismatch {
                expected: m,
                got: self.coefficients.len(),
            });
        }
        for c in &self.components {
            if c.len() != self.dimension {
                return Err(KlError::DimensionMismatch {
                    expected: self.dimension,
                    got: c.len(),
                });
            }
        }
        for a in &self.coefficients {
            if a.len() != self.source_count {
                return Err(KlError::DimensionMismatch {
                    expected: self.source_count,
                    got: a.len(),
                });
            }
        }
        let finite = self
            .components
            .iter()
            .chain(&self.coefficients)
            .flatten()
            .chain(&self.norms_sq)
            .all(|v| v.is_finite());
        if !finite {
            return Err(KlError::NonFinite);
        }
        if self.norms_sq.iter().any(|&e| !(e > 0.0)) {
            return Err(KlError::ZeroData);
        }
        Ok(())
    }
}

/// Extracts up to `m` components by repeated [`first_component`] and
/// [`deflate`]. Stops early, with `rank_deficient` set, when the residual
/// energy drops to [`RESIDUAL_ENERGY_FLOOR`] of the input energy.
pub fn decompose(data: &DataMatrix, m: usize, cfg: &IterationConfig) -> Result<PrincipalBasis, KlError> {
    cfg.validate()?;
    let n = data.row_count();
    if m == 0 || m > n {
        return Err(KlError::InvalidComponentCount {
            requested: m,
            available: n,
        });
    }
    let total = data.energy();
    if !(total > 0.0) {
        return Err(KlError::ZeroData);
    }
    let mut basis = PrincipalBasis {
        components: Vec::with_capacity(m),
        coefficients: Vec::with_capacity(m),
        norms_sq: Vec::with_capacity(m),
        source_count: n,
        dimension: data.dim(),
        iterations: Vec::with_capacity(m),
        converged: Vec::with_capacity(m),
        rank_deficient: false,
    };
    let mut residual = data.clone();
    for _ in 0..m {
        if residual.energy() <= RESIDUAL_ENERGY_FLOOR * total {
            basis.rank_deficient = true;
            break;
        }
        let fc = match first_component(&residual, cfg) {
            Ok(fc) => fc,
            Err(KlError::ZeroData) => {
                basis.rank_deficient = true;
                break;
            }
            Err(e) => return Err(e),
        };
        residual = deflate(&residual, &fc.component, &fc.alpha)?;
        basis.norms_sq.push(norm_sq(&fc.component));
        basis.components.push(fc.component);
        basis.coefficients.push(fc.alpha);
        basis.iterations.push(fc.iterations);
        basis.converged.push(fc.converged);
    }
    Ok(basis)
}

/// `X_m^v = Σ_{μ<m} α_v^μ Y^μ`.
pub fn reconstruct(basis: &PrincipalBasis, m: usize, row: usize) -> Result<Vec<f64>, KlError> {
    if m > basis.len() {
        return Err(KlError::IndexOutOfRange {
            index: m,
            limit: basis.len(),
        });
    }
    if row >= basis.source_count {
        return Err(KlError::IndexOutOfRange {
            index: row,
            limit: basis.source_count,
        });
    }
    let mut out = vec![0.0; basis.dimension];
    for mu in 0..m {
        axpy(basis.coefficients[mu][row], &basis.components[mu], &mut out);
    }
    Ok(out)
}

/// Σ_{μ≥m} ‖Y^μ‖², the total error of the m-term reconstruction.
pub fn tail_energy(basis: &PrincipalBasis, m: usize) -> f64 {
    basis.norms_sq.iter().skip(m).sum()
}
