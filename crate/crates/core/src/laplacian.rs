//! Cotan weights, the two cotan Laplacians, their spectra and pseudo-determinants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{validate_closed, Triangulation};
use crate::metric::{self, DiscreteMetric, MetricError};

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LaplacianError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("triangulation is not closed: edge {edge} lies in {count} face(s)")]
    NotClosed { edge: crate::mesh::Edge, count: usize },
    #[error("vertex {0} has zero local area")]
    ZeroArea(usize),
    #[error("retained eigenvalue {value:e} at index {index} is not positive")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("expected kernel of dimension {expected}, but eigenvalue {value:e} exceeds zero threshold {threshold:e}")]
    KernelMismatch { expected: usize, value: f64, threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `Δ_cot`, symmetric.
    #[default]
    Cotan,
    /// `Δ′_cot`: row `i` of `Δ_cot` divided by the local area `A_i`.
    Normalized,
}

impl std::str::FromStr for LaplacianKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cotan" => Ok(LaplacianKind::Cotan),
            "normalized" => Ok(LaplacianKind::Normalized),
            _ => Err(format!("unknown Laplacian kind {s:?}")),
        }
    }
}

impl std::fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LaplacianKind::Cotan => "cotan",
            LaplacianKind::Normalized => "normalized",
        })
    }
}

/// `w_ij = cot α_ij + cot β_ij` per edge, indexed like [`Triangulation::edges`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeWeights {
    pub values: Vec<f64>,
}

pub fn cotan_weights(t: &Triangulation, m: &DiscreteMetric) -> Result<EdgeWeights, LaplacianError> {
    let report = validate_closed(t);
    if let Some(&(edge, count)) = report.offending_edges.first() {
        return Err(LaplacianError::NotClosed { edge, count });
    }
    let angles = metric::corner_angles(t, m)?;
    Ok(weights_from_angles(t, &angles))
}

fn weights_from_angles(t: &Triangulation, angles: &metric::CornerAngles) -> EdgeWeights {
    let mut values = vec![0.0; t.edge_count()];
    for (f, a) in t.faces().iter().zip(angles.per_face()) {
        // Slot s's angle is opposite the slot-s edge.
        for (e, angle) in f.opposite_edges().into_iter().zip(a) {
            values[t.edge_index(e).expect("face edge present")] += 1.0 / angle.tan();
        }
    }
    EdgeWeights { values }
}

/// An assembled cotan Laplacian.
///
/// The symmetric cotan matrix `W` is always kept; for the normalized kind the
/// area vector is kept too, and the operator is `diag(A)^{-1} W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceMatrix {
    kind: LaplacianKind,
    cotan: DMatrix<f64>,
    areas: Option<DVector<f64>>,
}

impl LaplaceMatrix {
    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.cotan.nrows()
    }

    /// The symmetric cotan matrix `W = Δ_cot`.
    pub fn cotan_matrix(&self) -> &DMatrix<f64> {
        &self.cotan
    }

    pub fn areas(&self) -> Option<&DVector<f64>> {
        self.areas.as_ref()
    }

    /// The operator itself: `Δ_cot`, or `Δ′_cot` with rows scaled by `1/A_i`.
    pub fn operator(&self) -> DMatrix<f64> {
        match &self.areas {
            None => self.cotan.clone(),
            Some(a) => {
                let mut m = self.cotan.clone();
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row /= a[i];
                }
                m
            }
        }
    }

    /// Symmetric matrix with the same spectrum as the operator.
    ///
    /// For the normalized kind this is `A^{-1/2} W A^{-1/2}`, similar to
    /// `Δ′ = A^{-1} W` through `D^{1/2}`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        match &self.areas {
            None => self.cotan.clone(),
            Some(a) => {
                let s = a.map(|x| 1.0 / x.sqrt());
                DMatrix::from_fn(self.size(), self.size(), |i, j| s[i] * self.cotan[(i, j)] * s[j])
            }
        }
    }
}

pub fn assemble(t: &Triangulation, m: &DiscreteMetric, kind: LaplacianKind) -> Result<LaplaceMatrix, LaplacianError> {
    let w = cotan_weights(t, m)?;
    let areas = match kind {
        LaplacianKind::Cotan => None,
        LaplacianKind::Normalized => {
            let a = metric::local_area_elements(t, m)?;
            if let Some(i) = a.iter().position(|&x| x <= 0.0) {
                return Err(LaplacianError::ZeroArea(i));
            }
            Some(DVector::from_vec(a))
        }
    };
    Ok(LaplaceMatrix { kind, cotan: cotan_from_weights(t, &w), areas })
}

pub(crate) fn cotan_from_weights(t: &Triangulation, w: &EdgeWeights) -> DMatrix<f64> {
    let n = t.vertex_count();
    let mut l = DMatrix::zeros(n, n);
    for (e, &wij) in t.edges().iter().zip(&w.values) {
        let (i, j) = (e.lo(), e.hi());
        l[(i, j)] -= wij;
        l[(j, i)] -= wij;
        l[(i, i)] += wij;
        l[(j, j)] += wij;
    }
    l
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub log_pseudo_det: f64,
    /// `exp(log_pseudo_det)`, or `None` when that overflows.
    pub pseudo_det: Option<f64>,
    /// Set when a retained eigenvalue is positive but below the zero threshold,
    /// i.e. the requested kernel dimension under-counts near-null directions.
    pub kernel_warning: Option<String>,
}

impl SpectrumResult {
    pub fn retained(&self) -> &[f64] {
        &self.eigenvalues[self.kernel_dim..]
    }
}

/// Dense eigenvalues, kernel detection and log pseudo-determinant.
///
/// With `expected_kernel_dim = Some(k)` exactly the `k` eigenvalues of smallest
/// magnitude are dropped, and each must lie below `τ·max(1, λ_max)`. Without it,
/// every eigenvalue below that threshold is dropped.
pub fn spectrum(l: &LaplaceMatrix, expected_kernel_dim: Option<usize>) -> Result<SpectrumResult, LaplacianError> {
    let mut eigenvalues = SymmetricEigen::new(l.symmetrized()).eigenvalues.as_slice().to_vec();
    eigenvalues.sort_by(f64::total_cmp);
    spectrum_from_eigenvalues(eigenvalues, expected_kernel_dim)
}

pub(crate) fn zero_threshold(eigenvalues: &[f64]) -> f64 {
    let max_abs = eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    ZERO_EIGENVALUE_TOL * max_abs.max(1.0)
}

fn spectrum_from_eigenvalues(
    eigenvalues: Vec<f64>,
    expected_kernel_dim: Option<usize>,
) -> Result<SpectrumResult, LaplacianError> {
    let threshold = zero_threshold(&eigenvalues);
    let mut kernel_warning = None;

    // Drop by magnitude, then keep the retained values in ascending order.
    let mut by_magnitude: Vec<usize> = (0..eigenvalues.len()).collect();
    by_magnitude.sort_by(|&a, &b| eigenvalues[a].abs().total_cmp(&eigenvalues[b].abs()));
    let kernel_dim = match expected_kernel_dim {
        Some(k) => {
            for &i in &by_magnitude[..k.min(eigenvalues.len())] {
                if eigenvalues[i].abs() >= threshold {
                    return Err(LaplacianError::KernelMismatch { expected: k, value: eigenvalues[i], threshold });
                }
            }
            if let Some(&i) = by_magnitude.get(k) {
                if eigenvalues[i].abs() < threshold {
                    let msg = format!(
                        "retained eigenvalue {:e} is below zero threshold {threshold:e}; kernel larger than {k}?",
                        eigenvalues[i]
                    );
                    log::warn!("{msg}");
                    kernel_warning = Some(msg);
                }
            }
            k.min(eigenvalues.len())
        }
        None => eigenvalues.iter().filter(|x| x.abs() < threshold).count(),
    };
    let mut kernel_mask = vec![false; eigenvalues.len()];
    for &i in &by_magnitude[..kernel_dim] {
        kernel_mask[i] = true;
    }
    let mut kept = Vec::with_capacity(eigenvalues.len());
    let mut log_pseudo_det = 0.0;
    for (i, &v) in eigenvalues.iter().enumerate() {
        if kernel_mask[i] {
            continue;
        }
        if v <= 0.0 {
            return Err(LaplacianError::NonPositiveEigenvalue { index: i, value: v });
        }
        log_pseudo_det += v.ln();
        kept.push(v);
    }
    let mut ordered: Vec<f64> = (0..eigenvalues.len()).filter(|&i| kernel_mask[i]).map(|i| eigenvalues[i]).collect();
    ordered.sort_by(f64::total_cmp);
    ordered.extend(kept);
    let pd = log_pseudo_det.exp();
    Ok(SpectrumResult {
        eigenvalues: ordered,
        kernel_dim,
        log_pseudo_det,
        pseudo_det: pd.is_finite().then_some(pd),
        kernel_warning,
    })
}

/// `log det′` with the kernel pinned to the number of connected components.
pub fn log_pseudo_det(t: &Triangulation, m: &DiscreteMetric, kind: LaplacianKind) -> Result<f64, LaplacianError> {
    let l = assemble(t, m, kind)?;
    Ok(spectrum(&l, Some(t.component_count()))?.log_pseudo_det)
}
