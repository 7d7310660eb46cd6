//! Finite-difference probes of `log det′` around a discrete metric.
//!
//! Everything here differentiates numerically: gradients and Hessians by central
//! differences, and the trace formula `tr(Ẇ·W⁺)` with `Ẇ` itself a central
//! difference of the assembled matrix. Independent evaluations run on the rayon
//! pool, but results are always written by index so output order is fixed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::laplacian::{self, LaplaceMatrix, LaplacianError, LaplacianKind};
use crate::mesh::{Edge, Triangulation};
use crate::metric::{self, DiscreteMetric, MetricError, TriangleViolation};

pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-3;
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VariationError {
    #[error(transparent)]
    Laplacian(#[from] LaplacianError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("perturbed metric at step {step:e} is invalid: {}", .violations.first().map(|v| v.to_string()).unwrap_or_else(|| "non-positive length".into()))]
    InvalidPerturbation { step: f64, violations: Vec<TriangleViolation> },
    #[error("kernel dimension changed across the stencil (pinned at {pinned}): {detail}")]
    KernelChange { pinned: usize, detail: String },
    #[error("direction has {got} components, triangulation has {expected} edges")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("edge {0} is not in the triangulation")]
    UnknownEdge(Edge),
    #[error("{0}")]
    BadParameter(String),
    #[error("total area has zero gradient")]
    ZeroAreaGradient,
}

/// Per-edge components `d_e` of a metric variation `l + ε·d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationDirection {
    pub components: Vec<f64>,
}

impl PerturbationDirection {
    pub fn new(components: Vec<f64>) -> Self {
        PerturbationDirection { components }
    }

    /// Unit vector on one edge.
    pub fn coordinate(t: &Triangulation, edge_index: usize) -> Self {
        let mut components = vec![0.0; t.edge_count()];
        components[edge_index] = 1.0;
        PerturbationDirection { components }
    }

    /// All ones: uniform scaling to first order.
    pub fn scaling(t: &Triangulation) -> Self {
        PerturbationDirection { components: vec![1.0; t.edge_count()] }
    }

    pub fn max_norm(&self) -> f64 {
        self.components.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.components.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

fn check_len(t: &Triangulation, d: &PerturbationDirection) -> Result<(), VariationError> {
    if d.components.len() != t.edge_count() {
        return Err(VariationError::DimensionMismatch { expected: t.edge_count(), got: d.components.len() });
    }
    Ok(())
}

fn check_step(name: &str, h: f64) -> Result<(), VariationError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(VariationError::BadParameter(format!("{name} must be positive, got {h}")));
    }
    Ok(())
}

/// `l0 + Σ coeff·d`, checked against the triangle inequalities.
fn displaced(
    t: &Triangulation,
    m0: &DiscreteMetric,
    terms: &[(f64, &PerturbationDirection)],
) -> Result<DiscreteMetric, VariationError> {
    let mut lengths = m0.lengths().to_vec();
    for (coeff, d) in terms {
        for (l, c) in lengths.iter_mut().zip(&d.components) {
            *l += coeff * c;
        }
    }
    let step = terms.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
    let m = DiscreteMetric::new(t, lengths)
        .map_err(|_| VariationError::InvalidPerturbation { step, violations: Vec::new() })?;
    let violations = metric::validate_metric(t, &m);
    if !violations.is_empty() {
        return Err(VariationError::InvalidPerturbation { step, violations });
    }
    Ok(m)
}

/// Assembles and checks that the kernel still has dimension `pinned`.
fn assemble_pinned(
    t: &Triangulation,
    m: &DiscreteMetric,
    kind: LaplacianKind,
    pinned: usize,
) -> Result<(LaplaceMatrix, laplacian::SpectrumResult), VariationError> {
    let l = laplacian::assemble(t, m, kind)?;
    let s = match laplacian::spectrum(&l, Some(pinned)) {
        Ok(s) => s,
        Err(LaplacianError::KernelMismatch { value, threshold, .. }) => {
            return Err(VariationError::KernelChange {
                pinned,
                detail: format!("kernel eigenvalue {value:e} above threshold {threshold:e}"),
            })
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = &s.kernel_warning {
        return Err(VariationError::KernelChange { pinned, detail: w.clone() });
    }
    Ok((l, s))
}

fn log_det_pinned(t: &Triangulation, m: &DiscreteMetric, kind: LaplacianKind, pinned: usize) -> Result<f64, VariationError> {
    Ok(assemble_pinned(t, m, kind, pinned)?.1.log_pseudo_det)
}

/// Central difference of `log det′` along `d`.
pub fn directional_derivative(
    t: &Triangulation,
    m0: &DiscreteMetric,
    d: &PerturbationDirection,
    kind: LaplacianKind,
    h: f64,
) -> Result<f64, VariationError> {
    check_step("h", h)?;
    check_len(t, d)?;
    let pinned = t.component_count();
    let plus = log_det_pinned(t, &displaced(t, m0, &[(h, d)])?, kind, pinned)?;
    let minus = log_det_pinned(t, &displaced(t, m0, &[(-h, d)])?, kind, pinned)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Central-difference gradient of `log det′` over the edge lengths.
pub fn fd_gradient(t: &Triangulation, m0: &DiscreteMetric, kind: LaplacianKind, h: f64) -> Result<Vec<f64>, VariationError> {
    check_step("h", h)?;
    (0..t.edge_count())
        .into_par_iter()
        .map(|e| directional_derivative(t, m0, &PerturbationDirection::coordinate(t, e), kind, h))
        .collect()
}

/// Central-difference gradient of the total area over the edge lengths.
pub fn area_gradient(t: &Triangulation, m0: &DiscreteMetric, h: f64) -> Result<Vec<f64>, VariationError> {
    check_step("h", h)?;
    (0..t.edge_count())
        .map(|e| {
            let d = PerturbationDirection::coordinate(t, e);
            let plus = metric::total_area(t, &displaced(t, m0, &[(h, &d)])?)?;
            let minus = metric::total_area(t, &displaced(t, m0, &[(-h, &d)])?)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// Orthonormal basis of the hyperplane orthogonal to the total-area gradient.
///
/// Uses the Householder reflection that sends `e_0` to the normalized gradient;
/// its remaining `|E| − 1` columns span the complement.
pub fn area_preserving_basis(t: &Triangulation, m0: &DiscreteMetric) -> Result<Vec<PerturbationDirection>, VariationError> {
    let g = DVector::from_vec(area_gradient(t, m0, DEFAULT_GRADIENT_STEP)?);
    let norm = g.norm();
    if norm.is_nan() || norm <= 0.0 {
        return Err(VariationError::ZeroAreaGradient);
    }
    let n = g.len();
    let unit = g / norm;
    // v = u + sign(u_0)·e_0 avoids cancellation.
    let mut v = unit.clone();
    let sign = if unit[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = v.dot(&v);
    let reflector = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    Ok((1..n)
        .map(|k| PerturbationDirection::new(reflector.column(k).iter().copied().collect()))
        .collect())
}

/// One probed direction in a [`StationarityReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionProbe {
    pub label: String,
    pub fd_derivative: f64,
    pub trace_derivative: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub kind: LaplacianKind,
    pub h: f64,
    pub tol: f64,
    pub area_constrained: bool,
    pub probes: Vec<DirectionProbe>,
    pub max_abs_derivative: f64,
    pub passed: bool,
}

/// Probes `d/dε log det′` in every admissible direction.
///
/// The cotan kind is probed along each edge; the normalized kind only along
/// directions that keep the total area fixed to first order.
pub fn check_stationarity(
    t: &Triangulation,
    m0: &DiscreteMetric,
    kind: LaplacianKind,
    h: f64,
    tol: f64,
) -> Result<StationarityReport, VariationError> {
    check_step("h", h)?;
    check_step("tol", tol)?;
    let first = m0.lengths()[0];
    if m0.lengths().iter().any(|&l| (l - first).abs() > 1e-12 * first) {
        log::warn!("stationarity probe at a non-uniform metric");
    }
    let (directions, labels): (Vec<_>, Vec<_>) = match kind {
        LaplacianKind::Cotan => (0..t.edge_count())
            .map(|e| (PerturbationDirection::coordinate(t, e), format!("edge {}", t.edges()[e])))
            .unzip(),
        LaplacianKind::Normalized => area_preserving_basis(t, m0)?
            .into_iter()
            .enumerate()
            .map(|(k, d)| (d, format!("area-preserving {k}")))
            .unzip(),
    };
    let probes = directions
        .par_iter()
        .zip(labels)
        .map(|(d, label)| {
            let fd = directional_derivative(t, m0, d, kind, h)?;
            let tr = trace_formula_derivative_with_step(t, m0, d, kind, h)?;
            Ok(DirectionProbe { label, fd_derivative: fd, trace_derivative: tr, difference: fd - tr })
        })
        .collect::<Result<Vec<_>, VariationError>>()?;
    let max_abs_derivative = probes.iter().map(|p| p.fd_derivative.abs()).fold(0.0, f64::max);
    Ok(StationarityReport {
        kind,
        h,
        tol,
        area_constrained: kind == LaplacianKind::Normalized,
        probes,
        max_abs_derivative,
        passed: max_abs_derivative < tol,
    })
}

/// Central difference of the assembled operator (`Δ` or `Δ′`) along `d`.
pub fn matrix_derivative(
    t: &Triangulation,
    m0: &DiscreteMetric,
    d: &PerturbationDirection,
    kind: LaplacianKind,
    h: f64,
) -> Result<DMatrix<f64>, VariationError> {
    check_step("h", h)?;
    check_len(t, d)?;
    let pinned = t.component_count();
    let (plus, _) = assemble_pinned(t, &displaced(t, m0, &[(h, d)])?, kind, pinned)?;
    let (minus, _) = assemble_pinned(t, &displaced(t, m0, &[(-h, d)])?, kind, pinned)?;
    Ok((plus.operator() - minus.operator()) / (2.0 * h))
}

/// Inverse of the operator on the complement of its kernel.
///
/// For `Δ′ = A⁻¹W` this is `A^{-1/2} S⁺ A^{1/2}` with `S = A^{-1/2} W A^{-1/2}`,
/// which is the `δ → 0` limit of `(Δ′ + δ)⁻¹` with the kernel part removed.
pub fn kernel_complement_inverse(l: &LaplaceMatrix, kernel_dim: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(l.symmetrized());
    let n = l.size();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
    let mut pinv = DMatrix::zeros(n, n);
    for &k in &order[kernel_dim..] {
        let v = eig.eigenvectors.column(k);
        pinv += (v * v.transpose()) / eig.eigenvalues[k];
    }
    match l.areas() {
        None => pinv,
        Some(a) => DMatrix::from_fn(n, n, |i, j| pinv[(i, j)] * a[j].sqrt() / a[i].sqrt()),
    }
}

/// `tr(Ẇ·W⁺)` at `m0` along `direction`, with the default gradient step.
pub fn trace_formula_derivative(
    t: &Triangulation,
    m0: &DiscreteMetric,
    direction: &PerturbationDirection,
    kind: LaplacianKind,
) -> Result<f64, VariationError> {
    trace_formula_derivative_with_step(t, m0, direction, kind, DEFAULT_GRADIENT_STEP)
}

pub fn trace_formula_derivative_with_step(
    t: &Triangulation,
    m0: &DiscreteMetric,
    direction: &PerturbationDirection,
    kind: LaplacianKind,
    h: f64,
) -> Result<f64, VariationError> {
    check_len(t, direction)?;
    if direction.components.iter().all(|&c| c == 0.0) {
        return Ok(0.0);
    }
    let pinned = t.component_count();
    let (l0, _) = assemble_pinned(t, m0, kind, pinned)?;
    let w = laplacian::cotan_weights(t, m0)?;
    if let Some(e) = w.values.iter().position(|&x| x <= 0.0) {
        log::warn!("non-positive cotan weight on edge {}; constant-rank hypothesis may fail", t.edges()[e]);
    }
    let dot = matrix_derivative(t, m0, direction, kind, h)?;
    let g = kernel_complement_inverse(&l0, pinned);
    Ok((dot * g).trace())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianReport {
    pub kind: LaplacianKind,
    pub h: f64,
    pub constrained: bool,
    /// Row-major, symmetrized.
    pub matrix: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `‖H·1‖_∞` along the scaling direction (unconstrained only).
    pub scaling_residual: Option<f64>,
    /// Eigenvalue whose eigenvector is closest to the scaling direction (unconstrained only).
    pub scaling_eigenvalue: Option<f64>,
    /// Smallest eigenvalue once the scaling eigenpair is set aside.
    pub min_other_eigenvalue: f64,
    pub is_local_minimum: bool,
}

/// Second-order central-difference Hessian of `log det′`.
///
/// Unconstrained: over coordinate edge directions. Constrained: over
/// [`area_preserving_basis`].
pub fn fd_hessian(
    t: &Triangulation,
    m0: &DiscreteMetric,
    kind: LaplacianKind,
    h: f64,
    constrained: bool,
) -> Result<HessianReport, VariationError> {
    check_step("h", h)?;
    let dirs: Vec<PerturbationDirection> = if constrained {
        area_preserving_basis(t, m0)?
    } else {
        (0..t.edge_count()).map(|e| PerturbationDirection::coordinate(t, e)).collect()
    };
    let pinned = t.component_count();
    let f = |terms: &[(f64, &PerturbationDirection)]| -> Result<f64, VariationError> {
        log_det_pinned(t, &displaced(t, m0, terms)?, kind, pinned)
    };
    let f0 = log_det_pinned(t, m0, kind, pinned)?;
    let k = dirs.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (di, dj) = (&dirs[i], &dirs[j]);
            if i == j {
                Ok((f(&[(h, di)])? - 2.0 * f0 + f(&[(-h, di)])?) / (h * h))
            } else {
                let pp = f(&[(h, di), (h, dj)])?;
                let pm = f(&[(h, di), (-h, dj)])?;
                let mp = f(&[(-h, di), (h, dj)])?;
                let mm = f(&[(-h, di), (-h, dj)])?;
                Ok((pp - pm - mp + mm) / (4.0 * h * h))
            }
        })
        .collect::<Result<Vec<f64>, VariationError>>()?;
    let mut hess = DMatrix::zeros(k, k);
    for (&(i, j), &v) in pairs.iter().zip(&entries) {
        hess[(i, j)] = v;
        hess[(j, i)] = v;
    }
    let hess = (&hess + hess.transpose()) * 0.5;

    let eig = SymmetricEigen::new(hess.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let (scaling_residual, scaling_eigenvalue, min_other) = if constrained {
        (None, None, eigenvalues[0])
    } else {
        let ones = DVector::from_element(k, 1.0);
        let residual = (&hess * &ones).amax();
        let unit = &ones / (k as f64).sqrt();
        let null_idx = (0..k)
            .max_by(|&a, &b| eig.eigenvectors.column(a).dot(&unit).abs().total_cmp(&eig.eigenvectors.column(b).dot(&unit).abs()))
            .expect("non-empty Hessian");
        let min_other = (0..k)
            .filter(|&i| i != null_idx)
            .map(|i| eig.eigenvalues[i])
            .fold(f64::INFINITY, f64::min);
        (Some(residual), Some(eig.eigenvalues[null_idx]), min_other)
    };

    Ok(HessianReport {
        kind,
        h,
        constrained,
        matrix: hess.row_iter().map(|r| r.iter().copied().collect()).collect(),
        eigenvalues,
        scaling_residual,
        scaling_eigenvalue,
        min_other_eigenvalue: min_other,
        is_local_minimum: min_other > 0.0,
    })
}

/// `log det′` over a grid of two edge lengths, all other lengths held at `m0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub kind: LaplacianKind,
    pub edge_a: Edge,
    pub edge_b: Edge,
    /// Grid coordinates for edge a (rows) and edge b (columns).
    pub la: Vec<f64>,
    pub lb: Vec<f64>,
    /// Row-major over `(la, lb)`; `NaN` marks cells with an invalid metric or spectrum.
    pub values: Vec<f64>,
    pub invalid_cells: usize,
}

impl SweepGrid {
    pub fn value(&self, ia: usize, ib: usize) -> f64 {
        self.values[ia * self.lb.len() + ib]
    }

    /// Index of the smallest valid cell.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let nb = self.lb.len();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| (k / nb, k % nb))
    }

    /// True iff cell `(ia, ib)` is below every other valid cell.
    pub fn is_strict_minimum(&self, ia: usize, ib: usize) -> bool {
        let v = self.value(ia, ib);
        let nb = self.lb.len();
        !v.is_nan()
            && self
                .values
                .iter()
                .enumerate()
                .all(|(k, &x)| k == ia * nb + ib || x.is_nan() || x > v)
    }

    /// True iff cell `(ia, ib)` is below its (up to 8) grid neighbours.
    pub fn is_local_minimum(&self, ia: usize, ib: usize) -> bool {
        let v = self.value(ia, ib);
        if v.is_nan() {
            return false;
        }
        for da in -1i64..=1 {
            for db in -1i64..=1 {
                if da == 0 && db == 0 {
                    continue;
                }
                let (a, b) = (ia as i64 + da, ib as i64 + db);
                if a < 0 || b < 0 || a >= self.la.len() as i64 || b >= self.lb.len() as i64 {
                    continue;
                }
                let x = self.value(a as usize, b as usize);
                if x.is_nan() || x <= v {
                    return false;
                }
            }
        }
        true
    }

    /// `la,lb,log_det` rows, 17 significant digits, `nan` for invalid cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("la,lb,log_det\n");
        for (ia, a) in self.la.iter().enumerate() {
            for (ib, b) in self.lb.iter().enumerate() {
                let v = self.value(ia, ib);
                let cell = if v.is_nan() { "nan".to_string() } else { format!("{v:.16e}") };
                out.push_str(&format!("{a:.16e},{b:.16e},{cell}\n"));
            }
        }
        out
    }
}

/// Evaluates `log det′` on `steps × steps` grid points of `range²` for two edges.
pub fn sweep_two_edges(
    t: &Triangulation,
    m0: &DiscreteMetric,
    edge_a: Edge,
    edge_b: Edge,
    range: (f64, f64),
    steps: usize,
    kind: LaplacianKind,
) -> Result<SweepGrid, VariationError> {
    let ia = t.edge_index(edge_a).ok_or(VariationError::UnknownEdge(edge_a))?;
    let ib = t.edge_index(edge_b).ok_or(VariationError::UnknownEdge(edge_b))?;
    if ia == ib {
        return Err(VariationError::BadParameter("sweep edges must be distinct".into()));
    }
    if steps < 2 {
        return Err(VariationError::BadParameter(format!("steps must be at least 2, got {steps}")));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(VariationError::BadParameter(format!("range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let grid: Vec<f64> = (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect();
    let pinned = t.component_count();
    let values: Vec<f64> = (0..steps * steps)
        .into_par_iter()
        .map(|cell| {
            let mut lengths = m0.lengths().to_vec();
            lengths[ia] = grid[cell / steps];
            lengths[ib] = grid[cell % steps];
            let Ok(m) = DiscreteMetric::new(t, lengths) else {
                return f64::NAN;
            };
            if !metric::validate_metric(t, &m).is_empty() {
                return f64::NAN;
            }
            log_det_pinned(t, &m, kind, pinned).unwrap_or(f64::NAN)
        })
        .collect();
    let invalid_cells = values.iter().filter(|v| v.is_nan()).count();
    Ok(SweepGrid { kind, edge_a, edge_b, la: grid.clone(), lb: grid, values, invalid_cells })
}
