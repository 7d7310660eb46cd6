//! Discrete spectral geometry on triangulated closed surfaces.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: combinatorial triangulations and the canonical examples;
//! - [`metric`]: edge-length metrics, angles, areas, curvature;
//! - [`laplacian`]: cotan weights, `Δ_cot` / `Δ′_cot`, spectra and `log det′`;
//! - [`symmetry`]: graph distances, strong symmetry, structured inverses;
//! - [`variation`]: finite-difference gradients, trace formula, Hessians, sweeps.

pub mod laplacian;
pub mod mesh;
pub mod metric;
pub mod symmetry;
pub mod variation;

pub use laplacian::{assemble, log_pseudo_det, spectrum, LaplaceMatrix, LaplacianKind, SpectrumResult};
pub use mesh::{build_canonical, validate_closed, Canonical, Edge, Face, Triangulation, ValidationReport};
pub use metric::{uniform_metric, CurvatureConvention, DiscreteMetric};
pub use symmetry::{symmetry_profile, PatternMatrix, SymmetryProfile};
pub use variation::{PerturbationDirection, StationarityReport, SweepGrid};
