//! Discrete metrics and the geometry they induce on each face.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::Matrix5;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{parse_index, tokens, Edge, Face, MeshError, Triangulation};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("expected {expected} edge lengths, got {got}")]
    LengthCount { expected: usize, got: usize },
    #[error("edge {0} has no length")]
    MissingLength(Edge),
    #[error("length {value} on edge {edge} is not a positive finite number")]
    NonPositive { edge: Edge, value: f64 },
    #[error("edge {0} is not part of the triangulation")]
    UnknownEdge(Edge),
    #[error("triangle inequality fails on {} face(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<TriangleViolation>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Positive edge lengths, indexed like [`Triangulation::edges`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMetric {
    lengths: Vec<f64>,
}

impl DiscreteMetric {
    /// Checks count and positivity. Triangle inequalities are left to [`validate_metric`].
    pub fn new(t: &Triangulation, lengths: Vec<f64>) -> Result<Self, MetricError> {
        if lengths.len() != t.edge_count() {
            return Err(MetricError::LengthCount { expected: t.edge_count(), got: lengths.len() });
        }
        for (&e, &v) in t.edges().iter().zip(&lengths) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MetricError::NonPositive { edge: e, value: v });
            }
        }
        Ok(DiscreteMetric { lengths })
    }

    pub fn from_map(t: &Triangulation, map: &HashMap<Edge, f64>) -> Result<Self, MetricError> {
        if let Some(e) = map.keys().find(|e| t.edge_index(**e).is_none()) {
            return Err(MetricError::UnknownEdge(*e));
        }
        let lengths = t
            .edges()
            .iter()
            .map(|e| map.get(e).copied().ok_or(MetricError::MissingLength(*e)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(t, lengths)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, t: &Triangulation, e: Edge) -> Option<f64> {
        t.edge_index(e).map(|i| self.lengths[i])
    }

    /// Lengths `(l_jk, l_ik, l_ij)` of a face `(i, j, k)`: the side opposite each vertex slot.
    pub fn face_lengths(&self, t: &Triangulation, f: &Face) -> [f64; 3] {
        f.opposite_edges().map(|e| self.lengths[t.edge_index(e).expect("face edge present")])
    }

    pub fn scaled(&self, c: f64) -> DiscreteMetric {
        DiscreteMetric { lengths: self.lengths.iter().map(|l| l * c).collect() }
    }

    /// Transports the metric to `t.relabeled(perm)`.
    pub fn relabeled(&self, t: &Triangulation, relabeled: &Triangulation, perm: &[usize]) -> DiscreteMetric {
        let mut lengths = vec![0.0; self.lengths.len()];
        for (e, &l) in t.edges().iter().zip(&self.lengths) {
            let image = Edge::new(perm[e.lo()], perm[e.hi()]);
            lengths[relabeled.edge_index(image).expect("relabeled edge")] = l;
        }
        DiscreteMetric { lengths }
    }

    /// `l0` times a factor drawn uniformly from `[1 - amplitude, 1 + amplitude]` per edge.
    ///
    /// For `amplitude <= 0.1` every face stays acute, so cotan weights are positive.
    pub fn jittered<R: Rng + ?Sized>(t: &Triangulation, l0: f64, amplitude: f64, rng: &mut R) -> DiscreteMetric {
        let lengths = (0..t.edge_count())
            .map(|_| l0 * (1.0 + rng.random_range(-amplitude..=amplitude)))
            .collect();
        DiscreteMetric { lengths }
    }

    /// Reads `length i j v` lines for triangulation `t`.
    pub fn load(t: &Triangulation, path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let text = fs::read_to_string(path)?;
        Self::parse(t, &text)
    }

    pub fn parse(t: &Triangulation, text: &str) -> Result<Self, MetricError> {
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let toks = tokens(line);
            if toks.is_empty() {
                continue;
            }
            let err = |message: String| MetricError::Parse { line: line_no, message };
            if toks[0] != "length" || toks.len() != 4 {
                return Err(err(format!("expected `length i j value`, found {:?}", line.trim())));
            }
            let i = parse_index(toks[1], line_no)?;
            let j = parse_index(toks[2], line_no)?;
            let v: f64 = toks[3].parse().map_err(|_| err(format!("bad length {:?}", toks[3])))?;
            if map.insert(Edge::new(i, j), v).is_some() {
                return Err(err(format!("edge ({i}, {j}) given twice")));
            }
        }
        Self::from_map(t, &map)
    }

    pub fn to_text(&self, t: &Triangulation) -> String {
        let mut out = String::new();
        for (e, l) in t.edges().iter().zip(&self.lengths) {
            out.push_str(&format!("length {} {} {:.17e}\n", e.lo(), e.hi(), l));
        }
        out
    }

    pub fn save(&self, t: &Triangulation, path: impl AsRef<Path>) -> Result<(), MetricError> {
        fs::write(path, self.to_text(t))?;
        Ok(())
    }
}

pub fn uniform_metric(t: &Triangulation, l0: f64) -> Result<DiscreteMetric, MetricError> {
    if !(l0 > 0.0 && l0.is_finite()) {
        let e = t.edges().first().copied().unwrap_or(Edge::new(0, 1));
        return Err(MetricError::NonPositive { edge: e, value: l0 });
    }
    DiscreteMetric::new(t, vec![l0; t.edge_count()])
}

/// A face where one side is not strictly shorter than the other two combined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub face: Face,
    /// The side that is too long.
    pub edge: Edge,
    pub length: f64,
    pub other_sum: f64,
}

impl fmt::Display for TriangleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "face {}: side {} has length {} >= {}",
            self.face, self.edge, self.length, self.other_sum
        )
    }
}

/// Lists every strict triangle inequality that fails. Empty means the metric is valid.
pub fn validate_metric(t: &Triangulation, m: &DiscreteMetric) -> Vec<TriangleViolation> {
    let mut out = Vec::new();
    for f in t.faces() {
        let l = m.face_lengths(t, f);
        let edges = f.opposite_edges();
        for s in 0..3 {
            let other_sum = l[(s + 1) % 3] + l[(s + 2) % 3];
            if l[s] >= other_sum {
                out.push(TriangleViolation { face: *f, edge: edges[s], length: l[s], other_sum });
            }
        }
    }
    out
}

fn ensure_valid(t: &Triangulation, m: &DiscreteMetric) -> Result<(), MetricError> {
    if m.lengths.len() != t.edge_count() {
        return Err(MetricError::LengthCount { expected: t.edge_count(), got: m.lengths.len() });
    }
    let v = validate_metric(t, m);
    if v.is_empty() {
        Ok(())
    } else {
        Err(MetricError::Invalid(v))
    }
}

/// Angle opposite side `a` in a triangle with sides `a, b, c`.
pub fn angle_opposite(a: f64, b: f64, c: f64) -> f64 {
    ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0).acos()
}

/// Heron's formula.
pub fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    let s = 0.5 * (a + b + c);
    let p = s * (s - a) * (s - b) * (s - c);
    p.max(0.0).sqrt()
}

/// Interior angles per face, in vertex-slot order of each [`Face`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerAngles {
    per_face: Vec<[f64; 3]>,
}

impl CornerAngles {
    pub fn face(&self, face_index: usize) -> [f64; 3] {
        self.per_face[face_index]
    }

    pub fn per_face(&self) -> &[[f64; 3]] {
        &self.per_face
    }

    /// Angle at `vertex` inside face `face_index`.
    pub fn at(&self, t: &Triangulation, face_index: usize, vertex: usize) -> Option<f64> {
        t.faces()[face_index].slot(vertex).map(|s| self.per_face[face_index][s])
    }
}

pub fn corner_angles(t: &Triangulation, m: &DiscreteMetric) -> Result<CornerAngles, MetricError> {
    ensure_valid(t, m)?;
    Ok(corner_angles_unchecked(t, m))
}

pub(crate) fn corner_angles_unchecked(t: &Triangulation, m: &DiscreteMetric) -> CornerAngles {
    let per_face = t
        .faces()
        .iter()
        .map(|f| {
            let [a, b, c] = m.face_lengths(t, f);
            [angle_opposite(a, b, c), angle_opposite(b, c, a), angle_opposite(c, a, b)]
        })
        .collect();
    CornerAngles { per_face }
}

/// Heron area of every face, indexed like [`Triangulation::faces`].
pub fn triangle_areas(t: &Triangulation, m: &DiscreteMetric) -> Result<Vec<f64>, MetricError> {
    ensure_valid(t, m)?;
    Ok(face_areas_unchecked(t, m))
}

pub(crate) fn face_areas_unchecked(t: &Triangulation, m: &DiscreteMetric) -> Vec<f64> {
    t.faces()
        .iter()
        .map(|f| {
            let [a, b, c] = m.face_lengths(t, f);
            heron_area(a, b, c)
        })
        .collect()
}

/// One third of the area of the faces around each vertex.
pub fn local_area_elements(t: &Triangulation, m: &DiscreteMetric) -> Result<Vec<f64>, MetricError> {
    ensure_valid(t, m)?;
    Ok(local_areas_unchecked(t, m))
}

pub(crate) fn local_areas_unchecked(t: &Triangulation, m: &DiscreteMetric) -> Vec<f64> {
    let mut out = vec![0.0; t.vertex_count()];
    for (f, area) in t.faces().iter().zip(face_areas_unchecked(t, m)) {
        for v in f.vertices() {
            out[v] += area / 3.0;
        }
    }
    out
}

pub fn total_area(t: &Triangulation, m: &DiscreteMetric) -> Result<f64, MetricError> {
    Ok(triangle_areas(t, m)?.iter().sum())
}

/// Which constant the angle defect is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureConvention {
    /// `K_i = π − Σ angles at i`.
    #[default]
    Paper,
    /// `K_i = 2π − Σ angles at i`, the Gauss–Bonnet normalization.
    Standard,
}

impl std::str::FromStr for CurvatureConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(CurvatureConvention::Paper),
            "standard" => Ok(CurvatureConvention::Standard),
            _ => Err(format!("unknown curvature convention {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureVector {
    pub values: Vec<f64>,
    pub convention: CurvatureConvention,
}

impl CurvatureVector {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn gaussian_curvature(
    t: &Triangulation,
    m: &DiscreteMetric,
    convention: CurvatureConvention,
) -> Result<CurvatureVector, MetricError> {
    let angles = corner_angles(t, m)?;
    let base = match convention {
        CurvatureConvention::Paper => PI,
        CurvatureConvention::Standard => 2.0 * PI,
    };
    let mut values = vec![base; t.vertex_count()];
    for (f, a) in t.faces().iter().zip(angles.per_face()) {
        for (v, angle) in f.vertices().into_iter().zip(a) {
            values[v] -= angle;
        }
    }
    Ok(CurvatureVector { values, convention })
}

/// K4 edge order used by [`cayley_menger_tetrahedron`].
pub const K4_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Bordered 5×5 Cayley–Menger determinant of a tetrahedron.
///
/// `lengths` follows [`K4_EDGES`]; entries are squared lengths. Equals
/// `288 V²` for a realizable tetrahedron of volume `V`.
pub fn cayley_menger_tetrahedron(lengths: &[f64; 6]) -> f64 {
    cayley_menger_matrix(lengths).determinant()
}

pub fn cayley_menger_matrix(lengths: &[f64; 6]) -> Matrix5<f64> {
    let mut cm = Matrix5::zeros();
    for k in 1..5 {
        cm[(0, k)] = 1.0;
        cm[(k, 0)] = 1.0;
    }
    for (&(i, j), &l) in K4_EDGES.iter().zip(lengths) {
        cm[(i + 1, j + 1)] = l * l;
        cm[(j + 1, i + 1)] = l * l;
    }
    cm
}

/// Lengths of a K4 triangulation in [`K4_EDGES`] order.
pub fn k4_lengths(t: &Triangulation, m: &DiscreteMetric) -> Option<[f64; 6]> {
    if t.vertex_count() != 4 {
        return None;
    }
    let mut out = [0.0; 6];
    for (slot, &(i, j)) in out.iter_mut().zip(&K4_EDGES) {
        *slot = m.length(t, Edge::new(i, j))?;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_canonical, Canonical};
    use approx::assert_relative_eq;

    fn tet() -> Triangulation {
        build_canonical(Canonical::Tetrahedron)
    }

    #[test]
    fn uniform_tetrahedron_angles() {
        let t = tet();
        let m = uniform_metric(&t, 1.0).unwrap();
        assert!(m.lengths().iter().all(|&l| l == 1.0));
        let a = corner_angles(&t, &m).unwrap();
        for f in a.per_face() {
            for x in f {
                assert_relative_eq!(*x, PI / 3.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn uniform_angles_scale_free() {
        let t = build_canonical(Canonical::Torus9);
        let a = corner_angles(&t, &uniform_metric(&t, 2.0).unwrap()).unwrap();
        assert!(a.per_face().iter().flatten().all(|x| (x - PI / 3.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(uniform_metric(&tet(), 0.0).is_err());
        assert!(uniform_metric(&tet(), -1.0).is_err());
    }

    #[test]
    fn long_edge_breaks_two_faces() {
        let t = tet();
        let mut lengths = vec![1.0; 6];
        lengths[0] = 2.5;
        let m = DiscreteMetric::new(&t, lengths).unwrap();
        let v = validate_metric(&t, &m);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| x.edge == t.edges()[0]));
        assert!(matches!(corner_angles(&t, &m), Err(MetricError::Invalid(_))));
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let t = tet();
        let mut lengths = vec![1.0; 6];
        lengths[0] = 2.0;
        let m = DiscreteMetric::new(&t, lengths).unwrap();
        assert_eq!(validate_metric(&t, &m).len(), 2);
    }

    #[test]
    fn three_four_five() {
        assert_relative_eq!(angle_opposite(5.0, 3.0, 4.0), PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(heron_area(3.0, 4.0, 5.0), 6.0, epsilon = 1e-12);
        assert_relative_eq!(heron_area(1.0, 1.0, 1.0), 3f64.sqrt() / 4.0, epsilon = 1e-15);
        let s = angle_opposite(3.0, 4.0, 5.0) + angle_opposite(4.0, 5.0, 3.0) + angle_opposite(5.0, 3.0, 4.0);
        assert_relative_eq!(s, PI, epsilon = 1e-14);
    }

    #[test]
    fn area_elements() {
        let t = tet();
        let a = local_area_elements(&t, &uniform_metric(&t, 1.0).unwrap()).unwrap();
        assert!(a.iter().all(|x| (x - 3f64.sqrt() / 4.0).abs() < 1e-15));
        let o = build_canonical(Canonical::Octahedron);
        let m = uniform_metric(&o, 1.0).unwrap();
        let a = local_area_elements(&o, &m).unwrap();
        assert!(a.iter().all(|x| (x - 3f64.sqrt() / 3.0).abs() < 1e-15));
        assert_relative_eq!(total_area(&o, &m).unwrap(), 2.0 * 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn total_area_values_and_scaling() {
        let t = tet();
        assert_relative_eq!(total_area(&t, &uniform_metric(&t, 1.0).unwrap()).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        let torus = build_canonical(Canonical::Torus9);
        let m = uniform_metric(&torus, 1.0).unwrap();
        assert_relative_eq!(total_area(&torus, &m).unwrap(), 18.0 * 3f64.sqrt() / 4.0, epsilon = 1e-13);
        assert_relative_eq!(
            total_area(&torus, &m.scaled(3.0)).unwrap(),
            9.0 * total_area(&torus, &m).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn curvature_conventions() {
        let t = tet();
        let k = gaussian_curvature(&t, &uniform_metric(&t, 1.0).unwrap(), CurvatureConvention::Paper).unwrap();
        assert!(k.values.iter().all(|x| x.abs() < 1e-14));
        let o = build_canonical(Canonical::Octahedron);
        let k = gaussian_curvature(&o, &uniform_metric(&o, 1.0).unwrap(), CurvatureConvention::Paper).unwrap();
        assert!(k.values.iter().all(|x| (x + PI / 3.0).abs() < 1e-14));
        let torus = build_canonical(Canonical::Torus9);
        let k = gaussian_curvature(&torus, &uniform_metric(&torus, 1.0).unwrap(), CurvatureConvention::Standard)
            .unwrap();
        assert!(k.values.iter().all(|x| x.abs() < 1e-13));
        assert!(k.total().abs() < 1e-12);
    }

    #[test]
    fn cayley_menger_unit_is_four() {
        assert!((cayley_menger_tetrahedron(&[1.0; 6]) - 4.0).abs() <= 1e-12);
    }

    // Permutation-sum (Leibniz) determinant, independent of LU.
    fn leibniz_det5(m: &Matrix5<f64>) -> f64 {
        fn perms(k: usize, cur: &mut Vec<usize>, used: &mut [bool; 5], out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in 0..k {
                if !used[i] {
                    used[i] = true;
                    cur.push(i);
                    perms(k, cur, used, out);
                    cur.pop();
                    used[i] = false;
                }
            }
        }
        let mut all = Vec::new();
        perms(5, &mut Vec::new(), &mut [false; 5], &mut all);
        all.iter()
            .map(|p| {
                let inversions = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                sign * (0..5).map(|r| m[(r, p[r])]).product::<f64>()
            })
            .sum()
    }

    #[test]
    fn cayley_menger_scales_as_sixth_power() {
        // Oracle: Leibniz expansion of the bordered matrix gives c^6, since every
        // nonzero term uses exactly three squared-length entries.
        let l = [1.0, 1.1, 0.95, 1.05, 0.9, 1.02];
        let base = leibniz_det5(&cayley_menger_matrix(&l));
        for c in [0.5, 2.0, 3.0] {
            let scaled = l.map(|x| c * x);
            let oracle = leibniz_det5(&cayley_menger_matrix(&scaled));
            assert_relative_eq!(oracle, c.powi(6) * base, max_relative = 1e-12);
            assert_relative_eq!(cayley_menger_tetrahedron(&scaled), oracle, max_relative = 1e-10);
        }
    }

    #[test]
    fn cayley_menger_flat_square_vanishes() {
        // Unit square 0-1-2-3 with diagonals (0,2) and (1,3) of length √2.
        let r2 = 2f64.sqrt();
        let l = [1.0, r2, 1.0, 1.0, r2, 1.0];
        assert!(leibniz_det5(&cayley_menger_matrix(&l)).abs() < 1e-12);
        assert!(cayley_menger_tetrahedron(&l).abs() < 1e-12);
    }

    #[test]
    fn metric_text_round_trip() {
        let t = build_canonical(Canonical::Octahedron);
        let m = DiscreteMetric::new(&t, (0..12).map(|i| 1.0 + 0.01 * i as f64 + 1e-13).collect()).unwrap();
        let back = DiscreteMetric::parse(&t, &m.to_text(&t)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn metric_file_missing_edge() {
        let t = tet();
        let text = "length 0 1 1\nlength 0 2 1\n";
        assert!(matches!(DiscreteMetric::parse(&t, text), Err(MetricError::MissingLength(_))));
        assert!(matches!(DiscreteMetric::parse(&t, "length 0 1 x\n"), Err(MetricError::Parse { line: 1, .. })));
    }
}
