//! Combinatorial triangulations of closed surfaces.
//!
//! A [`Triangulation`] stores only combinatorics: vertex indices `0..n`,
//! edges as sorted pairs and faces as sorted triples. No coordinates are
//! kept anywhere; geometry comes from a [`DiscreteMetric`](crate::metric::DiscreteMetric).

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangulation needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("repeated vertex {0} in a simplex")]
    RepeatedVertex(usize),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("duplicate triangle {0}")]
    DuplicateFace(Face),
    #[error("edge {edge} of triangle {face} is missing from the edge list")]
    MissingEdge { edge: Edge, face: Face },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unordered vertex pair, stored with the smaller index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge(usize, usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn lo(&self) -> usize {
        self.0
    }

    pub fn hi(&self) -> usize {
        self.1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint that is not `v`.
    pub fn other(&self, v: usize) -> Option<usize> {
        if self.0 == v {
            Some(self.1)
        } else if self.1 == v {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// Unordered vertex triple, stored sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Face([usize; 3]);

impl Face {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        Face(v)
    }

    pub fn vertices(&self) -> [usize; 3] {
        self.0
    }

    /// Edges in the order opposite to `vertices()[0]`, `[1]`, `[2]`.
    pub fn opposite_edges(&self) -> [Edge; 3] {
        let [i, j, k] = self.0;
        [Edge::new(j, k), Edge::new(i, k), Edge::new(i, j)]
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    /// Local slot (0, 1 or 2) of vertex `v`.
    pub fn slot(&self, v: usize) -> Option<usize> {
        self.0.iter().position(|&x| x == v)
    }

    /// Vertex of this face not on `e`.
    pub fn opposite_vertex(&self, e: Edge) -> Option<usize> {
        if !(self.contains(e.lo()) && self.contains(e.hi())) {
            return None;
        }
        self.0.iter().copied().find(|&v| !e.contains(v))
    }

    fn has_repeat(&self) -> bool {
        self.0[0] == self.0[1] || self.0[1] == self.0[2]
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Vertices, edges and triangles of a surface triangulation.
///
/// Edges and faces are kept sorted, so two triangulations with the same
/// combinatorics compare equal regardless of input order. Closedness and
/// connectivity are not enforced here; see [`validate_closed`].
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertex_count: usize,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    edge_index: HashMap<Edge, usize>,
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count
            && self.edges == other.edges
            && self.faces == other.faces
    }
}

impl Eq for Triangulation {}

impl Triangulation {
    /// Builds a triangulation from explicit edge and face lists.
    ///
    /// Every edge of every face must appear in `edges`.
    pub fn new(vertex_count: usize, edges: Vec<Edge>, faces: Vec<Face>) -> Result<Self, MeshError> {
        if vertex_count < 3 {
            return Err(MeshError::TooFewVertices(vertex_count));
        }
        let check = |v: usize| {
            if v >= vertex_count {
                Err(MeshError::VertexOutOfRange { vertex: v, vertex_count })
            } else {
                Ok(())
            }
        };
        for e in &edges {
            check(e.hi())?;
            if e.lo() == e.hi() {
                return Err(MeshError::RepeatedVertex(e.lo()));
            }
        }
        for f in &faces {
            for v in f.vertices() {
                check(v)?;
            }
            if f.has_repeat() {
                return Err(MeshError::RepeatedVertex(f.vertices()[1]));
            }
        }

        let mut edges = edges;
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(MeshError::DuplicateEdge(w[0]));
        }
        let mut faces = faces;
        faces.sort_unstable();
        if let Some(w) = faces.windows(2).find(|w| w[0] == w[1]) {
            return Err(MeshError::DuplicateFace(w[0]));
        }

        let edge_index: HashMap<Edge, usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        for f in &faces {
            for e in f.opposite_edges() {
                if !edge_index.contains_key(&e) {
                    return Err(MeshError::MissingEdge { edge: e, face: *f });
                }
            }
        }

        Ok(Triangulation { vertex_count, edges, faces, edge_index })
    }

    /// Builds a triangulation whose edge set is exactly the face edges.
    pub fn from_faces(vertex_count: usize, faces: Vec<Face>) -> Result<Self, MeshError> {
        let mut edges: Vec<Edge> = faces.iter().flat_map(|f| f.opposite_edges()).collect();
        edges.sort_unstable();
        edges.dedup();
        Self::new(vertex_count, edges, faces)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edge_index.get(&e).copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index.contains_key(&Edge::new(a, b))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Adjacency lists, each sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e.lo()].push(e.hi());
            adj[e.hi()].push(e.lo());
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for e in &self.edges {
            deg[e.lo()] += 1;
            deg[e.hi()] += 1;
        }
        deg
    }

    /// Number of connected components of the edge graph.
    pub fn component_count(&self) -> usize {
        let adj = self.neighbors();
        let mut seen = vec![false; self.vertex_count];
        let mut components = 0;
        for start in 0..self.vertex_count {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }

    /// Relabels vertex `v` as `perm[v]`.
    ///
    /// Panics if `perm` is not a permutation of `0..vertex_count`.
    pub fn relabeled(&self, perm: &[usize]) -> Triangulation {
        assert_eq!(perm.len(), self.vertex_count, "permutation length");
        let mut hit = vec![false; perm.len()];
        for &p in perm {
            assert!(p < perm.len() && !hit[p], "not a permutation");
            hit[p] = true;
        }
        let edges = self.edges.iter().map(|e| Edge::new(perm[e.lo()], perm[e.hi()])).collect();
        let faces = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.vertices();
                Face::new(perm[a], perm[b], perm[c])
            })
            .collect();
        Triangulation::new(self.vertex_count, edges, faces).expect("relabeling preserves validity")
    }

    /// Parses the line-oriented text format and checks the result is closed and connected.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let text = fs::read_to_string(path)?;
        let t: Triangulation = text.parse()?;
        let report = validate_closed(&t);
        if !report.is_closed {
            return Err(MeshError::Validation(format!(
                "not closed: {} edge(s) without exactly two triangles",
                report.offending_edges.len()
            )));
        }
        if !report.is_connected {
            return Err(MeshError::Validation("not connected".into()));
        }
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices {}", self.vertex_count)?;
        for e in &self.edges {
            writeln!(f, "edge {} {}", e.lo(), e.hi())?;
        }
        for t in &self.faces {
            let [a, b, c] = t.vertices();
            writeln!(f, "triangle {a} {b} {c}")?;
        }
        Ok(())
    }
}

/// Strips a `#` comment and splits the remainder into tokens.
pub(crate) fn tokens(line: &str) -> Vec<&str> {
    let body = line.split('#').next().unwrap_or("");
    body.split_whitespace().collect()
}

pub(crate) fn parse_index(tok: &str, line: usize) -> Result<usize, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("expected a non-negative integer, found {tok:?}"),
    })
}

impl FromStr for Triangulation {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut vertex_count = None;
        let mut edges = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line_no = lineno + 1;
            let toks = tokens(line);
            let Some((&keyword, args)) = toks.split_first() else {
                continue;
            };
            let parse_err = |message: String| MeshError::Parse { line: line_no, message };
            let expect_args = |n: usize| {
                if args.len() != n {
                    Err(parse_err(format!("`{keyword}` takes {n} argument(s), found {}", args.len())))
                } else {
                    Ok(())
                }
            };
            match keyword {
                "vertices" => {
                    expect_args(1)?;
                    if vertex_count.is_some() {
                        return Err(parse_err("repeated `vertices` header".into()));
                    }
                    vertex_count = Some(parse_index(args[0], line_no)?);
                }
                "edge" | "triangle" => {
                    let Some(n) = vertex_count else {
                        return Err(parse_err(format!("`{keyword}` before `vertices` header")));
                    };
                    let arity = if keyword == "edge" { 2 } else { 3 };
                    expect_args(arity)?;
                    let mut idx = [0usize; 3];
                    for (slot, tok) in idx.iter_mut().zip(args) {
                        *slot = parse_index(tok, line_no)?;
                        if *slot >= n {
                            return Err(parse_err(format!(
                                "vertex {} out of range for {n} vertices",
                                *slot
                            )));
                        }
                    }
                    if keyword == "edge" {
                        edges.push(Edge::new(idx[0], idx[1]));
                    } else {
                        faces.push(Face::new(idx[0], idx[1], idx[2]));
                    }
                }
                other => return Err(parse_err(format!("unknown keyword {other:?}"))),
            }
        }
        let n = vertex_count.ok_or(MeshError::Parse { line: 0, message: "missing `vertices` header".into() })?;
        Triangulation::new(n, edges, faces)
    }
}

/// Outcome of [`validate_closed`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub is_closed: bool,
    pub is_connected: bool,
    pub euler_characteristic: i64,
    /// Edges whose face count differs from 2, with that count.
    pub offending_edges: Vec<(Edge, usize)>,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
}

/// Counts incident faces per edge and checks connectivity.
pub fn validate_closed(t: &Triangulation) -> ValidationReport {
    let mut counts = vec![0usize; t.edge_count()];
    for f in t.faces() {
        for e in f.opposite_edges() {
            // `Triangulation::new` guarantees face edges are present.
            counts[t.edge_index(e).expect("face edge present")] += 1;
        }
    }
    let offending_edges: Vec<(Edge, usize)> = t
        .edges()
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c != 2)
        .map(|(&e, &c)| (e, c))
        .collect();
    ValidationReport {
        is_closed: offending_edges.is_empty(),
        is_connected: t.component_count() == 1,
        euler_characteristic: t.euler_characteristic(),
        offending_edges,
        vertex_count: t.vertex_count(),
        edge_count: t.edge_count(),
        face_count: t.face_count(),
    }
}

/// True iff every pair of vertices is joined by an edge.
pub fn is_complete(t: &Triangulation) -> bool {
    let n = t.vertex_count();
    t.edge_count() == n * (n - 1) / 2
}

/// The named triangulations used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Canonical {
    Tetrahedron,
    CsaszarK7,
    Octahedron,
    Torus9,
    Icosahedron,
}

impl Canonical {
    pub const ALL: [Canonical; 5] = [
        Canonical::Tetrahedron,
        Canonical::CsaszarK7,
        Canonical::Octahedron,
        Canonical::Torus9,
        Canonical::Icosahedron,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Canonical::Tetrahedron => "tetrahedron",
            Canonical::CsaszarK7 => "csaszar_k7",
            Canonical::Octahedron => "octahedron",
            Canonical::Torus9 => "torus_9",
            Canonical::Icosahedron => "icosahedron",
        }
    }
}

impl fmt::Display for Canonical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Canonical {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Canonical::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown triangulation {s:?}"))
    }
}

pub fn build_canonical(name: Canonical) -> Triangulation {
    let faces = match name {
        Canonical::Tetrahedron => tetrahedron_faces(),
        Canonical::CsaszarK7 => csaszar_faces(),
        Canonical::Octahedron => octahedron_faces(),
        Canonical::Torus9 => torus9_faces(),
        Canonical::Icosahedron => icosahedron_faces(),
    };
    let n = match name {
        Canonical::Tetrahedron => 4,
        Canonical::CsaszarK7 => 7,
        Canonical::Octahedron => 6,
        Canonical::Torus9 => 9,
        Canonical::Icosahedron => 12,
    };
    Triangulation::from_faces(n, faces).expect("canonical triangulations are well formed")
}

/// Two apexes (0 and 4) over the equatorial triangle 1-2-3.
///
/// Closed sphere, but apexes have degree 3 and equator vertices degree 4.
pub fn triangular_bipyramid() -> Triangulation {
    let mut faces = Vec::new();
    for (a, b) in [(1, 2), (2, 3), (1, 3)] {
        faces.push(Face::new(0, a, b));
        faces.push(Face::new(4, a, b));
    }
    Triangulation::from_faces(5, faces).expect("bipyramid is well formed")
}

fn tetrahedron_faces() -> Vec<Face> {
    vec![Face::new(0, 1, 2), Face::new(0, 1, 3), Face::new(0, 2, 3), Face::new(1, 2, 3)]
}

// Orbits {i, i+1, i+3} and {i, i+2, i+3} mod 7.
fn csaszar_faces() -> Vec<Face> {
    (0..7)
        .flat_map(|i| {
            [
                Face::new(i, (i + 1) % 7, (i + 3) % 7),
                Face::new(i, (i + 2) % 7, (i + 3) % 7),
            ]
        })
        .collect()
}

// Antipodal pairs (0,1), (2,3), (4,5); one face per choice of one vertex from each pair.
fn octahedron_faces() -> Vec<Face> {
    let mut faces = Vec::with_capacity(8);
    for a in [0, 1] {
        for b in [2, 3] {
            for c in [4, 5] {
                faces.push(Face::new(a, b, c));
            }
        }
    }
    faces
}

// 3x3 grid with periodic identification, each square cut along the same diagonal.
fn torus9_faces() -> Vec<Face> {
    let v = |r: usize, c: usize| 3 * (r % 3) + (c % 3);
    let mut faces = Vec::with_capacity(18);
    for r in 0..3 {
        for c in 0..3 {
            faces.push(Face::new(v(r, c), v(r, c + 1), v(r + 1, c + 1)));
            faces.push(Face::new(v(r, c), v(r + 1, c), v(r + 1, c + 1)));
        }
    }
    faces
}

// Pole 0, upper ring 1..=5, lower ring 6..=10, pole 11.
fn icosahedron_faces() -> Vec<Face> {
    let up = |i: usize| 1 + i % 5;
    let low = |i: usize| 6 + i % 5;
    let mut faces = Vec::with_capacity(20);
    for i in 0..5 {
        faces.push(Face::new(0, up(i), up(i + 1)));
        faces.push(Face::new(up(i), up(i + 1), low(i)));
        faces.push(Face::new(low(i), low(i + 1), up(i + 1)));
        faces.push(Face::new(11, low(i), low(i + 1)));
    }
    faces
}
