use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use detcot::mesh::triangular_bipyramid;
use detcot::{build_canonical, uniform_metric, Canonical, CurvatureConvention, DiscreteMetric, Edge, LaplacianKind, Triangulation};

#[derive(Debug, Parser)]
#[command(name = "detcot", version, about = "Log-determinants of cotan Laplacians on closed triangulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closedness, connectivity and Euler characteristic of a triangulation.
    Validate(Common),
    /// Per-vertex angle defect.
    Curvature {
        #[command(flatten)]
        common: Common,
        /// Emit local area elements A_i instead of curvature.
        #[arg(long)]
        areas: bool,
    },
    /// Eigenvalues, kernel dimension and log pseudo-determinant.
    Spectrum(Common),
    /// Log pseudo-determinant only.
    Detlog(Common),
    /// Distance profile and strong-symmetry classification of the edge graph.
    Symmetry(Common),
    /// Checks that (L + δI)⁻¹ is constant on distance classes and compares with the recursion.
    InverseStructure(Common),
    /// Finite-difference gradient test at the given metric.
    Stationarity(Common),
    /// Finite-difference Hessian of log det′.
    Hessian {
        #[command(flatten)]
        common: Common,
        /// Restrict to area-preserving directions [default: on for --kind normalized].
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        constrained: Option<bool>,
    },
    /// log det′ over a grid of two edge lengths.
    Sweep(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["canonical", "mesh"]))]
pub struct Common {
    /// Built-in triangulation: tetrahedron, csaszar_k7, octahedron, torus_9, icosahedron, bipyramid.
    #[arg(long, value_parser = parse_canonical)]
    pub canonical: Option<String>,
    /// Triangulation file (`vertices`/`edge`/`triangle` lines).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Uniform edge length [default: 1.0 when --metric is absent].
    #[arg(long, conflicts_with = "metric", value_parser = positive)]
    pub uniform: Option<f64>,
    /// Edge-length file (`length i j value` lines).
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Laplacian: cotan or normalized.
    #[arg(long, value_parser = parse_kind, default_value = "cotan")]
    pub kind: LaplacianKind,
    /// Finite-difference step [default: 1e-5, or 1e-3 for hessian].
    #[arg(long, value_parser = positive)]
    pub h: Option<f64>,
    /// Pass threshold [default: 1e-6 for stationarity, 1e-10 for inverse-structure].
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    /// Diagonal shift for inverse-structure.
    #[arg(long, value_parser = positive, default_value = "1.0")]
    pub delta: f64,
    /// Two swept edges as a0,a1,b0,b1.
    #[arg(long, value_parser = parse_edges, default_value = "0,1,2,3")]
    pub edges: (Edge, Edge),
    /// Swept length interval as LO,HI.
    #[arg(long, value_parser = parse_range, default_value = "0.8,1.2")]
    pub range: (f64, f64),
    /// Grid points per swept edge.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..), default_value = "41")]
    pub steps: u32,
    /// Curvature base angle: paper (π) or standard (2π).
    #[arg(long, value_parser = parse_convention, default_value = "paper")]
    pub convention: CurvatureConvention,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv for sweep, json otherwise].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_canonical(s: &str) -> Result<String, String> {
    if s == "bipyramid" || s.parse::<Canonical>().is_ok() {
        Ok(s.to_string())
    } else {
        Err(format!("unknown triangulation {s:?}"))
    }
}

fn parse_kind(s: &str) -> Result<LaplacianKind, String> {
    s.parse()
}

fn parse_convention(s: &str) -> Result<CurvatureConvention, String> {
    s.parse()
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

fn numbers<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got {:?}", s));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn parse_edges(s: &str) -> Result<(Edge, Edge), String> {
    let v: Vec<usize> = numbers(s, 4)?;
    if v[0] == v[1] || v[2] == v[3] {
        return Err("an edge needs two distinct vertices".into());
    }
    Ok((Edge::new(v[0], v[1]), Edge::new(v[2], v[3])))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<f64> = numbers(s, 2)?;
    let (lo, hi) = (positive(&v[0].to_string())?, positive(&v[1].to_string())?);
    if hi <= lo {
        return Err(format!("need LO < HI, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

pub enum MeshSource {
    Canonical(String),
    File(PathBuf),
}

pub enum MetricSource {
    Uniform(f64),
    File(PathBuf),
}

/// Resolved inputs for one invocation.
pub struct RunConfig {
    pub mesh: MeshSource,
    pub metric: MetricSource,
    pub kind: LaplacianKind,
    pub h: f64,
    pub tol: f64,
    pub delta: f64,
    pub edges: (Edge, Edge),
    pub range: (f64, f64),
    pub steps: usize,
    pub convention: CurvatureConvention,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(c: &Common, default_h: f64, default_tol: f64, default_format: Format) -> Self {
        let mesh = match (&c.canonical, &c.mesh) {
            (Some(name), _) => MeshSource::Canonical(name.clone()),
            (None, Some(path)) => MeshSource::File(path.clone()),
            (None, None) => unreachable!("clap enforces a triangulation source"),
        };
        let metric = match &c.metric {
            Some(path) => MetricSource::File(path.clone()),
            None => MetricSource::Uniform(c.uniform.unwrap_or(1.0)),
        };
        RunConfig {
            mesh,
            metric,
            kind: c.kind,
            h: c.h.unwrap_or(default_h),
            tol: c.tol.unwrap_or(default_tol),
            delta: c.delta,
            edges: c.edges,
            range: c.range,
            steps: c.steps as usize,
            convention: c.convention,
            out: c.out.clone(),
            format: c.format.unwrap_or(default_format),
        }
    }

    /// Loads the triangulation, requiring it to be closed and connected.
    pub fn triangulation(&self) -> Result<Triangulation> {
        match &self.mesh {
            MeshSource::Canonical(name) if name == "bipyramid" => Ok(triangular_bipyramid()),
            MeshSource::Canonical(name) => Ok(build_canonical(name.parse::<Canonical>().map_err(anyhow::Error::msg)?)),
            MeshSource::File(path) => Triangulation::load(path).with_context(|| format!("loading mesh {}", path.display())),
        }
    }

    /// Parses the triangulation without closedness checks.
    pub fn raw_triangulation(&self) -> Result<Triangulation> {
        match &self.mesh {
            MeshSource::File(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading mesh {}", path.display()))?;
                text.parse().with_context(|| format!("parsing mesh {}", path.display()))
            }
            MeshSource::Canonical(_) => self.triangulation(),
        }
    }

    pub fn metric(&self, t: &Triangulation) -> Result<DiscreteMetric> {
        match &self.metric {
            MetricSource::Uniform(l0) => Ok(uniform_metric(t, *l0)?),
            MetricSource::File(path) => {
                DiscreteMetric::load(t, path).with_context(|| format!("loading metric {}", path.display()))
            }
        }
    }

    pub fn require_json(&self, op: &str) -> Result<()> {
        if self.format != Format::Json {
            bail!("{op}: only --format json is supported");
        }
        Ok(())
    }
}
