use std::io::Write;

use anyhow::{bail, Context, Result};
use detcot::laplacian::cotan_weights;
use detcot::metric::{gaussian_curvature, local_area_elements};
use detcot::symmetry::{recursion_inverse, verify_distance_constant_inverse, DistanceClassReport};
use detcot::variation::{
    check_stationarity, fd_hessian, sweep_two_edges, DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP, DEFAULT_STATIONARITY_TOL,
};
use detcot::{assemble, log_pseudo_det, spectrum, symmetry_profile, validate_closed, LaplacianKind, PatternMatrix};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{Command, Format, RunConfig};

/// Result of a subcommand: the rendered body and whether its check passed.
pub struct Outcome {
    pub body: String,
    pub passed: bool,
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_column(header: &str, values: &[f64]) -> String {
    let mut out = format!("index,{header}\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v:.16e}\n"));
    }
    out
}

fn ok(body: String) -> Outcome {
    Outcome { body, passed: true }
}

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate(_) => "validate",
        Command::Curvature { .. } => "curvature",
        Command::Spectrum(_) => "spectrum",
        Command::Detlog(_) => "detlog",
        Command::Symmetry(_) => "symmetry",
        Command::InverseStructure(_) => "inverse-structure",
        Command::Stationarity(_) => "stationarity",
        Command::Hessian { .. } => "hessian",
        Command::Sweep(_) => "sweep",
    }
}

pub fn config(cmd: &Command) -> RunConfig {
    let g = DEFAULT_GRADIENT_STEP;
    let st = DEFAULT_STATIONARITY_TOL;
    match cmd {
        Command::Validate(c)
        | Command::Spectrum(c)
        | Command::Detlog(c)
        | Command::Symmetry(c)
        | Command::Stationarity(c)
        | Command::Curvature { common: c, .. } => RunConfig::new(c, g, st, Format::Json),
        Command::InverseStructure(c) => RunConfig::new(c, g, 1e-10, Format::Json),
        Command::Hessian { common: c, .. } => RunConfig::new(c, DEFAULT_HESSIAN_STEP, st, Format::Json),
        Command::Sweep(c) => RunConfig::new(c, g, st, Format::Csv),
    }
}

pub fn execute(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Validate(_) => validate(cfg),
        Command::Curvature { areas, .. } => curvature(cfg, *areas),
        Command::Spectrum(_) => spectrum_cmd(cfg),
        Command::Detlog(_) => detlog(cfg),
        Command::Symmetry(_) => symmetry(cfg),
        Command::InverseStructure(_) => inverse_structure(cfg),
        Command::Stationarity(_) => stationarity(cfg),
        Command::Hessian { constrained, .. } => hessian(cfg, constrained.unwrap_or(cfg.kind == LaplacianKind::Normalized)),
        Command::Sweep(_) => sweep(cfg),
    }
}

pub fn emit(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn validate(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_json("validate")?;
    let t = cfg.raw_triangulation()?;
    let report = validate_closed(&t);
    if !report.is_closed {
        log::error!("{} edge(s) not in exactly two triangles", report.offending_edges.len());
    }
    Ok(Outcome { passed: report.is_closed && report.is_connected, body: json(&report)? })
}

fn curvature(cfg: &RunConfig, areas: bool) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    if areas {
        let a = local_area_elements(&t, &m)?;
        return Ok(ok(match cfg.format {
            Format::Csv => csv_column("area", &a),
            Format::Json => json(&serde_json::json!({ "areas": a, "total": a.iter().sum::<f64>() }))?,
        }));
    }
    let k = gaussian_curvature(&t, &m, cfg.convention)?;
    Ok(ok(match cfg.format {
        Format::Csv => csv_column("curvature", &k.values),
        Format::Json => json(&serde_json::json!({
            "convention": k.convention,
            "values": k.values,
            "total": k.total(),
            "euler_characteristic": t.euler_characteristic(),
        }))?,
    }))
}

fn spectrum_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    let l = assemble(&t, &m, cfg.kind)?;
    let s = spectrum(&l, Some(t.component_count()))?;
    if let Some(w) = &s.kernel_warning {
        log::warn!("{w}");
    }
    Ok(ok(match cfg.format {
        Format::Csv => csv_column("eigenvalue", &s.eigenvalues),
        Format::Json => json(&s)?,
    }))
}

fn detlog(cfg: &RunConfig) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    let v = log_pseudo_det(&t, &m, cfg.kind)?;
    Ok(ok(match cfg.format {
        Format::Csv => format!("log_pseudo_det\n{v:.16e}\n"),
        Format::Json => json(&serde_json::json!({ "kind": cfg.kind, "log_pseudo_det": v }))?,
    }))
}

fn symmetry(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_json("symmetry")?;
    let t = cfg.triangulation()?;
    let p = symmetry_profile(&t)?;
    Ok(ok(json(&p)?))
}

#[derive(Serialize)]
struct RecursionComparison {
    x: f64,
    y: f64,
    values: Vec<f64>,
    residual: f64,
    max_diff_vs_dense: f64,
}

#[derive(Serialize)]
struct InverseStructureReport {
    kind: LaplacianKind,
    delta: f64,
    is_strongly_symmetric: bool,
    distance_classes: DistanceClassReport,
    /// Present when `L + δI` has the form `x·I + y·A` on a strongly symmetric graph.
    recursion: Option<RecursionComparison>,
}

fn pattern_form(t: &detcot::Triangulation, b: &DMatrix<f64>) -> Option<(f64, f64)> {
    let first = t.edges().first()?;
    let (x, y) = (b[(0, 0)], b[(first.lo(), first.hi())]);
    let scale = b.amax().max(1.0);
    ((b - PatternMatrix::new(x, y).to_dense(t)).amax() <= 1e-12 * scale).then_some((x, y))
}

fn inverse_structure(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_json("inverse-structure")?;
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    let n = t.vertex_count();
    let b = assemble(&t, &m, cfg.kind)?.operator() + DMatrix::identity(n, n) * cfg.delta;
    let report = verify_distance_constant_inverse(&t, &b, cfg.tol)?;
    let profile = symmetry_profile(&t)?;
    let recursion = match pattern_form(&t, &b) {
        Some((x, y)) if profile.is_strongly_symmetric => {
            let inv = recursion_inverse(&profile, x, y)?;
            let dense = b.clone().try_inverse().context("inverse-structure: L + δI is singular")?;
            let max_diff_vs_dense = (inv.reconstruct(&profile) - dense).amax();
            Some(RecursionComparison { x, y, values: inv.values, residual: inv.residual, max_diff_vs_dense })
        }
        _ => None,
    };
    let passed = report.passed;
    let body = json(&InverseStructureReport {
        kind: cfg.kind,
        delta: cfg.delta,
        is_strongly_symmetric: profile.is_strongly_symmetric,
        distance_classes: report,
        recursion,
    })?;
    Ok(Outcome { body, passed })
}

fn stationarity(cfg: &RunConfig) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    let r = check_stationarity(&t, &m, cfg.kind, cfg.h, cfg.tol)?;
    let body = match cfg.format {
        Format::Json => json(&r)?,
        Format::Csv => {
            let mut out = "direction,fd_derivative,trace_derivative\n".to_string();
            for p in &r.probes {
                out.push_str(&format!("{},{:.16e},{:.16e}\n", p.label, p.fd_derivative, p.trace_derivative));
            }
            out
        }
    };
    Ok(Outcome { body, passed: r.passed })
}

fn hessian(cfg: &RunConfig, constrained: bool) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    if cotan_weights(&t, &m)?.values.iter().any(|&w| w <= 0.0) {
        log::warn!("non-positive cotan weight present");
    }
    let r = fd_hessian(&t, &m, cfg.kind, cfg.h, constrained)?;
    let body = match cfg.format {
        Format::Json => json(&r)?,
        Format::Csv => csv_column("eigenvalue", &r.eigenvalues),
    };
    Ok(ok(body))
}

fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let t = cfg.triangulation()?;
    let m = cfg.metric(&t)?;
    let (a, b) = cfg.edges;
    for e in [a, b] {
        if t.edge_index(e).is_none() {
            bail!("sweep: edge {e} is not in the triangulation");
        }
    }
    let g = sweep_two_edges(&t, &m, a, b, cfg.range, cfg.steps, cfg.kind)?;
    if g.invalid_cells > 0 {
        log::warn!("{} grid cell(s) violate the triangle inequality", g.invalid_cells);
    }
    Ok(ok(match cfg.format {
        Format::Csv => g.to_csv(),
        Format::Json => json(&g)?,
    }))
}
