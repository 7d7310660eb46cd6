use detcot::mesh::MeshError;
use detcot::metric::MetricError;
use detcot::{build_canonical, uniform_metric, Canonical, DiscreteMetric, Triangulation};

mod common;

#[test]
fn mesh_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    for c in Canonical::ALL {
        let t = build_canonical(c);
        let path = dir.path().join(format!("{c}.mesh"));
        t.save(&path).unwrap();
        let back = Triangulation::load(&path).unwrap();
        assert_eq!(back.vertex_count(), t.vertex_count());
        assert_eq!(back.edges(), t.edges());
        assert_eq!(back.faces(), t.faces());
    }
}

#[test]
fn metric_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let t = build_canonical(Canonical::Icosahedron);
    let m = common::random_metric(&t, &mut common::rng(11));
    let path = dir.path().join("ico.metric");
    m.save(&t, &path).unwrap();
    let back = DiscreteMetric::load(&t, &path).unwrap();
    assert_eq!(back.lengths(), m.lengths());
}

#[test]
fn out_of_range_vertex_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mesh");
    std::fs::write(&path, "vertices 3\nedge 0 1\nedge 1 3\n").unwrap();
    match Triangulation::load(&path) {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn edge_in_one_triangle_fails_closedness_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.mesh");
    let text = "vertices 4\nedge 0 1\nedge 0 2\nedge 1 2\nedge 0 3\nedge 1 3\nedge 2 3\n\
                triangle 0 1 2\ntriangle 0 1 3\ntriangle 0 2 3\n";
    std::fs::write(&path, text).unwrap();
    let err = Triangulation::load(&path).unwrap_err();
    assert!(matches!(err, MeshError::Validation(_)), "{err:?}");
    assert!(err.to_string().contains("not closed"), "{err}");
}

#[test]
fn metric_file_with_missing_edge_is_rejected() {
    let t = build_canonical(Canonical::Tetrahedron);
    let text = uniform_metric(&t, 1.0).unwrap().to_text(&t);
    let truncated: String = text.lines().filter(|l| !l.contains("length 2 3")).map(|l| format!("{l}\n")).collect();
    assert!(matches!(DiscreteMetric::parse(&t, &truncated), Err(MetricError::MissingLength(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = Triangulation::load("/nonexistent/definitely/missing.mesh").unwrap_err();
    assert!(matches!(err, MeshError::Io(_)));
}
