use detcot::metric::corner_angles;
use detcot::symmetry::PatternMatrix;
use detcot::variation::{directional_derivative, matrix_derivative, sweep_two_edges};
use detcot::{
    assemble, build_canonical, spectrum, uniform_metric, Canonical, DiscreteMetric, Edge, LaplacianKind,
    PerturbationDirection,
};
use nalgebra::DMatrix;
use rand::Rng;

mod common;

#[test]
fn matrix_tree_theorem_matches_enumeration() {
    let w = 2.0 / 3f64.sqrt();
    let known = [
        (Canonical::Tetrahedron, Some(16)),
        (Canonical::Octahedron, Some(384)),
        (Canonical::CsaszarK7, Some(16807)),
        (Canonical::Torus9, None),
    ];
    for (c, expected) in known {
        let t = build_canonical(c);
        let tau = common::spanning_tree_count(&t);
        if let Some(e) = expected {
            assert_eq!(tau, e, "{c}");
        }
        let n = t.vertex_count() as f64;
        let s = spectrum(&assemble(&t, &uniform_metric(&t, 1.0).unwrap(), LaplacianKind::Cotan).unwrap(), Some(1)).unwrap();
        let oracle = (n - 1.0) * w.ln() + n.ln() + (tau as f64).ln();
        assert!((s.log_pseudo_det - oracle).abs() < 1e-10 * oracle, "{c}: {} vs {oracle}", s.log_pseudo_det);
    }
}

#[test]
fn traceless_pattern_times_distance_constant_inverse_is_trace_free() {
    let mut rng = common::rng(31);
    for c in Canonical::ALL {
        let t = build_canonical(c);
        let n = t.vertex_count();
        let w = 2.0 / 3f64.sqrt();
        let deg = t.degrees()[0] as f64;
        let b = PatternMatrix::new(deg * w + 0.3, -w).to_dense(&t).try_inverse().unwrap();
        for _ in 0..10 {
            let mut a = DMatrix::zeros(n, n);
            let vals: Vec<f64> = (0..t.edge_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            for (e, v) in t.edges().iter().zip(&vals) {
                a[(e.lo(), e.hi())] = v - mean;
                a[(e.hi(), e.lo())] = v - mean;
            }
            let diag: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dmean = diag.iter().sum::<f64>() / n as f64;
            for (i, d) in diag.iter().enumerate() {
                a[(i, i)] = d - dmean;
            }
            let tr = (&a * &b).trace();
            assert!(tr.abs() < 1e-10, "{c}: tr(AB) = {tr:e}");
        }
    }
}

#[test]
fn face_angle_sums_have_zero_derivative() {
    let t = build_canonical(Canonical::Octahedron);
    let mut rng = common::rng(32);
    let m = common::random_metric(&t, &mut rng);
    let h = 1e-5;
    for e in 0..t.edge_count() {
        let mut plus = m.lengths().to_vec();
        let mut minus = m.lengths().to_vec();
        plus[e] += h;
        minus[e] -= h;
        let ap = corner_angles(&t, &DiscreteMetric::new(&t, plus).unwrap()).unwrap();
        let am = corner_angles(&t, &DiscreteMetric::new(&t, minus).unwrap()).unwrap();
        for (p, q) in ap.per_face().iter().zip(am.per_face()) {
            let d = (p.iter().sum::<f64>() - q.iter().sum::<f64>()) / (2.0 * h);
            assert!(d.abs() < 1e-8, "edge {e}: {d:e}");
        }
    }
}

#[test]
fn weight_derivative_has_zero_trace_and_offdiagonal_sum_at_uniform() {
    for c in Canonical::ALL {
        let t = build_canonical(c);
        let m = uniform_metric(&t, 1.0).unwrap();
        for e in 0..t.edge_count() {
            let d = PerturbationDirection::coordinate(&t, e);
            let dot = matrix_derivative(&t, &m, &d, LaplacianKind::Cotan, 1e-5).unwrap();
            let tr = dot.trace();
            let off = dot.sum() - tr;
            assert!(tr.abs() <= 1e-8, "{c} edge {e}: tr {tr:e}");
            assert!(off.abs() <= 1e-8, "{c} edge {e}: off-diagonal sum {off:e}");
        }
    }
}

#[test]
fn central_difference_converges_at_second_order() {
    let t = build_canonical(Canonical::Icosahedron);
    let mut lengths = uniform_metric(&t, 1.0).unwrap().lengths().to_vec();
    lengths[0] = 1.08;
    lengths[7] = 0.95;
    let m = DiscreteMetric::new(&t, lengths).unwrap();
    let d = PerturbationDirection::coordinate(&t, 0);
    for kind in [LaplacianKind::Cotan, LaplacianKind::Normalized] {
        let f: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| directional_derivative(&t, &m, &d, kind, h).unwrap()).collect();
        let ratio = (f[0] - f[1]) / (f[1] - f[2]);
        assert!((ratio - 4.0).abs() < 0.2, "{kind}: Richardson ratio {ratio}");
    }
}

#[test]
fn sweep_csv_is_reproducible() {
    let t = build_canonical(Canonical::Torus9);
    let m = uniform_metric(&t, 1.0).unwrap();
    let run = || {
        sweep_two_edges(&t, &m, Edge::new(0, 1), Edge::new(4, 5), (0.8, 1.2), 9, LaplacianKind::Cotan)
            .unwrap()
            .to_csv()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.lines().count(), 82);
    assert_eq!(a.lines().next(), Some("la,lb,log_det"));
}
