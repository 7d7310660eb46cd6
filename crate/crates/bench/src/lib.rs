//! Fixtures shared by the criterion benches.

use detcot::{build_canonical, uniform_metric, Canonical, DiscreteMetric, Triangulation};

/// A canonical triangulation with its unit uniform metric.
pub fn uniform_fixture(c: Canonical) -> (Triangulation, DiscreteMetric) {
    let t = build_canonical(c);
    let m = uniform_metric(&t, 1.0).expect("unit length is positive");
    (t, m)
}
