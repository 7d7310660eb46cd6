#![allow(dead_code)]

use detcot::{DiscreteMetric, Triangulation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lengths `1 + U(-0.1, 0.1)`: every face stays acute.
pub fn random_metric(t: &Triangulation, rng: &mut ChaCha8Rng) -> DiscreteMetric {
    DiscreteMetric::jittered(t, 1.0, 0.1, rng)
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        v = parent[v];
    }
    v
}

fn extend(edges: &[(usize, usize)], start: usize, parent: &[usize], needed: usize) -> u64 {
    if needed == 0 {
        return 1;
    }
    if edges.len() - start < needed {
        return 0;
    }
    let mut total = 0;
    for k in start..edges.len() {
        if edges.len() - k < needed {
            break;
        }
        let (a, b) = edges[k];
        let mut p = parent.to_vec();
        let (ra, rb) = (find(&mut p, a), find(&mut p, b));
        if ra != rb {
            p[ra] = rb;
            total += extend(edges, k + 1, &p, needed - 1);
        }
    }
    total
}

/// Spanning trees counted by enumerating acyclic edge subsets of size `n - 1`.
pub fn spanning_tree_count(t: &Triangulation) -> u64 {
    let edges: Vec<(usize, usize)> = t.edges().iter().map(|e| (e.lo(), e.hi())).collect();
    let parent: Vec<usize> = (0..t.vertex_count()).collect();
    extend(&edges, 0, &parent, t.vertex_count() - 1)
}

/// Fisher–Yates permutation of `0..n`.
pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
