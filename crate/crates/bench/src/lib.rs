//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tropdiv::harness::{random_curve, random_divisor, CurveShape};
use tropdiv::{Divisor, Graph, MetricGraph};

/// Two loops of lengths 2 and 3 joined by a bridge of length 1.
pub fn dumbbell() -> Arc<MetricGraph> {
    Arc::new(
        MetricGraph::build(
            &["P", "Q"],
            &[("c1", "P", "P", "2"), ("c2", "Q", "Q", "3"), ("e", "P", "Q", "1")],
        )
        .unwrap(),
    )
}

/// A seeded random curve of the given genus with a divisor of the given degree.
pub fn random_instance(seed: u64, genus: usize, degree: i64) -> (Arc<MetricGraph>, Divisor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = CurveShape {
        genus,
        edges: genus + 2,
        ends: 0,
        max_denominator: 3,
        max_length: 2,
    };
    let g = Arc::new(random_curve(&mut rng, &shape));
    let d = random_divisor(&mut rng, &g, degree, 3);
    (g, d)
}

/// Complete graph on n vertices.
pub fn complete_graph(n: usize) -> Graph {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((format!("e{i}_{j}"), names[i].clone(), names[j].clone()));
        }
    }
    Graph::new(&names, &edges).unwrap()
}
