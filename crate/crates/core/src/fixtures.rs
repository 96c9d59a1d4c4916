//! The ten-vertex example graph used throughout the tests and docs.
//!
//! Vertices carry their printed labels 1..=10 shifted down by one, so label
//! `k` is vertex id `k - 1`. Label 8 is the only non-directed donor.

use crate::enumeration::{ExchangeUnit, FirstStageSolution};
use crate::instance::CompatibilityGraph;
use crate::scenario::Scenario;

/// Vertex id for a printed label.
pub const fn v(label: usize) -> usize {
    label - 1
}

const LABELLED_ARCS: [(usize, usize); 15] = [
    (2, 9),
    (9, 10),
    (10, 2),
    (4, 2),
    (2, 3),
    (4, 3),
    (3, 4),
    (6, 1),
    (1, 5),
    (7, 1),
    (5, 7),
    (8, 1),
    (5, 6),
    (3, 6),
    (6, 4),
];

pub fn figure_one() -> CompatibilityGraph {
    let arcs: Vec<(usize, usize)> = LABELLED_ARCS.iter().map(|&(a, b)| (v(a), v(b))).collect();
    CompatibilityGraph::from_arcs(10, &[v(8)], &arcs).expect("fixture is valid")
}

/// Arc id for a labelled arc.
pub fn arc(graph: &CompatibilityGraph, from: usize, to: usize) -> usize {
    graph.arc_id(v(from), v(to)).expect("arc exists in fixture")
}

/// The depicted first-stage matching: cycles (2,9,10), (3,4) and (1,5,6).
pub fn figure_one_first_stage(graph: &CompatibilityGraph) -> FirstStageSolution {
    let cycle = |labels: &[usize]| {
        let ids: Vec<usize> = labels.iter().map(|&l| v(l)).collect();
        ExchangeUnit::cycle(graph, &ids).expect("cycle exists in fixture")
    };
    FirstStageSolution::new(vec![cycle(&[2, 9, 10]), cycle(&[3, 4]), cycle(&[1, 5, 6])])
}

/// Scenario built from labelled vertices and labelled arcs.
pub fn labelled_scenario(
    graph: &CompatibilityGraph,
    vertices: &[usize],
    arcs: &[(usize, usize)],
) -> Scenario {
    let vs: Vec<usize> = vertices.iter().map(|&l| v(l)).collect();
    let as_: Vec<usize> = arcs.iter().map(|&(a, b)| arc(graph, a, b)).collect();
    Scenario::from_failures(graph.num_vertices(), graph.num_arcs(), &vs, &as_)
}
