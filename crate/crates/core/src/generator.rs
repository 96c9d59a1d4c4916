//! Seeded random instances for tests and experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumeration::{enumerate_chains, enumerate_cycles, FirstStageSolution};
use crate::instance::{ArcRecord, CompatibilityGraph, VertexKind, VertexRecord};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub pairs: usize,
    pub ndds: usize,
    /// Probability of each admissible arc, drawn independently.
    pub arc_probability: f64,
    /// Cap on the number of arcs; surplus arcs are dropped at random.
    pub max_arcs: Option<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            pairs: 8,
            ndds: 1,
            arc_probability: 0.3,
            max_arcs: None,
        }
    }
}

/// Erdős–Rényi compatibility graph: pairs get ids `0..pairs`, donors follow.
/// Every pair receives a PRA drawn uniformly from 0..=100.
pub fn random_instance(config: &GeneratorConfig, seed: u64) -> CompatibilityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.pairs + config.ndds;
    let vertices: Vec<VertexRecord> = (0..n)
        .map(|id| {
            if id < config.pairs {
                VertexRecord {
                    id,
                    kind: VertexKind::Pair,
                    pra: Some(rng.gen_range(0..=100) as f64),
                }
            } else {
                VertexRecord {
                    id,
                    kind: VertexKind::NonDirectedDonor,
                    pra: None,
                }
            }
        })
        .collect();
    let mut arcs = Vec::new();
    for from in 0..n {
        for to in 0..config.pairs {
            if from != to && rng.gen_bool(config.arc_probability) {
                arcs.push(ArcRecord { from, to });
            }
        }
    }
    if let Some(cap) = config.max_arcs {
        if arcs.len() > cap {
            arcs.shuffle(&mut rng);
            arcs.truncate(cap);
            arcs.sort_by_key(|a| (a.from, a.to));
        }
    }
    CompatibilityGraph::new(vertices, arcs).expect("generated graphs are valid")
}

/// A random inclusion-maximal matching built greedily from shuffled units.
pub fn random_first_stage(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
    seed: u64,
) -> FirstStageSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut units: Vec<_> = enumerate_cycles(graph, max_cycle)
        .into_iter()
        .chain(enumerate_chains(graph, max_chain))
        .collect();
    units.shuffle(&mut rng);
    let mut used = vec![false; graph.num_vertices()];
    let mut chosen = Vec::new();
    for u in units {
        if u.vertices.iter().all(|&v| !used[v]) {
            for &v in &u.vertices {
                used[v] = true;
            }
            chosen.push(u);
        }
    }
    FirstStageSolution::new(chosen)
}
