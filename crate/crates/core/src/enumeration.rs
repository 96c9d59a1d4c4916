//! Cycle and chain enumeration, and the recourse unit sets induced by a
//! first-stage matching under a recourse policy.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::instance::CompatibilityGraph;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    Cycle,
    Chain,
}

/// A cycle or a chain. Cycles list vertices starting at the smallest id;
/// chains start at their non-directed donor. `arcs[i]` joins `vertices[i]` to
/// the next vertex (wrapping for cycles).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExchangeUnit {
    pub id: usize,
    pub kind: UnitKind,
    pub vertices: Vec<usize>,
    pub arcs: Vec<usize>,
}

impl ExchangeUnit {
    /// Builds a cycle through `vertices` in order, rotating it to canonical form.
    /// Returns `None` if an arc is missing or the sequence is not simple.
    pub fn cycle(graph: &CompatibilityGraph, vertices: &[usize]) -> Option<Self> {
        if vertices.len() < 2 || !all_distinct(vertices) || vertices.iter().any(|&v| graph.is_ndd(v)) {
            return None;
        }
        let start = (0..vertices.len()).min_by_key(|&i| vertices[i])?;
        let rotated: Vec<usize> = (0..vertices.len())
            .map(|i| vertices[(start + i) % vertices.len()])
            .collect();
        let arcs = (0..rotated.len())
            .map(|i| graph.arc_id(rotated[i], rotated[(i + 1) % rotated.len()]))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            id: 0,
            kind: UnitKind::Cycle,
            vertices: rotated,
            arcs,
        })
    }

    /// Builds a chain along `vertices`, which must start at a non-directed donor.
    pub fn chain(graph: &CompatibilityGraph, vertices: &[usize]) -> Option<Self> {
        if vertices.len() < 2 || !all_distinct(vertices) || !graph.is_ndd(vertices[0]) {
            return None;
        }
        let arcs = vertices
            .windows(2)
            .map(|w| graph.arc_id(w[0], w[1]))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            id: 0,
            kind: UnitKind::Chain,
            vertices: vertices.to_vec(),
            arcs,
        })
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Number of patient-donor pairs that receive a kidney.
    pub fn transplants(&self, graph: &CompatibilityGraph) -> usize {
        self.vertices.iter().filter(|&&v| !graph.is_ndd(v)).count()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }
}

fn all_distinct(vs: &[usize]) -> bool {
    let set: BTreeSet<_> = vs.iter().collect();
    set.len() == vs.len()
}

/// A vertex-disjoint set of cycles and chains chosen before failures are observed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FirstStageSolution {
    pub units: Vec<ExchangeUnit>,
}

impl FirstStageSolution {
    pub fn new(units: Vec<ExchangeUnit>) -> Self {
        Self { units }
    }

    /// Membership mask over the graph's vertices.
    pub fn vertex_mask(&self, num_vertices: usize) -> Vec<bool> {
        let mut mask = vec![false; num_vertices];
        for u in &self.units {
            for &v in &u.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn transplants(&self, graph: &CompatibilityGraph) -> usize {
        self.units.iter().map(|u| u.transplants(graph)).sum()
    }

    pub fn num_arcs(&self) -> usize {
        self.units.iter().map(|u| u.arcs.len()).sum()
    }

    /// True when the units are vertex-disjoint and respect the length caps.
    pub fn is_valid(&self, max_cycle: usize, max_chain: usize) -> bool {
        let mut seen = BTreeSet::new();
        self.units.iter().all(|u| match u.kind {
            UnitKind::Cycle => u.len() <= max_cycle,
            UnitKind::Chain => u.len() <= max_chain,
        }) && self.units.iter().flat_map(|u| &u.vertices).all(|&v| seen.insert(v))
    }

    /// Units as sorted vertex sequences, for logs.
    pub fn describe(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.units.iter().map(|u| u.vertices.clone()).collect();
        out.sort();
        out
    }
}

fn renumber(mut units: Vec<ExchangeUnit>, offset: usize) -> Vec<ExchangeUnit> {
    for (i, u) in units.iter_mut().enumerate() {
        u.id = offset + i;
    }
    units
}

/// All simple cycles on pair vertices with at most `max_len` arcs, one per rotation class.
pub fn enumerate_cycles(graph: &CompatibilityGraph, max_len: usize) -> Vec<ExchangeUnit> {
    let allowed = vec![true; graph.num_vertices()];
    let mut out = Vec::new();
    for anchor in graph.pairs() {
        cycles_through(graph, anchor, max_len, &allowed, |v| v > anchor, &mut out);
    }
    renumber(out, 0)
}

/// Cycles through `anchor` whose other vertices satisfy `allowed` and `admit`.
fn cycles_through(
    graph: &CompatibilityGraph,
    anchor: usize,
    max_len: usize,
    allowed: &[bool],
    admit: impl Fn(usize) -> bool,
    out: &mut Vec<ExchangeUnit>,
) {
    let mut path = vec![anchor];
    let mut on_path = vec![false; graph.num_vertices()];
    on_path[anchor] = true;
    let mut arcs = Vec::new();
    fn dfs(
        graph: &CompatibilityGraph,
        anchor: usize,
        max_len: usize,
        allowed: &[bool],
        admit: &dyn Fn(usize) -> bool,
        path: &mut Vec<usize>,
        arcs: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<ExchangeUnit>,
    ) {
        let tail = *path.last().unwrap();
        for &(next, arc) in graph.out_neighbors(tail) {
            if next == anchor && path.len() >= 2 {
                let unit = ExchangeUnit::cycle(graph, path).expect("closing arc exists");
                out.push(unit);
            } else if next != anchor
                && path.len() < max_len
                && allowed[next]
                && !on_path[next]
                && !graph.is_ndd(next)
                && admit(next)
            {
                path.push(next);
                arcs.push(arc);
                on_path[next] = true;
                dfs(graph, anchor, max_len, allowed, admit, path, arcs, on_path, out);
                on_path[next] = false;
                arcs.pop();
                path.pop();
            }
        }
    }
    dfs(
        graph, anchor, max_len, allowed, &admit, &mut path, &mut arcs, &mut on_path, out,
    );
}

/// All chains of 1..=`max_len` arcs starting at a non-directed donor; every
/// prefix of a chain is itself emitted.
pub fn enumerate_chains(graph: &CompatibilityGraph, max_len: usize) -> Vec<ExchangeUnit> {
    let allowed = vec![true; graph.num_vertices()];
    let mut out = Vec::new();
    for ndd in graph.ndds() {
        chains_from(graph, ndd, max_len, &allowed, &mut out);
    }
    renumber(out, 0)
}

fn chains_from(
    graph: &CompatibilityGraph,
    ndd: usize,
    max_len: usize,
    allowed: &[bool],
    out: &mut Vec<ExchangeUnit>,
) {
    fn dfs(
        graph: &CompatibilityGraph,
        max_len: usize,
        allowed: &[bool],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<ExchangeUnit>,
    ) {
        if path.len() > max_len {
            return;
        }
        let tail = *path.last().unwrap();
        for &(next, _) in graph.out_neighbors(tail) {
            if allowed[next] && !on_path[next] {
                path.push(next);
                on_path[next] = true;
                out.push(ExchangeUnit::chain(graph, path).expect("path arcs exist"));
                dfs(graph, max_len, allowed, path, on_path, out);
                on_path[next] = false;
                path.pop();
            }
        }
    }
    let mut on_path = vec![false; graph.num_vertices()];
    on_path[ndd] = true;
    dfs(graph, max_len, allowed, &mut vec![ndd], &mut on_path, out);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    FullRecourse,
    FirstStageOnly,
}

/// Vertices and arcs touched by at least one recourse unit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitoryGraph {
    pub vertices: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// Recourse units for a first-stage matching: cycles first, then chains, ids
/// dense in that order. `weights[c]` counts the first-stage pairs in unit `c`.
#[derive(Debug, Clone)]
pub struct PolicyUnitSets {
    pub policy: Policy,
    pub units: Vec<ExchangeUnit>,
    pub weights: Vec<u32>,
    pub num_cycles: usize,
    pub transitory: TransitoryGraph,
    vertex_units: Vec<Vec<usize>>,
    arc_units: Vec<Vec<usize>>,
    num_graph_vertices: usize,
    num_graph_arcs: usize,
}

impl PolicyUnitSets {
    /// Wraps pre-built units (cycles first) with their weights.
    pub fn from_units(
        graph: &CompatibilityGraph,
        policy: Policy,
        cycles: Vec<ExchangeUnit>,
        chains: Vec<ExchangeUnit>,
        first_stage_pairs: &[bool],
    ) -> Self {
        let num_cycles = cycles.len();
        let units = renumber(cycles.into_iter().chain(chains).collect(), 0);
        let weights = units
            .iter()
            .map(|u| {
                u.vertices
                    .iter()
                    .filter(|&&v| first_stage_pairs[v] && !graph.is_ndd(v))
                    .count() as u32
            })
            .collect();
        let mut vertex_units = vec![Vec::new(); graph.num_vertices()];
        let mut arc_units = vec![Vec::new(); graph.num_arcs()];
        for u in &units {
            for &v in &u.vertices {
                vertex_units[v].push(u.id);
            }
            for &a in &u.arcs {
                arc_units[a].push(u.id);
            }
        }
        let transitory = TransitoryGraph {
            vertices: (0..graph.num_vertices()).filter(|&v| !vertex_units[v].is_empty()).collect(),
            arcs: (0..graph.num_arcs()).filter(|&a| !arc_units[a].is_empty()).collect(),
        };
        Self {
            policy,
            units,
            weights,
            num_cycles,
            transitory,
            vertex_units,
            arc_units,
            num_graph_vertices: graph.num_vertices(),
            num_graph_arcs: graph.num_arcs(),
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn cycles(&self) -> std::ops::Range<usize> {
        0..self.num_cycles
    }

    pub fn chains(&self) -> std::ops::Range<usize> {
        self.num_cycles..self.units.len()
    }

    pub fn is_cycle(&self, id: usize) -> bool {
        id < self.num_cycles
    }

    pub fn units_with_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_units[v]
    }

    pub fn units_with_arc(&self, a: usize) -> &[usize] {
        &self.arc_units[a]
    }

    pub fn num_graph_vertices(&self) -> usize {
        self.num_graph_vertices
    }

    pub fn num_graph_arcs(&self) -> usize {
        self.num_graph_arcs
    }

    /// Id of the unit with the same kind and vertex sequence, if present.
    pub fn find(&self, unit: &ExchangeUnit) -> Option<usize> {
        let first = *unit.vertices.first()?;
        self.vertex_units[first]
            .iter()
            .copied()
            .find(|&id| self.units[id].kind == unit.kind && self.units[id].vertices == unit.vertices)
    }

    pub fn total_weight(&self, ids: &[usize]) -> u32 {
        ids.iter().map(|&c| self.weights[c]).sum()
    }
}

/// Recourse units for `first_stage` under `policy`.
///
/// Cycles are grown one first-stage pair at a time, removing each pair after
/// its cycles are collected so no cycle is found twice. Chains start from every
/// donor and are kept when they visit a first-stage pair. Under
/// [`Policy::FirstStageOnly`] the search is confined to first-stage vertices.
pub fn policy_units(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
    first_stage: &FirstStageSolution,
    policy: Policy,
) -> PolicyUnitSets {
    let n = graph.num_vertices();
    let in_first = first_stage.vertex_mask(n);
    let first_pairs: Vec<usize> = (0..n).filter(|&v| in_first[v] && !graph.is_ndd(v)).collect();
    let mut allowed = match policy {
        Policy::FullRecourse => vec![true; n],
        Policy::FirstStageOnly => in_first.clone(),
    };

    let mut cycles = Vec::new();
    for &u in &first_pairs {
        cycles_through(graph, u, max_cycle, &allowed, |_| true, &mut cycles);
        allowed[u] = false;
    }
    let allowed = match policy {
        Policy::FullRecourse => vec![true; n],
        Policy::FirstStageOnly => in_first.clone(),
    };

    let mut chains = Vec::new();
    for ndd in graph.ndds().filter(|&d| allowed[d]) {
        let mut found = Vec::new();
        chains_from(graph, ndd, max_chain, &allowed, &mut found);
        chains.extend(
            found
                .into_iter()
                .filter(|c| c.vertices.iter().any(|&v| in_first[v] && !graph.is_ndd(v))),
        );
    }
    PolicyUnitSets::from_units(graph, policy, cycles, chains, &in_first)
}

/// Ids of units with no failed vertex or arc.
pub fn second_stage_units(units: &PolicyUnitSets, scenario: &Scenario) -> Vec<usize> {
    units
        .units
        .iter()
        .filter(|u| !crate::scenario::unit_fails(u, scenario))
        .map(|u| u.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure_one, figure_one_first_stage, labelled_scenario, v};
    use crate::generator::{random_instance, GeneratorConfig};

    fn labels(u: &ExchangeUnit) -> Vec<usize> {
        u.vertices.iter().map(|&x| x + 1).collect()
    }

    fn has(units: &[ExchangeUnit], kind: UnitKind, seq: &[usize]) -> bool {
        units.iter().any(|u| u.kind == kind && labels(u) == seq)
    }

    #[test]
    fn figure_one_cycles_and_chains() {
        let g = figure_one();
        let cycles = enumerate_cycles(&g, 4);
        for seq in [&[2, 9, 10][..], &[3, 4], &[3, 6, 4], &[1, 5, 6], &[1, 5, 7]] {
            assert!(has(&cycles, UnitKind::Cycle, seq), "missing cycle {seq:?}");
        }
        let chains = enumerate_chains(&g, 4);
        for seq in [&[8, 1][..], &[8, 1, 5], &[8, 1, 5, 6], &[8, 1, 5, 7]] {
            assert!(has(&chains, UnitKind::Chain, seq), "missing chain {seq:?}");
        }
        assert!(enumerate_cycles(&CompatibilityGraph::from_arcs(3, &[], &[]).unwrap(), 3).is_empty());
        assert!(enumerate_chains(&CompatibilityGraph::from_arcs(2, &[], &[(0, 1), (1, 0)]).unwrap(), 3).is_empty());
    }

    #[test]
    fn policy_sets_on_figure_one() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let full = policy_units(&g, 4, 4, &x, Policy::FullRecourse);
        assert!(has(&full.units, UnitKind::Cycle, &[1, 5, 7]));
        assert!(has(&full.units, UnitKind::Chain, &[8, 1, 5]));
        let fso = policy_units(&g, 4, 4, &x, Policy::FirstStageOnly);
        assert!(!has(&fso.units, UnitKind::Cycle, &[1, 5, 7]));
        assert!(!has(&fso.units, UnitKind::Chain, &[8, 1, 5]));
        for u in &fso.units {
            assert!(full.find(u).is_some());
        }
        let empty = policy_units(&g, 4, 4, &FirstStageSolution::default(), Policy::FullRecourse);
        assert!(empty.is_empty());
    }

    #[test]
    fn second_stage_units_on_figure_one() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let units = policy_units(&g, 4, 4, &x, Policy::FullRecourse);
        let gamma = labelled_scenario(&g, &[2], &[(5, 6)]);
        let alive = second_stage_units(&units, &gamma);
        let alive_labels: Vec<Vec<usize>> = alive.iter().map(|&c| labels(&units.units[c])).collect();
        assert!(!alive_labels.contains(&vec![2, 9, 10]));
        assert!(!alive_labels.contains(&vec![8, 1, 5, 6]));
        assert!(alive_labels.contains(&vec![8, 1, 5]));
        let none = Scenario::empty(g.num_vertices(), g.num_arcs());
        assert_eq!(second_stage_units(&units, &none).len(), units.len());
        assert_eq!(v(8), 7);
    }

    /// Cycle oracle: every vertex subset, every ordering starting at its minimum.
    fn brute_cycles(g: &CompatibilityGraph, k: usize) -> BTreeSet<Vec<usize>> {
        fn perms(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(cur.clone());
                return;
            }
            for i in 0..rest.len() {
                let x = rest.remove(i);
                cur.push(x);
                perms(rest, cur, out);
                cur.pop();
                rest.insert(i, x);
            }
        }
        let pairs: Vec<usize> = g.pairs().collect();
        let mut found = BTreeSet::new();
        for mask in 1u32..(1 << pairs.len()) {
            let subset: Vec<usize> = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            if subset.len() < 2 || subset.len() > k {
                continue;
            }
            let mut tails = Vec::new();
            perms(&mut subset[1..].to_vec(), &mut vec![], &mut tails);
            for t in tails {
                let mut seq = vec![subset[0]];
                seq.extend(t);
                let closed = (0..seq.len()).all(|i| g.arc_id(seq[i], seq[(i + 1) % seq.len()]).is_some());
                if closed {
                    found.insert(seq);
                }
            }
        }
        found
    }

    #[test]
    fn cycles_match_subset_brute_force() {
        for seed in 0..20 {
            let g = random_instance(&GeneratorConfig { pairs: 8, ndds: 0, arc_probability: 0.35, ..Default::default() }, seed);
            let got: BTreeSet<Vec<usize>> = enumerate_cycles(&g, 3).into_iter().map(|u| u.vertices).collect();
            assert_eq!(got, brute_cycles(&g, 3), "seed {seed}");
        }
    }

    /// Chain oracle: breadth-first extension of every path, no recursion.
    fn brute_chains(g: &CompatibilityGraph, l: usize) -> BTreeSet<Vec<usize>> {
        let mut frontier: Vec<Vec<usize>> = g.ndds().map(|d| vec![d]).collect();
        let mut found = BTreeSet::new();
        for _ in 0..l {
            let mut next = Vec::new();
            for p in &frontier {
                for w in 0..g.num_vertices() {
                    if !p.contains(&w) && g.arc_id(*p.last().unwrap(), w).is_some() {
                        let mut q = p.clone();
                        q.push(w);
                        found.insert(q.clone());
                        next.push(q);
                    }
                }
            }
            frontier = next;
        }
        found
    }

    #[test]
    fn chains_match_path_brute_force_and_are_prefix_closed() {
        for seed in 0..20 {
            let g = random_instance(&GeneratorConfig { pairs: 7, ndds: 2, arc_probability: 0.3, ..Default::default() }, seed);
            let chains = enumerate_chains(&g, 3);
            let got: BTreeSet<Vec<usize>> = chains.iter().map(|u| u.vertices.clone()).collect();
            assert_eq!(got.len(), chains.len());
            assert_eq!(got, brute_chains(&g, 3), "seed {seed}");
            for c in &got {
                if c.len() > 2 {
                    assert!(got.contains(&c[..c.len() - 1]));
                }
            }
        }
    }

    /// Filter oracle: all units that meet the policy predicate.
    fn filtered(g: &CompatibilityGraph, k: usize, l: usize, x: &FirstStageSolution, policy: Policy) -> BTreeSet<(UnitKind, Vec<usize>)> {
        let mask = x.vertex_mask(g.num_vertices());
        enumerate_cycles(g, k)
            .into_iter()
            .chain(enumerate_chains(g, l))
            .filter(|u| u.vertices.iter().any(|&w| mask[w] && !g.is_ndd(w)))
            .filter(|u| policy == Policy::FullRecourse || u.vertices.iter().all(|&w| mask[w]))
            .map(|u| (u.kind, u.vertices))
            .collect()
    }

    #[test]
    fn policy_units_match_filter_oracle() {
        use crate::generator::random_first_stage;
        for seed in 0..30 {
            let g = random_instance(&GeneratorConfig { pairs: 8, ndds: 2, arc_probability: 0.3, ..Default::default() }, seed);
            let x = random_first_stage(&g, 3, 3, seed);
            for policy in [Policy::FullRecourse, Policy::FirstStageOnly] {
                let sets = policy_units(&g, 3, 3, &x, policy);
                let got: BTreeSet<(UnitKind, Vec<usize>)> = sets.units.iter().map(|u| (u.kind, u.vertices.clone())).collect();
                assert_eq!(got.len(), sets.len());
                assert_eq!(got, filtered(&g, 3, 3, &x, policy), "seed {seed} {policy:?}");
                let first_pairs = x.vertex_mask(g.num_vertices()).iter().enumerate().filter(|&(w, &m)| m && !g.is_ndd(w)).count() as u32;
                for (c, u) in sets.units.iter().enumerate() {
                    assert!(sets.weights[c] >= 1);
                    assert!(sets.weights[c] as usize <= u.vertices.len());
                    assert!(sets.weights[c] <= first_pairs);
                }
            }
        }
    }
}
