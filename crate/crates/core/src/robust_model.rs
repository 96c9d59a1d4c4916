//! Robust first-stage model with position-indexed chains, and the delayed
//! scenario-generation loop around it.

use std::time::{Duration, Instant};

use crate::bip::{solve, BinaryProgram, Sense, SolveLimits, SolveStatus};
use crate::enumeration::{enumerate_cycles, policy_units, ExchangeUnit, FirstStageSolution, Policy};
use crate::instance::CompatibilityGraph;
use crate::scenario::{Budget, Scenario, ScenarioRecord};
use crate::second_stage::{solve_second_stage, AlgorithmConfig, SecondStageProblem, SecondStageStats};
use crate::trace::{Trace, TraceEvent};

/// How chain-arc positions are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionMode {
    /// Positions reached by some simple path from a donor.
    #[default]
    SimplePaths,
    /// Every position from the tail's BFS level onwards.
    BfsLevels,
}

/// Which positions receive chain-continuity rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContinuityRows {
    /// Positions `1..L-1`.
    #[default]
    Conventional,
    /// Positions `1..=L` except `L-1`.
    SkipPenultimate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionIndex {
    pub max_chain: usize,
    /// Sorted feasible positions (1-based) per arc.
    pub positions: Vec<Vec<usize>>,
    /// Arcs per position; entry 0 is unused.
    pub by_position: Vec<Vec<usize>>,
}

impl PositionIndex {
    fn from_positions(max_chain: usize, positions: Vec<Vec<usize>>) -> Self {
        let mut by_position = vec![Vec::new(); max_chain + 1];
        for (a, ls) in positions.iter().enumerate() {
            for &l in ls {
                by_position[l].push(a);
            }
        }
        Self {
            max_chain,
            positions,
            by_position,
        }
    }
}

pub fn compute_position_index(graph: &CompatibilityGraph, max_chain: usize, mode: PositionMode) -> PositionIndex {
    let mut positions = vec![Vec::new(); graph.num_arcs()];
    match mode {
        PositionMode::SimplePaths => {
            fn walk(graph: &CompatibilityGraph, v: usize, depth: usize, max_chain: usize, on_path: &mut [bool], positions: &mut [Vec<usize>]) {
                if depth == max_chain {
                    return;
                }
                for &(w, a) in graph.out_neighbors(v) {
                    if on_path[w] {
                        continue;
                    }
                    if !positions[a].contains(&(depth + 1)) {
                        positions[a].push(depth + 1);
                    }
                    on_path[w] = true;
                    walk(graph, w, depth + 1, max_chain, on_path, positions);
                    on_path[w] = false;
                }
            }
            let mut on_path = vec![false; graph.num_vertices()];
            for n in graph.ndds() {
                on_path[n] = true;
                walk(graph, n, 0, max_chain, &mut on_path, &mut positions);
                on_path[n] = false;
            }
            for ls in &mut positions {
                ls.sort_unstable();
            }
        }
        PositionMode::BfsLevels => {
            let mut level = vec![usize::MAX; graph.num_vertices()];
            let mut queue = std::collections::VecDeque::new();
            for n in graph.ndds() {
                level[n] = 0;
                queue.push_back(n);
            }
            while let Some(v) = queue.pop_front() {
                for &(w, _) in graph.out_neighbors(v) {
                    if level[w] == usize::MAX {
                        level[w] = level[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            for (a, arc) in graph.arcs().iter().enumerate() {
                if graph.is_ndd(arc.from) {
                    if max_chain >= 1 {
                        positions[a].push(1);
                    }
                } else if level[arc.from] != usize::MAX && level[arc.from] < max_chain {
                    positions[a].extend(level[arc.from] + 1..=max_chain);
                }
            }
        }
    }
    PositionIndex::from_positions(max_chain, positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelOptions {
    pub max_cycle: usize,
    pub max_chain: usize,
    pub policy: Policy,
    pub positions: PositionMode,
    pub continuity: ContinuityRows,
}

impl ModelOptions {
    pub fn new(max_cycle: usize, max_chain: usize, policy: Policy) -> Self {
        Self {
            max_cycle,
            max_chain,
            policy,
            positions: PositionMode::default(),
            continuity: ContinuityRows::default(),
        }
    }
}

/// Variable layout of one matching block (first stage or one scenario).
#[derive(Debug, Clone)]
struct MatchingBlock {
    cycle_vars: Vec<usize>,
    /// `(arc, position, var)` triples.
    chain_vars: Vec<(usize, usize, usize)>,
}

impl MatchingBlock {
    fn new(program: &mut BinaryProgram, cycles: &[ExchangeUnit], index: &PositionIndex) -> Self {
        let cycle_vars = cycles.iter().map(|_| program.add_var(0)).collect();
        let mut chain_vars = Vec::new();
        for (a, ls) in index.positions.iter().enumerate() {
            for &l in ls {
                chain_vars.push((a, l, program.add_var(0)));
            }
        }
        Self { cycle_vars, chain_vars }
    }

    /// Terms for "pair `v` receives a kidney".
    fn inflow(&self, graph: &CompatibilityGraph, cycles: &[ExchangeUnit], v: usize) -> Vec<(usize, i64)> {
        let mut terms: Vec<(usize, i64)> = cycles
            .iter()
            .zip(&self.cycle_vars)
            .filter(|(c, _)| c.contains_vertex(v))
            .map(|(_, &x)| (x, 1))
            .collect();
        terms.extend(
            self.chain_vars
                .iter()
                .filter(|&&(a, _, _)| graph.arc(a).to == v)
                .map(|&(_, _, x)| (x, 1)),
        );
        terms
    }

    fn donor_start(&self, graph: &CompatibilityGraph, n: usize) -> Vec<(usize, i64)> {
        self.chain_vars
            .iter()
            .filter(|&&(a, l, _)| l == 1 && graph.arc(a).from == n)
            .map(|&(_, _, x)| (x, 1))
            .collect()
    }

    /// Matching rows; `failed` zeroes the capacity of failed elements.
    fn add_rows(
        &self,
        program: &mut BinaryProgram,
        graph: &CompatibilityGraph,
        cycles: &[ExchangeUnit],
        options: &ModelOptions,
        failed: Option<&Scenario>,
    ) {
        let cap = |fails: bool| if fails { 0 } else { 1 };
        for n in graph.ndds() {
            let terms = self.donor_start(graph, n);
            if !terms.is_empty() {
                program.add(terms, Sense::Le, cap(failed.is_some_and(|s| s.vertex_fail[n])));
            }
        }
        for v in graph.pairs() {
            let terms = self.inflow(graph, cycles, v);
            if !terms.is_empty() {
                program.add(terms, Sense::Le, cap(failed.is_some_and(|s| s.vertex_fail[v])));
            }
        }
        if let Some(s) = failed {
            for a in s.failed_arcs() {
                let mut terms: Vec<(usize, i64)> = cycles
                    .iter()
                    .zip(&self.cycle_vars)
                    .filter(|(c, _)| c.arcs.contains(&a))
                    .map(|(_, &x)| (x, 1))
                    .collect();
                terms.extend(self.chain_vars.iter().filter(|t| t.0 == a).map(|t| (t.2, 1)));
                if !terms.is_empty() {
                    program.add(terms, Sense::Le, 0);
                }
            }
        }
        let l_max = options.max_chain;
        let levels: Vec<usize> = match options.continuity {
            ContinuityRows::Conventional => (1..l_max).collect(),
            ContinuityRows::SkipPenultimate => (1..=l_max).filter(|&l| l + 1 != l_max).collect(),
        };
        for v in graph.pairs() {
            for &l in &levels {
                let mut terms: Vec<(usize, i64)> = self
                    .chain_vars
                    .iter()
                    .filter(|&&(a, p, _)| p == l + 1 && graph.arc(a).from == v)
                    .map(|&(_, _, x)| (x, 1))
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                terms.extend(
                    self.chain_vars
                        .iter()
                        .filter(|&&(a, p, _)| p == l && graph.arc(a).to == v)
                        .map(|&(_, _, x)| (x, -1)),
                );
                program.add(terms, Sense::Le, 0);
            }
        }
    }

    fn decode(&self, graph: &CompatibilityGraph, cycles: &[ExchangeUnit], x: &bitvec::slice::BitSlice) -> FirstStageSolution {
        let mut units: Vec<ExchangeUnit> = cycles
            .iter()
            .zip(&self.cycle_vars)
            .filter(|(_, &var)| x[var])
            .map(|(c, _)| c.clone())
            .collect();
        let chosen: Vec<(usize, usize)> = self
            .chain_vars
            .iter()
            .filter(|t| x[t.2])
            .map(|&(a, l, _)| (a, l))
            .collect();
        for n in graph.ndds() {
            let mut path = vec![n];
            let mut at = n;
            for l in 1.. {
                match chosen.iter().find(|&&(a, p)| p == l && graph.arc(a).from == at) {
                    Some(&(a, _)) => {
                        at = graph.arc(a).to;
                        path.push(at);
                    }
                    None => break,
                }
            }
            if path.len() > 1 {
                units.push(ExchangeUnit::chain(graph, &path).expect("decoded chain follows arcs"));
            }
        }
        FirstStageSolution::new(units)
    }
}

/// The scenario-indexed first-stage program.
#[derive(Debug, Clone)]
pub struct RobustPicefModel {
    pub program: BinaryProgram,
    cycles: Vec<ExchangeUnit>,
    first: MatchingBlock,
    pub index: PositionIndex,
}

impl RobustPicefModel {
    pub fn decode(&self, graph: &CompatibilityGraph, x: &bitvec::slice::BitSlice) -> FirstStageSolution {
        self.first.decode(graph, &self.cycles, x)
    }
}

pub fn build_fsf(graph: &CompatibilityGraph, options: &ModelOptions, scenarios: &[Scenario]) -> RobustPicefModel {
    let cycles = enumerate_cycles(graph, options.max_cycle);
    let index = compute_position_index(graph, options.max_chain, options.positions);
    let mut p = BinaryProgram::maximize(0);
    let first = MatchingBlock::new(&mut p, &cycles, &index);
    first.add_rows(&mut p, graph, &cycles, options, None);

    let pairs: Vec<usize> = graph.pairs().collect();
    let objective: Vec<usize> = pairs.iter().map(|_| p.add_var(1)).collect();
    for w in objective.windows(2) {
        p.add(vec![(w[1], 1), (w[0], -1)], Sense::Le, 0);
    }
    let mut cap: Vec<(usize, i64)> = objective.iter().map(|&z| (z, 1)).collect();
    for &v in &pairs {
        cap.extend(first.inflow(graph, &cycles, v).into_iter().map(|(x, _)| (x, -1)));
    }
    p.add(cap, Sense::Le, 0);

    for s in scenarios {
        let block = MatchingBlock::new(&mut p, &cycles, &index);
        block.add_rows(&mut p, graph, &cycles, options, Some(s));
        let mut bind: Vec<(usize, i64)> = objective.iter().map(|&z| (z, 1)).collect();
        for &v in &pairs {
            let t = p.add_var(0);
            bind.push((t, -1));
            let first_in = first.inflow(graph, &cycles, v);
            let second_in = block.inflow(graph, &cycles, v);
            let mut row = vec![(t, 1)];
            row.extend(first_in.iter().map(|&(x, _)| (x, -1)));
            p.add(row, Sense::Le, 0);
            let mut row = vec![(t, 1)];
            row.extend(second_in.iter().map(|&(x, _)| (x, -1)));
            p.add(row, Sense::Le, 0);
            if options.policy == Policy::FirstStageOnly && !second_in.is_empty() {
                let mut row = second_in.clone();
                row.extend(first_in.iter().map(|&(x, _)| (x, -1)));
                p.add(row, Sense::Le, 0);
            }
        }
        p.add(bind, Sense::Le, 0);
        if options.policy == Policy::FirstStageOnly {
            for n in graph.ndds() {
                let mut row = block.donor_start(graph, n);
                if row.is_empty() {
                    continue;
                }
                row.extend(first.donor_start(graph, n).into_iter().map(|(x, _)| (x, -1)));
                p.add(row, Sense::Le, 0);
            }
        }
    }
    RobustPicefModel {
        program: p,
        cycles,
        first,
        index,
    }
}

#[derive(Debug, Clone)]
pub struct FsfSolution {
    pub matching: FirstStageSolution,
    pub value: i64,
    pub optimal: bool,
}

pub fn solve_fsf(graph: &CompatibilityGraph, options: &ModelOptions, scenarios: &[Scenario], limits: &SolveLimits) -> FsfSolution {
    let model = build_fsf(graph, options, scenarios);
    let out = solve(&model.program, limits);
    FsfSolution {
        matching: model.decode(graph, &out.assignment),
        value: out.objective_value,
        optimal: out.status == SolveStatus::Optimal,
    }
}

/// Maximum number of transplants with no failures.
pub fn deterministic_optimum(graph: &CompatibilityGraph, max_cycle: usize, max_chain: usize) -> FsfSolution {
    solve_fsf(graph, &ModelOptions::new(max_cycle, max_chain, Policy::FullRecourse), &[], &SolveLimits::unlimited())
}

#[derive(Debug, Clone)]
pub struct RobustConfig {
    pub model: ModelOptions,
    pub budget: Budget,
    pub second_stage: AlgorithmConfig,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustIteration {
    pub first_stage: Vec<Vec<usize>>,
    pub fsf_value: i64,
    pub second_stage_value: i64,
    pub worst_case: ScenarioRecord,
}

#[derive(Debug, Clone)]
pub struct RobustRun {
    pub scenarios: Vec<Scenario>,
    pub matching: FirstStageSolution,
    pub value: i64,
    pub worst_case: Scenario,
    pub optimal: bool,
    pub iterations: Vec<RobustIteration>,
    pub stats: SecondStageStats,
    pub trace: Trace,
}

impl RobustRun {
    pub fn first_stage_iterations(&self) -> usize {
        self.iterations.len()
    }
}

/// Alternates the first-stage model with worst-case scenario search until
/// the worst case of the chosen matching meets the model's bound.
pub fn solve_robust(graph: &CompatibilityGraph, config: &RobustConfig) -> RobustRun {
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);
    let remaining = || deadline.map(|d| d.saturating_duration_since(Instant::now()));
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut iterations = Vec::new();
    let mut stats = SecondStageStats::default();
    let mut trace = Trace::default();
    let options = config.model;

    loop {
        let limits = SolveLimits { deadline };
        let fsf = solve_fsf(graph, &options, &scenarios, &limits);
        trace.push(TraceEvent::FirstStage {
            iteration: iterations.len() + 1,
            units: fsf.matching.describe(),
            value: fsf.value,
            scenarios: scenarios.len(),
        });
        let empty = Scenario::empty(graph.num_vertices(), graph.num_arcs());
        if !fsf.optimal || fsf.matching.units.is_empty() {
            iterations.push(RobustIteration {
                first_stage: fsf.matching.describe(),
                fsf_value: fsf.value,
                second_stage_value: fsf.value,
                worst_case: empty.to_record(graph),
            });
            return RobustRun {
                scenarios,
                matching: fsf.matching,
                value: fsf.value,
                worst_case: empty,
                optimal: fsf.optimal,
                iterations,
                stats,
                trace,
            };
        }
        let units = policy_units(graph, options.max_cycle, options.max_chain, &fsf.matching, options.policy);
        let problem = SecondStageProblem {
            graph,
            units: &units,
            first_stage: &fsf.matching,
            bound: fsf.value,
            budget: config.budget,
            max_chain: options.max_chain,
        };
        let mut ss_config = config.second_stage.clone();
        if let Some(left) = remaining() {
            ss_config.time_limit = Some(ss_config.time_limit.map_or(left, |t| t.min(left)));
        }
        let ss = solve_second_stage(&problem, &ss_config);
        stats.absorb(&ss.stats);
        trace.extend(ss.trace);
        iterations.push(RobustIteration {
            first_stage: fsf.matching.describe(),
            fsf_value: fsf.value,
            second_stage_value: ss.value,
            worst_case: ss.worst_case.to_record(graph),
        });
        if !ss.optimal || ss.value >= fsf.value || scenarios.contains(&ss.worst_case) {
            return RobustRun {
                scenarios,
                matching: fsf.matching,
                value: ss.value.min(fsf.value),
                worst_case: ss.worst_case,
                optimal: ss.optimal && !remaining().is_some_and(|r| r.is_zero()),
                iterations,
                stats,
                trace,
            };
        }
        scenarios.push(ss.worst_case);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_chains;
    use crate::fixtures::{arc, figure_one, labelled_scenario};
    use crate::generator::{random_instance, GeneratorConfig};
    use crate::oracle::{maximal_matchings, oracle_robust};
    use crate::second_stage::Algorithm;

    #[test]
    fn figure_one_positions() {
        let g = figure_one();
        let idx = compute_position_index(&g, 4, PositionMode::SimplePaths);
        assert_eq!(idx.positions[arc(&g, 8, 1)], vec![1]);
        assert_eq!(idx.positions[arc(&g, 1, 5)], vec![2]);
        assert_eq!(idx.positions[arc(&g, 5, 6)], vec![3]);
        let bfs = compute_position_index(&g, 4, PositionMode::BfsLevels);
        for (a, ls) in idx.positions.iter().enumerate() {
            assert!(ls.iter().all(|l| bfs.positions[a].contains(l)));
        }
        let no_donor = CompatibilityGraph::from_arcs(3, &[], &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let idx = compute_position_index(&no_donor, 3, PositionMode::SimplePaths);
        assert!(idx.positions.iter().all(Vec::is_empty));
    }

    #[test]
    fn positions_match_chain_enumeration() {
        let cfg = GeneratorConfig {
            pairs: 8,
            ndds: 2,
            arc_probability: 0.3,
            max_arcs: None,
        };
        for seed in 0..30 {
            let g = random_instance(&cfg, seed);
            let idx = compute_position_index(&g, 3, PositionMode::SimplePaths);
            let mut expected = vec![Vec::new(); g.num_arcs()];
            for chain in enumerate_chains(&g, 3) {
                for (i, &a) in chain.arcs.iter().enumerate() {
                    if !expected[a].contains(&(i + 1)) {
                        expected[a].push(i + 1);
                    }
                }
            }
            for ls in &mut expected {
                ls.sort_unstable();
            }
            assert_eq!(idx.positions, expected, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_matches_enumeration() {
        let g = figure_one();
        let det = deterministic_optimum(&g, 4, 4);
        let best = maximal_matchings(&g, 4, 4)
            .unwrap()
            .iter()
            .map(|m| m.transplants(&g) as i64)
            .max()
            .unwrap();
        assert_eq!(det.value, best);
        assert_eq!(det.value, 9);
        assert!(det.matching.is_valid(4, 4));
        assert_eq!(det.matching.transplants(&g) as i64, det.value);
        let with_empty = solve_fsf(
            &g,
            &ModelOptions::new(4, 4, Policy::FullRecourse),
            &[Scenario::empty(g.num_vertices(), g.num_arcs())],
            &SolveLimits::unlimited(),
        );
        assert_eq!(with_empty.value, 9);
    }

    #[test]
    fn scenarios_only_lower_the_bound() {
        let g = figure_one();
        let opts = ModelOptions::new(4, 4, Policy::FullRecourse);
        let gamma = labelled_scenario(&g, &[2], &[(5, 6)]);
        let one = solve_fsf(&g, &opts, std::slice::from_ref(&gamma), &SolveLimits::unlimited());
        assert!(one.value <= 9);
        let two = solve_fsf(&g, &opts, &[gamma, labelled_scenario(&g, &[3], &[])], &SolveLimits::unlimited());
        assert!(two.value <= one.value);
    }

    #[test]
    fn robust_matches_oracle_on_figure_one() {
        let g = figure_one();
        for policy in [Policy::FullRecourse, Policy::FirstStageOnly] {
            let config = RobustConfig {
                model: ModelOptions::new(4, 4, policy),
                budget: Budget::new(1, 1),
                second_stage: AlgorithmConfig::new(Algorithm::HsaMe),
                time_limit: None,
            };
            let run = solve_robust(&g, &config);
            let oracle = oracle_robust(&g, 4, 4, policy, Budget::new(1, 1)).unwrap();
            assert_eq!(run.value, oracle.value, "{policy:?}");
            assert!(run.optimal);
        }
    }

    #[test]
    fn zero_budget_is_deterministic() {
        let g = figure_one();
        let config = RobustConfig {
            model: ModelOptions::new(4, 4, Policy::FullRecourse),
            budget: Budget::new(0, 0),
            second_stage: AlgorithmConfig::new(Algorithm::FbsaMb),
            time_limit: None,
        };
        let run = solve_robust(&g, &config);
        assert_eq!(run.value, 9);
        assert_eq!(run.first_stage_iterations(), 1);
    }
}
