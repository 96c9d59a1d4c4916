//! Recourse problems: the plain one over surviving units, and the expanded
//! one over all transitory units whose optimum also reveals a maximum
//! recourse once failed units are dropped.

use crate::bip::{
    column_generate, solve, BinaryProgram, CgOutcome, Column, ColumnClass, ColumnLimits, Pricer, Sense,
    SolveLimits, SolveStatus,
};
use crate::enumeration::{second_stage_units, PolicyUnitSets};
use crate::scenario::{unit_fails, Scenario};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecourseSolution {
    pub selected: Vec<usize>,
    pub value: i64,
    pub optimal: bool,
}

/// Expanded weights: `w·|V| + 1` for surviving units, `1` for failed ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedWeights(pub Vec<i64>);

pub fn expanded_weights(units: &PolicyUnitSets, scenario: &Scenario) -> ExpandedWeights {
    let scale = units.num_graph_vertices() as i64;
    ExpandedWeights(
        units
            .units
            .iter()
            .map(|u| {
                if unit_fails(u, scenario) {
                    1
                } else {
                    units.weights[u.id] as i64 * scale + 1
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedRecourse {
    /// Optimal selection under expanded weights, failed units included.
    pub expanded: Vec<usize>,
    pub expanded_value: i64,
    /// The non-failed part of `expanded`, a maximum recourse solution.
    pub surviving: RecourseSolution,
}

/// Row index per vertex used by any candidate unit.
fn vertex_rows(units: &PolicyUnitSets, candidates: &[usize]) -> (Vec<usize>, usize) {
    let mut row = vec![usize::MAX; units.num_graph_vertices()];
    let mut count = 0;
    for &c in candidates {
        for &v in &units.units[c].vertices {
            if row[v] == usize::MAX {
                row[v] = count;
                count += 1;
            }
        }
    }
    (row, count)
}

fn packing(units: &PolicyUnitSets, candidates: &[usize], weights: &[i64], limits: &SolveLimits) -> (Vec<usize>, i64, bool) {
    let (row, count) = vertex_rows(units, candidates);
    let objective = tie_broken_objective(units, weights);
    let mut program = BinaryProgram::maximize(candidates.len());
    let mut coeffs = vec![Vec::new(); count];
    for (k, &c) in candidates.iter().enumerate() {
        program.objective[k] = objective[c];
        for &v in &units.units[c].vertices {
            coeffs[row[v]].push((k, 1));
        }
    }
    for r in coeffs {
        program.add(r, Sense::Le, 1);
    }
    let out = solve(&program, limits);
    let chosen: Vec<usize> = out.assignment.iter_ones().map(|k| candidates[k]).collect();
    let value = weight_of(&chosen, weights);
    (chosen, value, out.status == SolveStatus::Optimal)
}

/// Objective that ranks selections by `weights`, then by fewer covered
/// vertices and arcs, so equal-weight ties yield smaller covering rows.
pub fn tie_broken_objective(units: &PolicyUnitSets, weights: &[i64]) -> Vec<i64> {
    let scale = 2 * units.num_graph_vertices() as i64 + 1;
    units
        .units
        .iter()
        .map(|u| weights[u.id] * scale - (u.vertices.len() + u.arcs.len()) as i64)
        .collect()
}

fn weight_of(selected: &[usize], weights: &[i64]) -> i64 {
    selected.iter().map(|&c| weights[c]).sum()
}

fn plain_weights(units: &PolicyUnitSets) -> Vec<i64> {
    units.weights.iter().map(|&w| w as i64).collect()
}

/// Maximum-weight vertex-disjoint selection of surviving units.
pub fn solve_recourse_r(units: &PolicyUnitSets, scenario: &Scenario, limits: &SolveLimits) -> RecourseSolution {
    let alive = second_stage_units(units, scenario);
    let (selected, value, optimal) = packing(units, &alive, &plain_weights(units), limits);
    RecourseSolution { selected, value, optimal }
}

fn split_expanded(units: &PolicyUnitSets, scenario: &Scenario, expanded: Vec<usize>, expanded_value: i64, optimal: bool) -> ExpandedRecourse {
    let selected: Vec<usize> = expanded
        .iter()
        .copied()
        .filter(|&c| !unit_fails(&units.units[c], scenario))
        .collect();
    let value = units.total_weight(&selected) as i64;
    ExpandedRecourse {
        expanded,
        expanded_value,
        surviving: RecourseSolution { selected, value, optimal },
    }
}

/// Expanded recourse over every policy unit, solved as a full 0-1 program.
pub fn solve_recourse_re(units: &PolicyUnitSets, scenario: &Scenario, limits: &SolveLimits) -> ExpandedRecourse {
    let all: Vec<usize> = (0..units.len()).collect();
    let weights = expanded_weights(units, scenario);
    let (chosen, value, optimal) = packing(units, &all, &weights.0, limits);
    split_expanded(units, scenario, chosen, value, optimal)
}

/// Prices policy units as set-packing columns over vertex rows.
pub struct UnitPricer<'a> {
    units: &'a PolicyUnitSets,
    cycles: Vec<usize>,
    chains: Vec<usize>,
    weights: Vec<i64>,
    row: Vec<usize>,
}

impl<'a> UnitPricer<'a> {
    pub fn new(units: &'a PolicyUnitSets, candidates: &[usize], weights: Vec<i64>) -> (Self, usize) {
        let (row, count) = vertex_rows(units, candidates);
        let (cycles, chains) = candidates.iter().partition(|&&c| units.is_cycle(c));
        (
            Self {
                units,
                cycles,
                chains,
                weights,
                row,
            },
            count,
        )
    }

    fn column(&self, c: usize) -> Column {
        Column {
            key: c,
            class: if self.units.is_cycle(c) {
                ColumnClass::Cycle
            } else {
                ColumnClass::Chain
            },
            objective: self.weights[c],
            coeffs: self.units.units[c].vertices.iter().map(|&v| (self.row[v], 1)).collect(),
        }
    }

    fn best(&self, pool: &[usize], duals: &[f64], cap: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = pool
            .iter()
            .map(|&c| {
                let dual: f64 = self.units.units[c].vertices.iter().map(|&v| duals[self.row[v]]).sum();
                (self.weights[c] as f64 - dual, c)
            })
            .filter(|(rc, _)| *rc > 1e-9)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(cap).map(|(_, c)| c).collect()
    }
}

impl Pricer for UnitPricer<'_> {
    fn price(&mut self, duals: &[f64], limits: &ColumnLimits) -> Vec<Column> {
        let mut picked = self.best(&self.cycles, duals, limits.cycles_per_round);
        let mut chains = Vec::new();
        if limits.split_chains {
            chains = self.best(&self.chains[..self.chains.len() / 2], duals, limits.chains_per_round);
        }
        if chains.is_empty() {
            chains = self.best(&self.chains, duals, limits.chains_per_round);
        }
        picked.extend(chains);
        picked.into_iter().map(|c| self.column(c)).collect()
    }
}

fn generate(units: &PolicyUnitSets, candidates: &[usize], weights: Vec<i64>, col_limits: &ColumnLimits, limits: &SolveLimits) -> CgOutcome {
    let (mut pricer, rows) = UnitPricer::new(units, candidates, weights);
    let row_set = vec![(Sense::Le, 1); rows];
    column_generate(&row_set, &mut pricer, col_limits, limits)
}

/// Column generation on the plain recourse problem; the selection is the
/// restricted master's integral optimum, exact whenever the outcome is tight.
/// The outcome's values are in units of [`tie_broken_objective`].
pub fn colgen_recourse_r(
    units: &PolicyUnitSets,
    scenario: &Scenario,
    col_limits: &ColumnLimits,
    limits: &SolveLimits,
) -> (CgOutcome, RecourseSolution) {
    let alive = second_stage_units(units, scenario);
    let plain = plain_weights(units);
    let cg = generate(units, &alive, tie_broken_objective(units, &plain), col_limits, limits);
    let sol = RecourseSolution {
        selected: cg.selected.clone(),
        value: weight_of(&cg.selected, &plain),
        optimal: cg.is_tight(),
    };
    (cg, sol)
}

/// Column generation on the expanded problem.
pub fn colgen_recourse_re(
    units: &PolicyUnitSets,
    scenario: &Scenario,
    col_limits: &ColumnLimits,
    limits: &SolveLimits,
) -> (CgOutcome, ExpandedRecourse) {
    let all: Vec<usize> = (0..units.len()).collect();
    let weights = expanded_weights(units, scenario).0;
    let cg = generate(units, &all, tie_broken_objective(units, &weights), col_limits, limits);
    let tight = cg.is_tight();
    let value = weight_of(&cg.selected, &weights);
    let out = split_expanded(units, scenario, cg.selected.clone(), value, tight);
    (cg, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bip::solve_lp_relaxation;
    use crate::enumeration::{policy_units, Policy};
    use crate::fixtures::{figure_one, figure_one_first_stage, labelled_scenario, v};
    use crate::generator::{random_first_stage, random_instance, GeneratorConfig};
    use crate::oracle::oracle_recourse;
    use num_traits::ToPrimitive;

    fn figure_case(policy: Policy) -> (PolicyUnitSets, Scenario) {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        (policy_units(&g, 4, 4, &x, policy), labelled_scenario(&g, &[2], &[(5, 6)]))
    }

    #[test]
    fn figure_one_values() {
        let (full, gamma) = figure_case(Policy::FullRecourse);
        let r = solve_recourse_r(&full, &gamma, &SolveLimits::unlimited());
        assert_eq!(r.value, 5);
        let (fso, gamma) = figure_case(Policy::FirstStageOnly);
        assert_eq!(solve_recourse_r(&fso, &gamma, &SolveLimits::unlimited()).value, 3);
        let none = Scenario::empty(10, 15);
        assert_eq!(solve_recourse_r(&full, &none, &SolveLimits::unlimited()).value, 8);
    }

    #[test]
    fn expanded_keeps_failed_cycle() {
        let (full, gamma) = figure_case(Policy::FullRecourse);
        let re = solve_recourse_re(&full, &gamma, &SolveLimits::unlimited());
        assert_eq!(re.surviving.value, 5);
        let failed: Vec<&Vec<usize>> = re
            .expanded
            .iter()
            .filter(|&&c| !re.surviving.selected.contains(&c))
            .map(|&c| &full.units[c].vertices)
            .collect();
        assert_eq!(failed, vec![&vec![v(2), v(9), v(10)]]);
        assert!(re.surviving.selected.iter().any(|&c| full.units[c].vertices == vec![v(3), v(6), v(4)]));
    }

    #[test]
    fn column_generation_is_tight_on_figure_one() {
        let (full, gamma) = figure_case(Policy::FullRecourse);
        let (cg, sol) = colgen_recourse_r(&full, &gamma, &ColumnLimits::for_chain_cap(4), &SolveLimits::unlimited());
        assert_eq!(sol.value, 5);
        assert!(cg.is_tight(), "{cg:?}");
    }

    #[test]
    fn relaxation_of_figure_one_bounds_recourse() {
        let (full, gamma) = figure_case(Policy::FullRecourse);
        let alive = second_stage_units(&full, &gamma);
        let (row, count) = vertex_rows(&full, &alive);
        let mut p = BinaryProgram::maximize(alive.len());
        let mut rows = vec![Vec::new(); count];
        for (k, &c) in alive.iter().enumerate() {
            p.objective[k] = full.weights[c] as i64;
            for &x in &full.units[c].vertices {
                rows[row[x]].push((k, 1));
            }
        }
        for r in rows {
            p.add(r, Sense::Le, 1);
        }
        assert!(solve_lp_relaxation(&p).value.to_f64().unwrap() >= 5.0);
    }

    #[test]
    fn random_cases_agree_with_oracle() {
        for seed in 0..100u64 {
            let g = random_instance(&GeneratorConfig { pairs: 8, ndds: 2, arc_probability: 0.3, ..Default::default() }, seed);
            let x = random_first_stage(&g, 3, 3, seed);
            let policy = if seed % 2 == 0 { Policy::FullRecourse } else { Policy::FirstStageOnly };
            let units = policy_units(&g, 3, 3, &x, policy);
            let failed_v: Vec<usize> = (0..g.num_vertices()).filter(|i| (seed as usize + i).is_multiple_of(5)).collect();
            let failed_a: Vec<usize> = (0..g.num_arcs()).filter(|i| (seed as usize * 3 + i).is_multiple_of(7)).collect();
            let gamma = Scenario::from_failures(g.num_vertices(), g.num_arcs(), &failed_v, &failed_a);
            let expected = oracle_recourse(&units, &gamma).unwrap();
            let lim = SolveLimits::unlimited();
            assert_eq!(solve_recourse_r(&units, &gamma, &lim).value, expected, "seed {seed}");
            assert_eq!(solve_recourse_re(&units, &gamma, &lim).surviving.value, expected, "seed {seed}");
            let (cg, sol) = colgen_recourse_r(&units, &gamma, &ColumnLimits::default(), &lim);
            assert!(cg.lp_value + 1e-6 >= expected as f64);
            if cg.is_tight() {
                assert_eq!(sol.value, expected);
            }
            let (cg, re) = colgen_recourse_re(&units, &gamma, &ColumnLimits::default(), &lim);
            if cg.is_tight() {
                assert_eq!(re.surviving.value, expected);
            }
        }
    }
}
