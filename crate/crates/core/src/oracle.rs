//! Brute-force reference solvers. They share no code with the optimization
//! path beyond plain enumeration, and refuse inputs above hard size limits.

use std::collections::HashMap;

use bitvec::prelude::*;
use thiserror::Error;

use crate::bip::{BinaryProgram, ObjectiveSense};
use crate::enumeration::{enumerate_chains, enumerate_cycles, ExchangeUnit, FirstStageSolution, Policy, PolicyUnitSets};
use crate::instance::CompatibilityGraph;
use crate::scenario::{unit_fails, Budget, Scenario};

pub const MAX_ORACLE_VERTICES: usize = 64;
pub const MAX_ORACLE_UNITS: usize = 20_000;
pub const MAX_ORACLE_SCENARIOS: usize = 2_000_000;
pub const MAX_ORACLE_MATCHINGS: usize = 10_000;
pub const MAX_ORACLE_PROGRAM_VARS: usize = 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what}: {size} exceeds the oracle limit of {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
}

fn guard(what: &'static str, size: usize, limit: usize) -> Result<(), OracleError> {
    if size > limit {
        Err(OracleError::TooLarge { what, size, limit })
    } else {
        Ok(())
    }
}

/// Best packing value over `(vertex mask, weight)` items, memoized on the set
/// of still-available vertices.
fn best_packing(items: &[(u64, i64)]) -> i64 {
    fn go(avail: u64, items: &[(u64, i64)], by_low: &HashMap<u32, Vec<usize>>, memo: &mut HashMap<u64, i64>) -> i64 {
        if avail == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&avail) {
            return v;
        }
        let low = avail.trailing_zeros();
        let mut best = go(avail & !(1u64 << low), items, by_low, memo);
        if let Some(list) = by_low.get(&low) {
            for &k in list {
                let (mask, w) = items[k];
                if mask & !avail == 0 {
                    best = best.max(w + go(avail & !mask, items, by_low, memo));
                }
            }
        }
        memo.insert(avail, best);
        best
    }
    let mut by_vertex: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut all = 0u64;
    for (k, &(mask, _)) in items.iter().enumerate() {
        all |= mask;
        let mut m = mask;
        while m != 0 {
            let b = m.trailing_zeros();
            by_vertex.entry(b).or_default().push(k);
            m &= m - 1;
        }
    }
    go(all, items, &by_vertex, &mut HashMap::new())
}

fn vertex_mask(unit: &ExchangeUnit) -> u64 {
    unit.vertices.iter().fold(0u64, |m, &v| m | 1u64 << v)
}

/// Maximum total weight of vertex-disjoint units that survive `scenario`.
pub fn oracle_recourse(units: &PolicyUnitSets, scenario: &Scenario) -> Result<i64, OracleError> {
    guard("vertices", units.num_graph_vertices(), MAX_ORACLE_VERTICES)?;
    guard("units", units.len(), MAX_ORACLE_UNITS)?;
    let items: Vec<(u64, i64)> = units
        .units
        .iter()
        .filter(|u| !unit_fails(u, scenario))
        .map(|u| (vertex_mask(u), units.weights[u.id] as i64))
        .collect();
    Ok(best_packing(&items))
}

/// Units meeting the policy predicate, found by filtering the full enumeration.
fn filtered_units(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
    first_stage: &FirstStageSolution,
    policy: Policy,
) -> PolicyUnitSets {
    let mask = first_stage.vertex_mask(graph.num_vertices());
    let keep = |u: &ExchangeUnit| {
        u.vertices.iter().any(|&v| mask[v] && !graph.is_ndd(v))
            && (policy == Policy::FullRecourse || u.vertices.iter().all(|&v| mask[v]))
    };
    let cycles = enumerate_cycles(graph, max_cycle).into_iter().filter(|u| keep(u)).collect();
    let chains = enumerate_chains(graph, max_chain).into_iter().filter(|u| keep(u)).collect();
    PolicyUnitSets::from_units(graph, policy, cycles, chains, &mask)
}

fn binomial_sum(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul(n - i) / (i + 1);
    }
    total
}

/// Calls `f` on every subset of `items` with at most `k` members.
fn subsets_up_to(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        f(cur);
        if cur.len() == k {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, k, cur, f);
            cur.pop();
        }
    }
    rec(items, 0, k, &mut Vec::new(), f);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSecondStage {
    pub value: i64,
    pub scenario: Scenario,
    pub scenarios_checked: usize,
}

/// Worst-case recourse value of `first_stage` over every budget-feasible
/// scenario on the elements of the recourse units.
pub fn oracle_second_stage(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
    first_stage: &FirstStageSolution,
    policy: Policy,
    budget: Budget,
) -> Result<OracleSecondStage, OracleError> {
    guard("vertices", graph.num_vertices(), MAX_ORACLE_VERTICES)?;
    let units = filtered_units(graph, max_cycle, max_chain, first_stage, policy);
    guard("units", units.len(), MAX_ORACLE_UNITS)?;
    let vertices = units.transitory.vertices.clone();
    let arcs = units.transitory.arcs.clone();
    let count = binomial_sum(vertices.len(), budget.r_v).saturating_mul(binomial_sum(arcs.len(), budget.r_a));
    guard("scenarios", count, MAX_ORACLE_SCENARIOS)?;

    let (nv, na) = (graph.num_vertices(), graph.num_arcs());
    let mut memo: HashMap<BitVec, i64> = HashMap::new();
    let mut best: Option<(i64, Scenario)> = None;
    let mut checked = 0;
    subsets_up_to(&vertices, budget.r_v, &mut |vs| {
        subsets_up_to(&arcs, budget.r_a, &mut |as_| {
            checked += 1;
            let scenario = Scenario::from_failures(nv, na, vs, as_);
            let alive: BitVec = units.units.iter().map(|u| !unit_fails(u, &scenario)).collect();
            let value = *memo.entry(alive.clone()).or_insert_with(|| {
                let items: Vec<(u64, i64)> = alive
                    .iter_ones()
                    .map(|c| (vertex_mask(&units.units[c]), units.weights[c] as i64))
                    .collect();
                best_packing(&items)
            });
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, scenario));
            }
        });
    });
    let (value, scenario) = best.expect("the empty scenario is always enumerated");
    Ok(OracleSecondStage {
        value,
        scenario,
        scenarios_checked: checked,
    })
}

/// Inclusion-maximal matchings; the worst-case value is monotone under
/// adding units, so these suffice for the max-min.
pub fn maximal_matchings(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
) -> Result<Vec<FirstStageSolution>, OracleError> {
    let units: Vec<ExchangeUnit> = enumerate_cycles(graph, max_cycle)
        .into_iter()
        .chain(enumerate_chains(graph, max_chain))
        .collect();
    guard("units", units.len(), MAX_ORACLE_UNITS)?;
    let masks: Vec<u64> = units.iter().map(vertex_mask).collect();
    let mut out = Vec::new();
    let mut overflow = false;
    fn rec(k: usize, used: u64, chosen: &mut Vec<usize>, masks: &[u64], out: &mut Vec<Vec<usize>>, overflow: &mut bool) {
        if *overflow {
            return;
        }
        if k == masks.len() {
            let maximal = masks.iter().all(|&m| m & used != 0);
            if maximal {
                out.push(chosen.clone());
                if out.len() > MAX_ORACLE_MATCHINGS {
                    *overflow = true;
                }
            }
            return;
        }
        if masks[k] & used == 0 {
            chosen.push(k);
            rec(k + 1, used | masks[k], chosen, masks, out, overflow);
            chosen.pop();
        }
        rec(k + 1, used, chosen, masks, out, overflow);
    }
    rec(0, 0, &mut Vec::new(), &masks, &mut out, &mut overflow);
    if overflow {
        return Err(OracleError::TooLarge {
            what: "matchings",
            size: out.len(),
            limit: MAX_ORACLE_MATCHINGS,
        });
    }
    Ok(out
        .into_iter()
        .map(|ids| FirstStageSolution::new(ids.into_iter().map(|k| units[k].clone()).collect()))
        .collect())
}

#[derive(Debug, Clone)]
pub struct OracleRobust {
    pub value: i64,
    pub matching: FirstStageSolution,
}

/// Max over first-stage matchings of the worst-case recourse value.
pub fn oracle_robust(
    graph: &CompatibilityGraph,
    max_cycle: usize,
    max_chain: usize,
    policy: Policy,
    budget: Budget,
) -> Result<OracleRobust, OracleError> {
    let mut best: Option<OracleRobust> = None;
    for m in maximal_matchings(graph, max_cycle, max_chain)? {
        let v = oracle_second_stage(graph, max_cycle, max_chain, &m, policy, budget)?.value;
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(OracleRobust { value: v, matching: m });
        }
    }
    Ok(best.expect("at least the empty matching is maximal"))
}

/// Optimum of a small 0-1 program by trying every assignment; `None` when infeasible.
pub fn oracle_program(program: &BinaryProgram) -> Result<Option<i64>, OracleError> {
    guard("variables", program.num_vars, MAX_ORACLE_PROGRAM_VARS)?;
    let mut best = None;
    let mut x: BitVec = bitvec![0; program.num_vars];
    for mask in 0u64..(1u64 << program.num_vars) {
        for j in 0..program.num_vars {
            x.set(j, mask >> j & 1 == 1);
        }
        if program.is_feasible(&x) {
            let v = match program.sense {
                ObjectiveSense::Maximize => program.value(&x),
                ObjectiveSense::Feasibility => 0,
            };
            best = Some(best.map_or(v, |b: i64| b.max(v)));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::policy_units;
    use crate::fixtures::{figure_one, figure_one_first_stage, labelled_scenario};

    #[test]
    fn figure_one_recourse() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let units = policy_units(&g, 4, 4, &x, Policy::FullRecourse);
        assert_eq!(oracle_recourse(&units, &labelled_scenario(&g, &[2], &[(5, 6)])).unwrap(), 5);
        let empty = PolicyUnitSets::from_units(&g, Policy::FullRecourse, vec![], vec![], &[false; 10]);
        assert_eq!(oracle_recourse(&empty, &Scenario::empty(10, 15)).unwrap(), 0);
    }

    #[test]
    fn figure_one_second_stage() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let worst = oracle_second_stage(&g, 4, 4, &x, Policy::FullRecourse, Budget::new(1, 1)).unwrap();
        assert_eq!(worst.value, 3);
        assert!(worst.scenario.within(Budget::new(1, 1)));
        let none = oracle_second_stage(&g, 4, 4, &x, Policy::FullRecourse, Budget::new(0, 0)).unwrap();
        assert_eq!(none.value, 8);
        assert_eq!(none.scenarios_checked, 1);
    }

    #[test]
    fn single_cycle_dies() {
        let g = CompatibilityGraph::from_arcs(2, &[], &[(0, 1), (1, 0)]).unwrap();
        let r = oracle_robust(&g, 3, 3, Policy::FullRecourse, Budget::new(1, 0)).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn figure_one_policies_ordered() {
        let g = figure_one();
        let full = oracle_robust(&g, 4, 4, Policy::FullRecourse, Budget::new(1, 1)).unwrap();
        let fso = oracle_robust(&g, 4, 4, Policy::FirstStageOnly, Budget::new(1, 1)).unwrap();
        assert!(full.value >= fso.value);
    }

    #[test]
    fn guards_refuse_large_inputs() {
        let p = BinaryProgram::maximize(30);
        assert!(matches!(oracle_program(&p), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn subset_counts() {
        let mut n = 0;
        subsets_up_to(&[1, 2, 3, 4], 2, &mut |_| n += 1);
        assert_eq!(n, binomial_sum(4, 2));
        assert_eq!(n, 11);
    }
}
