//! Scenario-finding master problems.
//!
//! Every stored recourse solution contributes a covering row: a candidate
//! scenario must fail at least `rhs` of that solution's vertices and arcs,
//! otherwise the solution survives and the scenario cannot beat the current
//! bound. The optimality-seeking variant (`solve_ssf`) minimizes the best
//! surviving value over the same stored solutions.

use std::collections::HashMap;

use bitvec::prelude::*;

use crate::bip::{solve, BinaryProgram, Sense, SolveLimits, SolveStatus};
use crate::enumeration::PolicyUnitSets;
use crate::instance::CompatibilityGraph;
use crate::scenario::{Budget, Element, Scenario};
use crate::trace::{Trace, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterKind {
    /// Rows from surviving recourse solutions only.
    Ms,
    /// Adds rows from expanded solutions that include failed units.
    Mt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    FirstStage,
    SecondStageSolution { iteration: usize },
    ExpandedSolution { iteration: usize },
}

impl Origin {
    fn label(self) -> String {
        match self {
            Origin::FirstStage => "first_stage".into(),
            Origin::SecondStageSolution { iteration } => format!("second_stage:{iteration}"),
            Origin::ExpandedSolution { iteration } => format!("expanded:{iteration}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringConstraint {
    pub elements: Vec<Element>,
    pub rhs: usize,
    pub origin: Origin,
    /// Unit weights of the origin solution, non-increasing.
    pub sorted_weights: Vec<u32>,
    pub units: Vec<usize>,
    /// Value of the origin solution when nothing fails.
    pub value: i64,
}

impl CoveringConstraint {
    pub fn covered(&self, scenario: &Scenario) -> usize {
        self.elements.iter().filter(|&&e| scenario.is_failed(e)).count()
    }
}

/// Smallest `t ≥ 1` such that losing the `t` heaviest units drops `value`
/// below `bound`; `weights.len() + 1` when no such `t` exists.
pub fn strengthen_rhs(sorted_weights: &[u32], value: i64, bound: i64) -> usize {
    let mut remaining = value;
    for (i, &w) in sorted_weights.iter().enumerate() {
        remaining -= w as i64;
        if remaining < bound {
            return i + 1;
        }
    }
    sorted_weights.len() + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterOptions {
    pub strengthen: bool,
    pub adjacency_cuts: bool,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            strengthen: true,
            adjacency_cuts: true,
        }
    }
}

/// A dominance pair: scenarios containing all of `dominating` need none of `dominated`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceCut {
    pub dominated: Vec<Element>,
    pub dominating: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FindOutcome {
    Found(Scenario),
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsfOutcome {
    pub lower_bound: i64,
    pub scenario: Scenario,
    pub optimal: bool,
}

pub struct MasterState<'a> {
    pub graph: &'a CompatibilityGraph,
    pub units: &'a PolicyUnitSets,
    pub kind: MasterKind,
    pub budget: Budget,
    pub options: MasterOptions,
    pub constraints: Vec<CoveringConstraint>,
    pub accepted: Vec<Scenario>,
    pub upper_bound: i64,
    pub dominance_cuts: Vec<DominanceCut>,
    /// Solutions kept for the optimality-seeking model but not as covering rows.
    pub ssf_extra: Vec<(Vec<usize>, i64)>,
    pub nogoods: Vec<Scenario>,
    pub trace: Trace,
    elements: Vec<Element>,
    index: HashMap<Element, usize>,
}

impl<'a> MasterState<'a> {
    pub fn new(
        graph: &'a CompatibilityGraph,
        units: &'a PolicyUnitSets,
        kind: MasterKind,
        budget: Budget,
        options: MasterOptions,
        upper_bound: i64,
    ) -> Self {
        let elements: Vec<Element> = units
            .transitory
            .vertices
            .iter()
            .map(|&v| Element::Vertex(v))
            .chain(units.transitory.arcs.iter().map(|&a| Element::Arc(a)))
            .collect();
        let index = elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self {
            graph,
            units,
            kind,
            budget,
            options,
            constraints: Vec::new(),
            accepted: Vec::new(),
            upper_bound,
            dominance_cuts: Vec::new(),
            ssf_extra: Vec::new(),
            nogoods: Vec::new(),
            trace: Trace::default(),
            elements,
            index,
        }
    }

    /// Vertices and arcs of the recourse units, the only elements a master may fail.
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    fn elements_of(&self, unit_ids: &[usize]) -> Vec<Element> {
        let mut out: Vec<Element> = unit_ids
            .iter()
            .flat_map(|&c| {
                let u = &self.units.units[c];
                u.vertices
                    .iter()
                    .map(|&v| Element::Vertex(v))
                    .chain(u.arcs.iter().map(|&a| Element::Arc(a)))
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Adds the covering row of a solution; returns the id of the new or
    /// identical existing row, or `None` for an empty solution.
    pub fn add_solution_constraint(&mut self, unit_ids: &[usize], origin: Origin) -> Option<usize> {
        if unit_ids.is_empty() {
            return None;
        }
        let mut sorted_units = unit_ids.to_vec();
        sorted_units.sort_unstable();
        if let Some(id) = self.constraints.iter().position(|c| c.units == sorted_units) {
            return Some(id);
        }
        let mut sorted_weights: Vec<u32> = sorted_units.iter().map(|&c| self.units.weights[c]).collect();
        sorted_weights.sort_unstable_by(|a, b| b.cmp(a));
        let value: i64 = sorted_weights.iter().map(|&w| w as i64).sum();
        let rhs = if self.options.strengthen {
            strengthen_rhs(&sorted_weights, value, self.upper_bound)
        } else {
            1
        };
        let elements = self.elements_of(&sorted_units);
        let id = self.constraints.len();
        self.trace.push(TraceEvent::ConstraintAdded {
            id,
            origin: origin.label(),
            vertices: elements
                .iter()
                .filter_map(|e| match e {
                    Element::Vertex(v) => Some(*v),
                    Element::Arc(_) => None,
                })
                .collect(),
            arcs: elements
                .iter()
                .filter_map(|e| match e {
                    Element::Arc(a) => {
                        let arc = self.graph.arc(*a);
                        Some((arc.from, arc.to))
                    }
                    Element::Vertex(_) => None,
                })
                .collect(),
            weights: sorted_weights.clone(),
            rhs,
        });
        self.constraints.push(CoveringConstraint {
            elements,
            rhs,
            origin,
            sorted_weights,
            units: sorted_units,
            value,
        });
        Some(id)
    }

    /// Keeps a solution for the optimality-seeking model only.
    pub fn cache_for_ssf(&mut self, unit_ids: &[usize]) {
        if unit_ids.is_empty() {
            return;
        }
        let mut ids = unit_ids.to_vec();
        ids.sort_unstable();
        if self.ssf_extra.iter().any(|(u, _)| *u == ids) {
            return;
        }
        let value = self.units.total_weight(&ids) as i64;
        self.ssf_extra.push((ids, value));
    }

    /// Lowers the bound and re-strengthens every row. Returns whether it moved.
    pub fn update_bound(&mut self, value: i64, iteration: usize) -> bool {
        if value >= self.upper_bound {
            return false;
        }
        self.trace.push(TraceEvent::BoundUpdated {
            iteration,
            from: self.upper_bound,
            to: value,
        });
        self.upper_bound = value;
        if self.options.strengthen {
            for (id, c) in self.constraints.iter_mut().enumerate() {
                let t = strengthen_rhs(&c.sorted_weights, c.value, value);
                if t != c.rhs {
                    self.trace.push(TraceEvent::RhsUpdated { id, from: c.rhs, to: t });
                    c.rhs = t;
                }
            }
        }
        true
    }

    pub fn install_dominance_cuts(&mut self, cuts: impl IntoIterator<Item = DominanceCut>) {
        for cut in cuts {
            debug_assert!(cut.dominated.iter().all(|e| !cut.dominating.contains(e)));
            if !self.dominance_cuts.contains(&cut) {
                self.dominance_cuts.push(cut);
            }
        }
    }

    /// Arcs of the recourse graph touching vertex `v`.
    pub fn adjacent_arcs(&self, v: usize) -> Vec<usize> {
        self.graph
            .out_neighbors(v)
            .iter()
            .chain(self.graph.in_neighbors(v))
            .map(|&(_, a)| a)
            .filter(|a| self.index.contains_key(&Element::Arc(*a)))
            .collect()
    }

    pub fn covers_rows(&self, scenario: &Scenario) -> bool {
        self.constraints.iter().all(|c| c.covered(scenario) >= c.rhs)
    }

    fn respects_cuts(&self, scenario: &Scenario) -> bool {
        let adjacency_ok = !self.options.adjacency_cuts
            || self.units.transitory.vertices.iter().all(|&v| {
                !scenario.vertex_fail[v] || self.adjacent_arcs(v).iter().all(|&a| !scenario.arc_fail[a])
            });
        let dominance_ok = self.dominance_cuts.iter().all(|cut| {
            !cut.dominating.iter().all(|&e| scenario.is_failed(e))
                || cut.dominated.iter().all(|&e| !scenario.is_failed(e))
        });
        adjacency_ok && dominance_ok
    }

    /// Full feasibility check of a scenario against the master.
    pub fn accepts(&self, scenario: &Scenario) -> bool {
        scenario.within(self.budget)
            && scenario.elements().iter().all(|e| self.index.contains_key(e))
            && self.covers_rows(scenario)
            && self.respects_cuts(scenario)
            && !self.accepted.contains(scenario)
            && !self.nogoods.contains(scenario)
    }

    fn budget_rows(&self, program: &mut BinaryProgram, offset: usize) {
        let mut vs = Vec::new();
        let mut arcs = Vec::new();
        for (i, e) in self.elements.iter().enumerate() {
            match e {
                Element::Vertex(_) => vs.push((offset + i, 1)),
                Element::Arc(_) => arcs.push((offset + i, 1)),
            }
        }
        program.add(vs, Sense::Le, self.budget.r_v as i64);
        program.add(arcs, Sense::Le, self.budget.r_a as i64);
    }

    fn scenario_from(&self, x: &BitSlice, offset: usize) -> Scenario {
        let mut s = Scenario::empty(self.graph.num_vertices(), self.graph.num_arcs());
        for (i, &e) in self.elements.iter().enumerate() {
            if x[offset + i] {
                s.fail(e);
            }
        }
        s
    }

    /// The feasibility program over element-failure variables.
    pub fn build_program(&self) -> BinaryProgram {
        let mut p = BinaryProgram::feasibility(self.elements.len());
        for c in &self.constraints {
            p.add(
                c.elements.iter().map(|e| (self.index[e], 1)).collect(),
                Sense::Ge,
                c.rhs as i64,
            );
        }
        self.budget_rows(&mut p, 0);
        if self.options.adjacency_cuts && self.budget.r_a > 0 && self.budget.r_v > 0 {
            let r_a = self.budget.r_a as i64;
            for &v in &self.units.transitory.vertices {
                let arcs = self.adjacent_arcs(v);
                if arcs.is_empty() {
                    continue;
                }
                let mut row: Vec<(usize, i64)> = arcs.iter().map(|&a| (self.index[&Element::Arc(a)], 1)).collect();
                row.push((self.index[&Element::Vertex(v)], r_a));
                p.add(row, Sense::Le, r_a);
            }
        }
        for cut in &self.dominance_cuts {
            let big = cut.dominated.len() as i64;
            let mut row: Vec<(usize, i64)> = cut.dominated.iter().map(|e| (self.index[e], 1)).collect();
            row.extend(cut.dominating.iter().map(|e| (self.index[e], big)));
            p.add(row, Sense::Le, big * cut.dominating.len() as i64);
        }
        for s in &self.nogoods {
            let support: Vec<usize> = s.elements().iter().map(|e| self.index[e]).collect();
            let row = (0..self.elements.len())
                .map(|j| (j, if support.contains(&j) { 1 } else { -1 }))
                .collect();
            p.add(row, Sense::Le, support.len() as i64 - 1);
        }
        p
    }

    /// Searches for a scenario meeting every row and cut; duplicates of
    /// accepted scenarios are excluded with a no-good row and the search rerun.
    pub fn find_scenario(&mut self, limits: &SolveLimits) -> FindOutcome {
        loop {
            let out = solve(&self.build_program(), limits);
            match out.status {
                SolveStatus::Feasible | SolveStatus::Optimal => {
                    let s = self.scenario_from(&out.assignment, 0);
                    if self.accepted.contains(&s) {
                        self.nogoods.push(s);
                        continue;
                    }
                    return FindOutcome::Found(s);
                }
                SolveStatus::Infeasible => return FindOutcome::Infeasible,
                SolveStatus::TimeLimit => return FindOutcome::TimeLimit,
            }
        }
    }

    /// Minimum over scenarios of the best surviving value among stored
    /// solutions: a lower bound on the worst-case recourse value.
    pub fn solve_ssf(&self, limits: &SolveLimits) -> SsfOutcome {
        let mut rows: Vec<(&[usize], i64)> = self.constraints.iter().map(|c| (c.units.as_slice(), c.value)).collect();
        rows.extend(self.ssf_extra.iter().map(|(u, v)| (u.as_slice(), *v)));
        let top = rows.iter().map(|r| r.1).max().unwrap_or(0).max(0) as usize;

        let mut p = BinaryProgram::maximize(self.elements.len());
        let mut alpha: HashMap<usize, usize> = HashMap::new();
        for (ids, _) in &rows {
            for &c in *ids {
                alpha.entry(c).or_insert_with(|| {
                    
                    p.add_var(0)
                });
            }
        }
        let zeta: Vec<usize> = (0..top).map(|_| p.add_var(-1)).collect();
        for w in zeta.windows(2) {
            p.add(vec![(w[1], 1), (w[0], -1)], Sense::Le, 0);
        }
        for (ids, value) in &rows {
            let mut row: Vec<(usize, i64)> = zeta.iter().map(|&z| (z, 1)).collect();
            row.extend(ids.iter().map(|c| (alpha[c], self.units.weights[*c] as i64)));
            p.add(row, Sense::Ge, *value);
        }
        let mut linked: Vec<(usize, usize)> = alpha.iter().map(|(&c, &var)| (c, var)).collect();
        linked.sort_unstable();
        for (c, var) in linked {
            let u = &self.units.units[c];
            let mut row = vec![(var, 1)];
            row.extend(u.vertices.iter().map(|&v| (self.index[&Element::Vertex(v)], -1)));
            row.extend(u.arcs.iter().map(|&a| (self.index[&Element::Arc(a)], -1)));
            p.add(row, Sense::Le, 0);
        }
        self.budget_rows(&mut p, 0);
        let out = solve(&p, limits);
        SsfOutcome {
            lower_bound: -out.objective_value,
            scenario: self.scenario_from(&out.assignment, 0),
            optimal: out.status == SolveStatus::Optimal,
        }
    }
}
