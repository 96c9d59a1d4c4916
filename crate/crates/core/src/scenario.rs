//! Failure scenarios over the first-stage graph's vertices and arcs.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumeration::{ExchangeUnit, PolicyUnitSets};
use crate::instance::CompatibilityGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Budget {
    pub r_v: usize,
    pub r_a: usize,
}

impl Budget {
    pub fn new(r_v: usize, r_a: usize) -> Self {
        Self { r_v, r_a }
    }
}

/// A vertex or an arc of the first-stage graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Vertex(usize),
    Arc(usize),
}

/// Failed vertices and arcs, one bit per element of the first-stage graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scenario {
    pub vertex_fail: BitVec,
    pub arc_fail: BitVec,
}

impl Scenario {
    pub fn empty(num_vertices: usize, num_arcs: usize) -> Self {
        Self {
            vertex_fail: bitvec![0; num_vertices],
            arc_fail: bitvec![0; num_arcs],
        }
    }

    pub fn from_failures(num_vertices: usize, num_arcs: usize, vertices: &[usize], arcs: &[usize]) -> Self {
        let mut s = Self::empty(num_vertices, num_arcs);
        for &v in vertices {
            s.vertex_fail.set(v, true);
        }
        for &a in arcs {
            s.arc_fail.set(a, true);
        }
        s
    }

    pub fn fail(&mut self, e: Element) {
        match e {
            Element::Vertex(v) => self.vertex_fail.set(v, true),
            Element::Arc(a) => self.arc_fail.set(a, true),
        }
    }

    pub fn is_failed(&self, e: Element) -> bool {
        match e {
            Element::Vertex(v) => self.vertex_fail[v],
            Element::Arc(a) => self.arc_fail[a],
        }
    }

    pub fn failed_vertices(&self) -> Vec<usize> {
        self.vertex_fail.iter_ones().collect()
    }

    pub fn failed_arcs(&self) -> Vec<usize> {
        self.arc_fail.iter_ones().collect()
    }

    pub fn num_failed_vertices(&self) -> usize {
        self.vertex_fail.count_ones()
    }

    pub fn num_failed_arcs(&self) -> usize {
        self.arc_fail.count_ones()
    }

    /// Total number of failed elements.
    pub fn size(&self) -> usize {
        self.num_failed_vertices() + self.num_failed_arcs()
    }

    pub fn elements(&self) -> Vec<Element> {
        self.vertex_fail
            .iter_ones()
            .map(Element::Vertex)
            .chain(self.arc_fail.iter_ones().map(Element::Arc))
            .collect()
    }

    pub fn within(&self, budget: Budget) -> bool {
        self.num_failed_vertices() <= budget.r_v && self.num_failed_arcs() <= budget.r_a
    }

    pub fn to_record(&self, graph: &CompatibilityGraph) -> ScenarioRecord {
        ScenarioRecord {
            failed_vertices: self.failed_vertices(),
            failed_arcs: self
                .arc_fail
                .iter_ones()
                .map(|a| {
                    let arc = graph.arc(a);
                    (arc.from, arc.to)
                })
                .collect(),
        }
    }

    pub fn from_record(graph: &CompatibilityGraph, record: &ScenarioRecord) -> Option<Self> {
        let arcs = record
            .failed_arcs
            .iter()
            .map(|&(u, v)| graph.arc_id(u, v))
            .collect::<Option<Vec<_>>>()?;
        if record.failed_vertices.iter().any(|&v| v >= graph.num_vertices()) {
            return None;
        }
        Some(Self::from_failures(
            graph.num_vertices(),
            graph.num_arcs(),
            &record.failed_vertices,
            &arcs,
        ))
    }
}

/// Serialized scenario: vertex ids and arcs as `(from, to)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub failed_vertices: Vec<usize>,
    pub failed_arcs: Vec<(usize, usize)>,
}

/// True iff some vertex or arc of the unit fails.
pub fn unit_fails(unit: &ExchangeUnit, scenario: &Scenario) -> bool {
    unit.vertices.iter().any(|&v| scenario.vertex_fail[v]) || unit.arcs.iter().any(|&a| scenario.arc_fail[a])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureImpact {
    pub failed_units: Vec<usize>,
    pub failed_elements: usize,
}

pub fn impact(units: &PolicyUnitSets, scenario: &Scenario) -> FailureImpact {
    FailureImpact {
        failed_units: units
            .units
            .iter()
            .filter(|u| unit_fails(u, scenario))
            .map(|u| u.id)
            .collect(),
        failed_elements: scenario.size(),
    }
}

/// True iff every unit that `weaker` fails is also failed by `stronger`, so
/// the recourse value under `stronger` is no larger.
pub fn dominates(stronger: &Scenario, weaker: &Scenario, units: &PolicyUnitSets) -> bool {
    units
        .units
        .iter()
        .all(|u| !unit_fails(u, weaker) || unit_fails(u, stronger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{policy_units, Policy};
    use crate::fixtures::{arc, figure_one, figure_one_first_stage, labelled_scenario, v};
    use crate::generator::{random_first_stage, random_instance, GeneratorConfig};
    use crate::oracle::oracle_recourse;
    use proptest::prelude::*;

    #[test]
    fn vertex_failure_kills_cycle() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let gamma = labelled_scenario(&g, &[2], &[(5, 6)]);
        assert!(unit_fails(&x.units[0], &gamma));
        assert!(!unit_fails(&x.units[1], &gamma));
        assert!(unit_fails(&x.units[2], &gamma));
        let none = Scenario::empty(g.num_vertices(), g.num_arcs());
        assert!(x.units.iter().all(|u| !unit_fails(u, &none)));
        assert!(gamma.within(Budget::new(1, 1)));
        assert!(!gamma.within(Budget::new(0, 1)));
    }

    #[test]
    fn vertex_dominates_incident_arc() {
        let g = figure_one();
        let x = figure_one_first_stage(&g);
        let units = policy_units(&g, 4, 4, &x, Policy::FullRecourse);
        let vertex = Scenario::from_failures(10, 15, &[v(5)], &[]);
        for a in [arc(&g, 5, 6), arc(&g, 1, 5), arc(&g, 5, 7)] {
            let arc_only = Scenario::from_failures(10, 15, &[], &[a]);
            assert!(dominates(&vertex, &arc_only, &units));
        }
        assert!(dominates(&vertex, &vertex, &units));
    }

    #[test]
    fn record_round_trip() {
        let g = figure_one();
        let gamma = labelled_scenario(&g, &[3], &[(9, 10)]);
        let rec = gamma.to_record(&g);
        assert_eq!(rec.failed_vertices, vec![v(3)]);
        assert_eq!(rec.failed_arcs, vec![(v(9), v(10))]);
        assert_eq!(Scenario::from_record(&g, &rec).unwrap(), gamma);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn domination_orders_recourse_values(seed in 0u64..10_000, a in any::<u64>(), b in any::<u64>()) {
            let g = random_instance(&GeneratorConfig { pairs: 7, ndds: 1, arc_probability: 0.35, ..Default::default() }, seed);
            let x = random_first_stage(&g, 3, 3, seed);
            let units = policy_units(&g, 3, 3, &x, Policy::FullRecourse);
            let pick = |bits: u64| {
                let vs: Vec<usize> = (0..g.num_vertices()).filter(|i| bits >> (i % 64) & 1 == 1 && i % 3 == 0).collect();
                let arcs: Vec<usize> = (0..g.num_arcs()).filter(|i| bits >> ((i * 7 + 3) % 64) & 1 == 1 && i % 4 == 0).collect();
                Scenario::from_failures(g.num_vertices(), g.num_arcs(), &vs, &arcs)
            };
            let (s1, s2) = (pick(a), pick(b));
            let failed = |s: &Scenario| units.units.iter().filter(|u| unit_fails(u, s)).map(|u| u.id).collect::<std::collections::BTreeSet<_>>();
            prop_assert_eq!(dominates(&s1, &s2, &units), failed(&s2).is_subset(&failed(&s1)));
            if dominates(&s1, &s2, &units) {
                prop_assert!(oracle_recourse(&units, &s1).unwrap() <= oracle_recourse(&units, &s2).unwrap());
            }
            let union = Scenario {
                vertex_fail: s1.vertex_fail.clone() | s2.vertex_fail.clone(),
                arc_fail: s1.arc_fail.clone() | s2.arc_fail.clone(),
            };
            prop_assert!(oracle_recourse(&units, &union).unwrap() <= oracle_recourse(&units, &s1).unwrap());
        }

        #[test]
        fn unit_failure_is_elementwise(seed in 0u64..10_000, bits in any::<u64>()) {
            let g = random_instance(&GeneratorConfig { pairs: 6, ndds: 1, arc_probability: 0.4, ..Default::default() }, seed);
            let s = Scenario::from_failures(
                g.num_vertices(), g.num_arcs(),
                &(0..g.num_vertices()).filter(|i| bits >> i & 1 == 1).collect::<Vec<_>>(),
                &(0..g.num_arcs()).filter(|i| bits >> ((i + 13) % 64) & 1 == 1).collect::<Vec<_>>(),
            );
            for u in crate::enumeration::enumerate_cycles(&g, 3).iter().chain(&crate::enumeration::enumerate_chains(&g, 3)) {
                let expected = u.vertices.iter().any(|&x| s.is_failed(Element::Vertex(x)))
                    || u.arcs.iter().any(|&x| s.is_failed(Element::Arc(x)));
                prop_assert_eq!(unit_fails(u, &s), expected);
            }
        }
    }
}
