//! Greedy scenario construction over the elements of stored matchings.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::master::{DominanceCut, MasterState};
use crate::scenario::{unit_fails, Element, Scenario};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicOutcome {
    pub scenario: Scenario,
    /// The scenario is acceptable to the master as it stands.
    pub cover: bool,
    /// Pairs found by single-vertex-arc separation.
    pub dominance: Vec<DominanceCut>,
}

struct Pooled {
    element: Element,
    weight: usize,
    checked: bool,
}

fn pool(state: &MasterState) -> Vec<Pooled> {
    let mut counts: Vec<(Element, usize)> = Vec::new();
    for row in &state.constraints {
        for &e in &row.elements {
            match counts.binary_search_by(|(x, _)| x.cmp(&e)) {
                Ok(i) => counts[i].1 += 1,
                Err(i) => counts.insert(i, (e, 1)),
            }
        }
    }
    counts
        .into_iter()
        .map(|(element, weight)| Pooled {
            element,
            weight,
            checked: false,
        })
        .collect()
}

/// True when some unit containing `e` is still intact under `scenario`.
fn still_matters(state: &MasterState, scenario: &Scenario, e: Element) -> bool {
    let ids = match e {
        Element::Vertex(v) => state.units.units_with_vertex(v),
        Element::Arc(a) => state.units.units_with_arc(a),
    };
    ids.iter().any(|&c| !unit_fails(&state.units.units[c], scenario))
}

/// Builds a scenario greedily from the most frequent unchecked elements.
/// Ties are broken by a generator seeded from `seed` and `iteration`; with
/// `separate` off, elements are never skipped as dominated.
pub fn run_heuristic(state: &MasterState, seed: u64, iteration: usize, separate: bool) -> HeuristicOutcome {
    let graph = state.graph;
    let budget = state.budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);

    let mut elements = pool(state);
    let mut scenario = Scenario::empty(graph.num_vertices(), graph.num_arcs());
    let mut dominance = Vec::new();

    loop {
        let (nv, na) = (scenario.num_failed_vertices(), scenario.num_failed_arcs());
        let open: Vec<usize> = (0..elements.len())
            .filter(|&i| {
                !elements[i].checked
                    && match elements[i].element {
                        Element::Arc(_) => na < budget.r_a,
                        Element::Vertex(_) => nv < budget.r_v,
                    }
            })
            .collect();
        let Some(top) = open.iter().map(|&i| elements[i].weight).max() else {
            break;
        };
        let ties: Vec<usize> = open.into_iter().filter(|&i| elements[i].weight == top).collect();
        let pick = *ties.choose(&mut rng).expect("ties is nonempty");
        let e = elements[pick].element;

        let mut take = true;
        let is_ndd = matches!(e, Element::Vertex(v) if graph.is_ndd(v));
        if separate && nv + na >= 1 && !is_ndd && (na >= 1 || nv >= 2) && !still_matters(state, &scenario, e) {
            take = false;
            dominance.push(DominanceCut {
                dominated: vec![e],
                dominating: scenario.elements(),
            });
        }
        elements[pick].checked = true;

        if take {
            match e {
                Element::Vertex(v) => {
                    let incident: Vec<usize> = graph
                        .out_neighbors(v)
                        .iter()
                        .chain(graph.in_neighbors(v))
                        .map(|&(_, a)| a)
                        .collect();
                    if incident.iter().all(|&a| !scenario.arc_fail[a]) {
                        scenario.fail(e);
                        for p in elements.iter_mut() {
                            if matches!(p.element, Element::Arc(a) if incident.contains(&a)) {
                                p.checked = true;
                            }
                        }
                    }
                }
                Element::Arc(_) => scenario.fail(e),
            }
        }

        if state.covers_rows(&scenario)
            && scenario.num_failed_vertices() == budget.r_v
            && scenario.num_failed_arcs() == budget.r_a
        {
            break;
        }
    }

    let cover = state.accepts(&scenario);
    HeuristicOutcome {
        scenario,
        cover,
        dominance,
    }
}
