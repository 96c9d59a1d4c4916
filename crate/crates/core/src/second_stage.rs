//! Worst-case recourse value of a fixed first-stage matching.
//!
//! All algorithms share one loop: accept a candidate scenario, solve the
//! recourse problem under it, store the resulting solutions as master rows,
//! and look for the next scenario that could beat the current bound.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::bip::{ColumnLimits, SolveLimits};
use crate::enumeration::{FirstStageSolution, PolicyUnitSets};
use crate::heuristic::run_heuristic;
use crate::instance::CompatibilityGraph;
use crate::master::{FindOutcome, MasterKind, MasterOptions, MasterState, Origin};
use crate::recourse::{colgen_recourse_r, colgen_recourse_re, solve_recourse_r};
use crate::scenario::{Budget, Scenario};
use crate::trace::{ScenarioSource, Trace, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    BasicCovering,
    FbsaMb,
    FbsaMe,
    HsaMb,
    HsaMe,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::BasicCovering,
        Algorithm::FbsaMb,
        Algorithm::FbsaMe,
        Algorithm::HsaMb,
        Algorithm::HsaMe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BasicCovering => "basic",
            Algorithm::FbsaMb => "fbsa-mb",
            Algorithm::FbsaMe => "fbsa-me",
            Algorithm::HsaMb => "hsa-mb",
            Algorithm::HsaMe => "hsa-me",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn master_kind(self) -> MasterKind {
        match self {
            Algorithm::FbsaMe | Algorithm::HsaMe => MasterKind::Mt,
            _ => MasterKind::Ms,
        }
    }

    fn hybrid(self) -> bool {
        matches!(self, Algorithm::HsaMb | Algorithm::HsaMe)
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    /// Iteration from which hybrids switch to the optimality-seeking model.
    pub tr: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub strengthen: bool,
    pub adjacency_cuts: bool,
    pub separation: bool,
    /// Scenarios tried before any heuristic or master search, in order.
    pub scripted: Vec<Scenario>,
}

impl AlgorithmConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let enhanced = algorithm != Algorithm::BasicCovering;
        Self {
            algorithm,
            tr: 150,
            seed: 0,
            time_limit: None,
            strengthen: enhanced,
            adjacency_cuts: enhanced,
            separation: enhanced,
            scripted: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SecondStageStats {
    pub iterations: usize,
    pub heuristic_true: usize,
    pub master_scenarios: usize,
    pub master_solves: usize,
    pub ssf_scenarios: usize,
    pub ssf_solves: usize,
    pub scripted_used: usize,
    pub scripted_rejected: usize,
    pub recourse_solves: usize,
    pub colgen_true: usize,
    pub dominated: usize,
    pub heuristic_time: Duration,
    pub master_time: Duration,
    pub recourse_time: Duration,
    pub colgen_time: Duration,
    pub ssf_time: Duration,
    pub total_time: Duration,
}

impl SecondStageStats {
    /// Scenarios evaluated, by any source.
    pub fn second_stage_scenarios(&self) -> usize {
        self.heuristic_true + self.master_scenarios + self.ssf_scenarios + self.scripted_used
    }

    pub fn absorb(&mut self, other: &SecondStageStats) {
        self.iterations += other.iterations;
        self.heuristic_true += other.heuristic_true;
        self.master_scenarios += other.master_scenarios;
        self.master_solves += other.master_solves;
        self.ssf_scenarios += other.ssf_scenarios;
        self.ssf_solves += other.ssf_solves;
        self.scripted_used += other.scripted_used;
        self.scripted_rejected += other.scripted_rejected;
        self.recourse_solves += other.recourse_solves;
        self.colgen_true += other.colgen_true;
        self.dominated += other.dominated;
        self.heuristic_time += other.heuristic_time;
        self.master_time += other.master_time;
        self.recourse_time += other.recourse_time;
        self.colgen_time += other.colgen_time;
        self.ssf_time += other.ssf_time;
        self.total_time += other.total_time;
    }
}

#[derive(Debug, Clone)]
pub struct SecondStageResult {
    pub value: i64,
    pub worst_case: Scenario,
    /// False when the time limit stopped the search.
    pub optimal: bool,
    pub lower_bound: Option<i64>,
    pub stats: SecondStageStats,
    pub trace: Trace,
}

/// A first-stage matching together with its recourse units.
#[derive(Debug, Clone, Copy)]
pub struct SecondStageProblem<'a> {
    pub graph: &'a CompatibilityGraph,
    pub units: &'a PolicyUnitSets,
    pub first_stage: &'a FirstStageSolution,
    /// Current robust objective; the starting upper bound.
    pub bound: i64,
    pub budget: Budget,
    pub max_chain: usize,
}

fn vertex_lists(units: &PolicyUnitSets, ids: &[usize]) -> Vec<Vec<usize>> {
    ids.iter().map(|&c| units.units[c].vertices.clone()).collect()
}

struct Recourse {
    value: i64,
    surviving: Vec<usize>,
    expanded: Option<Vec<usize>>,
    tight: bool,
}

fn timed<R>(slot: &mut Duration, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

fn solve_recourse(problem: &SecondStageProblem, config: &AlgorithmConfig, scenario: &Scenario, limits: &SolveLimits, stats: &mut SecondStageStats) -> Recourse {
    let units = problem.units;
    let col_limits = ColumnLimits::for_chain_cap(problem.max_chain);
    stats.recourse_solves += 1;
    let mip = |stats: &mut SecondStageStats| {
        let r = timed(&mut stats.recourse_time, || solve_recourse_r(units, scenario, limits));
        Recourse {
            value: r.value,
            surviving: r.selected,
            expanded: None,
            tight: false,
        }
    };
    match config.algorithm {
        Algorithm::BasicCovering => mip(stats),
        Algorithm::FbsaMb => {
            let (cg, sol) = timed(&mut stats.colgen_time, || colgen_recourse_r(units, scenario, &col_limits, limits));
            if cg.is_tight() {
                stats.colgen_true += 1;
                Recourse {
                    value: sol.value,
                    surviving: sol.selected,
                    expanded: None,
                    tight: true,
                }
            } else {
                mip(stats)
            }
        }
        _ => {
            let (cg, sol) = timed(&mut stats.colgen_time, || colgen_recourse_re(units, scenario, &col_limits, limits));
            if cg.is_tight() {
                stats.colgen_true += 1;
                Recourse {
                    value: sol.surviving.value,
                    surviving: sol.surviving.selected,
                    expanded: Some(sol.expanded),
                    tight: true,
                }
            } else {
                mip(stats)
            }
        }
    }
}

/// Runs the configured algorithm to optimality or the time limit.
pub fn solve_second_stage(problem: &SecondStageProblem, config: &AlgorithmConfig) -> SecondStageResult {
    let start = Instant::now();
    let limits = config.time_limit.map_or(SolveLimits::unlimited(), SolveLimits::within);
    let algorithm = config.algorithm;
    let graph = problem.graph;
    let units = problem.units;
    let options = MasterOptions {
        strengthen: config.strengthen,
        adjacency_cuts: config.adjacency_cuts,
    };
    let mut state = MasterState::new(graph, units, algorithm.master_kind(), problem.budget, options, problem.bound);
    let mut stats = SecondStageStats::default();
    let first_ids: Vec<usize> = problem
        .first_stage
        .units
        .iter()
        .map(|u| units.find(u).expect("first-stage units are recourse units"))
        .collect();
    state.add_solution_constraint(&first_ids, Origin::FirstStage);

    let mut scripted: VecDeque<Scenario> = config.scripted.iter().cloned().collect();
    let mut worst = Scenario::empty(graph.num_vertices(), graph.num_arcs());
    let mut worst_value = i64::MAX;
    let mut lower: Option<i64> = None;
    let mut optimal = true;
    let use_heuristic = algorithm != Algorithm::BasicCovering;

    let mut next = next_candidate(&mut state, config, &mut scripted, use_heuristic, 0, &limits, &mut stats);
    let mut iteration = 0;
    loop {
        let (scenario, source) = match next {
            Candidate::Found(s, source) => (s, source),
            Candidate::Exhausted => {
                state.trace.push(TraceEvent::MasterInfeasible { iteration });
                break;
            }
            Candidate::TimeLimit => {
                optimal = false;
                break;
            }
        };
        iteration += 1;
        state.trace.push(TraceEvent::ScenarioAccepted {
            iteration,
            source,
            scenario: scenario.to_record(graph),
        });
        state.accepted.push(scenario.clone());

        let rec = solve_recourse(problem, config, &scenario, &limits, &mut stats);
        state.trace.push(TraceEvent::RecourseSolved {
            iteration,
            value: rec.value,
            colgen_tight: rec.tight,
            units: vertex_lists(units, &rec.surviving),
            expanded_units: rec.expanded.as_ref().map(|e| vertex_lists(units, e)),
        });
        state.add_solution_constraint(&rec.surviving, Origin::SecondStageSolution { iteration });
        if let Some(expanded) = &rec.expanded {
            match algorithm.master_kind() {
                MasterKind::Mt => {
                    state.add_solution_constraint(expanded, Origin::ExpandedSolution { iteration });
                }
                MasterKind::Ms => state.cache_for_ssf(expanded),
            }
        }
        state.update_bound(rec.value, iteration);
        if rec.value < worst_value {
            worst_value = rec.value;
            worst = scenario;
        }
        if limits.expired() {
            optimal = false;
            break;
        }

        if algorithm.hybrid() && iteration >= config.tr.max(1) {
            let ssf = timed(&mut stats.ssf_time, || state.solve_ssf(&limits));
            stats.ssf_solves += 1;
            state.trace.push(TraceEvent::SsfSolved {
                iteration,
                lower_bound: ssf.lower_bound,
            });
            if !ssf.optimal {
                optimal = false;
                break;
            }
            lower = Some(lower.map_or(ssf.lower_bound, |l| l.max(ssf.lower_bound)));
            if ssf.lower_bound >= state.upper_bound {
                break;
            }
            if !state.accepted.contains(&ssf.scenario) {
                stats.ssf_scenarios += 1;
                next = Candidate::Found(ssf.scenario, ScenarioSource::Ssf);
                continue;
            }
        }
        next = next_candidate(&mut state, config, &mut scripted, use_heuristic, iteration, &limits, &mut stats);
    }
    state.trace.push(TraceEvent::SecondStageDone {
        value: state.upper_bound,
        worst_case: worst.to_record(graph),
        iterations: iteration,
    });
    stats.iterations = iteration;
    stats.total_time = start.elapsed();
    SecondStageResult {
        value: state.upper_bound,
        worst_case: worst,
        optimal,
        lower_bound: lower,
        stats,
        trace: std::mem::take(&mut state.trace),
    }
}

enum Candidate {
    Found(Scenario, ScenarioSource),
    /// The master proved that no scenario can beat the bound.
    Exhausted,
    TimeLimit,
}

fn next_candidate(
    state: &mut MasterState,
    config: &AlgorithmConfig,
    scripted: &mut VecDeque<Scenario>,
    use_heuristic: bool,
    iteration: usize,
    limits: &SolveLimits,
    stats: &mut SecondStageStats,
) -> Candidate {
    while let Some(s) = scripted.pop_front() {
        if state.accepts(&s) {
            stats.scripted_used += 1;
            return Candidate::Found(s, ScenarioSource::Scripted);
        }
        stats.scripted_rejected += 1;
    }
    if use_heuristic {
        let out = timed(&mut stats.heuristic_time, || run_heuristic(state, config.seed, iteration, config.separation));
        if config.separation {
            let before = state.dominance_cuts.len();
            state.install_dominance_cuts(out.dominance);
            stats.dominated += state.dominance_cuts.len() - before;
        }
        if out.cover {
            stats.heuristic_true += 1;
            return Candidate::Found(out.scenario, ScenarioSource::Heuristic);
        }
    }
    stats.master_solves += 1;
    match timed(&mut stats.master_time, || state.find_scenario(limits)) {
        FindOutcome::Found(s) => {
            stats.master_scenarios += 1;
            Candidate::Found(s, ScenarioSource::Master)
        }
        FindOutcome::Infeasible => Candidate::Exhausted,
        FindOutcome::TimeLimit => Candidate::TimeLimit,
    }
}

pub fn basic_covering(problem: &SecondStageProblem, config: &AlgorithmConfig) -> SecondStageResult {
    solve_second_stage(problem, &AlgorithmConfig {
        algorithm: Algorithm::BasicCovering,
        ..config.clone()
    })
}

pub fn fbsa_mb(problem: &SecondStageProblem, config: &AlgorithmConfig) -> SecondStageResult {
    solve_second_stage(problem, &AlgorithmConfig {
        algorithm: Algorithm::FbsaMb,
        ..config.clone()
    })
}

pub fn fbsa_me(problem: &SecondStageProblem, config: &AlgorithmConfig) -> SecondStageResult {
    solve_second_stage(problem, &AlgorithmConfig {
        algorithm: Algorithm::FbsaMe,
        ..config.clone()
    })
}

/// Hybrid run; `expanded_master` picks the transitory-graph master.
pub fn hsa(problem: &SecondStageProblem, config: &AlgorithmConfig, expanded_master: bool) -> SecondStageResult {
    solve_second_stage(problem, &AlgorithmConfig {
        algorithm: if expanded_master { Algorithm::HsaMe } else { Algorithm::HsaMb },
        ..config.clone()
    })
}
