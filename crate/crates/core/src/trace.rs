//! JSON-lines run log.

use serde::Serialize;

use crate::scenario::ScenarioRecord;

/// Where an evaluated scenario came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    Heuristic,
    Master,
    Ssf,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    FirstStage {
        iteration: usize,
        units: Vec<Vec<usize>>,
        value: i64,
        scenarios: usize,
    },
    ConstraintAdded {
        id: usize,
        origin: String,
        vertices: Vec<usize>,
        arcs: Vec<(usize, usize)>,
        weights: Vec<u32>,
        rhs: usize,
    },
    RhsUpdated {
        id: usize,
        from: usize,
        to: usize,
    },
    ScenarioAccepted {
        iteration: usize,
        source: ScenarioSource,
        scenario: ScenarioRecord,
    },
    RecourseSolved {
        iteration: usize,
        value: i64,
        colgen_tight: bool,
        units: Vec<Vec<usize>>,
        expanded_units: Option<Vec<Vec<usize>>>,
    },
    BoundUpdated {
        iteration: usize,
        from: i64,
        to: i64,
    },
    SsfSolved {
        iteration: usize,
        lower_bound: i64,
    },
    MasterInfeasible {
        iteration: usize,
    },
    SecondStageDone {
        value: i64,
        worst_case: ScenarioRecord,
        iterations: usize,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn extend(&mut self, other: Trace) {
        self.events.extend(other.events);
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}
