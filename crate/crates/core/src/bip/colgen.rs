//! Column generation over a restricted master with a fixed row set.

use std::collections::HashSet;

use super::simplex::{LinearProgram, LpStatus};
use super::{solve, BinaryProgram, Sense, SolveLimits, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnClass {
    Cycle,
    Chain,
}

#[derive(Debug, Clone)]
pub struct Column {
    /// Caller-side identity, e.g. a unit id.
    pub key: usize,
    pub class: ColumnClass,
    pub objective: i64,
    pub coeffs: Vec<(usize, i64)>,
}

/// Per-round caps on how many columns of each class the pricer may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnLimits {
    pub cycles_per_round: usize,
    pub chains_per_round: usize,
    /// Search the first half of the chains before falling back to all of them.
    pub split_chains: bool,
}

impl ColumnLimits {
    /// Defaults for a given chain-length cap.
    pub fn for_chain_cap(max_chain: usize) -> Self {
        let long = max_chain >= 4;
        Self {
            cycles_per_round: 10,
            chains_per_round: if long { 5 } else { 10 },
            split_chains: long,
        }
    }
}

impl Default for ColumnLimits {
    fn default() -> Self {
        Self::for_chain_cap(3)
    }
}

pub trait Pricer {
    /// Columns with positive reduced cost under `duals`, within `limits`.
    fn price(&mut self, duals: &[f64], limits: &ColumnLimits) -> Vec<Column>;
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    /// Optimum of the final restricted LP, which equals the full LP optimum.
    pub lp_value: f64,
    /// Optimum of the restricted master with integrality restored.
    pub integral_value: i64,
    /// Keys of the columns selected in the integral solution.
    pub selected: Vec<usize>,
    pub num_columns: usize,
    pub rounds: usize,
    pub status: SolveStatus,
}

impl CgOutcome {
    /// True when the integral restricted optimum closes the LP gap.
    pub fn is_tight(&self) -> bool {
        self.status == SolveStatus::Optimal && (self.lp_value - self.integral_value as f64).abs() < 1e-6
    }
}

fn restricted_lp(rows: &[(Sense, i64)], columns: &[Column]) -> LinearProgram<f64> {
    let mut lp = LinearProgram::new(columns.len());
    lp.objective = columns.iter().map(|c| c.objective as f64).collect();
    let mut row_coeffs = vec![Vec::new(); rows.len()];
    for (k, c) in columns.iter().enumerate() {
        for &(i, a) in &c.coeffs {
            row_coeffs[i].push((k, a as f64));
        }
    }
    for ((sense, rhs), coeffs) in rows.iter().zip(row_coeffs) {
        lp.add_row(coeffs, *sense, *rhs as f64);
    }
    for k in 0..columns.len() {
        lp.add_row(vec![(k, 1.0)], Sense::Le, 1.0);
    }
    lp
}

/// Starts from an empty master and alternates LP solves with pricing until
/// no improving column remains, then solves the restricted master as a 0-1
/// program.
pub fn column_generate(
    rows: &[(Sense, i64)],
    pricer: &mut dyn Pricer,
    limits: &ColumnLimits,
    solve_limits: &SolveLimits,
) -> CgOutcome {
    let mut columns: Vec<Column> = Vec::new();
    let mut keys = HashSet::new();
    let mut lp_value = 0.0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let lp = restricted_lp(rows, &columns);
        let sol = lp.solve();
        let duals = match sol.status {
            LpStatus::Optimal => {
                lp_value = sol.value;
                sol.duals[..rows.len()].to_vec()
            }
            _ => vec![0.0; rows.len()],
        };
        let fresh: Vec<Column> = pricer
            .price(&duals, limits)
            .into_iter()
            .filter(|c| keys.insert(c.key))
            .collect();
        if fresh.is_empty() || solve_limits.expired() {
            break;
        }
        columns.extend(fresh);
    }

    let mut program = BinaryProgram::maximize(columns.len());
    program.objective = columns.iter().map(|c| c.objective).collect();
    let mut row_coeffs = vec![Vec::new(); rows.len()];
    for (k, c) in columns.iter().enumerate() {
        for &(i, a) in &c.coeffs {
            row_coeffs[i].push((k, a));
        }
    }
    for ((sense, rhs), coeffs) in rows.iter().zip(row_coeffs) {
        program.add(coeffs, *sense, *rhs);
    }
    let out = solve(&program, solve_limits);
    CgOutcome {
        lp_value,
        integral_value: out.objective_value,
        selected: out.assignment.iter_ones().map(|k| columns[k].key).collect(),
        num_columns: columns.len(),
        rounds,
        status: out.status,
    }
}
