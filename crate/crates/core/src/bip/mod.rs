//! 0-1 linear programs: model type, LP relaxation, branch-and-bound and
//! column generation.

mod bnb;
pub mod colgen;
pub mod simplex;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use bitvec::prelude::*;
use num_rational::BigRational;
use num_traits::Zero;

pub use bnb::solve;
pub use colgen::{column_generate, CgOutcome, Column, ColumnClass, ColumnLimits, Pricer};
use simplex::{LinearProgram, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    pub fn activity(&self, x: &BitSlice) -> i64 {
        self.coeffs.iter().filter(|(j, _)| x[*j]).map(|(_, a)| a).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryProgram {
    pub num_vars: usize,
    pub objective: Vec<i64>,
    pub constraints: Vec<Constraint>,
    pub sense: ObjectiveSense,
}

impl BinaryProgram {
    pub fn maximize(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0; num_vars],
            constraints: Vec::new(),
            sense: ObjectiveSense::Maximize,
        }
    }

    pub fn feasibility(num_vars: usize) -> Self {
        Self {
            sense: ObjectiveSense::Feasibility,
            ..Self::maximize(num_vars)
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, objective: i64) -> usize {
        self.objective.push(objective);
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add(&mut self, coeffs: Vec<(usize, i64)>, sense: Sense, rhs: i64) -> usize {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn value(&self, x: &BitSlice) -> i64 {
        x.iter_ones().map(|j| self.objective[j]).sum()
    }

    pub fn is_feasible(&self, x: &BitSlice) -> bool {
        self.constraints.iter().all(|c| c.sense.holds(c.activity(x), c.rhs))
    }

    /// Writes the program in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, a: i64, j: usize, first: bool| {
            match (a < 0, first) {
                (true, _) => write!(out, " - {} x{j}", -a),
                (false, true) => write!(out, " {a} x{j}"),
                (false, false) => write!(out, " + {a} x{j}"),
            }
            .unwrap();
        };
        out.push_str("Maximize\n obj:");
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0 && self.sense == ObjectiveSense::Maximize {
                term(&mut out, c, j, first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            write!(out, " c{i}:").unwrap();
            for (k, &(j, a)) in c.coeffs.iter().enumerate() {
                term(&mut out, a, j, k == 0);
            }
            if c.coeffs.is_empty() {
                out.push_str(" 0 x0");
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(out, " {op} {}", c.rhs).unwrap();
        }
        out.push_str("Binary\n");
        for j in 0..self.num_vars {
            writeln!(out, " x{j}").unwrap();
        }
        out.push_str("End\n");
        out
    }

    /// LP relaxation with explicit `x ≤ 1` rows appended after the constraints.
    fn relaxation(&self) -> LinearProgram<f64> {
        let mut lp = LinearProgram::new(self.num_vars);
        lp.objective = match self.sense {
            ObjectiveSense::Maximize => self.objective.iter().map(|&c| c as f64).collect(),
            ObjectiveSense::Feasibility => vec![0.0; self.num_vars],
        };
        for c in &self.constraints {
            lp.add_row(c.coeffs.iter().map(|&(j, a)| (j, a as f64)).collect(), c.sense, c.rhs as f64);
        }
        for j in 0..self.num_vars {
            lp.add_row(vec![(j, 1.0)], Sense::Le, 1.0);
        }
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: BitVec,
    pub objective_value: i64,
    /// Upper bound on the optimum; `None` once infeasibility is proven.
    pub bound: Option<i64>,
    pub nodes: usize,
    /// Whether `assignment` satisfies every constraint.
    pub has_incumbent: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveLimits {
    pub deadline: Option<Instant>,
}

impl SolveLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn within(duration: Duration) -> Self {
        Self {
            deadline: Some(Instant::now() + duration),
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Debug, Clone)]
pub struct LpRelaxation {
    pub status: LpStatus,
    pub value: BigRational,
    pub primal: Vec<BigRational>,
    /// One dual per program constraint, in order.
    pub duals: Vec<BigRational>,
}

/// Exact optimum of the continuous relaxation (`0 ≤ x ≤ 1`).
pub fn solve_lp_relaxation(program: &BinaryProgram) -> LpRelaxation {
    let exact = program.relaxation().to_exact();
    let sol = exact.solve();
    let mut duals = sol.duals;
    duals.truncate(program.constraints.len());
    LpRelaxation {
        status: sol.status,
        value: if sol.status == LpStatus::Optimal {
            sol.value
        } else {
            BigRational::zero()
        },
        primal: sol.primal,
        duals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive oracle: best value over all 2^n assignments, `None` if infeasible.
    pub(crate) fn exhaustive(p: &BinaryProgram) -> Option<i64> {
        let mut best = None;
        for mask in 0u64..(1 << p.num_vars) {
            let x: BitVec = (0..p.num_vars).map(|j| mask >> j & 1 == 1).collect();
            if p.is_feasible(&x) {
                let v = if p.sense == ObjectiveSense::Maximize { p.value(&x) } else { 0 };
                best = Some(best.map_or(v, |b: i64| b.max(v)));
            }
        }
        best
    }

    pub(crate) fn random_program(rng: &mut ChaCha8Rng, max_vars: usize) -> BinaryProgram {
        let n = rng.gen_range(1..=max_vars);
        let mut p = if rng.gen_bool(0.8) {
            BinaryProgram::maximize(n)
        } else {
            BinaryProgram::feasibility(n)
        };
        p.objective = (0..n).map(|_| rng.gen_range(-3..=9)).collect();
        for _ in 0..rng.gen_range(1..=n.max(2)) {
            let mut coeffs = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.4) {
                    coeffs.push((j, rng.gen_range(-3..=5)));
                }
            }
            let sense = match rng.gen_range(0..6) {
                0 => Sense::Eq,
                1 | 2 => Sense::Ge,
                _ => Sense::Le,
            };
            let rhs = rng.gen_range(-1..=4);
            p.add(coeffs, sense, rhs);
        }
        p
    }

    #[test]
    fn trivial_max() {
        let mut p = BinaryProgram::maximize(2);
        p.objective = vec![1, 1];
        p.add(vec![(0, 1), (1, 1)], Sense::Le, 1);
        let out = solve(&p, &SolveLimits::unlimited());
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective_value, 1);
        assert_eq!(out.bound, Some(1));
        assert_eq!(solve_lp_relaxation(&p).value, BigRational::from_integer(1.into()));
    }

    #[test]
    fn infeasible_cover() {
        let mut p = BinaryProgram::feasibility(2);
        p.add(vec![(0, 1), (1, 1)], Sense::Ge, 1);
        p.add(vec![(0, 1)], Sense::Le, 0);
        p.add(vec![(1, 1)], Sense::Le, 0);
        let out = solve(&p, &SolveLimits::unlimited());
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert_eq!(out.bound, None);
    }

    #[test]
    fn lp_format_lists_everything() {
        let mut p = BinaryProgram::maximize(2);
        p.objective = vec![2, -1];
        p.add(vec![(0, 1), (1, -1)], Sense::Ge, 0);
        let text = p.to_lp_format();
        assert!(text.contains("obj: 2 x0 - 1 x1"));
        assert!(text.contains("c0: 1 x0 - 1 x1 >= 0"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100 {
            let p = random_program(&mut rng, 15);
            let out = solve(&p, &SolveLimits::unlimited());
            match exhaustive(&p) {
                None => assert_eq!(out.status, SolveStatus::Infeasible, "case {case}"),
                Some(v) => {
                    assert!(p.is_feasible(&out.assignment), "case {case}");
                    if p.sense == ObjectiveSense::Maximize {
                        assert_eq!(out.status, SolveStatus::Optimal);
                        assert_eq!(out.objective_value, v, "case {case}");
                    } else {
                        assert_eq!(out.status, SolveStatus::Feasible);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn relaxation_bounds_integer_optimum(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = random_program(&mut rng, 10);
            p.sense = ObjectiveSense::Maximize;
            if let Some(v) = exhaustive(&p) {
                let lp = solve_lp_relaxation(&p);
                prop_assert_eq!(lp.status, LpStatus::Optimal);
                prop_assert!(lp.value >= BigRational::from_integer(v.into()));
                prop_assert!(lp.value.to_f64().unwrap() + 1e-9 >= v as f64);
            }
        }
    }
}
