//! Depth-first branch-and-bound with bound propagation and LP bounding.

use bitvec::prelude::*;

use super::simplex::{LinearProgram, LpStatus};
use super::{BinaryProgram, ObjectiveSense, Sense, SolveLimits, SolveOutcome, SolveStatus};
use crate::scalar::Scalar;

const INTEGRALITY_TOL: f64 = 1e-6;

struct Node {
    fixed: Vec<Option<bool>>,
    bound: Option<i64>,
}

enum Relaxed {
    Infeasible,
    Solved { value: f64, x: Vec<f64> },
}

/// Tightens fixings until no row forces another variable; `false` on a
/// provably violated row.
fn propagate(p: &BinaryProgram, fixed: &mut [Option<bool>]) -> bool {
    loop {
        let mut changed = false;
        for c in &p.constraints {
            let mut rhs = c.rhs;
            let (mut lo, mut hi) = (0i64, 0i64);
            for &(j, a) in &c.coeffs {
                match fixed[j] {
                    Some(true) => rhs -= a,
                    Some(false) => {}
                    None if a < 0 => lo += a,
                    None => hi += a,
                }
            }
            let check_le = matches!(c.sense, Sense::Le | Sense::Eq);
            let check_ge = matches!(c.sense, Sense::Ge | Sense::Eq);
            if (check_le && lo > rhs) || (check_ge && hi < rhs) {
                return false;
            }
            for &(j, a) in &c.coeffs {
                if fixed[j].is_some() || a == 0 {
                    continue;
                }
                // Setting x_j to the value that raises (lowers) activity.
                if check_le {
                    if a > 0 && lo + a > rhs {
                        fixed[j] = Some(false);
                        changed = true;
                        continue;
                    }
                    if a < 0 && lo - a > rhs {
                        fixed[j] = Some(true);
                        changed = true;
                        continue;
                    }
                }
                if check_ge {
                    if a > 0 && hi - a < rhs {
                        fixed[j] = Some(true);
                        changed = true;
                        continue;
                    }
                    if a < 0 && hi + a < rhs {
                        fixed[j] = Some(false);
                        changed = true;
                    }
                }
            }
            if changed {
                break;
            }
        }
        if !changed {
            return true;
        }
    }
}

fn relax(p: &BinaryProgram, fixed: &[Option<bool>]) -> Relaxed {
    let free: Vec<usize> = (0..p.num_vars).filter(|&j| fixed[j].is_none()).collect();
    let mut col = vec![usize::MAX; p.num_vars];
    for (k, &j) in free.iter().enumerate() {
        col[j] = k;
    }
    let mut lp = LinearProgram::<f64>::new(free.len());
    let mut constant = 0.0;
    if p.sense == ObjectiveSense::Maximize {
        for j in 0..p.num_vars {
            match fixed[j] {
                Some(true) => constant += p.objective[j] as f64,
                Some(false) => {}
                None => lp.objective[col[j]] = p.objective[j] as f64,
            }
        }
    }
    let mut bounded = vec![false; free.len()];
    for c in &p.constraints {
        let mut rhs = c.rhs;
        let mut coeffs = Vec::new();
        for &(j, a) in &c.coeffs {
            match fixed[j] {
                Some(true) => rhs -= a,
                Some(false) => {}
                None if a != 0 => coeffs.push((col[j], a)),
                None => {}
            }
        }
        if coeffs.is_empty() {
            if !c.sense.holds(0, rhs) {
                return Relaxed::Infeasible;
            }
            continue;
        }
        if c.sense != Sense::Ge && coeffs.iter().all(|&(_, a)| a >= 0) {
            for &(k, a) in &coeffs {
                if a > 0 && rhs <= a {
                    bounded[k] = true;
                }
            }
        }
        lp.add_row(coeffs.into_iter().map(|(k, a)| (k, a as f64)).collect(), c.sense, rhs as f64);
    }
    for (k, b) in bounded.iter().enumerate() {
        if !b {
            lp.add_row(vec![(k, 1.0)], Sense::Le, 1.0);
        }
    }

    let sol = lp.solve();
    let (status, value, primal) = match sol.status {
        LpStatus::Optimal => (LpStatus::Optimal, sol.value, sol.primal),
        LpStatus::Infeasible if lp.certifies_infeasible(&sol.duals) => return Relaxed::Infeasible,
        _ => {
            let exact = lp.to_exact().solve();
            (
                exact.status,
                exact.value.to_f64(),
                exact.primal.iter().map(Scalar::to_f64).collect(),
            )
        }
    };
    if status != LpStatus::Optimal {
        return Relaxed::Infeasible;
    }
    let mut x = vec![0.0; p.num_vars];
    for j in 0..p.num_vars {
        x[j] = match fixed[j] {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => primal[col[j]],
        };
    }
    Relaxed::Solved {
        value: value + constant,
        x,
    }
}

/// Exact optimum (or feasibility witness) of a 0-1 program.
///
/// Branches on the most fractional variable, lowest index first among ties,
/// exploring the child nearer the LP value first.
pub fn solve(p: &BinaryProgram, limits: &SolveLimits) -> SolveOutcome {
    let maximize = p.sense == ObjectiveSense::Maximize;
    let mut incumbent: Option<(i64, BitVec)> = None;
    let mut stack = vec![Node {
        fixed: vec![None; p.num_vars],
        bound: None,
    }];
    let mut nodes = 0;
    let mut timed_out = false;
    while let Some(node) = stack.pop() {
        if limits.expired() {
            stack.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        if let (Some(b), Some((best, _))) = (node.bound, &incumbent) {
            if b <= *best {
                continue;
            }
        }
        let mut fixed = node.fixed;
        if !propagate(p, &mut fixed) {
            continue;
        }
        let Relaxed::Solved { value, x } = relax(p, &fixed) else {
            continue;
        };
        let bound = if maximize {
            Some((value + INTEGRALITY_TOL).floor() as i64)
        } else {
            None
        };
        if let (Some(b), Some((best, _))) = (bound, &incumbent) {
            if b <= *best {
                continue;
            }
        }
        let mut branch: Option<(usize, f64)> = None;
        for j in 0..p.num_vars {
            if fixed[j].is_some() {
                continue;
            }
            let dist = x[j].min(1.0 - x[j]);
            if dist > INTEGRALITY_TOL && branch.is_none_or(|(_, d)| dist > d + 1e-12) {
                branch = Some((j, dist));
            }
        }
        if branch.is_none() {
            let rounded: BitVec = x.iter().map(|&v| v > 0.5).collect();
            if p.is_feasible(&rounded) {
                let v = if maximize { p.value(&rounded) } else { 0 };
                if incumbent.as_ref().is_none_or(|(best, _)| v > *best) {
                    incumbent = Some((v, rounded));
                }
                if !maximize {
                    break;
                }
                continue;
            }
            // Rounding disagreed with the relaxation; split on any free variable.
            match (0..p.num_vars).find(|&j| fixed[j].is_none()) {
                Some(j) => branch = Some((j, 0.0)),
                None => continue,
            }
        }
        let (j, _) = branch.unwrap();
        let first = x[j] >= 0.5;
        for v in [!first, first] {
            let mut child = fixed.clone();
            child[j] = Some(v);
            stack.push(Node { fixed: child, bound });
        }
    }

    let status = match (&incumbent, timed_out, maximize) {
        (_, true, _) => SolveStatus::TimeLimit,
        (None, false, _) => SolveStatus::Infeasible,
        (Some(_), false, true) => SolveStatus::Optimal,
        (Some(_), false, false) => SolveStatus::Feasible,
    };
    let best_value = incumbent.as_ref().map(|(v, _)| *v);
    let bound = if timed_out {
        let open = stack.iter().map(|n| n.bound.unwrap_or(i64::MAX)).max();
        match (open, best_value) {
            (Some(o), Some(b)) => Some(o.max(b)),
            (Some(o), None) => Some(o),
            (None, b) => b,
        }
    } else {
        best_value
    };
    let has_incumbent = incumbent.is_some();
    let (objective_value, assignment) = incumbent.unwrap_or((0, bitvec![0; p.num_vars]));
    SolveOutcome {
        status,
        assignment,
        objective_value,
        bound,
        nodes,
        has_incumbent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation_fixes_forced_variables() {
        let mut p = BinaryProgram::feasibility(3);
        p.add(vec![(0, 1), (1, 1)], Sense::Ge, 2);
        p.add(vec![(1, 1), (2, 1)], Sense::Le, 1);
        let mut fixed = vec![None; 3];
        assert!(propagate(&p, &mut fixed));
        assert_eq!(fixed, vec![Some(true), Some(true), Some(false)]);
    }

    #[test]
    fn time_limit_reports_bound() {
        let mut p = BinaryProgram::maximize(3);
        p.objective = vec![1, 1, 1];
        let out = solve(&p, &SolveLimits { deadline: Some(std::time::Instant::now()) });
        assert_eq!(out.status, SolveStatus::TimeLimit);
        assert!(!out.has_incumbent);
    }
}
