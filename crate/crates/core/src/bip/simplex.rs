//! Dense two-phase primal simplex over any [`Scalar`].
//!
//! Variables are nonnegative; upper bounds must be given as rows. Pricing is
//! Dantzig's rule, switching to Bland's rule after a run of degenerate pivots.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::Sense;
use crate::scalar::{approximate, Scalar};

#[derive(Debug, Clone)]
pub struct LpRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// `max objective·x` subject to `rows`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub num_vars: usize,
    pub objective: Vec<T>,
    pub rows: Vec<LpRow<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub value: T,
    pub primal: Vec<T>,
    /// Row duals at optimality; Farkas multipliers when infeasible.
    pub duals: Vec<T>,
}

const DEGENERATE_STREAK: usize = 40;
const MAX_PIVOTS: usize = 200_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    barred: Vec<bool>,
    width: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            self.rows[r][j] = self.rows[r][j].clone() / piv.clone();
        }
        self.rows[r][c] = T::one();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &nz {
                let delta = f.clone() * self.rows[r][j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - delta;
            }
            self.rows[i][c] = T::zero();
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for &j in &nz {
                let delta = f.clone() * self.rows[r][j].clone();
                self.obj[j] = self.obj[j].clone() - delta;
            }
            self.obj[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the current objective row.
    fn optimize(&mut self) -> LpStatus {
        let mut streak = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..self.width {
                if self.barred[j] || !self.obj[j].is_negative_tol() {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && self.obj[j] < self.obj[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = enter else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        let diff = ratio.clone() - lr.clone();
                        diff.is_negative_tol() || (diff.is_zero_tol() && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            streak = if ratio.is_zero_tol() { streak + 1 } else { 0 };
            self.pivot(r, c);
        }
        LpStatus::IterationLimit
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![T::zero(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> LpSolution<T> {
        let n = self.num_vars;
        let m = self.rows.len();
        // Normalize to nonnegative right-hand sides.
        let mut sign = vec![1i8; m];
        let mut senses = Vec::with_capacity(m);
        for (i, row) in self.rows.iter().enumerate() {
            let flip = row.rhs < T::zero();
            sign[i] = if flip { -1 } else { 1 };
            senses.push(match (row.sense, flip) {
                (Sense::Le, true) => Sense::Ge,
                (Sense::Ge, true) => Sense::Le,
                (s, _) => s,
            });
        }
        let mut width = n;
        let mut slack_col = vec![None; m];
        for i in 0..m {
            if senses[i] != Sense::Eq {
                slack_col[i] = Some(width);
                width += 1;
            }
        }
        let art_start = width;
        let mut art_col = vec![None; m];
        for i in 0..m {
            if senses[i] != Sense::Le {
                art_col[i] = Some(width);
                width += 1;
            }
        }
        let mut rows = vec![vec![T::zero(); width + 1]; m];
        let mut basis = vec![0; m];
        let mut ident = vec![0; m];
        for (i, row) in self.rows.iter().enumerate() {
            let s = if sign[i] < 0 { -T::one() } else { T::one() };
            for (j, a) in &row.coeffs {
                rows[i][*j] = rows[i][*j].clone() + s.clone() * a.clone();
            }
            let b = s * row.rhs.clone();
            rows[i][width] = if b.is_zero_tol() { T::zero() } else { b };
            if let Some(sc) = slack_col[i] {
                rows[i][sc] = if senses[i] == Sense::Le { T::one() } else { -T::one() };
            }
            match art_col[i] {
                Some(ac) => {
                    rows[i][ac] = T::one();
                    basis[i] = ac;
                    ident[i] = ac;
                }
                None => {
                    basis[i] = slack_col[i].unwrap();
                    ident[i] = slack_col[i].unwrap();
                }
            }
        }
        let is_art = |j: usize| j >= art_start;
        let mut t = Tableau {
            rows,
            obj: vec![T::zero(); width + 1],
            basis,
            barred: vec![false; width],
            width,
        };

        // Phase 1: maximize -(sum of artificials).
        let has_art = art_col.iter().any(Option::is_some);
        if has_art {
            for i in 0..m {
                if art_col[i].is_some() {
                    for j in 0..=width {
                        t.obj[j] = t.obj[j].clone() - t.rows[i][j].clone();
                    }
                }
            }
            for i in 0..m {
                if let Some(ac) = art_col[i] {
                    t.obj[ac] = T::zero();
                }
            }
            let status = t.optimize();
            if status == LpStatus::IterationLimit {
                return self.failure(status);
            }
            if t.obj[width].is_negative_tol() {
                // Farkas multipliers: y_i = d_ident + c_ident (artificial cost is -1).
                let duals = (0..m)
                    .map(|i| {
                        let c = if art_col[i].is_some() { -T::one() } else { T::zero() };
                        let y = t.obj[ident[i]].clone() + c;
                        if sign[i] < 0 {
                            -y
                        } else {
                            y
                        }
                    })
                    .collect();
                return LpSolution {
                    status: LpStatus::Infeasible,
                    value: T::zero(),
                    primal: vec![T::zero(); n],
                    duals,
                };
            }
            for i in 0..m {
                if is_art(t.basis[i]) {
                    if let Some(j) = (0..width).find(|&j| !is_art(j) && !t.rows[i][j].is_zero_tol()) {
                        t.pivot(i, j);
                    }
                }
            }
            for j in 0..width {
                if is_art(j) {
                    t.barred[j] = true;
                }
            }
        }

        // Phase 2.
        let cost = |j: usize| if j < n { self.objective[j].clone() } else { T::zero() };
        for j in 0..=width {
            let mut d = if j < width { -cost(j) } else { T::zero() };
            for i in 0..m {
                let cb = cost(t.basis[i]);
                if !cb.is_zero() {
                    d = d + cb * t.rows[i][j].clone();
                }
            }
            t.obj[j] = d;
        }
        let status = t.optimize();
        if status != LpStatus::Optimal {
            return self.failure(status);
        }
        let mut primal = vec![T::zero(); n];
        for i in 0..m {
            if t.basis[i] < n {
                primal[t.basis[i]] = t.rhs(i).clone();
            }
        }
        let duals = (0..m)
            .map(|i| {
                let y = t.obj[ident[i]].clone();
                if sign[i] < 0 {
                    -y
                } else {
                    y
                }
            })
            .collect();
        LpSolution {
            status,
            value: t.obj[width].clone(),
            primal,
            duals,
        }
    }

    fn failure(&self, status: LpStatus) -> LpSolution<T> {
        LpSolution {
            status,
            value: T::zero(),
            primal: vec![T::zero(); self.num_vars],
            duals: vec![T::zero(); self.rows.len()],
        }
    }
}

impl LinearProgram<f64> {
    /// Exact copy of an integral-coefficient program.
    pub fn to_exact(&self) -> LinearProgram<BigRational> {
        let conv = |x: &f64| BigRational::from_float(*x).expect("finite coefficient");
        LinearProgram {
            num_vars: self.num_vars,
            objective: self.objective.iter().map(conv).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| LpRow {
                    coeffs: r.coeffs.iter().map(|(j, a)| (*j, conv(a))).collect(),
                    sense: r.sense,
                    rhs: conv(&r.rhs),
                })
                .collect(),
        }
    }

    /// Checks in exact arithmetic that rounded multipliers prove infeasibility:
    /// sign-correct `y` with `yᵀA ≥ 0` columnwise and `yᵀb < 0`.
    pub fn certifies_infeasible(&self, multipliers: &[f64]) -> bool {
        let exact = self.to_exact();
        let y: Vec<BigRational> = multipliers
            .iter()
            .zip(&exact.rows)
            .map(|(&v, row)| {
                let r = approximate(v, 1_000_000);
                match row.sense {
                    Sense::Le if r.is_negative() => BigRational::zero(),
                    Sense::Ge if r.is_positive() => BigRational::zero(),
                    _ => r,
                }
            })
            .collect();
        let mut col = vec![BigRational::zero(); exact.num_vars];
        let mut rhs = BigRational::zero();
        for (yi, row) in y.iter().zip(&exact.rows) {
            if yi.is_zero() {
                continue;
            }
            for (j, a) in &row.coeffs {
                col[*j] += yi * a;
            }
            rhs += yi * &row.rhs;
        }
        rhs.is_negative() && col.iter().all(|c| !c.is_negative())
    }
}
