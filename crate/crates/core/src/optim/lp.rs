//! Dense revised simplex for `min c·x  s.t.  A x = b,  l <= x <= u`.
//!
//! Variables are shifted/mirrored/split into `0 <= x' <= u'` form, rows are
//! sign-normalized so the right-hand side is nonnegative, and a two-phase
//! method with one artificial per row is run on top of an explicit basis
//! inverse (rank-one updates, periodic refactorization). Pricing is Dantzig's
//! rule; after a run of degenerate pivots it falls back to Bland's rule.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-9;
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Row-major equality matrix.
    pub equality_matrix: Vec<Vec<f64>>,
    pub equality_rhs: Vec<f64>,
    /// `(lower, upper)`; use `f64::NEG_INFINITY` / `f64::INFINITY` for free sides.
    pub variable_bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        equality_matrix: Vec<Vec<f64>>,
        equality_rhs: Vec<f64>,
        variable_bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let p = LpProblem {
            objective,
            equality_matrix,
            equality_rhs,
            variable_bounds,
        };
        p.validate()?;
        Ok(p)
    }

    /// All variables in `[0, inf)`.
    pub fn nonnegative(objective: Vec<f64>, equality_matrix: Vec<Vec<f64>>, equality_rhs: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        Self::new(objective, equality_matrix, equality_rhs, vec![(0.0, f64::INFINITY); n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.equality_rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.equality_matrix.len() != self.equality_rhs.len() {
            return Err(Error::input(format!(
                "equality matrix has {} rows but rhs has length {}",
                self.equality_matrix.len(),
                self.equality_rhs.len()
            )));
        }
        if let Some((i, r)) = self.equality_matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::input(format!("row {i} has {} columns, expected {n}", r.len())));
        }
        if self.variable_bounds.len() != n {
            return Err(Error::input(format!(
                "{} bound pairs for {n} variables",
                self.variable_bounds.len()
            )));
        }
        for (j, &(l, u)) in self.variable_bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::input(format!("invalid bounds ({l}, {u}) on variable {j}")));
            }
        }
        let finite = self.objective.iter().all(|x| x.is_finite())
            && self.equality_rhs.iter().all(|x| x.is_finite())
            && self.equality_matrix.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::input("non-finite problem data"));
        }
        Ok(())
    }

    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in self.equality_matrix.iter().zip(&self.equality_rhs) {
            let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max((ax - b).abs());
        }
        for (v, &(l, u)) in x.iter().zip(&self.variable_bounds) {
            worst = worst.max(l - v).max(v - u);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Row multipliers `y` with reduced costs `c - Aᵀy`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    /// Objective of the bounded dual evaluated at `duals`.
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        let mut v: f64 = self.duals.iter().zip(&problem.equality_rhs).map(|(y, b)| y * b).sum();
        for (d, &(l, u)) in self.reduced_costs.iter().zip(&problem.variable_bounds) {
            if *d > 0.0 && l.is_finite() {
                v += d * l;
            } else if *d < 0.0 && u.is_finite() {
                v += d * u;
            }
        }
        v
    }

    /// Largest violation of complementary slackness between `x` and the reduced costs.
    pub fn complementary_slackness(&self, problem: &LpProblem) -> f64 {
        let mut worst = 0.0f64;
        for ((d, x), &(l, u)) in self.reduced_costs.iter().zip(&self.x).zip(&problem.variable_bounds) {
            let gap = if *d > 0.0 {
                if l.is_finite() { d * (x - l) } else { d.abs() * x.abs().max(1.0) }
            } else if *d < 0.0 {
                if u.is_finite() { -d * (u - x) } else { d.abs() * x.abs().max(1.0) }
            } else {
                0.0
            };
            worst = worst.max(gap.abs());
        }
        worst
    }
}

/// Farkas-type certificate: `yᵀb` exceeds the supremum of `yᵀAx` over the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
}

impl FarkasCertificate {
    /// `yᵀb - sup_{l<=x<=u} yᵀAx`; positive means the certificate proves infeasibility.
    pub fn margin(&self, problem: &LpProblem) -> f64 {
        let yb: f64 = self.y.iter().zip(&problem.equality_rhs).map(|(y, b)| y * b).sum();
        let mut sup = 0.0;
        for j in 0..problem.num_vars() {
            let r: f64 = problem.equality_matrix.iter().zip(&self.y).map(|(row, y)| row[j] * y).sum();
            let (l, u) = problem.variable_bounds[j];
            if r.abs() <= 1e-12 {
                continue;
            }
            let bound = if r > 0.0 { u } else { l };
            if !bound.is_finite() {
                return f64::NEG_INFINITY;
            }
            sup += r * bound;
        }
        yb - sup
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    /// Feasible point plus a recession direction along which the objective decreases.
    Unbounded { point: Vec<f64>, ray: Vec<f64> },
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = l + x'
    Shift { lower: f64, col: usize },
    /// x = u - x'
    Mirror { upper: f64, col: usize },
    /// x = x⁺ - x⁻
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

struct Simplex {
    m: usize,
    cols: Vec<Vec<f64>>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded { entering: usize, dir: f64, w: Vec<f64> },
}

impl Simplex {
    fn column_dot(&self, y: &[f64], j: usize) -> f64 {
        self.cols[j].iter().zip(y).map(|(a, b)| a * b).sum()
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let col = &self.cols[j];
        (0..self.m)
            .map(|i| (0..self.m).map(|k| self.binv[(i, k)] * col[k]).sum())
            .collect()
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|k| (0..self.m).map(|i| cost[self.basis[i]] * self.binv[(i, k)]).sum())
            .collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let b = DMatrix::from_fn(self.m, self.m, |i, k| self.cols[self.basis[k]][i]);
        self.binv = b
            .try_inverse()
            .ok_or_else(|| Error::numerical("singular basis during refactorization"))?;
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                for i in 0..self.m {
                    r[i] -= col[i] * self.x[j];
                }
            }
        }
        for i in 0..self.m {
            let v: f64 = (0..self.m).map(|k| self.binv[(i, k)] * r[k]).sum();
            self.x[self.basis[i]] = v;
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn run(&mut self, cost: &[f64], can_enter: &[bool]) -> Result<PhaseEnd> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::numerical(format!(
                    "simplex iteration guard exceeded ({} iterations)",
                    self.iterations
                )));
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let y = self.duals(cost);
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.cols.len() {
                if !can_enter[j] || self.status[j] == Status::Basic || self.upper[j] <= 0.0 {
                    continue;
                }
                let d = cost[j] - self.column_dot(&y, j);
                let gain = match self.status[j] {
                    Status::Lower if d < -OPT_TOL => -d,
                    Status::Upper if d > OPT_TOL => d,
                    _ => continue,
                };
                let dir = if self.status[j] == Status::Lower { 1.0 } else { -1.0 };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some((j, dir));
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let w = self.ftran(j);

            // ratio test; basic i moves by -dir * t * w[i]
            let mut t_max = self.upper[j];
            let mut leave: Option<(usize, Status)> = None;
            let mut leave_piv = 0.0;
            for i in 0..self.m {
                let rate = dir * w[i];
                let bi = self.basis[i];
                let (t, hit) = if rate > PIVOT_TOL {
                    ((self.x[bi].max(0.0)) / rate, Status::Lower)
                } else if rate < -PIVOT_TOL && self.upper[bi].is_finite() {
                    (((self.upper[bi] - self.x[bi]).max(0.0)) / -rate, Status::Upper)
                } else {
                    continue;
                };
                let better = match leave {
                    None => t <= t_max,
                    Some((li, _)) => {
                        if t < t_max - 1e-12 {
                            true
                        } else if t <= t_max + 1e-12 {
                            if bland {
                                bi < self.basis[li]
                            } else {
                                rate.abs() > leave_piv
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    t_max = t;
                    leave = Some((i, hit));
                    leave_piv = rate.abs();
                }
            }
            if leave.is_none() && !t_max.is_finite() {
                return Ok(PhaseEnd::Unbounded { entering: j, dir, w });
            }
            self.iterations += 1;
            let t = t_max;
            if t <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.x[j] += dir * t;
            for i in 0..self.m {
                let bi = self.basis[i];
                self.x[bi] -= dir * t * w[i];
            }
            match leave {
                None => {
                    // bound flip
                    self.status[j] = if self.status[j] == Status::Lower { Status::Upper } else { Status::Lower };
                    self.x[j] = if self.status[j] == Status::Upper { self.upper[j] } else { 0.0 };
                }
                Some((r, hit)) => {
                    let out = self.basis[r];
                    self.status[out] = hit;
                    self.x[out] = if hit == Status::Upper { self.upper[out] } else { 0.0 };
                    self.status[j] = Status::Basic;
                    self.basis[r] = j;
                    let piv = w[r];
                    for k in 0..self.m {
                        self.binv[(r, k)] /= piv;
                    }
                    for i in 0..self.m {
                        if i != r && w[i] != 0.0 {
                            let f = w[i];
                            for k in 0..self.m {
                                let v = self.binv[(r, k)];
                                self.binv[(i, k)] -= f * v;
                            }
                        }
                    }
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }
}

/// Solves the problem. Dimension errors are reported as [`Error::Input`];
/// exceeding the iteration guard as [`Error::Numerical`].
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    let m = problem.num_rows();
    let n = problem.num_vars();

    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut cost: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut maps = Vec::with_capacity(n);
    let mut rhs = problem.equality_rhs.clone();
    let column = |j: usize, sign: f64| -> Vec<f64> { problem.equality_matrix.iter().map(|r| sign * r[j]).collect() };

    for j in 0..n {
        let (l, u) = problem.variable_bounds[j];
        let c = problem.objective[j];
        if l.is_finite() {
            for i in 0..m {
                rhs[i] -= problem.equality_matrix[i][j] * l;
            }
            maps.push(VarMap::Shift { lower: l, col: cols.len() });
            cols.push(column(j, 1.0));
            cost.push(c);
            upper.push(u - l);
        } else if u.is_finite() {
            for i in 0..m {
                rhs[i] -= problem.equality_matrix[i][j] * u;
            }
            maps.push(VarMap::Mirror { upper: u, col: cols.len() });
            cols.push(column(j, -1.0));
            cost.push(-c);
            upper.push(f64::INFINITY);
        } else {
            maps.push(VarMap::Split { pos: cols.len(), neg: cols.len() + 1 });
            cols.push(column(j, 1.0));
            cols.push(column(j, -1.0));
            cost.push(c);
            cost.push(-c);
            upper.push(f64::INFINITY);
            upper.push(f64::INFINITY);
        }
    }
    let n_struct = cols.len();
    let row_sign: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    for col in cols.iter_mut() {
        for i in 0..m {
            col[i] *= row_sign[i];
        }
    }
    for i in 0..m {
        rhs[i] *= row_sign[i];
    }
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        cols.push(e);
        cost.push(0.0);
        upper.push(f64::INFINITY);
    }
    let total = cols.len();
    let mut x = vec![0.0; total];
    let mut status = vec![Status::Lower; total];
    let basis: Vec<usize> = (n_struct..total).collect();
    for i in 0..m {
        x[n_struct + i] = rhs[i];
        status[n_struct + i] = Status::Basic;
    }
    let mut sx = Simplex {
        m,
        cols,
        upper,
        rhs: rhs.clone(),
        x,
        status,
        basis,
        binv: DMatrix::identity(m, m),
        pivots_since_refactor: 0,
        iterations: 0,
        max_iterations: 20_000 + 50 * (m + total),
    };

    let rhs_scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let to_original = |xs: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|mp| match *mp {
                VarMap::Shift { lower, col } => lower + xs[col],
                VarMap::Mirror { upper, col } => upper - xs[col],
                VarMap::Split { pos, neg } => xs[pos] - xs[neg],
            })
            .collect()
    };

    // phase 1
    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(n_struct) {
        *c = 1.0;
    }
    let all = vec![true; total];
    if m > 0 {
        match sx.run(&phase1_cost, &all)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded { .. } => return Err(Error::numerical("phase 1 reported unbounded")),
        }
        sx.refactor()?;
        let infeas: f64 = (n_struct..total).map(|j| sx.x[j].max(0.0)).sum();
        if infeas > FEAS_TOL * rhs_scale {
            let y = sx.duals(&phase1_cost);
            let y = y.iter().zip(&row_sign).map(|(a, s)| a * s).collect();
            return Ok(LpOutcome::Infeasible(FarkasCertificate { y }));
        }
    }

    // phase 2: artificials pinned at zero
    let mut can_enter = vec![true; total];
    for j in n_struct..total {
        sx.upper[j] = 0.0;
        can_enter[j] = false;
        if sx.status[j] != Status::Basic {
            sx.x[j] = 0.0;
        }
    }
    cost.resize(total, 0.0);
    match sx.run(&cost, &can_enter)? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded { entering, dir, w } => {
            let mut d = vec![0.0; total];
            d[entering] = dir;
            for i in 0..m {
                d[sx.basis[i]] -= dir * w[i];
            }
            let point = to_original(&sx.x);
            let ray: Vec<f64> = maps
                .iter()
                .map(|mp| match *mp {
                    VarMap::Shift { col, .. } => d[col],
                    VarMap::Mirror { col, .. } => -d[col],
                    VarMap::Split { pos, neg } => d[pos] - d[neg],
                })
                .collect();
            return Ok(LpOutcome::Unbounded { point, ray });
        }
    }
    if m > 0 {
        sx.refactor()?;
    }
    let xs: Vec<f64> = sx.x.iter().map(|&v| if v.abs() < 1e-15 { 0.0 } else { v }).collect();
    let x = to_original(&xs);
    let y_internal = sx.duals(&cost);
    let duals: Vec<f64> = y_internal.iter().zip(&row_sign).map(|(a, s)| a * s).collect();
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| {
            let aty: f64 = problem.equality_matrix.iter().zip(&duals).map(|(r, y)| r[j] * y).sum();
            problem.objective[j] - aty
        })
        .collect();
    let value = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal(LpSolution {
        value,
        x,
        duals,
        reduced_costs,
        iterations: sx.iterations,
    }))
}
