//! Dense two-phase simplex for the small linear programs the solvers build.
//!
//! Problems here have at most a few hundred columns and rows (CCE polytopes
//! of 21x21 duopolies, dominance tests over one player's actions), so a dense
//! tableau is both simple and fast enough.

use crate::error::{Error, Result};

/// Tolerance used by callers for feasibility and strictness decisions.
pub const LP_TOL: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize c.x` subject to row constraints and per-variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// `(lower, upper)` per variable; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution; empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Program over `vars` nonnegative variables with a zero objective.
    pub fn new(sense: Sense, vars: usize) -> Self {
        Self {
            sense,
            objective: vec![0.0; vars],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); vars],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_objective(mut self, c: Vec<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn push(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn le(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.push(coeffs, Relation::Le, rhs);
        self
    }

    pub fn ge(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.push(coeffs, Relation::Ge, rhs);
        self
    }

    pub fn eq(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.push(coeffs, Relation::Eq, rhs);
        self
    }

    pub fn bound(mut self, var: usize, lower: f64, upper: f64) -> Self {
        self.bounds[var] = (lower, upper);
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.vars();
        if self.bounds.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "constraint {k} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        let all = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.rhs))));
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite LP coefficient".into()));
        }
        for &(l, u) in &self.bounds {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("bad variable bounds ({l}, {u})")));
            }
        }
        Ok(())
    }
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + y`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - y`
    Mirrored { col: usize, offset: f64 },
    /// `x = y+ - y-`
    Free { pos: usize, neg: usize },
}

/// Solves a linear program to an optimal basic solution.
///
/// Infeasible and unbounded problems are reported through [`LpStatus`];
/// numerical breakdown (cycling past the iteration cap, loss of feasibility)
/// is an [`Error::Numerical`].
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.check()?;
    let n = lp.vars();

    // Column layout for the structural part.
    let mut maps = Vec::with_capacity(n);
    let mut cols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for &(l, u) in &lp.bounds {
        if l.is_finite() {
            maps.push(VarMap::Shifted { col: cols, offset: l });
            if u.is_finite() {
                extra_rows.push((cols, u - l));
            }
            cols += 1;
        } else if u.is_finite() {
            maps.push(VarMap::Mirrored { col: cols, offset: u });
            cols += 1;
        } else {
            maps.push(VarMap::Free { pos: cols, neg: cols + 1 });
            cols += 2;
        }
    }
    let structural = cols;

    // Rows in terms of the structural columns: (coeffs, relation, rhs).
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut a = vec![0.0; structural];
        let mut rhs = c.rhs;
        for (j, &v) in c.coeffs.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, offset } => {
                    a[col] += v;
                    rhs -= v * offset;
                }
                VarMap::Mirrored { col, offset } => {
                    a[col] -= v;
                    rhs -= v * offset;
                }
                VarMap::Free { pos, neg } => {
                    a[pos] += v;
                    a[neg] -= v;
                }
            }
        }
        rows.push((a, c.relation, rhs));
    }
    for (col, cap) in extra_rows {
        let mut a = vec![0.0; structural];
        a[col] = 1.0;
        rows.push((a, Relation::Le, cap));
    }
    // Nonnegative right-hand sides.
    for (a, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Minimization objective over structural columns.
    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; structural];
    for (j, &c) in lp.objective.iter().enumerate() {
        let c = c * flip;
        match maps[j] {
            VarMap::Shifted { col, .. } => cost[col] += c,
            VarMap::Mirrored { col, .. } => cost[col] -= c,
            VarMap::Free { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let mut tableau = Tableau::new(&rows, structural);
    let status = tableau.run(&cost)?;

    let recover = |y: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|m| match *m {
                VarMap::Shifted { col, offset } => offset + y[col],
                VarMap::Mirrored { col, offset } => offset - y[col],
                VarMap::Free { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    };

    match status {
        LpStatus::Optimal => {
            let y = tableau.structural_values(structural);
            let x = recover(&y);
            verify(lp, &x)?;
            let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
            Ok(LpSolution { status, x, objective })
        }
        other => Ok(LpSolution { status: other, x: Vec::new(), objective: f64::NAN }),
    }
}

fn verify(lp: &LinearProgram, x: &[f64]) -> Result<()> {
    for (k, c) in lp.constraints.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let scale = 1.0 + c.rhs.abs() + c.coeffs.iter().zip(x).map(|(a, v)| (a * v).abs()).sum::<f64>();
        let slack = match c.relation {
            Relation::Le => c.rhs - lhs,
            Relation::Ge => lhs - c.rhs,
            Relation::Eq => -(lhs - c.rhs).abs(),
        };
        if slack < -1e-7 * scale {
            return Err(Error::Numerical(format!(
                "solution violates constraint {k} by {:.3e}",
                -slack
            )));
        }
    }
    for (j, (&v, &(l, u))) in x.iter().zip(&lp.bounds).enumerate() {
        if v < l - 1e-7 * (1.0 + l.abs()) || v > u + 1e-7 * (1.0 + u.abs()) {
            return Err(Error::Numerical(format!("variable {j} = {v} outside [{l}, {u}]")));
        }
    }
    Ok(())
}

struct Tableau {
    /// `m` rows of `width + 1` entries; the last entry is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    artificial_start: usize,
}

impl Tableau {
    fn new(rows: &[(Vec<f64>, Relation, f64)], structural: usize) -> Self {
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = structural + slack_count;
        let width = artificial_start + art_count;
        let mut a = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut r) = (structural, artificial_start);
        for (coeffs, rel, rhs) in rows {
            let mut row = vec![0.0; width + 1];
            row[..structural].copy_from_slice(coeffs);
            row[width] = *rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[r] = 1.0;
                    basis.push(r);
                    r += 1;
                }
                Relation::Eq => {
                    row[r] = 1.0;
                    basis.push(r);
                    r += 1;
                }
            }
            a.push(row);
        }
        Self { a, basis, width, artificial_start }
    }

    fn run(&mut self, cost: &[f64]) -> Result<LpStatus> {
        // Phase 1: minimize the sum of artificials.
        if self.artificial_start < self.width {
            let mut phase1 = vec![0.0; self.width];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = 1.0);
            let scale = 1.0 + self.a.iter().map(|r| r[self.width].abs()).fold(0.0, f64::max);
            match self.optimize(&phase1, self.width)? {
                LpStatus::Optimal => {}
                _ => return Err(Error::Numerical("phase one did not terminate".into())),
            }
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.a)
                .filter(|(&b, _)| b >= self.artificial_start)
                .map(|(_, row)| row[self.width])
                .sum();
            if infeasibility > LP_TOL * scale {
                return Ok(LpStatus::Infeasible);
            }
            self.expel_artificials();
        }
        // Phase 2 over structural and slack columns only.
        let mut full = vec![0.0; self.width];
        full[..cost.len()].copy_from_slice(cost);
        self.optimize(&full, self.artificial_start)
    }

    /// Pivots basic artificials (at zero level) out, dropping redundant rows.
    fn expel_artificials(&mut self) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] >= self.artificial_start {
                let entering = (0..self.artificial_start)
                    .filter(|&j| self.a[r][j].abs() > 1e-9)
                    .max_by(|&x, &y| self.a[r][x].abs().total_cmp(&self.a[r][y].abs()));
                match entering {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.a.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    /// Primal simplex on columns `0..limit`. Dantzig pricing, switching to
    /// Bland's rule after a run of degenerate pivots.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<LpStatus> {
        let m = self.a.len();
        let max_iter = 50_000 + 200 * (m + limit);
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            // Reduced costs d_j = c_j - c_B B^-1 A_j.
            let mut entering = None;
            let mut best = -COST_EPS;
            let bland = degenerate_run > 2 * (m + 10);
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for (row, &b) in self.a.iter().zip(&self.basis) {
                    if cost[b] != 0.0 {
                        d -= cost[b] * row[j];
                    }
                }
                if !d.is_finite() {
                    return Err(Error::Numerical("non-finite reduced cost".into()));
                }
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(LpStatus::Optimal);
            };
            // Ratio test, ties broken by smallest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let v = self.a[r][col];
                if v > PIVOT_EPS {
                    let ratio = self.a[r][self.width] / v;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            if ratio.abs() <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
        }
        Err(Error::Numerical(format!("simplex exceeded {max_iter} iterations")))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (r, other) in self.a.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col];
            if f != 0.0 {
                for (o, &pv) in other.iter_mut().zip(&pivot_row) {
                    *o -= f * pv;
                }
                other[col] = 0.0;
            }
        }
        // Clamp tiny negative right-hand sides produced by round-off.
        for other in self.a.iter_mut() {
            let last = other.len() - 1;
            if other[last] < 0.0 && other[last] > -1e-12 {
                other[last] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn structural_values(&self, structural: usize) -> Vec<f64> {
        let mut y = vec![0.0; structural];
        for (row, &b) in self.a.iter().zip(&self.basis) {
            if b < structural {
                y[b] = row[self.width].max(0.0);
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_max() {
        let lp = LinearProgram::new(Sense::Maximize, 1).with_objective(vec![1.0]).le(vec![1.0], 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let lp = LinearProgram::new(Sense::Maximize, 1).with_objective(vec![1.0]).le(vec![1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn simplex_face() {
        let lp = LinearProgram::new(Sense::Maximize, 2)
            .with_objective(vec![1.0, 1.0])
            .le(vec![1.0, 1.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded() {
        let lp = LinearProgram::new(Sense::Maximize, 2)
            .with_objective(vec![1.0, 0.0])
            .ge(vec![1.0, -1.0], 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x - y, x free in [-2, inf) via bounds, y <= 5 with no lower bound, x + y = 1
        let lp = LinearProgram::new(Sense::Minimize, 2)
            .with_objective(vec![1.0, -1.0])
            .eq(vec![1.0, 1.0], 1.0)
            .bound(0, -2.0, f64::INFINITY)
            .bound(1, f64::NEG_INFINITY, 5.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 2.0).abs() < 1e-12 && (s.x[1] - 3.0).abs() < 1e-12);
        let free = LinearProgram::new(Sense::Maximize, 1)
            .with_objective(vec![-1.0])
            .ge(vec![1.0], -4.0)
            .bound(0, f64::NEG_INFINITY, f64::INFINITY);
        let s = solve_lp(&free).unwrap();
        assert!((s.x[0] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::new(Sense::Maximize, 2)
            .with_objective(vec![1.0, 2.0])
            .eq(vec![1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0], 2.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed() {
        let mut lp = LinearProgram::new(Sense::Maximize, 2);
        lp.push(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn matching_pennies_value() {
        // max v s.t. row mixes earn >= v against each column.
        let a = [[1.0, -1.0], [-1.0, 1.0]];
        let mut lp = LinearProgram::new(Sense::Maximize, 3)
            .with_objective(vec![0.0, 0.0, 1.0])
            .eq(vec![1.0, 1.0, 0.0], 1.0)
            .bound(2, f64::NEG_INFINITY, f64::INFINITY);
        for col in 0..2 {
            lp.push(vec![a[0][col], a[1][col], -1.0], Relation::Ge, 0.0);
        }
        let s = solve_lp(&lp).unwrap();
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn klee_minty_terminates() {
        let n = 6;
        let mut lp = LinearProgram::new(Sense::Maximize, n)
            .with_objective((0..n).map(|j| 2f64.powi((n - 1 - j) as i32)).collect());
        for i in 0..n {
            let mut row = vec![0.0; n];
            for j in 0..i {
                row[j] = 2f64.powi((i - j + 1) as i32);
            }
            row[i] = 1.0;
            lp.push(row, Relation::Le, 5f64.powi(i as i32 + 1));
        }
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 5f64.powi(n as i32)).abs() < 1e-6);
    }
}
