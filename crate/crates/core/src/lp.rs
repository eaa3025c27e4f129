//! Dense two-phase simplex method.
//!
//! Small and exact enough for desk-scale minimax problems. Pivoting follows
//! the least-index rule, so degenerate problems cannot cycle and identical
//! inputs always end at the same vertex.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `minimize c·x  subject to  rows,  x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<(Vec<f64>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            n_vars: objective.len(),
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn constraint(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars, "constraint width");
        self.constraints.push((coeffs, cmp, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

/// Row-major tableau. Column layout: structural variables, then one slack
/// per inequality, then one artificial per row, then the right-hand side.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_real: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let n_slack = lp.constraints.iter().filter(|c| c.1 != Cmp::Eq).count();
        let n_real = lp.n_vars + n_slack;
        let width = n_real + m + 1;
        let mut rows = Vec::with_capacity(m);
        let mut slack = lp.n_vars;
        for (i, (coeffs, cmp, rhs)) in lp.constraints.iter().enumerate() {
            let mut row = vec![0.0; width];
            row[..lp.n_vars].copy_from_slice(coeffs);
            match cmp {
                Cmp::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Cmp::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            row[width - 1] = *rhs;
            if *rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row[n_real + i] = 1.0;
            rows.push(row);
        }
        Tableau {
            rows,
            basis: (n_real..n_real + m).collect(),
            n_real,
            width,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs the simplex loop for `cost` over the first `allowed` columns.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let rhs = self.width - 1;
        loop {
            // reduced cost of column j: c_j - c_B · B^-1 A_j
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                reduced < -EPS
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[rhs] / row[c];
                    let better = match leave {
                        None => true,
                        Some((best, _, bvar)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < bvar)
                        }
                    };
                    if better {
                        leave = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = leave else {
                return Err(Error::Numeric("linear program is unbounded".into()));
            };
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let m = self.rows.len();
        let rhs = self.width - 1;

        let mut phase1 = vec![0.0; self.width - 1];
        phase1[self.n_real..].iter_mut().for_each(|c| *c = 1.0);
        self.optimize(&phase1, self.width - 1)?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.rows)
            .filter(|(&b, _)| b >= self.n_real)
            .map(|(_, row)| row[rhs])
            .sum();
        if infeasibility > 1e-9 {
            return Err(Error::Numeric("linear program is infeasible".into()));
        }
        // drive remaining (zero-level) artificials out of the basis
        let mut redundant = Vec::new();
        for r in 0..m {
            if self.basis[r] >= self.n_real {
                match (0..self.n_real).find(|&j| self.rows[r][j].abs() > EPS) {
                    Some(c) => self.pivot(r, c),
                    None => redundant.push(r),
                }
            }
        }
        for r in redundant.into_iter().rev() {
            self.rows.remove(r);
            self.basis.remove(r);
        }

        let mut cost = vec![0.0; self.width - 1];
        cost[..lp.n_vars].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.n_real)?;

        let mut x = vec![0.0; lp.n_vars];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < lp.n_vars {
                x[b] = row[rhs].max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }
}
