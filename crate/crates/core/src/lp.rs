//! Dense two-phase simplex for the small LPs that arise from matrix games.
//!
//! Variables are implicitly nonnegative. Entering and leaving variables are
//! chosen by Bland's rule, so the pivot sequence is deterministic and cannot
//! cycle.

use thiserror::Error;

/// Entries with smaller magnitude are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-12;

/// Phase-one residual above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex exceeded {pivots} pivots on a {rows}x{cols} program")]
    PivotLimit { pivots: usize, rows: usize, cols: usize },
    #[error("matrix game solve failed on {matrix:?}: {source}")]
    Matrix {
        matrix: Vec<Vec<f64>>,
        #[source]
        source: Box<LpError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Program maximizing `objective · x` over `x >= 0`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        LinearProgram { objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.rows.push((coeffs, rel, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    n: usize,
    /// Total columns excluding the right-hand side.
    width: usize,
    artificial_from: usize,
    /// Rows of length `width + 1`; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    max_pivots: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        // normalize to nonnegative rhs
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(c, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.iter().map(|x| -x).collect(), flipped, -b)
                } else {
                    (c.clone(), *rel, *b)
                }
            })
            .collect();
        let slacks = normalized.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = normalized.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_from = n + slacks;
        let width = artificial_from + artificials;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, artificial_from);
        for (coeffs, rel, rhs) in normalized {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Tableau {
            n,
            width,
            artificial_from,
            rows,
            basis,
            max_pivots: 50 * (m + width + 1),
            pivots: 0,
        }
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution, LpError> {
        if self.artificial_from < self.width {
            let mut cost = vec![0.0; self.width];
            for c in &mut cost[self.artificial_from..] {
                *c = -1.0;
            }
            self.optimize(&cost, self.width)?;
            if self.objective_value(&cost) < -FEAS_TOL {
                return Err(LpError::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; self.width];
        cost[..self.n].copy_from_slice(objective);
        self.optimize(&cost, self.artificial_from)?;

        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rows[i][self.width].max(0.0);
            }
        }
        let objective = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rows[i][self.width])
            .sum()
    }

    /// Maximizes `cost` using only columns below `allowed` as entering.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpError> {
        let mut in_basis = vec![false; self.width];
        loop {
            in_basis.iter_mut().for_each(|b| *b = false);
            for &b in &self.basis {
                in_basis[b] = true;
            }
            let entering = (0..allowed).find(|&j| {
                if in_basis[j] {
                    return false;
                }
                let z: f64 = self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.rows[i][j]).sum();
                z - cost[j] < -PIVOT_TOL
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a > PIVOT_TOL {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((i, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(i, j)?;
        }
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.rows.len() {
            if self.basis[i] < self.artificial_from {
                continue;
            }
            if let Some(j) = (0..self.artificial_from).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                // rhs is zero here, so this pivot keeps feasibility
                let _ = self.pivot(i, j);
            }
            // otherwise the row is redundant; its artificial stays basic at zero
        }
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(LpError::PivotLimit {
                pivots: self.max_pivots,
                rows: self.rows.len(),
                cols: self.width,
            });
        }
        let p = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        Ok(())
    }
}
