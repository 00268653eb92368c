//! Dense two-phase simplex solver used by the multi-sample kappa operators.
//!
//! The linear programs here are tiny (tens of variables and constraints), so
//! the implementation favors determinism over speed: Bland's rule for both
//! the entering and leaving variable makes the pivot sequence unique and
//! cycle-free.

use thiserror::Error;

const EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub(crate) enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("pivot limit exceeded")]
    PivotLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Maximize `objective . x` subject to `constraints` and `x >= 0`.
pub(crate) fn maximize(
    objective: &[f64],
    constraints: &[Constraint],
) -> Result<LpSolution, LpError> {
    Tableau::new(objective, constraints)?.solve()
}

struct Tableau {
    /// One row per constraint; columns are all structural + slack + artificial
    /// variables, with the right-hand side last.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_structural: usize,
    n_total: usize,
    artificial_start: usize,
    objective: Vec<f64>,
}

impl Tableau {
    fn new(objective: &[f64], constraints: &[Constraint]) -> Result<Self, LpError> {
        let n = objective.len();
        let m = constraints.len();

        // Orient every row so the right-hand side is nonnegative.
        let mut oriented: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for c in constraints {
            debug_assert_eq!(c.coeffs.len(), n);
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                oriented.push((c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs));
            } else {
                oriented.push((c.coeffs.clone(), c.relation, c.rhs));
            }
        }

        let n_slack = oriented
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_artificial = oriented
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let n_total = n + n_slack + n_artificial;
        let artificial_start = n + n_slack;

        let mut rows = vec![vec![0.0; n_total + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut slack_idx = n;
        let mut art_idx = artificial_start;
        for (i, (coeffs, rel, rhs)) in oriented.into_iter().enumerate() {
            rows[i][..n].copy_from_slice(&coeffs);
            rows[i][n_total] = rhs;
            match rel {
                Relation::Le => {
                    rows[i][slack_idx] = 1.0;
                    basis[i] = slack_idx;
                    slack_idx += 1;
                }
                Relation::Ge => {
                    rows[i][slack_idx] = -1.0;
                    slack_idx += 1;
                    rows[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                }
                Relation::Eq => {
                    rows[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                }
            }
        }

        Ok(Tableau {
            rows,
            basis,
            n_structural: n,
            n_total,
            artificial_start,
            objective: objective.to_vec(),
        })
    }

    fn solve(mut self) -> Result<LpSolution, LpError> {
        if self.artificial_start < self.n_total {
            // Phase 1: maximize -(sum of artificials).
            let mut phase1 = vec![0.0; self.n_total];
            for c in self.artificial_start..self.n_total {
                phase1[c] = -1.0;
            }
            self.run(&phase1, self.n_total)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.rows)
                .filter(|(&b, _)| b >= self.artificial_start)
                .map(|(_, row)| row[self.n_total])
                .sum();
            if infeas > 1e-7 {
                return Err(LpError::Infeasible);
            }
            self.evict_artificials();
        }

        let mut phase2 = vec![0.0; self.n_total];
        phase2[..self.n_structural].copy_from_slice(&self.objective);
        self.run(&phase2, self.artificial_start)?;

        let mut x = vec![0.0; self.n_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_structural {
                x[b] = self.rows[i][self.n_total];
            }
        }
        let value = x
            .iter()
            .zip(&self.objective)
            .map(|(xi, ci)| xi * ci)
            .sum();
        Ok(LpSolution { x, value })
    }

    /// Pivot artificial variables out of the basis after phase 1; rows where
    /// no replacement column exists are redundant and are zeroed out.
    fn evict_artificials(&mut self) {
        for i in 0..self.rows.len() {
            if self.basis[i] < self.artificial_start {
                continue;
            }
            let col = (0..self.artificial_start).find(|&j| self.rows[i][j].abs() > EPS);
            match col {
                Some(j) => self.pivot(i, j),
                None => {
                    for v in self.rows[i].iter_mut() {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Primal simplex iterations with Bland's rule, maximizing `costs` while
    /// only allowing columns below `col_limit` to enter.
    fn run(&mut self, costs: &[f64], col_limit: usize) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let reduced = |t: &Self, j: usize| -> f64 {
                let z: f64 = t
                    .basis
                    .iter()
                    .zip(&t.rows)
                    .map(|(&b, row)| costs[b] * row[j])
                    .sum();
                costs[j] - z
            };
            // Bland: lowest-index improving column enters.
            let entering = (0..col_limit).find(|&j| {
                !self.basis.contains(&j) && reduced(self, j) > EPS
            });
            let Some(col) = entering else {
                return Ok(());
            };
            // Bland: min ratio; ties resolved by smallest basic variable index.
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > EPS {
                    let ratio = row[self.n_total] / row[col];
                    let key = (ratio, self.basis[i]);
                    match best {
                        None => best = Some((key.0, key.1, i)),
                        Some((r, b, _)) => {
                            if ratio < r - EPS || (ratio < r + EPS && self.basis[i] < b) {
                                best = Some((ratio, self.basis[i], i));
                            }
                        }
                    }
                }
            }
            let Some((_, _, row)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(LpError::PivotLimit)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..=self.n_total {
                let delta = f * self.rows[row][j];
                self.rows[i][j] -= delta;
            }
        }
        self.basis[row] = col;
    }
}

/// Maximize `objective . x`, then refine the optimum to the lexicographically
/// smallest `x` among all optimal solutions (coordinate by coordinate).
pub(crate) fn maximize_lex_min(
    objective: &[f64],
    constraints: &[Constraint],
) -> Result<LpSolution, LpError> {
    let first = maximize(objective, constraints)?;
    let n = objective.len();
    let mut fixed: Vec<Constraint> = constraints.to_vec();
    fixed.push(Constraint {
        coeffs: objective.to_vec(),
        relation: Relation::Eq,
        rhs: first.value,
    });
    let mut x = vec![0.0; n];
    for j in 0..n {
        let mut minimize_j = vec![0.0; n];
        minimize_j[j] = -1.0;
        let sol = maximize(&minimize_j, &fixed)?;
        x[j] = sol.x[j].max(0.0);
        let mut pin = vec![0.0; n];
        pin[j] = 1.0;
        fixed.push(Constraint {
            coeffs: pin,
            relation: Relation::Eq,
            rhs: x[j],
        });
    }
    let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, value })
}
