//! Dense two-phase tableau simplex with Bland's pivoting rule.
//!
//! Problems are stated as `maximize cᵀx` subject to `E x = d`, `G x ≤ h` and
//! a domain constraint on `x`. Sizes are small (tens of variables), so the
//! tableau is rebuilt from scratch for every solve.

use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};
use crate::matrix::DenseMatrix;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarDomain {
    /// `x ≥ 0`.
    NonNegative,
    /// No sign restriction.
    Free,
    /// `‖x‖₁ ≤ radius`.
    L1Ball { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: DenseMatrix,
    pub ub_rhs: Vec<f64>,
    pub domain: VarDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    PivotLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
    pub pivots: usize,
}

impl LpProblem {
    /// `maximize cᵀx` over the given domain with no further constraints.
    pub fn maximize(objective: Vec<f64>, domain: VarDomain) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix: DenseMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ub_matrix: DenseMatrix::zeros(0, n),
            ub_rhs: Vec::new(),
            domain,
        }
    }

    pub fn with_eq(mut self, matrix: DenseMatrix, rhs: Vec<f64>) -> Self {
        self.eq_matrix = matrix;
        self.eq_rhs = rhs;
        self
    }

    pub fn with_ub(mut self, matrix: DenseMatrix, rhs: Vec<f64>) -> Self {
        self.ub_matrix = matrix;
        self.ub_rhs = rhs;
        self
    }

    /// `max {tᵀx : ‖x‖₁ ≤ 1, A x = 0}`.
    pub fn restricted_null(a: &DenseMatrix, t: &[f64]) -> Self {
        let rows = a.rows();
        Self::maximize(t.to_vec(), VarDomain::L1Ball { radius: 1.0 })
            .with_eq(a.clone(), vec![0.0; rows])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_matrix.cols() != n || self.eq_matrix.rows() != self.eq_rhs.len() {
            return dim(format!(
                "equality block {}x{} with {} rhs values for {n} variables",
                self.eq_matrix.rows(),
                self.eq_matrix.cols(),
                self.eq_rhs.len()
            ));
        }
        if self.ub_matrix.cols() != n || self.ub_matrix.rows() != self.ub_rhs.len() {
            return dim(format!(
                "inequality block {}x{} with {} rhs values for {n} variables",
                self.ub_matrix.rows(),
                self.ub_matrix.cols(),
                self.ub_rhs.len()
            ));
        }
        let finite = self
            .objective
            .iter()
            .chain(&self.eq_rhs)
            .chain(&self.ub_rhs)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Lp("non-finite problem data".into()));
        }
        if let VarDomain::L1Ball { radius } = self.domain {
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(Error::Lp(format!("bad l1 radius {radius}")));
            }
        }
        Ok(())
    }
}

/// Solves the problem; infeasibility and unboundedness are reported through
/// [`LpStatus`].
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    let split = !matches!(problem.domain, VarDomain::NonNegative);
    let nz = if split { 2 * n } else { n };

    let lift_row = |row: &[f64]| -> Vec<f64> {
        if split {
            row.iter().copied().chain(row.iter().map(|v| -v)).collect()
        } else {
            row.to_vec()
        }
    };

    let mut eq_rows: Vec<(Vec<f64>, f64)> = (0..problem.eq_matrix.rows())
        .map(|i| (lift_row(problem.eq_matrix.row(i)), problem.eq_rhs[i]))
        .collect();
    let mut ub_rows: Vec<(Vec<f64>, f64)> = (0..problem.ub_matrix.rows())
        .map(|i| (lift_row(problem.ub_matrix.row(i)), problem.ub_rhs[i]))
        .collect();
    if let VarDomain::L1Ball { radius } = problem.domain {
        ub_rows.push((vec![1.0; nz], radius));
    }
    let cost = lift_row(&problem.objective);

    let mut tableau = Tableau::build(nz, &mut eq_rows, &mut ub_rows);
    let (z, value, status, pivots) = tableau.run(&cost);

    let x: Vec<f64> = if split {
        (0..n).map(|j| z[j] - z[n + j]).collect()
    } else {
        z
    };
    Ok(LpSolution {
        x,
        value,
        status,
        pivots,
    })
}

/// Solves `max {tᵀx : ‖x‖₁ ≤ 1, A x = 0}` and returns `(x, value)`.
pub fn max_over_restricted_null(a: &DenseMatrix, t: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.cols() != t.len() {
        return dim(format!(
            "objective has {} entries, representation has {} columns",
            t.len(),
            a.cols()
        ));
    }
    let sol = lp_solve(&LpProblem::restricted_null(a, t))?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.x, sol.value)),
        other => Err(Error::Lp(format!(
            "restricted null-space program ended with status {other:?}"
        ))),
    }
}

struct Tableau {
    /// Constraint rows: coefficients for every column followed by the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Number of structural columns (lifted variables).
    nz: usize,
    /// Index of the first artificial column; columns past it are artificial.
    first_artificial: usize,
    ncols: usize,
}

impl Tableau {
    fn build(nz: usize, eq_rows: &mut [(Vec<f64>, f64)], ub_rows: &mut [(Vec<f64>, f64)]) -> Self {
        let n_slack = ub_rows.len();
        let first_artificial = nz + n_slack;
        let mut needs_artificial = Vec::new();
        let mut rows = Vec::new();
        let mut basis = Vec::new();

        for (k, (coef, rhs)) in ub_rows.iter_mut().enumerate() {
            let mut row = vec![0.0; first_artificial];
            row[..nz].copy_from_slice(coef);
            row[nz + k] = 1.0;
            let mut b = *rhs;
            if b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                needs_artificial.push(rows.len());
                basis.push(usize::MAX);
            } else {
                basis.push(nz + k);
            }
            row.push(b);
            rows.push(row);
        }
        for (coef, rhs) in eq_rows.iter_mut() {
            let mut row = vec![0.0; first_artificial];
            row[..nz].copy_from_slice(coef);
            let mut b = *rhs;
            if b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
                b = -b;
            }
            needs_artificial.push(rows.len());
            basis.push(usize::MAX);
            row.push(b);
            rows.push(row);
        }

        let n_art = needs_artificial.len();
        let ncols = first_artificial + n_art;
        for row in rows.iter_mut() {
            let rhs = row.pop().expect("rhs present");
            row.resize(ncols, 0.0);
            row.push(rhs);
        }
        for (a, &i) in needs_artificial.iter().enumerate() {
            rows[i][first_artificial + a] = 1.0;
            basis[i] = first_artificial + a;
        }
        Self {
            rows,
            basis,
            nz,
            first_artificial,
            ncols,
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [f64]) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = reduced[c];
        if f != 0.0 {
            for (v, &pv) in reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            reduced[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row `z_j − c_j` (plus the objective value in the last
    /// slot) for `maximize costᵀz` restricted to the active columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red: Vec<f64> = (0..=self.ncols)
            .map(|j| if j < self.ncols { -cost[j] } else { 0.0 })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, &t) in red.iter_mut().zip(&self.rows[i]) {
                    *v += cb * t;
                }
            }
        }
        red
    }

    /// Bland iterations over columns `< active`. Returns the status and the
    /// number of pivots performed.
    fn iterate(&mut self, reduced: &mut [f64], active: usize, budget: usize) -> (LpStatus, usize) {
        let mut pivots = 0;
        loop {
            let Some(c) = (0..active).find(|&j| reduced[j] < -COST_TOL) else {
                return (LpStatus::Optimal, pivots);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return (LpStatus::Unbounded, pivots);
            };
            if pivots >= budget {
                return (LpStatus::PivotLimit, pivots);
            }
            self.pivot(r, c, reduced);
            pivots += 1;
        }
    }

    fn run(&mut self, cost_z: &[f64]) -> (Vec<f64>, f64, LpStatus, usize) {
        let mut total = 0;
        let nz = self.nz;
        let zero = |nz: usize| (vec![0.0; nz], 0.0);

        if self.ncols > self.first_artificial {
            let mut phase1 = vec![0.0; self.ncols];
            phase1[self.first_artificial..]
                .iter_mut()
                .for_each(|v| *v = -1.0);
            let mut red = self.reduced_costs(&phase1);
            let (status, piv) = self.iterate(&mut red, self.ncols, MAX_PIVOTS);
            total += piv;
            if status == LpStatus::PivotLimit {
                let (z, v) = zero(nz);
                return (z, v, status, total);
            }
            let scale = 1.0
                + self
                    .rows
                    .iter()
                    .map(|r| r[self.ncols].abs())
                    .fold(0.0, f64::max);
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= self.first_artificial)
                .map(|(i, _)| self.rhs(i))
                .sum();
            if infeas > FEAS_TOL * scale {
                let (z, v) = zero(nz);
                return (z, v, LpStatus::Infeasible, total);
            }
            // Drive zero-level artificials out of the basis; rows with no
            // usable pivot are redundant and dropped.
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > 1e-9) {
                        Some(c) => {
                            self.pivot(i, c, &mut red);
                            total += 1;
                        }
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
            let keep = self.first_artificial;
            for row in self.rows.iter_mut() {
                let rhs = row[self.ncols];
                row.truncate(keep);
                row.push(rhs.max(0.0));
            }
            self.ncols = keep;
        }

        let mut cost = vec![0.0; self.ncols];
        cost[..nz].copy_from_slice(cost_z);
        let mut red = self.reduced_costs(&cost);
        let (status, piv) = self.iterate(&mut red, self.ncols, MAX_PIVOTS - total.min(MAX_PIVOTS));
        total += piv;
        let mut z = vec![0.0; nz];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nz {
                z[b] = self.rhs(i);
            }
        }
        let value = z.iter().zip(cost_z).map(|(a, b)| a * b).sum();
        (z, value, status, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_rows(&[v.to_vec()]).unwrap()
    }

    #[test]
    fn two_variable_section() {
        let (x, v) = max_over_restricted_null(&row(&[1.0, 1.0]), &[1.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn trivial_null_space_and_zero_objective() {
        let (x, v) =
            max_over_restricted_null(&DenseMatrix::identity(3), &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(v, 0.0);
        assert!(x.iter().all(|&xi| xi == 0.0));
        let (_, v) = max_over_restricted_null(&row(&[1.0, 2.0, 3.0]), &[0.0; 3]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn empty_representation_is_the_l1_ball() {
        let a = DenseMatrix::zeros(0, 3);
        let (x, v) = max_over_restricted_null(&a, &[0.2, -0.9, 0.4]).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
        assert!((x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18, x, y ≥ 0.
        let g = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]).unwrap();
        let p = LpProblem::maximize(vec![3.0, 5.0], VarDomain::NonNegative)
            .with_ub(g, vec![4.0, 12.0, 18.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 36.0).abs() < 1e-10);
        assert!((s.x[0] - 2.0).abs() < 1e-10 && (s.x[1] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // min x + y s.t. x + y ≥ 2, x − y = 1 written as a maximisation.
        let p = LpProblem::maximize(vec![-1.0, -1.0], VarDomain::NonNegative)
            .with_ub(row(&[-1.0, -1.0]), vec![-2.0])
            .with_eq(row(&[1.0, -1.0]), vec![1.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 2.0).abs() < 1e-10);
        assert!((s.x[0] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn free_variables() {
        // max −|x − 3| via x free, τ ≥ |x − 3|.
        let g = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, -1.0]]).unwrap();
        let p = LpProblem::maximize(vec![0.0, -1.0], VarDomain::Free).with_ub(g, vec![3.0, -3.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.value.abs() < 1e-10);
        assert!((s.x[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p =
            LpProblem::maximize(vec![1.0], VarDomain::NonNegative).with_ub(row(&[1.0]), vec![-1.0]);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);
        let p = LpProblem::maximize(vec![1.0, 0.0], VarDomain::NonNegative)
            .with_ub(row(&[0.0, 1.0]), vec![1.0]);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let e = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        let (x, v) = max_over_restricted_null(&e, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!((x[0] + x[1]).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(max_over_restricted_null(&row(&[1.0, 1.0]), &[1.0]).is_err());
        let p = LpProblem::maximize(vec![1.0], VarDomain::NonNegative)
            .with_ub(row(&[1.0, 2.0]), vec![1.0]);
        assert!(lp_solve(&p).is_err());
    }
}
