//! Nuclear norm minimization by alternating-direction splitting.
//!
//! The nuclear-norm block is handled by singular value soft-thresholding and
//! the data block by a projection (ℓ2 residual ball or affine set) computed in
//! the coordinates of the SVD of the matrix representation. Residual balls in
//! ℓ1 or ℓ∞ use an extra splitting variable `w = A X − b`.

use serde::{Deserialize, Serialize};

use crate::error::{arg, dim, Error, Result};
use crate::matrix::{dot, norm2, svd, DenseMatrix, RANK_REL_TOL};
use crate::measure::{extended_real, MeasurementNorm};
use crate::operator::LinearTransformation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnmConfig {
    pub rho: f64,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Iterations between convergence checks.
    pub check_every: usize,
}

impl Default for NnmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            feas_tol: 1e-8,
            gap_tol: 1e-6,
            max_iter: 5000,
            check_every: 10,
        }
    }
}

impl NnmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho > 0.0
            && self.feas_tol > 0.0
            && self.gap_tol > 0.0
            && self.max_iter > 0
            && self.check_every > 0;
        if ok {
            Ok(())
        } else {
            arg(format!("invalid solver configuration {self:?}"))
        }
    }
}

/// `min {‖X‖_∗ : ‖A X − b‖ ≤ ε}` with the operator's measurement norm.
#[derive(Debug, Clone)]
pub struct NnmProblem<'a> {
    pub op: &'a LinearTransformation,
    pub b: Vec<f64>,
    pub epsilon: f64,
}

impl<'a> NnmProblem<'a> {
    pub fn equality(op: &'a LinearTransformation, b: Vec<f64>) -> Self {
        Self {
            op,
            b,
            epsilon: 0.0,
        }
    }

    pub fn noisy(op: &'a LinearTransformation, b: Vec<f64>, epsilon: f64) -> Self {
        Self { op, b, epsilon }
    }

    fn validate(&self) -> Result<()> {
        if self.b.len() != self.op.p() {
            return dim(format!(
                "right-hand side has {} entries, operator has {} measurements",
                self.b.len(),
                self.op.p()
            ));
        }
        if let Some(i) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return arg(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnmSolution {
    pub x: DenseMatrix,
    pub objective: f64,
    /// `‖A X − b‖` in the measurement norm.
    pub residual: f64,
    /// Feasibility accuracy: the bound `‖A X − b‖ ≤ theta`.
    pub theta: f64,
    /// Certified `‖X‖_∗ − Opt(b)` upper bound from the dual certificate.
    pub upsilon_bound: Option<f64>,
    /// Lower bound on `Opt(b)` from the dual certificate.
    #[serde(with = "extended_real")]
    pub dual_lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Thin SVD `M = P Σ Qᵀ` of the matrix representation, restricted to the
/// numerically nonzero singular values.
#[derive(Debug, Clone)]
pub(crate) struct RangeFactors {
    pub p: DenseMatrix,
    pub sigma: Vec<f64>,
    pub q: DenseMatrix,
}

impl RangeFactors {
    pub fn new(op: &LinearTransformation) -> Result<Self> {
        let mn = op.m() * op.n();
        if op.p() == 0 {
            return Ok(Self {
                p: DenseMatrix::zeros(0, 0),
                sigma: Vec::new(),
                q: DenseMatrix::zeros(mn, 0),
            });
        }
        let f = svd(&op.matrix_representation())?;
        let top = f.sigma.first().copied().unwrap_or(0.0);
        let k = f
            .sigma
            .iter()
            .take_while(|&&s| top > 0.0 && s > RANK_REL_TOL * top)
            .count();
        Ok(Self {
            p: f.u.leading_columns(k),
            sigma: f.sigma[..k].to_vec(),
            q: f.v.leading_columns(k),
        })
    }

    fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Pᵀ b`.
    fn range_coords(&self, b: &[f64]) -> Vec<f64> {
        if self.rank() == 0 {
            return Vec::new();
        }
        self.p.t_matvec(b)
    }

    /// Euclidean distance from `b` to the range of `M`.
    fn range_distance(&self, b: &[f64]) -> f64 {
        if self.rank() == 0 {
            return norm2(b);
        }
        let back = self.p.matvec(&self.range_coords(b));
        let r: Vec<f64> = b.iter().zip(&back).map(|(a, c)| a - c).collect();
        norm2(&r)
    }

    /// `Qᵀ v`.
    fn row_coords(&self, v: &[f64]) -> Vec<f64> {
        if self.rank() == 0 {
            return Vec::new();
        }
        self.q.t_matvec(v)
    }

    /// `v + Q (a_new − a_old)`.
    fn replace_row_part(&self, v: &mut [f64], old: &[f64], new: &[f64]) {
        for (k, (o, n)) in old.iter().zip(new).enumerate() {
            let d = n - o;
            if d == 0.0 {
                continue;
            }
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += d * self.q[(i, k)];
            }
        }
    }

    /// Minimum-norm `y` with `Mᵀ y` closest to `g`.
    fn pseudo_adjoint_solve(&self, g: &[f64], p: usize) -> Vec<f64> {
        if self.rank() == 0 {
            return vec![0.0; p];
        }
        let a: Vec<f64> = self
            .row_coords(g)
            .iter()
            .zip(&self.sigma)
            .map(|(ai, si)| ai / si)
            .collect();
        self.p.matvec(&a)
    }
}

fn soft_threshold(v: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    let f = svd(v)?;
    let shrunk: Vec<f64> = f.sigma.iter().map(|s| (s - tau).max(0.0)).collect();
    Ok(DenseMatrix::from_factors(&f.u, &shrunk, &f.v))
}

fn nuclear(x: &DenseMatrix) -> Result<f64> {
    Ok(svd(x)?.sigma.iter().sum())
}

fn spectral(x: &DenseMatrix) -> Result<f64> {
    Ok(svd(x)?.sigma.first().copied().unwrap_or(0.0))
}

/// Projection onto `{z : ‖M z − b‖₂ ≤ ε}` (affine set when `ε = 0`), given
/// `c = Pᵀ b` and the effective radius `ε' = √(ε² − dist(b, range M)²)`.
struct L2Projector<'f> {
    f: &'f RangeFactors,
    c: Vec<f64>,
    radius: f64,
}

impl L2Projector<'_> {
    fn project(&self, w: &mut [f64]) {
        let aw = self.f.row_coords(w);
        let sig = &self.f.sigma;
        let resid = |lambda: f64| -> f64 {
            aw.iter()
                .zip(sig)
                .zip(&self.c)
                .map(|((a, s), c)| {
                    let r = (s * a - c) / (1.0 + lambda * s * s);
                    r * r
                })
                .sum::<f64>()
        };
        let target = self.radius * self.radius;
        let new: Vec<f64> = if self.radius == 0.0 {
            self.c.iter().zip(sig).map(|(c, s)| c / s).collect()
        } else if resid(0.0) <= target {
            return;
        } else {
            let mut hi = 1.0;
            while resid(hi) > target && hi < 1e300 {
                hi *= 4.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if resid(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lambda = hi;
            aw.iter()
                .zip(sig)
                .zip(&self.c)
                .map(|((a, s), c)| (a + lambda * s * c) / (1.0 + lambda * s * s))
                .collect()
        };
        self.f.replace_row_part(w, &aw, &new);
    }
}

struct Certificate {
    lower: f64,
}

/// Weak-duality lower bound `bᵀy − ε‖y‖_d` on `Opt(b)` from the multiplier
/// estimate `g ≈ A*(y)`, rescaled so that `‖A*(y)‖ ≤ 1`.
fn dual_certificate(
    problem: &NnmProblem<'_>,
    factors: &RangeFactors,
    g: &[f64],
) -> Result<Certificate> {
    let op = problem.op;
    let mut y = factors.pseudo_adjoint_solve(g, op.p());
    let spec = spectral(&op.adjoint(&y)?)?;
    if spec > 1.0 {
        y.iter_mut().for_each(|v| *v /= spec);
    }
    let dual_norm = op.norm().dual().norm(&y);
    Ok(Certificate {
        lower: dot(&problem.b, &y) - problem.epsilon * dual_norm,
    })
}

fn finish(
    problem: &NnmProblem<'_>,
    x: DenseMatrix,
    lower: f64,
    iterations: usize,
    converged: bool,
) -> Result<NnmSolution> {
    let objective = nuclear(&x)?;
    let ax = problem.op.apply(&x)?;
    let diff: Vec<f64> = ax.iter().zip(&problem.b).map(|(a, b)| a - b).collect();
    let residual = problem.op.norm().norm(&diff);
    let upsilon_bound = lower.is_finite().then(|| (objective - lower).max(0.0));
    Ok(NnmSolution {
        x,
        objective,
        residual,
        theta: residual,
        upsilon_bound,
        dual_lower: lower,
        iterations,
        converged,
    })
}

fn zero_solution(problem: &NnmProblem<'_>) -> Result<NnmSolution> {
    let x = DenseMatrix::zeros(problem.op.m(), problem.op.n());
    finish(problem, x, 0.0, 0, true)
}

/// Solves `min {‖X‖_∗ : A X = b}`.
pub fn solve_equality(problem: &NnmProblem<'_>, cfg: &NnmConfig) -> Result<NnmSolution> {
    if problem.epsilon != 0.0 {
        return arg("solve_equality requires epsilon = 0");
    }
    solve(problem, cfg)
}

/// Solves `min {‖X‖_∗ : ‖A X − b‖ ≤ ε}`.
pub fn solve_noisy(problem: &NnmProblem<'_>, cfg: &NnmConfig) -> Result<NnmSolution> {
    solve(problem, cfg)
}

fn solve(problem: &NnmProblem<'_>, cfg: &NnmConfig) -> Result<NnmSolution> {
    problem.validate()?;
    cfg.validate()?;
    let norm = problem.op.norm();
    let eps = problem.epsilon;
    if problem.b.iter().all(|&v| v == 0.0) || (eps > 0.0 && eps >= norm.norm(&problem.b)) {
        return zero_solution(problem);
    }
    let factors = RangeFactors::new(problem.op)?;
    let bnorm = norm2(&problem.b);
    let tol = cfg.feas_tol * bnorm.max(1.0);
    let dist = factors.range_distance(&problem.b);

    if eps == 0.0 || norm == MeasurementNorm::L2 {
        if dist > eps + tol {
            return Err(Error::Infeasible {
                residual: dist,
                tol: eps + tol,
            });
        }
        let radius = (eps * eps - dist * dist).max(0.0).sqrt();
        let projector = L2Projector {
            f: &factors,
            c: factors.range_coords(&problem.b),
            radius,
        };
        admm_projected(problem, cfg, &factors, &projector)
    } else {
        // ‖·‖₂ ≥ ‖·‖∞ and ‖·‖₂ ≥ ‖·‖₁ / √p bound the ball from outside.
        let outer = match norm {
            MeasurementNorm::Linf => eps * (problem.op.p() as f64).sqrt(),
            _ => eps,
        };
        if dist > outer + tol {
            return Err(Error::Infeasible {
                residual: dist,
                tol: outer + tol,
            });
        }
        admm_split(problem, cfg, &factors)
    }
}

fn admm_projected(
    problem: &NnmProblem<'_>,
    cfg: &NnmConfig,
    factors: &RangeFactors,
    projector: &L2Projector<'_>,
) -> Result<NnmSolution> {
    let (m, n) = (problem.op.m(), problem.op.n());
    let mn = m * n;
    let tau = 1.0 / cfg.rho;
    let mut z = vec![0.0; mn];
    projector.project(&mut z);
    let mut u = vec![0.0; mn];
    let mut best_lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let v: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let x = soft_threshold(&DenseMatrix::from_row_major(m, n, v)?, tau)?;
        let mut znew: Vec<f64> = x.as_slice().iter().zip(&u).map(|(a, b)| a + b).collect();
        projector.project(&mut znew);
        let mut primal = 0.0;
        for ((ui, xi), zi) in u.iter_mut().zip(x.as_slice()).zip(&znew) {
            *ui += xi - zi;
            primal += (xi - zi) * (xi - zi);
        }
        z = znew;

        if iterations % cfg.check_every == 0 {
            let g: Vec<f64> = u.iter().map(|v| -cfg.rho * v).collect();
            best_lower = best_lower.max(dual_certificate(problem, factors, &g)?.lower);
            let zmat = DenseMatrix::from_row_major(m, n, z.clone())?;
            let obj = nuclear(&zmat)?;
            let scale = obj.max(1.0);
            if primal.sqrt() <= cfg.feas_tol * scale && obj - best_lower <= cfg.gap_tol * scale {
                converged = true;
                break;
            }
        }
    }
    let zmat = DenseMatrix::from_row_major(m, n, z)?;
    finish(problem, zmat, best_lower, iterations, converged)
}

fn admm_split(
    problem: &NnmProblem<'_>,
    cfg: &NnmConfig,
    factors: &RangeFactors,
) -> Result<NnmSolution> {
    let op = problem.op;
    let (m, n, p) = (op.m(), op.n(), op.p());
    let mn = m * n;
    let norm = op.norm();
    let eps = problem.epsilon;
    let tau = 1.0 / cfg.rho;
    let rep = op.matrix_representation();
    let shrink: Vec<f64> = factors
        .sigma
        .iter()
        .map(|s| s * s / (1.0 + s * s))
        .collect();

    let mut z = vec![0.0; mn];
    let mut u1 = vec![0.0; mn];
    let mut u2 = vec![0.0; p];
    let mut best_lower = f64::NEG_INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let v: Vec<f64> = z.iter().zip(&u1).map(|(a, b)| a - b).collect();
        let x = soft_threshold(&DenseMatrix::from_row_major(m, n, v)?, tau)?;
        let mz = rep.matvec(&z);
        let pre: Vec<f64> = mz
            .iter()
            .zip(&problem.b)
            .zip(&u2)
            .map(|((a, b), c)| a - b - c)
            .collect();
        let w = norm.project_ball(&pre, eps);

        // z = (I + MᵀM)⁻¹ (x + u1 + Mᵀ(w + b + u2))
        let shifted: Vec<f64> = w
            .iter()
            .zip(&problem.b)
            .zip(&u2)
            .map(|((a, b), c)| a + b + c)
            .collect();
        let mut rhs: Vec<f64> = rep.t_matvec(&shifted);
        for ((r, xi), ui) in rhs.iter_mut().zip(x.as_slice()).zip(&u1) {
            *r += xi + ui;
        }
        let coords = factors.row_coords(&rhs);
        let reduced: Vec<f64> = coords.iter().zip(&shrink).map(|(a, s)| a - s * a).collect();
        factors.replace_row_part(&mut rhs, &coords, &reduced);
        z = rhs;

        let mz = rep.matvec(&z);
        let mut primal = 0.0;
        for ((ui, xi), zi) in u1.iter_mut().zip(x.as_slice()).zip(&z) {
            *ui += xi - zi;
            primal += (xi - zi) * (xi - zi);
        }
        for (((ui, wi), mzi), bi) in u2.iter_mut().zip(&w).zip(&mz).zip(&problem.b) {
            let d = wi - (mzi - bi);
            *ui += d;
            primal += d * d;
        }

        if iterations % cfg.check_every == 0 {
            let g: Vec<f64> = u1.iter().map(|v| -cfg.rho * v).collect();
            best_lower = best_lower.max(dual_certificate(problem, factors, &g)?.lower);
            let zmat = DenseMatrix::from_row_major(m, n, z.clone())?;
            let obj = nuclear(&zmat)?;
            let diff: Vec<f64> = mz.iter().zip(&problem.b).map(|(a, b)| a - b).collect();
            let feasible = norm.norm(&diff) <= eps + cfg.feas_tol * norm2(&problem.b).max(1.0);
            if feasible && best.as_ref().map_or(true, |(o, _)| obj < *o) {
                best = Some((obj, z.clone()));
            }
            let scale = obj.max(1.0);
            if feasible
                && primal.sqrt() <= cfg.feas_tol * scale
                && obj - best_lower <= cfg.gap_tol * scale
            {
                converged = true;
                break;
            }
        }
    }
    let out = match (converged, best) {
        (false, Some((_, zb))) => zb,
        _ => z,
    };
    finish(
        problem,
        DenseMatrix::from_row_major(m, n, out)?,
        best_lower,
        iterations,
        converged,
    )
}
