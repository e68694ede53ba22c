use serde::{Deserialize, Serialize};

use super::{dot, orthonormal_complement, DenseMatrix};
use crate::error::{Error, Result};

/// Maximum number of one-sided Jacobi sweeps.
pub const MAX_SWEEPS: usize = 60;
/// Tolerance on `‖UᵀU − I‖_F` and `‖VᵀV − I‖_F`.
pub const TOL_ORTH: f64 = 1e-9;
/// Tolerance on `‖U Σ Vᵀ − X‖_F / (1 + ‖X‖_F)`.
pub const TOL_RECON: f64 = 1e-9;
/// Singular values below `RANK_REL_TOL · σ₁` count as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Thin singular value decomposition `X = U · Diag(sigma) · Vᵀ` with
/// `r = min(m, n)` columns in `U` and `V` and `sigma` sorted nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// Number of singular values above `RANK_REL_TOL · σ₁`.
    pub fn rank(&self) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.sigma
            .iter()
            .take_while(|&&s| s > RANK_REL_TOL * top)
            .count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::from_factors(&self.u, &self.sigma, &self.v)
    }

    /// `U_k V_kᵀ` for the leading `k` singular pairs.
    pub fn partial_isometry(&self, k: usize) -> DenseMatrix {
        let ones = vec![1.0; k];
        DenseMatrix::from_factors(
            &self.u.leading_columns(k),
            &ones,
            &self.v.leading_columns(k),
        )
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Deterministic: the sign of each singular pair is fixed so that the first
/// entry of every column of `U` whose magnitude exceeds `1e-10` is positive.
/// Columns of `U`/`V` belonging to zero singular values are completed to an
/// orthonormal set by Householder QR.
pub fn svd(x: &DenseMatrix) -> Result<SvdFactors> {
    if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let (m, n) = x.shape();
    if m >= n {
        let (u, sigma, v) = jacobi_tall(x)?;
        Ok(fix_signs(SvdFactors { u, sigma, v }))
    } else {
        let (u, sigma, v) = jacobi_tall(&x.transpose())?;
        Ok(fix_signs(SvdFactors { u: v, sigma, v: u }))
    }
}

/// Jacobi on an `m × n` matrix with `m ≥ n`. Returns `U` (m×n), `σ` (n),
/// `V` (n×n) sorted by decreasing singular value.
fn jacobi_tall(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (m.max(1) as f64);
    // Columns below this norm are numerically zero and left unrotated.
    let floor = 1e-30 * a.frobenius_norm();

    let mut converged = n < 2;
    let mut residual = 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        residual = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || alpha.sqrt() <= floor || beta.sqrt() <= floor {
                    continue;
                }
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            sweeps: MAX_SWEEPS,
            residual,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma: Vec<f64> = order
        .iter()
        .map(|&j| if norms[j] > floor { norms[j] } else { 0.0 })
        .collect();
    let nonzero = sigma.iter().take_while(|&&s| s > 0.0).count();

    let mut u = DenseMatrix::zeros(m, n);
    for (k, &j) in order.iter().take(nonzero).enumerate() {
        let col: Vec<f64> = cols[j].iter().map(|v| v / norms[j]).collect();
        u.set_column(k, &col);
    }
    if nonzero < n {
        let fill = orthonormal_complement(&u.leading_columns(nonzero));
        for k in nonzero..n {
            u.set_column(k, &fill.column(k - nonzero));
        }
    }
    let mut v = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        v.set_column(k, &vcols[j]);
    }
    Ok((u, sigma, v))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

fn fix_signs(mut f: SvdFactors) -> SvdFactors {
    let r = f.sigma.len();
    for k in 0..r {
        let lead = (0..f.u.rows())
            .map(|i| f.u[(i, k)])
            .find(|v| v.abs() > 1e-10);
        if matches!(lead, Some(v) if v < 0.0) {
            for i in 0..f.u.rows() {
                f.u[(i, k)] = -f.u[(i, k)];
            }
            for i in 0..f.v.rows() {
                f.v[(i, k)] = -f.v[(i, k)];
            }
        }
    }
    f
}
