use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::matrix::{svd, DenseMatrix, RANK_REL_TOL};
use crate::operator::LinearTransformation;

/// Relative residual below which the tangent-space system counts as solved.
const SOLVE_TOL: f64 = 1e-8;

/// Dual certificate `A*(y) = U_s V_sᵀ + M` with `M` supported on the
/// orthogonal complement of the tangent space at `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgradientCertificate {
    pub y: Vec<f64>,
    /// `true` when the tangent equations hold and `‖M‖ < 1`.
    pub valid: bool,
    /// Spectral norm of `M`.
    pub gamma_observed: f64,
    /// `‖P_T(A*(y)) − U_s V_sᵀ‖_F`.
    pub tangent_residual: f64,
    pub rank: usize,
    pub diagnostic: Option<String>,
}

struct Tangent {
    pu: DenseMatrix,
    pv: DenseMatrix,
}

impl Tangent {
    /// `P_U Z + Z P_V − P_U Z P_V`.
    fn project(&self, z: &DenseMatrix) -> DenseMatrix {
        let uz = self.pu.matmul(z);
        let zv = z.matmul(&self.pv);
        let uzv = uz.matmul(&self.pv);
        uz.add(&zv).sub(&uzv)
    }
}

/// Minimum-norm least-squares search for `y` with `P_T(A*(y)) = U_s V_sᵀ`,
/// followed by a spectral check on the orthogonal part.
pub fn subgradient_certificate(
    op: &LinearTransformation,
    w: &DenseMatrix,
) -> Result<SubgradientCertificate> {
    if w.shape() != (op.m(), op.n()) {
        return arg(format!(
            "matrix is {}x{}, operator acts on {}x{}",
            w.rows(),
            w.cols(),
            op.m(),
            op.n()
        ));
    }
    let f = svd(w)?;
    let s = f.rank();
    if s == 0 {
        return arg("certificate requires a nonzero matrix");
    }
    let us = f.u.leading_columns(s);
    let vs = f.v.leading_columns(s);
    let target = us.matmul(&vs.transpose());
    let tangent = Tangent {
        pu: us.matmul(&us.transpose()),
        pv: vs.matmul(&vs.transpose()),
    };
    let p = op.p();
    let (m, n) = (op.m(), op.n());

    if p == 0 {
        return Ok(SubgradientCertificate {
            y: Vec::new(),
            valid: false,
            gamma_observed: 0.0,
            tangent_residual: target.frobenius_norm(),
            rank: s,
            diagnostic: Some("no measurements: the tangent system has no solution".into()),
        });
    }

    let columns: Vec<Vec<f64>> = op
        .frames()
        .iter()
        .map(|a| tangent.project(a).into_vec())
        .collect();
    let g = DenseMatrix::from_columns(m * n, &columns);
    let gf = svd(&g)?;
    let top = gf.sigma.first().copied().unwrap_or(0.0);
    let k = gf
        .sigma
        .iter()
        .take_while(|&&v| top > 0.0 && v > RANK_REL_TOL * top)
        .count();
    let mut y = vec![0.0; p];
    if k > 0 {
        let coords = gf.u.leading_columns(k).t_matvec(target.as_slice());
        let scaled: Vec<f64> = coords.iter().zip(&gf.sigma).map(|(c, sv)| c / sv).collect();
        y = gf.v.leading_columns(k).matvec(&scaled);
    }

    let dual = op.adjoint(&y)?;
    let tangent_part = tangent.project(&dual);
    let tangent_residual = tangent_part.sub(&target).frobenius_norm();
    let orthogonal = dual.sub(&tangent_part);
    let gamma_observed = svd(&orthogonal)?.sigma.first().copied().unwrap_or(0.0);
    let solved = tangent_residual <= SOLVE_TOL * (s as f64).sqrt().max(1.0);
    let valid = solved && gamma_observed < 1.0;
    let diagnostic = if !solved {
        Some(format!(
            "tangent system not solvable (residual {tangent_residual:e})"
        ))
    } else if !valid {
        Some(format!(
            "orthogonal part has spectral norm {gamma_observed} >= 1"
        ))
    } else {
        None
    };
    Ok(SubgradientCertificate {
        y,
        valid,
        gamma_observed,
        tangent_residual,
        rank: s,
        diagnostic,
    })
}
