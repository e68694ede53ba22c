#![allow(dead_code)]

use lmr_core::matrix::{random_orthonormal, svd};
use lmr_core::{DenseMatrix, LinearTransformation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(m: usize, n: usize, p: usize, seed: u64) -> LinearTransformation {
    LinearTransformation::gaussian(m, n, p, &mut rng(seed))
}

/// Operator on 2×2 matrices whose null space is spanned by Diag(1, −1).
pub fn diag_null() -> LinearTransformation {
    let d = DenseMatrix::from_diag(2, 2, &[1.0, -1.0]);
    LinearTransformation::with_null_space(2, 2, &[d]).unwrap()
}

/// Extreme point `U_s V_sᵀ` of `P_s` with Haar factors.
pub fn random_p_s(m: usize, n: usize, s: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let u = random_orthonormal(m, s, &mut r);
    let v = random_orthonormal(n, s, &mut r);
    u.matmul(&v.transpose())
}

/// Vertex enumeration for `max {tᵀx : ‖x‖₁ ≤ 1, A x = 0}`: every vertex of
/// the feasible polytope solves `A_S x_S = 0, σ_Sᵀ x_S = 1` uniquely for a
/// sign pattern σ with support S, with signs matching σ.
pub fn vertex_enumeration(a: &DenseMatrix, t: &[f64]) -> f64 {
    let (p, r) = a.shape();
    let mut best: f64 = 0.0;
    let total = 3usize.pow(r as u32);
    for code in 0..total {
        let mut c = code;
        let sigma: Vec<i32> = (0..r)
            .map(|_| {
                let d = (c % 3) as i32 - 1;
                c /= 3;
                d
            })
            .collect();
        let support: Vec<usize> = (0..r).filter(|&j| sigma[j] != 0).collect();
        let k = support.len();
        if k == 0 {
            continue;
        }
        let mut rows: Vec<Vec<f64>> = (0..p)
            .map(|i| support.iter().map(|&j| a[(i, j)]).collect())
            .collect();
        rows.push(support.iter().map(|&j| sigma[j] as f64).collect());
        let mut rhs = vec![0.0; p];
        rhs.push(1.0);
        let sys = DenseMatrix::from_rows(&rows).unwrap();
        let f = svd(&sys).unwrap();
        let top = f.sigma.first().copied().unwrap_or(0.0);
        let rank = f.sigma.iter().filter(|&&v| v > 1e-10 * top).count();
        if rank < k {
            continue;
        }
        let coords = f.u.leading_columns(k).t_matvec(&rhs);
        let scaled: Vec<f64> = coords.iter().zip(&f.sigma).map(|(c, s)| c / s).collect();
        let xs = f.v.leading_columns(k).matvec(&scaled);
        let resid = sys.matvec(&xs);
        if resid.iter().zip(&rhs).any(|(a, b)| (a - b).abs() > 1e-9) {
            continue;
        }
        if support
            .iter()
            .zip(&xs)
            .any(|(&j, &x)| sigma[j] as f64 * x < -1e-12)
        {
            continue;
        }
        let value: f64 = support.iter().zip(&xs).map(|(&j, &x)| t[j] * x).sum();
        best = best.max(value);
    }
    best
}
