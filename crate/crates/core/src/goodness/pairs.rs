use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::matrix::{random_orthonormal, svd, DenseMatrix};
use crate::operator::{LinearTransformation, NullSpaceBasis};
use crate::seed::derive;

/// Orthonormal factor pair `(U, V)` with `r = min(m, n)` columns each.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl FactorPair {
    /// SVD factors of `x`, with the columns that belong to zero singular
    /// values rotated by a random orthogonal matrix.
    pub fn of_matrix<R: Rng + ?Sized>(x: &DenseMatrix, rng: &mut R) -> Result<Self> {
        let f = svd(x)?;
        let r = f.sigma.len();
        let k = f.rank();
        let (mut u, mut v) = (f.u, f.v);
        if k < r {
            let rot = random_orthonormal(r - k, r - k, rng);
            rotate_tail(&mut u, k, &rot);
            rotate_tail(&mut v, k, &rot);
        }
        Ok(Self { u, v })
    }

    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        let r = m.min(n);
        Self {
            u: random_orthonormal(m, r, rng),
            v: random_orthonormal(n, r, rng),
        }
    }
}

fn rotate_tail(q: &mut DenseMatrix, k: usize, rot: &DenseMatrix) {
    let rows = q.rows();
    let width = rot.rows();
    let tail = q.submatrix(0..rows, k..k + width);
    let turned = tail.matmul(rot);
    for j in 0..width {
        q.set_column(k + j, &turned.column(j));
    }
}

/// Random element of the null space with standard Gaussian coordinates.
pub fn random_null_element<R: Rng + ?Sized>(ns: &NullSpaceBasis, rng: &mut R) -> DenseMatrix {
    let coeffs: Vec<f64> = (0..ns.dim).map(|_| rng.sample(StandardNormal)).collect();
    ns.combine(&coeffs)
}

/// `count` factor pairs drawn from SVDs of random null-space elements (Haar
/// pairs when the null space is trivial). Pair `k` depends only on
/// `(seed, k)`.
pub fn sample_factor_pairs(
    op: &LinearTransformation,
    ns: &NullSpaceBasis,
    count: usize,
    seed: u64,
) -> Result<Vec<FactorPair>> {
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[k as u64]));
            if ns.dim == 0 {
                Ok(FactorPair::random(op.m(), op.n(), &mut rng))
            } else {
                FactorPair::of_matrix(&random_null_element(ns, &mut rng), &mut rng)
            }
        })
        .collect()
}
