use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{householder_qr, DenseMatrix};
use crate::error::{arg, Result};

/// Distribution of the nonzero singular values of generated test matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularValueDist {
    /// All nonzero singular values equal to one.
    Unit,
    /// Independent uniform draws on `[low, high]`.
    Uniform { low: f64, high: f64 },
}

impl Default for SingularValueDist {
    fn default() -> Self {
        SingularValueDist::Uniform {
            low: 1.0,
            high: 2.0,
        }
    }
}

/// `rows × cols` matrix with i.i.d. `N(0, std²)` entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    std: f64,
    rng: &mut R,
) -> DenseMatrix {
    let entries = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect::<Vec<f64>>();
    DenseMatrix::from_row_major(rows, cols, entries).expect("finite gaussian draws")
}

/// Haar-distributed `m × k` matrix with orthonormal columns (`k ≤ m`).
pub fn random_orthonormal<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> DenseMatrix {
    assert!(k <= m, "cannot fit {k} orthonormal columns in R^{m}");
    let g = gaussian_matrix(m, k, 1.0, rng);
    let (q, r) = householder_qr(&g);
    let mut out = q.leading_columns(k);
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..m {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

/// Random `m × n` matrix of rank exactly `s` (almost surely) with the
/// default singular value distribution.
pub fn random_s_rank(m: usize, n: usize, s: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_s_rank_with(m, n, s, SingularValueDist::default(), &mut rng)
}

pub fn random_s_rank_with<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    s: usize,
    dist: SingularValueDist,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if s == 0 || s > m.min(n) {
        return arg(format!("rank {s} outside 1..={}", m.min(n)));
    }
    let u = random_orthonormal(m, s, rng);
    let v = random_orthonormal(n, s, rng);
    let mut sigma: Vec<f64> = match dist {
        SingularValueDist::Unit => vec![1.0; s],
        SingularValueDist::Uniform { low, high } => {
            if !(low > 0.0 && high >= low) {
                return arg(format!("bad singular value range [{low}, {high}]"));
            }
            (0..s).map(|_| rng.gen_range(low..=high)).collect()
        }
    };
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(DenseMatrix::from_factors(&u, &sigma, &v))
}
