use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Result};
use crate::matrix::{orthonormal_complement, random_orthonormal, svd, DenseMatrix, RANK_REL_TOL};
use crate::seed::derive;

/// Relative size of the off-diagonal blocks accepted as zero.
pub const BLOCK_TOL: f64 = 1e-8;
/// Random rotations of a tie group that straddles the split.
pub const BLOCK_RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub holds: bool,
    /// Frobenius norm of the off-diagonal blocks for the best pair tried.
    pub off_diagonal: f64,
    pub pairs_tried: usize,
    pub x1: Option<DenseMatrix>,
    pub x2: Option<DenseMatrix>,
    /// `U · [[X₁, 0], [0, 0]] · Vᵀ`.
    pub x_s: Option<DenseMatrix>,
}

fn complete(q: &DenseMatrix) -> DenseMatrix {
    let rows = q.rows();
    let c = orthonormal_complement(q);
    let mut cols: Vec<Vec<f64>> = (0..q.cols()).map(|j| q.column(j)).collect();
    cols.extend((0..c.cols()).map(|j| c.column(j)));
    DenseMatrix::from_columns(rows, &cols)
}

fn rotate_block(q: &mut DenseMatrix, lo: usize, rot: &DenseMatrix) {
    let rows = q.rows();
    let width = rot.rows();
    let turned = q.submatrix(0..rows, lo..lo + width).matmul(rot);
    for j in 0..width {
        q.set_column(lo + j, &turned.column(j));
    }
}

struct Split {
    off: f64,
    x1: DenseMatrix,
    x2: DenseMatrix,
    u: DenseMatrix,
    v: DenseMatrix,
}

fn split(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix, s: usize) -> Split {
    let (m, n) = x.shape();
    let c = u.t_matmul(&x.matmul(v));
    let x3 = c.submatrix(0..s, s..n);
    let x4 = c.submatrix(s..m, 0..s);
    let off = (x3.frobenius_norm().powi(2) + x4.frobenius_norm().powi(2)).sqrt();
    Split {
        off,
        x1: c.submatrix(0..s, 0..s),
        x2: c.submatrix(s..m, s..n),
        u: u.clone(),
        v: v.clone(),
    }
}

/// Tests whether `UᵀXV` is block diagonal with an `s × s` leading block for
/// some factor pair `(U, V)` of `W`. Tried pairs: the SVD factors of `W`
/// (completed to square orthogonal matrices), the pair whose zero-σ part is
/// aligned with `X`, and random rotations of a group of equal singular
/// values that straddles position `s`.
pub fn block_assumption_check(
    x: &DenseMatrix,
    w: &DenseMatrix,
    s: usize,
    seed: u64,
) -> Result<BlockCheck> {
    let (m, n) = w.shape();
    if x.shape() != (m, n) {
        return arg(format!("X is {}x{}, W is {m}x{n}", x.rows(), x.cols()));
    }
    if w.max_abs() == 0.0 {
        return arg("W must be nonzero");
    }
    let r = m.min(n);
    if s == 0 || s > r {
        return arg(format!("s = {s} outside 1..={r}"));
    }
    let f = svd(w)?;
    let k = f.rank();
    let u0 = complete(&f.u);
    let v0 = complete(&f.v);
    let mut candidates = vec![(u0.clone(), v0.clone())];

    // Zero singular values leave the trailing columns free; align them with
    // the SVD of the corresponding block of X.
    if k < m.max(n) {
        let tail = u0
            .submatrix(0..m, k..m)
            .t_matmul(&x.matmul(&v0.submatrix(0..n, k..n)));
        if tail.rows() > 0 && tail.cols() > 0 {
            let g = svd(&tail)?;
            let (mut u1, mut v1) = (u0.clone(), v0.clone());
            let uq = complete(&g.u);
            let vq = complete(&g.v);
            rotate_block(&mut u1, k, &uq);
            rotate_block(&mut v1, k, &vq);
            candidates.push((u1, v1));
        }
    }

    // Equal nonzero singular values around the split admit joint rotations.
    let top = f.sigma[0];
    let tied = |a: f64, b: f64| (a - b).abs() <= RANK_REL_TOL * top;
    if s < k && tied(f.sigma[s - 1], f.sigma[s]) {
        let mut lo = s - 1;
        while lo > 0 && tied(f.sigma[lo - 1], f.sigma[s]) {
            lo -= 1;
        }
        let mut hi = s + 1;
        while hi < k && tied(f.sigma[hi], f.sigma[s]) {
            hi += 1;
        }
        for t in 0..BLOCK_RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[t as u64]));
            let rot = random_orthonormal(hi - lo, hi - lo, &mut rng);
            let (mut u1, mut v1) = (u0.clone(), v0.clone());
            rotate_block(&mut u1, lo, &rot);
            rotate_block(&mut v1, lo, &rot);
            candidates.push((u1, v1));
        }
    }

    let tol = BLOCK_TOL * x.frobenius_norm();
    let pairs_tried = candidates.len();
    let best = candidates
        .iter()
        .map(|(u, v)| split(x, u, v, s))
        .min_by(|a, b| a.off.total_cmp(&b.off))
        .expect("at least one candidate");
    let holds = best.off <= tol;
    let x_s = holds.then(|| {
        let mut c = DenseMatrix::zeros(m, n);
        for i in 0..s {
            for j in 0..s {
                c[(i, j)] = best.x1[(i, j)];
            }
        }
        best.u.matmul(&c).matmul(&best.v.transpose())
    });
    Ok(BlockCheck {
        holds,
        off_diagonal: best.off,
        pairs_tried,
        x1: holds.then(|| best.x1.clone()),
        x2: holds.then(|| best.x2.clone()),
        x_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_s_rank;

    #[test]
    fn matrix_against_itself() {
        let w = random_s_rank(4, 3, 2, 3).unwrap();
        let c = block_assumption_check(&w, &w, 2, 0).unwrap();
        assert!(c.holds);
        let sigma = svd(&w).unwrap().sigma;
        let x1 = c.x1.unwrap();
        assert!(x1.sub(&DenseMatrix::from_diag(2, 2, &sigma[..2])).max_abs() < 1e-10);
        assert!(c.x2.unwrap().max_abs() < 1e-10);
        assert!(c.x_s.unwrap().sub(&w).max_abs() < 1e-10);
    }

    #[test]
    fn constructed_blocks_pass_and_injected_block_fails() {
        let w = random_s_rank(3, 3, 1, 4).unwrap();
        let f = svd(&w).unwrap();
        let (u, v) = (complete(&f.u), complete(&f.v));
        let mut c = DenseMatrix::zeros(3, 3);
        c[(0, 0)] = 2.0;
        c[(1, 1)] = 0.5;
        c[(1, 2)] = -0.3;
        c[(2, 2)] = 0.7;
        let x = u.matmul(&c).matmul(&v.transpose());
        assert!(block_assumption_check(&x, &w, 1, 0).unwrap().holds);
        c[(0, 2)] = 0.4;
        let bad = u.matmul(&c).matmul(&v.transpose());
        let chk = block_assumption_check(&bad, &w, 1, 0).unwrap();
        assert!(!chk.holds);
        assert!(chk.x_s.is_none());
    }

    #[test]
    fn zero_matrix_rejected() {
        let z = DenseMatrix::zeros(2, 2);
        assert!(block_assumption_check(&z, &z, 1, 0).is_err());
    }

    #[test]
    fn tied_singular_values_are_searched() {
        // W = I₂ has a tie across the split, so X = Diag(1, 2) in a rotated
        // frame still satisfies the assumption for some factor pair.
        let w = DenseMatrix::identity(2);
        let q = random_orthonormal(2, 2, &mut ChaCha8Rng::seed_from_u64(6));
        let x = q
            .matmul(&DenseMatrix::from_diag(2, 2, &[1.0, 2.0]))
            .matmul(&q.transpose());
        let chk = block_assumption_check(&x, &w, 1, 0).unwrap();
        assert!(chk.pairs_tried > 1);
        assert!(chk.off_diagonal < x.frobenius_norm());
    }
}
