use super::DenseMatrix;

/// Full Householder QR of an `m × k` matrix: returns `(Q, R)` with `Q`
/// orthogonal `m × m` and `R` upper trapezoidal `m × k`.
pub fn householder_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, k) = a.shape();
    let mut r = a.clone();
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(k.min(m));

    for j in 0..k.min(m) {
        let mut x: Vec<f64> = (j..m).map(|i| r[(i, j)]).collect();
        let alpha = super::norm2(&x);
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        x[0] += sign * alpha;
        let vnorm = super::norm2(&x);
        if vnorm == 0.0 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= vnorm);
        // R <- (I - 2vvᵀ) R on rows j..m
        for c in j..k {
            let proj: f64 = (j..m).map(|i| x[i - j] * r[(i, c)]).sum();
            for i in j..m {
                r[(i, c)] -= 2.0 * x[i - j] * proj;
            }
        }
        for i in (j + 1)..m {
            r[(i, j)] = 0.0;
        }
        reflectors.push((j, x));
    }

    // Q = H_0 H_1 ... applied to the identity from the right-most reflector.
    let mut q = DenseMatrix::identity(m);
    for (j, v) in reflectors.iter().rev() {
        for c in 0..m {
            let proj: f64 = (*j..m).map(|i| v[i - j] * q[(i, c)]).sum();
            if proj == 0.0 {
                continue;
            }
            for i in *j..m {
                q[(i, c)] -= 2.0 * v[i - j] * proj;
            }
        }
    }
    (q, r)
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `basis` (assumed to have full column rank), as an `m × (m − k)` matrix.
pub fn orthonormal_complement(basis: &DenseMatrix) -> DenseMatrix {
    let (m, k) = basis.shape();
    let (q, _) = householder_qr(basis);
    q.submatrix(0..m, k.min(m)..m)
}
