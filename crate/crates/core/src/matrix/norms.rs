use serde::{Deserialize, Serialize};

use super::{svd, DenseMatrix};
use crate::error::{arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub nuclear: f64,
    pub spectral: f64,
    pub frobenius: f64,
}

pub fn norms(x: &DenseMatrix) -> Result<Norms> {
    let f = svd(x)?;
    Ok(Norms {
        nuclear: f.sigma.iter().sum(),
        spectral: f.sigma.first().copied().unwrap_or(0.0),
        frobenius: x.frobenius_norm(),
    })
}

/// Sum of the `s` largest singular values, `1 ≤ s ≤ min(m, n)`.
pub fn ky_fan_norm(x: &DenseMatrix, s: usize) -> Result<f64> {
    let r = x.min_dim();
    if s == 0 || s > r {
        return arg(format!("ky-fan order {s} outside 1..={r}"));
    }
    Ok(svd(x)?.sigma[..s].iter().sum())
}

/// Sum of the `s` largest magnitudes of `x`.
pub fn s_largest_abs_sum(x: &[f64], s: usize) -> Result<f64> {
    if s == 0 || s > x.len() {
        return arg(format!("order {s} outside 1..={}", x.len()));
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags[..s].iter().sum())
}

/// Best rank-`s` approximation in any unitarily invariant norm: the
/// singular values past the `s`-th are zeroed.
pub fn best_s_rank_approx(x: &DenseMatrix, s: usize) -> Result<DenseMatrix> {
    let r = x.min_dim();
    if s > r {
        return arg(format!("rank {s} exceeds min dimension {r}"));
    }
    let f = svd(x)?;
    let truncated: Vec<f64> = f
        .sigma
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < s { v } else { 0.0 })
        .collect();
    Ok(DenseMatrix::from_factors(&f.u, &truncated, &f.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gaussian_matrix, random_orthonormal};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag321() -> DenseMatrix {
        DenseMatrix::from_diag(3, 3, &[3.0, 2.0, 1.0])
    }

    #[test]
    fn diagonal_norms() {
        let n = norms(&diag321()).unwrap();
        assert_eq!(n.nuclear, 6.0);
        assert_eq!(n.spectral, 3.0);
        assert!((n.frobenius - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(ky_fan_norm(&diag321(), 2).unwrap(), 5.0);
        assert_eq!(ky_fan_norm(&diag321(), 1).unwrap(), 3.0);
        assert!(ky_fan_norm(&diag321(), 0).is_err());
        assert!(ky_fan_norm(&diag321(), 4).is_err());
    }

    #[test]
    fn rank_one_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_orthonormal(4, 1, &mut rng);
        let v = random_orthonormal(3, 1, &mut rng);
        let x = u.matmul(&v.transpose());
        let n = norms(&x).unwrap();
        for val in [n.nuclear, n.spectral, n.frobenius] {
            assert!((val - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_matches_sigma_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = gaussian_matrix(5, 3, 1.0, &mut rng);
        let f = svd(&x).unwrap();
        let n = norms(&x).unwrap();
        assert!((n.nuclear - f.sigma.iter().sum::<f64>()).abs() < 1e-10);
        assert!(n.spectral <= n.frobenius && n.frobenius <= n.nuclear);
        assert!((ky_fan_norm(&x, 1).unwrap() - n.spectral).abs() < 1e-15);
        assert!((ky_fan_norm(&x, 3).unwrap() - n.nuclear).abs() < 1e-15);
    }

    #[test]
    fn ky_fan_dominates_sampled_variational_form() {
        // ‖X‖_{s,*} = max over Z ∈ P_s of ⟨Z, X⟩; sampled members of P_s
        // (partial isometries of rank s) never exceed the closed form.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = gaussian_matrix(4, 4, 1.0, &mut rng);
        let closed = ky_fan_norm(&x, 2).unwrap();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let u = random_orthonormal(4, 2, &mut rng);
            let v = random_orthonormal(4, 2, &mut rng);
            let z = u.matmul(&v.transpose());
            best = best.max(z.inner(&x));
        }
        assert!(best <= closed + 1e-12);
        assert!(best >= 0.5 * closed);
        // The maximiser U_2 V_2ᵀ attains it.
        let f = svd(&x).unwrap();
        assert!((f.partial_isometry(2).inner(&x) - closed).abs() < 1e-6);
    }

    #[test]
    fn s_largest() {
        assert_eq!(s_largest_abs_sum(&[1.0, -3.0, 2.0], 2).unwrap(), 5.0);
        assert_eq!(s_largest_abs_sum(&[0.0, 0.0, 0.0], 1).unwrap(), 0.0);
        assert!(s_largest_abs_sum(&[1.0], 2).is_err());
        assert!(s_largest_abs_sum(&[1.0], 0).is_err());
        let x = [0.3, -1.2, 4.0, -0.1];
        let l1: f64 = x.iter().map(|v: &f64| v.abs()).sum();
        assert!((s_largest_abs_sum(&x, 4).unwrap() - l1).abs() < 1e-12);
    }

    #[test]
    fn best_approximation() {
        let d = diag321();
        assert_eq!(
            best_s_rank_approx(&d, 1).unwrap(),
            DenseMatrix::from_diag(3, 3, &[3.0, 0.0, 0.0])
        );
        let tail = d.sub(&best_s_rank_approx(&d, 2).unwrap());
        assert!((norms(&tail).unwrap().nuclear - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = gaussian_matrix(3, 5, 1.0, &mut rng);
        let full = best_s_rank_approx(&x, 3).unwrap();
        assert!(full.sub(&x).frobenius_norm() <= 1e-9 * (1.0 + x.frobenius_norm()));
        assert_eq!(best_s_rank_approx(&x, 0).unwrap(), DenseMatrix::zeros(3, 5));
        assert!(best_s_rank_approx(&x, 4).is_err());
    }

    fn arb_matrix(m: usize, n: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-3.0f64..3.0, m * n)
            .prop_map(move |v| DenseMatrix::from_row_major(m, n, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn von_neumann_trace_inequality(y in arb_matrix(3, 4), z in arb_matrix(3, 4)) {
            let sy = svd(&y).unwrap().sigma;
            let sz = svd(&z).unwrap().sigma;
            let bound: f64 = sy.iter().zip(&sz).map(|(a, b)| a * b).sum();
            prop_assert!(y.inner(&z) <= bound + 1e-9);
        }

        #[test]
        fn ky_fan_submultiplicative(x in arb_matrix(4, 5)) {
            let r = 4;
            for s in 1..=r {
                for t in 1..=r {
                    if s * t <= r {
                        let lhs = ky_fan_norm(&x, s * t).unwrap();
                        let rhs = s as f64 * ky_fan_norm(&x, t).unwrap();
                        prop_assert!(lhs <= rhs + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn nuclear_spectral_duality(x in arb_matrix(3, 3), z in arb_matrix(3, 3)) {
            let nx = norms(&x).unwrap();
            let nz = norms(&z).unwrap();
            prop_assert!(x.inner(&z).abs() <= nx.nuclear * nz.spectral + 1e-9);
            prop_assert!(nx.spectral <= nx.frobenius + 1e-12);
            prop_assert!(nx.frobenius <= nx.nuclear + 1e-12);
        }

        #[test]
        fn svd_is_bit_deterministic(x in arb_matrix(4, 3)) {
            prop_assert_eq!(svd(&x).unwrap(), svd(&x).unwrap());
        }
    }
}
