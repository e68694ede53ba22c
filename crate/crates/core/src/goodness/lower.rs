//! Lower bounds on γ̂_s from feasible points of the null-space program.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairs::{random_null_element, FactorPair};
use crate::error::{arg, Result};
use crate::matrix::{norm2, s_largest_abs_sum, svd, DenseMatrix};
use crate::operator::{LinearTransformation, NullSpaceBasis};
use crate::seed::derive;
use crate::solver::max_over_restricted_null;

/// Largest `‖A(U·Diag(x)·Vᵀ)‖₂` accepted for a lower-bound witness.
pub const WITNESS_TOL: f64 = 1e-8;
pub const ASCENT_MAX_ITER: usize = 100;
pub const ASCENT_TOL: f64 = 1e-8;

const RATIO_MAX_ITER: usize = 200;
const RATIO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpLowerBound {
    pub x_t: Vec<f64>,
    /// `max_{v ∈ Δ_s} vᵀx_t` when the lifted point passes the null-space
    /// check, otherwise 0.
    pub bound: f64,
    pub accepted: bool,
    pub lift_residual: f64,
}

/// One ascent run: the iterates `t_k` and the bound after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentRun {
    pub restart: usize,
    pub t: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub best_bound: f64,
    pub witness: Option<DenseMatrix>,
    pub witness_pair: Option<FactorPair>,
    pub runs: Vec<AscentRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullAscentResult {
    pub value: f64,
    pub witness: Option<DenseMatrix>,
    pub witness_pair: Option<FactorPair>,
}

pub(crate) fn check_order(op: &LinearTransformation, s: usize) -> Result<()> {
    if s == 0 || s > op.r() {
        return arg(format!("s = {s} outside 1..={}", op.r()));
    }
    Ok(())
}

/// `t ∈ Δ_s = {‖t‖₁ ≤ s, ‖t‖_∞ ≤ 1}` up to rounding.
pub fn in_delta_s(t: &[f64], s: usize) -> bool {
    let l1: f64 = t.iter().map(|v| v.abs()).sum();
    let linf = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    t.iter().all(|v| v.is_finite()) && l1 <= s as f64 + 1e-12 && linf <= 1.0 + 1e-12
}

/// Sign pattern on the `s` largest magnitudes of `x`, lowest index first
/// among ties.
pub fn top_s_sign_pattern(x: &[f64], s: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let mut t = vec![0.0; x.len()];
    for &i in order.iter().take(s) {
        t[i] = if x[i] < 0.0 { -1.0 } else { 1.0 };
    }
    t
}

fn random_delta_s<R: Rng + ?Sized>(r: usize, s: usize, rng: &mut R) -> Vec<f64> {
    let mut t: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let l1: f64 = t.iter().map(|v| v.abs()).sum();
    if l1 > s as f64 {
        let k = s as f64 / l1;
        t.iter_mut().for_each(|v| *v *= k);
    }
    t
}

fn lp_in_representation(
    op: &LinearTransformation,
    a: &DenseMatrix,
    pair: &FactorPair,
    s: usize,
    t: &[f64],
) -> Result<LpLowerBound> {
    let (x_t, _) = max_over_restricted_null(a, t)?;
    let lifted = DenseMatrix::from_factors(&pair.u, &x_t, &pair.v);
    let lift_residual = norm2(&op.apply(&lifted)?);
    let accepted = lift_residual <= WITNESS_TOL;
    let bound = if accepted {
        s_largest_abs_sum(&x_t, s)?
    } else {
        0.0
    };
    Ok(LpLowerBound {
        x_t,
        bound,
        accepted,
        lift_residual,
    })
}

/// Solves `max {⟨t, x⟩ : ‖x‖₁ ≤ 1, A x = 0}` on the representation of the
/// operator in `pair` and evaluates the implied lower bound on γ̂_s.
pub fn lower_bound_lp(
    op: &LinearTransformation,
    s: usize,
    pair: &FactorPair,
    t: &[f64],
) -> Result<LpLowerBound> {
    check_order(op, s)?;
    if t.len() != op.r() || !in_delta_s(t, s) {
        return arg(format!("t is not a member of Delta_{s} in R^{}", op.r()));
    }
    let rep = op.restrict(&pair.u, &pair.v)?;
    lp_in_representation(op, &rep.a, pair, s, t)
}

struct PairAscent {
    run: AscentRun,
    best: f64,
    best_x: Vec<f64>,
}

/// `t_{k+1} = argmax_{v ∈ Δ_s} vᵀx_{t_k}` within one factor pair.
fn ascend_in_pair(
    op: &LinearTransformation,
    pair: &FactorPair,
    s: usize,
    t1: Vec<f64>,
    restart: usize,
) -> Result<PairAscent> {
    let rep = op.restrict(&pair.u, &pair.v)?;
    let mut t = t1;
    let mut run = AscentRun {
        restart,
        t: Vec::new(),
        values: Vec::new(),
    };
    let mut best = 0.0;
    let mut best_x = vec![0.0; t.len()];
    for _ in 0..ASCENT_MAX_ITER {
        let lp = lp_in_representation(op, &rep.a, pair, s, &t)?;
        let prev = run.values.last().copied();
        let value = prev.map_or(lp.bound, |p| p.max(lp.bound));
        run.t.push(t.clone());
        run.values.push(value);
        if lp.accepted && lp.bound > best {
            best = lp.bound;
            best_x = lp.x_t.clone();
        }
        if prev.is_some_and(|p| value - p < ASCENT_TOL) || !lp.accepted {
            break;
        }
        if lp.x_t.iter().all(|&v| v == 0.0) {
            break;
        }
        t = top_s_sign_pattern(&lp.x_t, s);
    }
    Ok(PairAscent { run, best, best_x })
}

/// Alternating LP ascent from random `t₁ ∈ Δ_s` and random factor pairs of
/// null-space elements; restart `k` depends only on `(seed, k)`.
pub fn lower_bound_ascent(
    op: &LinearTransformation,
    s: usize,
    restarts: usize,
    seed: u64,
) -> Result<AscentResult> {
    check_order(op, s)?;
    if restarts == 0 {
        return arg("restarts must be >= 1");
    }
    let ns = op.null_space_basis()?;
    lower_bound_ascent_with(op, &ns, s, restarts, seed)
}

pub(crate) fn lower_bound_ascent_with(
    op: &LinearTransformation,
    ns: &NullSpaceBasis,
    s: usize,
    restarts: usize,
    seed: u64,
) -> Result<AscentResult> {
    if ns.dim == 0 {
        return Ok(AscentResult {
            best_bound: 0.0,
            witness: None,
            witness_pair: None,
            runs: Vec::new(),
        });
    }
    let results: Vec<(PairAscent, FactorPair)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[k as u64]));
            let pair = FactorPair::of_matrix(&random_null_element(ns, &mut rng), &mut rng)?;
            let t1 = random_delta_s(op.r(), s, &mut rng);
            Ok((ascend_in_pair(op, &pair, s, t1, k)?, pair))
        })
        .collect::<Result<_>>()?;

    let mut out = AscentResult {
        best_bound: 0.0,
        witness: None,
        witness_pair: None,
        runs: Vec::with_capacity(restarts),
    };
    for (asc, pair) in results {
        if asc.best > out.best_bound {
            out.best_bound = asc.best;
            out.witness = Some(DenseMatrix::from_factors(&pair.u, &asc.best_x, &pair.v));
            out.witness_pair = Some(pair);
        }
        out.runs.push(asc.run);
    }
    Ok(out)
}

struct Ratio {
    value: f64,
    grad: Vec<f64>,
}

/// `‖X‖_{s,∗} / ‖X‖_∗` at `X = Σ c_k B_k` and its gradient in `c`.
fn ky_fan_ratio(ns: &NullSpaceBasis, c: &[f64], s: usize) -> Result<Option<Ratio>> {
    let x = ns.combine(c);
    let f = svd(&x)?;
    let k = f.rank();
    if k == 0 {
        return Ok(None);
    }
    let nuc: f64 = f.sigma.iter().sum();
    let ky: f64 = f.sigma[..s].iter().sum();
    let g_ky = f.partial_isometry(s.min(k));
    let g_nuc = f.partial_isometry(k);
    let gx = g_ky.axpby(1.0 / nuc, &g_nuc, -ky / (nuc * nuc));
    Ok(Some(Ratio {
        value: ky / nuc,
        grad: ns.coordinates(&gx),
    }))
}

fn ratio_ascent(ns: &NullSpaceBasis, c0: Vec<f64>, s: usize) -> Result<(f64, Vec<f64>)> {
    let mut c = c0;
    let Some(mut cur) = ky_fan_ratio(ns, &c, s)? else {
        return Ok((0.0, c));
    };
    for _ in 0..RATIO_MAX_ITER {
        let gnorm = norm2(&cur.grad);
        if gnorm == 0.0 {
            break;
        }
        let mut step = 0.5 * norm2(&c) / gnorm;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = c.iter().zip(&cur.grad).map(|(a, g)| a + step * g).collect();
            let scale = norm2(&trial);
            let trial: Vec<f64> = trial.iter().map(|v| v / scale).collect();
            if let Some(next) = ky_fan_ratio(ns, &trial, s)? {
                if next.value > cur.value {
                    let gain = next.value - cur.value;
                    c = trial;
                    cur = next;
                    moved = gain >= RATIO_TOL;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((cur.value, c))
}

/// Maximises `‖X‖_{s,∗}` over `Null(A) ∩ {‖X‖_∗ = 1}` from random starting
/// coordinates by gradient ascent, then polishes each local maximiser with
/// the LP ascent in its own factor pair.
pub fn null_space_ascent(
    op: &LinearTransformation,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<NullAscentResult> {
    check_order(op, s)?;
    let ns = op.null_space_basis()?;
    null_space_ascent_with(op, &ns, s, samples, seed)
}

pub(crate) fn null_space_ascent_with(
    op: &LinearTransformation,
    ns: &NullSpaceBasis,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<NullAscentResult> {
    if ns.dim == 0 || samples == 0 {
        return Ok(NullAscentResult {
            value: 0.0,
            witness: None,
            witness_pair: None,
        });
    }
    let results: Vec<(f64, DenseMatrix, FactorPair)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[k as u64]));
            let c0: Vec<f64> = (0..ns.dim).map(|_| rng.sample(StandardNormal)).collect();
            let (value, c) = ratio_ascent(ns, c0, s)?;
            let x = ns.combine(&c);
            let nuc: f64 = svd(&x)?.sigma.iter().sum();
            let pair = FactorPair::of_matrix(&x, &mut rng)?;
            let mut t1 = vec![0.0; op.r()];
            t1[..s].iter_mut().for_each(|v| *v = 1.0);
            let polish = ascend_in_pair(op, &pair, s, t1, k)?;
            if polish.best > value {
                let w = DenseMatrix::from_factors(&pair.u, &polish.best_x, &pair.v);
                Ok((polish.best, w, pair))
            } else {
                Ok((value, x.scale(1.0 / nuc), pair))
            }
        })
        .collect::<Result<_>>()?;

    let mut out = NullAscentResult {
        value: 0.0,
        witness: None,
        witness_pair: None,
    };
    for (value, w, pair) in results {
        if value > out.value {
            out.value = value;
            out.witness = Some(w);
            out.witness_pair = Some(pair);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{ky_fan_norm, norms};

    fn diag_null_operator() -> LinearTransformation {
        let d = DenseMatrix::from_diag(2, 2, &[1.0, -1.0]);
        LinearTransformation::with_null_space(2, 2, &[d]).unwrap()
    }

    fn identity_pair(r: usize) -> FactorPair {
        FactorPair {
            u: DenseMatrix::identity(r),
            v: DenseMatrix::identity(r),
        }
    }

    #[test]
    fn sign_pattern_ties_prefer_low_index() {
        assert_eq!(
            top_s_sign_pattern(&[0.5, -0.5, 0.2], 1),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(
            top_s_sign_pattern(&[0.1, -0.5, 0.5], 2),
            vec![0.0, -1.0, 1.0]
        );
    }

    #[test]
    fn delta_s_membership() {
        assert!(in_delta_s(&[1.0, 0.0], 1));
        assert!(!in_delta_s(&[1.0, 0.5], 1));
        assert!(!in_delta_s(&[1.5, 0.0], 2));
    }

    #[test]
    fn lp_bound_on_injective_operator_is_zero() {
        let t = LinearTransformation::vectorization(2, 2);
        let lb = lower_bound_lp(&t, 1, &identity_pair(2), &[1.0, 0.0]).unwrap();
        assert_eq!(lb.bound, 0.0);
    }

    #[test]
    fn lp_bound_on_diag_null_space() {
        let t = diag_null_operator();
        let pair = FactorPair {
            u: DenseMatrix::identity(2),
            v: DenseMatrix::from_diag(2, 2, &[1.0, -1.0]),
        };
        let lb = lower_bound_lp(&t, 1, &pair, &[1.0, 0.0]).unwrap();
        assert!(lb.accepted);
        assert!((lb.bound - 0.5).abs() < 1e-12);
        assert!((lb.x_t[0] - 0.5).abs() < 1e-12 && (lb.x_t[1] - 0.5).abs() < 1e-12);
        let zero = lower_bound_lp(&t, 1, &pair, &[0.0, 0.0]).unwrap();
        assert_eq!(zero.bound, 0.0);
    }

    #[test]
    fn lp_bound_rejects_t_outside_delta() {
        let t = diag_null_operator();
        assert!(lower_bound_lp(&t, 1, &identity_pair(2), &[1.0, 1.0]).is_err());
        assert!(lower_bound_lp(&t, 3, &identity_pair(2), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn ascent_examples() {
        let vec_op = LinearTransformation::vectorization(3, 3);
        assert_eq!(
            lower_bound_ascent(&vec_op, 1, 4, 1).unwrap().best_bound,
            0.0
        );
        let r = lower_bound_ascent(&diag_null_operator(), 1, 4, 1).unwrap();
        assert!((r.best_bound - 0.5).abs() < 1e-8);
        let empty = LinearTransformation::new(2, 2, vec![]).unwrap();
        let r = lower_bound_ascent(&empty, 1, 4, 1).unwrap();
        assert!((r.best_bound - 1.0).abs() < 1e-12);
        for run in &r.runs {
            assert!(run.values.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn ascent_witness_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = LinearTransformation::gaussian(4, 4, 10, &mut rng);
        let r = lower_bound_ascent(&t, 2, 6, 3).unwrap();
        let w = r.witness.unwrap();
        assert!(norm2(&t.apply(&w).unwrap()) < 1e-8);
        let n = norms(&w).unwrap();
        assert!(n.nuclear <= 1.0 + 1e-9);
        assert!(ky_fan_norm(&w, 2).unwrap() >= r.best_bound - 1e-9);
    }

    #[test]
    fn null_space_ascent_examples() {
        let vec_op = LinearTransformation::vectorization(2, 2);
        assert_eq!(null_space_ascent(&vec_op, 1, 4, 1).unwrap().value, 0.0);
        let r = null_space_ascent(&diag_null_operator(), 1, 4, 1).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = LinearTransformation::gaussian(3, 3, 5, &mut rng);
        assert!((null_space_ascent(&t, 3, 2, 1).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_ascent_witness_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = LinearTransformation::gaussian(4, 4, 9, &mut rng);
        let r = null_space_ascent(&t, 1, 8, 2).unwrap();
        let w = r.witness.unwrap();
        assert!(norm2(&t.apply(&w).unwrap()) < 1e-8);
        let n = norms(&w).unwrap();
        assert!(n.spectral / n.nuclear >= r.value - 1e-9);
    }
}
