//! Sampled upper estimates `Γ_1` and `Γ_s` built from per-pair Chebyshev
//! problems `Υ_i = min {‖e_i − Aᵀy‖_∞ : ‖y‖_d ≤ β}`.

use rayon::prelude::*;

use super::lower::check_order;
use super::pairs::FactorPair;
use crate::error::{arg, Error, Result};
use crate::matrix::{cholesky_solve, dot, s_largest_abs_sum, DenseMatrix};
use crate::measure::{Beta, MeasurementNorm};
use crate::operator::LinearTransformation;
use crate::solver::{lp_solve, LpProblem, LpStatus, VarDomain};

/// Duality gap at which the barrier method for the ℓ2 dual ball stops.
pub const BARRIER_GAP: f64 = 1e-10;
const BARRIER_GROWTH: f64 = 20.0;
const BARRIER_NEWTON_ITERS: usize = 100;
const BARRIER_NEWTON_TOL: f64 = 1e-14;
/// Projected subgradient iterations for the direct `Γ_s` estimate.
pub const GAMMA_S_ITERS: usize = 200;
const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonSolution {
    pub value: f64,
    pub y: Vec<f64>,
}

fn chebyshev_value(a: &DenseMatrix, i: usize, y: &[f64]) -> f64 {
    let aty = a.t_matvec(y);
    aty.iter()
        .enumerate()
        .map(|(k, v)| ((if k == i { 1.0 } else { 0.0 }) - v).abs())
        .fold(0.0, f64::max)
}

/// `Υ_i` on the representation `a` (`p × r`) with multipliers bounded by
/// `‖y‖_d ≤ β`, where `dual` is the dual of the measurement norm.
pub fn upsilon(
    a: &DenseMatrix,
    i: usize,
    beta: Beta,
    dual: MeasurementNorm,
) -> Result<UpsilonSolution> {
    let (p, r) = a.shape();
    if i >= r {
        return arg(format!("index {i} outside 0..{r}"));
    }
    if p == 0 || beta == Beta::Finite(0.0) {
        return Ok(UpsilonSolution {
            value: 1.0,
            y: vec![0.0; p],
        });
    }
    let aux = matches!((beta, dual), (Beta::Finite(_), MeasurementNorm::L1));
    let nvar = p + 1 + if aux { p } else { 0 };
    let tau = p;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for k in 0..r {
        let e = if k == i { 1.0 } else { 0.0 };
        let mut lo = vec![0.0; nvar];
        let mut hi = vec![0.0; nvar];
        for j in 0..p {
            lo[j] = -a[(j, k)];
            hi[j] = a[(j, k)];
        }
        lo[tau] = -1.0;
        hi[tau] = -1.0;
        rows.push(lo);
        rhs.push(-e);
        rows.push(hi);
        rhs.push(e);
    }
    if let Beta::Finite(b) = beta {
        match dual {
            MeasurementNorm::Linf | MeasurementNorm::L2 => {
                for j in 0..p {
                    let mut up = vec![0.0; nvar];
                    up[j] = 1.0;
                    rows.push(up);
                    rhs.push(b);
                    let mut down = vec![0.0; nvar];
                    down[j] = -1.0;
                    rows.push(down);
                    rhs.push(b);
                }
            }
            MeasurementNorm::L1 => {
                for j in 0..p {
                    let mut up = vec![0.0; nvar];
                    up[j] = 1.0;
                    up[p + 1 + j] = -1.0;
                    rows.push(up);
                    rhs.push(0.0);
                    let mut down = vec![0.0; nvar];
                    down[j] = -1.0;
                    down[p + 1 + j] = -1.0;
                    rows.push(down);
                    rhs.push(0.0);
                }
                let mut total = vec![0.0; nvar];
                total[p + 1..].iter_mut().for_each(|v| *v = 1.0);
                rows.push(total);
                rhs.push(b);
            }
        }
    }
    let mut objective = vec![0.0; nvar];
    objective[tau] = -1.0;

    let solve = |rows: &[Vec<f64>], rhs: &[f64]| -> Result<(Vec<f64>, f64)> {
        let g = DenseMatrix::from_rows(rows)?;
        let prob = LpProblem::maximize(objective.clone(), VarDomain::Free).with_ub(g, rhs.to_vec());
        let sol = lp_solve(&prob)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Lp(format!(
                "Chebyshev program ended with {:?}",
                sol.status
            )));
        }
        Ok((sol.x[..p].to_vec(), -sol.value))
    };

    if matches!((beta, dual), (Beta::Finite(_), MeasurementNorm::L2)) {
        return Ok(upsilon_l2_ball(a, i, beta.value()));
    }
    let (y, _) = solve(&rows, &rhs)?;
    Ok(UpsilonSolution {
        value: chebyshev_value(a, i, &y),
        y,
    })
}

/// Log-barrier interior point method for `Υ_i` with `‖y‖₂ ≤ β`, `β > 0`, in
/// the variables `(y, τ)`. Iterates stay strictly feasible, so the returned
/// value is attained by the returned `y`.
fn upsilon_l2_ball(a: &DenseMatrix, i: usize, beta: f64) -> UpsilonSolution {
    let (p, r) = a.shape();
    let dimz = p + 1;
    let constraints = (2 * r + 1) as f64;
    let cols: Vec<Vec<f64>> = (0..r).map(|k| a.column(k)).collect();
    let delta = |k: usize| if k == i { 1.0 } else { 0.0 };
    // Slacks of τ ≥ |δ_k − a_kᵀy| and β² ≥ ‖y‖².
    let slacks = |z: &[f64]| -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let (y, tau) = (&z[..p], z[p]);
        let mut plus = Vec::with_capacity(r);
        let mut minus = Vec::with_capacity(r);
        for k in 0..r {
            let res = delta(k) - dot(&cols[k], y);
            let (sp, sm) = (tau - res, tau + res);
            if sp <= 0.0 || sm <= 0.0 {
                return None;
            }
            plus.push(sp);
            minus.push(sm);
        }
        let sb = beta * beta - dot(y, y);
        (sb > 0.0).then_some((plus, minus, sb))
    };
    let barrier = |z: &[f64], t: f64| -> Option<f64> {
        let (plus, minus, sb) = slacks(z)?;
        let logs: f64 = plus.iter().chain(&minus).map(|v| v.ln()).sum::<f64>() + sb.ln();
        Some(t * z[p] - logs)
    };

    let mut z = vec![0.0; dimz];
    z[p] = 2.0;
    let mut t = 1.0;
    loop {
        for _ in 0..BARRIER_NEWTON_ITERS {
            let (plus, minus, sb) = slacks(&z).expect("iterate stays interior");
            let y = &z[..p];
            let mut g = vec![0.0; dimz];
            let mut h = DenseMatrix::zeros(dimz, dimz);
            g[p] = t;
            for k in 0..r {
                let (ip, im) = (1.0 / plus[k], 1.0 / minus[k]);
                // ∇s⁺ = (a_k, 1), ∇s⁻ = (−a_k, 1).
                for u in 0..p {
                    g[u] += (-ip + im) * cols[k][u];
                }
                g[p] -= ip + im;
                let (wp, wm) = (ip * ip, im * im);
                for u in 0..p {
                    let au = cols[k][u];
                    for v in 0..=u {
                        h[(u, v)] += (wp + wm) * au * cols[k][v];
                    }
                    h[(p, u)] += (wp - wm) * au;
                }
                h[(p, p)] += wp + wm;
            }
            let ib = 1.0 / sb;
            for u in 0..p {
                g[u] += 2.0 * y[u] * ib;
                for v in 0..=u {
                    h[(u, v)] += 4.0 * y[u] * y[v] * ib * ib;
                }
                h[(u, u)] += 2.0 * ib;
            }
            for u in 0..dimz {
                for v in 0..u {
                    h[(v, u)] = h[(u, v)];
                }
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(dz) = cholesky_solve(&h, &neg) else {
                break;
            };
            let decrement = -dot(&g, &dz);
            if decrement <= 2.0 * BARRIER_NEWTON_TOL {
                break;
            }
            let f0 = barrier(&z, t).expect("iterate stays interior");
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + step * b).collect();
                if let Some(f) = barrier(&trial, t) {
                    if f <= f0 - 0.25 * step * decrement {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if constraints / t <= BARRIER_GAP {
            break;
        }
        t *= BARRIER_GROWTH;
    }
    let y = z[..p].to_vec();
    UpsilonSolution {
        value: chebyshev_value(a, i, &y),
        y,
    }
}

/// Per-pair results: `Γ_1` and the multiplier matrix `B` with columns
/// `y_1..y_r` from the `Υ_i` problems.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGamma1 {
    pub gamma1: f64,
    pub b: DenseMatrix,
}

pub fn gamma1_for_pair(
    op: &LinearTransformation,
    pair: &FactorPair,
    beta: Beta,
) -> Result<PairGamma1> {
    let rep = op.restrict(&pair.u, &pair.v)?;
    let dual = op.norm().dual();
    let r = rep.a.cols();
    let mut cols = Vec::with_capacity(r);
    let mut gamma1: f64 = 0.0;
    for i in 0..r {
        let ups = upsilon(&rep.a, i, beta, dual)?;
        gamma1 = gamma1.max(ups.value);
        cols.push(ups.y);
    }
    Ok(PairGamma1 {
        gamma1,
        b: DenseMatrix::from_columns(op.p(), &cols),
    })
}

/// `f_s(B) = max_i ‖(I − BᵀA) e_i‖_{s,1}`.
pub fn f_s(a: &DenseMatrix, b: &DenseMatrix, s: usize) -> Result<f64> {
    let r = a.cols();
    let m = DenseMatrix::identity(r).sub(&b.t_matmul(a));
    let mut worst: f64 = 0.0;
    for i in 0..r {
        worst = worst.max(s_largest_abs_sum(&m.column(i), s)?);
    }
    Ok(worst)
}

fn project_columns(b: &mut DenseMatrix, beta: Beta, dual: MeasurementNorm) {
    if let Beta::Finite(radius) = beta {
        for j in 0..b.cols() {
            let col = dual.project_ball(&b.column(j), radius);
            b.set_column(j, &col);
        }
    }
}

/// Projected subgradient descent on `f_s` from `b0`; returns the best value
/// seen (never above `f_s(b0)`).
pub fn descend_f_s(
    a: &DenseMatrix,
    b0: &DenseMatrix,
    s: usize,
    beta: Beta,
    dual: MeasurementNorm,
    iters: usize,
) -> Result<f64> {
    let r = a.cols();
    let mut b = b0.clone();
    let f0 = f_s(a, &b, s)?;
    let mut best = f0;
    if a.rows() == 0 || f0 == 0.0 {
        return Ok(best);
    }
    for k in 0..iters {
        let m = DenseMatrix::identity(r).sub(&b.t_matmul(a));
        let vals: Vec<f64> = (0..r)
            .map(|i| s_largest_abs_sum(&m.column(i), s))
            .collect::<Result<_>>()?;
        let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let active: Vec<usize> = (0..r)
            .filter(|&i| vals[i] >= worst - ACTIVE_TOL * worst.max(1.0))
            .collect();
        // Mean of the subgradients of the active columns.
        let weight = 1.0 / active.len() as f64;
        let mut g = DenseMatrix::zeros(a.rows(), r);
        for &i in &active {
            let col = m.column(i);
            let mut order: Vec<usize> = (0..r).collect();
            order.sort_by(|&x, &y| col[y].abs().total_cmp(&col[x].abs()).then(x.cmp(&y)));
            let ai = a.column(i);
            for &j in order.iter().take(s) {
                let sign = if col[j] < 0.0 { -1.0 } else { 1.0 };
                for (row, &v) in ai.iter().enumerate() {
                    g[(row, j)] -= weight * sign * v;
                }
            }
        }
        let gn = g.frobenius_norm();
        if gn == 0.0 {
            break;
        }
        let step = 0.5 * f0 / (gn * ((k + 1) as f64).sqrt());
        b = b.axpby(1.0, &g, -step);
        project_columns(&mut b, beta, dual);
        best = best.min(f_s(a, &b, s)?);
    }
    Ok(best)
}

/// Per-pair estimates `Γ_s` for `s = 1..=max_s`.
pub fn gamma_profile_for_pair(
    op: &LinearTransformation,
    pair: &FactorPair,
    beta: Beta,
    max_s: usize,
) -> Result<Vec<f64>> {
    let g1 = gamma1_for_pair(op, pair, beta)?;
    let rep = op.restrict(&pair.u, &pair.v)?;
    let dual = op.norm().dual();
    let mut out = vec![g1.gamma1];
    for s in 2..=max_s {
        let v = descend_f_s(&rep.a, &g1.b, s, beta, dual, GAMMA_S_ITERS)?;
        out.push(v.min(s as f64 * g1.gamma1));
    }
    Ok(out)
}

/// `Γ_1` estimate: the largest per-pair `max_i Υ_i` over the sampled pairs.
pub fn upper_bound_gamma1(
    op: &LinearTransformation,
    beta: Beta,
    pairs: &[FactorPair],
) -> Result<f64> {
    if pairs.is_empty() {
        return arg("at least one factor pair is required");
    }
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|pair| Ok(gamma1_for_pair(op, pair, beta)?.gamma1))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `Γ_s` estimate: per pair the smaller of `s·Γ_1` and a descent on `f_s`,
/// then the largest over pairs.
pub fn upper_bound_gammas(
    op: &LinearTransformation,
    s: usize,
    beta: Beta,
    pairs: &[FactorPair],
) -> Result<f64> {
    check_order(op, s)?;
    if pairs.is_empty() {
        return arg("at least one factor pair is required");
    }
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|pair| Ok(gamma_profile_for_pair(op, pair, beta, s)?[s - 1]))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}
