//! Restricted isometry constants and the goodness bounds they imply.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::matrix::{best_s_rank_approx, norm2, random_orthonormal, svd, DenseMatrix};
use crate::operator::LinearTransformation;
use crate::seed::derive;

pub const DEFAULT_RIP_SAMPLES: usize = 10_000;
/// Number of leading samples refined by local ascent, on each side.
pub const REFINE_STARTS: usize = 16;
pub const REFINE_ITERS: usize = 100;
const REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub s: usize,
    /// Largest `|‖A X‖₂² − 1|` found over unit-Frobenius `s`-rank samples.
    pub delta_lower: f64,
    /// Known only when `s = r`.
    #[serde(with = "exact_or_unknown")]
    pub delta_exact: Option<f64>,
    /// `δ_r`, which dominates every `δ_s`.
    pub delta_upper: f64,
    pub samples: usize,
    pub seed: u64,
}

mod exact_or_unknown {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("unknown"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Some(v)),
            Raw::Str(s) if s == "unknown" => Ok(None),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad delta '{s}'"))),
        }
    }
}

/// `δ_r = max(σ_max² − 1, 1 − σ_min²)` over the singular values of the
/// matrix representation (`σ_min = 0` when it has fewer rows than columns).
pub fn rip_exact_full_rank(op: &LinearTransformation) -> Result<f64> {
    let rep = op.matrix_representation();
    let f = svd(&rep)?;
    let mn = op.m() * op.n();
    let smax = f.sigma.first().copied().unwrap_or(0.0);
    let smin = if op.p() < mn {
        0.0
    } else {
        f.sigma.last().copied().unwrap_or(0.0)
    };
    Ok((smax * smax - 1.0).max(1.0 - smin * smin))
}

fn distortion(op: &LinearTransformation, x: &DenseMatrix) -> Result<f64> {
    let ax = op.apply(x)?;
    Ok(ax.iter().map(|v| v * v).sum::<f64>())
}

fn unit(x: DenseMatrix) -> Option<DenseMatrix> {
    let nf = x.frobenius_norm();
    (nf > 0.0).then(|| x.scale(1.0 / nf))
}

/// Local search for extreme `‖A X‖₂²` over unit `s`-rank `X`: power steps
/// for the top, gradient steps for the bottom, each truncated to rank `s`.
fn refine(
    op: &LinearTransformation,
    x0: &DenseMatrix,
    s: usize,
    top: bool,
    lipschitz: f64,
) -> Result<f64> {
    let mut x = x0.clone();
    let mut q = distortion(op, &x)?;
    for _ in 0..REFINE_ITERS {
        let g = op.adjoint(&op.apply(&x)?)?;
        let step = if top {
            g
        } else {
            x.axpby(1.0, &g, -1.0 / lipschitz)
        };
        let Some(next) = unit(best_s_rank_approx(&step, s)?) else {
            break;
        };
        let qn = distortion(op, &next)?;
        let gain = if top { qn - q } else { q - qn };
        if gain <= REFINE_TOL {
            break;
        }
        x = next;
        q = qn;
    }
    Ok(if top { q - 1.0 } else { 1.0 - q })
}

/// Sampled lower estimates of `δ_1..δ_{max_s}` from one shared set of draws.
/// Draw `k` takes Haar factors and a Gaussian weight vector; order `s` uses
/// its first `s` components, so estimates are nondecreasing in `s`.
pub fn rip_sample_profile(
    op: &LinearTransformation,
    max_s: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<RipEstimate>> {
    let r = op.r();
    if max_s == 0 || max_s > r {
        return arg(format!("s = {max_s} outside 1..={r}"));
    }
    let (m, n) = (op.m(), op.n());
    let delta_r = rip_exact_full_rank(op)?;
    let lipschitz = (1.0 + delta_r).max(1e-300);

    // Per sample and order: the distortion and (for the leading draws) the
    // matrix itself for refinement.
    let draws: Vec<(Vec<f64>, Option<Vec<DenseMatrix>>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[k as u64]));
            let u = random_orthonormal(m, r, &mut rng);
            let v = random_orthonormal(n, r, &mut rng);
            let g: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
            let rep = op.restrict(&u, &v)?;
            let mut vals = Vec::with_capacity(max_s);
            let mut mats = (k < REFINE_STARTS).then(Vec::new);
            for s in 1..=max_s {
                let ng = norm2(&g[..s]);
                let c: Vec<f64> = (0..r)
                    .map(|j| if j < s && ng > 0.0 { g[j] / ng } else { 0.0 })
                    .collect();
                let ax = rep.a.matvec(&c);
                let q: f64 = ax.iter().map(|v| v * v).sum();
                vals.push((q - 1.0).abs());
                if let Some(ms) = mats.as_mut() {
                    ms.push(DenseMatrix::from_factors(&u, &c, &v));
                }
            }
            Ok((vals, mats))
        })
        .collect::<Result<_>>()?;

    let mut base = vec![0.0f64; max_s];
    for (vals, _) in &draws {
        for (b, v) in base.iter_mut().zip(vals) {
            *b = b.max(*v);
        }
    }
    let starts: Vec<(usize, &DenseMatrix)> = draws
        .iter()
        .filter_map(|(_, mats)| mats.as_ref())
        .flat_map(|ms| ms.iter().enumerate())
        .collect();
    let refined: Vec<(usize, f64)> = starts
        .par_iter()
        .flat_map_iter(|&(idx, x)| [(idx, x, true), (idx, x, false)])
        .map(|(idx, x, top)| Ok((idx, refine(op, x, idx + 1, top, lipschitz)?)))
        .collect::<Result<_>>()?;
    for (idx, v) in refined {
        base[idx] = base[idx].max(v);
    }

    let mut out = Vec::with_capacity(max_s);
    let mut running: f64 = 0.0;
    for (idx, b) in base.into_iter().enumerate() {
        let s = idx + 1;
        running = running.max(b);
        let delta_exact = (s == r).then_some(delta_r);
        out.push(RipEstimate {
            s,
            delta_lower: running.min(delta_r),
            delta_exact,
            delta_upper: delta_r,
            samples,
            seed,
        });
    }
    Ok(out)
}

pub fn rip_sample_lower(
    op: &LinearTransformation,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if s == 0 {
        return arg("s must be >= 1");
    }
    let mut profile = rip_sample_profile(op, s, samples, seed)?;
    Ok(profile.pop().expect("profile has s entries"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipGoodness {
    pub gamma_hat_bound: f64,
    pub gamma_bound: f64,
    pub beta_min: f64,
    /// `true` iff `δ_{2s} < √2 − 1`, i.e. the bound on γ̂ is below 1/2.
    pub certifying: bool,
}

/// Bounds on γ̂_s and γ_s implied by `δ_{2s}` under the ℓ2 measurement norm.
pub fn goodness_from_rip(delta_2s: f64, s: usize) -> Result<RipGoodness> {
    if !(delta_2s >= 0.0) || !delta_2s.is_finite() {
        return arg(format!("delta must be finite and >= 0, got {delta_2s}"));
    }
    if s == 0 {
        return arg("s must be >= 1");
    }
    let c = std::f64::consts::SQRT_2 - 1.0;
    let denom = 1.0 + c * delta_2s;
    let gamma_bound = if delta_2s < 1.0 {
        std::f64::consts::SQRT_2 * delta_2s / (1.0 - delta_2s)
    } else {
        f64::INFINITY
    };
    Ok(RipGoodness {
        gamma_hat_bound: std::f64::consts::SQRT_2 * delta_2s / denom,
        gamma_bound,
        beta_min: (s as f64 * (1.0 + delta_2s)).sqrt() / denom,
        certifying: delta_2s < c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Bound {
    pub gamma1_bound: f64,
    /// Orders `s` below this value satisfy `s·Γ_1 < 1/2`.
    #[serde(with = "crate::measure::extended_real")]
    pub s_threshold: f64,
}

/// Bound on `Γ_1` from `δ_{ts}` with `ts > 1`.
pub fn gamma1_bound_from_rip(delta_ts: f64, t: f64, s: usize) -> Result<Gamma1Bound> {
    let ts = t * s as f64;
    if !(ts > 1.0) || !ts.is_finite() {
        return arg(format!("t*s must exceed 1, got {ts}"));
    }
    if !(0.0..1.0).contains(&delta_ts) {
        return arg(format!("delta must lie in [0, 1), got {delta_ts}"));
    }
    let root = (ts - 1.0).sqrt();
    let gamma1_bound = std::f64::consts::SQRT_2 * delta_ts / ((1.0 - delta_ts) * root);
    let s_threshold = if delta_ts == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - delta_ts) * root / (2.0 * std::f64::consts::SQRT_2 * delta_ts)
    };
    Ok(Gamma1Bound {
        gamma1_bound,
        s_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GuaranteeStatus {
    /// The condition holds for a sound upper value of δ.
    Satisfied,
    /// The lower estimate of δ does not violate the condition.
    NotRefuted,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeEntry {
    pub source: String,
    /// Required order as a multiple of `s`.
    pub order: usize,
    pub threshold: f64,
    pub status: GuaranteeStatus,
}

/// Threshold conditions on `δ_{ks}` from the literature, `(source, k, bound)`.
pub fn guarantee_conditions() -> Vec<(&'static str, usize, f64)> {
    let s2 = std::f64::consts::SQRT_2;
    vec![
        ("g-number", 2, s2 - 1.0),
        ("recht-fazel-parrilo", 5, 0.1),
        ("lee-bresler", 3, 1.0 / (1.0 + 4.0 / 3f64.sqrt())),
        ("candes-plan", 4, s2 - 1.0),
        ("mohan-fazel", 2, 0.307),
        ("mohan-fazel", 3, 2.0 * 5f64.sqrt() - 4.0),
        ("mohan-fazel", 4, (8.0 - 40f64.sqrt()) / 3.0),
        ("meka-jain-dhillon", 2, 1.0 / 3.0),
        ("oymak-et-al", 2, 0.472),
    ]
}

fn status(est: Option<&RipEstimate>, threshold: f64) -> GuaranteeStatus {
    let Some(e) = est else {
        return GuaranteeStatus::Unknown;
    };
    if let Some(exact) = e.delta_exact {
        return if exact < threshold {
            GuaranteeStatus::Satisfied
        } else {
            GuaranteeStatus::Violated
        };
    }
    if e.delta_lower >= threshold {
        GuaranteeStatus::Violated
    } else if e.delta_upper < threshold {
        GuaranteeStatus::Satisfied
    } else {
        GuaranteeStatus::NotRefuted
    }
}

/// Evaluates every literature condition against the estimates of
/// `δ_{2s}, δ_{3s}, δ_{4s}, δ_{5s}`.
pub fn guarantee_table(
    est2: Option<&RipEstimate>,
    est3: Option<&RipEstimate>,
    est4: Option<&RipEstimate>,
    est5: Option<&RipEstimate>,
) -> Vec<GuaranteeEntry> {
    guarantee_conditions()
        .into_iter()
        .map(|(source, order, threshold)| {
            let est = match order {
                2 => est2,
                3 => est3,
                4 => est4,
                _ => est5,
            };
            GuaranteeEntry {
                source: source.to_string(),
                order,
                threshold,
                status: status(est, threshold),
            }
        })
        .collect()
}
