//! G-number bounds and s-goodness certificates.

mod lower;
mod pairs;
mod upper;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::measure::{extended_real, Beta, MeasurementNorm};
use crate::operator::LinearTransformation;
use crate::rip::{goodness_from_rip, rip_exact_full_rank};
use crate::seed::derive;
use crate::solver::{solve_equality, NnmConfig, NnmProblem};

pub use lower::{
    in_delta_s, lower_bound_ascent, lower_bound_lp, null_space_ascent, top_s_sign_pattern,
    AscentResult, AscentRun, LpLowerBound, NullAscentResult, ASCENT_MAX_ITER, ASCENT_TOL,
    WITNESS_TOL,
};
pub use pairs::{random_null_element, sample_factor_pairs, FactorPair};
pub use upper::{
    descend_f_s, f_s, gamma1_for_pair, gamma_profile_for_pair, upper_bound_gamma1,
    upper_bound_gammas, upsilon, PairGamma1, UpsilonSolution, BARRIER_GAP, GAMMA_S_ITERS,
};

/// Slack below 1/2 (γ̂ form) still read as a disproof of s-goodness.
pub const VERDICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GKind {
    Gamma,
    #[default]
    GammaHat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNumberQuery {
    pub s: usize,
    pub beta: Beta,
    pub kind: GKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "S_GOOD")]
    SGood,
    #[serde(rename = "NOT_S_GOOD")]
    NotSGood,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowerSource {
    None,
    LpAscent,
    NullSpaceAscent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoundUpperSource {
    /// `γ̂_s ≤ 1` always.
    Trivial,
    /// Injective operator with no bound on the multipliers.
    TrivialNullSpace,
    /// RIP implied bound from the exact `δ_r`.
    Rip,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundTrace {
    /// Ascent runs for the queried order.
    pub iterations: Vec<AscentRun>,
    pub factor_pairs: usize,
    pub witness_pairs: usize,
    pub null_samples: usize,
    /// Seconds per stage; omitted from serialized output.
    #[serde(skip)]
    pub stage_seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessCertificate {
    pub query: GNumberQuery,
    pub lower: f64,
    #[serde(with = "extended_real")]
    pub upper: f64,
    #[serde(with = "extended_real")]
    pub sound_upper: f64,
    #[serde(with = "extended_real")]
    pub sampled_upper: f64,
    pub lower_source: LowerSource,
    pub sound_upper_source: SoundUpperSource,
    /// β attached to the reported bounds; differs from the query only for
    /// γ-form queries at finite β.
    pub beta_effective: Beta,
    pub verdict: Verdict,
    pub flags: Vec<String>,
    pub trace: BoundTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoodnessConfig {
    pub seed: u64,
    pub restarts: usize,
    pub null_samples: usize,
    pub factor_pairs: usize,
}

impl Default for GoodnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            null_samples: 16,
            factor_pairs: 32,
        }
    }
}

impl GoodnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.factor_pairs == 0 {
            return arg("restarts and factor_pairs must be >= 1");
        }
        Ok(())
    }
}

/// `γ̂ = γ/(1+γ)` together with `β/(1+γ)`.
pub fn gamma_hat_from_gamma(gamma: f64, beta: Beta) -> Result<(f64, Beta)> {
    if !(0.0..1.0).contains(&gamma) {
        return arg(format!("gamma must lie in [0, 1), got {gamma}"));
    }
    Ok((gamma / (1.0 + gamma), beta.scaled(1.0 / (1.0 + gamma))))
}

/// `γ = γ̂/(1−γ̂)` together with `β/(1−γ̂)`.
pub fn gamma_from_gamma_hat(gamma_hat: f64, beta: Beta) -> Result<(f64, Beta)> {
    if !(0.0..0.5).contains(&gamma_hat) {
        return arg(format!("gamma_hat must lie in [0, 1/2), got {gamma_hat}"));
    }
    Ok((
        gamma_hat / (1.0 - gamma_hat),
        beta.scaled(1.0 / (1.0 - gamma_hat)),
    ))
}

/// Sound upper bound on γ̂_s(A, β) that does not rely on sampling.
fn sound_upper_hat(
    op: &LinearTransformation,
    s: usize,
    beta: Beta,
    null_dim: usize,
    delta_r: Option<f64>,
) -> Result<(f64, SoundUpperSource)> {
    if null_dim == 0 && beta.is_infinite() {
        return Ok((0.0, SoundUpperSource::TrivialNullSpace));
    }
    if let (MeasurementNorm::L2, Some(d)) = (op.norm(), delta_r) {
        let g = goodness_from_rip(d, s)?;
        if g.certifying && beta.value() >= g.beta_min && g.gamma_hat_bound < 1.0 {
            return Ok((g.gamma_hat_bound, SoundUpperSource::Rip));
        }
    }
    Ok((1.0, SoundUpperSource::Trivial))
}

fn verdict_hat(lower: f64, sound_upper: f64) -> Verdict {
    if lower >= 0.5 - VERDICT_TOL {
        Verdict::NotSGood
    } else if sound_upper < 0.5 {
        Verdict::SGood
    } else {
        Verdict::Inconclusive
    }
}

fn to_gamma(h: f64) -> f64 {
    if h >= 0.5 {
        f64::INFINITY
    } else {
        h / (1.0 - h)
    }
}

struct Stage(Instant);

impl Stage {
    fn start() -> Self {
        Stage(Instant::now())
    }

    fn end(self, name: &str, out: &mut Vec<(String, f64)>) {
        out.push((name.to_string(), self.0.elapsed().as_secs_f64()));
    }
}

/// Certificates for orders `1..=max_s` computed from shared samples. Lower
/// bounds are running maxima over smaller orders and sampled upper bounds
/// running minima over larger ones, so both are nondecreasing in `s`.
pub fn profile(
    op: &LinearTransformation,
    max_s: usize,
    beta: Beta,
    kind: GKind,
    cfg: &GoodnessConfig,
) -> Result<Vec<GoodnessCertificate>> {
    cfg.validate()?;
    let r = op.r();
    if max_s == 0 || max_s > r {
        return arg(format!("s = {max_s} outside 1..={r}"));
    }
    let mut timings = Vec::new();

    let stage = Stage::start();
    let ns = op.null_space_basis()?;
    let delta_r = if op.norm() == MeasurementNorm::L2 {
        Some(rip_exact_full_rank(op)?)
    } else {
        None
    };
    stage.end("setup", &mut timings);

    let stage = Stage::start();
    let mut lowers = Vec::with_capacity(max_s);
    let mut runs = Vec::new();
    let mut witness_pairs = Vec::new();
    for s in 1..=max_s {
        let lp = lower::lower_bound_ascent_with(
            op,
            &ns,
            s,
            cfg.restarts,
            derive(cfg.seed, &[2, s as u64]),
        )?;
        let na = lower::null_space_ascent_with(
            op,
            &ns,
            s,
            cfg.null_samples,
            derive(cfg.seed, &[3, s as u64]),
        )?;
        let (value, source) = if na.value > lp.best_bound {
            (na.value, LowerSource::NullSpaceAscent)
        } else if lp.best_bound > 0.0 {
            (lp.best_bound, LowerSource::LpAscent)
        } else {
            (0.0, LowerSource::None)
        };
        witness_pairs.extend(lp.witness_pair);
        witness_pairs.extend(na.witness_pair);
        lowers.push((value, source));
        runs.push(lp.runs);
    }
    for s in 1..max_s {
        if lowers[s - 1].0 > lowers[s].0 {
            lowers[s] = lowers[s - 1];
        }
    }
    stage.end("lower", &mut timings);

    let stage = Stage::start();
    let mut pairs = sample_factor_pairs(op, &ns, cfg.factor_pairs, derive(cfg.seed, &[1]))?;
    let witness_count = witness_pairs.len();
    pairs.extend(witness_pairs);
    let per_pair: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|pair| gamma_profile_for_pair(op, pair, beta, r))
            .collect::<Result<_>>()?
    };
    let mut sampled: Vec<f64> = (0..r)
        .map(|k| per_pair.iter().map(|v| v[k]).fold(0.0, f64::max))
        .collect();
    for k in (0..r.saturating_sub(1)).rev() {
        sampled[k] = sampled[k].min(sampled[k + 1]);
    }
    stage.end("upper", &mut timings);

    let mut out = Vec::with_capacity(max_s);
    for s in 1..=max_s {
        let (lower_hat, lower_source) = lowers[s - 1];
        let (sound_hat, sound_source) = sound_upper_hat(op, s, beta, ns.dim, delta_r)?;
        let sampled_hat = sampled[s - 1];
        let mut flags = vec!["SAMPLED_UPPER".to_string()];
        if sampled_hat < lower_hat - 1e-9 {
            flags.push("SAMPLED_UPPER_BELOW_LOWER".to_string());
        }
        let verdict = verdict_hat(lower_hat, sound_hat);
        let upper_hat = sound_hat.min(sampled_hat.max(lower_hat));
        let (lower, upper, sound_upper, sampled_upper, beta_effective) = match kind {
            GKind::GammaHat => (lower_hat, upper_hat, sound_hat, sampled_hat, beta),
            GKind::Gamma => {
                let lower = if lower_hat >= 0.5 - VERDICT_TOL {
                    1.0
                } else {
                    to_gamma(lower_hat)
                };
                let beta_effective = if upper_hat < 0.5 {
                    beta.scaled(1.0 / (1.0 - upper_hat))
                } else {
                    beta
                };
                (
                    lower,
                    to_gamma(upper_hat),
                    to_gamma(sound_hat),
                    to_gamma(sampled_hat),
                    beta_effective,
                )
            }
        };
        if kind == GKind::Gamma && !beta.is_infinite() {
            flags.push("BETA_RESCALED".to_string());
        }
        let trace = BoundTrace {
            iterations: if s == max_s {
                runs[s - 1].clone()
            } else {
                Vec::new()
            },
            factor_pairs: cfg.factor_pairs,
            witness_pairs: witness_count,
            null_samples: cfg.null_samples,
            stage_seconds: timings.clone(),
        };
        out.push(GoodnessCertificate {
            query: GNumberQuery { s, beta, kind },
            lower,
            upper,
            sound_upper,
            sampled_upper,
            lower_source,
            sound_upper_source: sound_source,
            beta_effective,
            verdict,
            flags,
            trace,
        });
    }
    Ok(out)
}

/// Brackets γ̂_s(A, β) (or γ_s) and decides s-goodness where the bounds
/// allow it. Sampled upper bounds only narrow the interval; a positive
/// verdict needs a sound upper bound below 1/2.
pub fn certify(
    op: &LinearTransformation,
    s: usize,
    beta: Beta,
    kind: GKind,
    cfg: &GoodnessConfig,
) -> Result<GoodnessCertificate> {
    let mut all = profile(op, s, beta, kind, cfg)?;
    Ok(all.pop().expect("profile has s entries"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SStar {
    pub s_lower: usize,
    pub s_upper: usize,
}

/// Bracket on the largest `s` for which the operator is s-good.
pub fn estimate_s_star(
    op: &LinearTransformation,
    beta: Beta,
    cfg: &GoodnessConfig,
) -> Result<SStar> {
    let certs = profile(op, op.r(), beta, GKind::GammaHat, cfg)?;
    let s_lower = certs
        .iter()
        .rposition(|c| c.verdict == Verdict::SGood)
        .map_or(0, |i| i + 1);
    let s_upper = certs
        .iter()
        .position(|c| c.verdict == Verdict::NotSGood)
        .unwrap_or(op.r());
    Ok(SStar {
        s_lower: s_lower.min(s_upper),
        s_upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSufficiency {
    /// β at or above which γ_s(A, β) = γ_s(A) whenever γ_s(A) < 1.
    pub beta_min_gamma: f64,
    /// β at or above which Γ_s(A, β) = Γ_s(A) whenever Γ_s(A) < 1/2.
    pub beta_min_big_gamma: f64,
}

pub fn beta_sufficiency(rho: f64) -> Result<BetaSufficiency> {
    if !(rho > 0.0) || !rho.is_finite() {
        return arg(format!("rho must be finite and > 0, got {rho}"));
    }
    Ok(BetaSufficiency {
        beta_min_gamma: 1.0 / rho,
        beta_min_big_gamma: 1.5 / rho,
    })
}

/// Lower estimate of the largest ρ with `{‖u‖₁ ≤ ρ} ⊆ A({‖X‖_∗ ≤ 1})`:
/// `1 / max_k Opt(e_k)` with `Opt(b)` the minimal nuclear norm subject to
/// `A X = b`. Feasible solver objectives overestimate `Opt`, so the result
/// errs low. Returns 0 when the operator is not onto.
pub fn inclusion_radius(op: &LinearTransformation, cfg: &NnmConfig) -> Result<f64> {
    let p = op.p();
    if p == 0 {
        return Ok(f64::INFINITY);
    }
    let mut worst: f64 = 0.0;
    for k in 0..p {
        let mut e = vec![0.0; p];
        e[k] = 1.0;
        match solve_equality(&NnmProblem::equality(op, e), cfg) {
            Ok(sol) => worst = worst.max(sol.objective),
            Err(Error::Infeasible { .. }) => return Ok(0.0),
            Err(e) => return Err(e),
        }
    }
    Ok(if worst > 0.0 { 1.0 / worst } else { 0.0 })
}
