use std::path::{Path, PathBuf};

use serde::Serialize;

use lmr_core::goodness::{
    certify, lower_bound_ascent, null_space_ascent, sample_factor_pairs, upper_bound_gamma1,
    upper_bound_gammas, AscentRun, GKind, GoodnessCertificate, Verdict,
};
use lmr_core::matrix::svd;
use lmr_core::measure::extended_real;
use lmr_core::recovery::{
    phase_grid, run_trial, OperatorDescriptor, PhaseConfig, TrialRecord, TrialSpec,
};
use lmr_core::rip::{guarantee_table, rip_sample_profile, GuaranteeEntry, RipEstimate};
use lmr_core::seed::derive;
use lmr_core::solver::{solve_equality, solve_noisy, NnmProblem, NnmSolution};
use lmr_core::{Beta, LinearTransformation};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{emit, read_json, read_operator, to_json, MatrixFile};

pub struct Context {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
}

impl Context {
    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    fn operator(&self, path: &Path) -> CliResult<LinearTransformation> {
        let op = read_operator(path)?;
        Ok(match self.config.norm {
            Some(norm) => op.with_norm(norm),
            None => op,
        })
    }
}

fn check_order(op: &LinearTransformation, s: usize) -> CliResult<()> {
    if s == 0 || s > op.r() {
        return Err(CliError::data(format!("s = {s} outside 1..={}", op.r())));
    }
    Ok(())
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::SGood => 0,
        Verdict::NotSGood => 1,
        Verdict::Inconclusive => 2,
    }
}

pub fn cmd_certify(
    ctx: &Context,
    operator: &Path,
    s: usize,
    beta: Beta,
    kind: GKind,
) -> CliResult<i32> {
    let seed = ctx.config.require_seed()?;
    let op = ctx.operator(operator)?;
    check_order(&op, s)?;
    let cert: GoodnessCertificate = certify(&op, s, beta, kind, &ctx.config.goodness(seed))?;
    emit(ctx.out(), &to_json(&cert)?)?;
    Ok(exit_code(cert.verdict))
}

#[derive(Debug, Serialize)]
struct RecoverOutput {
    solution: NnmSolution,
    trial: Option<TrialRecord>,
}

pub fn cmd_recover(
    ctx: &Context,
    operator: &Path,
    b_file: Option<&Path>,
    w_file: Option<&Path>,
    eps: f64,
    s: Option<usize>,
) -> CliResult<i32> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(CliError::data(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    let seed = ctx.config.seed.unwrap_or(0);
    let op = ctx.operator(operator)?;
    let cfg = ctx.config.trial();
    let output = match (b_file, w_file) {
        (Some(path), None) => {
            let b: Vec<f64> = read_json(path)?;
            if b.len() != op.p() {
                return Err(CliError::data(format!(
                    "b has {} entries, operator has p = {}",
                    b.len(),
                    op.p()
                )));
            }
            let problem = NnmProblem::noisy(&op, b, eps);
            let solution = if eps == 0.0 {
                solve_equality(&problem, &cfg.nnm)?
            } else {
                solve_noisy(&problem, &cfg.nnm)?
            };
            RecoverOutput {
                solution,
                trial: None,
            }
        }
        (None, Some(path)) => {
            let w = read_json::<MatrixFile>(path)?.into_matrix()?;
            if w.shape() != (op.m(), op.n()) {
                return Err(CliError::data(format!(
                    "W is {}x{}, operator acts on {}x{}",
                    w.rows(),
                    w.cols(),
                    op.m(),
                    op.n()
                )));
            }
            let s = match s {
                Some(s) => s,
                None => svd(&w)?.rank().max(1),
            };
            check_order(&op, s)?;
            let b = op.apply(&w)?;
            let problem = NnmProblem::noisy(&op, b, eps);
            let solution = if eps == 0.0 {
                solve_equality(&problem, &cfg.nnm)?
            } else {
                solve_noisy(&problem, &cfg.nnm)?
            };
            let trial = run_trial(
                &TrialSpec {
                    op: &op,
                    operator_kind: "file",
                    w: &w,
                    s,
                    noise: None,
                    epsilon: eps,
                    bound: None,
                    seed,
                },
                &cfg,
            )?;
            RecoverOutput {
                solution,
                trial: Some(trial),
            }
        }
        _ => {
            return Err(CliError::malformed(
                "exactly one of --b and --w is required",
            ))
        }
    };
    emit(ctx.out(), &to_json(&output)?)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct GuaranteeReport {
    s: usize,
    entries: Vec<GuaranteeEntry>,
}

#[derive(Debug, Serialize)]
struct RipReport {
    operator: OperatorDescriptor,
    estimates: Vec<RipEstimate>,
    guarantees: Vec<GuaranteeReport>,
}

pub fn cmd_rip(
    ctx: &Context,
    operator: &Path,
    s_list: &[usize],
    samples: Option<usize>,
) -> CliResult<i32> {
    let seed = ctx.config.require_seed()?;
    let op = ctx.operator(operator)?;
    if s_list.is_empty() {
        return Err(CliError::malformed("at least one order is required"));
    }
    for &s in s_list {
        check_order(&op, s)?;
    }
    let samples = samples.unwrap_or(ctx.config.rip_samples);
    if samples == 0 {
        return Err(CliError::data("samples must be >= 1"));
    }
    let profile = rip_sample_profile(&op, op.r(), samples, seed)?;
    let at = |k: usize| profile.get(k.wrapping_sub(1));
    let report = RipReport {
        operator: OperatorDescriptor::of(&op, "file"),
        estimates: s_list.iter().map(|&s| profile[s - 1].clone()).collect(),
        guarantees: s_list
            .iter()
            .map(|&s| GuaranteeReport {
                s,
                entries: guarantee_table(at(2 * s), at(3 * s), at(4 * s), at(5 * s)),
            })
            .collect(),
    };
    emit(ctx.out(), &to_json(&report)?)?;
    Ok(0)
}

pub struct PhaseArgs {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub s_values: Option<Vec<usize>>,
    pub p_values: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub records: Option<PathBuf>,
}

pub fn cmd_phase(ctx: &Context, args: PhaseArgs) -> CliResult<i32> {
    let seed = ctx.config.require_seed()?;
    let ph = &ctx.config.phase;
    let cfg = PhaseConfig {
        m: args.m.unwrap_or(ph.m),
        n: args.n.unwrap_or(ph.n),
        s_values: args.s_values.unwrap_or_else(|| ph.s_values.clone()),
        p_values: args.p_values.unwrap_or_else(|| ph.p_values.clone()),
        trials: args.trials.unwrap_or(ph.trials),
        seed,
        trial: ctx.config.trial(),
    };
    if cfg.m == 0 || cfg.n == 0 {
        return Err(CliError::data("m and n must be >= 1"));
    }
    let grid = phase_grid(&cfg)?;
    emit(ctx.out(), &grid.to_csv())?;
    if let Some(path) = &args.records {
        emit(Some(path), &grid.to_jsonl())?;
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct LowerReport {
    s: usize,
    seed: u64,
    /// Best of the two ascents; a lower bound on γ̂_s(A, β) for every β.
    gamma_hat_lower: f64,
    #[serde(with = "extended_real")]
    gamma_lower: f64,
    lp_ascent: f64,
    null_space_ascent: f64,
    restarts: usize,
    null_samples: usize,
    runs: Vec<AscentRun>,
}

pub fn cmd_gnum_lower(ctx: &Context, operator: &Path, s: usize) -> CliResult<i32> {
    let seed = ctx.config.require_seed()?;
    let op = ctx.operator(operator)?;
    check_order(&op, s)?;
    let lp = lower_bound_ascent(&op, s, ctx.config.restarts, derive(seed, &[2]))?;
    let na = null_space_ascent(&op, s, ctx.config.null_samples, derive(seed, &[3]))?;
    let h = lp.best_bound.max(na.value);
    let report = LowerReport {
        s,
        seed,
        gamma_hat_lower: h,
        gamma_lower: if h >= 0.5 { 1.0 } else { h / (1.0 - h) },
        lp_ascent: lp.best_bound,
        null_space_ascent: na.value,
        restarts: ctx.config.restarts,
        null_samples: ctx.config.null_samples,
        runs: lp.runs,
    };
    emit(ctx.out(), &to_json(&report)?)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct UpperReport {
    s: usize,
    beta: Beta,
    seed: u64,
    /// `max` over the sampled pairs; not a certified bound.
    gamma1_sampled: f64,
    gamma_s_sampled: f64,
    factor_pairs: usize,
    flags: Vec<String>,
}

pub fn cmd_gnum_upper(ctx: &Context, operator: &Path, s: usize, beta: Beta) -> CliResult<i32> {
    let seed = ctx.config.require_seed()?;
    let op = ctx.operator(operator)?;
    check_order(&op, s)?;
    let ns = op.null_space_basis()?;
    let mut pairs = sample_factor_pairs(&op, &ns, ctx.config.factor_pairs, derive(seed, &[1]))?;
    let na = null_space_ascent(&op, s, ctx.config.null_samples, derive(seed, &[3]))?;
    pairs.extend(na.witness_pair);
    let report = UpperReport {
        s,
        beta,
        seed,
        gamma1_sampled: upper_bound_gamma1(&op, beta, &pairs)?,
        gamma_s_sampled: upper_bound_gammas(&op, s, beta, &pairs)?,
        factor_pairs: pairs.len(),
        flags: vec!["SAMPLED_UPPER".to_string()],
    };
    emit(ctx.out(), &to_json(&report)?)?;
    Ok(0)
}
