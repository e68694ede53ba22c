use serde::{Deserialize, Serialize};

use super::block::block_assumption_check;
use super::bounds::{error_bound_noiseless, error_bound_noisy};
use crate::error::{arg, Result};
use crate::matrix::{norms, svd, DenseMatrix};
use crate::measure::{Beta, MeasurementNorm};
use crate::operator::LinearTransformation;
use crate::seed::derive;
use crate::solver::{solve_equality, solve_noisy, subgradient_certificate, NnmConfig, NnmProblem};

/// Slack allowed when comparing a recovery error with its bound.
pub const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    /// Relative Frobenius error below which a trial counts as a success.
    pub success_tol: f64,
    pub nnm: NnmConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            success_tol: 1e-4,
            nnm: NnmConfig::default(),
        }
    }
}

/// A sound upper bound on γ̂_s(A, β) used to evaluate the error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub gamma_hat_upper: f64,
    pub beta: Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub norm: MeasurementNorm,
}

impl OperatorDescriptor {
    pub fn of(op: &LinearTransformation, kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            m: op.m(),
            n: op.n(),
            p: op.p(),
            norm: op.norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDescriptor {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub singular_values: Vec<f64>,
}

/// Serde helper for optional reals written as `"n/a"` when absent.
pub mod not_applicable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("n/a"),
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
            Raw::Str(s) if s == "n/a" => Ok(None),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad value '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub operator: OperatorDescriptor,
    pub w: MatrixDescriptor,
    pub epsilon: f64,
    /// `‖A X − b‖`.
    pub theta: f64,
    /// Certified objective gap, when a dual certificate is available.
    #[serde(with = "not_applicable")]
    pub upsilon: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub recovery_error_nuclear: f64,
    pub recovery_error_rel_frobenius: f64,
    pub success: bool,
    /// Whether a dual certificate of exact recovery was found (noiseless
    /// trials only).
    pub certificate_valid: Option<bool>,
    pub block_assumption: bool,
    #[serde(with = "not_applicable")]
    pub gamma_hat_upper: Option<f64>,
    #[serde(with = "not_applicable")]
    pub bound_value: Option<f64>,
    pub bound_respected: Option<bool>,
}

/// Inputs of one recovery experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec<'a> {
    pub op: &'a LinearTransformation,
    pub operator_kind: &'a str,
    pub w: &'a DenseMatrix,
    /// Order used for the tail `‖W − W^s‖_∗` and the block split.
    pub s: usize,
    pub noise: Option<&'a [f64]>,
    pub epsilon: f64,
    pub bound: Option<BoundContext>,
    pub seed: u64,
}

/// Solves the recovery problem for `b = A(W) + noise` and compares the
/// result with `W` and, when the Block Assumption holds and a γ̂ bound
/// below 1/2 is supplied, with the error bound.
pub fn run_trial(spec: &TrialSpec<'_>, cfg: &TrialConfig) -> Result<TrialRecord> {
    let op = spec.op;
    let w = spec.w;
    if w.shape() != (op.m(), op.n()) {
        return arg(format!(
            "W is {}x{}, operator acts on {}x{}",
            w.rows(),
            w.cols(),
            op.m(),
            op.n()
        ));
    }
    if spec.s == 0 || spec.s > op.r() {
        return arg(format!("s = {} outside 1..={}", spec.s, op.r()));
    }
    let mut b = op.apply(w)?;
    if let Some(noise) = spec.noise {
        if noise.len() != b.len() {
            return arg(format!(
                "noise has {} entries, expected {}",
                noise.len(),
                b.len()
            ));
        }
        b.iter_mut().zip(noise).for_each(|(bi, e)| *bi += e);
    }
    let noiseless = spec.noise.is_none() && spec.epsilon == 0.0;
    let problem = NnmProblem::noisy(op, b, spec.epsilon);
    let sol = if noiseless {
        solve_equality(&problem, &cfg.nnm)?
    } else {
        solve_noisy(&problem, &cfg.nnm)?
    };

    let sigma = svd(w)?.sigma;
    let diff = sol.x.sub(w);
    let err_nuc = norms(&diff)?.nuclear;
    let wf = w.frobenius_norm();
    let rel = if wf > 0.0 {
        diff.frobenius_norm() / wf
    } else {
        diff.frobenius_norm()
    };
    let success = sol.converged && rel <= cfg.success_tol;
    let w_nonzero = w.max_abs() > 0.0;

    let certificate_valid = if noiseless && w_nonzero {
        Some(subgradient_certificate(op, w)?.valid)
    } else {
        None
    };
    let block = if w_nonzero {
        block_assumption_check(&sol.x, w, spec.s, derive(spec.seed, &[9]))?.holds
    } else {
        false
    };

    let tail: f64 = sigma[spec.s..].iter().sum();
    let bound_value = match (spec.bound, sol.upsilon_bound) {
        (Some(ctx), Some(ups)) if block && ctx.gamma_hat_upper < 0.5 => match ctx.beta {
            Beta::Finite(beta) => Some(error_bound_noisy(
                ctx.gamma_hat_upper,
                beta,
                sol.theta,
                spec.epsilon,
                tail,
                ups,
            )?),
            Beta::Infinite if noiseless && sol.theta == 0.0 => {
                Some(error_bound_noiseless(ctx.gamma_hat_upper, ups, tail)?)
            }
            Beta::Infinite => None,
        },
        _ => None,
    };
    let bound_respected = bound_value.map(|bv| err_nuc <= bv + BOUND_SLACK);

    Ok(TrialRecord {
        seed: spec.seed,
        operator: OperatorDescriptor::of(op, spec.operator_kind),
        w: MatrixDescriptor {
            m: w.rows(),
            n: w.cols(),
            s: spec.s,
            singular_values: sigma,
        },
        epsilon: spec.epsilon,
        theta: sol.theta,
        upsilon: sol.upsilon_bound,
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
        recovery_error_nuclear: err_nuc,
        recovery_error_rel_frobenius: rel,
        success,
        certificate_valid,
        block_assumption: block,
        gamma_hat_upper: spec.bound.map(|c| c.gamma_hat_upper),
        bound_value,
        bound_respected,
    })
}

/// Noiseless recovery of `W` from `A(W)`.
pub fn exact_recovery_trial(
    op: &LinearTransformation,
    w: &DenseMatrix,
    s: usize,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<TrialRecord> {
    run_trial(
        &TrialSpec {
            op,
            operator_kind: "given",
            w,
            s,
            noise: None,
            epsilon: 0.0,
            bound: None,
            seed,
        },
        cfg,
    )
}
