use serde::{Deserialize, Serialize};

use lmr_core::goodness::GoodnessConfig;
use lmr_core::recovery::{PhaseConfig, TrialConfig};
use lmr_core::rip::DEFAULT_RIP_SAMPLES;
use lmr_core::solver::NnmConfig;
use lmr_core::MeasurementNorm;

use crate::error::{CliError, CliResult};

/// Settings shared by all subcommands; command-line flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub success_tol: f64,
    pub max_iter: usize,
    pub factor_pairs: usize,
    pub null_samples: usize,
    pub restarts: usize,
    pub rip_samples: usize,
    pub norm: Option<MeasurementNorm>,
    pub out: Option<String>,
    pub phase: PhaseSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSettings {
    pub m: usize,
    pub n: usize,
    pub s_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub trials: usize,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        let d = PhaseConfig::default();
        Self {
            m: d.m,
            n: d.n,
            s_values: d.s_values,
            p_values: d.p_values,
            trials: d.trials,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let nnm = NnmConfig::default();
        let g = GoodnessConfig::default();
        Self {
            seed: None,
            feas_tol: nnm.feas_tol,
            gap_tol: nnm.gap_tol,
            success_tol: TrialConfig::default().success_tol,
            max_iter: nnm.max_iter,
            factor_pairs: g.factor_pairs,
            null_samples: g.null_samples,
            restarts: g.restarts,
            rip_samples: DEFAULT_RIP_SAMPLES,
            norm: None,
            out: None,
            phase: PhaseSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        for (name, v) in [
            ("feas_tol", self.feas_tol),
            ("gap_tol", self.gap_tol),
            ("success_tol", self.success_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::data(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("max_iter", self.max_iter),
            ("factor_pairs", self.factor_pairs),
            ("restarts", self.restarts),
            ("rip_samples", self.rip_samples),
        ] {
            if v == 0 {
                return Err(CliError::data(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| {
            CliError::malformed("a seed is required: pass --seed or set it in --config")
        })
    }

    pub fn nnm(&self) -> NnmConfig {
        NnmConfig {
            feas_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            max_iter: self.max_iter,
            ..NnmConfig::default()
        }
    }

    pub fn trial(&self) -> TrialConfig {
        TrialConfig {
            success_tol: self.success_tol,
            nnm: self.nnm(),
        }
    }

    pub fn goodness(&self, seed: u64) -> GoodnessConfig {
        GoodnessConfig {
            seed,
            restarts: self.restarts,
            null_samples: self.null_samples,
            factor_pairs: self.factor_pairs,
        }
    }
}
