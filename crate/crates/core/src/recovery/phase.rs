use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trial::{run_trial, TrialConfig, TrialRecord, TrialSpec};
use crate::error::{arg, Result};
use crate::matrix::random_s_rank;
use crate::operator::LinearTransformation;
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseConfig {
    pub m: usize,
    pub n: usize,
    pub s_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub trial: TrialConfig,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            m: 8,
            n: 8,
            s_values: vec![1, 2],
            p_values: vec![16, 32, 48, 64],
            trials: 50,
            seed: 0,
            trial: TrialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub s: usize,
    pub p: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_rel_error: f64,
    pub mean_iterations: f64,
}

impl PhaseCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub s_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub success_tol: f64,
    pub cells: Vec<PhaseCell>,
    pub records: Vec<TrialRecord>,
}

impl PhaseGrid {
    pub fn cell(&self, s: usize, p: usize) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.s == s && c.p == p)
    }

    /// One header line and one line per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,p,trials,successes,mean_rel_error,mean_iterations\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.s, c.p, c.trials, c.successes, c.mean_rel_error, c.mean_iterations
            );
        }
        out
    }

    /// One JSON object per trial.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Seed of trial `trial` in cell `cell`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    derive(master, &[cell as u64, trial as u64])
}

/// Exact recovery trials on fresh Gaussian operators and `s`-rank targets
/// for every `(s, p)` cell, in row-major order over `s` then `p`.
pub fn phase_grid(cfg: &PhaseConfig) -> Result<PhaseGrid> {
    if cfg.s_values.is_empty() || cfg.p_values.is_empty() {
        return arg("grid axes must be nonempty");
    }
    if cfg.trials == 0 {
        return arg("trials must be >= 1");
    }
    let r = cfg.m.min(cfg.n);
    if let Some(&s) = cfg.s_values.iter().find(|&&s| s == 0 || s > r) {
        return arg(format!("s = {s} outside 1..={r}"));
    }
    let jobs: Vec<(usize, usize, usize, usize)> = cfg
        .s_values
        .iter()
        .flat_map(|&s| cfg.p_values.iter().map(move |&p| (s, p)))
        .enumerate()
        .flat_map(|(cell, (s, p))| (0..cfg.trials).map(move |t| (cell, s, p, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(cell, s, p, t)| {
            let seed = trial_seed(cfg.seed, cell, t);
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[0]));
            let op = LinearTransformation::gaussian(cfg.m, cfg.n, p, &mut rng);
            let w = random_s_rank(cfg.m, cfg.n, s, derive(seed, &[1]))?;
            run_trial(
                &TrialSpec {
                    op: &op,
                    operator_kind: "gaussian",
                    w: &w,
                    s,
                    noise: None,
                    epsilon: 0.0,
                    bound: None,
                    seed,
                },
                &cfg.trial,
            )
        })
        .collect::<Result<_>>()?;

    let cells = records
        .chunks(cfg.trials)
        .zip(jobs.chunks(cfg.trials))
        .map(|(recs, js)| {
            let k = recs.len() as f64;
            PhaseCell {
                s: js[0].1,
                p: js[0].2,
                trials: recs.len(),
                successes: recs.iter().filter(|r| r.success).count(),
                mean_rel_error: recs
                    .iter()
                    .map(|r| r.recovery_error_rel_frobenius)
                    .sum::<f64>()
                    / k,
                mean_iterations: recs.iter().map(|r| r.iterations as f64).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(PhaseGrid {
        s_values: cfg.s_values.clone(),
        p_values: cfg.p_values.clone(),
        success_tol: cfg.trial.success_tol,
        cells,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p_values: Vec<usize>, trials: usize) -> PhaseConfig {
        PhaseConfig {
            m: 3,
            n: 3,
            s_values: vec![1],
            p_values,
            trials,
            seed: 11,
            trial: TrialConfig::default(),
        }
    }

    #[test]
    fn full_and_empty_measurements() {
        let g = phase_grid(&small(vec![0, 9], 4)).unwrap();
        assert_eq!(g.cell(1, 0).unwrap().successes, 0);
        assert_eq!(g.cell(1, 9).unwrap().success_rate(), 1.0);
        assert_eq!(g.records.len(), 8);
    }

    #[test]
    fn csv_layout_and_determinism() {
        let cfg = small(vec![5, 7], 3);
        let a = phase_grid(&cfg).unwrap();
        let b = phase_grid(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "s,p,trials,successes,mean_rel_error,mean_iterations"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,5,3,"));
    }

    #[test]
    fn rejects_empty_axes() {
        assert!(phase_grid(&small(vec![], 1)).is_err());
        assert!(phase_grid(&small(vec![4], 0)).is_err());
    }
}
