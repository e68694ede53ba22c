#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lmr_core::matrix::svd;
use lmr_core::{DenseMatrix, LinearTransformation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(m: usize, n: usize, p: usize, seed: u64) -> LinearTransformation {
    LinearTransformation::gaussian(m, n, p, &mut rng(seed))
}

pub fn diag_null() -> LinearTransformation {
    let d = DenseMatrix::from_diag(2, 2, &[1.0, -1.0]);
    LinearTransformation::with_null_space(2, 2, &[d]).unwrap()
}

/// Operator measuring every entry of `UᵀXV` with weight `d_ij`.
pub fn frame_scaled(u: &DenseMatrix, v: &DenseMatrix, weights: &[f64]) -> LinearTransformation {
    let (m, n) = (u.rows(), v.rows());
    let mut frames = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let mut e = DenseMatrix::zeros(m, n);
            e[(i, j)] = weights[i * n + j];
            frames.push(u.matmul(&e).matmul(&v.transpose()));
        }
    }
    LinearTransformation::new(m, n, frames).unwrap()
}

pub fn operator_json(op: &LinearTransformation) -> Value {
    json!({
        "m": op.m(),
        "n": op.n(),
        "p": op.p(),
        "frames": op.frames().iter().map(|f| f.as_slice().to_vec()).collect::<Vec<_>>(),
        "norm": op.norm().as_str(),
    })
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

pub fn lmr(args: &[&str]) -> Output {
    lmr_env(args, &[])
}

pub fn lmr_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lmr"));
    cmd.args(args).env_remove("LMR_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to run lmr")
}

pub fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&raw).expect("schema compiles")
}

pub fn validate(name: &str, instance: &Value) -> Result<(), String> {
    let compiled = schema(name);
    let result = compiled.validate(instance);
    result.map_err(|errs| {
        errs.map(|e| format!("{e} at {}", e.instance_path))
            .collect::<Vec<_>>()
            .join("; ")
    })
}

/// Vertex enumeration for `max {tᵀx : ‖x‖₁ ≤ 1, A x = 0}`: every vertex of
/// the feasible polytope solves `A_S x_S = 0, σ_Sᵀ x_S = 1` uniquely for a
/// sign pattern σ with support S, with signs matching σ.
pub fn vertex_enumeration(a: &DenseMatrix, t: &[f64]) -> f64 {
    let (p, r) = a.shape();
    let mut best: f64 = 0.0;
    for code in 0..3usize.pow(r as u32) {
        let mut c = code;
        let sigma: Vec<i32> = (0..r)
            .map(|_| {
                let d = (c % 3) as i32 - 1;
                c /= 3;
                d
            })
            .collect();
        let support: Vec<usize> = (0..r).filter(|&j| sigma[j] != 0).collect();
        let k = support.len();
        if k == 0 {
            continue;
        }
        let mut rows: Vec<Vec<f64>> = (0..p)
            .map(|i| support.iter().map(|&j| a[(i, j)]).collect())
            .collect();
        rows.push(support.iter().map(|&j| sigma[j] as f64).collect());
        let mut rhs = vec![0.0; p];
        rhs.push(1.0);
        let sys = DenseMatrix::from_rows(&rows).unwrap();
        let f = svd(&sys).unwrap();
        let top = f.sigma.first().copied().unwrap_or(0.0);
        if f.sigma.iter().filter(|&&v| v > 1e-10 * top).count() < k {
            continue;
        }
        let coords = f.u.leading_columns(k).t_matvec(&rhs);
        let scaled: Vec<f64> = coords.iter().zip(&f.sigma).map(|(c, s)| c / s).collect();
        let xs = f.v.leading_columns(k).matvec(&scaled);
        let resid = sys.matvec(&xs);
        if resid.iter().zip(&rhs).any(|(a, b)| (a - b).abs() > 1e-9) {
            continue;
        }
        if support
            .iter()
            .zip(&xs)
            .any(|(&j, &x)| sigma[j] as f64 * x < -1e-12)
        {
            continue;
        }
        best = best.max(support.iter().zip(&xs).map(|(&j, &x)| t[j] * x).sum());
    }
    best
}
