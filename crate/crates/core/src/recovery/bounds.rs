use crate::error::{arg, Result};

fn check_gamma_hat(gamma_hat: f64) -> Result<()> {
    if !(0.0..0.5).contains(&gamma_hat) {
        return arg(format!(
            "gamma_hat must lie in [0, 1/2) for the bound to apply, got {gamma_hat}"
        ));
    }
    Ok(())
}

fn check_slack(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return arg(format!("{name} must be finite and >= 0, got {v}"));
    }
    Ok(())
}

/// `‖X − W‖_∗ ≤ (υ + 2‖W − W^s‖_∗) / (1 − 2γ̂)` for a υ-optimal `X` of the
/// equality-constrained problem.
pub fn error_bound_noiseless(gamma_hat_s: f64, upsilon: f64, tail: f64) -> Result<f64> {
    check_gamma_hat(gamma_hat_s)?;
    check_slack("upsilon", upsilon)?;
    check_slack("tail", tail)?;
    Ok((upsilon + 2.0 * tail) / (1.0 - 2.0 * gamma_hat_s))
}

/// `‖X − W‖_∗ ≤ (2β(ϑ + ε) + 2‖W − W^s‖_∗ + υ) / (1 − 2γ̂)` for a
/// `(ϑ, υ)`-optimal `X` of the ε-constrained problem, with γ̂ taken at β.
pub fn error_bound_noisy(
    gamma_hat: f64,
    beta: f64,
    theta: f64,
    eps: f64,
    tail: f64,
    upsilon: f64,
) -> Result<f64> {
    check_gamma_hat(gamma_hat)?;
    check_slack("beta", beta)?;
    check_slack("theta", theta)?;
    check_slack("eps", eps)?;
    check_slack("tail", tail)?;
    check_slack("upsilon", upsilon)?;
    Ok((2.0 * beta * (theta + eps) + 2.0 * tail + upsilon) / (1.0 - 2.0 * gamma_hat))
}
