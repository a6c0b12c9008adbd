use crate::{CVec, C64};

/// Backtracking parameters for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub alpha_ini: f64,
    /// Step shrink factor in `(0, 1)`.
    pub shrink: f64,
    /// Sufficient-decrease constant in `(0, 1)`.
    pub c: f64,
    pub max_backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoOutcome {
    pub x: CVec,
    /// Last step size tried; the accepted one when `accepted`.
    pub alpha: f64,
    pub accepted: bool,
    pub value_before: f64,
    /// Objective at the returned point.
    pub value_after: f64,
    pub grad_norm_sq: f64,
    pub trials: usize,
}

/// Backtracking line search along `−grad`.
///
/// The step shrinks before every trial, so the first candidate uses
/// `alpha_ini · shrink`. A candidate `x̂ = P(x − α grad)` is accepted once
/// `f(x̂) ≤ f(x) − c α ‖grad‖²`. Non-finite trial values count as failures.
/// When the cap is hit, `x` is returned unchanged with `accepted = false`.
pub fn armijo_step(
    objective: impl Fn(&CVec) -> f64,
    x: &CVec,
    grad: &CVec,
    params: &ArmijoParams,
    projector: Option<&dyn Fn(CVec) -> CVec>,
) -> ArmijoOutcome {
    let value_before = objective(x);
    let grad_norm_sq = grad.norm_squared();
    let mut alpha = params.alpha_ini;
    for trial in 1..=params.max_backtracks {
        alpha *= params.shrink;
        let mut candidate = x - grad * C64::from(alpha);
        if let Some(project) = projector {
            candidate = project(candidate);
        }
        let value = objective(&candidate);
        if value.is_finite() && value <= value_before - params.c * alpha * grad_norm_sq {
            return ArmijoOutcome {
                x: candidate,
                alpha,
                accepted: true,
                value_before,
                value_after: value,
                grad_norm_sq,
                trials: trial,
            };
        }
    }
    ArmijoOutcome {
        x: x.clone(),
        alpha,
        accepted: false,
        value_before,
        value_after: value_before,
        grad_norm_sq,
        trials: params.max_backtracks,
    }
}

/// Euclidean projection onto `{w : ‖w‖² ≤ p_max}`.
pub fn project_power(w: CVec, p_max: f64) -> CVec {
    let norm_sq = w.norm_squared();
    if norm_sq <= p_max {
        w
    } else {
        let scale = (p_max / norm_sq).sqrt();
        w * C64::from(scale)
    }
}
