use super::gradient::{grad_beam, PhaseModel};
use super::line_search::{armijo_step, project_power, ArmijoOutcome};
use super::pdca::PdcaConfig;
use crate::channel::{EveStatistics, ScenarioChannels};
use crate::error::Result;
use crate::objective::{al_penalty, beam_quadratics, DualState, Noise};
use crate::CVec;

/// Line-search summary for one block update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    pub accepted: bool,
    pub value_before: f64,
    pub value_after: f64,
    pub grad_norm_sq: f64,
    /// Armijo constant the step was tested against.
    pub c: f64,
    pub trials: usize,
}

impl StepRecord {
    fn from_outcome(out: &ArmijoOutcome, c: f64) -> Self {
        Self {
            alpha: out.alpha,
            accepted: out.accepted,
            value_before: out.value_before,
            value_after: out.value_after,
            grad_norm_sq: out.grad_norm_sq,
            c,
            trials: out.trials,
        }
    }

    /// `value_after ≤ value_before − c α ‖grad‖²`, checked verbatim.
    pub fn satisfies_armijo(&self) -> bool {
        self.value_after <= self.value_before - self.c * self.alpha * self.grad_norm_sq
    }
}

/// One cycle of the block loop: a phase step followed by a beam step.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerStep {
    pub phase: StepRecord,
    pub beam: StepRecord,
    /// Log-free augmented Lagrangian after the cycle, minimisation sense.
    pub al: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub phi: CVec,
    pub w: CVec,
    /// Minimisation-sense AL at the starting point.
    pub al_start: f64,
    pub steps: Vec<InnerStep>,
    /// Stopped on the `ε′` test.
    pub converged: bool,
    /// Both line searches failed in the final cycle.
    pub stalled: bool,
}

impl InnerResult {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Block loop for a fixed `(ϱ, λ)`: an Armijo gradient step on `φ` followed
/// by an Armijo projected-gradient step on `w`, repeated until the AL changes
/// by at most `eps_inner`, both searches fail, or `max_inner` cycles run.
#[allow(clippy::too_many_arguments)]
pub fn bsca_inner(
    phi0: &CVec,
    w0: &CVec,
    dual: &DualState,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    p_max: f64,
    cfg: &PdcaConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    dual.validate()?;
    let mut phi = phi0.clone();
    let mut w = w0.clone();
    let phase_ls = cfg.phase_line_search();
    let beam_ls = cfg.beam_line_search();
    let project = |v: CVec| project_power(v, p_max);

    let al_start = -PhaseModel::new(&w, sc, es, noise).ratio(&phi) + al_penalty(&phi, dual);
    let mut al_prev = al_start;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut stalled = false;

    for _ in 0..cfg.max_inner {
        let model = PhaseModel::new(&w, sc, es, noise);
        let grad = model.gradient(&phi, dual);
        let phase = armijo_step(|p| model.value(p, dual), &phi, &grad, &phase_ls, None);
        phi = phase.x.clone();

        let bq = beam_quadratics(&phi, sc, es, noise);
        let grad = grad_beam(&w, &bq);
        let beam = armijo_step(|x| -bq.ratio(x), &w, &grad, &beam_ls, Some(&project));
        w = beam.x.clone();

        // g(w) is the negated ratio at the new (φ, w)
        let al = beam.value_after + al_penalty(&phi, dual);
        steps.push(InnerStep {
            phase: StepRecord::from_outcome(&phase, phase_ls.c),
            beam: StepRecord::from_outcome(&beam, beam_ls.c),
            al,
        });
        if !phase.accepted && !beam.accepted {
            stalled = true;
            break;
        }
        if (al - al_prev).abs() <= cfg.eps_inner {
            converged = true;
            break;
        }
        al_prev = al;
    }
    Ok(InnerResult { phi, w, al_start, steps, converged, stalled })
}
