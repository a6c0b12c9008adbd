use super::bsca::{bsca_inner, InnerResult};
use super::line_search::ArmijoParams;
use crate::channel::{EveStatistics, ScenarioChannels};
use crate::error::{Error, Result};
use crate::objective::{al_objective, lesr, lesr_unclamped, modulus_violation, DualState, Noise, Solution};
use crate::rng::{stream_rng, streams, unit_phase};
use crate::{CVec, C64};

/// Hyperparameters of both loops.
#[derive(Debug, Clone, PartialEq)]
pub struct PdcaConfig {
    /// Initial penalty parameter `ϱ⁰`.
    pub rho0: f64,
    /// Factor applied to `ϱ` when the modulus violation exceeds `eta`.
    pub c_rho: f64,
    /// Constraint-violation tolerance on `‖|φ| − 1‖_∞`.
    pub eta: f64,
    /// Outer tolerance on successive bound values.
    pub eps_outer: f64,
    /// Inner tolerance on successive AL values.
    pub eps_inner: f64,
    pub alpha1_ini: f64,
    pub alpha2_ini: f64,
    pub ls_rho1: f64,
    pub ls_rho2: f64,
    pub ls_c1: f64,
    pub ls_c2: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_backtracks: usize,
}

impl Default for PdcaConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            c_rho: 0.7,
            eta: 1e-3,
            eps_outer: 1e-4,
            eps_inner: 1e-5,
            alpha1_ini: 1.0,
            alpha2_ini: 1.0,
            ls_rho1: 0.5,
            ls_rho2: 0.5,
            ls_c1: 1e-3,
            ls_c2: 1e-3,
            max_outer: 100,
            max_inner: 200,
            max_backtracks: 40,
        }
    }
}

impl PdcaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        let checks = [
            (self.rho0 > 0.0 && self.rho0.is_finite(), "rho0 must be positive"),
            (unit(self.c_rho), "c_rho must lie in (0, 1)"),
            (self.eta > 0.0, "eta must be positive"),
            (self.eps_outer > 0.0, "eps_outer must be positive"),
            (self.eps_inner > 0.0, "eps_inner must be positive"),
            (self.alpha1_ini > 0.0 && self.alpha2_ini > 0.0, "initial step sizes must be positive"),
            (unit(self.ls_rho1) && unit(self.ls_rho2), "shrink factors must lie in (0, 1)"),
            (unit(self.ls_c1) && unit(self.ls_c2), "Armijo constants must lie in (0, 1)"),
            (self.max_outer > 0 && self.max_inner > 0 && self.max_backtracks > 0, "iteration caps must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }

    pub fn phase_line_search(&self) -> ArmijoParams {
        ArmijoParams { alpha_ini: self.alpha1_ini, shrink: self.ls_rho1, c: self.ls_c1, max_backtracks: self.max_backtracks }
    }

    pub fn beam_line_search(&self) -> ArmijoParams {
        ArmijoParams { alpha_ini: self.alpha2_ini, shrink: self.ls_rho2, c: self.ls_c2, max_backtracks: self.max_backtracks }
    }
}

/// Diagnostics for one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    /// Penalty parameter used by this iteration's inner loop.
    pub rho: f64,
    /// Bound at the un-projected iterate.
    pub lesr: f64,
    /// Bound after projecting `φ` onto the unit circle.
    pub lesr_projected: f64,
    /// Log-form augmented Lagrangian at the iterate, maximisation sense.
    pub al: f64,
    pub violation: f64,
    pub multiplier_updated: bool,
    pub inner: InnerResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub outer: Vec<OuterRecord>,
    pub converged: bool,
    /// `max_outer` was reached before the outer test passed.
    pub truncated: bool,
    /// `‖|φ| − 1‖_∞` of the returned iterate before the final projection.
    pub pre_projection_violation: f64,
    /// Bound of the returned iterate before the final projection.
    pub pre_projection_lesr: f64,
}

impl SolveTrace {
    pub fn inner_iterations(&self) -> usize {
        self.outer.iter().map(|o| o.inner.iterations()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub solution: Solution,
    pub trace: SolveTrace,
}

/// Feasible starting point: uniform random phases and the full-power matched
/// filter to the resulting combined user channel.
pub fn initial_point(sc: &ScenarioChannels, p_max: f64, seed: u64) -> (CVec, CVec) {
    let mut rng = stream_rng(seed, streams::PHASE_INIT, 0);
    let phi = CVec::from_fn(sc.elements(), |_, _| unit_phase(&mut rng));
    let a = if phi.is_empty() { sc.h_au.clone() } else { (sc.h_u.transpose() * &phi).conjugate() + &sc.h_au };
    let norm = a.norm();
    let w = if norm > 0.0 { a * C64::from(p_max.sqrt() / norm) } else { CVec::zeros(sc.antennas()) };
    (phi, w)
}

fn project_unit(phi: &CVec) -> CVec {
    phi.map(|p| if p.norm() > 0.0 { p / p.norm() } else { C64::new(1.0, 0.0) })
}

/// Outer loop: solves the AL problem for the current `(ϱ, λ)`, then updates
/// the multipliers when `‖|φ| − 1‖_∞ ≤ η` and otherwise shrinks `ϱ`. Stops once
/// the iterate is within `η` of the unit circle and the bound moved by at most
/// `eps_outer`. The returned phases are projected onto the unit circle and
/// the reported bound is evaluated there.
#[allow(clippy::too_many_arguments)]
pub fn pdca_solve(
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    p_max: f64,
    cfg: &PdcaConfig,
    phi0: &CVec,
    w0: &CVec,
) -> Result<SolveOutput> {
    cfg.validate()?;
    if !(p_max > 0.0) {
        return Err(Error::Domain(format!("p_max must be positive, got {p_max}")));
    }
    let n = sc.elements();
    if phi0.len() != n || w0.len() != sc.antennas() || es.elements() != n || es.antennas() != sc.antennas() {
        return Err(Error::Dimension("initial point does not match the scenario".into()));
    }
    if w0.norm_squared() > p_max * (1.0 + 1e-12) {
        return Err(Error::Domain("initial beamformer exceeds the power budget".into()));
    }
    if modulus_violation(phi0) > 1e-9 {
        return Err(Error::Domain("initial phases must be unit modulus".into()));
    }

    let mut dual = DualState::new(n, cfg.rho0)?;
    let mut phi = phi0.clone();
    let mut w = w0.clone();
    let mut prev_log_ratio = f64::INFINITY;
    let mut trace = SolveTrace::default();
    let mut best: Option<(f64, CVec, CVec)> = None;

    for _ in 0..cfg.max_outer {
        let inner = bsca_inner(&phi, &w, &dual, sc, es, noise, p_max, cfg)?;
        phi = inner.phi.clone();
        w = inner.w.clone();

        let violation = modulus_violation(&phi);
        let value = lesr(&phi, &w, sc, es, noise);
        let value_projected = lesr(&project_unit(&phi), &w, sc, es, noise);
        let al = al_objective(&phi, &w, &dual, sc, es, noise)?;
        let rho = dual.rho;

        let multiplier_updated = violation <= cfg.eta;
        if multiplier_updated {
            for (l, p) in dual.lambda.iter_mut().zip(phi.iter()) {
                *l -= (p.norm() - 1.0) / dual.rho;
            }
        } else {
            dual.rho *= cfg.c_rho;
        }

        if best.as_ref().is_none_or(|(v, _, _)| value_projected > *v) {
            best = Some((value_projected, phi.clone(), w.clone()));
        }
        trace.outer.push(OuterRecord {
            rho,
            lesr: value,
            lesr_projected: value_projected,
            al,
            violation,
            multiplier_updated,
            inner,
        });

        // the clamped bound is flat below zero, so progress is judged on the log-ratio
        let log_ratio = lesr_unclamped(&phi, &w, sc, es, noise);
        if violation <= cfg.eta && (log_ratio - prev_log_ratio).abs() <= cfg.eps_outer {
            trace.converged = true;
            break;
        }
        prev_log_ratio = log_ratio;
    }

    if !trace.converged {
        trace.truncated = true;
        if let Some((_, best_phi, best_w)) = best {
            phi = best_phi;
            w = best_w;
        }
    }
    trace.pre_projection_violation = modulus_violation(&phi);
    trace.pre_projection_lesr = lesr(&phi, &w, sc, es, noise);
    let phi = project_unit(&phi);
    let value = lesr(&phi, &w, sc, es, noise);
    Ok(SolveOutput { solution: Solution { phi, w, lesr: value }, trace })
}
