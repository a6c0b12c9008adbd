//! Self-check suite behind the `validate` subcommand.
//!
//! Each check compares library output against an independent route to the
//! same number (finite differences, sampling, brute force, an alternative
//! algebraic form) and reports its worst-case margin next to the tolerance.

use std::fmt;

use crate::baselines::{no_ris_beamformer, optimal_beam};
use crate::channel::{build_scenario, eve_second_moments, EveStatistics, Geometry, FadingStats, ScenarioChannels};
use crate::error::Result;
use crate::monte_carlo::{esr_estimate, expectation_oracle};
use crate::objective::{
    beam_quadratics, lesr, lesr_terms, phase_quadratics, user_gain, BeamQuadratics, DualState, Noise,
};
use crate::rng::{complex_normal, stream_rng, streams, unit_phase};
use crate::solver::{grad_beam, grad_phase, initial_point, pdca_solve, PdcaConfig, PhaseModel};
use crate::{CMat, CVec, RVec, C64};

/// Reference power budget (5 dBm) used by all checks.
pub const P_REF: f64 = 3.1622776601683795e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Observed statistic (worst error, pass count, ...).
    pub margin: f64,
    /// Threshold the statistic is compared with.
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<22} observed {:<12.4e} limit {:<12.4e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.margin,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// A scenario with its statistics and noise.
pub struct Instance {
    pub sc: ScenarioChannels,
    pub es: EveStatistics,
    pub noise: Noise,
}

pub fn reference_instance(geom: &Geometry, seed: u64) -> Result<Instance> {
    let stats = FadingStats::reference();
    Ok(Instance {
        sc: build_scenario(geom, &stats, seed)?,
        es: eve_second_moments(geom, &stats)?,
        noise: Noise { user: stats.noise_user, eve: stats.noise_eve },
    })
}

/// Geometry of the two-antenna, two-element brute-force instance.
pub fn toy_geometry() -> Geometry {
    Geometry { antennas: 2, ris_ny: 2, ris_nz: 1, ..Geometry::reference(1) }
}

/// Directional derivative error `|Re⟨g, d⟩ − FD| / (‖g‖‖d‖)`, with the central
/// difference `(f(x + hd) − f(x − hd)) / 2h` and `‖d‖ = ‖x‖`.
pub fn fd_relative_error(f: &dyn Fn(&CVec) -> f64, grad: &CVec, x: &CVec, dir: &CVec, h: f64) -> f64 {
    let d = dir * C64::from(x.norm() / dir.norm());
    let plus = x + &d * C64::from(h);
    let minus = x - &d * C64::from(h);
    let fd = (f(&plus) - f(&minus)) / (2.0 * h);
    let analytic = grad.dotc(&d).re;
    (fd - analytic).abs() / (grad.norm() * d.norm()).max(f64::MIN_POSITIVE)
}

pub type PhaseGradFn<'a> = &'a dyn Fn(&PhaseModel, &CVec, &DualState) -> CVec;
pub type BeamGradFn<'a> = &'a dyn Fn(&CVec, &BeamQuadratics) -> CVec;

/// Random off-circle phases, multipliers and beam for gradient checks.
pub fn gradient_point(m: usize, n: usize, seed: u64) -> (CVec, CVec, DualState) {
    let mut rng = stream_rng(seed, streams::TEST, 7);
    let phi = CVec::from_fn(n, |_, _| unit_phase(&mut rng) * C64::from(0.5 + rand::Rng::random::<f64>(&mut rng)));
    let w = CVec::from_fn(m, |_, _| complex_normal(&mut rng));
    let w = &w * C64::from(P_REF.sqrt() / w.norm());
    let lambda = RVec::from_fn(n, |_, _| complex_normal(&mut rng).re);
    let rho = 0.1 + rand::Rng::random::<f64>(&mut rng);
    (phi, w, DualState { lambda, rho })
}

/// Finite-difference check of both block gradients on `instances` random
/// points of the reference geometry, `directions` directions each.
pub fn gradient_check(
    instances: usize,
    directions: usize,
    phase_grad: PhaseGradFn,
    beam_grad: BeamGradFn,
) -> Result<CheckResult> {
    const TOL: f64 = 1e-5;
    let geom = Geometry::reference(2);
    let mut worst: f64 = 0.0;
    for k in 0..instances as u64 {
        let inst = reference_instance(&geom, 100 + k)?;
        let (phi, w, dual) = gradient_point(geom.antennas, geom.elements(), k);
        let model = PhaseModel::new(&w, &inst.sc, &inst.es, inst.noise);
        let bq = beam_quadratics(&phi, &inst.sc, &inst.es, inst.noise);
        let g_phi = phase_grad(&model, &phi, &dual);
        let g_w = beam_grad(&w, &bq);
        let mut rng = stream_rng(k, streams::TEST, 8);
        for _ in 0..directions {
            let d_phi = CVec::from_fn(phi.len(), |_, _| complex_normal(&mut rng));
            let d_w = CVec::from_fn(w.len(), |_, _| complex_normal(&mut rng));
            worst = worst.max(fd_relative_error(&|p| model.value(p, &dual), &g_phi, &phi, &d_phi, 1e-6));
            worst = worst.max(fd_relative_error(&|x| -bq.ratio(x), &g_w, &w, &d_w, 1e-6));
        }
    }
    Ok(CheckResult {
        name: "gradient-fd",
        passed: worst <= TOL,
        margin: worst,
        tolerance: TOL,
        detail: format!("{instances} instances x {directions} directions, step 1e-6"),
    })
}

/// User gain against the explicit `|h_IUᴴ Φ H_AI w + h_AUᴴ w|²`.
pub fn cascade_check(trials: usize) -> Result<CheckResult> {
    const TOL: f64 = 1e-12;
    let geom = Geometry::reference(2);
    let mut worst: f64 = 0.0;
    for k in 0..trials as u64 {
        let inst = reference_instance(&geom, 200 + k)?;
        let (phi, w, _) = gradient_point(geom.antennas, geom.elements(), k);
        let big_phi = CMat::from_diagonal(&phi);
        let direct = (inst.sc.h_iu.adjoint() * big_phi * &inst.sc.h_ai * &w)[(0, 0)] + inst.sc.h_au.dotc(&w);
        let want = direct.norm_sqr();
        worst = worst.max((user_gain(&phi, &w, &inst.sc) - want).abs() / want);
    }
    Ok(CheckResult { name: "cascade-identity", passed: worst <= TOL, margin: worst, tolerance: TOL, detail: format!("{trials} trials") })
}

/// Three evaluation routes of the bound's numerator and denominator.
pub fn ratio_consistency_check(trials: usize) -> Result<CheckResult> {
    const TOL: f64 = 1e-10;
    let geom = Geometry::reference(2);
    let mut worst: f64 = 0.0;
    for k in 0..trials as u64 {
        let inst = reference_instance(&geom, 300 + k)?;
        let (phi, w, dual) = gradient_point(geom.antennas, geom.elements(), k);
        let t = lesr_terms(&phi, &w, &inst.sc, &inst.es, inst.noise);
        let pq = phase_quadratics(&w, &inst.sc, &inst.es, inst.noise);
        let bq = beam_quadratics(&phi, &inst.sc, &inst.es, inst.noise);
        let model = PhaseModel::new(&w, &inst.sc, &inst.es, inst.noise);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        for (u, v) in [pq.terms(&phi), bq.terms(&w), model.terms(&phi)] {
            worst = worst.max(rel(u, t.num)).max(rel(v, t.den));
        }
        let g_dense = grad_phase(&phi, &pq, &dual);
        let g_fast = model.gradient(&phi, &dual);
        worst = worst.max((g_dense - &g_fast).norm() / g_fast.norm());
    }
    Ok(CheckResult {
        name: "ratio-consistency",
        passed: worst <= TOL,
        margin: worst,
        tolerance: TOL,
        detail: format!("{trials} trials, dense vs structured vs direct"),
    })
}

/// Sample mean of Eve's received power against its second-moment form.
pub fn expectation_check(trials: usize, samples: usize) -> Result<CheckResult> {
    let geom = Geometry::reference(2);
    let need = (0.97 * trials as f64).ceil();
    let mut within = 0usize;
    let mut worst_z: f64 = 0.0;
    for k in 0..trials as u64 {
        let inst = reference_instance(&geom, 400 + k)?;
        let (phi, w, _) = gradient_point(geom.antennas, geom.elements(), 1000 + k);
        let phi = phi.map(|p| p / C64::from(p.norm()));
        let chk = expectation_oracle(&phi, &w, &inst.sc, &inst.es, samples, 5000 + k)?;
        within += (chk.z_score.abs() <= 3.0) as usize;
        worst_z = worst_z.max(chk.z_score.abs());
    }
    Ok(CheckResult {
        name: "expectation-identity",
        passed: within as f64 >= need,
        margin: within as f64,
        tolerance: need,
        detail: format!("trials with |z| <= 3 out of {trials}, n = {samples}, max |z| = {worst_z:.2}"),
    })
}

/// Ergodic rate against the bound, `ESR ≥ LESR − 3·stderr`, on random and
/// optimized solutions. Reports the smallest slack.
pub fn jensen_check(random: usize, optimized: usize, samples: usize) -> Result<CheckResult> {
    let geom = Geometry::reference(2);
    let mut worst = f64::INFINITY;
    let cfg = PdcaConfig::default();
    for k in 0..(random + optimized) as u64 {
        let inst = reference_instance(&geom, 600 + k)?;
        let (mut phi, mut w) = initial_point(&inst.sc, P_REF, k);
        if k as usize >= random {
            let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &cfg, &phi, &w)?;
            phi = out.solution.phi;
            w = out.solution.w;
        }
        let bound = lesr(&phi, &w, &inst.sc, &inst.es, inst.noise);
        let est = esr_estimate(&phi, &w, &inst.sc, &inst.es, inst.noise, samples, 7000 + k)?;
        worst = worst.min(est.mean - bound + 3.0 * est.stderr);
    }
    Ok(CheckResult {
        name: "jensen-bound",
        passed: worst >= 0.0,
        margin: worst,
        tolerance: 0.0,
        detail: format!("min(ESR - LESR + 3 stderr), {random} random + {optimized} optimized, n = {samples}"),
    })
}

/// Best bound over a `grid × grid` phase grid, each point with its
/// closed-form beam.
pub fn toy_grid_optimum(inst: &Instance, grid: usize, p_max: f64) -> Result<f64> {
    let phases: Vec<C64> =
        (0..grid).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / grid as f64)).collect();
    let mut best: f64 = 0.0;
    for a in &phases {
        for b in &phases {
            let phi = CVec::from_vec(vec![*a, *b]);
            let bq = beam_quadratics(&phi, &inst.sc, &inst.es, inst.noise);
            let (w, _) = optimal_beam(&bq, p_max)?;
            best = best.max(lesr(&phi, &w, &inst.sc, &inst.es, inst.noise));
        }
    }
    Ok(best)
}

/// PDCA against brute force on the two-antenna, two-element instance.
pub fn toy_grid_check(seeds: usize, grid: usize) -> Result<CheckResult> {
    let cfg = PdcaConfig::default();
    let need = (0.9 * seeds as f64).ceil();
    let mut hits = 0usize;
    for seed in 0..seeds as u64 {
        let inst = reference_instance(&toy_geometry(), seed)?;
        let (phi0, w0) = initial_point(&inst.sc, P_REF, seed);
        let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &cfg, &phi0, &w0)?;
        let opt = toy_grid_optimum(&inst, grid, P_REF)?;
        hits += (out.solution.lesr >= 0.98 * opt) as usize;
    }
    Ok(CheckResult {
        name: "toy-grid-optimality",
        passed: hits as f64 >= need,
        margin: hits as f64,
        tolerance: need,
        detail: format!("seeds with LESR >= 0.98 x grid optimum out of {seeds}, grid {grid}^2"),
    })
}

/// Without RIS elements PDCA must reach the closed-form beamformer.
pub fn no_ris_check(seeds: usize) -> Result<CheckResult> {
    const TOL: f64 = 1e-4;
    let cfg = PdcaConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..seeds as u64 {
        let inst = reference_instance(&Geometry::reference(0), 800 + seed)?;
        let (phi0, w0) = initial_point(&inst.sc, P_REF, seed);
        let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &cfg, &phi0, &w0)?;
        let nr = no_ris_beamformer(&inst.sc, &inst.es, inst.noise, P_REF)?;
        worst = worst.max((out.solution.lesr - nr.solution.lesr).abs());
    }
    Ok(CheckResult {
        name: "no-ris-agreement",
        passed: worst <= TOL,
        margin: worst,
        tolerance: TOL,
        detail: format!("|PDCA - closed form| in bps/Hz over {seeds} seeds"),
    })
}

/// Runs every check; `fast` shrinks sample counts and grids.
pub fn run_validation(fast: bool) -> Result<ValidationReport> {
    let phase: PhaseGradFn = &|m, p, d| m.gradient(p, d);
    let beam: BeamGradFn = &|w, bq| grad_beam(w, bq);
    let checks = if fast {
        vec![
            gradient_check(5, 5, phase, beam)?,
            cascade_check(10)?,
            ratio_consistency_check(10)?,
            expectation_check(20, 10_000)?,
            jensen_check(3, 2, 10_000)?,
            toy_grid_check(10, 180)?,
            no_ris_check(3)?,
        ]
    } else {
        vec![
            gradient_check(20, 10, phase, beam)?,
            cascade_check(50)?,
            ratio_consistency_check(50)?,
            expectation_check(100, 100_000)?,
            jensen_check(10, 10, 20_000)?,
            toy_grid_check(20, 720)?,
            no_ris_check(10)?,
        ]
    };
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_check_passes_and_catches_sign_flip() {
        let phase: PhaseGradFn = &|m, p, d| m.gradient(p, d);
        let beam: BeamGradFn = &|w, bq| grad_beam(w, bq);
        assert!(gradient_check(2, 3, phase, beam).unwrap().passed);

        let flipped_phase: PhaseGradFn = &|m, p, d| -m.gradient(p, d);
        assert!(!gradient_check(2, 3, flipped_phase, beam).unwrap().passed);
        let flipped_beam: BeamGradFn = &|w, bq| -grad_beam(w, bq);
        assert!(!gradient_check(2, 3, phase, flipped_beam).unwrap().passed);
    }

    #[test]
    fn cheap_checks_pass() {
        assert!(cascade_check(3).unwrap().passed);
        assert!(ratio_consistency_check(3).unwrap().passed);
        assert!(no_ris_check(2).unwrap().passed);
    }

    #[test]
    fn report_lists_every_check_with_limits() {
        let report = ValidationReport {
            checks: vec![
                CheckResult { name: "a", passed: true, margin: 1e-9, tolerance: 1e-5, detail: "x".into() },
                CheckResult { name: "b", passed: false, margin: 3.0, tolerance: 2.0, detail: "y".into() },
            ],
        };
        let text = report.to_string();
        assert!(text.contains("[PASS] a") && text.contains("[FAIL] b") && text.contains("limit"));
        assert!(!report.passed());
    }
}
