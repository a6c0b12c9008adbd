//! Reference schemes.
//!
//! The power-constrained ratio `max_{‖w‖² ≤ P} (wᴴAw + 1)/(wᴴBw + 1)` is turned
//! into an unconstrained generalized Rayleigh quotient: along any direction
//! `v` the ratio `(t²vᴴAv + 1)/(t²vᴴBv + 1)` is monotone in `t²`, increasing
//! exactly when `vᴴAv > vᴴBv`. So the maximiser is either `w = 0` or lies on
//! `‖w‖² = P`, where `1 = wᴴw/P` and the ratio equals
//! `wᴴ(A + I/P)w / wᴴ(B + I/P)w`. The dominant generalized eigenvector of
//! that pencil, scaled to `√P`, is optimal whenever its ratio exceeds one.

use std::fmt;
use std::str::FromStr;

use crate::channel::{EveStatistics, ScenarioChannels};
use crate::error::{domain, Error, Result};
use crate::objective::{beam_quadratics, lesr, BeamQuadratics, Noise, Solution};
use crate::solver::{initial_point, PhaseModel};
use crate::{CMat, CVec, C64};

pub const GEN_EIG_TOL: f64 = 1e-10;
pub const GEN_EIG_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Pdca,
    NoRis,
    /// Element-wise alternating optimisation. Stands in for the SDR-based AO
    /// scheme, which is not implemented.
    AoElementwise,
    RandomMrt,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Pdca, Scheme::NoRis, Scheme::AoElementwise, Scheme::RandomMrt];

    pub fn id(&self) -> &'static str {
        match self {
            Scheme::Pdca => "pdca",
            Scheme::NoRis => "no_ris",
            Scheme::AoElementwise => "ao_ew",
            Scheme::RandomMrt => "random_mrt",
        }
    }

    /// Label used in reports and figures.
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Pdca => "PDCA",
            Scheme::NoRis => "Opt w/o RIS",
            Scheme::AoElementwise => "AO-ew",
            Scheme::RandomMrt => "Random phase + MRT",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected pdca, no_ris, ao_ew or random_mrt)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub scheme: Scheme,
    pub solution: Solution,
    pub iterations: usize,
    /// Bound value after each round, where the scheme iterates.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenEigen {
    /// Unit-norm maximiser of `vᴴAv / vᴴBv`.
    pub vector: CVec,
    pub value: f64,
    pub iterations: usize,
    /// The top eigenvalue is (numerically) repeated; any vector in the
    /// eigenspace is optimal.
    pub degenerate: bool,
}

fn power_iteration(c: &CMat, start: CVec) -> (CVec, f64, usize) {
    let mut y = start.normalize();
    let mut value = y.dotc(&(c * &y)).re;
    for it in 1..=GEN_EIG_MAX_ITER {
        let next = c * &y;
        let norm = next.norm();
        if norm == 0.0 {
            return (y, 0.0, it);
        }
        y = next / C64::from(norm);
        let updated = y.dotc(&(c * &y)).re;
        if (updated - value).abs() <= GEN_EIG_TOL * updated.abs() {
            return (y, updated, it);
        }
        value = updated;
    }
    (y, value, GEN_EIG_MAX_ITER)
}

fn largest_column(c: &CMat) -> Option<CVec> {
    let (idx, norm) = c
        .column_iter()
        .enumerate()
        .map(|(i, col)| (i, col.norm()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    (norm > 0.0).then(|| c.column(idx).into_owned())
}

/// Dominant generalized eigenvector of the pencil `(A, B)`.
///
/// With `B = LLᴴ`, power iteration runs on the Hermitian `L⁻¹AL⁻ᴴ` and the
/// result is mapped back through `L⁻ᴴ`.
pub fn dominant_gen_eigvec(a: &CMat, b: &CMat) -> Result<GenEigen> {
    let m = a.nrows();
    if a.ncols() != m || b.nrows() != m || b.ncols() != m {
        return Err(Error::Dimension("pencil matrices must be square and of equal size".into()));
    }
    if m == 0 {
        return domain("empty pencil");
    }
    let Some(chol) = b.clone().cholesky() else {
        return domain("B is not positive definite");
    };
    let l = chol.l();
    // complex Cholesky takes square roots of negative pivots without failing
    if l.diagonal().iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re) {
        return domain("B is not positive definite");
    }
    let la = l.solve_lower_triangular(a).ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&la.adjoint())
        .ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
    let c = (&c + c.adjoint()) * C64::from(0.5);

    let Some(start) = largest_column(&c) else {
        // A = 0: every direction gives zero
        let mut e = CVec::zeros(m);
        e[0] = C64::new(1.0, 0.0);
        let v = l.adjoint().solve_upper_triangular(&e).unwrap_or(e).normalize();
        return Ok(GenEigen { vector: v, value: 0.0, iterations: 0, degenerate: m > 1 });
    };
    let (y, top, iterations) = power_iteration(&c, start);

    let degenerate = m > 1 && {
        let deflated = &c - &y * y.adjoint() * C64::from(top);
        largest_column(&deflated).is_some_and(|s| power_iteration(&deflated, s).1 >= top * (1.0 - 1e-12))
    };

    let v = l.adjoint().solve_upper_triangular(&y).ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
    let v = v.normalize();
    let value = v.dotc(&(a * &v)).re / v.dotc(&(b * &v)).re;
    Ok(GenEigen { vector: v, value, iterations, degenerate })
}

/// Maximiser of `(wᴴAw + 1)/(wᴴBw + 1)` over `‖w‖² ≤ p_max`.
pub fn optimal_beam(bq: &BeamQuadratics, p_max: f64) -> Result<(CVec, usize)> {
    let m = bq.a.nrows();
    let shift = CMat::identity(m, m) * C64::from(1.0 / p_max);
    let eig = dominant_gen_eigvec(&(&bq.a + &shift), &(&bq.b + &shift))?;
    let w = eig.vector * C64::from(p_max.sqrt());
    if bq.ratio(&w) > 1.0 {
        Ok((w, eig.iterations))
    } else {
        Ok((CVec::zeros(m), eig.iterations))
    }
}

/// Optimal beamformer with the RIS switched off (`φ = 0`).
pub fn no_ris_beamformer(sc: &ScenarioChannels, es: &EveStatistics, noise: Noise, p_max: f64) -> Result<BaselineResult> {
    let phi = CVec::zeros(sc.elements());
    let bq = beam_quadratics(&phi, sc, es, noise);
    let (w, iterations) = optimal_beam(&bq, p_max)?;
    let value = lesr(&phi, &w, sc, es, noise);
    Ok(BaselineResult {
        scheme: Scheme::NoRis,
        solution: Solution { phi, w, lesr: value },
        iterations,
        history: vec![value],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    /// Phase candidates per element, uniformly spaced on `[0, 2π)`.
    pub grid_points: usize,
    /// Stop when a round improves the bound by at most this much.
    pub tol: f64,
    pub max_rounds: usize,
    /// Seed of the random initial phases.
    pub seed: u64,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self { grid_points: 360, tol: 1e-4, max_rounds: 50, seed: 0 }
    }
}

/// Element-wise alternating optimisation: closed-form beam step, then one
/// cyclic pass of per-element grid searches on the unit circle.
pub fn ao_elementwise(
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    p_max: f64,
    cfg: &AoConfig,
) -> Result<BaselineResult> {
    if cfg.grid_points == 0 || cfg.max_rounds == 0 {
        return Err(Error::Config("AO grid and round count must be positive".into()));
    }
    let candidates: Vec<C64> = (0..cfg.grid_points)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / cfg.grid_points as f64))
        .collect();
    let (mut phi, w0) = initial_point(sc, p_max, cfg.seed);
    let mut w = best_of(&phi, w0, sc, es, noise, p_max)?;
    let mut value = lesr(&phi, &w, sc, es, noise);
    let mut history = vec![value];
    let mut rounds = 0;

    for _ in 0..cfg.max_rounds {
        rounds += 1;
        if !phi.is_empty() {
            PhaseModel::new(&w, sc, es, noise).coordinate_sweep(&mut phi, &candidates);
        }
        w = best_of(&phi, w, sc, es, noise, p_max)?;
        let next = lesr(&phi, &w, sc, es, noise);
        history.push(next);
        let gain = next - value;
        value = next;
        if gain <= cfg.tol {
            break;
        }
    }
    Ok(BaselineResult {
        scheme: Scheme::AoElementwise,
        solution: Solution { phi, w, lesr: value },
        iterations: rounds,
        history,
    })
}

/// Full-power dominant beam for `phi`, keeping `incumbent` if it is at least
/// as good. The zero beam is never selected here: it would make every phase
/// equally good and stall the phase step.
fn best_of(phi: &CVec, incumbent: CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise, p_max: f64) -> Result<CVec> {
    let bq = beam_quadratics(phi, sc, es, noise);
    let m = bq.a.nrows();
    let shift = CMat::identity(m, m) * C64::from(1.0 / p_max);
    let eig = dominant_gen_eigvec(&(&bq.a + &shift), &(&bq.b + &shift))?;
    let w = eig.vector * C64::from(p_max.sqrt());
    Ok(if bq.ratio(&w) >= bq.ratio(&incumbent) { w } else { incumbent })
}

/// Uniform random phases with a full-power matched filter.
pub fn random_phase_mrt(sc: &ScenarioChannels, es: &EveStatistics, noise: Noise, seed: u64, p_max: f64) -> BaselineResult {
    let (phi, w) = initial_point(sc, p_max, seed);
    let value = lesr(&phi, &w, sc, es, noise);
    BaselineResult { scheme: Scheme::RandomMrt, solution: Solution { phi, w, lesr: value }, iterations: 0, history: vec![value] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_scenario, eve_second_moments, FadingStats, Geometry};
    use crate::objective::modulus_violation;
    use crate::rng::{complex_normal, stream_rng, streams};

    fn hermitian_psd(m: usize, seed: u64, ridge: f64) -> CMat {
        let mut rng = stream_rng(seed, streams::TEST, 0);
        let x = CMat::from_fn(m, m, |_, _| complex_normal(&mut rng));
        &x * x.adjoint() + CMat::identity(m, m) * C64::from(ridge)
    }

    fn setup(nz: usize, seed: u64) -> (ScenarioChannels, EveStatistics, Noise) {
        let geom = Geometry::reference(nz);
        let stats = FadingStats::reference();
        let sc = build_scenario(&geom, &stats, seed).unwrap();
        let es = eve_second_moments(&geom, &stats).unwrap();
        (sc, es, Noise { user: stats.noise_user, eve: stats.noise_eve })
    }

    const P_MAX: f64 = 3.1622776601683795e-3;

    #[test]
    fn diagonal_pencil() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(2.0), C64::from(1.0)]));
        let b = CMat::identity(2, 2);
        let eig = dominant_gen_eigvec(&a, &b).unwrap();
        assert!((eig.value - 2.0).abs() < 1e-12);
        assert!((eig.vector[0].norm() - 1.0).abs() < 1e-9);
        assert!(!eig.degenerate);
    }

    #[test]
    fn identical_pencil_is_degenerate() {
        let a = hermitian_psd(3, 1, 1.0);
        let eig = dominant_gen_eigvec(&a, &a).unwrap();
        assert!((eig.value - 1.0).abs() < 1e-12);
        assert!(eig.degenerate);
    }

    #[test]
    fn rejects_indefinite_b() {
        let a = CMat::identity(2, 2);
        let b = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(1.0), C64::from(-1.0)]));
        assert!(matches!(dominant_gen_eigvec(&a, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_eigendecomposition() {
        for seed in 0..20 {
            let a = hermitian_psd(4, seed, 0.0);
            let b = hermitian_psd(4, seed + 1000, 0.5);
            let eig = dominant_gen_eigvec(&a, &b).unwrap();
            let l = b.clone().cholesky().unwrap().l();
            let li = l.clone().try_inverse().unwrap();
            let c = &li * &a * li.adjoint();
            let top = nalgebra::SymmetricEigen::new(c).eigenvalues.max();
            assert!((eig.value - top).abs() <= 1e-9 * top, "{} vs {}", eig.value, top);
        }
    }

    #[test]
    fn single_antenna_uses_full_power() {
        let geom = Geometry { antennas: 1, ..Geometry::reference(1) };
        let stats = FadingStats::reference();
        let sc = build_scenario(&geom, &stats, 3).unwrap();
        let es = eve_second_moments(&geom, &stats).unwrap();
        let noise = Noise { user: stats.noise_user, eve: stats.noise_eve };
        let res = no_ris_beamformer(&sc, &es, noise, P_MAX).unwrap();
        let a = sc.h_au[0].norm_sqr() / noise.user;
        let b = es.g_a[(0, 0)].re / noise.eve;
        let want = if a > b { ((P_MAX * a + 1.0) / (P_MAX * b + 1.0)).log2() } else { 0.0 };
        assert!((res.solution.lesr - want).abs() < 1e-12);
        if a > b {
            assert!((res.solution.w.norm_squared() - P_MAX).abs() < 1e-15);
        }
    }

    #[test]
    fn silent_eve_direct_link_gives_matched_filter() {
        let (sc, mut es, noise) = setup(1, 4);
        es.g_a = CMat::zeros(8, 8);
        let res = no_ris_beamformer(&sc, &es, noise, P_MAX).unwrap();
        let w = &res.solution.w;
        let align = sc.h_au.dotc(w).norm() / (sc.h_au.norm() * w.norm());
        assert!((align - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_ris_beam_beats_perturbations() {
        let (sc, es, noise) = setup(1, 5);
        let res = no_ris_beamformer(&sc, &es, noise, P_MAX).unwrap();
        let bq = beam_quadratics(&CVec::zeros(16), &sc, &es, noise);
        let best = bq.ratio(&res.solution.w);
        let mut rng = stream_rng(5, streams::TEST, 1);
        for k in 0..100 {
            let dir = CVec::from_fn(8, |_, _| complex_normal(&mut rng));
            let scale = 10f64.powf(-3.0 + 3.0 * k as f64 / 100.0);
            let w = crate::solver::project_power(&res.solution.w + dir * C64::from(scale * P_MAX.sqrt()), P_MAX);
            assert!(bq.ratio(&w) <= best + 1e-9 * best);
        }
    }

    #[test]
    fn ao_without_ris_equals_no_ris() {
        let (sc, es, noise) = setup(0, 6);
        let ao = ao_elementwise(&sc, &es, noise, P_MAX, &AoConfig::default()).unwrap();
        let nr = no_ris_beamformer(&sc, &es, noise, P_MAX).unwrap();
        assert!((ao.solution.lesr - nr.solution.lesr).abs() < 1e-9);
    }

    #[test]
    fn ao_history_is_monotone_and_feasible() {
        for seed in 0..5 {
            let (sc, es, noise) = setup(2, seed);
            let ao = ao_elementwise(&sc, &es, noise, P_MAX, &AoConfig { seed, ..AoConfig::default() }).unwrap();
            assert!(ao.history.windows(2).all(|p| p[1] >= p[0]), "{:?}", ao.history);
            assert!(modulus_violation(&ao.solution.phi) <= 1e-12);
            assert!(ao.solution.w.norm_squared() <= P_MAX + 1e-9);
        }
    }

    #[test]
    fn random_mrt_is_reproducible_at_full_power() {
        let (sc, es, noise) = setup(2, 7);
        let a = random_phase_mrt(&sc, &es, noise, 3, P_MAX);
        let b = random_phase_mrt(&sc, &es, noise, 3, P_MAX);
        assert_eq!(a, b);
        assert!((a.solution.w.norm_squared() - P_MAX).abs() <= 1e-15);
        assert!(modulus_violation(&a.solution.phi) <= 1e-12);
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
        }
        assert!("sdr".parse::<Scheme>().is_err());
    }
}
