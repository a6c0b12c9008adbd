//! Rates, the secrecy-rate lower bound and the augmented Lagrangian.
//!
//! Quadratic forms `‖G^{1/2} x‖²` are always evaluated as `xᴴ G x`; no matrix
//! square roots are formed.

use crate::channel::{EveStatistics, ScenarioChannels};
use crate::error::{domain, Result};
use crate::{CMat, CVec, RVec, C64};

/// Floor applied to the bound's denominator before division. Analytically the
/// denominator is at least one.
pub const DENOMINATOR_FLOOR: f64 = 1e-15;

/// Receiver noise powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub user: f64,
    pub eve: f64,
}

/// A beamforming pair with its bound value.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// RIS reflection coefficients.
    pub phi: CVec,
    /// AP transmit beamformer.
    pub w: CVec,
    /// Secrecy-rate lower bound in bps/Hz.
    pub lesr: f64,
}

/// `φᵀ H w + h_dᴴ w` for a cascaded channel `H` and direct channel `h_d`.
fn effective_gain(phi: &CVec, cascaded: &CMat, direct: &CVec, w: &CVec) -> C64 {
    let through_ris = if phi.is_empty() { C64::new(0.0, 0.0) } else { (cascaded * w).dot(phi) };
    through_ris + direct.dotc(w)
}

/// `|(φᵀH_U + h_AUᴴ) w|²`.
pub fn user_gain(phi: &CVec, w: &CVec, sc: &ScenarioChannels) -> f64 {
    effective_gain(phi, &sc.h_u, &sc.h_au, w).norm_sqr()
}

pub fn rate_user(phi: &CVec, w: &CVec, sc: &ScenarioChannels, sigma2_u: f64) -> f64 {
    (1.0 + user_gain(phi, w, sc) / sigma2_u).log2()
}

/// Eavesdropper rate for one channel realisation.
pub fn rate_eve_instant(
    phi: &CVec,
    w: &CVec,
    h_ae: &CVec,
    h_ie: &CVec,
    sc: &ScenarioChannels,
    sigma2_e: f64,
) -> f64 {
    let h_e = crate::channel::cascade(h_ie, &sc.h_ai);
    let gain = effective_gain(phi, &h_e, h_ae, w).norm_sqr();
    (1.0 + gain / sigma2_e).log2()
}

/// `E|(h_IEᴴ Φ H_AI + h_AEᴴ) w|² = wᴴG_A w + xᴴG_I x + 2Re[wᴴG_AI x]`, `x = Φ H_AI w`.
pub fn eve_mean_gain(phi: &CVec, w: &CVec, sc: &ScenarioChannels, es: &EveStatistics) -> f64 {
    let direct = w.dotc(&(&es.g_a * w)).re;
    if phi.is_empty() {
        return direct;
    }
    let x = phi.component_mul(&(&sc.h_ai * w));
    let reflected = x.dotc(&(&es.g_i * &x)).re;
    let cross = w.dotc(&(&es.g_ai * &x)).re;
    direct + reflected + 2.0 * cross
}

/// Numerator and denominator of the bound's ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesrTerms {
    /// `|(φᵀH_U + h_AUᴴ) w|²/σ_U² + 1`.
    pub num: f64,
    /// `E|·|²/σ_E² + 1`, floored at [`DENOMINATOR_FLOOR`].
    pub den: f64,
}

impl LesrTerms {
    pub fn ratio(&self) -> f64 {
        self.num / self.den
    }

    pub fn log_ratio(&self) -> f64 {
        self.ratio().log2()
    }
}

pub fn lesr_terms(
    phi: &CVec,
    w: &CVec,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
) -> LesrTerms {
    let num = user_gain(phi, w, sc) / noise.user + 1.0;
    let den = (eve_mean_gain(phi, w, sc, es) / noise.eve + 1.0).max(DENOMINATOR_FLOOR);
    LesrTerms { num, den }
}

/// `log2(num/den)` without the non-negative clamp.
pub fn lesr_unclamped(phi: &CVec, w: &CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise) -> f64 {
    lesr_terms(phi, w, sc, es, noise).log_ratio()
}

/// Deterministic lower bound on the ergodic secrecy rate, `[log2(num/den)]⁺`.
pub fn lesr(phi: &CVec, w: &CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise) -> f64 {
    lesr_unclamped(phi, w, sc, es, noise).max(0.0)
}

/// The bound as a function of `φ` for fixed `w`:
/// `(φᴴCφ + 2Re[φᴴc1] + c2) / (φᴴDφ + 2Re[φᴴd1] + d2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseQuadratics {
    pub c: CMat,
    pub c1: CVec,
    pub c2: f64,
    pub d: CMat,
    pub d1: CVec,
    pub d2: f64,
}

impl PhaseQuadratics {
    /// `(numerator, denominator)` at `phi`.
    pub fn terms(&self, phi: &CVec) -> (f64, f64) {
        let u = phi.dotc(&(&self.c * phi)).re + 2.0 * phi.dotc(&self.c1).re + self.c2;
        let v = phi.dotc(&(&self.d * phi)).re + 2.0 * phi.dotc(&self.d1).re + self.d2;
        (u, v.max(DENOMINATOR_FLOOR))
    }

    pub fn ratio(&self, phi: &CVec) -> f64 {
        let (u, v) = self.terms(phi);
        u / v
    }
}

pub fn phase_quadratics(w: &CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise) -> PhaseQuadratics {
    // u = conj(H_U w) / σ_U gives C = u uᴴ
    let b_conj = (&sc.h_u * w).conjugate();
    let s = sc.h_au.dotc(w);
    let c = &b_conj * b_conj.adjoint() / C64::from(noise.user);
    let c1 = &b_conj * (s / noise.user);
    let c2 = s.norm_sqr() / noise.user + 1.0;

    let q = &sc.h_ai * w;
    let n = q.len();
    let d = CMat::from_fn(n, n, |i, j| q[i].conj() * es.g_i[(i, j)] * q[j]) / C64::from(noise.eve);
    let gw = es.g_ai.adjoint() * w;
    let d1 = q.conjugate().component_mul(&gw) / C64::from(noise.eve);
    let d2 = w.dotc(&(&es.g_a * w)).re / noise.eve + 1.0;
    PhaseQuadratics { c, c1, c2, d, d1, d2 }
}

/// The bound as a function of `w` for fixed `φ`: `(wᴴAw + 1)/(wᴴBw + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamQuadratics {
    /// `a = (φᵀH_U + h_AUᴴ)ᴴ`.
    pub a_vec: CVec,
    /// `a aᴴ / σ_U²`.
    pub a: CMat,
    /// `(G_A + B1ᴴ G_I B1 + B2 + B2ᴴ) / σ_E²` with `B1 = Φ H_AI`, `B2 = G_AI B1`.
    pub b: CMat,
}

impl BeamQuadratics {
    pub fn terms(&self, w: &CVec) -> (f64, f64) {
        let u = w.dotc(&(&self.a * w)).re + 1.0;
        let v = (w.dotc(&(&self.b * w)).re + 1.0).max(DENOMINATOR_FLOOR);
        (u, v)
    }

    pub fn ratio(&self, w: &CVec) -> f64 {
        let (u, v) = self.terms(w);
        u / v
    }
}

pub fn beam_quadratics(phi: &CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise) -> BeamQuadratics {
    let m = sc.antennas();
    let a_vec = if phi.is_empty() {
        sc.h_au.clone()
    } else {
        (sc.h_u.transpose() * phi).conjugate() + &sc.h_au
    };
    let a = &a_vec * a_vec.adjoint() / C64::from(noise.user);

    let mut b = es.g_a.clone();
    if !phi.is_empty() {
        // B1 = diag(φ) H_AI; with G_I = p_los h̄h̄ᴴ + p_diff I the middle term
        // is p_los (B1ᴴh̄)(B1ᴴh̄)ᴴ + p_diff B1ᴴB1, which avoids the N×N product
        let b1 = CMat::from_fn(phi.len(), m, |i, j| phi[i] * sc.h_ai[(i, j)]);
        let link = &es.ris_eve;
        let proj = b1.adjoint() * &link.los;
        b += &proj * proj.adjoint() * C64::from(link.los_power());
        b += b1.adjoint() * &b1 * C64::from(link.diffuse_power());
        let b2 = &es.g_ai * &b1;
        b += &b2 + b2.adjoint();
    }
    b /= C64::from(noise.eve);
    // exact Hermitian symmetry
    let b = (&b + b.adjoint()) * C64::from(0.5);
    BeamQuadratics { a_vec, a, b }
}

/// Multipliers and penalty parameter of the augmented Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: RVec,
    pub rho: f64,
}

impl DualState {
    pub fn new(elements: usize, rho: f64) -> Result<Self> {
        let dual = Self { lambda: RVec::zeros(elements), rho };
        dual.validate()?;
        Ok(dual)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return domain(format!("penalty parameter must be positive, got {}", self.rho));
        }
        if self.lambda.iter().any(|l| !l.is_finite()) {
            return domain("multipliers must be finite");
        }
        Ok(())
    }
}

/// `‖|φ| − 1‖_∞`.
pub fn modulus_violation(phi: &CVec) -> f64 {
    phi.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
}

/// `(1/2ϱ) Σ [(|φᵢ| − 1 − ϱλᵢ)² − (ϱλᵢ)²]`, the amount subtracted from the
/// bound in the augmented Lagrangian.
pub fn al_penalty(phi: &CVec, dual: &DualState) -> f64 {
    let rho = dual.rho;
    phi.iter()
        .zip(dual.lambda.iter())
        .map(|(p, &l)| {
            let shift = rho * l;
            (p.norm() - 1.0 - shift).powi(2) - shift * shift
        })
        .sum::<f64>()
        / (2.0 * rho)
}

/// Augmented Lagrangian with the logarithm retained, maximisation sense:
/// `log2(num/den) − al_penalty`.
pub fn al_objective(
    phi: &CVec,
    w: &CVec,
    dual: &DualState,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
) -> Result<f64> {
    dual.validate()?;
    Ok(lesr_unclamped(phi, w, sc, es, noise) - al_penalty(phi, dual))
}

/// Log-free augmented Lagrangian, maximisation sense: `num/den − al_penalty`.
/// The inner solver minimises its negation.
pub fn al_objective_ratio(
    phi: &CVec,
    w: &CVec,
    dual: &DualState,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
) -> Result<f64> {
    dual.validate()?;
    Ok(lesr_terms(phi, w, sc, es, noise).ratio() - al_penalty(phi, dual))
}
