use crate::channel::{EveStatistics, ScenarioChannels};
use crate::objective::{BeamQuadratics, DualState, Noise, PhaseQuadratics, DENOMINATOR_FLOOR};
use crate::{CVec, C64};

/// Gradient of the multiplier-shifted penalty `(1/2ϱ) Σ (|φᵢ| − 1 − ϱλᵢ)²`.
fn penalty_gradient(phi: &CVec, dual: &DualState) -> CVec {
    CVec::from_fn(phi.len(), |i, _| {
        let r = phi[i].norm();
        if r == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            phi[i] * ((r - 1.0 - dual.rho * dual.lambda[i]) / (dual.rho * r))
        }
    })
}

fn penalty_value(phi: &CVec, dual: &DualState) -> f64 {
    phi.iter()
        .zip(dual.lambda.iter())
        .map(|(p, &l)| (p.norm() - 1.0 - dual.rho * l).powi(2))
        .sum::<f64>()
        / (2.0 * dual.rho)
}

/// `2 ∂(−u/v)/∂x* = −2 [du·v − u·dv] / v²` given `du = ∂u/∂x*`, `dv = ∂v/∂x*`.
fn neg_ratio_gradient(u: f64, v: f64, du: &CVec, dv: &CVec) -> CVec {
    (du * C64::from(v) - dv * C64::from(u)) * C64::from(-2.0 / (v * v))
}

/// Gradient of `h` from the dense phase quadratics.
pub fn grad_phase(phi: &CVec, pq: &PhaseQuadratics, dual: &DualState) -> CVec {
    let (u, v) = pq.terms(phi);
    let du = &pq.c * phi + &pq.c1;
    let dv = &pq.d * phi + &pq.d1;
    neg_ratio_gradient(u, v, &du, &dv) + penalty_gradient(phi, dual)
}

/// Gradient of `g(w) = −(wᴴAw + 1)/(wᴴBw + 1)`.
pub fn grad_beam(w: &CVec, bq: &BeamQuadratics) -> CVec {
    let (u, v) = bq.terms(w);
    let du = &bq.a * w;
    let dv = &bq.b * w;
    neg_ratio_gradient(u, v, &du, &dv)
}

/// Structured form of the phase block for a fixed beamformer.
///
/// Uses `C = conj(b) bᵀ/σ_U²` with `b = H_U w`, and the rank-one-plus-identity
/// shape of `G_I`, so evaluating `h` or its gradient costs `O(N)` instead of
/// the `O(N²)` of the dense [`PhaseQuadratics`].
#[derive(Debug, Clone)]
pub struct PhaseModel {
    /// `H_U w`.
    b: CVec,
    /// `h_AUᴴ w`.
    s: C64,
    /// `H_AI w`.
    q: CVec,
    /// RIS–Eve LoS direction.
    los: CVec,
    los_power: f64,
    diffuse_power: f64,
    /// `(wᴴ E[h_ae]) · sqrt(los_power)`, the cross-term coefficient of `h̄ᴴx`.
    cross: C64,
    /// `wᴴ G_A w`.
    direct_eve: f64,
    noise: Noise,
}

impl PhaseModel {
    pub fn new(w: &CVec, sc: &ScenarioChannels, es: &EveStatistics, noise: Noise) -> Self {
        let link = &es.ris_eve;
        let mean_ae = es.ap_eve.mean();
        Self {
            b: &sc.h_u * w,
            s: sc.h_au.dotc(w),
            q: &sc.h_ai * w,
            los: link.los.clone(),
            los_power: link.los_power(),
            diffuse_power: link.diffuse_power(),
            cross: w.dotc(&mean_ae) * link.los_power().sqrt(),
            direct_eve: w.dotc(&(&es.g_a * w)).re,
            noise,
        }
    }

    fn x_and_projection(&self, phi: &CVec) -> (CVec, C64) {
        let x = phi.component_mul(&self.q);
        let t = self.los.dotc(&x);
        (x, t)
    }

    /// `(u, v)`: numerator and denominator of the bound ratio at `phi`.
    pub fn terms(&self, phi: &CVec) -> (f64, f64) {
        let z = self.b.dot(phi) + self.s;
        let u = z.norm_sqr() / self.noise.user + 1.0;
        let (x, t) = self.x_and_projection(phi);
        let eve = self.direct_eve
            + self.los_power * t.norm_sqr()
            + self.diffuse_power * x.norm_squared()
            + 2.0 * (self.cross * t).re;
        let v = (eve / self.noise.eve + 1.0).max(DENOMINATOR_FLOOR);
        (u, v)
    }

    pub fn ratio(&self, phi: &CVec) -> f64 {
        let (u, v) = self.terms(phi);
        u / v
    }

    /// `h(φ)`.
    pub fn value(&self, phi: &CVec, dual: &DualState) -> f64 {
        -self.ratio(phi) + penalty_value(phi, dual)
    }

    /// `2 ∂h/∂φ*`.
    pub fn gradient(&self, phi: &CVec, dual: &DualState) -> CVec {
        let z = self.b.dot(phi) + self.s;
        let u = z.norm_sqr() / self.noise.user + 1.0;
        let (x, t) = self.x_and_projection(phi);
        let eve = self.direct_eve
            + self.los_power * t.norm_sqr()
            + self.diffuse_power * x.norm_squared()
            + 2.0 * (self.cross * t).re;
        let v = (eve / self.noise.eve + 1.0).max(DENOMINATOR_FLOOR);

        let du = self.b.conjugate() * (z / self.noise.user);
        let coef = (t * self.los_power + self.cross.conj()) / self.noise.eve;
        let dv = CVec::from_fn(phi.len(), |j, _| {
            let qc = self.q[j].conj();
            (self.los[j] * qc * coef) + phi[j] * (self.diffuse_power * self.q[j].norm_sqr() / self.noise.eve)
        });
        neg_ratio_gradient(u, v, &du, &dv) + penalty_gradient(phi, dual)
    }
}

impl PhaseModel {
    /// One cyclic pass of exact per-element updates on the unit circle: each
    /// `φᵢ` is replaced by the candidate phase (or the incumbent) that
    /// maximises the penalty-free ratio with the other elements held fixed.
    /// Assumes `|φⱼ| = 1` for all `j`.
    pub fn coordinate_sweep(&self, phi: &mut CVec, candidates: &[C64]) {
        let mut z = self.b.dot(phi) + self.s;
        let x_norm_sq: f64 = self.q.iter().map(|q| q.norm_sqr()).sum();
        let mut t = self.los.dotc(&phi.component_mul(&self.q));
        let fixed_eve = self.direct_eve + self.diffuse_power * x_norm_sq;
        let ratio_at = |z: C64, t: C64| {
            let u = z.norm_sqr() / self.noise.user + 1.0;
            let eve = fixed_eve + self.los_power * t.norm_sqr() + 2.0 * (self.cross * t).re;
            u / (eve / self.noise.eve + 1.0).max(DENOMINATOR_FLOOR)
        };
        for i in 0..phi.len() {
            let b_i = self.b[i];
            let t_i = self.los[i].conj() * self.q[i];
            let z_rest = z - b_i * phi[i];
            let t_rest = t - t_i * phi[i];
            let mut best = phi[i];
            let mut best_ratio = ratio_at(z_rest + b_i * best, t_rest + t_i * best);
            for &e in candidates {
                let r = ratio_at(z_rest + b_i * e, t_rest + t_i * e);
                if r > best_ratio {
                    best_ratio = r;
                    best = e;
                }
            }
            phi[i] = best;
            z = z_rest + b_i * best;
            t = t_rest + t_i * best;
        }
    }
}
