//! Geometry, path loss and Rician channel construction.
//!
//! Conventions: every node sits in the `z = 0` plane. The AP carries a
//! uniform linear array along the y axis; the RIS is a `ny × nz` planar panel
//! whose normal points along x, so with all nodes in one plane the z factor of
//! the planar response is all ones. A direction toward a node at offset
//! `(dx, dy)` has `sin ψ = dy / sqrt(dx² + dy²)` relative to broadside.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::rng::{complex_normal, stream_rng, streams};
use crate::{CMat, CVec, C64};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ap: Point,
    pub ris: Point,
    pub user: Point,
    pub eve: Point,
    /// AP antenna count `M`.
    pub antennas: usize,
    /// RIS columns along y. `ris_ny * ris_nz == 0` means no RIS is deployed.
    pub ris_ny: usize,
    pub ris_nz: usize,
    /// AP element spacing in wavelengths.
    pub antenna_spacing: f64,
    /// RIS element spacing in wavelengths.
    pub element_spacing: f64,
}

impl Geometry {
    pub fn elements(&self) -> usize {
        self.ris_ny * self.ris_nz
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Config("antenna count must be at least 1".into()));
        }
        if !(self.antenna_spacing > 0.0 && self.element_spacing > 0.0) {
            return Err(Error::Config("element spacings must be positive".into()));
        }
        let nodes = [("AP", self.ap), ("RIS", self.ris), ("user", self.user), ("Eve", self.eve)];
        for (name, p) in nodes {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Config(format!("{name} coordinate is not finite")));
            }
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if distance(nodes[i].1, nodes[j].1) <= 0.0 {
                    return Err(Error::Config(format!(
                        "{} and {} are co-located",
                        nodes[i].0, nodes[j].0
                    )));
                }
            }
        }
        Ok(())
    }

    /// The layout used in the reference simulation: AP (5,0), RIS (0,50),
    /// user (5,60), Eve (10,55), 8 antennas and a 16 × `nz` panel.
    pub fn reference(ris_nz: usize) -> Self {
        Self {
            ap: [5.0, 0.0],
            ris: [0.0, 50.0],
            user: [5.0, 60.0],
            eve: [10.0, 55.0],
            antennas: 8,
            ris_ny: 16,
            ris_nz,
            antenna_spacing: 0.5,
            element_spacing: 0.5,
        }
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `sin ψ` of the direction from `from` toward `to`, measured from the x axis.
pub fn direction_sine(from: Point, to: Point) -> f64 {
    (to[1] - from[1]) / distance(from, to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    ApUser,
    ApEve,
    RisUser,
    RisEve,
    ApRis,
}

/// One value per propagation link.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerLink<T> {
    pub ap_user: T,
    pub ap_eve: T,
    pub ris_user: T,
    pub ris_eve: T,
    pub ap_ris: T,
}

impl<T: Copy> PerLink<T> {
    pub fn get(&self, link: Link) -> T {
        match link {
            Link::ApUser => self.ap_user,
            Link::ApEve => self.ap_eve,
            Link::RisUser => self.ris_user,
            Link::RisEve => self.ris_eve,
            Link::ApRis => self.ap_ris,
        }
    }

    pub fn values(&self) -> [T; 5] {
        [self.ap_user, self.ap_eve, self.ris_user, self.ris_eve, self.ap_ris]
    }
}

/// Large-scale and small-scale fading parameters, all in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingStats {
    /// Path gain at the reference distance.
    pub zeta0: f64,
    /// Reference distance in meters.
    pub d0: f64,
    pub exponent: PerLink<f64>,
    /// Rician K-factor; `f64::INFINITY` is pure line of sight.
    pub k_factor: PerLink<f64>,
    pub noise_user: f64,
    pub noise_eve: f64,
}

impl FadingStats {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta0 > 0.0 && self.zeta0.is_finite()) {
            return Err(Error::Config("zeta0 must be positive".into()));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::Config("reference distance must be positive".into()));
        }
        if self.exponent.values().iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("path-loss exponents must be finite and non-negative".into()));
        }
        if self.k_factor.values().iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::Config("K-factors must be non-negative (inf allowed)".into()));
        }
        if !(self.noise_user > 0.0 && self.noise_eve > 0.0) {
            return Err(Error::Config("noise powers must be positive".into()));
        }
        Ok(())
    }

    /// Path gain of `link` at distance `d`.
    pub fn path_gain(&self, link: Link, d: f64) -> Result<f64> {
        pathloss_gain(d, self.exponent.get(link), self.zeta0, self.d0)
    }

    /// The reference parameter set: ζ0 = −30 dB at 1 m, exponents
    /// 3.67 / 2.2 / 2, K = 0 on direct links, 10^0.9 on RIS–terminal links,
    /// ∞ on AP–RIS, and −90 dBm noise at both receivers.
    pub fn reference() -> Self {
        let k_ris = 10f64.powf(0.9);
        Self {
            zeta0: 1e-3,
            d0: 1.0,
            exponent: PerLink { ap_user: 3.67, ap_eve: 3.67, ris_user: 2.2, ris_eve: 2.2, ap_ris: 2.0 },
            k_factor: PerLink {
                ap_user: 0.0,
                ap_eve: 0.0,
                ris_user: k_ris,
                ris_eve: k_ris,
                ap_ris: f64::INFINITY,
            },
            noise_user: 1e-12,
            noise_eve: 1e-12,
        }
    }
}

/// Amplitude weights `(sqrt(K/(K+1)), sqrt(1/(K+1)))` of the LoS and NLoS parts.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

/// `ζ0 (d/d0)^(−α)`.
pub fn pathloss_gain(d: f64, alpha: f64, zeta0: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) {
        return domain(format!("distance must be positive, got {d}"));
    }
    Ok(zeta0 * (d / d0).powf(-alpha))
}

/// Uniform linear array response, entry `m` is `exp(j 2π spacing m sinψ)`.
pub fn ula_response(sin_angle: f64, count: usize, spacing: f64) -> Result<CVec> {
    if !(sin_angle.abs() <= 1.0) {
        return domain(format!("|sin| must not exceed 1, got {sin_angle}"));
    }
    let step = std::f64::consts::TAU * spacing * sin_angle;
    Ok(CVec::from_fn(count, |m, _| C64::from_polar(1.0, step * m as f64)))
}

/// Planar response of an `ny × nz` panel: the y-axis ULA response Kronecker
/// the all-ones z factor. Element index is `iy * nz + iz`.
pub fn upa_response(sin_azimuth: f64, ny: usize, nz: usize, spacing: f64) -> Result<CVec> {
    let along_y = ula_response(sin_azimuth, ny, spacing)?;
    Ok(CVec::from_fn(ny * nz, |i, _| along_y[i / nz]))
}

/// Perfectly known user-side channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioChannels {
    /// AP → user, length `M`.
    pub h_au: CVec,
    /// AP → RIS, `N × M`.
    pub h_ai: CMat,
    /// RIS → user, length `N`.
    pub h_iu: CVec,
    /// Cascaded AP → RIS → user, `diag(conj(h_iu)) · h_ai`.
    pub h_u: CMat,
}

impl ScenarioChannels {
    /// Assembles the channels and derives the cascaded matrix.
    pub fn new(h_au: CVec, h_ai: CMat, h_iu: CVec) -> Result<Self> {
        if h_ai.ncols() != h_au.len() || h_ai.nrows() != h_iu.len() {
            return Err(Error::Dimension(format!(
                "h_ai is {}x{}, expected {}x{}",
                h_ai.nrows(),
                h_ai.ncols(),
                h_iu.len(),
                h_au.len()
            )));
        }
        let h_u = cascade(&h_iu, &h_ai);
        Ok(Self { h_au, h_ai, h_iu, h_u })
    }

    pub fn antennas(&self) -> usize {
        self.h_au.len()
    }

    pub fn elements(&self) -> usize {
        self.h_iu.len()
    }
}

/// `diag(conj(h)) · g`.
pub fn cascade(h: &CVec, g: &CMat) -> CMat {
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| h[i].conj() * g[(i, j)])
}

fn rician_vector<R: Rng>(gain: f64, k: f64, los: &CVec, rng: &mut R) -> CVec {
    let (w_los, w_nlos) = rician_weights(k);
    let amp = gain.sqrt();
    CVec::from_iterator(
        los.len(),
        los.iter().map(|&l| {
            let nlos = if w_nlos > 0.0 { complex_normal(rng) } else { C64::new(0.0, 0.0) };
            (l * w_los + nlos * w_nlos) * amp
        }),
    )
}

/// Draws the user-side channels for `geom`. Each link uses its own random
/// stream and fills entries in index order, so growing the RIS keeps the
/// leading elements of `h_iu` unchanged for a given seed.
pub fn build_scenario(geom: &Geometry, stats: &FadingStats, seed: u64) -> Result<ScenarioChannels> {
    geom.validate()?;
    stats.validate()?;
    let m = geom.antennas;
    let n = geom.elements();

    let d_au = distance(geom.ap, geom.user);
    let los_au = ula_response(direction_sine(geom.ap, geom.user), m, geom.antenna_spacing)?;
    let mut rng = stream_rng(seed, streams::AP_USER, 0);
    let h_au = rician_vector(stats.path_gain(Link::ApUser, d_au)?, stats.k_factor.ap_user, &los_au, &mut rng);

    let d_iu = distance(geom.ris, geom.user);
    let los_iu = upa_response(
        direction_sine(geom.ris, geom.user),
        geom.ris_ny,
        geom.ris_nz,
        geom.element_spacing,
    )?;
    let mut rng = stream_rng(seed, streams::RIS_USER, 0);
    let h_iu = rician_vector(stats.path_gain(Link::RisUser, d_iu)?, stats.k_factor.ris_user, &los_iu, &mut rng);

    let d_ai = distance(geom.ap, geom.ris);
    let arrive = upa_response(
        direction_sine(geom.ris, geom.ap),
        geom.ris_ny,
        geom.ris_nz,
        geom.element_spacing,
    )?;
    let depart = ula_response(direction_sine(geom.ap, geom.ris), m, geom.antenna_spacing)?;
    let (w_los, w_nlos) = rician_weights(stats.k_factor.ap_ris);
    let amp = stats.path_gain(Link::ApRis, d_ai)?.sqrt();
    let mut rng = stream_rng(seed, streams::AP_RIS, 0);
    let mut h_ai = CMat::zeros(n, m);
    // row-major fill so the NLoS draws for element i do not depend on N
    for i in 0..n {
        for j in 0..m {
            let los = arrive[i] * depart[j].conj();
            let nlos = if w_nlos > 0.0 { complex_normal(&mut rng) } else { C64::new(0.0, 0.0) };
            h_ai[(i, j)] = (los * w_los + nlos * w_nlos) * amp;
        }
    }

    ScenarioChannels::new(h_au, h_ai, h_iu)
}

/// Statistics of one eavesdropper link `h = sqrt(g)(sqrt(K/(K+1)) h̄ + sqrt(1/(K+1)) h̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EveLink {
    pub path_gain: f64,
    pub k_factor: f64,
    /// Unit-modulus LoS direction `h̄`.
    pub los: CVec,
}

impl EveLink {
    /// `E[h]`.
    pub fn mean(&self) -> CVec {
        let (w_los, _) = rician_weights(self.k_factor);
        &self.los * C64::from(self.path_gain.sqrt() * w_los)
    }

    /// Weight `g·K/(K+1)` of the rank-one part of `E[h hᴴ]`.
    pub fn los_power(&self) -> f64 {
        let (w_los, _) = rician_weights(self.k_factor);
        self.path_gain * w_los * w_los
    }

    /// Weight `g/(K+1)` of the identity part of `E[h hᴴ]`.
    pub fn diffuse_power(&self) -> f64 {
        let (_, w_nlos) = rician_weights(self.k_factor);
        self.path_gain * w_nlos * w_nlos
    }

    /// Standard deviation scale of each NLoS entry.
    pub fn nlos_amplitude(&self) -> f64 {
        let (_, w_nlos) = rician_weights(self.k_factor);
        self.path_gain.sqrt() * w_nlos
    }

    /// `E[h hᴴ] = g (K/(K+1) h̄h̄ᴴ + 1/(K+1) I)`.
    pub fn second_moment(&self) -> CMat {
        let n = self.los.len();
        let mut g = &self.los * self.los.adjoint() * C64::from(self.los_power());
        for i in 0..n {
            g[(i, i)] += C64::from(self.diffuse_power());
        }
        g
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let mean = self.mean();
        let amp = self.nlos_amplitude();
        CVec::from_iterator(
            mean.len(),
            mean.iter().map(|&mu| if amp > 0.0 { mu + complex_normal(rng) * amp } else { mu }),
        )
    }
}

/// Second-order statistics of the eavesdropper channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EveStatistics {
    pub ap_eve: EveLink,
    pub ris_eve: EveLink,
    /// `E[h_ae h_aeᴴ]`, `M × M`.
    pub g_a: CMat,
    /// `E[h_ie h_ieᴴ]`, `N × N`.
    pub g_i: CMat,
    /// `E[h_ae] E[h_ie]ᴴ`, `M × N`.
    pub g_ai: CMat,
}

impl EveStatistics {
    pub fn new(ap_eve: EveLink, ris_eve: EveLink) -> Self {
        let g_a = ap_eve.second_moment();
        let g_i = ris_eve.second_moment();
        let g_ai = ap_eve.mean() * ris_eve.mean().adjoint();
        Self { ap_eve, ris_eve, g_a, g_i, g_ai }
    }

    pub fn antennas(&self) -> usize {
        self.ap_eve.los.len()
    }

    pub fn elements(&self) -> usize {
        self.ris_eve.los.len()
    }

    /// Draws `(h_ae, h_ie)` from `rng`: first the `M` AP–Eve NLoS entries, then
    /// the `N` RIS–Eve entries.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (CVec, CVec) {
        let h_ae = self.ap_eve.draw(rng);
        let h_ie = self.ris_eve.draw(rng);
        (h_ae, h_ie)
    }
}

/// Eavesdropper statistics implied by the geometry.
pub fn eve_second_moments(geom: &Geometry, stats: &FadingStats) -> Result<EveStatistics> {
    geom.validate()?;
    stats.validate()?;
    let d_ae = distance(geom.ap, geom.eve);
    let d_ie = distance(geom.ris, geom.eve);
    let ap_eve = EveLink {
        path_gain: stats.path_gain(Link::ApEve, d_ae)?,
        k_factor: stats.k_factor.ap_eve,
        los: ula_response(direction_sine(geom.ap, geom.eve), geom.antennas, geom.antenna_spacing)?,
    };
    let ris_eve = EveLink {
        path_gain: stats.path_gain(Link::RisEve, d_ie)?,
        k_factor: stats.k_factor.ris_eve,
        los: upa_response(
            direction_sine(geom.ris, geom.eve),
            geom.ris_ny,
            geom.ris_nz,
            geom.element_spacing,
        )?,
    };
    Ok(EveStatistics::new(ap_eve, ris_eve))
}

/// One reproducible draw of `(h_ae, h_ie)`.
pub fn sample_eve_channels(es: &EveStatistics, seed: u64) -> (CVec, CVec) {
    let mut rng = stream_rng(seed, streams::EVE, 0);
    es.draw(&mut rng)
}
