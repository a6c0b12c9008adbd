//! Experiment configuration.
//!
//! JSON, every field optional (defaults reproduce the reference scenario),
//! unknown keys rejected. Powers are given in dBm and gains in dB; conversion
//! to linear units happens in [`ExperimentConfig::fading`] and
//! [`ExperimentConfig::p_max`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::Scheme;
use crate::channel::{FadingStats, Geometry, PerLink, Point};
use crate::error::{Error, Result};
use crate::objective::Noise;
use crate::solver::PdcaConfig;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Rician K-factor: a non-negative linear number or the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KFactor {
    Linear(f64),
    Named(String),
}

impl KFactor {
    pub fn value(&self) -> Result<f64> {
        match self {
            KFactor::Linear(k) if *k >= 0.0 && k.is_finite() => Ok(*k),
            KFactor::Linear(k) => Err(Error::Config(format!("K-factor must be finite and non-negative, got {k}"))),
            KFactor::Named(s) if s == "inf" => Ok(f64::INFINITY),
            KFactor::Named(s) => Err(Error::Config(format!("K-factor must be a number or \"inf\", got \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub ap: Point,
    pub ris: Point,
    pub user: Point,
    pub eve: Point,
    pub antennas: usize,
    pub ris_ny: usize,
    pub ris_nz: usize,
    pub antenna_spacing: f64,
    pub element_spacing: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = Geometry::reference(2);
        Self {
            ap: g.ap,
            ris: g.ris,
            user: g.user,
            eve: g.eve,
            antennas: g.antennas,
            ris_ny: g.ris_ny,
            ris_nz: g.ris_nz,
            antenna_spacing: g.antenna_spacing,
            element_spacing: g.element_spacing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingConfig {
    /// Path gain at the reference distance, dB.
    pub zeta0_db: f64,
    pub d0: f64,
    pub exponent: PerLink<f64>,
    pub k_factor: PerLink<KFactor>,
    pub noise_user_dbm: f64,
    pub noise_eve_dbm: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        let r = FadingStats::reference();
        let k = |v: f64| if v.is_infinite() { KFactor::Named("inf".into()) } else { KFactor::Linear(v) };
        Self {
            zeta0_db: -30.0,
            d0: r.d0,
            exponent: r.exponent,
            k_factor: PerLink {
                ap_user: k(r.k_factor.ap_user),
                ap_eve: k(r.k_factor.ap_eve),
                ris_user: k(r.k_factor.ris_user),
                ris_eve: k(r.k_factor.ris_eve),
                ap_ris: k(r.k_factor.ap_ris),
            },
            noise_user_dbm: -90.0,
            noise_eve_dbm: -90.0,
        }
    }
}

/// Values visited by each sweep kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepRanges {
    pub power_dbm: Vec<f64>,
    /// Total element counts; each must be a multiple of `ris_ny`.
    pub elements: Vec<usize>,
    pub eve_y: Vec<f64>,
    pub user_y: Vec<f64>,
    pub ris_y: Vec<f64>,
}

impl Default for SweepRanges {
    fn default() -> Self {
        Self {
            power_dbm: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            elements: vec![16, 32, 48],
            eve_y: vec![20.0, 40.0, 55.0, 70.0, 90.0],
            user_y: vec![20.0, 40.0, 60.0, 80.0],
            ris_y: vec![20.0, 40.0, 50.0, 60.0, 80.0],
        }
    }
}

/// Partial [`PdcaConfig`]; absent fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdcaOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_outer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_inner: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1_ini: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2_ini: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_rho1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_rho2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_backtracks: Option<usize>,
}

impl PdcaOverrides {
    pub fn apply(&self, mut cfg: PdcaConfig) -> PdcaConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        set!(rho0, c_rho, eta, eps_outer, eps_inner, alpha1_ini, alpha2_ini, ls_rho1, ls_rho2, ls_c1, ls_c2, max_outer, max_inner, max_backtracks);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub fading: FadingConfig,
    /// Transmit power budget at non-power sweep points, dBm.
    pub p_max_dbm: f64,
    pub sweep: SweepRanges,
    pub schemes: Vec<String>,
    pub n_mc: usize,
    pub n_user_realizations: usize,
    pub seed: u64,
    pub pdca: PdcaOverrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            fading: FadingConfig::default(),
            p_max_dbm: 5.0,
            sweep: SweepRanges::default(),
            schemes: vec!["pdca".into(), "no_ris".into(), "ao_ew".into(), "random_mrt".into()],
            n_mc: 100_000,
            n_user_realizations: 20,
            seed: 0,
            pdca: PdcaOverrides::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn geometry(&self) -> Geometry {
        let g = &self.geometry;
        Geometry {
            ap: g.ap,
            ris: g.ris,
            user: g.user,
            eve: g.eve,
            antennas: g.antennas,
            ris_ny: g.ris_ny,
            ris_nz: g.ris_nz,
            antenna_spacing: g.antenna_spacing,
            element_spacing: g.element_spacing,
        }
    }

    pub fn fading(&self) -> Result<FadingStats> {
        let f = &self.fading;
        let k = &f.k_factor;
        Ok(FadingStats {
            zeta0: db_to_linear(f.zeta0_db),
            d0: f.d0,
            exponent: f.exponent,
            k_factor: PerLink {
                ap_user: k.ap_user.value()?,
                ap_eve: k.ap_eve.value()?,
                ris_user: k.ris_user.value()?,
                ris_eve: k.ris_eve.value()?,
                ap_ris: k.ap_ris.value()?,
            },
            noise_user: dbm_to_watts(f.noise_user_dbm),
            noise_eve: dbm_to_watts(f.noise_eve_dbm),
        })
    }

    pub fn noise(&self) -> Noise {
        Noise { user: dbm_to_watts(self.fading.noise_user_dbm), eve: dbm_to_watts(self.fading.noise_eve_dbm) }
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn pdca_config(&self) -> PdcaConfig {
        self.pdca.apply(PdcaConfig::default())
    }

    pub fn scheme_list(&self) -> Result<Vec<Scheme>> {
        self.schemes.iter().map(|s| s.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.geometry().validate()?;
        self.fading()?.validate()?;
        self.pdca_config().validate()?;
        if !self.p_max_dbm.is_finite() {
            return bad("p_max_dbm must be finite".into());
        }
        if self.n_mc < 2 {
            return bad(format!("n_mc must be at least 2, got {}", self.n_mc));
        }
        if self.n_user_realizations == 0 {
            return bad("n_user_realizations must be positive".into());
        }
        let schemes = self.scheme_list()?;
        if schemes.is_empty() {
            return bad("scheme list is empty".into());
        }
        let mut unique = schemes.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != schemes.len() {
            return bad("scheme list has duplicates".into());
        }
        let s = &self.sweep;
        if s.power_dbm.iter().chain(&s.eve_y).chain(&s.user_y).chain(&s.ris_y).any(|v| !v.is_finite()) {
            return bad("sweep values must be finite".into());
        }
        if let Some(n) = s.elements.iter().find(|&&n| self.geometry.ris_ny == 0 || n % self.geometry.ris_ny != 0) {
            return bad(format!("element count {n} is not a multiple of ris_ny = {}", self.geometry.ris_ny));
        }
        Ok(())
    }
}
