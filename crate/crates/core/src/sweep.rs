//! Parameter sweeps, single solves and their CSV output.
//!
//! Every sweep point reuses the same user-channel seeds and the same
//! Monte Carlo seeds (common random numbers), so differences between points
//! reflect the swept parameter rather than fresh fading.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::baselines::{ao_elementwise, no_ris_beamformer, random_phase_mrt, AoConfig, Scheme};
use crate::channel::{build_scenario, eve_second_moments, EveStatistics, Geometry, ScenarioChannels};
use crate::config::{dbm_to_watts, ExperimentConfig};
use crate::error::{Error, Result};
use crate::monte_carlo::{esr_estimate, EsrEstimate};
use crate::objective::{Noise, Solution};
use crate::rng::derive_seed;
use crate::solver::{initial_point, pdca_solve, PdcaConfig, SolveTrace};

/// Bumped whenever the sweep CSV columns change.
pub const SWEEP_SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: [&str; 16] = [
    "schema_version",
    "kind",
    "point",
    "p_max_dbm",
    "elements",
    "eve_y",
    "user_y",
    "ris_y",
    "scheme",
    "seed",
    "n_realizations",
    "n_mc",
    "lesr",
    "esr_mean",
    "esr_stderr",
    "iterations",
];

pub const TRACE_HEADER: [&str; 12] = [
    "outer",
    "inner",
    "rho",
    "al",
    "phase_alpha",
    "phase_accepted",
    "beam_alpha",
    "beam_accepted",
    "lesr",
    "lesr_projected",
    "violation",
    "multiplier_updated",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    Power,
    Elements,
    EveY,
    UserY,
    RisY,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] = [SweepKind::Power, SweepKind::Elements, SweepKind::EveY, SweepKind::UserY, SweepKind::RisY];

    pub fn id(&self) -> &'static str {
        match self {
            SweepKind::Power => "power",
            SweepKind::Elements => "elements",
            SweepKind::EveY => "eve-y",
            SweepKind::UserY => "user-y",
            SweepKind::RisY => "ris-y",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.id() == s || k.id().replace('-', "_") == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep kind '{s}'")))
    }
}

/// Parameters of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p_max_dbm: f64,
    pub elements: usize,
    pub eve_y: f64,
    pub user_y: f64,
    pub ris_y: f64,
}

impl SweepPoint {
    fn base(cfg: &ExperimentConfig) -> Self {
        let g = &cfg.geometry;
        Self {
            p_max_dbm: cfg.p_max_dbm,
            elements: g.ris_ny * g.ris_nz,
            eve_y: g.eve[1],
            user_y: g.user[1],
            ris_y: g.ris[1],
        }
    }

    pub fn geometry(&self, cfg: &ExperimentConfig) -> Geometry {
        let mut g = cfg.geometry();
        g.ris_nz = self.elements.checked_div(g.ris_ny).unwrap_or(0);
        g.eve[1] = self.eve_y;
        g.user[1] = self.user_y;
        g.ris[1] = self.ris_y;
        g
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }
}

/// Points visited by `kind`; all other parameters stay at their base values.
pub fn sweep_points(cfg: &ExperimentConfig, kind: SweepKind) -> Result<Vec<SweepPoint>> {
    let base = SweepPoint::base(cfg);
    let s = &cfg.sweep;
    let points: Vec<SweepPoint> = match kind {
        SweepKind::Power => s.power_dbm.iter().map(|&v| SweepPoint { p_max_dbm: v, ..base }).collect(),
        SweepKind::Elements => s.elements.iter().map(|&v| SweepPoint { elements: v, ..base }).collect(),
        SweepKind::EveY => s.eve_y.iter().map(|&v| SweepPoint { eve_y: v, ..base }).collect(),
        SweepKind::UserY => s.user_y.iter().map(|&v| SweepPoint { user_y: v, ..base }).collect(),
        SweepKind::RisY => s.ris_y.iter().map(|&v| SweepPoint { ris_y: v, ..base }).collect(),
    };
    if points.is_empty() {
        return Err(Error::Config(format!("sweep range for '{kind}' is empty")));
    }
    for p in &points {
        p.geometry(cfg).validate()?;
    }
    Ok(points)
}

/// Seed of the user channels and initial phases for realization `r`.
pub fn realization_seed(master: u64, r: usize) -> u64 {
    derive_seed(&[master, r as u64])
}

/// Seed of the eavesdropper draws for realization `r`.
pub fn mc_seed(master: u64, r: usize) -> u64 {
    derive_seed(&[master, r as u64, 0x4D43])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub solution: Solution,
    pub iterations: usize,
    /// Present for PDCA only.
    pub trace: Option<SolveTrace>,
    /// Bound after each round of iterative baselines.
    pub history: Vec<f64>,
}

/// Runs one scheme on one scenario; `seed` drives any random initialisation.
#[allow(clippy::too_many_arguments)]
pub fn run_scheme(
    scheme: Scheme,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    p_max: f64,
    pdca: &PdcaConfig,
    seed: u64,
) -> Result<SchemeOutcome> {
    Ok(match scheme {
        Scheme::Pdca => {
            let (phi0, w0) = initial_point(sc, p_max, seed);
            let out = pdca_solve(sc, es, noise, p_max, pdca, &phi0, &w0)?;
            let history = out.trace.outer.iter().map(|o| o.lesr_projected).collect();
            SchemeOutcome { iterations: out.trace.inner_iterations(), solution: out.solution, trace: Some(out.trace), history }
        }
        Scheme::NoRis => from_baseline(no_ris_beamformer(sc, es, noise, p_max)?),
        Scheme::AoElementwise => from_baseline(ao_elementwise(sc, es, noise, p_max, &AoConfig { seed, ..AoConfig::default() })?),
        Scheme::RandomMrt => from_baseline(random_phase_mrt(sc, es, noise, seed, p_max)),
    })
}

fn from_baseline(b: crate::baselines::BaselineResult) -> SchemeOutcome {
    SchemeOutcome { solution: b.solution, iterations: b.iterations, trace: None, history: b.history }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub point: usize,
    pub params: SweepPoint,
    pub scheme: Scheme,
    pub seed: u64,
    pub n_realizations: usize,
    pub n_mc: usize,
    /// Averages over realizations.
    pub lesr: f64,
    pub esr_mean: f64,
    /// `sqrt(Σ stderrᵣ²)/R`, the standard error of the realization average
    /// given the channels.
    pub esr_stderr: f64,
    pub iterations: f64,
}

impl SweepRow {
    fn record(&self) -> [String; 16] {
        let p = &self.params;
        [
            SWEEP_SCHEMA_VERSION.to_string(),
            self.kind.id().to_string(),
            self.point.to_string(),
            p.p_max_dbm.to_string(),
            p.elements.to_string(),
            p.eve_y.to_string(),
            p.user_y.to_string(),
            p.ris_y.to_string(),
            self.scheme.id().to_string(),
            self.seed.to_string(),
            self.n_realizations.to_string(),
            self.n_mc.to_string(),
            self.lesr.to_string(),
            self.esr_mean.to_string(),
            self.esr_stderr.to_string(),
            self.iterations.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Kept out of the CSV so reruns are byte-identical.
    pub wall_time: Duration,
}

/// One (realization, scheme) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub point: usize,
    pub realization: usize,
    pub scheme: Scheme,
    pub lesr: f64,
    pub esr: EsrEstimate,
    pub iterations: usize,
}

/// Evaluates every scheme at every point and realization, unaggregated.
pub fn run_realizations(cfg: &ExperimentConfig, kind: SweepKind) -> Result<Vec<RealizationResult>> {
    cfg.validate()?;
    let points = sweep_points(cfg, kind)?;
    let schemes = cfg.scheme_list()?;
    let stats = cfg.fading()?;
    let noise = cfg.noise();
    let pdca = cfg.pdca_config();
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.n_user_realizations).map(move |r| (p, r))).collect();

    let per_job: Vec<Vec<RealizationResult>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let point = &points[p];
            let geom = point.geometry(cfg);
            let seed = realization_seed(cfg.seed, r);
            let sc = build_scenario(&geom, &stats, seed)?;
            let es = eve_second_moments(&geom, &stats)?;
            schemes
                .iter()
                .map(|&scheme| {
                    let out = run_scheme(scheme, &sc, &es, noise, point.p_max(), &pdca, seed)?;
                    let sol = &out.solution;
                    let esr = esr_estimate(&sol.phi, &sol.w, &sc, &es, noise, cfg.n_mc, mc_seed(cfg.seed, r))?;
                    Ok(RealizationResult { point: p, realization: r, scheme, lesr: sol.lesr, esr, iterations: out.iterations })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Runs the sweep and averages each (point, scheme) over the user realizations.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<SweepResult> {
    let start = Instant::now();
    let points = sweep_points(cfg, kind)?;
    let results = run_realizations(cfg, kind)?;
    let schemes = cfg.scheme_list()?;
    let r = cfg.n_user_realizations as f64;
    let mut rows = Vec::with_capacity(points.len() * schemes.len());
    for (p, params) in points.iter().enumerate() {
        for &scheme in &schemes {
            let group: Vec<&RealizationResult> =
                results.iter().filter(|x| x.point == p && x.scheme == scheme).collect();
            let mean = |f: &dyn Fn(&RealizationResult) -> f64| group.iter().map(|x| f(x)).sum::<f64>() / r;
            rows.push(SweepRow {
                kind,
                point: p,
                params: *params,
                scheme,
                seed: cfg.seed,
                n_realizations: cfg.n_user_realizations,
                n_mc: cfg.n_mc,
                lesr: mean(&|x| x.lesr),
                esr_mean: mean(&|x| x.esr.mean),
                esr_stderr: group.iter().map(|x| x.esr.stderr * x.esr.stderr).sum::<f64>().sqrt() / r,
                iterations: mean(&|x| x.iterations as f64),
            });
        }
    }
    rows.sort_by_key(|row| (row.point, row.scheme));
    Ok(SweepResult { rows, wall_time: start.elapsed() })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub outcome: SchemeOutcome,
    pub esr: EsrEstimate,
}

/// Solves the base scenario (first user realization) with one scheme.
pub fn solve_once(cfg: &ExperimentConfig, scheme: Scheme) -> Result<SolveReport> {
    cfg.validate()?;
    let geom = cfg.geometry();
    let stats = cfg.fading()?;
    let noise = cfg.noise();
    let seed = realization_seed(cfg.seed, 0);
    let sc = build_scenario(&geom, &stats, seed)?;
    let es = eve_second_moments(&geom, &stats)?;
    let outcome = run_scheme(scheme, &sc, &es, noise, cfg.p_max(), &cfg.pdca_config(), seed)?;
    let sol = &outcome.solution;
    let esr = esr_estimate(&sol.phi, &sol.w, &sc, &es, noise, cfg.n_mc, mc_seed(cfg.seed, 0))?;
    Ok(SolveReport { scheme, outcome, esr })
}

/// Convergence trace: one row per inner step (row `inner = 0` holds the AL
/// value on entry). Baselines without a PDCA trace get one row per round.
pub fn write_trace_csv(outcome: &SchemeOutcome, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_HEADER)?;
    let blank = String::new;
    match &outcome.trace {
        Some(trace) => {
            for (k, o) in trace.outer.iter().enumerate() {
                let tail = [o.lesr.to_string(), o.lesr_projected.to_string(), o.violation.to_string(), o.multiplier_updated.to_string()];
                let head = [(k + 1).to_string(), "0".into(), o.rho.to_string(), o.inner.al_start.to_string()];
                w.write_record(head.iter().chain(&[blank(), blank(), blank(), blank()]).chain(&tail))?;
                for (i, s) in o.inner.steps.iter().enumerate() {
                    let row = [
                        (k + 1).to_string(),
                        (i + 1).to_string(),
                        o.rho.to_string(),
                        s.al.to_string(),
                        s.phase.alpha.to_string(),
                        s.phase.accepted.to_string(),
                        s.beam.alpha.to_string(),
                        s.beam.accepted.to_string(),
                    ];
                    w.write_record(row.iter().chain(&tail))?;
                }
            }
        }
        None => {
            for (k, v) in outcome.history.iter().enumerate() {
                let mut row: Vec<String> = vec![blank(); TRACE_HEADER.len()];
                row[0] = k.to_string();
                row[1] = "0".into();
                row[8] = v.to_string();
                w.write_record(&row)?;
            }
        }
    }
    finish(w, path)
}
