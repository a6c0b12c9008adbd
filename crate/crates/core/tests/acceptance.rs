//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Criteria run sequentially so the timing measurement is not
//! disturbed by other tests.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ris_secrecy::baselines::{dominant_gen_eigvec, Scheme};
use ris_secrecy::channel::Geometry;
use ris_secrecy::config::ExperimentConfig;
use ris_secrecy::monte_carlo::{esr_estimate, expectation_oracle};
use ris_secrecy::objective::{beam_quadratics, lesr_terms, phase_quadratics, DualState, Solution};
use ris_secrecy::rng::{complex_normal, stream_rng, streams, unit_phase};
use ris_secrecy::solver::{
    bsca_inner, grad_beam, grad_phase, initial_point, pdca_solve, PdcaConfig, PhaseModel, SolveOutput,
};
use ris_secrecy::sweep::{run_realizations, SweepKind};
use ris_secrecy::validate::{gradient_point, reference_instance, toy_geometry, Instance, P_REF};
use ris_secrecy::{CMat, CVec, C64};

struct Line {
    name: &'static str,
    passed: bool,
    summary: String,
    elapsed: Duration,
}

/// Solutions whose ergodic rate is checked against the bound at the end.
#[derive(Default)]
struct Pool {
    /// (bound, ESR mean, ESR stderr)
    entries: Vec<(f64, f64, f64)>,
}

impl Pool {
    fn add(&mut self, inst: &Instance, sol: &Solution, seed: u64) {
        let est = esr_estimate(&sol.phi, &sol.w, &inst.sc, &inst.es, inst.noise, 20_000, seed).unwrap();
        self.entries.push((sol.lesr, est.mean, est.stderr));
    }
}

// Independent evaluation of the bound's ratio straight from the channels.
fn ratio(inst: &Instance, phi: &CVec, w: &CVec) -> f64 {
    let t = lesr_terms(phi, w, &inst.sc, &inst.es, inst.noise);
    t.num / t.den
}

fn phase_objective<'a>(inst: &'a Instance, w: &CVec, dual: &DualState) -> impl Fn(&CVec) -> f64 + 'a {
    let (w, dual) = (w.clone(), dual.clone());
    move |phi: &CVec| {
        let pen: f64 = phi
            .iter()
            .zip(dual.lambda.iter())
            .map(|(p, l)| (p.norm() - 1.0 - dual.rho * l).powi(2))
            .sum::<f64>()
            / (2.0 * dual.rho);
        -ratio(inst, phi, &w) + pen
    }
}

type Objective<'a> = &'a dyn Fn(&CVec) -> f64;

fn scaled_direction(x: &CVec, seed: u64, k: u64) -> CVec {
    let mut rng = stream_rng(seed, streams::TEST, 1000 + k);
    let d = CVec::from_fn(x.len(), |_, _| complex_normal(&mut rng));
    &d * C64::from(x.norm() / d.norm())
}

fn central_difference(f: &dyn Fn(&CVec) -> f64, x: &CVec, d: &CVec, h: f64) -> f64 {
    (f(&(x + d * C64::from(h))) - f(&(x - d * C64::from(h)))) / (2.0 * h)
}

/// Remainder `f(x + td) − f(x) − t Re⟨g, d⟩`.
fn remainder(f: &dyn Fn(&CVec) -> f64, g: &CVec, x: &CVec, d: &CVec, t: f64) -> f64 {
    f(&(x + d * C64::from(t))) - f(x) - t * g.dotc(d).re
}

fn gradients() -> Line {
    let start = Instant::now();
    let geom = Geometry::reference(2);
    let (mut worst, mut decay_lo, mut decay_hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for seed in 0..20u64 {
        let inst = reference_instance(&geom, 10_000 + seed).unwrap();
        let (phi, w, dual) = gradient_point(8, 32, 20_000 + seed);
        let h = phase_objective(&inst, &w, &dual);
        let g_beam_fn = |x: &CVec| -ratio(&inst, &phi, x);
        let pq = phase_quadratics(&w, &inst.sc, &inst.es, inst.noise);
        let g_fast = PhaseModel::new(&w, &inst.sc, &inst.es, inst.noise).gradient(&phi, &dual);
        let g_dense = grad_phase(&phi, &pq, &dual);
        let g_w = grad_beam(&w, &beam_quadratics(&phi, &inst.sc, &inst.es, inst.noise));
        let cases: [(Objective, &CVec, &CVec); 3] = [(&h, &g_fast, &phi), (&h, &g_dense, &phi), (&g_beam_fn, &g_w, &w)];
        for (case, (f, g, x)) in cases.into_iter().enumerate() {
            for k in 0..10 {
                let d = scaled_direction(x, seed, 10 * case as u64 + k);
                let fd = central_difference(f, x, &d, 1e-6);
                let analytic = g.dotc(&d).re;
                worst = worst.max((fd - analytic).abs() / (g.norm() * d.norm()));
                if k == 0 {
                    let ratio = remainder(f, g, x, &d, 1e-3) / remainder(f, g, x, &d, 5e-4);
                    decay_lo = decay_lo.min(ratio);
                    decay_hi = decay_hi.max(ratio);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Line {
        name: "block gradients vs central differences (M=8, N=32)",
        passed: worst <= 1e-5 && decay_lo >= 3.0 && decay_hi <= 5.0 && elapsed < Duration::from_secs(10),
        summary: format!(
            "worst rel err {worst:.2e} <= 1e-5; remainder ratio on halving in [{decay_lo:.3}, {decay_hi:.3}] (quadratic = 4)"
        ),
        elapsed,
    }
}

fn expectation_identity() -> Line {
    let start = Instant::now();
    let geom = Geometry::reference(2);
    let (mut within, mut max_z) = (0, 0.0f64);
    for trial in 0..100u64 {
        let inst = reference_instance(&geom, 30_000 + trial).unwrap();
        let mut rng = stream_rng(trial, streams::TEST, 3);
        let phi = CVec::from_fn(32, |_, _| unit_phase(&mut rng));
        let w = CVec::from_fn(8, |_, _| complex_normal(&mut rng));
        let w = &w * C64::from(P_REF.sqrt() / w.norm());
        let chk = expectation_oracle(&phi, &w, &inst.sc, &inst.es, 100_000, 40_000 + trial).unwrap();
        within += (chk.z_score.abs() <= 3.0) as usize;
        max_z = max_z.max(chk.z_score.abs());
    }
    let elapsed = start.elapsed();
    Line {
        name: "Eve second-moment identity (n = 1e5)",
        passed: within >= 97 && elapsed < Duration::from_secs(120),
        summary: format!("{within}/100 trials with |z| <= 3 (need 97), max |z| = {max_z:.2}"),
        elapsed,
    }
}

struct SolveRun {
    inst: Instance,
    out: SolveOutput,
    p_max: f64,
    seed: u64,
}

fn seeded_solves() -> Vec<SolveRun> {
    let geom = Geometry::reference(2);
    (0..20u64)
        .map(|seed| {
            let inst = reference_instance(&geom, 50_000 + seed).unwrap();
            let (phi0, w0) = initial_point(&inst.sc, P_REF, seed);
            let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &PdcaConfig::default(), &phi0, &w0).unwrap();
            SolveRun { inst, out, p_max: P_REF, seed }
        })
        .collect()
}

/// Replays every solve cycle by cycle and re-derives each line-search
/// decision from independently computed objective values.
fn inner_descent(runs: &[SolveRun]) -> Line {
    let start = Instant::now();
    let cfg = PdcaConfig::default();
    let one_cycle = PdcaConfig { max_inner: 1, ..cfg.clone() };
    let (mut accepted, mut violations, mut replay_mismatch, mut al_rises) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_rise = 0.0f64;
    for run in runs {
        let inst = &run.inst;
        let (mut phi, mut w) = initial_point(&inst.sc, run.p_max, run.seed);
        let mut dual = DualState::new(phi.len(), cfg.rho0).unwrap();
        for outer in &run.out.trace.outer {
            let mut prev_al = outer.inner.al_start;
            for step in &outer.inner.steps {
                let res = bsca_inner(&phi, &w, &dual, &inst.sc, &inst.es, inst.noise, run.p_max, &one_cycle).unwrap();
                let replayed = &res.steps[0];
                replay_mismatch += (replayed != step) as usize;
                let (phi_next, w_next) = (res.phi, res.w);

                let h = phase_objective(inst, &w, &dual);
                let g_phi = grad_phase(&phi, &phase_quadratics(&w, &inst.sc, &inst.es, inst.noise), &dual);
                let g_w = grad_beam(&w, &beam_quadratics(&phi_next, &inst.sc, &inst.es, inst.noise));
                let checks = [
                    (step.phase, h(&phi), h(&phi_next), g_phi.norm_squared()),
                    (step.beam, -ratio(inst, &phi_next, &w), -ratio(inst, &phi_next, &w_next), g_w.norm_squared()),
                ];
                for (rec, before, after, gsq) in checks {
                    if rec.accepted {
                        accepted += 1;
                        let slack = 1e-12 * before.abs().max(1.0);
                        let ok = rec.satisfies_armijo()
                            && after <= before - rec.c * rec.alpha * gsq + slack
                            && (gsq - rec.grad_norm_sq).abs() <= 1e-9 * gsq.max(f64::MIN_POSITIVE);
                        violations += (!ok) as usize;
                    }
                }
                let rise = step.al - prev_al;
                if rise > 1e-12 * prev_al.abs().max(1.0) {
                    al_rises += 1;
                    worst_rise = worst_rise.max(rise);
                }
                prev_al = step.al;
                phi = phi_next;
                w = w_next;
            }
            if outer.multiplier_updated {
                for (l, p) in dual.lambda.iter_mut().zip(phi.iter()) {
                    *l -= (p.norm() - 1.0) / dual.rho;
                }
            } else {
                dual.rho *= cfg.c_rho;
            }
        }
    }
    Line {
        name: "inner-loop descent and sufficient decrease (20 solves)",
        passed: violations == 0 && al_rises == 0 && replay_mismatch == 0 && accepted > 0,
        summary: format!(
            "{accepted} accepted steps, {violations} failing the test, {al_rises} AL increases (worst {worst_rise:.1e}), {replay_mismatch} replay mismatches"
        ),
        elapsed: start.elapsed(),
    }
}

fn feasibility(runs: &[SolveRun], extra: &[(f64, f64, f64)]) -> Line {
    let eta = PdcaConfig::default().eta;
    let mut worst_violation = 0.0f64;
    let mut worst_power = f64::NEG_INFINITY;
    let mut count = 0;
    for run in runs {
        worst_violation = worst_violation.max(run.out.trace.pre_projection_violation);
        worst_power = worst_power.max(run.out.solution.w.norm_squared() - run.p_max);
        count += 1;
    }
    for &(violation, power, p_max) in extra {
        worst_violation = worst_violation.max(violation);
        worst_power = worst_power.max(power - p_max);
        count += 1;
    }
    Line {
        name: "feasibility at termination",
        passed: worst_violation <= eta && worst_power <= 1e-9,
        summary: format!(
            "{count} solves: max pre-projection violation {worst_violation:.2e} <= {eta:.0e}, max ||w||^2 - P_max {worst_power:.2e} <= 1e-9"
        ),
        elapsed: Duration::ZERO,
    }
}

/// Grid optimum with the beam pencil assembled directly from the channels.
fn grid_optimum(inst: &Instance, grid: usize, p_max: f64) -> f64 {
    let sc = &inst.sc;
    let es = &inst.es;
    let m = sc.antennas();
    let shift = CMat::identity(m, m) * C64::from(1.0 / p_max);
    let phases: Vec<C64> = (0..grid).map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / grid as f64)).collect();
    let mut best = 0.0f64;
    for &a in &phases {
        for &b in &phases {
            let phi = CVec::from_vec(vec![a, b]);
            let k = CMat::from_diagonal(&phi) * &sc.h_ai;
            let user = (sc.h_iu.adjoint() * &k).adjoint() + &sc.h_au;
            let big_a = &user * user.adjoint() * C64::from(1.0 / inst.noise.user);
            let cross = &es.g_ai * &k;
            let big_b = (&es.g_a + k.adjoint() * &es.g_i * &k + &cross + cross.adjoint()) * C64::from(1.0 / inst.noise.eve);
            let v = dominant_gen_eigvec(&(&big_a + &shift), &(&big_b + &shift)).unwrap().vector;
            let w = v * C64::from(p_max.sqrt());
            let num = w.dotc(&(&big_a * &w)).re + 1.0;
            let den = w.dotc(&(&big_b * &w)).re + 1.0;
            best = best.max((num / den).log2());
        }
    }
    best
}

fn toy_optimality(pool: &mut Pool, extra: &mut Vec<(f64, f64, f64)>) -> Line {
    let start = Instant::now();
    let mut hits = 0;
    let mut worst = f64::INFINITY;
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let inst = reference_instance(&toy_geometry(), seed).unwrap();
        let (phi0, w0) = initial_point(&inst.sc, P_REF, seed);
        let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &PdcaConfig::default(), &phi0, &w0).unwrap();
        let opt = grid_optimum(&inst, 720, P_REF);
        if out.solution.lesr >= 0.98 * opt {
            hits += 1;
        } else {
            misses.push(format!("seed {seed}: {:.4} vs {:.4}", out.solution.lesr, opt));
        }
        if opt > 0.0 {
            worst = worst.min(out.solution.lesr / opt);
        }
        extra.push((out.trace.pre_projection_violation, out.solution.w.norm_squared(), P_REF));
        pool.add(&inst, &out.solution, 60_000 + seed);
    }
    let elapsed = start.elapsed();
    Line {
        name: "two-antenna two-element instance vs 720^2 grid",
        passed: hits >= 18 && elapsed < Duration::from_secs(300),
        summary: format!("{hits}/20 seeds at >= 0.98 x grid optimum (need 18); misses: [{}]", misses.join("; ")),
        elapsed,
    }
}

fn trends(pool: &mut Pool) -> Line {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        schemes: vec!["pdca".into(), "no_ris".into(), "ao_ew".into()],
        n_mc: 20_000,
        n_user_realizations: 20,
        ..ExperimentConfig::default()
    };
    let results = run_realizations(&cfg, SweepKind::Elements).unwrap();
    let r = cfg.n_user_realizations as f64;
    let avg = |p: usize, s: Scheme| {
        let g: Vec<_> = results.iter().filter(|x| x.point == p && x.scheme == s).collect();
        let esr = g.iter().map(|x| x.esr.mean).sum::<f64>() / r;
        let se = g.iter().map(|x| x.esr.stderr.powi(2)).sum::<f64>().sqrt() / r;
        let lesr = g.iter().map(|x| x.lesr).sum::<f64>() / r;
        (esr, se, lesr)
    };
    for x in &results {
        if x.scheme != Scheme::NoRis {
            pool.entries.push((x.lesr, x.esr.mean, x.esr.stderr));
        }
    }
    let ns = &cfg.sweep.elements;
    let (mut a, mut b, mut c, mut d) = (true, true, true, true);
    let mut cells = Vec::new();
    for (p, n) in ns.iter().enumerate() {
        let (pdca, se, lesr) = avg(p, Scheme::Pdca);
        let (no_ris, _, _) = avg(p, Scheme::NoRis);
        let (ao, se_ao, _) = avg(p, Scheme::AoElementwise);
        a &= pdca >= no_ris;
        c &= pdca - lesr <= 0.5;
        d &= pdca >= ao - 2.0 * (se * se + se_ao * se_ao).sqrt();
        if p > 0 {
            let (prev, se_prev, _) = avg(p - 1, Scheme::Pdca);
            b &= pdca >= prev - 2.0 * (se * se + se_prev * se_prev).sqrt();
        }
        cells.push(format!("N={n} pdca {pdca:.3}±{se:.3} (gap {:.3}) no-ris {no_ris:.3} AO-ew {ao:.3}", pdca - lesr));
    }
    let elapsed = start.elapsed();
    Line {
        name: "desk-scale trends over N = 16, 32, 48",
        passed: a && b && c && d && elapsed < Duration::from_secs(1800),
        summary: format!(
            "(a) beats no-RIS {a}; (b) non-decreasing in N {b}; (c) ESR-LESR <= 0.5 {c}; (d) >= AO-ew - 2se {d} | {}",
            cells.join(" | ")
        ),
        elapsed,
    }
}

fn complexity() -> Line {
    let start = Instant::now();
    let sizes = [32usize, 64, 128, 256];
    let mut per_iter = Vec::new();
    for &n in &sizes {
        let geom = Geometry::reference(n / 16);
        let mut time = Duration::ZERO;
        let mut iters = 0;
        for seed in 0..3u64 {
            let inst = reference_instance(&geom, 70_000 + seed).unwrap();
            let (phi0, w0) = initial_point(&inst.sc, P_REF, seed);
            let t = Instant::now();
            let out = pdca_solve(&inst.sc, &inst.es, inst.noise, P_REF, &PdcaConfig::default(), &phi0, &w0).unwrap();
            time += t.elapsed();
            iters += out.trace.inner_iterations();
        }
        per_iter.push(time.as_secs_f64() / iters as f64);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = per_iter.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let times: Vec<String> = sizes.iter().zip(&per_iter).map(|(n, t)| format!("N={n}: {:.1} us", t * 1e6)).collect();
    Line {
        name: "per-inner-iteration cost growth in N",
        passed: slope <= 2.3,
        summary: format!("log-log slope {slope:.3} <= 2.3 ({})", times.join(", ")),
        elapsed: start.elapsed(),
    }
}

fn lower_bound(pool: &mut Pool) -> Line {
    let start = Instant::now();
    let geom = Geometry::reference(2);
    for seed in 0..10u64 {
        let inst = reference_instance(&geom, 80_000 + seed).unwrap();
        let mut rng = stream_rng(seed, streams::TEST, 5);
        let phi = CVec::from_fn(32, |_, _| unit_phase(&mut rng));
        let w = CVec::from_fn(8, |_, _| complex_normal(&mut rng));
        let w = &w * C64::from((P_REF * rand::Rng::random::<f64>(&mut rng)).sqrt() / w.norm());
        let t = lesr_terms(&phi, &w, &inst.sc, &inst.es, inst.noise);
        let sol = Solution { phi, w, lesr: (t.num / t.den).log2().max(0.0) };
        pool.add(&inst, &sol, 90_000 + seed);
    }
    let worst = pool.entries.iter().map(|&(l, e, s)| e - l + 3.0 * s).fold(f64::INFINITY, f64::min);
    let failing = pool.entries.iter().filter(|&&(l, e, s)| e < l - 3.0 * s).count();
    let elapsed = start.elapsed();
    Line {
        name: "ergodic rate >= bound - 3 stderr",
        passed: failing == 0 && elapsed < Duration::from_secs(120),
        summary: format!("{} solutions (10 random + all optimized), {failing} below, min slack {worst:.3e}", pool.entries.len()),
        elapsed,
    }
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let mut pool = Pool::default();
    let mut extra = Vec::new();

    lines.push(gradients());
    lines.push(expectation_identity());

    let t = Instant::now();
    let runs = seeded_solves();
    let solve_time = t.elapsed();
    for run in &runs {
        pool.add(&run.inst, &run.out.solution, 55_000 + run.seed);
    }
    let mut descent = inner_descent(&runs);
    descent.elapsed += solve_time;
    lines.push(descent);

    let toy = toy_optimality(&mut pool, &mut extra);
    lines.push(feasibility(&runs, &extra));
    lines.push(toy);
    lines.push(trends(&mut pool));
    lines.push(complexity());
    // needs every optimized solution, so it runs last but is listed third
    lines.insert(2, lower_bound(&mut pool));

    let mut failed = 0;
    for (i, l) in lines.iter().enumerate() {
        println!(
            "{} [{}] {} :: {} ({:.1} s)",
            if l.passed { "PASS" } else { "FAIL" },
            i + 1,
            l.name,
            l.summary,
            l.elapsed.as_secs_f64()
        );
        failed += (!l.passed) as usize;
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
