//! Acceptance criteria. Each test asserts one criterion at its pinned
//! tolerance and writes a single `PASS`/`FAIL` line to stderr, bypassing the
//! harness capture so the line shows for passing tests too.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use cstraj::action::d2s_mixed;
use cstraj::integrator::{integrate, integrate_endpoint, period_estimate};
use cstraj::model::{ComplexPhasePoint, ModelParams, PropagatorLabels, SmoothedHamiltonian};
use cstraj::oracle::{converged_levels, harmonic_closed_form, Eigensystem, SpectralPropagator};
use cstraj::scsp::{propagate_sweep, time_grid, PropagationSweep};
use cstraj::shooting::{descend, initial_conditions_from_guess, multi_start, RootResult, ShootingConfig};

const C1_TOLERANCE: f64 = 1e-6;
const C1_RUNTIME: Duration = Duration::from_secs(60);
const C2_ROOT: (f64, f64) = (6.686_429_54, 14.924_498_6);
const C2_ROOT_TOLERANCE: f64 = 1e-4;
const C2_MAX_DISTANCE: f64 = 1e-10;
const C2_RUNTIME: Duration = Duration::from_secs(30);
const C3_PERIOD: f64 = 1.003;
const C3_TOLERANCE: f64 = 5e-3;
const FIG_L2_TOLERANCE: f64 = 0.02;
const FIG_MAX_TOLERANCE: f64 = 1e-2;
const C6_CLOSED_FORM_TOLERANCE: f64 = 1e-10;
const C6_GROUND_TOLERANCE: f64 = 1e-5;
const C7_ORDER_FACTOR: f64 = 15.0;
const C7_ENERGY_DRIFT: f64 = 1e-8;
const C7_FLOW_TOLERANCE: f64 = 1e-6;
const C7_RICHARDSON_TOLERANCE: f64 = 1e-3;
const C7_NORMALIZATION_TOLERANCE: f64 = 1e-10;

const ORACLE_BASIS: usize = 200;
const SWEEP_POINTS: usize = 1000;

fn report(id: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {verdict} {id}: {detail}");
}

fn params(hbar: f64, b: f64, lambda: f64, beta: f64) -> ModelParams {
    ModelParams::new(hbar, b, lambda, beta).unwrap()
}

fn labels(q_i: f64, p_i: f64, q_f: f64, p_f: f64, params: &ModelParams) -> PropagatorLabels {
    PropagatorLabels::from_values(q_i, p_i, q_f, p_f, 0.0, params).unwrap()
}

struct Run {
    params: ModelParams,
    labels: PropagatorLabels,
    times: Vec<f64>,
    sweep: PropagationSweep,
    elapsed: Duration,
}

fn run_sweep(params: ModelParams, t_max: f64) -> Run {
    let labels = labels(0.0, 1.0, 0.0, 1.0, &params);
    let times = time_grid(t_max, SWEEP_POINTS);
    let start = Instant::now();
    let sweep = propagate_sweep(&labels, &times, &params, &ShootingConfig::default(), &[]).unwrap();
    Run {
        params,
        labels,
        times,
        sweep,
        elapsed: start.elapsed(),
    }
}

fn harmonic_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run_sweep(params(1.0, 1.0, 1.0, 0.0), 10.0))
}

fn weak_anharmonic_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run_sweep(params(1.0, 1.0, 1.0, 0.01), 10.0))
}

fn pure_quartic_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run_sweep(params(1.0, 1.0, 0.0, 0.1), 3.0))
}

fn quartic_root_params() -> ModelParams {
    params(1.0, 1.0, 0.0, 0.2)
}

struct QuarticRoot {
    root: Option<RootResult>,
    roots_found: usize,
    elapsed: Duration,
}

fn quartic_root_search(params: &ModelParams) -> QuarticRoot {
    let labels = PropagatorLabels::from_values(8.0, 15.0, 6.0, 15.0, 3.5, params).unwrap();
    let config = ShootingConfig {
        delta: C2_MAX_DISTANCE,
        n_steps: 3000,
        ..ShootingConfig::default()
    };
    // The quartic problem has many roots at this T; a 9x9 grid of spacing
    // 0.5 around (q', p') reaches the basin of each nearby one.
    let seeds: Vec<(f64, f64)> = (-4..=4)
        .flat_map(|i| (-4..=4).map(move |j| (8.0 + 0.5 * i as f64, 15.0 + 0.5 * j as f64)))
        .collect();
    let start = Instant::now();
    let found = multi_start(&labels, params, &config, &seeds).unwrap();
    let elapsed = start.elapsed();
    let roots_found = found.roots.len();
    let root = found.roots.into_iter().min_by(|a, b| {
        root_offset(a).partial_cmp(&root_offset(b)).unwrap()
    });
    QuarticRoot {
        root,
        roots_found,
        elapsed,
    }
}

fn root_offset(r: &RootResult) -> f64 {
    (r.x1_0 - C2_ROOT.0).hypot(r.p1_0 - C2_ROOT.1)
}

fn quartic_root_run() -> &'static QuarticRoot {
    static RUN: OnceLock<QuarticRoot> = OnceLock::new();
    RUN.get_or_init(|| quartic_root_search(&quartic_root_params()))
}

struct Agreement {
    max_abs: f64,
    l2_rel: f64,
    complete: bool,
}

fn against_oracle(run: &Run) -> Agreement {
    let eig = Eigensystem::for_model(&run.params, ORACLE_BASIS).unwrap();
    let levels = converged_levels(&run.params, ORACLE_BASIS).unwrap();
    let oracle = SpectralPropagator::new(&eig, &run.labels, &run.params, levels).unwrap();
    assert!(!oracle.truncated, "labels leak out of the oracle basis");
    let (mut max_abs, mut num, mut den) = (0.0f64, 0.0, 0.0);
    for s in &run.sweep.samples {
        let exact = oracle.at(s.t);
        let d = (s.k_scsp - exact).norm();
        max_abs = max_abs.max(d);
        num += d * d;
        den += exact.norm_sqr();
    }
    Agreement {
        max_abs,
        l2_rel: (num / den).sqrt(),
        complete: run.sweep.samples.len() == run.times.len(),
    }
}

fn figure_criterion(id: &str, run: &Run) {
    let a = against_oracle(run);
    let pass = a.complete && a.l2_rel <= FIG_L2_TOLERANCE && a.max_abs <= FIG_MAX_TOLERANCE;
    report(
        id,
        pass,
        &format!(
            "L2 rel {:.3e} (<= {FIG_L2_TOLERANCE:e}), max |dK| {:.3e} (<= {FIG_MAX_TOLERANCE:e}), {}/{} points, {:.1} s",
            a.l2_rel,
            a.max_abs,
            run.sweep.samples.len(),
            run.times.len(),
            run.elapsed.as_secs_f64()
        ),
    );
    assert!(a.complete, "{id}: sweep truncated: {:?}", run.sweep.failure);
    assert!(a.l2_rel <= FIG_L2_TOLERANCE, "{id}: relative L2 error {}", a.l2_rel);
    assert!(a.max_abs <= FIG_MAX_TOLERANCE, "{id}: max |dK| {}", a.max_abs);
}

#[test]
fn criterion_1_harmonic_exactness() {
    let run = harmonic_run();
    let mut max_err = 0.0f64;
    for s in &run.sweep.samples {
        let exact = harmonic_closed_form(&run.labels.at_time(s.t).unwrap(), &run.params).unwrap();
        max_err = max_err.max((s.k_scsp - exact).norm());
    }
    let complete = run.sweep.samples.len() == SWEEP_POINTS;
    let pass = complete && max_err <= C1_TOLERANCE && run.elapsed < C1_RUNTIME;
    report(
        "C1",
        pass,
        &format!(
            "max |K_scsp - K_closed| {max_err:.3e} (<= {C1_TOLERANCE:e}), {} points, {:.1} s (< {} s)",
            run.sweep.samples.len(),
            run.elapsed.as_secs_f64(),
            C1_RUNTIME.as_secs()
        ),
    );
    assert!(complete, "sweep truncated: {:?}", run.sweep.failure);
    assert!(max_err <= C1_TOLERANCE, "max error {max_err}");
    assert!(run.elapsed < C1_RUNTIME, "runtime {:?}", run.elapsed);
}

#[test]
fn criterion_2_quartic_root() {
    let run = quartic_root_run();
    let root = run.root.as_ref().expect("no root converged from any seed");
    let offset = [(root.x1_0 - C2_ROOT.0).abs(), (root.p1_0 - C2_ROOT.1).abs()];
    let pass = offset[0] <= C2_ROOT_TOLERANCE
        && offset[1] <= C2_ROOT_TOLERANCE
        && root.distance <= C2_MAX_DISTANCE
        && run.elapsed < C2_RUNTIME;
    report(
        "C2",
        pass,
        &format!(
            "root ({:.8}, {:.8}) vs ({}, {}) +/- {C2_ROOT_TOLERANCE:e}, D {:.2e} (<= {C2_MAX_DISTANCE:e}), {} roots, {:.1} s (< {} s)",
            root.x1_0,
            root.p1_0,
            C2_ROOT.0,
            C2_ROOT.1,
            root.distance,
            run.roots_found,
            run.elapsed.as_secs_f64(),
            C2_RUNTIME.as_secs()
        ),
    );
    assert!(root.distance <= C2_MAX_DISTANCE, "D = {}", root.distance);
    assert!(run.elapsed < C2_RUNTIME, "runtime {:?}", run.elapsed);
    assert!(offset[0] <= C2_ROOT_TOLERANCE, "x1(0) = {}", root.x1_0);
    assert!(offset[1] <= C2_ROOT_TOLERANCE, "p1(0) = {}", root.p1_0);
}

#[test]
fn criterion_3_real_orbit_period() {
    let model = SmoothedHamiltonian::new(quartic_root_params());
    let traj = integrate(&model, ComplexPhasePoint::new(8.0, 15.0, 0.0, 0.0), 3.5, 3000).unwrap();
    let period = period_estimate(&traj);
    let pass = period.is_some_and(|p| (p - C3_PERIOD).abs() <= C3_TOLERANCE);
    report(
        "C3",
        pass,
        &format!("period {period:?} vs {C3_PERIOD} +/- {C3_TOLERANCE:e}"),
    );
    let period = period.expect("no full turn in the trajectory");
    assert!((period - C3_PERIOD).abs() <= C3_TOLERANCE, "period {period}");
}

#[test]
fn criterion_4_weak_anharmonic_agreement() {
    figure_criterion("C4", weak_anharmonic_run());
}

#[test]
fn criterion_5_pure_quartic_agreement() {
    figure_criterion("C5", pure_quartic_run());
}

/// Lowest eigenvalue of `−½ψ'' + q⁴ψ` on a finite-difference grid, by
/// Sturm-sequence bisection on the tridiagonal matrix.
fn grid_ground_energy(half_width: f64, points: usize) -> f64 {
    let h = 2.0 * half_width / (points + 1) as f64;
    let diag: Vec<f64> = (1..=points)
        .map(|k| {
            let q = -half_width + h * k as f64;
            1.0 / (h * h) + q.powi(4)
        })
        .collect();
    let off = -0.5 / (h * h);
    let below = |e: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for (k, a) in diag.iter().enumerate() {
            d = a - e - if k == 0 { 0.0 } else { off * off / d };
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_6_oracle_self_consistency() {
    let p = params(1.0, 1.0, 1.0, 0.0);
    let eig = Eigensystem::for_model(&p, ORACLE_BASIS).unwrap();
    let base = labels(0.0, 1.0, 0.0, 1.0, &p);
    let oracle = SpectralPropagator::new(&eig, &base, &p, ORACLE_BASIS).unwrap();
    let closed_err = time_grid(10.0, SWEEP_POINTS)
        .into_iter()
        .map(|t| (oracle.at(t) - harmonic_closed_form(&base.at_time(t).unwrap(), &p).unwrap()).norm())
        .fold(0.0f64, f64::max);

    // Second-order grid error, removed by Richardson extrapolation.
    let reference = (4.0 * grid_ground_energy(6.0, 7999) - grid_ground_energy(6.0, 3999)) / 3.0;
    let quartic = Eigensystem::for_model(&params(1.0, 1.0, 0.0, 1.0), 400).unwrap();
    let ground_err = (quartic.energies[0] - reference).abs();

    let pass = closed_err <= C6_CLOSED_FORM_TOLERANCE && ground_err <= C6_GROUND_TOLERANCE;
    report(
        "C6",
        pass,
        &format!(
            "exact vs closed form {closed_err:.3e} (<= {C6_CLOSED_FORM_TOLERANCE:e}), quartic E0 {:.8} vs grid {reference:.8}, diff {ground_err:.2e} (<= {C6_GROUND_TOLERANCE:e})",
            quartic.energies[0]
        ),
    );
    assert!(closed_err <= C6_CLOSED_FORM_TOLERANCE, "closed form error {closed_err}");
    assert!(ground_err <= C6_GROUND_TOLERANCE, "ground energy error {ground_err}");
}

fn runs() -> [(&'static str, &'static Run); 3] {
    [("C1", harmonic_run()), ("C4", weak_anharmonic_run()), ("C5", pure_quartic_run())]
}

/// Endpoint error ratio `|y_n − y_2n| / |y_2n − y_4n|` on the last weakly anharmonic root.
fn rk4_order_factor() -> f64 {
    let run = weak_anharmonic_run();
    let last = run.sweep.samples.last().unwrap();
    let root = &last.roots[0];
    let labels = run.labels.at_time(last.t).unwrap();
    let start = initial_conditions_from_guess(root.x1_0, root.p1_0, &labels, &run.params);
    let model = SmoothedHamiltonian::new(run.params);
    let end = |n| integrate_endpoint(&model, start, last.t, n).unwrap().to_array();
    let (a, b, c) = (end(250), end(500), end(1000));
    let dist = |x: [f64; 4], y: [f64; 4]| x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    dist(a, b) / dist(b, c)
}

fn max_energy_drift() -> f64 {
    let sweeps = runs()
        .into_iter()
        .flat_map(|(_, run)| run.sweep.samples.iter())
        .flat_map(|s| s.roots.iter().map(|r| r.energy_drift));
    let quartic = quartic_root_run().root.iter().map(|r| r.trajectory.max_energy_drift());
    sweeps.chain(quartic).fold(0.0f64, f64::max)
}

fn h1(model: &SmoothedHamiltonian, a: [f64; 4]) -> f64 {
    model.energy_at(&ComplexPhasePoint::from_array(a)).re
}

/// Largest relative mismatch between `flow_rhs` and central differences of
/// `Re H̃` at random points of random models.
fn flow_gradient_error() -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = SmoothedHamiltonian::new(params(
            1.0,
            rng.gen_range(0.5..2.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(0.0..0.5),
        ));
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let grad = |k: usize| {
            let step = 1e-5 * (1.0 + a[k].abs());
            let (mut hi, mut lo) = (a, a);
            hi[k] += step;
            lo[k] -= step;
            (h1(&model, hi) - h1(&model, lo)) / (2.0 * step)
        };
        let expected = [grad(1), -grad(0), grad(3), -grad(2)];
        let got = model.flow_rhs(&ComplexPhasePoint::from_array(a));
        let scale = expected.iter().chain(&got).fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..4 {
            worst = worst.max((got[k] - expected[k]).abs() / scale);
        }
    }
    worst
}

/// Spread between Richardson extrapolants of `∂²S/∂u'∂v''` built from steps
/// `(h, h/2)` and `(h/2, h/4)`, relative, worst over weakly anharmonic roots.
fn d2s_richardson_spread() -> f64 {
    let run = weak_anharmonic_run();
    let base = ShootingConfig::default();
    let mut worst = 0.0f64;
    for t in [2.5, 5.0, 7.5, 10.0] {
        let sample = run.sweep.samples.iter().min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()).unwrap();
        let labels = run.labels.at_time(sample.t).unwrap();
        let guess = (sample.roots[0].x1_0, sample.roots[0].p1_0);
        let root = descend(guess, &labels, &run.params, &base).unwrap();
        let at = |h: f64| {
            let config = ShootingConfig { label_step: h, ..base };
            d2s_mixed(&root, &run.params, &config).unwrap()
        };
        let h = base.label_step;
        let (d1, d2, d4) = (at(h), at(h / 2.0), at(h / 4.0));
        let r1: Complex64 = (4.0 * d2 - d1) / 3.0;
        let r2: Complex64 = (4.0 * d4 - d2) / 3.0;
        worst = worst.max((r1 - r2).norm() / r2.norm());
    }
    worst
}

/// Largest step of the tracked half-phase between neighbouring samples of
/// the same root family.
fn max_sigma_jump() -> f64 {
    let mut worst = 0.0f64;
    for (_, run) in runs() {
        for w in run.sweep.samples.windows(2) {
            for prev in &w[0].roots {
                let next = w[1]
                    .roots
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.x1_0 - prev.x1_0).hypot(a.p1_0 - prev.p1_0);
                        let db = (b.x1_0 - prev.x1_0).hypot(b.p1_0 - prev.p1_0);
                        da.partial_cmp(&db).unwrap()
                    });
                if let Some(next) = next {
                    worst = worst.max((next.sigma - prev.sigma).abs());
                }
            }
        }
    }
    worst
}

fn normalization_error() -> f64 {
    runs()
        .into_iter()
        .map(|(_, run)| {
            let first = &run.sweep.samples[0];
            assert_eq!(first.t, 0.0);
            (first.k_scsp - 1.0).norm()
        })
        .fold(0.0f64, f64::max)
}

#[test]
fn criterion_7_property_suites() {
    let order = rk4_order_factor();
    let drift = max_energy_drift();
    let flow = flow_gradient_error();
    let richardson = d2s_richardson_spread();
    let jump = max_sigma_jump();
    let norm = normalization_error();
    let checks = [
        ("rk4 order factor", order >= C7_ORDER_FACTOR, format!("{order:.2} (>= {C7_ORDER_FACTOR})")),
        ("energy drift", drift <= C7_ENERGY_DRIFT, format!("{drift:.2e} (<= {C7_ENERGY_DRIFT:e})")),
        ("flow vs FD gradient", flow <= C7_FLOW_TOLERANCE, format!("{flow:.2e} (<= {C7_FLOW_TOLERANCE:e})")),
        ("d2S Richardson", richardson <= C7_RICHARDSON_TOLERANCE, format!("{richardson:.2e} (<= {C7_RICHARDSON_TOLERANCE:e})")),
        ("sigma jump", jump <= FRAC_PI_2, format!("{jump:.3e} (<= pi/2)")),
        ("K(z,z,0)", norm <= C7_NORMALIZATION_TOLERANCE, format!("|K - 1| {norm:.2e} (<= {C7_NORMALIZATION_TOLERANCE:e})")),
    ];
    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(name, ok, v)| format!("{name} {v}{}", if *ok { "" } else { " FAILED" })).collect();
    report("C7", pass, &detail.join("; "));
    for (name, ok, v) in &checks {
        assert!(ok, "{name}: {v}");
    }
}
