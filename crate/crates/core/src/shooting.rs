//! Shooting for complex roots.
//!
//! The unknowns of the boundary-value problem are the real parts
//! `(x1(0), p1(0))` of the initial point; the imaginary parts then follow
//! from the initial coherent-state label. Integrating forward gives a
//! residual against the final label, and the root search drives its norm
//! `D` to zero by steepest descent.

use crate::error::{invalid, Error, Result};
use crate::integrator::{integrate, integrate_endpoint, Trajectory};
use crate::model::{ComplexPhasePoint, ModelParams, PropagatorLabels, SmoothedHamiltonian};

/// Roots closer than this in `(x1(0), p1(0))` are the same root.
pub const ROOT_DEDUP_TOLERANCE: f64 = 1e-6;

/// Maximum number of step halvings before a search is declared stalled.
pub const MAX_HALVINGS: u32 = 20;

/// Fraction by which a step taken with a reused sensitivity must reduce `D`.
const STALE_DECREASE: f64 = 0.5;

/// Sensitivity of the final residual to the initial guess,
/// `jacobian[i][j] = ∂F_i/∂g_j` with `g = (x1(0), p1(0))`.
pub type Jacobian = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// Convergence threshold on `D`.
    pub delta: f64,
    /// Upper bound on the length of one descent step.
    pub eps0: f64,
    /// Step length is `eps_scale · D / |∇D|`, i.e. proportional to `D`.
    pub eps_scale: f64,
    /// Relative finite-difference step, scaled by `max(1, |guess|)`.
    pub fd_step: f64,
    pub max_iters: usize,
    /// RK4 steps per trajectory.
    pub n_steps: usize,
    /// Label perturbation used for `∂²S/∂u'∂v''`.
    pub label_step: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            delta: 1e-12,
            eps0: 1.0,
            eps_scale: 1.0,
            fd_step: 1e-6,
            max_iters: 500,
            n_steps: 3000,
            label_step: 1e-5,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("delta", self.delta)?;
        positive("eps0", self.eps0)?;
        positive("eps_scale", self.eps_scale)?;
        positive("fd_step", self.fd_step)?;
        positive("label_step", self.label_step)?;
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be >= 1"));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be >= 1"));
        }
        Ok(())
    }
}

/// A converged complex root and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RootResult {
    pub x1_0: f64,
    pub p1_0: f64,
    /// Final endpoint distance `D`.
    pub distance: f64,
    /// Descent steps attempted, including rejected ones.
    pub iters: usize,
    /// Number of finite-difference sensitivity evaluations.
    pub gradient_evaluations: usize,
    /// Step halvings performed; nonzero means the line-search fallback ran.
    pub halvings: usize,
    /// Most recent endpoint sensitivity, reusable as a warm start.
    pub jacobian: Option<Jacobian>,
    pub trajectory: Trajectory,
    pub labels: PropagatorLabels,
}

impl RootResult {
    pub fn guess(&self) -> (f64, f64) {
        (self.x1_0, self.p1_0)
    }
}

/// Completes a guess `(x1(0), p1(0))` to a full initial point satisfying
/// `u(0) = z'`: `x2(0) = (c/b)(x1(0) − q')`, `p2(0) = (b/c)(p' − p1(0))`.
pub fn initial_conditions_from_guess(
    x1_0: f64,
    p1_0: f64,
    labels: &PropagatorLabels,
    params: &ModelParams,
) -> ComplexPhasePoint {
    let r = params.width_ratio();
    let init = labels.initial();
    ComplexPhasePoint::new(x1_0, p1_0, (x1_0 - init.q()) / r, r * (init.p() - p1_0))
}

/// Violation of the final condition `v(T) = z''*`, split into its position
/// and momentum parts.
pub fn endpoint_residual(
    end: &ComplexPhasePoint,
    labels: &PropagatorLabels,
    params: &ModelParams,
) -> [f64; 2] {
    let r = params.width_ratio();
    let fin = labels.final_label();
    [end.x1 + r * end.x2 - fin.q(), end.p1 - end.p2 / r - fin.p()]
}

/// `D`: Euclidean norm of the final-condition residual at the end of `traj`.
pub fn endpoint_distance(traj: &Trajectory, labels: &PropagatorLabels, params: &ModelParams) -> f64 {
    let [a, b] = endpoint_residual(traj.end(), labels, params);
    a.hypot(b)
}

struct Problem<'a> {
    labels: &'a PropagatorLabels,
    params: &'a ModelParams,
    model: SmoothedHamiltonian,
    config: &'a ShootingConfig,
}

impl<'a> Problem<'a> {
    fn new(labels: &'a PropagatorLabels, params: &'a ModelParams, config: &'a ShootingConfig) -> Self {
        Self {
            labels,
            params,
            model: SmoothedHamiltonian::new(*params),
            config,
        }
    }

    fn residual(&self, g: [f64; 2]) -> Result<[f64; 2]> {
        let start = initial_conditions_from_guess(g[0], g[1], self.labels, self.params);
        let end = integrate_endpoint(&self.model, start, self.labels.time(), self.config.n_steps)?;
        let f = endpoint_residual(&end, self.labels, self.params);
        if f.iter().all(|v| v.is_finite()) {
            Ok(f)
        } else {
            Err(Error::NonFinite {
                step: self.config.n_steps,
                time: self.labels.time(),
            })
        }
    }

    fn distance(&self, g: [f64; 2]) -> Result<f64> {
        self.residual(g).map(|f| f[0].hypot(f[1]))
    }

    fn fd_step(&self, g: [f64; 2]) -> f64 {
        self.config.fd_step * g[0].hypot(g[1]).max(1.0)
    }

    fn jacobian(&self, g: [f64; 2]) -> Result<Jacobian> {
        let h = self.fd_step(g);
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut hi = g;
            let mut lo = g;
            hi[j] += h;
            lo[j] -= h;
            let (fh, fl) = (self.residual(hi)?, self.residual(lo)?);
            for i in 0..2 {
                jac[i][j] = (fh[i] - fl[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn finish(&self, g: [f64; 2], stats: Stats, jacobian: Option<Jacobian>) -> Result<RootResult> {
        let start = initial_conditions_from_guess(g[0], g[1], self.labels, self.params);
        let trajectory = integrate(&self.model, start, self.labels.time(), self.config.n_steps)?;
        Ok(RootResult {
            x1_0: g[0],
            p1_0: g[1],
            distance: endpoint_distance(&trajectory, self.labels, self.params),
            iters: stats.iters,
            gradient_evaluations: stats.gradient_evaluations,
            halvings: stats.halvings,
            jacobian,
            trajectory,
            labels: *self.labels,
        })
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Stats {
    iters: usize,
    gradient_evaluations: usize,
    halvings: usize,
}

/// `∇D` by central finite differences of `D` itself, with step
/// `fd_step · max(1, |guess|)`.
///
/// `D` has a conical minimum at a root, so inside one stencil width of the
/// root this estimate degrades towards zero; [`descend`] therefore builds
/// its gradient from the smooth residual instead.
pub fn gradient_of_d(
    x1_0: f64,
    p1_0: f64,
    labels: &PropagatorLabels,
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<[f64; 2]> {
    config.validate()?;
    let problem = Problem::new(labels, params, config);
    let g = [x1_0, p1_0];
    let h = problem.fd_step(g);
    let mut grad = [0.0; 2];
    for (j, slot) in grad.iter_mut().enumerate() {
        let mut hi = g;
        let mut lo = g;
        hi[j] += h;
        lo[j] -= h;
        *slot = (problem.distance(hi)? - problem.distance(lo)?) / (2.0 * h);
    }
    Ok(grad)
}

/// Finite-difference sensitivity of the final residual to the guess.
pub fn endpoint_jacobian(
    x1_0: f64,
    p1_0: f64,
    labels: &PropagatorLabels,
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<Jacobian> {
    config.validate()?;
    Problem::new(labels, params, config).jacobian([x1_0, p1_0])
}

/// Steepest descent on `D` from `guess` until `D ≤ delta`.
pub fn descend(
    guess: (f64, f64),
    labels: &PropagatorLabels,
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<RootResult> {
    descend_warm(guess, None, labels, params, config)
}

/// [`descend`] with an optional endpoint sensitivity to start from, e.g. the
/// one carried by a nearby root.
pub fn descend_warm(
    guess: (f64, f64),
    jacobian_hint: Option<Jacobian>,
    labels: &PropagatorLabels,
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<RootResult> {
    config.validate()?;
    let problem = Problem::new(labels, params, config);

    if labels.time() == 0.0 {
        // u(0) = z' and v(0) = z''* hold simultaneously at the midpoint.
        let init = labels.initial();
        let fin = labels.final_label();
        let g = [0.5 * (init.q() + fin.q()), 0.5 * (init.p() + fin.p())];
        return problem.finish(g, Stats::default(), jacobian_hint);
    }

    // The descent runs in units proportional to the coherent widths,
    // y = (x1/wq, p1/wp) with wq/wp = b/c and wq·wp = 1, and residual
    // (F1/wq, F2/wp). When b = c this is plain D; otherwise it removes the
    // b/c anisotropy of the endpoint map. Convergence is always judged on
    // the unscaled D.
    let ratio = params.width_ratio().sqrt();
    let w = [ratio, 1.0 / ratio];
    let scaled = |f: [f64; 2]| (f[0] / w[0]).hypot(f[1] / w[1]);

    let mut x = [guess.0, guess.1];
    let mut f = problem.residual(x)?;
    let mut d = f[0].hypot(f[1]);
    let mut ds = scaled(f);
    let mut stats = Stats::default();
    let mut jac = jacobian_hint;
    let mut fresh = false;

    while d > config.delta {
        if stats.iters >= config.max_iters {
            return Err(no_convergence(stats, d, x));
        }
        let j = match jac {
            Some(j) => j,
            None => {
                let j = problem.jacobian(x)?;
                stats.gradient_evaluations += 1;
                fresh = true;
                jac = Some(j);
                j
            }
        };
        // ∇D in scaled coordinates: J_sᵀ G / |G|, J_s[i][k] = J[i][k] w[k] / w[i].
        let g = [f[0] / w[0], f[1] / w[1]];
        let grad = [
            (j[0][0] * g[0] / w[0] + j[1][0] * g[1] / w[1]) * w[0] / ds,
            (j[0][1] * g[0] / w[0] + j[1][1] * g[1] / w[1]) * w[1] / ds,
        ];
        let norm = grad[0].hypot(grad[1]);
        if !(norm.is_finite() && norm > 0.0) {
            if fresh {
                return Err(no_convergence(stats, d, x));
            }
            jac = None;
            continue;
        }
        let dir = [grad[0] / norm, grad[1] / norm];
        let mut eps = (config.eps_scale * ds / norm).min(config.eps0);

        let mut accepted = None;
        for halving in 0..=MAX_HALVINGS {
            if stats.iters >= config.max_iters {
                return Err(no_convergence(stats, d, x));
            }
            stats.iters += 1;
            let trial = [x[0] - eps * dir[0] * w[0], x[1] - eps * dir[1] * w[1]];
            if let Ok(ft) = problem.residual(trial) {
                let dst = scaled(ft);
                // A reused sensitivity must at least halve D to be kept.
                let target = if fresh { ds } else { STALE_DECREASE * ds };
                if dst < target {
                    accepted = Some((trial, ft, dst));
                    break;
                }
            }
            if !fresh {
                break;
            }
            if halving < MAX_HALVINGS {
                eps *= 0.5;
                stats.halvings += 1;
            }
        }

        match accepted {
            Some((xt, ft, dst)) => {
                x = xt;
                f = ft;
                d = f[0].hypot(f[1]);
                ds = dst;
                fresh = false;
            }
            // Stale sensitivity: refresh it and retry from the same point.
            None if !fresh => jac = None,
            None => return Err(no_convergence(stats, d, x)),
        }
    }
    if stats.halvings > 0 {
        log::debug!("root search used {} step halvings", stats.halvings);
    }
    problem.finish(x, stats, jac)
}

fn no_convergence(stats: Stats, d: f64, x: [f64; 2]) -> Error {
    Error::NoConvergence {
        iters: stats.iters,
        best_distance: d,
        best_x1: x[0],
        best_p1: x[1],
    }
}

/// Where and why a continuation sweep stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub index: usize,
    pub time: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSweep {
    pub roots: Vec<RootResult>,
    pub failure: Option<SweepFailure>,
}

impl ContinuationSweep {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("T_grid", "times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("T_grid", "times must be strictly ascending"));
    }
    Ok(())
}

/// Roots along an ascending time grid, each search seeded with the previous
/// root. The first search starts from the real point `(q', p')` unless a
/// seed is given.
pub fn continuation_sweep(
    labels_base: &PropagatorLabels,
    times: &[f64],
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<ContinuationSweep> {
    let seed = (labels_base.initial().q(), labels_base.initial().p());
    continuation_from(seed, labels_base, times, params, config)
}

/// [`continuation_sweep`] starting from an explicit seed.
pub fn continuation_from(
    seed: (f64, f64),
    labels_base: &PropagatorLabels,
    times: &[f64],
    params: &ModelParams,
    config: &ShootingConfig,
) -> Result<ContinuationSweep> {
    config.validate()?;
    check_grid(times)?;
    let mut roots: Vec<RootResult> = Vec::with_capacity(times.len());
    let mut guess = seed;
    let mut hint = None;
    for (index, &time) in times.iter().enumerate() {
        let labels = labels_base.at_time(time)?;
        match descend_warm(guess, hint, &labels, params, config) {
            Ok(root) => {
                guess = root.guess();
                hint = root.jacobian;
                roots.push(root);
            }
            Err(error) => {
                return Ok(ContinuationSweep {
                    roots,
                    failure: Some(SweepFailure { index, time, error }),
                })
            }
        }
    }
    Ok(ContinuationSweep {
        roots,
        failure: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub roots: Vec<RootResult>,
    /// Seeds whose descent failed.
    pub failed: usize,
}

/// Descends from every seed and keeps the distinct roots, in seed order.
pub fn multi_start(
    labels: &PropagatorLabels,
    params: &ModelParams,
    config: &ShootingConfig,
    seeds: &[(f64, f64)],
) -> Result<MultiStart> {
    config.validate()?;
    let mut roots: Vec<RootResult> = Vec::new();
    let mut failed = 0;
    for &seed in seeds {
        match descend(seed, labels, params, config) {
            Ok(root) => {
                if !roots.iter().any(|r| same_root(r.guess(), root.guess())) {
                    roots.push(root);
                }
            }
            Err(e) => {
                log::debug!("seed {seed:?} dropped: {e}");
                failed += 1;
            }
        }
    }
    Ok(MultiStart { roots, failed })
}

pub(crate) fn same_root(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).hypot(a.1 - b.1) < ROOT_DEDUP_TOLERANCE
}
