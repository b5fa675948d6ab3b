//! Semiclassical coherent-state propagator assembled from complex roots.

use num_complex::Complex64;

use crate::action::{action, prefactor, ActionResult, PrefactorResult};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PropagatorLabels};
use crate::phase::unwrap_half_phase;
use crate::shooting::{
    check_grid, continuation_from, same_root, ContinuationSweep, RootResult, ShootingConfig, SweepFailure,
};

/// Roots whose `|exp(iS/ħ)|` falls below `1e-300` are dropped.
pub const UNDERFLOW_LOG: f64 = -690.775_527_898_213_7;

/// One root's share of a propagator value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootContribution {
    pub x1_0: f64,
    pub p1_0: f64,
    pub distance: f64,
    pub action: Complex64,
    pub delta: Complex64,
    /// Argument of the square root of `1/Δ`, tracked along the sweep.
    pub sigma: f64,
    /// `|Δ|^{-1/2} exp(iσ) exp(iS/ħ)`.
    pub term: Complex64,
    /// Largest relative change of the complex energy along the trajectory.
    pub energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSample {
    pub t: f64,
    pub k_scsp: Complex64,
    /// `exp(−|z'|²/2 − |z''|²/2)`.
    pub gaussian: f64,
    pub roots: Vec<RootContribution>,
}

impl PropagatorSample {
    /// Rebuilds `k_scsp` from the breakdown with the same operations.
    pub fn recompute(&self) -> Complex64 {
        sum_terms(self.roots.iter().map(|r| r.term)) * self.gaussian
    }
}

fn sum_terms(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    terms.fold(Complex64::new(0.0, 0.0), |acc, t| acc + t)
}

/// Everything [`assemble`] needs about one converged root.
#[derive(Debug, Clone, Copy)]
pub struct RootInput<'a> {
    pub root: &'a RootResult,
    pub action: &'a ActionResult,
    pub prefactor: &'a PrefactorResult,
    pub sigma: f64,
}

/// `|Δ|^{-1/2} exp(iσ) exp(iS/ħ)`, or `None` when the exponential underflows.
pub fn root_term(action: Complex64, delta: Complex64, sigma: f64, hbar: f64) -> Result<Option<Complex64>> {
    let modulus = delta.norm();
    if !(modulus.is_finite() && modulus > 0.0) {
        return Err(Error::Caustic {
            magnitude: modulus,
            threshold: 0.0,
        });
    }
    let exponent = Complex64::i() * action / hbar;
    if exponent.re < UNDERFLOW_LOG {
        return Ok(None);
    }
    Ok(Some(
        (exponent + Complex64::i() * sigma).exp() / modulus.sqrt(),
    ))
}

pub fn assemble(inputs: &[RootInput<'_>], labels: &PropagatorLabels, params: &ModelParams) -> Result<PropagatorSample> {
    let gaussian = (-0.5 * (labels.initial().norm_sqr() + labels.final_label().norm_sqr())).exp();
    let mut roots = Vec::with_capacity(inputs.len());
    for input in inputs {
        let Some(term) = root_term(input.action.total, input.prefactor.delta, input.sigma, params.hbar())? else {
            log::debug!("root {:?} underflows at T = {}", input.root.guess(), labels.time());
            continue;
        };
        let traj = &input.root.trajectory;
        roots.push(RootContribution {
            x1_0: input.root.x1_0,
            p1_0: input.root.p1_0,
            distance: input.root.distance,
            action: input.action.total,
            delta: input.prefactor.delta,
            sigma: input.sigma,
            term,
            energy_drift: traj.max_energy_drift(),
        });
    }
    let k_scsp = sum_terms(roots.iter().map(|r| r.term)) * gaussian;
    Ok(PropagatorSample {
        t: labels.time(),
        k_scsp,
        gaussian,
        roots,
    })
}

/// Samples of one propagation sweep; `failure` marks where it stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSweep {
    pub samples: Vec<PropagatorSample>,
    pub failure: Option<SweepFailure>,
}

impl PropagationSweep {
    pub fn is_truncated(&self) -> bool {
        self.failure.is_some()
    }
}

/// Per-time data of one continuation family.
struct Family {
    roots: Vec<RootResult>,
    actions: Vec<ActionResult>,
    prefactors: Vec<PrefactorResult>,
    sigmas: Vec<f64>,
    failure: Option<SweepFailure>,
}

fn evaluate_family(
    sweep: ContinuationSweep,
    times: &[f64],
    params: &ModelParams,
    config: &ShootingConfig,
) -> Family {
    let ContinuationSweep { mut roots, mut failure } = sweep;
    let actions: Vec<ActionResult> = roots
        .iter()
        .map(|r| action(&r.trajectory, &r.labels, params))
        .collect();
    let results = post_roots(&roots, params, config);
    let mut prefactors = Vec::with_capacity(roots.len());
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(p) => prefactors.push(p),
            Err(error) => {
                failure = Some(SweepFailure {
                    index,
                    time: times[index],
                    error,
                });
                break;
            }
        }
    }
    let mut n = prefactors.len();
    let inverse: Vec<Complex64> = prefactors.iter().map(PrefactorResult::inverse_delta).collect();
    // At T = 0 the prefactor is exactly 1, so the principal branch is the
    // continuous one; later starts take the principal branch as well.
    let sigmas = match unwrap_half_phase(&inverse, None) {
        Ok(s) => s,
        Err(Error::Discontinuity { index, jump }) => {
            n = index + 1;
            failure = Some(SweepFailure {
                index: n,
                time: times[n],
                error: Error::Discontinuity { index, jump },
            });
            unwrap_half_phase(&inverse[..n], None).expect("prefix was already accepted")
        }
        Err(error) => {
            n = 0;
            failure = Some(SweepFailure {
                index: 0,
                time: times[0],
                error,
            });
            Vec::new()
        }
    };
    roots.truncate(n);
    prefactors.truncate(n);
    let mut actions = actions;
    actions.truncate(n);
    Family {
        roots,
        actions,
        prefactors,
        sigmas,
        failure,
    }
}

/// Prefactors of every root, spread over the available cores. Each entry is
/// independent because the roots are already known.
fn post_roots(roots: &[RootResult], params: &ModelParams, config: &ShootingConfig) -> Vec<Result<PrefactorResult>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(roots.len().max(1));
    if workers <= 1 {
        return roots.iter().map(|r| prefactor(r, params, config)).collect();
    }
    let chunk = roots.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = roots
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|r| prefactor(r, params, config)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("prefactor worker panicked"))
            .collect()
    })
}

/// Propagator along an ascending time grid.
///
/// The default family continues from the real point `(q', p')`; every entry
/// of `extra_seeds` starts one more family. Families that land on the same
/// root at a given time contribute once. The sweep ends at the first time any
/// family fails.
pub fn propagate_sweep(
    labels_base: &PropagatorLabels,
    times: &[f64],
    params: &ModelParams,
    config: &ShootingConfig,
    extra_seeds: &[(f64, f64)],
) -> Result<PropagationSweep> {
    config.validate()?;
    check_grid(times)?;
    let mut seeds = vec![(labels_base.initial().q(), labels_base.initial().p())];
    seeds.extend_from_slice(extra_seeds);
    let mut families = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let sweep = continuation_from(seed, labels_base, times, params, config)?;
        families.push(evaluate_family(sweep, times, params, config));
    }
    let len = families.iter().map(|f| f.roots.len()).min().unwrap_or(0);
    let failure = families
        .iter()
        .filter_map(|f| f.failure.clone())
        .min_by_key(|f| f.index);
    let mut samples = Vec::with_capacity(len);
    for (k, &t) in times.iter().enumerate().take(len) {
        let labels = labels_base.at_time(t)?;
        let mut inputs: Vec<RootInput<'_>> = Vec::with_capacity(families.len());
        for fam in &families {
            let root = &fam.roots[k];
            if inputs.iter().any(|i| same_root(i.root.guess(), root.guess())) {
                continue;
            }
            inputs.push(RootInput {
                root,
                action: &fam.actions[k],
                prefactor: &fam.prefactors[k],
                sigma: fam.sigmas[k],
            });
        }
        samples.push(assemble(&inputs, &labels, params)?);
    }
    if let Some(f) = &failure {
        log::warn!("propagation truncated at T = {} (index {}): {}", f.time, f.index, f.error);
    }
    Ok(PropagationSweep { samples, failure })
}

/// Evenly spaced grid of `n` points over `[0, t_max]`.
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}
