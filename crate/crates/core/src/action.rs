//! Complex action and semiclassical amplitude of a converged root.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::{CoherentLabel, ModelParams, PropagatorLabels};
use crate::quad;
use crate::shooting::{descend_warm, RootResult, ShootingConfig};

/// `|∂²S/∂u'∂v''|` below `CAUSTIC_THRESHOLD · ħ` is treated as a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e-12;

/// Complex action `S = I_s + f` of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionResult {
    /// Path term `∫ [(iħ/2)(v u̇ − u v̇) − H̃] dt`.
    pub path: Complex64,
    /// Boundary term `−(iħ/2)(v'' u(T) + v(0) u')`.
    pub boundary: Complex64,
    pub total: Complex64,
}

impl ActionResult {
    fn new(path: Complex64, boundary: Complex64) -> Self {
        Self {
            path,
            boundary,
            total: path + boundary,
        }
    }
}

/// Amplitude ingredients of one root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefactorResult {
    /// `∂²S/∂u'∂v''`.
    pub d2s: Complex64,
    /// `∫₀ᵀ ∂²H̃/∂u∂v dt`.
    pub phase_integral: Complex64,
    /// `Δ = −iħ (d2s)⁻¹ exp(−(i/ħ) phase_integral)`.
    pub delta: Complex64,
}

impl PrefactorResult {
    /// `1/Δ`, whose square root weights the root's contribution.
    pub fn inverse_delta(&self) -> Complex64 {
        self.delta.inv()
    }
}

/// Action along `traj` in `u, v` arithmetic, with `u' = z'` and `v'' = z''*`
/// taken from the labels and `u(T)`, `v(0)` from the trajectory.
pub fn action(traj: &Trajectory, labels: &PropagatorLabels, params: &ModelParams) -> ActionResult {
    let model = traj.model();
    let i = Complex64::i();
    let hbar = params.hbar();
    let (b, c) = (params.b(), params.c());
    let s2 = std::f64::consts::SQRT_2;
    let integrand: Vec<Complex64> = traj
        .points()
        .iter()
        .map(|tp| {
            let pt = &tp.pt;
            let (u, v) = (pt.u(params), pt.v(params));
            let q_dot = model.dh_dp(pt.p());
            let p_dot = -model.dh_dq(pt.q());
            let u_dot = (q_dot / b + i * p_dot / c) / s2;
            let v_dot = (q_dot / b - i * p_dot / c) / s2;
            i * (0.5 * hbar) * (v * u_dot - u * v_dot) - model.energy_at(pt)
        })
        .collect();
    let path = quad::uniform(&integrand, traj.step());
    let u_end = traj.end().u(params);
    let v_start = traj.start().v(params);
    let boundary = -i * (0.5 * hbar) * (labels.v_final() * u_end + v_start * labels.u_initial());
    ActionResult::new(path, boundary)
}

/// The same action assembled from the real coordinates `(x1, p1, x2, p2)`.
///
/// The path term splits into `½∮(p1 dx1 + p2 dx2 − x1 dp1 − x2 dp2)`,
/// `(i/2)∮(x2 dx1 + p1 dp2 − x1 dx2 − p2 dp1)` and `−H̃ T`, using that
/// `H̃` is conserved. The boundary term is written with the real labels and
/// the real parts of the endpoints. Kept as an independent check on
/// [`action`].
pub fn action_components(
    traj: &Trajectory,
    labels: &PropagatorLabels,
    params: &ModelParams,
) -> ActionResult {
    let model = traj.model();
    let integrand: Vec<Complex64> = traj
        .points()
        .iter()
        .map(|tp| {
            let pt = &tp.pt;
            let [dx1, dp1, dx2, dp2] = model.flow_rhs(pt);
            let re = pt.p1 * dx1 + pt.p2 * dx2 - pt.x1 * dp1 - pt.x2 * dp2;
            let im = pt.x2 * dx1 + pt.p1 * dp2 - pt.x1 * dx2 - pt.p2 * dp1;
            Complex64::new(0.5 * re, 0.5 * im)
        })
        .collect();
    let path = quad::uniform(&integrand, traj.step()) - traj.energy0() * traj.duration();

    let (init, fin): (&CoherentLabel, &CoherentLabel) = (labels.initial(), labels.final_label());
    let (q_i, p_i, q_f, p_f) = (init.q(), init.p(), fin.q(), fin.p());
    let (x1_s, p1_s) = (traj.start().x1, traj.start().p1);
    let (x1_e, p1_e) = (traj.end().x1, traj.end().p1);
    let ratio = params.width_ratio();
    let re = 0.5 * (q_f * p1_e + p_i * x1_s - p_f * x1_e - q_i * p1_s);
    let im = -0.5 * ((q_f * x1_e + q_i * x1_s) / ratio + ratio * (p_f * p1_e + p_i * p1_s))
        + 0.5 * params.hbar() * (fin.norm_sqr() + init.norm_sqr());
    ActionResult::new(path, Complex64::new(re, im))
}

/// `∂²S/∂u'∂v''` from the sensitivity of the root's final `x1`, `p1` to the
/// initial label:
/// `ħ[(b/c)∂p1''/∂q' − (c/b)∂x1''/∂p' − i(∂x1''/∂q' + ∂p1''/∂p')]`.
///
/// Each partial is a central difference over roots re-converged at
/// `q' ± h` and `p' ± h`, seeded from `root`.
pub fn d2s_mixed(root: &RootResult, params: &ModelParams, config: &ShootingConfig) -> Result<Complex64> {
    let h = config.label_step;
    let labels = &root.labels;
    let (q, p) = (labels.initial().q(), labels.initial().p());
    let end_at = |qi: f64, pi: f64| -> Result<(f64, f64)> {
        let shifted = PropagatorLabels::new(
            CoherentLabel::new(qi, pi, params),
            *labels.final_label(),
            labels.time(),
        )?;
        let r = descend_warm(root.guess(), root.jacobian, &shifted, params, config)?;
        let end = r.trajectory.end();
        Ok((end.x1, end.p1))
    };
    let (xq_hi, pq_hi) = end_at(q + h, p)?;
    let (xq_lo, pq_lo) = end_at(q - h, p)?;
    let (xp_hi, pp_hi) = end_at(q, p + h)?;
    let (xp_lo, pp_lo) = end_at(q, p - h)?;
    let dx_dq = (xq_hi - xq_lo) / (2.0 * h);
    let dp_dq = (pq_hi - pq_lo) / (2.0 * h);
    let dx_dp = (xp_hi - xp_lo) / (2.0 * h);
    let dp_dp = (pp_hi - pp_lo) / (2.0 * h);
    let ratio = params.width_ratio();
    Ok(Complex64::new(ratio * dp_dq - dx_dp / ratio, -(dx_dq + dp_dp)) * params.hbar())
}

/// `∫₀ᵀ ∂²H̃/∂u∂v dt` along the stored grid.
pub fn phase_integral(traj: &Trajectory) -> Complex64 {
    let model = traj.model();
    let values: Vec<Complex64> = traj
        .points()
        .iter()
        .map(|tp| model.mixed_second_derivative(&tp.pt))
        .collect();
    quad::uniform(&values, traj.step())
}

/// `Δ = −iħ (d2s)⁻¹ exp(−(i/ħ) phase_int)`.
pub fn amplitude_delta(d2s: Complex64, phase_int: Complex64, params: &ModelParams) -> Result<Complex64> {
    let hbar = params.hbar();
    let threshold = CAUSTIC_THRESHOLD * hbar;
    if !(d2s.norm() >= threshold) {
        return Err(Error::Caustic {
            magnitude: d2s.norm(),
            threshold,
        });
    }
    let i = Complex64::i();
    Ok(-i * hbar / d2s * (-i * phase_int / hbar).exp())
}

/// All amplitude ingredients of a converged root.
pub fn prefactor(root: &RootResult, params: &ModelParams, config: &ShootingConfig) -> Result<PrefactorResult> {
    let d2s = d2s_mixed(root, params, config)?;
    let phase_integral = phase_integral(&root.trajectory);
    let delta = amplitude_delta(d2s, phase_integral, params)?;
    Ok(PrefactorResult {
        d2s,
        phase_integral,
        delta,
    })
}
