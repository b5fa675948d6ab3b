//! Fixed-step RK4 propagation of the complexified Hamiltonian flow.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{ComplexPhasePoint, SmoothedHamiltonian};

/// Relative energy drift above which a trajectory is flagged.
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub pt: ComplexPhasePoint,
}

/// A stored trajectory on a uniform time grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    model: SmoothedHamiltonian,
    points: Vec<TrajectoryPoint>,
    step: f64,
    energy0: Complex64,
    max_energy_drift: f64,
}

impl Trajectory {
    pub fn model(&self) -> &SmoothedHamiltonian {
        &self.model
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn start(&self) -> &ComplexPhasePoint {
        &self.points[0].pt
    }

    pub fn end(&self) -> &ComplexPhasePoint {
        &self.points[self.points.len() - 1].pt
    }

    pub fn duration(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    /// Grid spacing `T / n_steps` (zero for a single-point trajectory).
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.points.len() - 1
    }

    /// `H̃` at `t = 0`.
    pub fn energy0(&self) -> Complex64 {
        self.energy0
    }

    /// `max_k |H̃(points[k]) − E0| / max(1, |E0|)`.
    pub fn max_energy_drift(&self) -> f64 {
        self.max_energy_drift
    }

    pub fn conserves_energy(&self) -> bool {
        self.max_energy_drift <= ENERGY_DRIFT_TOLERANCE
    }
}

fn rk4_step(model: &SmoothedHamiltonian, y: [f64; 4], h: f64) -> [f64; 4] {
    let f = |y: [f64; 4]| model.flow_rhs(&ComplexPhasePoint::from_array(y));
    let axpy = |y: [f64; 4], a: f64, k: [f64; 4]| {
        [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]]
    };
    let k1 = f(y);
    let k2 = f(axpy(y, 0.5 * h, k1));
    let k3 = f(axpy(y, 0.5 * h, k2));
    let k4 = f(axpy(y, h, k3));
    let mut out = y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn check_inputs(time: f64, n_steps: usize) -> Result<()> {
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be >= 1"));
    }
    if !(time.is_finite() && time >= 0.0) {
        return Err(invalid("T", format!("must be finite and >= 0, got {time}")));
    }
    Ok(())
}

/// Integrates `n_steps` RK4 steps over `[0, time]`, storing every point.
/// `time == 0` yields the single-point trajectory.
pub fn integrate(
    model: &SmoothedHamiltonian,
    start: ComplexPhasePoint,
    time: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    check_inputs(time, n_steps)?;
    let energy0 = model.energy_at(&start);
    let scale = energy0.norm().max(1.0);
    let mut points = Vec::with_capacity(if time == 0.0 { 1 } else { n_steps + 1 });
    points.push(TrajectoryPoint { t: 0.0, pt: start });
    let mut max_energy_drift = 0.0f64;

    let step = if time == 0.0 { 0.0 } else { time / n_steps as f64 };
    if time > 0.0 {
        let mut y = start.to_array();
        for k in 1..=n_steps {
            y = rk4_step(model, y, step);
            let pt = ComplexPhasePoint::from_array(y);
            let t = if k == n_steps { time } else { k as f64 * step };
            if !pt.is_finite() {
                return Err(Error::NonFinite { step: k, time: t });
            }
            max_energy_drift = max_energy_drift.max((model.energy_at(&pt) - energy0).norm() / scale);
            points.push(TrajectoryPoint { t, pt });
        }
    }
    if max_energy_drift > ENERGY_DRIFT_TOLERANCE {
        log::warn!(
            "relative energy drift {max_energy_drift:e} exceeds {ENERGY_DRIFT_TOLERANCE:e} over T = {time}"
        );
    }
    Ok(Trajectory {
        model: *model,
        points,
        step,
        energy0,
        max_energy_drift,
    })
}

/// Same flow as [`integrate`], returning only the final point.
pub fn integrate_endpoint(
    model: &SmoothedHamiltonian,
    start: ComplexPhasePoint,
    time: f64,
    n_steps: usize,
) -> Result<ComplexPhasePoint> {
    check_inputs(time, n_steps)?;
    if time == 0.0 {
        return Ok(start);
    }
    let step = time / n_steps as f64;
    let mut y = start.to_array();
    for k in 1..=n_steps {
        y = rk4_step(model, y, step);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                step: k,
                time: k as f64 * step,
            });
        }
    }
    Ok(ComplexPhasePoint::from_array(y))
}

/// Primitive period of the `(x1, p1)` projection.
///
/// The section is the line through the starting point perpendicular to the
/// initial `(ẋ1, ṗ1)`. A return is a crossing of that line in the initial
/// direction of motion, within a tenth of the orbit's extent from the start;
/// crossing times are linearly interpolated between grid points. The period
/// is the mean gap between consecutive returns, counting `t = 0`. Returns
/// `None` when no full turn fits in the trajectory.
pub fn period_estimate(traj: &Trajectory) -> Option<f64> {
    let pts = traj.points();
    if pts.len() < 3 {
        return None;
    }
    let origin = (pts[0].pt.x1, pts[0].pt.p1);
    let v = traj.model().flow_rhs(&pts[0].pt);
    let (vx, vp) = (v[0], v[1]);
    let speed = vx.hypot(vp);
    if speed == 0.0 || !speed.is_finite() {
        return None;
    }
    let (dx, dp) = (vx / speed, vp / speed);

    let (mut lo_x, mut hi_x, mut lo_p, mut hi_p) = (origin.0, origin.0, origin.1, origin.1);
    for tp in pts {
        lo_x = lo_x.min(tp.pt.x1);
        hi_x = hi_x.max(tp.pt.x1);
        lo_p = lo_p.min(tp.pt.p1);
        hi_p = hi_p.max(tp.pt.p1);
    }
    let extent = (hi_x - lo_x).hypot(hi_p - lo_p);
    if extent == 0.0 {
        return None;
    }
    let radius = 0.1 * extent;

    let signed = |pt: &ComplexPhasePoint| (pt.x1 - origin.0) * dx + (pt.p1 - origin.1) * dp;
    let mut hits = Vec::new();
    for w in pts.windows(2).skip(1) {
        let (a, b) = (signed(&w[0].pt), signed(&w[1].pt));
        if !(a < 0.0 && b >= 0.0) {
            continue;
        }
        let frac = -a / (b - a);
        let x = w[0].pt.x1 + frac * (w[1].pt.x1 - w[0].pt.x1);
        let p = w[0].pt.p1 + frac * (w[1].pt.p1 - w[0].pt.p1);
        if (x - origin.0).hypot(p - origin.1) <= radius {
            hits.push(w[0].t + frac * (w[1].t - w[0].t));
        }
    }
    let last = *hits.last()?;
    Some(last / hits.len() as f64)
}
