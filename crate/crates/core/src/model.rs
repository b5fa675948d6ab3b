//! Physical parameters, coherent-state labels and the smoothed Hamiltonian.
//!
//! The quantum Hamiltonian is `H = p²/2 + λq²/2 + βq⁴` at unit mass. Its
//! coherent-state expectation value `H̃(q, p) = ⟨z|H|z⟩` is again a
//! polynomial, and it is this polynomial, continued to complex `q` and `p`,
//! that generates the complex classical trajectories.

use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::error::{invalid, Result};

/// Physical constants of the model. The momentum width `c` is always derived
/// as `hbar / b`, so `b * c == hbar` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    hbar: f64,
    b: f64,
    c: f64,
    lambda: f64,
    beta: f64,
}

impl ModelParams {
    pub fn new(hbar: f64, b: f64, lambda: f64, beta: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(invalid("hbar", format!("must be finite and > 0, got {hbar}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", format!("must be finite and > 0, got {b}")));
        }
        if !lambda.is_finite() {
            return Err(invalid("lambda", format!("must be finite, got {lambda}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
        }
        Ok(Self {
            hbar,
            b,
            c: hbar / b,
            lambda,
            beta,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Position width of the coherent states.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Momentum width, `hbar / b`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `b / c`, the ratio that couples real and imaginary parts in the
    /// boundary conditions.
    pub fn width_ratio(&self) -> f64 {
        self.b / self.c
    }
}

/// A coherent-state label `z = (q/b + i p/c)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    q: f64,
    p: f64,
    z: Complex64,
}

impl CoherentLabel {
    pub fn new(q: f64, p: f64, params: &ModelParams) -> Self {
        Self {
            q,
            p,
            z: Self::label(q, p, params),
        }
    }

    fn label(q: f64, p: f64, params: &ModelParams) -> Complex64 {
        Complex64::new(q / params.b(), p / params.c()) / SQRT_2
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `|z|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.z.norm_sqr()
    }
}

/// Initial label `z'`, final label `z''` and the propagation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorLabels {
    initial: CoherentLabel,
    final_: CoherentLabel,
    time: f64,
}

impl PropagatorLabels {
    pub fn new(initial: CoherentLabel, final_: CoherentLabel, time: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(invalid("T", format!("must be finite and >= 0, got {time}")));
        }
        Ok(Self {
            initial,
            final_,
            time,
        })
    }

    /// Convenience constructor from raw `(q', p', q'', p'', T)`.
    pub fn from_values(
        q_i: f64,
        p_i: f64,
        q_f: f64,
        p_f: f64,
        time: f64,
        params: &ModelParams,
    ) -> Result<Self> {
        Self::new(
            CoherentLabel::new(q_i, p_i, params),
            CoherentLabel::new(q_f, p_f, params),
            time,
        )
    }

    pub fn initial(&self) -> &CoherentLabel {
        &self.initial
    }

    pub fn final_label(&self) -> &CoherentLabel {
        &self.final_
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Same labels at a different time.
    pub fn at_time(&self, time: f64) -> Result<Self> {
        Self::new(self.initial, self.final_, time)
    }

    /// `u' = z'`.
    pub fn u_initial(&self) -> Complex64 {
        self.initial.z()
    }

    /// `v'' = z''*`.
    pub fn v_final(&self) -> Complex64 {
        self.final_.z().conj()
    }
}

/// A point of complexified phase space, `q = x1 + i p2`, `p = p1 + i x2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexPhasePoint {
    pub x1: f64,
    pub p1: f64,
    pub x2: f64,
    pub p2: f64,
}

impl ComplexPhasePoint {
    pub const ORIGIN: Self = Self {
        x1: 0.0,
        p1: 0.0,
        x2: 0.0,
        p2: 0.0,
    };

    pub fn new(x1: f64, p1: f64, x2: f64, p2: f64) -> Self {
        Self { x1, p1, x2, p2 }
    }

    pub fn from_qp(q: Complex64, p: Complex64) -> Self {
        Self {
            x1: q.re,
            p1: p.re,
            x2: p.im,
            p2: q.im,
        }
    }

    pub fn q(&self) -> Complex64 {
        Complex64::new(self.x1, self.p2)
    }

    pub fn p(&self) -> Complex64 {
        Complex64::new(self.p1, self.x2)
    }

    /// Coordinates in flow order `(x1, p1, x2, p2)`.
    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.p1, self.x2, self.p2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// `u = (q/b + i p/c)/√2` with complex `q`, `p`.
    pub fn u(&self, params: &ModelParams) -> Complex64 {
        (self.q() / params.b() + Complex64::i() * self.p() / params.c()) / SQRT_2
    }

    /// `v = (q/b − i p/c)/√2` with complex `q`, `p`.
    pub fn v(&self, params: &ModelParams) -> Complex64 {
        (self.q() / params.b() - Complex64::i() * self.p() / params.c()) / SQRT_2
    }
}

/// `H̃(q, p) = p²/2 + λ_eff q²/2 + β q⁴ + E0` with `λ_eff = λ + 6βb²` and
/// zero-point constant `E0 = (c² + λb² + 3βb⁴)/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedHamiltonian {
    params: ModelParams,
    lambda_eff: f64,
    zero_point: f64,
}

impl SmoothedHamiltonian {
    pub fn new(params: ModelParams) -> Self {
        let b2 = params.b() * params.b();
        let c2 = params.c() * params.c();
        Self {
            params,
            lambda_eff: params.lambda() + 6.0 * params.beta() * b2,
            zero_point: (c2 + params.lambda() * b2 + 3.0 * params.beta() * b2 * b2) / 4.0,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lambda_eff(&self) -> f64 {
        self.lambda_eff
    }

    pub fn zero_point(&self) -> f64 {
        self.zero_point
    }

    /// `√λ_eff` when the effective harmonic coefficient is positive.
    pub fn omega_eff(&self) -> Option<f64> {
        (self.lambda_eff > 0.0).then(|| self.lambda_eff.sqrt())
    }

    pub fn energy(&self, q: Complex64, p: Complex64) -> Complex64 {
        let q2 = q * q;
        p * p * 0.5 + q2 * (0.5 * self.lambda_eff) + q2 * q2 * self.params.beta() + self.zero_point
    }

    pub fn energy_at(&self, pt: &ComplexPhasePoint) -> Complex64 {
        self.energy(pt.q(), pt.p())
    }

    /// `∂H̃/∂q`.
    pub fn dh_dq(&self, q: Complex64) -> Complex64 {
        q * self.lambda_eff + q * q * q * (4.0 * self.params.beta())
    }

    /// `∂H̃/∂p`.
    pub fn dh_dp(&self, p: Complex64) -> Complex64 {
        p
    }

    /// Time derivatives `(ẋ1, ṗ1, ẋ2, ṗ2)` of the real four-dimensional flow,
    /// obtained by splitting `q̇ = ∂H̃/∂p`, `ṗ = −∂H̃/∂q` into components.
    pub fn flow_rhs(&self, pt: &ComplexPhasePoint) -> [f64; 4] {
        let q_dot = self.dh_dp(pt.p());
        let p_dot = -self.dh_dq(pt.q());
        [q_dot.re, p_dot.re, p_dot.im, q_dot.im]
    }

    /// `∂²H̃/∂u∂v = (b²/2) H̃_qq + (c²/2) H̃_pp`. Depends on `q` only.
    pub fn mixed_second_derivative(&self, pt: &ComplexPhasePoint) -> Complex64 {
        let q = pt.q();
        let h_qq = q * q * (12.0 * self.params.beta()) + self.lambda_eff;
        let b2 = self.params.b() * self.params.b();
        let c2 = self.params.c() * self.params.c();
        h_qq * (0.5 * b2) + 0.5 * c2
    }
}

/// Free-function form of [`SmoothedHamiltonian::energy`].
pub fn smoothed_h(model: &SmoothedHamiltonian, q: Complex64, p: Complex64) -> Complex64 {
    model.energy(q, p)
}

/// Free-function form of [`SmoothedHamiltonian::flow_rhs`].
pub fn flow_rhs(model: &SmoothedHamiltonian, pt: &ComplexPhasePoint) -> [f64; 4] {
    model.flow_rhs(pt)
}

/// Free-function form of [`SmoothedHamiltonian::mixed_second_derivative`].
pub fn h_mixed_second_derivative(model: &SmoothedHamiltonian, pt: &ComplexPhasePoint) -> Complex64 {
    model.mixed_second_derivative(pt)
}
