//! Branch tracking for the square root in the semiclassical amplitude.
//!
//! The principal argument of a complex number only determines its square
//! root up to a sign. Along a continuation in `T` the correct sign follows
//! from continuity, which these routines enforce.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

/// Largest allowed change of the unwrapped phase between adjacent samples.
pub const MAX_PHASE_JUMP: f64 = FRAC_PI_2;

/// Quadrant-corrected phase of `a + ib`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantPhase {
    /// `arctan(b/a)`, in `[−π/2, π/2]`.
    pub alpha: f64,
    /// Quadrant case 1–4: `(a>0, b≥0)`, `(a<0, b≥0)`, `(a<0, b<0)`, `(a>0, b<0)`.
    pub case: u8,
    /// Phase in `[0, 2π)`.
    pub phi: f64,
}

impl QuadrantPhase {
    /// Multiple of `π/2` added to `alpha/2` to obtain `phi/2`: 0, 1, 1, 2.
    pub fn correction_index(&self) -> u8 {
        match self.case {
            1 => 0,
            2 | 3 => 1,
            _ => 2,
        }
    }
}

pub fn quadrant_phase(a: f64, b: f64) -> Result<QuadrantPhase> {
    if a == 0.0 {
        return if b > 0.0 {
            Ok(QuadrantPhase { alpha: FRAC_PI_2, case: 1, phi: FRAC_PI_2 })
        } else if b < 0.0 {
            Ok(QuadrantPhase { alpha: -FRAC_PI_2, case: 4, phi: 1.5 * PI })
        } else {
            Err(Error::DegenerateInput)
        };
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::DegenerateInput);
    }
    let alpha = (b / a).atan();
    let (case, phi) = match (a > 0.0, b >= 0.0) {
        (true, true) => (1, alpha),
        (false, true) => (2, alpha + PI),
        (false, false) => (3, alpha + PI),
        (true, false) => (4, alpha + TAU),
    };
    // alpha + 2π can round up to exactly 2π for tiny negative b.
    let phi = if phi >= TAU { 0.0 } else { phi };
    Ok(QuadrantPhase { alpha, case, phi })
}

/// Phase bookkeeping at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub alpha: f64,
    pub quadrant_case: u8,
    /// Correction index `s ∈ {0, 1, 1, 2}` of the quadrant case.
    pub s: u8,
    /// Signed count of completed turns of the tracked number.
    pub r: i64,
    /// `alpha/2 + s·π/2 + r·π`, continuous along the sweep.
    pub sigma: f64,
    /// Period hint carried along, if one was supplied.
    pub tau: Option<f64>,
}

/// Half-phase of a sequence of complex numbers via the quadrant table and a
/// winding counter: `r` steps by one each time the `[0, 2π)` phase wraps.
pub fn track_sigma(values: &[Complex64], period_hint: Option<f64>) -> Result<Vec<PhaseState>> {
    let mut out = Vec::with_capacity(values.len());
    let mut r = 0i64;
    let mut prev_phi: Option<f64> = None;
    for (k, z) in values.iter().enumerate() {
        let qp = quadrant_phase(z.re, z.im)?;
        if let Some(prev) = prev_phi {
            let mut jump = qp.phi - prev;
            if jump < -PI {
                r += 1;
                jump += TAU;
            } else if jump > PI {
                r -= 1;
                jump -= TAU;
            }
            if jump.abs() > MAX_PHASE_JUMP {
                return Err(Error::Discontinuity { index: k - 1, jump });
            }
        }
        prev_phi = Some(qp.phi);
        let s = qp.correction_index();
        out.push(PhaseState {
            alpha: qp.alpha,
            quadrant_case: qp.case,
            s,
            r,
            sigma: 0.5 * qp.alpha + f64::from(s) * FRAC_PI_2 + r as f64 * PI,
            tau: period_hint,
        });
    }
    Ok(out)
}

/// Continuous half-phase of a sequence of complex numbers.
///
/// The first phase is `seed` when given, otherwise the principal argument in
/// `(−π, π]`; each later phase is the branch nearest to its predecessor.
pub fn unwrap_half_phase(values: &[Complex64], seed: Option<f64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    let Some(first) = values.first() else {
        return Ok(out);
    };
    if first.norm() == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let mut phase = seed.unwrap_or_else(|| first.arg());
    let mut prev_arg = first.arg();
    out.push(0.5 * phase);
    for (k, z) in values.iter().enumerate().skip(1) {
        if z.norm() == 0.0 {
            return Err(Error::DegenerateInput);
        }
        let arg = z.arg();
        let mut jump = arg - prev_arg;
        if jump > PI {
            jump -= TAU;
        } else if jump <= -PI {
            jump += TAU;
        }
        if jump.abs() > MAX_PHASE_JUMP {
            return Err(Error::Discontinuity { index: k - 1, jump });
        }
        phase += jump;
        prev_arg = arg;
        out.push(0.5 * phase);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn harmonic_d2s(n: usize, t_max: f64) -> Vec<Complex64> {
        (0..=n)
            .map(|k| -Complex64::i() * Complex64::from_polar(1.0, -t_max * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn table_rows() {
        let q = quadrant_phase(1.0, 0.0).unwrap();
        assert_eq!((q.alpha, q.case, q.phi), (0.0, 1, 0.0));
        let q = quadrant_phase(-1.0, 1.0).unwrap();
        assert!((q.alpha + PI / 4.0).abs() < TOL && q.case == 2 && (q.phi - 0.75 * PI).abs() < TOL);
        let q = quadrant_phase(-1.0, -1.0).unwrap();
        assert!(q.case == 3 && (q.phi - 1.25 * PI).abs() < TOL);
        let q = quadrant_phase(1.0, -1.0).unwrap();
        assert!((q.alpha + PI / 4.0).abs() < TOL && q.case == 4 && (q.phi - 1.75 * PI).abs() < TOL);
        assert_eq!(quadrant_phase(0.0, 2.0).unwrap().phi, FRAC_PI_2);
        assert_eq!(quadrant_phase(0.0, -2.0).unwrap().phi, 1.5 * PI);
        assert_eq!(quadrant_phase(0.0, 0.0), Err(Error::DegenerateInput));
        assert_eq!(quadrant_phase(-3.0, 0.0).unwrap().phi, PI);
    }

    #[test]
    fn harmonic_sigma_is_linear() {
        let values = harmonic_d2s(1000, 10.0);
        let states = track_sigma(&values, Some(2.0 * PI)).unwrap();
        assert!((states[0].sigma - 0.75 * PI).abs() < TOL);
        assert_eq!(states[0].r, 0);
        for (k, st) in states.iter().enumerate() {
            let t = 10.0 * k as f64 / 1000.0;
            assert!((st.sigma - (0.75 * PI - 0.5 * t)).abs() < 1e-9, "T = {t}");
        }
        // Clockwise motion wraps the [0, 2π) phase downwards.
        assert_eq!(states.last().unwrap().r, -1);
    }

    #[test]
    fn constant_value_has_no_winding() {
        let values = vec![Complex64::new(1.0, 0.0); 50];
        let states = track_sigma(&values, None).unwrap();
        assert!(states.iter().all(|s| s.sigma == 0.0 && s.r == 0));
    }

    #[test]
    fn one_clockwise_turn_is_minus_pi() {
        let values: Vec<Complex64> = (0..=400)
            .map(|k| Complex64::from_polar(2.0, 0.3 - TAU * k as f64 / 400.0))
            .collect();
        let states = track_sigma(&values, None).unwrap();
        let diff = states.last().unwrap().sigma - states[0].sigma;
        assert!((diff + PI).abs() < 1e-12, "{diff}");
        let half = unwrap_half_phase(&values, None).unwrap();
        assert!((half.last().unwrap() - half[0] + PI).abs() < 1e-12);
    }

    #[test]
    fn routines_agree_given_same_seed() {
        let values = harmonic_d2s(700, 13.0);
        let table = track_sigma(&values, None).unwrap();
        let seed = quadrant_phase(values[0].re, values[0].im).unwrap().phi;
        let cont = unwrap_half_phase(&values, Some(seed)).unwrap();
        for (a, b) in table.iter().zip(&cont) {
            assert!((a.sigma - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_stable() {
        let coarse = track_sigma(&harmonic_d2s(500, 10.0), None).unwrap();
        let fine = track_sigma(&harmonic_d2s(1000, 10.0), None).unwrap();
        for (k, st) in coarse.iter().enumerate() {
            assert!((st.sigma - fine[2 * k].sigma).abs() < 1e-6);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let values = harmonic_d2s(5, 10.0);
        assert!(matches!(track_sigma(&values, None), Err(Error::Discontinuity { .. })));
        assert!(matches!(unwrap_half_phase(&values, None), Err(Error::Discontinuity { .. })));
    }

    #[test]
    fn empty_and_zero_inputs() {
        assert!(track_sigma(&[], None).unwrap().is_empty());
        assert!(unwrap_half_phase(&[], None).unwrap().is_empty());
        assert!(unwrap_half_phase(&[Complex64::new(0.0, 0.0)], None).is_err());
    }

    proptest! {
        #[test]
        fn sigma_is_a_half_phase(
            a0 in -3.0..3.0f64, a1 in -4.0..4.0f64, a2 in -2.0..2.0f64, m in 0.5..3.0f64,
        ) {
            let values: Vec<Complex64> = (0..=400)
                .map(|k| {
                    let t = 3.0 * k as f64 / 400.0;
                    Complex64::from_polar(m + 0.2 * t.sin(), a0 + a1 * t + a2 * t * t)
                })
                .collect();
            let states = track_sigma(&values, None).unwrap();
            let half = unwrap_half_phase(&values, None).unwrap();
            for ((z, st), h) in values.iter().zip(&states).zip(&half) {
                let unit = z / z.norm();
                prop_assert!((Complex64::from_polar(1.0, 2.0 * st.sigma) - unit).norm() < 1e-9);
                prop_assert!((Complex64::from_polar(1.0, 2.0 * h) - unit).norm() < 1e-9);
            }
            for w in states.windows(2) {
                prop_assert!((w[1].sigma - w[0].sigma).abs() < FRAC_PI_2);
            }
        }
    }
}
