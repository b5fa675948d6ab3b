//! Quadrature over uniformly spaced samples.

use num_complex::Complex64;

/// Integrates uniformly spaced samples with spacing `h`.
///
/// Composite Simpson when the number of intervals is even; for an odd count
/// the last three intervals use Simpson's 3/8 rule. One interval falls back
/// to the trapezoid.
pub fn uniform(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => Complex64::new(0.0, 0.0),
        1 => (values[0] + values[1]) * (0.5 * h),
        2 => simpson(values, h),
        3 => three_eighths(values, h),
        _ if n % 2 == 0 => simpson(values, h),
        _ => simpson(&values[..n - 2], h) + three_eighths(&values[n - 3..], h),
    }
}

fn simpson(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let mut odd = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (values[0] + values[n] + odd * 4.0 + even * 2.0) * (h / 3.0)
}

fn three_eighths(values: &[Complex64], h: f64) -> Complex64 {
    debug_assert_eq!(values.len(), 4);
    (values[0] + values[1] * 3.0 + values[2] * 3.0 + values[3]) * (3.0 * h / 8.0)
}
