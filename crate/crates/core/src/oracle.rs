//! Exact coherent-state propagator from the spectrum of the quantum
//! Hamiltonian in an oscillator basis whose width matches the coherent
//! states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoherentLabel, ModelParams, PropagatorLabels};

/// Jacobi sweeps allowed before giving up.
pub const MAX_SWEEPS: usize = 100;
/// Last retained oscillator amplitude of a label above which the basis is
/// reported as too small.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;
/// Levels whose energy moves less than this between `N` and `2N` count as
/// converged.
pub const LEVEL_TOLERANCE: f64 = 1e-10;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..n {
            m[(k, k)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Leading `m × m` block.
    pub fn crop(&self, m: usize) -> Matrix {
        Matrix::from_fn(m, |i, j| self[(i, j)])
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `q²`, `p²` and `q⁴` in the first `n` oscillator states of width `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub q2: Matrix,
    pub p2: Matrix,
    pub q4: Matrix,
}

fn quadratic(n: usize, width_sqr: f64, off_sign: f64) -> Matrix {
    let mut m = Matrix::zeros(n);
    for k in 0..n {
        let kf = k as f64;
        m[(k, k)] = width_sqr * (kf + 0.5);
        if k + 2 < n {
            let off = off_sign * 0.5 * width_sqr * ((kf + 1.0) * (kf + 2.0)).sqrt();
            m[(k, k + 2)] = off;
            m[(k + 2, k)] = off;
        }
    }
    m
}

impl SpectralBasis {
    pub fn new(params: &ModelParams, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(crate::error::invalid("basis_size", "must be at least 2"));
        }
        let (b2, c2) = (params.b() * params.b(), params.c() * params.c());
        // Squaring in a larger basis keeps the elements near the edge exact.
        let big = quadratic(n + 4, b2, 1.0);
        Ok(Self {
            q2: quadratic(n, b2, 1.0),
            p2: quadratic(n, c2, -1.0),
            q4: big.matmul(&big).crop(n),
        })
    }
}

pub fn build_hamiltonian_matrix(params: &ModelParams, n: usize) -> Result<Matrix> {
    let basis = SpectralBasis::new(params, n)?;
    let (lambda, beta) = (params.lambda(), params.beta());
    Ok(Matrix::from_fn(n, |i, j| {
        0.5 * basis.p2[(i, j)] + 0.5 * lambda * basis.q2[(i, j)] + beta * basis.q4[(i, j)]
    }))
}

/// Eigenvalues ascending; `vectors` holds the eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigensystem {
    pub fn size(&self) -> usize {
        self.energies.len()
    }

    /// Coefficient `m` of eigenvector `n`.
    pub fn coefficient(&self, n: usize, m: usize) -> f64 {
        self.vectors[(m, n)]
    }

    /// Eigensystem of the model Hamiltonian. Even and odd states decouple,
    /// so each parity block is diagonalized on its own.
    pub fn for_model(params: &ModelParams, n: usize) -> Result<Self> {
        let h = build_hamiltonian_matrix(params, n)?;
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
        for parity in 0..2 {
            let idx: Vec<usize> = (parity..n).step_by(2).collect();
            let block = Matrix::from_fn(idx.len(), |i, j| h[(idx[i], idx[j])]);
            let eig = diagonalize(&block)?;
            for (k, &e) in eig.energies.iter().enumerate() {
                let mut v = vec![0.0; n];
                for (i, &row) in idx.iter().enumerate() {
                    v[row] = eig.vectors[(i, k)];
                }
                pairs.push((e, v));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vectors = Matrix::zeros(n);
        for (k, (_, v)) in pairs.iter().enumerate() {
            for (m, &x) in v.iter().enumerate() {
                vectors[(m, k)] = x;
            }
        }
        Ok(Self {
            energies: pairs.into_iter().map(|p| p.0).collect(),
            vectors,
        })
    }
}

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
pub fn diagonalize(h: &Matrix) -> Result<Eigensystem> {
    let n = h.size();
    let scale = h.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    if h.max_asymmetry() > 1e-12 * scale.max(1.0) {
        return Err(crate::error::invalid("H", "matrix is not symmetric"));
    }
    let mut a = h.clone();
    let mut v = Matrix::identity(n);
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off.sqrt(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // Once the element is below rounding of both diagonals it
                // is set to zero outright.
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let energies = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = Matrix::from_fn(n, |m, k| v[(m, order[k])]);
    Ok(Eigensystem { energies, vectors })
}

/// Applies the rotation zeroing `a[p][q]`: `A ← JᵀAJ`, `V ← VJ`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.size();
    let (app, aqq, apq) = (a[(p, p)], a[(q, q)], a[(p, q)]);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp;
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq;
    }
    a[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    a[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `⟨z|m⟩` for the oscillator states `m < n`: `exp(−|z|²/2)(z*)^m/√m!`.
pub fn coherent_amplitudes(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut term = Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for m in 0..n {
        out.push(term);
        term *= z.conj() / ((m + 1) as f64).sqrt();
    }
    out
}

fn overlap_with(eig: &Eigensystem, level: usize, amps: &[Complex64]) -> Complex64 {
    amps.iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (m, a)| acc + a * eig.coefficient(level, m))
}

/// Husimi amplitude `⟨z|n⟩` of eigenstate `level`.
pub fn husimi_overlap(eig: &Eigensystem, level: usize, z: &CoherentLabel) -> Complex64 {
    let amps = coherent_amplitudes(z.z(), eig.size());
    overlap_with(eig, level, &amps)
}

/// `|⟨z|N−1⟩_osc|`: size of the last retained oscillator amplitude. Large
/// values mean the coherent state is not contained in the basis.
pub fn truncation_tail(z: &CoherentLabel, n: usize) -> f64 {
    coherent_amplitudes(z.z(), n).last().map_or(0.0, |a| a.norm())
}

/// Eigen-expansion of the propagator between two fixed labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPropagator {
    energies: Vec<f64>,
    /// `⟨z''|n⟩⟨n|z'⟩` per level.
    weights: Vec<Complex64>,
    hbar: f64,
    /// Set when either label leaks out of the basis.
    pub truncated: bool,
}

impl SpectralPropagator {
    pub fn new(eig: &Eigensystem, labels: &PropagatorLabels, params: &ModelParams, n_levels: usize) -> Result<Self> {
        if n_levels == 0 || n_levels > eig.size() {
            return Err(crate::error::invalid("n_levels", format!("must be in 1..={}", eig.size())));
        }
        let n = eig.size();
        let amp_i = coherent_amplitudes(labels.initial().z(), n);
        let amp_f = coherent_amplitudes(labels.final_label().z(), n);
        let tail = amp_i[n - 1].norm().max(amp_f[n - 1].norm());
        let truncated = tail > TRUNCATION_TOLERANCE;
        if truncated {
            log::warn!("coherent labels not contained in basis of size {n}: tail amplitude {tail:e}");
        }
        let weights = (0..n_levels)
            .map(|k| overlap_with(eig, k, &amp_f) * overlap_with(eig, k, &amp_i).conj())
            .collect();
        Ok(Self {
            energies: eig.energies[..n_levels].to_vec(),
            weights,
            hbar: params.hbar(),
            truncated,
        })
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (e, w)| {
                acc + w * Complex64::from_polar(1.0, -e * t / self.hbar)
            })
    }
}

/// `Σ_{n<n_levels} ⟨z''|n⟩⟨n|z'⟩ exp(−iE_n T/ħ)`.
pub fn exact_csp(eig: &Eigensystem, labels: &PropagatorLabels, params: &ModelParams, n_levels: usize) -> Result<Complex64> {
    Ok(SpectralPropagator::new(eig, labels, params, n_levels)?.at(labels.time()))
}

/// Closed-form harmonic propagator; needs `β = 0` and `b = √(ħ/ω)`.
pub fn harmonic_closed_form(labels: &PropagatorLabels, params: &ModelParams) -> Result<Complex64> {
    if params.beta() != 0.0 {
        return Err(crate::error::invalid("beta", "closed form needs beta = 0"));
    }
    if !(params.lambda() > 0.0) {
        return Err(crate::error::invalid("lambda", "closed form needs lambda > 0"));
    }
    let omega = params.lambda().sqrt();
    let expected = (params.hbar() / omega).sqrt();
    if (params.b() - expected).abs() > 1e-12 * expected {
        return Err(Error::WidthMismatch {
            b: params.b(),
            expected,
        });
    }
    let (zi, zf) = (labels.initial().z(), labels.final_label().z());
    let t = labels.time();
    let i = Complex64::i();
    Ok((-0.5 * (zi.norm_sqr() + zf.norm_sqr()) + zf.conj() * zi * (-i * omega * t).exp() - i * 0.5 * omega * t).exp())
}

/// Number of leading levels whose energies agree between bases of size `n`
/// and `2n` to [`LEVEL_TOLERANCE`].
pub fn converged_levels(params: &ModelParams, n: usize) -> Result<usize> {
    let small = Eigensystem::for_model(params, n)?;
    let large = Eigensystem::for_model(params, 2 * n)?;
    Ok(small
        .energies
        .iter()
        .zip(&large.energies)
        .take_while(|(a, b)| (*a - *b).abs() < LEVEL_TOLERANCE)
        .count())
}
