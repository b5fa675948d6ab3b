//! C ABI for `cstraj`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`CstrajStatus`]; on failure [`cstraj_last_error_message`] describes the
//! cause. Outputs are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cstraj::model::{ModelParams, PropagatorLabels};
use cstraj::oracle::{harmonic_closed_form, Eigensystem, SpectralPropagator};
use cstraj::scsp::{propagate_sweep, time_grid, PropagationSweep};
use cstraj::shooting::{descend, ShootingConfig};
use cstraj::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CstrajStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoConvergence = 3,
    NonFinite = 4,
    Caustic = 5,
    Discontinuity = 6,
    EigenFailure = 7,
    WidthMismatch = 8,
    OutOfRange = 9,
    Panic = 10,
}

impl From<&Error> for CstrajStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::DegenerateInput => CstrajStatus::InvalidArgument,
            Error::NonFinite { .. } => CstrajStatus::NonFinite,
            Error::NoConvergence { .. } => CstrajStatus::NoConvergence,
            Error::Caustic { .. } => CstrajStatus::Caustic,
            Error::Discontinuity { .. } => CstrajStatus::Discontinuity,
            Error::EigenNoConvergence { .. } => CstrajStatus::EigenFailure,
            Error::WidthMismatch { .. } => CstrajStatus::WidthMismatch,
        }
    }
}

/// Model parameters `ħ, b, λ, β`.
pub struct CstrajModel(ModelParams);

/// Completed part of a propagation sweep.
pub struct CstrajSweep(PropagationSweep);

/// Spectrum of the model Hamiltonian in an oscillator basis.
pub struct CstrajOracle {
    params: ModelParams,
    eig: Eigensystem,
}

/// Coherent-state labels `(q', p')` and `(q'', p'')`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CstrajLabels {
    pub q_i: f64,
    pub p_i: f64,
    pub q_f: f64,
    pub p_f: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CstrajShootingConfig {
    pub delta: f64,
    pub eps0: f64,
    pub eps_scale: f64,
    pub fd_step: f64,
    pub max_iters: usize,
    pub n_steps: usize,
    pub label_step: f64,
}

impl From<CstrajShootingConfig> for ShootingConfig {
    fn from(c: CstrajShootingConfig) -> Self {
        ShootingConfig {
            delta: c.delta,
            eps0: c.eps0,
            eps_scale: c.eps_scale,
            fd_step: c.fd_step,
            max_iters: c.max_iters,
            n_steps: c.n_steps,
            label_step: c.label_step,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CstrajRoot {
    pub x1_0: f64,
    pub p1_0: f64,
    pub distance: f64,
    pub iters: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(CstrajStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CstrajStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CstrajStatus::NullPointer, format!("`{what}` is NULL"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CstrajStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CstrajStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_error(format!("internal panic: {text}"));
            CstrajStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn labels_at(model: &ModelParams, l: &CstrajLabels, t: f64) -> Result<PropagatorLabels, Failure> {
    Ok(PropagatorLabels::from_values(l.q_i, l.p_i, l.q_f, l.p_f, t, model)?)
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cstraj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cstraj_shooting_config_default() -> CstrajShootingConfig {
    let d = ShootingConfig::default();
    CstrajShootingConfig {
        delta: d.delta,
        eps0: d.eps0,
        eps_scale: d.eps_scale,
        fd_step: d.fd_step,
        max_iters: d.max_iters,
        n_steps: d.n_steps,
        label_step: d.label_step,
    }
}

/// # Safety
/// `out` must be NULL or point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cstraj_model_new(
    hbar: f64,
    b: f64,
    lambda: f64,
    beta: f64,
    out: *mut *mut CstrajModel,
) -> CstrajStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ModelParams::new(hbar, b, lambda, beta)?;
        put(out, Box::into_raw(Box::new(CstrajModel(params))), "out")
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`cstraj_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cstraj_model_free(model: *mut CstrajModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Momentum width `c = ħ/b` of a model.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_model_c(model: *const CstrajModel, out: *mut f64) -> CstrajStatus {
    guard(|| {
        let m = get(model, "model")?;
        put(out, m.0.c(), "out")
    })
}

/// Complex root for the labels at time `t`, searched from `(guess_x1, guess_p1)`.
///
/// # Safety
/// Pointers must be live and properly aligned; `config` may be NULL for
/// defaults.
#[no_mangle]
pub unsafe extern "C" fn cstraj_find_root(
    model: *const CstrajModel,
    labels: *const CstrajLabels,
    t: f64,
    config: *const CstrajShootingConfig,
    guess_x1: f64,
    guess_p1: f64,
    out: *mut CstrajRoot,
) -> CstrajStatus {
    guard(|| {
        let m = get(model, "model")?;
        let l = labels_at(&m.0, get(labels, "labels")?, t)?;
        let cfg = config.as_ref().map_or_else(ShootingConfig::default, |c| (*c).into());
        let root = descend((guess_x1, guess_p1), &l, &m.0, &cfg)?;
        put(
            out,
            CstrajRoot {
                x1_0: root.x1_0,
                p1_0: root.p1_0,
                distance: root.distance,
                iters: root.iters,
            },
            "out",
        )
    })
}

/// Semiclassical propagator on `n_t` evenly spaced times over `[0, t_max]`.
/// A sweep that stops early still yields a handle holding the completed
/// points; see [`cstraj_sweep_truncated`].
///
/// # Safety
/// Pointers must be live; `config` may be NULL for defaults.
#[no_mangle]
pub unsafe extern "C" fn cstraj_propagate(
    model: *const CstrajModel,
    labels: *const CstrajLabels,
    t_max: f64,
    n_t: usize,
    config: *const CstrajShootingConfig,
    out: *mut *mut CstrajSweep,
) -> CstrajStatus {
    guard(|| {
        let m = get(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n_t == 0 {
            return Err(Failure(CstrajStatus::InvalidArgument, "`n_t` must be >= 1".into()));
        }
        let l = labels_at(&m.0, get(labels, "labels")?, 0.0)?;
        let cfg = config.as_ref().map_or_else(ShootingConfig::default, |c| (*c).into());
        let sweep = propagate_sweep(&l, &time_grid(t_max, n_t), &m.0, &cfg, &[])?;
        put(out, Box::into_raw(Box::new(CstrajSweep(sweep))), "out")
    })
}

/// Number of completed points, or 0 for NULL.
///
/// # Safety
/// `sweep` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cstraj_sweep_len(sweep: *const CstrajSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.samples.len())
}

/// 1 when the sweep stopped before its last time, 0 otherwise (or for NULL).
///
/// # Safety
/// `sweep` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cstraj_sweep_truncated(sweep: *const CstrajSweep) -> i32 {
    sweep.as_ref().map_or(0, |s| i32::from(s.0.is_truncated()))
}

/// # Safety
/// `sweep` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_sweep_get(
    sweep: *const CstrajSweep,
    index: usize,
    t: *mut f64,
    re: *mut f64,
    im: *mut f64,
) -> CstrajStatus {
    guard(|| {
        let s = get(sweep, "sweep")?;
        let sample = s.0.samples.get(index).ok_or_else(|| {
            Failure(
                CstrajStatus::OutOfRange,
                format!("index {index} out of range for {} samples", s.0.samples.len()),
            )
        })?;
        if t.is_null() || re.is_null() || im.is_null() {
            return Err(null("t/re/im"));
        }
        put(t, sample.t, "t")?;
        put(re, sample.k_scsp.re, "re")?;
        put(im, sample.k_scsp.im, "im")
    })
}

/// # Safety
/// `sweep` must be NULL or a handle from [`cstraj_propagate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cstraj_sweep_free(sweep: *mut CstrajSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Diagonalizes the model Hamiltonian in `basis_size` oscillator states.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_oracle_new(
    model: *const CstrajModel,
    basis_size: usize,
    out: *mut *mut CstrajOracle,
) -> CstrajStatus {
    guard(|| {
        let m = get(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let eig = Eigensystem::for_model(&m.0, basis_size)?;
        put(out, Box::into_raw(Box::new(CstrajOracle { params: m.0, eig })), "out")
    })
}

/// Energy of eigenstate `level` (ascending order).
///
/// # Safety
/// `oracle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_oracle_energy(oracle: *const CstrajOracle, level: usize, out: *mut f64) -> CstrajStatus {
    guard(|| {
        let o = get(oracle, "oracle")?;
        let e = o.eig.energies.get(level).copied().ok_or_else(|| {
            Failure(CstrajStatus::OutOfRange, format!("level {level} >= basis size {}", o.eig.size()))
        })?;
        put(out, e, "out")
    })
}

/// Exact propagator at time `t` from the lowest `n_levels` eigenstates.
///
/// # Safety
/// Pointers must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_oracle_csp(
    oracle: *const CstrajOracle,
    labels: *const CstrajLabels,
    t: f64,
    n_levels: usize,
    re: *mut f64,
    im: *mut f64,
) -> CstrajStatus {
    guard(|| {
        let o = get(oracle, "oracle")?;
        let l = labels_at(&o.params, get(labels, "labels")?, t)?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let k = SpectralPropagator::new(&o.eig, &l, &o.params, n_levels)?.at(t);
        put(re, k.re, "re")?;
        put(im, k.im, "im")
    })
}

/// # Safety
/// `oracle` must be NULL or a handle from [`cstraj_oracle_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cstraj_oracle_free(oracle: *mut CstrajOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Closed-form harmonic propagator; requires `β = 0` and `b = √(ħ/√λ)`.
///
/// # Safety
/// Pointers must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn cstraj_harmonic_closed_form(
    model: *const CstrajModel,
    labels: *const CstrajLabels,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> CstrajStatus {
    guard(|| {
        let m = get(model, "model")?;
        let l = labels_at(&m.0, get(labels, "labels")?, t)?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let k = harmonic_closed_form(&l, &m.0)?;
        put(re, k.re, "re")?;
        put(im, k.im, "im")
    })
}
