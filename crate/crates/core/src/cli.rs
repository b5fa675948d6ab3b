//! Mode runners behind the `cstraj` binary.
//!
//! Every mode writes its primary table or report to the configured output
//! (standard output when none is set). Secondary artifacts sit next to it:
//! `<output>.csv` for the trajectory of a root report and
//! `<output>.summary.json` for sweep summaries.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{ConfigError, Mode, RunConfig};
use crate::integrator::{integrate, period_estimate};
use crate::model::{ComplexPhasePoint, SmoothedHamiltonian};
use crate::oracle::{converged_levels, Eigensystem, SpectralPropagator};
use crate::scsp::{propagate_sweep, time_grid, PropagationSweep};
use crate::shooting::{continuation_from, descend, RootResult, SweepFailure};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(#[from] crate::Error),
    /// Results were written but the sweep stopped early.
    #[error("sweep truncated at T = {time} (index {index}): {reason}")]
    Truncated { index: usize, time: f64, reason: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            _ => 2,
        }
    }
}

fn truncated(f: &SweepFailure) -> CliError {
    CliError::Truncated {
        index: f.index,
        time: f.time,
        reason: f.error.to_string(),
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    output.with_file_name(name)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Writes a secondary JSON artifact next to `output`, or to standard error
/// when results go to standard output.
fn write_summary<T: Serialize>(output: Option<&Path>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary is plain data") + "\n";
    match output {
        Some(p) => write_text(Some(&sibling(p, ".summary.json")), &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationNotice {
    pub index: usize,
    pub time: f64,
    pub reason: String,
}

impl From<&SweepFailure> for TruncationNotice {
    fn from(f: &SweepFailure) -> Self {
        Self {
            index: f.index,
            time: f.time,
            reason: f.error.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub x1_0: f64,
    pub p1_0: f64,
    #[serde(rename = "D_final")]
    pub d_final: f64,
    pub iters: usize,
    /// Return time of the real orbit through `(q', p')`.
    pub period_estimate: Option<f64>,
}

pub fn run(mode: Mode, config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    log::info!("running {mode} mode");
    match mode {
        Mode::Trajectory => run_trajectory(config, output),
        Mode::Propagate => run_propagate(config, output),
        Mode::Exact => run_exact(config, output),
        Mode::Compare => run_compare(config, output),
    }
}

/// Root at `T = t_max`, reached by continuation over the sweep grid (or by a
/// direct search when the grid has one point). The first configured seed
/// replaces `(q', p')` as the starting guess.
pub fn find_root(config: &RunConfig) -> Result<RootResult, CliError> {
    let params = config.params()?;
    let t_max = config.sweep.t_max;
    let seed = config
        .seed_pairs()
        .first()
        .copied()
        .unwrap_or((config.labels.q_i, config.labels.p_i));
    if config.sweep.n_t == 1 {
        return Ok(descend(seed, &config.labels_at(t_max)?, &params, &config.shooting)?);
    }
    let times = time_grid(t_max, config.sweep.n_t);
    let sweep = continuation_from(seed, &config.labels_at(0.0)?, &times, &params, &config.shooting)?;
    match sweep.failure {
        Some(f) => Err(CliError::Numeric(f.error)),
        None => Ok(sweep.roots.into_iter().last().expect("grid is not empty")),
    }
}

pub fn run_trajectory(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let params = config.params()?;
    let root = find_root(config)?;
    let period = if config.sweep.t_max > 0.0 {
        let start = ComplexPhasePoint::new(config.labels.q_i, config.labels.p_i, 0.0, 0.0);
        let real = integrate(
            &SmoothedHamiltonian::new(params),
            start,
            config.sweep.t_max,
            config.shooting.n_steps,
        )?;
        period_estimate(&real)
    } else {
        None
    };
    let report = RootReport {
        t: root.labels.time(),
        x1_0: root.x1_0,
        p1_0: root.p1_0,
        d_final: root.distance,
        iters: root.iters,
        period_estimate: period,
    };
    let text = serde_json::to_string_pretty(&report).expect("report is plain data") + "\n";
    write_text(output, &text)?;
    if let Some(p) = output {
        let mut csv = String::from("t,x1,p1,x2,p2\n");
        for tp in root.trajectory.points() {
            let pt = &tp.pt;
            let _ = writeln!(csv, "{},{},{},{},{}", num(tp.t), num(pt.x1), num(pt.p1), num(pt.x2), num(pt.p2));
        }
        write_text(Some(&sibling(p, ".csv")), &csv)?;
    }
    Ok(())
}

fn scsp_sweep(config: &RunConfig) -> Result<PropagationSweep, CliError> {
    let params = config.params()?;
    let times = time_grid(config.sweep.t_max, config.sweep.n_t);
    Ok(propagate_sweep(
        &config.labels_at(0.0)?,
        &times,
        &params,
        &config.shooting,
        &config.seed_pairs(),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PropagateSummary {
    rows: usize,
    requested: usize,
    max_roots: usize,
    truncation: Option<TruncationNotice>,
}

pub fn run_propagate(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let sweep = scsp_sweep(config)?;
    let mut csv = String::from("T,re_scsp,im_scsp,n_roots\n");
    for s in &sweep.samples {
        let _ = writeln!(csv, "{},{},{},{}", num(s.t), num(s.k_scsp.re), num(s.k_scsp.im), s.roots.len());
    }
    write_text(output, &csv)?;
    write_summary(
        output,
        &PropagateSummary {
            rows: sweep.samples.len(),
            requested: config.sweep.n_t,
            max_roots: sweep.samples.iter().map(|s| s.roots.len()).max().unwrap_or(0),
            truncation: sweep.failure.as_ref().map(TruncationNotice::from),
        },
    )?;
    sweep.failure.as_ref().map_or(Ok(()), |f| Err(truncated(f)))
}

/// Spectral propagator for the configured labels.
pub fn exact_propagator(config: &RunConfig) -> Result<(SpectralPropagator, usize), CliError> {
    let params = config.params()?;
    let n = config.oracle.basis_size;
    let eig = Eigensystem::for_model(&params, n)?;
    let n_levels = match config.oracle.n_levels {
        Some(k) => k,
        None => converged_levels(&params, n)?.max(1),
    };
    let prop = SpectralPropagator::new(&eig, &config.labels_at(0.0)?, &params, n_levels)?;
    Ok((prop, n_levels))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ExactSummary {
    rows: usize,
    basis_size: usize,
    n_levels: usize,
    basis_truncated: bool,
}

pub fn run_exact(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let (prop, n_levels) = exact_propagator(config)?;
    let times = time_grid(config.sweep.t_max, config.sweep.n_t);
    let mut csv = String::from("T,re_exact,im_exact\n");
    for &t in &times {
        let k = prop.at(t);
        let _ = writeln!(csv, "{},{},{}", num(t), num(k.re), num(k.im));
    }
    write_text(output, &csv)?;
    write_summary(
        output,
        &ExactSummary {
            rows: times.len(),
            basis_size: config.oracle.basis_size,
            n_levels,
            basis_truncated: prop.truncated,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub rows: usize,
    pub requested: usize,
    pub max_abs_err: f64,
    /// `‖K_scsp − K_exact‖₂ / ‖K_exact‖₂` over the rows.
    pub l2_rel_err: f64,
    pub basis_size: usize,
    pub n_levels: usize,
    pub basis_truncated: bool,
    pub truncation: Option<TruncationNotice>,
}

/// Paired exact and semiclassical values on the sweep grid.
pub struct Comparison {
    pub rows: Vec<(f64, Complex64, Complex64)>,
    pub summary: CompareSummary,
    pub failure: Option<SweepFailure>,
}

/// Runs the oracle on a second thread while the continuation sweep runs.
pub fn compare(config: &RunConfig) -> Result<Comparison, CliError> {
    let (oracle, sweep) = std::thread::scope(|scope| {
        let oracle = scope.spawn(|| exact_propagator(config));
        let sweep = scsp_sweep(config);
        (oracle.join().expect("oracle thread panicked"), sweep)
    });
    let (prop, n_levels) = oracle?;
    let sweep = sweep?;
    let rows: Vec<(f64, Complex64, Complex64)> = sweep.samples.iter().map(|s| (s.t, prop.at(s.t), s.k_scsp)).collect();
    let max_abs_err = rows.iter().map(|(_, e, s)| (e - s).norm()).fold(0.0, f64::max);
    let err2: f64 = rows.iter().map(|(_, e, s)| (e - s).norm_sqr()).sum();
    let ref2: f64 = rows.iter().map(|(_, e, _)| e.norm_sqr()).sum();
    let l2_rel_err = if ref2 > 0.0 { (err2 / ref2).sqrt() } else { 0.0 };
    let summary = CompareSummary {
        rows: rows.len(),
        requested: config.sweep.n_t,
        max_abs_err,
        l2_rel_err,
        basis_size: config.oracle.basis_size,
        n_levels,
        basis_truncated: prop.truncated,
        truncation: sweep.failure.as_ref().map(TruncationNotice::from),
    };
    Ok(Comparison {
        rows,
        summary,
        failure: sweep.failure,
    })
}

pub fn run_compare(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let cmp = compare(config)?;
    let mut csv = String::from("T,re_exact,im_exact,re_scsp,im_scsp,abs_err\n");
    for (t, e, s) in &cmp.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(*t),
            num(e.re),
            num(e.im),
            num(s.re),
            num(s.im),
            num((e - s).norm())
        );
    }
    write_text(output, &csv)?;
    write_summary(output, &cmp.summary)?;
    cmp.failure.as_ref().map_or(Ok(()), |f| Err(truncated(f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/run.json"), ".csv"), PathBuf::from("out/run.csv"));
        assert_eq!(
            sibling(Path::new("cmp.csv"), ".summary.json"),
            PathBuf::from("cmp.summary.json")
        );
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.1).trim_start_matches('-').len(), "1.0000000000000001e-1".len());
    }

    #[test]
    fn exit_codes() {
        let cfg = CliError::Config(ConfigError {
            location: "x".into(),
            message: "y".into(),
        });
        assert_eq!(cfg.exit_code(), 3);
        assert_eq!(CliError::Numeric(crate::Error::DegenerateInput).exit_code(), 2);
    }
}
