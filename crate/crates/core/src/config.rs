//! Run configuration: a JSON file plus `key=value` overrides.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{ModelParams, PropagatorLabels};
use crate::shooting::ShootingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Trajectory,
    Propagate,
    Exact,
    Compare,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::Trajectory => "trajectory",
            Mode::Propagate => "propagate",
            Mode::Exact => "exact",
            Mode::Compare => "compare",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub hbar: f64,
    pub b: f64,
    pub lambda: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSection {
    pub q_i: f64,
    pub p_i: f64,
    pub q_f: f64,
    pub p_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub t_max: f64,
    /// Grid points over `[0, t_max]`, both ends included.
    pub n_t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub basis_size: usize,
    /// Levels kept in the eigen-expansion; `None` keeps the levels that are
    /// converged between `basis_size` and twice that.
    pub n_levels: Option<usize>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            basis_size: 200,
            n_levels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub labels: LabelSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub shooting: ShootingConfig,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Extra starting guesses `[x1(0), p1(0)]` for additional root families.
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A configuration problem, located as precisely as the source allows.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ConfigError {
    /// Dotted field path, optionally followed by a line and column.
    pub location: String,
    pub message: String,
}

impl ConfigError {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

fn path_or_root(path: &serde_path_to_error::Path) -> String {
    let p = path.to_string();
    if p == "." {
        "<root>".to_owned()
    } else {
        p
    }
}

/// Strips serde_json's trailing " at line L column C"; the caller reports
/// the position separately.
fn bare_message(err: &serde_json::Error) -> String {
    let text = err.to_string();
    match text.rfind(" at line ") {
        Some(pos) if err.line() > 0 => text[..pos].to_owned(),
        _ => text,
    }
}

impl RunConfig {
    /// Parses JSON text, applies `overrides` and validates the result.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let config = if overrides.is_empty() {
            let de = &mut serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let location = format!(
                    "{} (line {}, column {})",
                    path_or_root(e.path()),
                    e.inner().line(),
                    e.inner().column()
                );
                ConfigError::new(location, bare_message(e.inner()))
            })?
        } else {
            let mut value: Value = serde_json::from_str(text).map_err(|e| {
                ConfigError::new(format!("line {}, column {}", e.line(), e.column()), bare_message(&e))
            })?;
            for item in overrides {
                apply_override(&mut value, item)?;
            }
            serde_path_to_error::deserialize(value)
                .map_err(|e| ConfigError::new(path_or_root(e.path()), e.inner().to_string()))?
        };
        let config: RunConfig = config;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        self.labels_at(0.0)?;
        let s = &self.sweep;
        if !(s.t_max.is_finite() && s.t_max >= 0.0) {
            return Err(ConfigError::new("sweep.t_max", format!("must be finite and >= 0, got {}", s.t_max)));
        }
        if s.n_t == 0 {
            return Err(ConfigError::new("sweep.n_t", "must be >= 1"));
        }
        if s.n_t > 1 && s.t_max == 0.0 {
            return Err(ConfigError::new("sweep.n_t", "a grid of several points needs t_max > 0"));
        }
        self.shooting.validate().map_err(|e| scoped("shooting", e))?;
        let o = &self.oracle;
        if o.basis_size < 2 {
            return Err(ConfigError::new("oracle.basis_size", "must be >= 2"));
        }
        if let Some(n) = o.n_levels {
            if n == 0 || n > o.basis_size {
                return Err(ConfigError::new(
                    "oracle.n_levels",
                    format!("must be in 1..={}, got {n}", o.basis_size),
                ));
            }
        }
        for (k, seed) in self.seeds.iter().enumerate() {
            if !seed.iter().all(|x| x.is_finite()) {
                return Err(ConfigError::new(format!("seeds[{k}]"), "must be finite"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        ModelParams::new(m.hbar, m.b, m.lambda, m.beta).map_err(|e| scoped("model", e))
    }

    pub fn labels_at(&self, time: f64) -> Result<PropagatorLabels, ConfigError> {
        let params = self.params()?;
        let l = &self.labels;
        PropagatorLabels::from_values(l.q_i, l.p_i, l.q_f, l.p_f, time, &params).map_err(|e| scoped("labels", e))
    }

    pub fn seed_pairs(&self) -> Vec<(f64, f64)> {
        self.seeds.iter().map(|s| (s[0], s[1])).collect()
    }
}

fn scoped(section: &str, err: crate::Error) -> ConfigError {
    match err {
        crate::Error::InvalidParameter { field, reason } => {
            ConfigError::new(format!("{section}.{field}"), reason)
        }
        other => ConfigError::new(section, other.to_string()),
    }
}

/// Sets `path.to.key` to `raw`, read as JSON when it parses and as a string
/// otherwise.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), ConfigError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::new(format!("--set {item}"), "expected key=value"))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::new(format!("--set {item}"), "empty key segment"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = root;
    for (depth, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            ConfigError::new(keys[..depth].join("."), format!("cannot set `{path}`: not an object"))
        })?;
        if depth + 1 == keys.len() {
            obj.insert((*key).to_owned(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_owned())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
  "model": {"hbar": 1.0, "b": 1.0, "lambda": 1.0, "beta": 0.0},
  "labels": {"q_i": 0.0, "p_i": 1.0, "q_f": 0.0, "p_f": 1.0},
  "sweep": {"t_max": 3.0, "n_t": 31}
}"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(BASE, &[]).unwrap();
        assert_eq!(c.shooting, ShootingConfig::default());
        assert_eq!(c.oracle, OracleSection::default());
        assert_eq!(c.mode, None);
        assert!(c.seeds.is_empty());
    }

    #[test]
    fn unknown_key_is_reported_with_position() {
        let text = BASE.replace("\"beta\": 0.0", "\"beta\": 0.0, \"betta\": 1.0");
        let err = RunConfig::from_json(&text, &[]).unwrap_err();
        assert!(err.location.starts_with("model.betta (line 2"), "{err}");
        assert!(err.message.contains("unknown field `betta`"), "{err}");
    }

    #[test]
    fn wrong_type_names_the_field() {
        let text = BASE.replace("\"n_t\": 31", "\"n_t\": -4");
        let err = RunConfig::from_json(&text, &[]).unwrap_err();
        assert!(err.location.starts_with("sweep.n_t (line 4"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let err = RunConfig::from_json(&BASE.replace("\"hbar\": 1.0", "\"hbar\": -1.0"), &[]).unwrap_err();
        assert_eq!(err.location, "model.hbar");
        let err = RunConfig::from_json(BASE, &["shooting.delta=0".into()]).unwrap_err();
        assert_eq!(err.location, "shooting.delta");
        let err = RunConfig::from_json(BASE, &["oracle.n_levels=500".into()]).unwrap_err();
        assert_eq!(err.location, "oracle.n_levels");
        let err = RunConfig::from_json(BASE, &["sweep.t_max=-1".into()]).unwrap_err();
        assert_eq!(err.location, "sweep.t_max");
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = RunConfig::from_json(
            BASE,
            &[
                "sweep.n_t=11".into(),
                "model.beta=0.01".into(),
                "mode=compare".into(),
                "shooting.max_iters=7".into(),
                "seeds=[[0.1, 0.2]]".into(),
                "model.beta=0.02".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.sweep.n_t, 11);
        assert_eq!(c.model.beta, 0.02);
        assert_eq!(c.mode, Some(Mode::Compare));
        assert_eq!(c.shooting.max_iters, 7);
        assert_eq!(c.seed_pairs(), vec![(0.1, 0.2)]);
    }

    #[test]
    fn bad_overrides() {
        assert!(RunConfig::from_json(BASE, &["sweep".into()]).is_err());
        assert!(RunConfig::from_json(BASE, &["model..b=1".into()]).is_err());
        let err = RunConfig::from_json(BASE, &["sweep.t_max.x=1".into()]).unwrap_err();
        assert_eq!(err.location, "sweep.t_max");
        let err = RunConfig::from_json(BASE, &["model.hbarr=1".into()]).unwrap_err();
        assert!(err.location.starts_with("model.hbarr"), "{err}");
        let err = RunConfig::from_json(BASE, &["mode=sideways".into()]).unwrap_err();
        assert_eq!(err.location, "mode");
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = RunConfig::from_json("{\n  \"model\": ,\n}", &[]).unwrap_err();
        assert!(err.location.contains("line 2"), "{err}");
        let err = RunConfig::from_json("{\n  \"model\": ,\n}", &["a=1".into()]).unwrap_err();
        assert!(err.location.contains("line 2"), "{err}");
    }
}
