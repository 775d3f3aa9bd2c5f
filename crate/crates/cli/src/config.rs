//! Flat dotted-key configuration (`model.sigma`, `solver.dt`, ...).
//!
//! Documents are TOML; nested tables and dotted keys are equivalent. Every
//! key that is read is echoed, with its default if it was absent, and any key
//! left unread is rejected.

use std::collections::BTreeMap;

use serde_json::Value as Json;
use toml::Value;

use crate::error::{config_err, CliError};

type Result<T> = std::result::Result<T, CliError>;

/// Every key any experiment understands.
const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "output.dir",
    "model.dim",
    "model.sigma",
    "model.k",
    "model.p",
    "model.offset",
    "model.epsilon",
    "model.c2",
    "model.c3",
    "model.bound_form",
    "model.kappa",
    "model.beta",
    "model.length",
    "model.u_phi_0",
    "model.c_drift",
    "model.u0.kind",
    "model.u0.c",
    "model.u0.k",
    "model.u0.radius",
    "model.u0.dim",
    "model.u0.lower",
    "model.u0.spacing",
    "model.u0.values",
    "solver.dt",
    "solver.h",
    "solver.scheme",
    "solver.horizon",
    "solver.radius",
    "solver.blowup_threshold",
    "solver.adaptive",
    "estimator.n_paths",
    "estimator.x",
    "estimator.t",
    "estimator.a",
    "estimator.b",
    "estimator.bias",
    "estimator.sigmas",
    "estimator.tolerance",
    "estimator.steps_per_unit",
    "estimator.threshold",
    "estimator.dt_fraction",
    "estimator.u_phi_0",
    "estimator.floor",
    "estimator.expect",
];

/// Parsed but not yet interpreted configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Value>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| config_err(format!("malformed config document: {e}")))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries);
        Ok(RawConfig { entries })
    }

    /// Apply `key=value`; the value is read as a TOML value, falling back to
    /// a bare string.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) =
            spec.split_once('=').ok_or_else(|| config_err(format!("override `{spec}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_err(format!("override `{spec}` has an empty key")));
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(value.to_string()));
        self.entries.insert(key.to_string(), parsed);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn resolver(self) -> Resolver {
        Resolver { entries: self.entries, used: BTreeMap::new() }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn type_err(key: &str, want: &str, got: &Value) -> CliError {
    config_err(format!("key `{key}` must be {want}, got {}", got.type_str()))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(type_err(key, "a number", other)),
    }
}

fn json_num(v: f64) -> Json {
    serde_json::Number::from_f64(v).map(Json::Number).unwrap_or_else(|| Json::String(v.to_string()))
}

/// Reads typed values out of a [`RawConfig`], recording what was used.
#[derive(Debug)]
pub struct Resolver {
    entries: BTreeMap<String, Value>,
    used: BTreeMap<String, Json>,
}

impl Resolver {
    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => {
                let f = as_f64(key, &v)?;
                self.used.insert(key.into(), json_num(f));
                Ok(Some(f))
            }
        }
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        self.used.insert(key.into(), json_num(v));
        Ok(v)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = match self.entries.remove(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(Value::Integer(i)) => return Err(config_err(format!("key `{key}` must be >= 0, got {i}"))),
            Some(other) => return Err(type_err(key, "an integer", &other)),
        };
        self.used.insert(key.into(), Json::from(v));
        Ok(v)
    }

    pub fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        let v = match self.entries.remove(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => return Err(type_err(key, "a boolean", &other)),
        };
        self.used.insert(key.into(), Json::from(v));
        Ok(v)
    }

    pub fn string(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let v = match self.entries.remove(key) {
            Some(Value::String(s)) => s,
            Some(other) => return Err(type_err(key, "a string", &other)),
            None => default.map(str::to_string).ok_or_else(|| config_err(format!("missing required key `{key}`")))?,
        };
        self.used.insert(key.into(), Json::from(v.clone()));
        Ok(v)
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.entries.remove(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => items.iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?,
            Some(single @ (Value::Float(_) | Value::Integer(_))) => vec![as_f64(key, &single)?],
            Some(other) => return Err(type_err(key, "a number or an array of numbers", &other)),
        };
        self.used.insert(key.into(), Json::Array(v.iter().map(|&x| json_num(x)).collect()));
        Ok(v)
    }

    /// Spatial points: plain numbers in 1-d, or arrays of `dim` numbers.
    pub fn points(&mut self, key: &str, dim: usize, default: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let v: Vec<Vec<f64>> = match self.entries.remove(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|item| match item {
                    Value::Array(coords) => coords.iter().map(|c| as_f64(key, c)).collect::<Result<Vec<f64>>>(),
                    scalar => Ok(vec![as_f64(key, scalar)?]),
                })
                .collect::<Result<_>>()?,
            Some(scalar @ (Value::Float(_) | Value::Integer(_))) => vec![vec![as_f64(key, &scalar)?]],
            Some(other) => return Err(type_err(key, "an array of points", &other)),
        };
        if let Some(bad) = v.iter().find(|p| p.len() != dim) {
            return Err(config_err(format!("key `{key}`: point {bad:?} does not have dimension {dim}")));
        }
        self.used.insert(
            key.into(),
            Json::Array(v.iter().map(|p| Json::Array(p.iter().map(|&x| json_num(x)).collect())).collect()),
        );
        Ok(v)
    }

    /// Reject whatever was not read and return the echo of all used keys.
    pub fn finish(self, experiment: &str) -> Result<BTreeMap<String, Json>> {
        if let Some(key) = self.entries.keys().next() {
            return Err(if KNOWN_KEYS.contains(&key.as_str()) {
                config_err(format!("key `{key}` does not apply to experiment `{experiment}`"))
            } else {
                config_err(format!("unknown key `{key}`"))
            });
        }
        Ok(self.used)
    }
}

/// Constraint helpers naming the offending key.
pub fn require(key: &str, value: f64, ok: bool, what: &str) -> Result<f64> {
    if ok && !value.is_nan() {
        Ok(value)
    } else {
        Err(config_err(format!("`{key}` must be {what}, got {value}")))
    }
}

pub fn positive(key: &str, value: f64) -> Result<f64> {
    require(key, value, value > 0.0 && value.is_finite(), "> 0")
}

pub fn nonnegative(key: &str, value: f64) -> Result<f64> {
    require(key, value, value >= 0.0 && value.is_finite(), ">= 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_and_dotted_keys_agree() {
        let a = RawConfig::parse("[model]\nsigma = 1.5\n").unwrap();
        let b = RawConfig::parse("model.sigma = 1.5\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overrides_parse_values() {
        let mut c = RawConfig::parse("").unwrap();
        c.apply_override("model.sigma=0.25").unwrap();
        c.apply_override("estimator.t = [1, 2]").unwrap();
        c.apply_override("experiment=positivity").unwrap();
        let mut r = c.resolver();
        assert_eq!(r.f64("model.sigma", 1.0).unwrap(), 0.25);
        assert_eq!(r.f64_list("estimator.t", &[]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(r.string("experiment", None).unwrap(), "positivity");
        assert!(RawConfig::default().apply_override("nonsense").is_err());
    }

    #[test]
    fn unread_keys_are_rejected_with_their_path() {
        let mut r = RawConfig::parse("model.sigmaa = 1\n").unwrap().resolver();
        r.f64("model.sigma", 1.0).unwrap();
        let err = r.finish("positivity").unwrap_err().to_string();
        assert!(err.contains("model.sigmaa"), "{err}");
        let r = RawConfig::parse("model.kappa = 1\n").unwrap().resolver();
        let err = r.finish("positivity").unwrap_err().to_string();
        assert!(err.contains("does not apply"), "{err}");
    }

    #[test]
    fn type_mismatch_names_key() {
        let mut r = RawConfig::parse("solver.dt = \"fast\"\n").unwrap().resolver();
        let err = r.f64("solver.dt", 1e-3).unwrap_err().to_string();
        assert!(err.contains("solver.dt"));
    }

    #[test]
    fn defaults_are_echoed() {
        let mut r = RawConfig::default().resolver();
        r.f64("model.sigma", 1.0).unwrap();
        r.points("estimator.x", 1, &[vec![0.0]]).unwrap();
        let used = r.finish("positivity").unwrap();
        assert_eq!(used["model.sigma"], Json::from(1.0));
        assert!(used.contains_key("estimator.x"));
    }
}
