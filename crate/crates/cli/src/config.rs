//! Flat typed key-value configuration.
//!
//! Files are TOML; nested tables are flattened to dotted keys, so `window.radius = 0.5`
//! and `[window] radius = 0.5` are the same entry. Overrides are `key=value` with the
//! value parsed as a TOML value (bare words fall back to strings).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use toml::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}` must be {expected}, got {got}")]
    Type { key: String, expected: &'static str, got: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Str,
    Int,
    Float,
    Bool,
    FloatList,
    IntPair,
    FloatPair,
    PairList,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Str => "a string",
            Kind::Int => "an integer",
            Kind::Float => "a number",
            Kind::Bool => "a boolean",
            Kind::FloatList => "a list of numbers",
            Kind::IntPair => "a pair of integers",
            Kind::FloatPair => "a pair of numbers",
            Kind::PairList => "a list of number pairs",
        }
    }
}

/// Every key the scenarios understand.
pub const KEYS: &[(&str, Kind, &str)] = &[
    ("group", Kind::Str, "dyadic1d | similitude2d | shearlet2d"),
    ("seed", Kind::Int, "seed of every random family"),
    ("grid.n", Kind::Int, "FFT points per axis (0 = automatic)"),
    ("grid.extent", Kind::Float, "frequency half-width of the grid (0 = automatic)"),
    ("quad.nodes", Kind::Int, "group nodes per parameter per unit cell"),
    ("quad.levels", Kind::Int, "refinement levels for convergence checks"),
    ("quad.coorbit_nodes", Kind::Int, "group nodes per parameter per unit cell for coorbit norms"),
    ("index.j", Kind::IntPair, "shearlet scale index range"),
    ("index.k", Kind::IntPair, "scale index range (dyadic, similitude) or shear range"),
    ("window.kind", Kind::Str, "bump | plateau"),
    ("window.center", Kind::FloatPair, "window center"),
    ("window.radius", Kind::Float, "window radius"),
    ("window.inner", Kind::Float, "plateau radius as a fraction of the radius"),
    ("window.off_orbit", Kind::Bool, "allow windows meeting the blind spot"),
    ("weight.det_exponent", Kind::Float, "s in |det h|^s"),
    ("weight.norm_exponents", Kind::FloatPair, "t1, t2 in ||h||^t1 ||h^-1||^t2"),
    ("p", Kind::Float, "inner exponent"),
    ("q", Kind::Float, "outer exponent"),
    ("probes", Kind::Int, "probe count"),
    ("family.count", Kind::Int, "test functions per family"),
    ("family.radius", Kind::FloatPair, "atom radius range"),
    ("family.jitter", Kind::Float, "atom center jitter"),
    ("family.shift", Kind::Float, "max spatial shift of atoms"),
    ("family.anchors", Kind::PairList, "anchor points of the random family"),
    ("family.dilates", Kind::IntPair, "exponent range of the group-dilate subfamily"),
    ("signal.centers", Kind::PairList, "centers of the input signal's bumps"),
    ("signal.radii", Kind::FloatList, "radii of the input signal's bumps"),
    ("signal.coeffs", Kind::PairList, "complex coefficients (re, im) of the bumps"),
    ("signal.shifts", Kind::PairList, "spatial shifts of the bumps"),
    ("eps", Kind::FloatList, "decreasing truncation parameters"),
    ("g", Kind::FloatList, "2x2 matrix, row major"),
    ("cauchy.n", Kind::Int, "largest index of the Cauchy sequence"),
    ("cauchy.m", Kind::Int, "smaller index of the Cauchy difference"),
    ("tolerance", Kind::Float, "scenario tolerance (0 = scenario default)"),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|k| k.0 == key).map(|k| k.1)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Config {
    #[serde(flatten)]
    entries: BTreeMap<String, Value>,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        // "inf" spelled as a string
        Value::String(s) if s == "inf" || s == "infinity" => Some(f64::INFINITY),
        _ => None,
    }
}

fn check(key: &str, kind: Kind, v: &Value) -> ConfigResult<()> {
    let ok = match kind {
        Kind::Str => v.is_str(),
        Kind::Int => v.is_integer(),
        Kind::Float => as_f64(v).is_some(),
        Kind::Bool => v.is_bool(),
        Kind::FloatList => v.as_array().is_some_and(|a| a.iter().all(|x| as_f64(x).is_some())),
        Kind::IntPair => v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(|x| x.is_integer())),
        Kind::FloatPair => v.as_array().is_some_and(|a| a.len() == 2 && a.iter().all(|x| as_f64(x).is_some())),
        Kind::PairList => v.as_array().is_some_and(|a| {
            a.iter()
                .all(|p| p.as_array().is_some_and(|q| q.len() == 2 && q.iter().all(|x| as_f64(x).is_some())))
        }),
    };
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Type { key: key.into(), expected: kind.describe(), got: v.to_string() })
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> ConfigResult<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries);
        let cfg = Config { entries };
        cfg.validate_keys()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        Config::from_toml_str(&text)
    }

    fn validate_keys(&self) -> ConfigResult<()> {
        for (k, v) in &self.entries {
            let kind = kind_of(k).ok_or_else(|| ConfigError::UnknownKey(k.clone()))?;
            check(k, kind, v)?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> ConfigResult<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(format!("override `{spec}` is not of the form key=value")))?;
        let key = k.trim().to_string();
        let kind = kind_of(&key).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
        let value = parse_value(v);
        check(&key, kind, &value)?;
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        debug_assert!(kind_of(key).is_some(), "unknown key {key}");
        self.entries.insert(key.to_string(), value.into());
    }

    /// Inserts a default unless the key is present; the resolved value is returned by the getters.
    pub fn set_default(&mut self, key: &str, value: impl Into<Value>) {
        if !self.entries.contains_key(key) {
            self.set(key, value);
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get(&self, key: &str) -> ConfigResult<&Value> {
        self.entries.get(key).ok_or_else(|| ConfigError::Invalid(format!("missing key `{key}`")))
    }

    pub fn str(&self, key: &str) -> ConfigResult<String> {
        Ok(self.get(key)?.as_str().unwrap_or_default().to_string())
    }

    pub fn int(&self, key: &str) -> ConfigResult<i64> {
        Ok(self.get(key)?.as_integer().unwrap_or_default())
    }

    pub fn usize(&self, key: &str) -> ConfigResult<usize> {
        let v = self.int(key)?;
        usize::try_from(v).map_err(|_| ConfigError::Invalid(format!("`{key}` must be nonnegative, got {v}")))
    }

    pub fn float(&self, key: &str) -> ConfigResult<f64> {
        Ok(as_f64(self.get(key)?).unwrap_or(f64::NAN))
    }

    pub fn bool(&self, key: &str) -> ConfigResult<bool> {
        Ok(self.get(key)?.as_bool().unwrap_or_default())
    }

    pub fn floats(&self, key: &str) -> ConfigResult<Vec<f64>> {
        Ok(self.get(key)?.as_array().map(|a| a.iter().filter_map(as_f64).collect()).unwrap_or_default())
    }

    pub fn int_pair(&self, key: &str) -> ConfigResult<(i64, i64)> {
        let a = self.get(key)?.as_array().cloned().unwrap_or_default();
        let (lo, hi) = (a[0].as_integer().unwrap_or(0), a[1].as_integer().unwrap_or(0));
        if lo > hi {
            return Err(ConfigError::Invalid(format!("`{key}` must satisfy lo <= hi, got [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }

    pub fn pair(&self, key: &str) -> ConfigResult<[f64; 2]> {
        let v = self.floats(key)?;
        Ok([v[0], v[1]])
    }

    pub fn pairs(&self, key: &str) -> ConfigResult<Vec<[f64; 2]>> {
        Ok(self
            .get(key)?
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|p| p.as_array())
                    .map(|q| [as_f64(&q[0]).unwrap_or(f64::NAN), as_f64(&q[1]).unwrap_or(f64::NAN)])
                    .collect()
            })
            .unwrap_or_default())
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    /// The resolved config as JSON, for embedding in reports.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tables_flatten() {
        let c = Config::from_toml_str("group = \"similitude2d\"\n[window]\nradius = 0.5\ncenter = [1, 0]\n").unwrap();
        assert_eq!(c.float("window.radius").unwrap(), 0.5);
        assert_eq!(c.pair("window.center").unwrap(), [1.0, 0.0]);
        let d = Config::from_toml_str("window.radius = 0.5").unwrap();
        assert_eq!(d.float("window.radius").unwrap(), 0.5);
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        assert!(matches!(Config::from_toml_str("colour = 1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(Config::from_toml_str("p = \"two\""), Err(ConfigError::Type { .. })));
        assert!(matches!(Config::from_toml_str("index.k = [1, 2, 3]"), Err(ConfigError::Type { .. })));
    }

    #[test]
    fn overrides_parse_values() {
        let mut c = Config::default();
        c.apply_override("p=1").unwrap();
        c.apply_override("group=shearlet2d").unwrap();
        c.apply_override("eps = [0.125, 0.0625]").unwrap();
        c.apply_override("q=inf").unwrap();
        assert_eq!(c.float("p").unwrap(), 1.0);
        assert_eq!(c.str("group").unwrap(), "shearlet2d");
        assert_eq!(c.floats("eps").unwrap(), vec![0.125, 0.0625]);
        assert!(c.float("q").unwrap().is_infinite());
        assert!(c.apply_override("p").is_err());
    }
}
