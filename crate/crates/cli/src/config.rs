//! Flat key-value experiment configuration.
//!
//! The text is TOML restricted to scalar values and numeric lists. Keys may be
//! written dotted (`grid.T = 1.0`) or grouped under `[grid]` headers; both flatten
//! to the same dotted key.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    Floats(Vec<f64>),
    Ints(Vec<i64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Str(s) => write!(f, "{}", toml::Value::String(s.clone())),
            Value::Floats(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Ints(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Choice(&'static [&'static str]),
    Text,
    Real,
    PositiveReal,
    NonNegativeReal,
    PositiveInt,
    NonNegativeInt,
    IncreasingPositiveReals,
    IncreasingPositiveInts,
}

pub const EXPERIMENTS: &[&str] = &["field-1d", "em-3d", "genmatch", "iontrap", "oracle-check"];

const KEYS: &[(&str, Kind)] = &[
    ("experiment", Kind::Choice(EXPERIMENTS)),
    ("seed", Kind::NonNegativeInt),
    ("target.name", Kind::Text),
    ("target.file", Kind::Text),
    ("target.r", Kind::PositiveInt),
    ("target.k", Kind::PositiveInt),
    ("target.theta", Kind::Real),
    ("target.mu", Kind::Real),
    ("target.delta", Kind::PositiveReal),
    ("target.frame", Kind::Choice(&["interaction", "lab"])),
    ("truncation.N", Kind::PositiveInt),
    ("truncation.axes", Kind::PositiveInt),
    ("grid.T", Kind::PositiveReal),
    ("grid.M", Kind::PositiveInt),
    ("constraint.alpha_diss", Kind::PositiveReal),
    ("constraint.e_diss", Kind::NonNegativeReal),
    ("constraint.eps0", Kind::NonNegativeReal),
    ("constraint.energy", Kind::PositiveReal),
    ("coupling.eps", Kind::PositiveReal),
    ("coupling.charge", Kind::PositiveReal),
    ("coupling.potential", Kind::Choice(&["q", "q3"])),
    ("sweep.T", Kind::IncreasingPositiveReals),
    ("sweep.N", Kind::IncreasingPositiveInts),
    ("iontrap.omega0", Kind::Real),
    ("iontrap.omega0p", Kind::Real),
    ("oracle.steps", Kind::PositiveInt),
    ("oracle.hamiltonian", Kind::Choice(&["zero", "driven"])),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field {k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, Value>,
}

/// Finds the 1-based line that assigns `key`, honoring `[section]` headers.
fn locate(text: &str, key: &str) -> Option<usize> {
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(inner) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = inner.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs: String = lhs.split('.').map(|p| p.trim().trim_matches('"')).collect::<Vec<_>>().join(".");
        let full = if section.is_empty() { lhs.clone() } else { format!("{section}.{lhs}") };
        if full == key {
            return Some(i + 1);
        }
    }
    None
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn convert(kind: Kind, v: &toml::Value) -> Result<Value, String> {
    let real = |v: &toml::Value| match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {}", other.type_str())),
    };
    let int = |v: &toml::Value| match v {
        toml::Value::Integer(i) => Ok(*i),
        other => Err(format!("expected an integer, got {}", other.type_str())),
    };
    let finite = |x: f64| if x.is_finite() { Ok(x) } else { Err(format!("{x} is not finite")) };
    match kind {
        Kind::Choice(options) => match v {
            toml::Value::String(s) if options.contains(&s.as_str()) => Ok(Value::Str(s.clone())),
            toml::Value::String(s) => Err(format!("{s:?} is not one of {}", options.join(", "))),
            other => Err(format!("expected a string, got {}", other.type_str())),
        },
        Kind::Text => match v {
            toml::Value::String(s) if !s.is_empty() => Ok(Value::Str(s.clone())),
            toml::Value::String(_) => Err("must not be empty".into()),
            other => Err(format!("expected a string, got {}", other.type_str())),
        },
        Kind::Real => Ok(Value::Float(finite(real(v)?)?)),
        Kind::PositiveReal => {
            let x = finite(real(v)?)?;
            if x > 0.0 { Ok(Value::Float(x)) } else { Err(format!("must be positive, got {x}")) }
        }
        Kind::NonNegativeReal => {
            let x = finite(real(v)?)?;
            if x >= 0.0 { Ok(Value::Float(x)) } else { Err(format!("must be nonnegative, got {x}")) }
        }
        Kind::PositiveInt => {
            let i = int(v)?;
            if i > 0 { Ok(Value::Int(i)) } else { Err(format!("must be positive, got {i}")) }
        }
        Kind::NonNegativeInt => {
            let i = int(v)?;
            if i >= 0 { Ok(Value::Int(i)) } else { Err(format!("must be nonnegative, got {i}")) }
        }
        Kind::IncreasingPositiveReals => {
            let arr = v.as_array().ok_or_else(|| format!("expected a list, got {}", v.type_str()))?;
            let xs = arr.iter().map(|x| real(x).and_then(finite)).collect::<Result<Vec<_>, _>>()?;
            if xs.is_empty() {
                return Err("list must not be empty".into());
            }
            if xs[0] <= 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err("values must be positive and strictly increasing".into());
            }
            Ok(Value::Floats(xs))
        }
        Kind::IncreasingPositiveInts => {
            let arr = v.as_array().ok_or_else(|| format!("expected a list, got {}", v.type_str()))?;
            let xs = arr.iter().map(int).collect::<Result<Vec<_>, _>>()?;
            if xs.is_empty() {
                return Err("list must not be empty".into());
            }
            if xs[0] <= 0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err("values must be positive and strictly increasing".into());
            }
            Ok(Value::Ints(xs))
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            field: None,
            message: e.message().to_string(),
        })?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut values = BTreeMap::new();
        for (key, raw) in flat {
            let err = |message: String| ConfigError {
                line: locate(text, &key),
                field: Some(key.clone()),
                message,
            };
            let kind = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| err("unknown key".into()))?;
            let value = convert(kind, &raw).map_err(err)?;
            values.insert(key, value);
        }
        if !values.contains_key("experiment") {
            return Err(ConfigError {
                line: None,
                field: Some("experiment".into()),
                message: "missing required key".into(),
            });
        }
        Ok(Self { values })
    }

    /// Renders the configuration as text that parses back to an equal value.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn experiment(&self) -> &str {
        self.str("experiment").expect("validated at parse time")
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        match self.values.get(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn real_or(&self, key: &str, default: f64) -> f64 {
        self.real(key).unwrap_or(default)
    }

    pub fn int(&self, key: &str) -> Option<i64> {
        match self.values.get(key) {
            Some(Value::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.int(key).map(|i| i as usize).unwrap_or(default)
    }

    pub fn reals(&self, key: &str) -> Option<&[f64]> {
        match self.values.get(key) {
            Some(Value::Floats(v)) => Some(v),
            _ => None,
        }
    }

    pub fn ints(&self, key: &str) -> Option<&[i64]> {
        match self.values.get(key) {
            Some(Value::Ints(v)) => Some(v),
            _ => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("seed").unwrap_or(0) as u64
    }

    /// Overrides the seed, as `--seed` does.
    pub fn set_seed(&mut self, seed: u64) {
        self.values.insert("seed".into(), Value::Int(seed as i64));
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .values
            .iter()
            .map(|(k, v)| {
                let j = match v {
                    Value::Int(i) => serde_json::json!(i),
                    Value::Float(x) => serde_json::json!(x),
                    Value::Str(s) => serde_json::json!(s),
                    Value::Floats(xs) => serde_json::json!(xs),
                    Value::Ints(xs) => serde_json::json!(xs),
                };
                (k.clone(), j)
            })
            .collect();
        serde_json::Value::Object(map)
    }
}
