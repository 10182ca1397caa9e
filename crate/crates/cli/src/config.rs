//! Experiment configuration and its flat `section.key = value` text form.
//!
//! Every line assigns one dotted path. Values are TOML-style scalars or inline
//! arrays (`1.5`, `true`, `"text"`, `[0.0, 0.5]`); a bare word is read as a
//! string. Numeric path segments index into lists, so `tasks.0.kind = "solve"`
//! describes the first task. `[section]` headers prefix the keys that follow.

use std::collections::BTreeMap;
use std::path::PathBuf;

use binorm_gs::analysis::RadialFn;
use binorm_gs::model::ProblemSpec;
use binorm_gs::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{0}` conflicts with another entry")]
    Conflict(String),
    #[error("list `{0}` has missing indices")]
    SparseList(String),
    #[error("config does not describe an experiment: {0}")]
    Shape(String),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 4096, length: 64.0 }
    }
}

fn yes() -> bool {
    true
}

fn default_thetas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_separations() -> Vec<usize> {
    (8..=20).map(|d| d * 64).collect()
}

fn default_x_max() -> f64 {
    100.0
}

fn default_samples() -> usize {
    1000
}

fn default_resolution() -> f64 {
    1e-3
}

/// One unit of work. `required` tasks fail the run when a solve does not converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Solve {
        #[serde(default = "yes")]
        required: bool,
    },
    ScanSubadd {
        /// Values per axis; the grid is their square minus `(1, 1)`.
        #[serde(default = "default_thetas")]
        theta: Vec<f64>,
        #[serde(default = "yes")]
        required: bool,
    },
    Decay {
        /// Fit windows `[r1, r2]`; empty means the default window.
        #[serde(default)]
        windows: Vec<[f64; 2]>,
        #[serde(default = "yes")]
        required: bool,
    },
    Glue {
        /// Translation distances in grid cells.
        #[serde(default = "default_separations")]
        separations: Vec<usize>,
        /// Masses of the piece kept in the potentials.
        split: [f64; 2],
        #[serde(default = "yes")]
        required: bool,
    },
    Pohozaev {
        #[serde(default = "yes")]
        required: bool,
    },
    Inequalities {
        p: f64,
        /// Defaults to `p / 2`.
        #[serde(default)]
        eta: Option<f64>,
        /// Constant checked in the two-variable inequality; defaults to the
        /// constant produced by the proof.
        #[serde(default)]
        constant: Option<f64>,
        #[serde(default = "default_x_max")]
        x_max: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    Convolution {
        f: RadialFn,
        g: RadialFn,
        #[serde(default)]
        alpha: f64,
        beta: f64,
        gamma: f64,
        r: Vec<f64>,
        omegas: Vec<[f64; 2]>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Solve { .. } => "solve",
            Task::ScanSubadd { .. } => "subadd",
            Task::Decay { .. } => "decay",
            Task::Glue { .. } => "glue",
            Task::Pohozaev { .. } => "pohozaev",
            Task::Inequalities { .. } => "inequalities",
            Task::Convolution { .. } => "convolution",
        }
    }

    pub fn required(&self) -> bool {
        match self {
            Task::Solve { required }
            | Task::ScanSubadd { required, .. }
            | Task::Decay { required, .. }
            | Task::Glue { required, .. }
            | Task::Pohozaev { required } => *required,
            Task::Inequalities { .. } | Task::Convolution { .. } => false,
        }
    }

    /// Whether the task needs a validated problem.
    pub fn uses_problem(&self) -> bool {
        !matches!(self, Task::Inequalities { .. } | Task::Convolution { .. })
    }
}

fn default_problem() -> ProblemSpec {
    ProblemSpec::symmetric(1, 1.0, 1.0, 1e-6, 1.0)
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_problem")]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: default_problem(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            tasks: Vec::new(),
            output_dir: default_output(),
        }
    }
}

impl ExperimentConfig {
    /// Parses flat text; omitted keys keep their default values.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(Self::default()).expect("config serializes");
        merge(&mut value, parse_flat(text)?);
        serde_json::from_value(value).map_err(|e| ConfigError::Shape(e.to_string()))
    }

    pub fn to_flat(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        to_flat(&value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not involve the problem hypotheses.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.tasks.is_empty() {
            return Err(ConfigError::Invalid("at least one task is required".into()));
        }
        let alpha = self.problem.masses();
        for task in &self.tasks {
            match task {
                Task::Glue { split, separations, .. } => {
                    if split.iter().zip(alpha).any(|(g, a)| !(*g > 0.0 && *g < a)) {
                        return Err(ConfigError::Invalid(format!(
                            "glue split {split:?} must lie strictly between 0 and the masses {alpha:?}"
                        )));
                    }
                    if separations.is_empty() {
                        return Err(ConfigError::Invalid("glue needs at least one separation".into()));
                    }
                }
                Task::ScanSubadd { theta, .. } => {
                    if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
                        return Err(ConfigError::Invalid("θ values must lie in [0, 1]".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Reads flat text into nested JSON.
pub fn parse_flat(text: &str) -> Result<Value, ConfigError> {
    let mut root = Value::Object(Map::new());
    let mut section = String::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax {
            line: k + 1,
            message: message.to_string(),
        };
        if let Some(rest) = line.strip_prefix('[') {
            if !line.contains('=') {
                section = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax("unterminated section header"))?
                    .trim()
                    .to_string();
                continue;
            }
        }
        let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(syntax("empty key"));
        }
        let path = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        insert(&mut root, &path, parse_value(value.trim()))?;
    }
    listify(root, "")
}

/// Overlays `top` onto `base`; objects merge key by key, anything else replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, top) => *slot = top,
    }
}

fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

fn insert(root: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let conflict = || ConfigError::Conflict(path.to_string());
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = node.as_object_mut().ok_or_else(conflict)?;
        if parts.peek().is_none() {
            if map.insert(part.to_string(), value).is_some() {
                return Err(conflict());
            }
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Turns maps keyed `0..n` into lists.
fn listify(value: Value, path: &str) -> Result<Value, ConfigError> {
    let Value::Object(map) = value else {
        return Ok(value);
    };
    let numeric = !map.is_empty() && map.keys().all(|k| k.parse::<usize>().is_ok());
    if numeric {
        let mut items: BTreeMap<usize, Value> = BTreeMap::new();
        for (k, v) in map {
            items.insert(k.parse().expect("numeric key"), listify(v, &format!("{path}.{k}"))?);
        }
        if items.keys().enumerate().any(|(i, k)| i != *k) {
            return Err(ConfigError::SparseList(path.trim_start_matches('.').to_string()));
        }
        return Ok(Value::Array(items.into_values().collect()));
    }
    let mut out = Map::new();
    for (k, v) in map {
        let child = listify(v, &format!("{path}.{k}"))?;
        out.insert(k, child);
    }
    Ok(Value::Object(out))
}

/// Writes nested JSON as sorted flat lines.
pub fn to_flat(value: &Value) -> String {
    let mut lines = Vec::new();
    flatten(value, String::new(), &mut lines);
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn flatten(value: &Value, prefix: String, out: &mut Vec<String>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                flatten(v, join(k), out);
            }
        }
        Value::Array(items) if items.iter().any(Value::is_object) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, join(&i.to_string()), out);
            }
        }
        _ => out.push(format!("{prefix} = {value}")),
    }
}
