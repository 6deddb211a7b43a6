//! Experiment configuration: a TOML file with a few top-level keys and one
//! table per concern. Parsing reports every problem found, not just the
//! first.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::HindsightBudget;
use crate::problems::{LogisticSettings, QcqpSettings};
use crate::solver::Feedback;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Qcqp,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default = "default_p_edge")]
    pub p_edge: f64,
    #[serde(default)]
    pub seed: u64,
    /// Edge list file; replaces the random graph when given.
    #[serde(default)]
    pub edge_list: Option<PathBuf>,
}

fn default_p_edge() -> f64 {
    0.2
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { p_edge: default_p_edge(), seed: 0, edge_list: None }
    }
}

/// One link-failure setting of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scenario {
    Perfect {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// `p_ij ~ U[lo, hi]` independently per directed pair.
    UniformRange {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// Lines `i j p` giving `p_ij` for every directed pair.
    PerPairFile {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl Scenario {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Scenario::UniformRange { lo, hi, label: None }
    }

    /// `perfect`, `p<hi>` for ranges starting at zero, `p<lo>-<hi>` otherwise.
    pub fn label(&self) -> String {
        match self {
            Scenario::Perfect { label: Some(l) }
            | Scenario::UniformRange { label: Some(l), .. }
            | Scenario::PerPairFile { label: Some(l), .. } => l.clone(),
            Scenario::Perfect { label: None } => "perfect".into(),
            Scenario::UniformRange { lo, hi, .. } if *lo == 0.0 => format!("p{hi:.2}"),
            Scenario::UniformRange { lo, hi, .. } => format!("p{lo:.2}-{hi:.2}"),
            Scenario::PerPairFile { path, .. } => format!(
                "file-{}",
                path.file_stem().map_or("probs".into(), |s| s.to_string_lossy())
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_feedback")]
    pub feedback: Feedback,
    /// Stepsize scale in `eta = a / sqrt(T)`.
    pub a: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Use the lower end of the admissible `delta` interval instead of `delta`.
    #[serde(default)]
    pub theorem_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Radius `R` of the feasible ball; `sqrt(d)` for QCQP and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Radius `r` of the ball inside `X`; `R / 2` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_radius: Option<f64>,
    /// Bandit query offset; `1 / T` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// Bandit shrink factor; `1 / (r T)` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_feedback() -> Feedback {
    Feedback::FullInfo
}

fn default_delta() -> f64 {
    1.0
}

/// Regularity constants; missing ones are estimated from the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "default_estimate_samples")]
    pub estimate_samples: usize,
}

fn default_estimate_samples() -> usize {
    200
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { g: None, g_tilde: None, l: None, c: None, estimate_samples: default_estimate_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub graph: GraphConfig,
    pub scenarios: Vec<Scenario>,
    pub solver: SolverConfig,
    pub constants: ConstantsConfig,
    pub benchmark: HindsightBudget,
    pub qcqp: QcqpSettings,
    pub logistic: LogisticSettings,
}

const TOP_KEYS: &[&str] = &[
    "experiment", "n", "d", "horizon", "seeds", "output_dir", "graph", "scenarios", "solver",
    "constants", "benchmark", "qcqp", "logistic",
];
const GRAPH_KEYS: &[&str] = &["p_edge", "seed", "edge_list"];
const SOLVER_KEYS: &[&str] = &[
    "feedback", "a", "delta", "theorem_mode", "beta", "radius", "interior_radius", "zeta", "alpha",
];
const CONSTANTS_KEYS: &[&str] = &["g", "g_tilde", "l", "c", "estimate_samples"];
const BENCHMARK_KEYS: &[&str] = &[
    "max_outer", "max_inner", "feasibility_tol", "stationarity_tol", "initial_penalty", "max_penalty",
];
const QCQP_KEYS: &[&str] = &[
    "perturbation", "eigenvalue_range", "linear_range", "constraint_matrix_scale",
    "constraint_linear_std", "constraint_offset_range", "feasibility_margin", "feasibility_samples",
];
const LOGISTIC_KEYS: &[&str] = &["proximity_bound_range", "weight_norm_cap"];

impl RunConfig {
    /// Online QCQP on a 30-agent Erdős–Rényi graph.
    pub fn qcqp_preset() -> Self {
        let d = 3;
        Self {
            experiment: ExperimentKind::Qcqp,
            n: 30,
            d,
            horizon: 5000,
            seeds: vec![1, 2, 3, 4, 5],
            output_dir: PathBuf::from("out/qcqp"),
            graph: GraphConfig { p_edge: 0.2, seed: 7, edge_list: None },
            scenarios: vec![
                Scenario::Perfect { label: None },
                Scenario::uniform(0.0, 0.25),
                Scenario::uniform(0.0, 0.40),
            ],
            solver: SolverConfig {
                feedback: Feedback::FullInfo,
                a: 0.12,
                delta: 1.0,
                theorem_mode: false,
                beta: None,
                radius: Some((d as f64).sqrt()),
                interior_radius: Some((d as f64).sqrt() / 2.0),
                zeta: None,
                alpha: None,
            },
            constants: ConstantsConfig::default(),
            benchmark: HindsightBudget::default(),
            qcqp: QcqpSettings::default(),
            logistic: LogisticSettings::default(),
        }
    }

    /// Online logistic regression with proximity constraints.
    pub fn logistic_preset() -> Self {
        Self {
            experiment: ExperimentKind::Logistic,
            output_dir: PathBuf::from("out/logistic"),
            scenarios: vec![
                Scenario::Perfect { label: None },
                Scenario::uniform(0.0, 0.30),
                Scenario::uniform(0.0, 0.40),
            ],
            solver: SolverConfig {
                a: 1.0,
                radius: Some(1.0),
                interior_radius: Some(0.5),
                ..Self::qcqp_preset().solver
            },
            ..Self::qcqp_preset()
        }
    }

    /// `R`, with the experiment-specific default.
    pub fn radius(&self) -> f64 {
        self.solver.radius.unwrap_or(match self.experiment {
            ExperimentKind::Qcqp => (self.d as f64).sqrt(),
            ExperimentKind::Logistic => 1.0,
        })
    }

    /// `r`, half of `R` unless given.
    pub fn interior_radius(&self) -> f64 {
        self.solver.interior_radius.unwrap_or(self.radius() / 2.0)
    }

    pub fn parse_str(text: &str, base_dir: &Path) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: PathBuf::from("<config>"),
            msg: e.to_string(),
        })?;
        let mut config = from_table(value)?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    /// Reads, parses and validates a config file. Relative paths inside it
    /// are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_str(&text, base).map_err(|e| match e {
            Error::Parse { msg, .. } => Error::Parse { path: path.to_path_buf(), msg },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.graph.edge_list.as_mut() {
            resolve(p);
        }
        for s in &mut self.scenarios {
            if let Scenario::PerPairFile { path, .. } = s {
                resolve(path);
            }
        }
    }

    /// Every range violation of an otherwise well-typed config.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(&mut errors);
        if errors.is_empty() { Ok(()) } else { Err(Error::Config(errors)) }
    }

    fn collect_errors(&self, errors: &mut Vec<String>) {
        if self.n < 2 {
            errors.push(format!("n must be at least 2, got {}", self.n));
        }
        if self.d < 1 {
            errors.push("d must be at least 1".into());
        }
        if self.horizon < 1 {
            errors.push("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() {
            errors.push("seeds must not be empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            errors.push("seeds must be distinct".into());
        }
        if !(0.0..=1.0).contains(&self.graph.p_edge) {
            errors.push(format!("graph.p_edge must lie in [0, 1], got {}", self.graph.p_edge));
        }

        if self.scenarios.is_empty() {
            errors.push("at least one scenario is required".into());
        }
        let mut labels = BTreeSet::new();
        for (k, s) in self.scenarios.iter().enumerate() {
            if let Scenario::UniformRange { lo, hi, .. } = s {
                if !(0.0 <= *lo && lo <= hi && *hi < 1.0) {
                    errors.push(format!(
                        "scenarios[{k}]: need 0 <= lo <= hi < 1, got lo = {lo}, hi = {hi}"
                    ));
                }
            }
            let label = s.label();
            if label.is_empty() || label.contains(['/', '\\', ',']) {
                errors.push(format!("scenarios[{k}]: label {label:?} is not usable in a file name"));
            }
            if !labels.insert(label.clone()) {
                errors.push(format!("scenarios[{k}]: duplicate label {label:?}"));
            }
        }

        let s = &self.solver;
        if !(s.a.is_finite() && s.a > 0.0) {
            errors.push(format!("solver.a must be positive, got {}", s.a));
        }
        if !(s.delta.is_finite() && s.delta > 0.0) {
            errors.push(format!("solver.delta must be positive, got {}", s.delta));
        }
        if let Some(beta) = s.beta {
            if !(beta > 0.0) {
                errors.push(format!("solver.beta must be positive, got {beta}"));
            }
        }
        let (radius, r) = (self.radius(), self.interior_radius());
        if !(radius.is_finite() && radius > 0.0) {
            errors.push(format!("solver.radius must be positive, got {radius}"));
        }
        if !(r > 0.0 && r < radius) {
            errors.push(format!("solver.interior_radius must satisfy 0 < r < R, got r = {r}, R = {radius}"));
        }
        match (s.zeta, s.alpha) {
            (None, None) => {}
            (Some(zeta), Some(alpha)) => {
                if !(zeta > 0.0 && zeta < r) {
                    errors.push(format!("solver.zeta must lie in (0, r), got {zeta}"));
                }
                if !(alpha >= zeta / r && alpha < 1.0) {
                    errors.push(format!("solver.alpha must lie in [zeta / r, 1), got {alpha}"));
                }
            }
            _ => errors.push("solver.zeta and solver.alpha must be given together".into()),
        }

        let c = &self.constants;
        for (name, v) in [("g", c.g), ("g_tilde", c.g_tilde), ("l", c.l), ("c", c.c)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    errors.push(format!("constants.{name} must be positive, got {v}"));
                }
            }
        }
        if c.estimate_samples == 0 {
            errors.push("constants.estimate_samples must be positive".into());
        }

        let b = &self.benchmark;
        if b.max_outer == 0 || b.max_inner == 0 {
            errors.push("benchmark iteration limits must be positive".into());
        }
        for (name, v) in [
            ("feasibility_tol", b.feasibility_tol),
            ("stationarity_tol", b.stationarity_tol),
            ("initial_penalty", b.initial_penalty),
            ("max_penalty", b.max_penalty),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("benchmark.{name} must be positive, got {v}"));
            }
        }
        self.qcqp.validate(errors);
        self.logistic.validate(errors);
    }
}

/// Reports and drops unknown keys so the rest of the table still gets checked.
fn unknown_keys(table: &mut toml::Table, known: &[&str], prefix: &str, errors: &mut Vec<String>) {
    table.retain(|key, _| {
        let ok = known.contains(&key);
        if !ok {
            errors.push(format!("unknown key `{prefix}{key}`"));
        }
        ok
    });
}

/// Deserializes one section, recording a failure instead of returning it.
fn section<T: DeserializeOwned>(value: Option<toml::Value>, name: &str, errors: &mut Vec<String>) -> Option<T> {
    let value = value.unwrap_or_else(|| toml::Value::Table(toml::Table::new()));
    match value.try_into::<T>() {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{name}: {}", e.to_string().trim()));
            None
        }
    }
}

fn required<T: DeserializeOwned>(table: &mut toml::Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    match table.remove(key) {
        None => {
            errors.push(format!("missing key `{key}`"));
            None
        }
        Some(v) => section(Some(v), key, errors),
    }
}

fn from_table(mut top: toml::Table) -> Result<RunConfig> {
    let mut errors = Vec::new();
    unknown_keys(&mut top, TOP_KEYS, "", &mut errors);
    for (name, keys) in [
        ("graph", GRAPH_KEYS),
        ("solver", SOLVER_KEYS),
        ("constants", CONSTANTS_KEYS),
        ("benchmark", BENCHMARK_KEYS),
        ("qcqp", QCQP_KEYS),
        ("logistic", LOGISTIC_KEYS),
    ] {
        match top.get_mut(name) {
            Some(toml::Value::Table(t)) => unknown_keys(t, keys, &format!("{name}."), &mut errors),
            Some(_) => errors.push(format!("`{name}` must be a table")),
            None => {}
        }
    }
    if let Some(toml::Value::Array(items)) = top.get_mut("scenarios") {
        for (k, item) in items.iter_mut().enumerate() {
            let Some(t) = item.as_table_mut() else { continue };
            let keys: &[&str] = match t.get("mode").and_then(|m| m.as_str()) {
                Some("perfect") => &["mode", "label"],
                Some("uniform-range") => &["mode", "lo", "hi", "label"],
                Some("per-pair-file") => &["mode", "path", "label"],
                _ => continue,
            };
            unknown_keys(t, keys, &format!("scenarios[{k}]."), &mut errors);
        }
    }

    let experiment: Option<ExperimentKind> = required(&mut top, "experiment", &mut errors);
    let n = required(&mut top, "n", &mut errors);
    let d = required(&mut top, "d", &mut errors);
    let horizon = required(&mut top, "horizon", &mut errors);
    let seeds = required(&mut top, "seeds", &mut errors);
    let output_dir = match top.remove("output_dir") {
        Some(v) => section(Some(v), "output_dir", &mut errors),
        None => Some(PathBuf::from("out")),
    };
    let graph = section(top.remove("graph"), "graph", &mut errors);
    let scenarios = match top.remove("scenarios") {
        Some(v) => section(Some(v), "scenarios", &mut errors),
        None => {
            errors.push("missing key `scenarios`".into());
            None
        }
    };
    let solver = match top.remove("solver") {
        Some(v) => section(Some(v), "solver", &mut errors),
        None => {
            errors.push("missing table `solver`".into());
            None
        }
    };
    let constants = section(top.remove("constants"), "constants", &mut errors);
    let benchmark = section(top.remove("benchmark"), "benchmark", &mut errors);
    let qcqp = section(top.remove("qcqp"), "qcqp", &mut errors);
    let logistic = section(top.remove("logistic"), "logistic", &mut errors);

    let config = match (
        experiment, n, d, horizon, seeds, output_dir, graph, scenarios, solver, constants, benchmark,
        qcqp, logistic,
    ) {
        (
            Some(experiment),
            Some(n),
            Some(d),
            Some(horizon),
            Some(seeds),
            Some(output_dir),
            Some(graph),
            Some(scenarios),
            Some(solver),
            Some(constants),
            Some(benchmark),
            Some(qcqp),
            Some(logistic),
        ) => Some(RunConfig {
            experiment,
            n,
            d,
            horizon,
            seeds,
            output_dir,
            graph,
            scenarios,
            solver,
            constants,
            benchmark,
            qcqp,
            logistic,
        }),
        _ => None,
    };
    if let Some(c) = &config {
        c.collect_errors(&mut errors);
    }
    match config {
        Some(c) if errors.is_empty() => Ok(c),
        _ => Err(Error::Config(errors)),
    }
}
