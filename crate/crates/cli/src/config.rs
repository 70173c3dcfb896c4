//! Run-configuration schema and loading.
//!
//! A run is described by one TOML file with sections `[graph]`,
//! `[potential]`, `[solver]`, `[action]`, and `[output]`. Exactly one
//! action per file; `[graph]` and `[potential]` are required by every
//! action except `appendix`, which is a pure series computation. Unknown
//! keys are rejected so typos surface as parse errors instead of silently
//! falling back to defaults.
//!
//! ```toml
//! [graph]
//! kind = "lattice"          # or "general"
//! dimension = 1
//! sides = [32]
//! boundary = "torus"        # or "dirichlet"
//!
//! [potential]
//! class = "periodic"        # periodic | coercive | well |
//!                           # asymptotically_periodic | explicit
//! period = 2
//! tile = [0.0, 0.5]
//!
//! [solver]                  # optional; all fields have defaults
//! p = 2.0
//! seed = 0
//!
//! [action]
//! kind = "solve"            # solve | multi | verify | appendix | compare
//!
//! [output]
//! directory = "out"
//! formats = ["json", "csv"]
//! ```

use loglat_core::graph::{
    build_general_graph, build_lattice, BoundaryKind, GraphTopology, LatticeSpec,
};
use loglat_core::potential::PotentialSpec;
use loglat_core::solver::{ArmijoParams, InitKind, NewtonParams, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from reading, parsing, or validating a run configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {reason}")]
    Invalid { reason: String },
    #[error("cannot read edge file {path}: {reason}")]
    EdgeFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Graph(#[from] loglat_core::graph::GraphError),
}

/// The `[graph]` section: a lattice truncation or an explicit edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSection {
    Lattice {
        dimension: usize,
        sides: Vec<usize>,
        boundary: BoundaryKind,
    },
    General {
        vertices: usize,
        /// Inline undirected edge list.
        #[serde(default)]
        edges: Vec<(usize, usize)>,
        /// Optional file of edges, one `a,b` pair per line (`#` comments
        /// allowed), resolved relative to the config file.
        #[serde(default)]
        edge_file: Option<PathBuf>,
    },
}

fn default_p() -> f64 {
    2.0
}

/// The `[solver]` section. Every field is optional; omitted fields take
/// the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Exponent of the model (p > 1).
    #[serde(default = "default_p")]
    pub p: f64,
    /// Route all evaluation through the general p-power pipeline even at
    /// p = 2 (cross-validation mode).
    #[serde(default)]
    pub general_scheme: bool,
    pub max_iterations: Option<usize>,
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub init: Option<InitKind>,
    pub armijo: Option<ArmijoParams>,
    pub newton: Option<NewtonParams>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            p: default_p(),
            general_scheme: false,
            max_iterations: None,
            grad_tol: None,
            seed: 0,
            init: None,
            armijo: None,
            newton: None,
        }
    }
}

impl SolverSection {
    /// Materializes the library solver configuration.
    pub fn to_solver_config(&self) -> SolverConfig {
        let defaults = SolverConfig::default();
        SolverConfig {
            max_iterations: self.max_iterations.unwrap_or(defaults.max_iterations),
            grad_tol: self.grad_tol.unwrap_or(defaults.grad_tol),
            armijo: self.armijo.unwrap_or(defaults.armijo),
            newton: self.newton.unwrap_or(defaults.newton),
            seed: self.seed,
            init: self.init.clone().unwrap_or(defaults.init),
        }
    }
}

fn default_cases() -> usize {
    25
}

fn default_lambda() -> f64 {
    2.0
}

fn default_starts() -> usize {
    5
}

/// The `[action]` section: exactly one batch action per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSection {
    /// Compute one ground state.
    Solve,
    /// Search for `count` distinct critical points.
    Multi { count: usize },
    /// Run named identity/inequality checks on seeded random fields.
    Verify {
        checks: Vec<String>,
        /// Random fields per check.
        #[serde(default = "default_cases")]
        cases: usize,
        /// Shift factor for the `lambda_shift` check.
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Slow-decay series prefix sums.
    Appendix { p: f64, n_max: u64 },
    /// Ground-level comparison against a second potential.
    Compare {
        potential_b: PotentialSpec,
        #[serde(default = "default_starts")]
        starts: usize,
    },
}

/// Output formats for the run record and field dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json, OutputFormat::Csv]
}

/// The `[output]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for record.json and CSV dumps; created if absent,
    /// resolved relative to the working directory.
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

/// One parsed run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<GraphSection>,
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub solver: SolverSection,
    pub action: ActionSection,
    pub output: OutputSection,
}

/// The check names accepted by the `verify` action.
pub const KNOWN_CHECKS: &[&str] = &[
    "log_sobolev",
    "norm_equivalence",
    "lambda_shift",
    "sign_inequality",
    "scaling_identity",
    "max_at_one",
    "grad_check",
];

impl RunConfig {
    /// Structural validation beyond what the parser enforces.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |reason: String| Err(ConfigError::Invalid { reason });
        if !self.solver.p.is_finite() || self.solver.p <= 1.0 {
            return fail(format!("[solver] p = {} must be > 1", self.solver.p));
        }
        let needs_problem = !matches!(self.action, ActionSection::Appendix { .. });
        if needs_problem {
            if self.graph.is_none() {
                return fail("this action requires a [graph] section".to_string());
            }
            if self.potential.is_none() {
                return fail("this action requires a [potential] section".to_string());
            }
        }
        match &self.action {
            ActionSection::Multi { count } if *count == 0 => {
                fail("[action] multi count must be at least 1".to_string())
            }
            ActionSection::Verify { checks, cases, .. } => {
                if checks.is_empty() {
                    return fail("[action] verify needs at least one check name".to_string());
                }
                if *cases == 0 {
                    return fail("[action] verify cases must be at least 1".to_string());
                }
                for c in checks {
                    if !KNOWN_CHECKS.contains(&c.as_str()) {
                        return fail(format!(
                            "unknown check '{c}'; known checks: {}",
                            KNOWN_CHECKS.join(", ")
                        ));
                    }
                }
                Ok(())
            }
            ActionSection::Appendix { p, n_max } => {
                if !p.is_finite() || *p <= 1.0 || *n_max < 10 {
                    return fail(format!(
                        "[action] appendix needs p > 1 and n_max ≥ 10, got p = {p}, n_max = {n_max}"
                    ));
                }
                Ok(())
            }
            ActionSection::Compare { starts, .. } if *starts == 0 => {
                fail("[action] compare starts must be at least 1".to_string())
            }
            _ => Ok(()),
        }
    }
}

/// Reads and parses a run configuration; does not yet validate semantics.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(toml::from_str(&text)?)
}

/// Materializes the `[graph]` section into a topology. `base_dir` anchors
/// relative `edge_file` paths (normally the config file's directory).
pub fn build_graph(section: &GraphSection, base_dir: &Path) -> Result<GraphTopology, ConfigError> {
    match section {
        GraphSection::Lattice {
            dimension,
            sides,
            boundary,
        } => Ok(build_lattice(&LatticeSpec {
            dimension: *dimension,
            sides: sides.clone(),
            boundary: *boundary,
        })?),
        GraphSection::General {
            vertices,
            edges,
            edge_file,
        } => {
            let mut all = edges.clone();
            if let Some(file) = edge_file {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                all.extend(read_edge_file(&path)?);
            }
            Ok(build_general_graph(*vertices, &all)?)
        }
    }
}

/// Parses an edge file: one `a,b` pair per line, `#` starts a comment,
/// blank lines ignored.
fn read_edge_file(path: &Path) -> Result<Vec<(usize, usize)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::EdgeFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<usize, ConfigError> {
            s.and_then(|t| t.parse().ok())
                .ok_or_else(|| ConfigError::EdgeFile {
                    path: path.to_path_buf(),
                    reason: format!("line {}: expected 'a,b' with integers", lineno + 1),
                })
        };
        let a = parse(parts.next())?;
        let b = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(ConfigError::EdgeFile {
                path: path.to_path_buf(),
                reason: format!("line {}: expected exactly two fields", lineno + 1),
            });
        }
        edges.push((a, b));
    }
    Ok(edges)
}
