//! Action dispatch and output writing.
//!
//! [`execute`] is the whole CLI contract: load and validate a config,
//! run its single action, write `record.json` plus CSV tables into the
//! output directory, and map the outcome onto the exit codes
//!
//! * 0 — success,
//! * 2 — configuration or validation failure,
//! * 3 — the solver did not converge,
//! * 4 — a verification check ran but was not satisfied,
//! * 1 — unexpected internal failure (output I/O, serialization).

use crate::config::{
    build_graph, load_config, ActionSection, ConfigError, OutputFormat, RunConfig,
};
use crate::io::format_value;
use crate::record::{timestamp_now, ActionResults, RunRecord};
use loglat_core::analysis::{self, AnalysisError, CheckReport};
use loglat_core::field::Field;
use loglat_core::functional::{self, FunctionalError, Scheme};
use loglat_core::graph::GraphTopology;
use loglat_core::potential::{make_potential, Potential, PotentialError};
use loglat_core::solver::{self, SolveResult, SolverError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from running a configuration, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Field(#[from] loglat_core::field::FieldError),
    #[error("cannot write {path}: {reason}")]
    OutputWrite { path: PathBuf, reason: String },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl RunError {
    /// The exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Potential(_) | RunError::Analysis(_) => 2,
            RunError::Solver(e) => match e {
                SolverError::SingularSystem { .. }
                | SolverError::GroundLevelUnconverged { .. } => 3,
                _ => 2,
            },
            RunError::Functional(_) | RunError::Field(_) => 2,
            RunError::OutputWrite { .. } | RunError::Serialize(_) => 1,
        }
    }
}

/// Loads, validates, runs, and records one configuration. Returns the
/// process exit code; failures are logged and printed to stderr.
pub fn execute(config_path: &Path, seed_override: Option<u64>) -> i32 {
    match run(config_path, seed_override) {
        Ok(exit) => exit,
        Err(e) => {
            log::error!("run failed: {e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// One CSV table to be written into the output directory.
struct CsvTable {
    filename: String,
    content: String,
}

fn run(config_path: &Path, seed_override: Option<u64>) -> Result<i32, RunError> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed_override {
        config.solver.seed = seed;
    }
    config.validate()?;
    log::info!("loaded config from {}", config_path.display());
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let started_at = timestamp_now();
    let (results, exit, tables) = dispatch(&config, base_dir)?;
    let record = RunRecord {
        version: loglat_core::version().to_string(),
        started_at,
        finished_at: timestamp_now(),
        config: config.clone(),
        results,
    };
    write_outputs(&config, &record, &tables)?;
    Ok(exit)
}

/// The scheme the configuration selects: the natural pipeline for p, or
/// the general p-power pipeline when `general_scheme` is set.
fn scheme_of(config: &RunConfig) -> Result<Scheme, RunError> {
    let p = config.solver.p;
    Ok(if config.solver.general_scheme {
        Scheme::general(p)?
    } else {
        Scheme::for_exponent(p)?
    })
}

fn build_problem(
    config: &RunConfig,
    base_dir: &Path,
) -> Result<(GraphTopology, Potential), RunError> {
    let graph_section = config.graph.as_ref().expect("validated");
    let potential_spec = config.potential.as_ref().expect("validated");
    let graph = build_graph(graph_section, base_dir)?;
    let pot = make_potential(&graph, potential_spec)?;
    log::info!(
        "problem: {} vertices, {} edges, inf V = {}",
        graph.vertex_count(),
        graph.edge_count(),
        pot.infimum()
    );
    Ok((graph, pot))
}

fn dispatch(
    config: &RunConfig,
    base_dir: &Path,
) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    match &config.action {
        ActionSection::Solve => run_solve(config, base_dir),
        ActionSection::Multi { count } => run_multi(config, base_dir, *count),
        ActionSection::Verify {
            checks,
            cases,
            lambda,
        } => run_verify(config, base_dir, checks, *cases, *lambda),
        ActionSection::Appendix { p, n_max } => run_appendix(*p, *n_max),
        ActionSection::Compare { potential_b, starts } => {
            run_compare(config, base_dir, potential_b, *starts)
        }
    }
}

/// Serializes a solve result to JSON, reloads it, and recomputes the
/// residual sup-norm from the reloaded field.
fn reverify(
    graph: &GraphTopology,
    pot: &Potential,
    scheme: Scheme,
    result: &SolveResult,
) -> Result<f64, RunError> {
    let json = serde_json::to_string(result)?;
    let reloaded: SolveResult = serde_json::from_str(&json)?;
    let res = functional::residual(graph, pot, &reloaded.u, scheme)?;
    Ok(res.sup())
}

/// CSV dump of a solution: index, lattice coordinates when present, the
/// field value, the potential value, and the pointwise residual.
fn solution_csv(
    graph: &GraphTopology,
    pot: &Potential,
    scheme: Scheme,
    u: &Field,
) -> Result<String, RunError> {
    let residual = functional::residual(graph, pot, u, scheme)?;
    let mut out = String::from("index");
    if let Some(meta) = graph.lattice() {
        for a in 0..meta.dimension() {
            out.push_str(&format!(",x{a}"));
        }
    }
    out.push_str(",u,potential,residual\n");
    for v in 0..graph.vertex_count() {
        out.push_str(&v.to_string());
        if let Some(meta) = graph.lattice() {
            for c in meta.coords_of(v) {
                out.push_str(&format!(",{c}"));
            }
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            format_value(u[v]),
            format_value(pot.values()[v]),
            format_value(residual[v])
        ));
    }
    Ok(out)
}

fn run_solve(
    config: &RunConfig,
    base_dir: &Path,
) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    let (graph, pot) = build_problem(config, base_dir)?;
    let scheme = scheme_of(config)?;
    let solver_config = config.solver.to_solver_config();
    let result = solver::ground_state(&graph, &pot, scheme, &solver_config)?;
    log::info!(
        "solve: converged = {}, J = {}, residual_sup = {}",
        result.converged,
        result.energy,
        result.residual_sup
    );
    let reverified = reverify(&graph, &pot, scheme, &result)?;
    let drift = (reverified - result.residual_sup).abs();
    let tables = vec![CsvTable {
        filename: "solution.csv".to_string(),
        content: solution_csv(&graph, &pot, scheme, &result.u)?,
    }];
    let exit = if result.converged { 0 } else { 3 };
    Ok((
        ActionResults::Solve {
            result,
            reverified_residual_sup: reverified,
            reverification_drift: drift,
        },
        exit,
        tables,
    ))
}

fn run_multi(
    config: &RunConfig,
    base_dir: &Path,
    count: usize,
) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    let (graph, pot) = build_problem(config, base_dir)?;
    let scheme = scheme_of(config)?;
    let solver_config = config.solver.to_solver_config();
    let result = solver::find_multiple(&graph, &pot, scheme, count, &solver_config)?;
    log::info!(
        "multi: {} of {} requested solutions in {} attempts",
        result.solutions.len(),
        count,
        result.attempts
    );
    let mut reverified = Vec::with_capacity(result.solutions.len());
    let mut tables = Vec::with_capacity(result.solutions.len());
    for (i, solution) in result.solutions.iter().enumerate() {
        reverified.push(reverify(&graph, &pot, scheme, solution)?);
        tables.push(CsvTable {
            filename: format!("solution_{i:02}.csv"),
            content: solution_csv(&graph, &pot, scheme, &solution.u)?,
        });
    }
    let exit = if result.solutions.is_empty() { 3 } else { 0 };
    Ok((
        ActionResults::Multi {
            result,
            reverified_residual_sups: reverified,
        },
        exit,
        tables,
    ))
}

fn mixed_field(n: usize, rng: &mut ChaCha8Rng) -> Result<Field, RunError> {
    Ok(Field::from_fn(n, |_| 4.0 * rng.gen::<f64>() - 2.0)?)
}

fn positive_field(n: usize, rng: &mut ChaCha8Rng) -> Result<Field, RunError> {
    Ok(Field::from_fn(n, |_| 0.1 + 0.9 * rng.gen::<f64>())?)
}

fn run_verify(
    config: &RunConfig,
    base_dir: &Path,
    checks: &[String],
    cases: usize,
    lambda: f64,
) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    let (graph, pot) = build_problem(config, base_dir)?;
    let p = config.solver.p;
    let n = graph.vertex_count();
    let mut reports: Vec<CheckReport> = Vec::with_capacity(checks.len() * cases);
    for (check_idx, check) in checks.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.solver.seed.wrapping_add(1000 * check_idx as u64));
        for case in 0..cases {
            let mut report = match check.as_str() {
                "log_sobolev" => {
                    let mut u = mixed_field(n, &mut rng)?;
                    if u.is_zero() {
                        u = Field::delta(n, 0)?;
                    }
                    analysis::check_log_sobolev(&u, p)?
                }
                "norm_equivalence" => {
                    analysis::check_norm_equivalence(&graph, &mixed_field(n, &mut rng)?)?
                }
                "lambda_shift" => analysis::check_lambda_shift(
                    &graph,
                    &pot,
                    &mixed_field(n, &mut rng)?,
                    lambda,
                    p,
                )?,
                "sign_inequality" => {
                    if p != 2.0 {
                        return Err(AnalysisError::RequiresP2 { p }.into());
                    }
                    analysis::check_sign_inequality(&graph, &pot, &mixed_field(n, &mut rng)?)?
                }
                "scaling_identity" => {
                    analysis::check_scaling_identity(&graph, &pot, &mixed_field(n, &mut rng)?, p)?
                }
                "max_at_one" => {
                    let raw = positive_field(n, &mut rng)?;
                    let scheme = Scheme::for_exponent(p)?;
                    let (projected, _) = functional::nehari_project(&graph, &pot, &raw, scheme)?;
                    analysis::check_max_at_one(&graph, &pot, &projected, p)?
                }
                "grad_check" => {
                    analysis::grad_check(&graph, &pot, &positive_field(n, &mut rng)?, p)?
                }
                other => {
                    return Err(ConfigError::Invalid {
                        reason: format!("unknown check '{other}'"),
                    }
                    .into())
                }
            };
            report.details.insert("case".to_string(), case as f64);
            reports.push(report);
        }
    }
    let all_satisfied = reports.iter().all(|r| r.satisfied);
    log::info!(
        "verify: {} reports, all_satisfied = {all_satisfied}",
        reports.len()
    );
    let mut csv = String::from("name,case,lhs,rhs,tolerance,satisfied\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name,
            r.details.get("case").copied().unwrap_or(0.0) as usize,
            format_value(r.lhs),
            format_value(r.rhs),
            format_value(r.tolerance),
            r.satisfied
        ));
    }
    let tables = vec![CsvTable {
        filename: "checks.csv".to_string(),
        content: csv,
    }];
    let exit = if all_satisfied { 0 } else { 4 };
    Ok((
        ActionResults::Verify {
            reports,
            all_satisfied,
        },
        exit,
        tables,
    ))
}

fn run_appendix(p: f64, n_max: u64) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    let report = analysis::appendix_series(p, n_max)?;
    log::info!(
        "appendix: n_max = {n_max}, mass = {}, log = {}",
        report.mass_partial,
        report.log_partial
    );
    let mut csv = String::from("n,mass_partial,log_partial\n");
    for c in &report.checkpoints {
        csv.push_str(&format!(
            "{},{},{}\n",
            c.n,
            format_value(c.mass_partial),
            format_value(c.log_partial)
        ));
    }
    if report
        .checkpoints
        .last()
        .is_none_or(|c| c.n != report.n_max)
    {
        csv.push_str(&format!(
            "{},{},{}\n",
            report.n_max,
            format_value(report.mass_partial),
            format_value(report.log_partial)
        ));
    }
    let tables = vec![CsvTable {
        filename: "series.csv".to_string(),
        content: csv,
    }];
    Ok((ActionResults::Appendix { report }, 0, tables))
}

fn run_compare(
    config: &RunConfig,
    base_dir: &Path,
    potential_b: &loglat_core::potential::PotentialSpec,
    starts: usize,
) -> Result<(ActionResults, i32, Vec<CsvTable>), RunError> {
    let (graph, pot_a) = build_problem(config, base_dir)?;
    let pot_b = make_potential(&graph, potential_b)?;
    let scheme = scheme_of(config)?;
    let solver_config = config.solver.to_solver_config();
    let comparison = solver::compare_ground_levels(
        &graph,
        &pot_a,
        &pot_b,
        scheme,
        &solver_config,
        starts,
    )?;
    log::info!(
        "compare: level_a = {}, level_b = {}, strict = {}",
        comparison.level_a,
        comparison.level_b,
        comparison.strict
    );
    Ok((ActionResults::Compare { comparison }, 0, Vec::new()))
}

fn write_outputs(
    config: &RunConfig,
    record: &RunRecord,
    tables: &[CsvTable],
) -> Result<(), RunError> {
    let dir = &config.output.directory;
    std::fs::create_dir_all(dir).map_err(|e| RunError::OutputWrite {
        path: dir.clone(),
        reason: e.to_string(),
    })?;
    let write = |path: PathBuf, content: &str| -> Result<(), RunError> {
        std::fs::write(&path, content).map_err(|e| RunError::OutputWrite {
            path,
            reason: e.to_string(),
        })
    };
    if config.output.formats.contains(&OutputFormat::Json) {
        let json = serde_json::to_string_pretty(record)?;
        write(dir.join("record.json"), &json)?;
    }
    if config.output.formats.contains(&OutputFormat::Csv) {
        for table in tables {
            write(dir.join(&table.filename), &table.content)?;
        }
    }
    log::info!("outputs written to {}", dir.display());
    Ok(())
}
