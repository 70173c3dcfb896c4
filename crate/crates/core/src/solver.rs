//! Ground-state and multi-solution solvers.
//!
//! Two complementary iterations are provided:
//!
//! * [`minimize_on_nehari`] — projected gradient descent on the natural
//!   constraint. Each step moves against the energy gradient, folds the
//!   iterate onto its dominant sign, and re-projects onto the constraint
//!   through the closed-form ray scale. The sign fold σ|w| can only lower
//!   the energy — edgewise (|a|−|b|)² ≤ (a−b)² while the mass and
//!   logarithmic terms are even — and it keeps the tail entries of
//!   localized ground states from dithering across zero at magnitudes far
//!   below floating-point visibility in the energy. Armijo backtracking
//!   guarantees a monotone energy trace.
//!
//! * [`newton_refine`] — damped Newton on the residual system (p = 2
//!   only). The linearization −Δ + diag(V − log u² − 2) is singular at
//!   zero entries, so entries below a floor are frozen out of the linear
//!   solve; after each accepted step the frozen entries are updated by
//!   solving their own scalar vertex equation with neighbours held
//!   fixed, swept to a fixed point, which keeps sub-floor tails of
//!   localized solutions converging instead of stalling at stale values.
//!   The composed pipeline additionally keeps the refinement on the
//!   descent phase's sign branch, because the residual test cannot
//!   distinguish tail signs at magnitudes far below its tolerance.
//!
//! Descent reaches the energy's floating-point floor at a gradient norm
//! around 1e−6…1e−7 of the energy scale; Newton then takes the residual
//! to ~1e−13. The composition is [`ground_state`]. Multiple critical
//! points come from [`find_multiple`]: Newton started from the low modes
//! of the linear operator −Δ + V and from seeded random fields, with
//! sign-aware deduplication of the converged solutions.

use crate::field::{Field, FieldError};
use crate::functional::{self, FunctionalError, Scheme};
use crate::graph::{GraphError, GraphTopology};
use crate::linalg;
use crate::potential::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute scale of the Newton stopping test: converged means
/// residual_sup ≤ 1e−10·(1 + ‖u‖_∞).
pub const NEWTON_SUP_TOL: f64 = 1e-10;

/// Two ground levels are called strictly ordered when they differ by more
/// than this.
pub const STRICT_LEVEL_GAP: f64 = 1e-8;

/// Relative distance below which two solutions count as the same (up to
/// global sign): min(‖u−v‖₂, ‖u+v‖₂) ≤ 1e−4·(‖u‖₂+‖v‖₂).
pub const DEDUP_REL: f64 = 1e-4;

const MAX_BACKTRACKS: usize = 64;
const MAX_DAMPINGS: usize = 40;
const DIVERGENCE_STREAK: usize = 5;

/// Errors from the solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid solver configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("initial field is identically zero")]
    ZeroInit,
    #[error("eigenvector index {index} out of range for {vertex_count} vertices")]
    EigenIndexOutOfRange { index: usize, vertex_count: usize },
    #[error("newton refinement requires exponent 2, got p = {p}")]
    NewtonRequiresP2 { p: f64 },
    #[error("singular linearization at iteration {iteration}")]
    SingularSystem { iteration: usize },
    #[error(
        "no converged ground state for potential '{side}' after {attempts} starts; \
         per-start results attached"
    )]
    GroundLevelUnconverged {
        side: char,
        attempts: usize,
        results: Vec<SolveResult>,
    },
}

/// Backtracking line-search parameters for the projected descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmijoParams {
    /// Sufficient-decrease constant c₁ ∈ (0, 1).
    pub sufficient_decrease: f64,
    /// Step shrink factor ∈ (0, 1).
    pub backtrack: f64,
    /// First trial step of every iteration.
    pub initial_step: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            sufficient_decrease: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
        }
    }
}

/// Damping and zero-protection parameters for Newton refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonParams {
    /// First trial fraction of the Newton step, ∈ (0, 1].
    pub damping: f64,
    /// Entries with |u(x)| below this floor are excluded from the
    /// logarithmic linearization and updated by their scalar vertex
    /// equation instead.
    pub zero_floor: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            damping: 1.0,
            zero_floor: 1e-8,
        }
    }
}

/// How to build the starting field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitKind {
    /// Seeded uniform entries in [0.1, 1).
    RandomPositive,
    /// Seeded uniform entries in [−1, 1).
    Random,
    /// Indicator of one vertex.
    DeltaAt { vertex: usize },
    /// k-th eigenvector of −Δ (ascending eigenvalues, k = 0 is the ground
    /// mode), sign-canonicalized.
    LaplacianEigenvector { index: usize },
    /// A caller-supplied field.
    Explicit { field: Field },
}

/// Solver configuration shared by the descent and Newton stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Descent stops when ‖∇J(u)‖₂ ≤ grad_tol·max(1, ‖u‖₂).
    pub grad_tol: f64,
    pub armijo: ArmijoParams,
    pub newton: NewtonParams,
    /// Seed for every random choice the solver makes.
    pub seed: u64,
    pub init: InitKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            grad_tol: 1e-6,
            armijo: ArmijoParams::default(),
            newton: NewtonParams::default(),
            seed: 0,
            init: InitKind::RandomPositive,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |reason: &str| {
            Err(SolverError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return fail("grad_tol must be a positive finite number");
        }
        let a = &self.armijo;
        if !(a.sufficient_decrease > 0.0 && a.sufficient_decrease < 1.0) {
            return fail("armijo sufficient_decrease must lie in (0, 1)");
        }
        if !(a.backtrack > 0.0 && a.backtrack < 1.0) {
            return fail("armijo backtrack must lie in (0, 1)");
        }
        if !a.initial_step.is_finite() || a.initial_step <= 0.0 {
            return fail("armijo initial_step must be positive and finite");
        }
        let n = &self.newton;
        if !(n.damping > 0.0 && n.damping <= 1.0) {
            return fail("newton damping must lie in (0, 1]");
        }
        if !n.zero_floor.is_finite() || n.zero_floor <= 0.0 {
            return fail("newton zero_floor must be positive and finite");
        }
        Ok(())
    }
}

/// Sign pattern of a field, using exact comparisons: a single exact zero
/// among nonzero entries already counts as sign-changing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Positive,
    Negative,
    SignChanging,
    Zero,
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
    /// ‖∇J‖₂ for descent, ‖residual‖₂ for Newton (the same quantity).
    pub gradient_norm: f64,
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub u: Field,
    pub energy: f64,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Natural-constraint defect ⟨∇J(u), u⟩.
    pub nehari_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The stopping bound actually demanded at exit: when `converged` is
    /// true the reported residual satisfies it.
    pub tolerance: f64,
    pub sign_class: SignClass,
    pub trace: Vec<TracePoint>,
}

/// Outcome of a two-potential ground-level comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub level_a: f64,
    pub level_b: f64,
    /// level_b − level_a.
    pub gap: f64,
    /// level_a < level_b − [`STRICT_LEVEL_GAP`].
    pub strict: bool,
}

/// Outcome of a multi-solution search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiResult {
    /// Distinct converged solutions, energies ascending. May be shorter
    /// than requested.
    pub solutions: Vec<SolveResult>,
    /// Number of solver starts spent.
    pub attempts: usize,
    pub requested: usize,
}

/// Classifies the sign pattern of a field by exact comparisons.
pub fn classify_sign(u: &Field) -> SignClass {
    let mut has_zero = false;
    let mut has_pos = false;
    let mut has_neg = false;
    for &v in u.values() {
        if v == 0.0 {
            has_zero = true;
        } else if v > 0.0 {
            has_pos = true;
        } else {
            has_neg = true;
        }
    }
    match (has_pos, has_neg) {
        (false, false) => SignClass::Zero,
        (true, true) => SignClass::SignChanging,
        (true, false) if !has_zero => SignClass::Positive,
        (false, true) if !has_zero => SignClass::Negative,
        _ => SignClass::SignChanging,
    }
}

/// Builds the starting field requested by a configuration.
pub fn make_init(graph: &GraphTopology, config: &SolverConfig) -> Result<Field, SolverError> {
    let n = graph.vertex_count();
    match &config.init {
        InitKind::RandomPositive => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Ok(Field::from_fn(n, |_| 0.1 + 0.9 * rng.gen::<f64>())?)
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Ok(Field::from_fn(n, |_| 2.0 * rng.gen::<f64>() - 1.0)?)
        }
        InitKind::DeltaAt { vertex } => Ok(Field::delta(n, *vertex)?),
        InitKind::LaplacianEigenvector { index } => {
            if *index >= n {
                return Err(SolverError::EigenIndexOutOfRange {
                    index: *index,
                    vertex_count: n,
                });
            }
            let (_, vectors) = linalg::symmetric_eigen_ascending(linalg::minus_laplacian_matrix(
                graph,
            ));
            Ok(Field::new(vectors[*index].clone())?)
        }
        InitKind::Explicit { field } => {
            if field.len() != n {
                return Err(FunctionalError::PotentialDimensionMismatch {
                    expected: n,
                    got: field.len(),
                }
                .into());
            }
            Ok(field.clone())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finalize(
    graph: &GraphTopology,
    pot: &Potential,
    u: Field,
    scheme: Scheme,
    iterations: usize,
    converged: bool,
    tolerance: f64,
    trace: Vec<TracePoint>,
) -> Result<SolveResult, SolverError> {
    let res = functional::residual(graph, pot, &u, scheme)?;
    let energy = functional::energy(graph, pot, &u, scheme)?;
    let nehari_residual = functional::nehari_residual(graph, pot, &u, scheme)?;
    let sign_class = classify_sign(&u);
    Ok(SolveResult {
        residual_sup: res.sup(),
        residual_l2: res.l2(),
        u,
        energy,
        nehari_residual,
        iterations,
        converged,
        tolerance,
        sign_class,
        trace,
    })
}

/// Projected gradient descent on the natural constraint.
///
/// Iterates u ← Π(σ|u − η∇J(u)|) where Π is the closed-form ray
/// projection, σ the dominant sign of the start, and η found by Armijo
/// backtracking on J — the energy trace is strictly decreasing. Stops when
/// ‖∇J(u)‖₂ ≤ grad_tol·max(1, ‖u‖₂) (converged), when the line search
/// cannot make visible progress (stalled, not converged), or at
/// max_iterations (not converged, no exception).
pub fn minimize_on_nehari(
    graph: &GraphTopology,
    pot: &Potential,
    scheme: Scheme,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let start = make_init(graph, config)?;
    if start.is_zero() {
        return Err(SolverError::ZeroInit);
    }
    // Dominant sign of the start: sign of its largest-magnitude entry
    // (first one on ties).
    let sigma = {
        let vals = start.values();
        let mut best = 0usize;
        for (i, &v) in vals.iter().enumerate() {
            if v.abs() > vals[best].abs() {
                best = i;
            }
        }
        vals[best].signum()
    };
    let fold = |w: &[f64]| -> Vec<f64> { w.iter().map(|&t| sigma * t.abs()).collect() };

    let folded = Field::new(fold(start.values()))?;
    let (mut u, _) = functional::nehari_project(graph, pot, &folded, scheme)?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut tolerance = config.grad_tol;
    for iter in 0..=config.max_iterations {
        let grad = functional::energy_gradient(graph, pot, &u, scheme)?;
        let gn = grad.l2();
        let j = functional::energy(graph, pot, &u, scheme)?;
        trace.push(TracePoint {
            iteration: iter,
            energy: j,
            gradient_norm: gn,
        });
        iterations = iter;
        tolerance = config.grad_tol * u.l2().max(1.0);
        if gn <= tolerance {
            converged = true;
            break;
        }
        if iter == config.max_iterations {
            break;
        }

        let mut step = config.armijo.initial_step;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let w: Vec<f64> = u
                .values()
                .iter()
                .zip(grad.values())
                .map(|(&ux, &gx)| ux - step * gx)
                .collect();
            let folded = fold(&w);
            if folded.iter().all(|&t| t == 0.0) {
                step *= config.armijo.backtrack;
                continue;
            }
            let candidate = Field::new(folded)?;
            match functional::nehari_project(graph, pot, &candidate, scheme) {
                Ok((projected, _)) => {
                    let jc = functional::energy(graph, pot, &projected, scheme)?;
                    if jc <= j - config.armijo.sufficient_decrease * step * gn * gn {
                        u = projected;
                        accepted = true;
                        break;
                    }
                }
                // A wild trial step can overflow the ray scale; shrink.
                Err(FunctionalError::ProjectionOverflow { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            step *= config.armijo.backtrack;
        }
        if !accepted {
            // Floating-point floor of the energy: no step passes the
            // sufficient-decrease test any more.
            break;
        }
    }
    finalize(
        graph, pot, u, scheme, iterations, converged, tolerance, trace,
    )
}

/// Solves the scalar vertex equation (A + V)s − s·log s² = nb for the
/// frozen tail entries, with A the ambient degree and nb the current
/// neighbour sum. In the sub-floor regime the fixed-point map
/// s ← nb/(A + V − log s²) is a strong contraction (denominator ≳ 35).
/// Returns a value capped at ±floor so oversized roots re-enter the free
/// set on the next iteration.
fn scalar_tail_solve(nb: f64, a_plus_v: f64, floor: f64) -> f64 {
    if nb == 0.0 {
        return 0.0;
    }
    let target = nb.abs();
    let mut m = floor.min(target);
    for _ in 0..100 {
        if m == 0.0 {
            return 0.0;
        }
        let denom = a_plus_v - 2.0 * m.ln();
        if denom <= 0.0 {
            return nb.signum() * floor;
        }
        let next = target / denom;
        if next > floor {
            return nb.signum() * floor;
        }
        if (next - m).abs() <= 1e-15 * m.abs() {
            m = next;
            break;
        }
        m = next;
    }
    nb.signum() * m
}

/// Damped Newton refinement of the residual system (p = 2 only; the
/// general scheme forced to exponent 2 is accepted and keeps reporting
/// through its own pipeline).
///
/// Entries with |u(x)| below the configured floor are frozen out of the
/// linearization for the step and updated afterwards from their scalar
/// vertex equation, swept to a fixed point so tail values propagate
/// outward from the free set; the freeze set is recomputed every
/// iteration. Convergence demands residual_sup ≤ 1e−10·(1 + ‖u‖_∞). Five
/// consecutive steps without residual decrease stop the iteration
/// unconverged; an exactly singular linearization is an error.
pub fn newton_refine(
    graph: &GraphTopology,
    pot: &Potential,
    u0: &Field,
    scheme: Scheme,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    newton_impl(graph, pot, u0, scheme, config, None)
}

/// Newton iteration, optionally constrained to a sign-definite branch.
///
/// With `fold_sign = Some(σ)` every iterate is folded onto |·| and the
/// result carries the global sign σ. The residual test alone cannot pin
/// the sign of entries far below its tolerance — a localized solution's
/// tail values sit at magnitudes where either sign passes — so the
/// ground-state pipeline, which already knows its branch from the
/// descent phase, keeps the fold active here as well. Folding is the
/// identity near a sign-definite solution's free entries and only
/// redirects sub-tolerance tail dithering, while a genuinely
/// sign-changing target would simply fail to converge under it.
fn newton_impl(
    graph: &GraphTopology,
    pot: &Potential,
    u0: &Field,
    scheme: Scheme,
    config: &SolverConfig,
    fold_sign: Option<f64>,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let p = scheme.exponent();
    if p != 2.0 {
        return Err(SolverError::NewtonRequiresP2 { p });
    }
    if u0.len() != graph.vertex_count() {
        return Err(FunctionalError::PotentialDimensionMismatch {
            expected: graph.vertex_count(),
            got: u0.len(),
        }
        .into());
    }
    let n = graph.vertex_count();
    let vs = pot.values();
    let floor = config.newton.zero_floor;

    let mut u: Vec<f64> = u0.values().to_vec();
    if fold_sign.is_some() {
        for t in &mut u {
            *t = t.abs();
        }
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut tolerance = NEWTON_SUP_TOL;
    let mut growth_streak = 0usize;

    let eval_residual = |vals: &[f64]| -> Result<Field, SolverError> {
        let field = Field::new(vals.to_vec())?;
        Ok(functional::residual(graph, pot, &field, scheme)?)
    };

    let mut res = eval_residual(&u)?;
    for iter in 0..=config.max_iterations {
        let rsup = res.sup();
        let rl2 = res.l2();
        let field_u = Field::new(u.clone())?;
        let j = functional::energy(graph, pot, &field_u, scheme)?;
        trace.push(TracePoint {
            iteration: iter,
            energy: j,
            gradient_norm: rl2,
        });
        iterations = iter;
        tolerance = NEWTON_SUP_TOL * (1.0 + field_u.sup());
        if rsup <= tolerance {
            converged = true;
            break;
        }
        if iter == config.max_iterations || growth_streak >= DIVERGENCE_STREAK {
            break;
        }

        let frozen: Vec<bool> = u.iter().map(|&t| t.abs() < floor).collect();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = vec![0.0; n];
        for x in 0..n {
            if frozen[x] {
                a[(x, x)] = 1.0;
                continue;
            }
            a[(x, x)] = graph.ambient_degree(x) as f64 + vs[x] - 2.0 * u[x].abs().ln() - 2.0;
            for &y in graph.neighbors(x) {
                if !frozen[y] {
                    a[(x, y)] = -1.0;
                }
            }
            rhs[x] = -res[x];
        }
        let delta = linalg::solve_dense(a, &rhs)
            .ok_or(SolverError::SingularSystem { iteration: iter })?;

        // Damped acceptance: first fraction of the Newton step that
        // reduces ‖residual‖₂; if none does, take the best trial and
        // count it towards the divergence streak.
        let mut alpha = config.newton.damping;
        let mut best: Option<(Vec<f64>, f64, Field)> = None;
        let mut accepted = false;
        for _ in 0..MAX_DAMPINGS {
            let mut trial: Vec<f64> = u
                .iter()
                .zip(&delta)
                .map(|(&ux, &dx)| ux + alpha * dx)
                .collect();
            if fold_sign.is_some() {
                for t in &mut trial {
                    *t = t.abs();
                }
            }
            if trial.iter().any(|t| !t.is_finite()) {
                alpha *= 0.5;
                continue;
            }
            let trial_res = eval_residual(&trial)?;
            let trial_norm = trial_res.l2();
            if best.as_ref().is_none_or(|(_, bn, _)| trial_norm < *bn) {
                best = Some((trial.clone(), trial_norm, trial_res));
            }
            if trial_norm < rl2 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        let Some((mut next, mut next_norm, mut next_res)) = best else {
            break;
        };

        // Frozen entries follow their scalar vertex equation with the
        // fresh neighbour values, swept repeatedly so consistent values
        // propagate one shell per pass from the free set into the tail.
        let mut relaxed_any = false;
        for _sweep in 0..n {
            let mut moved = false;
            for x in 0..n {
                if !frozen[x] {
                    continue;
                }
                let nb: f64 = graph.neighbors(x).iter().map(|&y| next[y]).sum::<f64>();
                if fold_sign.is_some() && nb == 0.0 {
                    // No neighbour information yet; a later sweep will
                    // reach this vertex from the free set.
                    continue;
                }
                let s = scalar_tail_solve(nb, graph.ambient_degree(x) as f64 + vs[x], floor);
                let s = if fold_sign.is_some() { s.abs() } else { s };
                if s != next[x] {
                    moved = moved || (s - next[x]).abs() > 1e-15 * s.abs().max(next[x].abs());
                    next[x] = s;
                    relaxed_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        if relaxed_any {
            next_res = eval_residual(&next)?;
            next_norm = next_res.l2();
        }

        if accepted || next_norm < rl2 {
            growth_streak = 0;
        } else {
            growth_streak += 1;
        }
        u = next;
        res = next_res;
    }

    if let Some(sign) = fold_sign {
        if sign < 0.0 {
            for t in &mut u {
                *t = -*t;
            }
        }
    }
    finalize(
        graph,
        pot,
        Field::new(u)?,
        scheme,
        iterations,
        converged,
        tolerance,
        trace,
    )
}

/// Ground-state pipeline: projected descent to the floating-point floor,
/// then Newton polishing when the exponent is 2. Traces are concatenated
/// with continuing iteration numbers.
pub fn ground_state(
    graph: &GraphTopology,
    pot: &Potential,
    scheme: Scheme,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let descent = minimize_on_nehari(graph, pot, scheme, config)?;
    if scheme.exponent() != 2.0 {
        return Ok(descent);
    }
    // The descent phase folds every iterate onto a single sign, so the
    // refinement is kept on that branch; this pins the sign of tail
    // entries whose magnitudes sit below the residual tolerance.
    let sigma = descent
        .u
        .values()
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .map_or(1.0, |t| if t < 0.0 { -1.0 } else { 1.0 });
    let offset = descent.iterations + 1;
    let mut refined = newton_impl(graph, pot, &descent.u, scheme, config, Some(sigma))?;
    let mut trace = descent.trace;
    for point in &refined.trace {
        trace.push(TracePoint {
            iteration: point.iteration + offset,
            energy: point.energy,
            gradient_norm: point.gradient_norm,
        });
    }
    refined.trace = trace;
    refined.iterations += offset;
    Ok(refined)
}

/// Finds up to `count` distinct critical points (p = 2): Newton started
/// from the low modes of −Δ + V, then from seeded random fields. Results
/// are deduplicated up to global sign and sorted by increasing energy;
/// fewer than `count` solutions is reported, not an error.
pub fn find_multiple(
    graph: &GraphTopology,
    pot: &Potential,
    scheme: Scheme,
    count: usize,
    config: &SolverConfig,
) -> Result<MultiResult, SolverError> {
    config.validate()?;
    if scheme.exponent() != 2.0 {
        return Err(SolverError::NewtonRequiresP2 {
            p: scheme.exponent(),
        });
    }
    if count == 0 {
        return Err(SolverError::InvalidConfig {
            reason: "requested solution count must be at least 1".to_string(),
        });
    }
    let n = graph.vertex_count();
    let mode_count = n.min(2 * count + 4);
    let (_, modes) =
        linalg::symmetric_eigen_ascending(linalg::schrodinger_matrix(graph, pot.values()));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let random_budget = 2 * count + 8;
    let mut inits: Vec<Field> = Vec::with_capacity(mode_count + random_budget);
    for mode in modes.into_iter().take(mode_count) {
        inits.push(Field::new(mode)?);
    }
    for _ in 0..random_budget {
        inits.push(Field::from_fn(n, |_| 2.0 * rng.gen::<f64>() - 1.0)?);
    }

    let mut accepted: Vec<SolveResult> = Vec::new();
    let mut attempts = 0usize;
    for (idx, init) in inits.iter().enumerate() {
        let structured = idx < mode_count;
        if !structured && accepted.len() >= count {
            break;
        }
        attempts += 1;
        if init.is_zero() {
            continue;
        }
        let projected = match functional::nehari_project(graph, pot, init, scheme) {
            Ok((f, _)) => f,
            Err(FunctionalError::ProjectionOverflow { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let result = match newton_refine(graph, pot, &projected, scheme, config) {
            Ok(r) => r,
            Err(SolverError::SingularSystem { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !result.converged {
            continue;
        }
        let is_duplicate = accepted.iter().any(|s| {
            let du: f64 = result
                .u
                .values()
                .iter()
                .zip(s.u.values())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let dv: f64 = result
                .u
                .values()
                .iter()
                .zip(s.u.values())
                .map(|(&a, &b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
            du.min(dv) <= DEDUP_REL * (result.u.l2() + s.u.l2())
        });
        if !is_duplicate {
            accepted.push(result);
        }
    }

    accepted.sort_by(|a, b| {
        (a.energy, a.u.l2())
            .partial_cmp(&(b.energy, b.u.l2()))
            .expect("energies are finite")
    });
    accepted.truncate(count);
    Ok(MultiResult {
        solutions: accepted,
        attempts,
        requested: count,
    })
}

/// Compares the ground levels of two potentials on the same graph.
///
/// Runs `starts` seeded ground-state solves per potential (seeds
/// config.seed, config.seed+1, …, positive random starts), takes the best
/// converged level on each side, and reports whether side a sits strictly
/// below side b by more than [`STRICT_LEVEL_GAP`]. If a side produces no
/// converged run at all, the error carries every per-start result with
/// its trace.
pub fn compare_ground_levels(
    graph: &GraphTopology,
    pot_a: &Potential,
    pot_b: &Potential,
    scheme: Scheme,
    config: &SolverConfig,
    starts: usize,
) -> Result<LevelComparison, SolverError> {
    config.validate()?;
    if starts == 0 {
        return Err(SolverError::InvalidConfig {
            reason: "level comparison needs at least one start".to_string(),
        });
    }
    let mut levels = [f64::INFINITY; 2];
    for (slot, (side, pot)) in [('a', pot_a), ('b', pot_b)].into_iter().enumerate() {
        let mut results = Vec::with_capacity(starts);
        let mut best = f64::INFINITY;
        for i in 0..starts {
            let run_config = SolverConfig {
                seed: config.seed.wrapping_add(i as u64),
                init: InitKind::RandomPositive,
                ..config.clone()
            };
            let result = ground_state(graph, pot, scheme, &run_config)?;
            if result.converged {
                best = best.min(result.energy);
            }
            results.push(result);
        }
        if !best.is_finite() {
            return Err(SolverError::GroundLevelUnconverged {
                side,
                attempts: starts,
                results,
            });
        }
        levels[slot] = best;
    }
    Ok(LevelComparison {
        level_a: levels[0],
        level_b: levels[1],
        gap: levels[1] - levels[0],
        strict: levels[0] < levels[1] - STRICT_LEVEL_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_general_graph, build_lattice, BoundaryKind, LatticeSpec};
    use crate::potential::{make_potential, PotentialSpec};

    fn ring(len: usize) -> GraphTopology {
        build_lattice(&LatticeSpec {
            dimension: 1,
            sides: vec![len],
            boundary: BoundaryKind::Torus,
        })
        .unwrap()
    }

    fn boxed(len: usize) -> GraphTopology {
        build_lattice(&LatticeSpec {
            dimension: 1,
            sides: vec![len],
            boundary: BoundaryKind::Dirichlet,
        })
        .unwrap()
    }

    fn constant_pot(g: &GraphTopology, c: f64) -> Potential {
        make_potential(
            g,
            &PotentialSpec::Explicit {
                values: vec![c; g.vertex_count()],
            },
        )
        .unwrap()
    }

    #[test]
    fn sign_classification_uses_exact_zeros() {
        assert_eq!(classify_sign(&Field::zeros(3)), SignClass::Zero);
        assert_eq!(
            classify_sign(&Field::new(vec![1.0, 2.0, 0.5]).unwrap()),
            SignClass::Positive
        );
        assert_eq!(
            classify_sign(&Field::new(vec![-1.0, -2.0]).unwrap()),
            SignClass::Negative
        );
        assert_eq!(
            classify_sign(&Field::new(vec![1.0, -1.0]).unwrap()),
            SignClass::SignChanging
        );
        // One exact zero among nonzero entries is already sign-changing.
        assert_eq!(
            classify_sign(&Field::new(vec![1.0, 0.0, 2.0]).unwrap()),
            SignClass::SignChanging
        );
    }

    #[test]
    fn config_validation_rejects_out_of_range() {
        let mut config = SolverConfig::default();
        config.armijo.backtrack = 1.0;
        assert!(matches!(
            config.validate(),
            Err(SolverError::InvalidConfig { .. })
        ));
        let config = SolverConfig {
            grad_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(config.validate().is_err());
        let mut config = SolverConfig::default();
        config.newton.damping = 1.5;
        assert!(config.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_init_is_rejected() {
        let g = ring(4);
        let pot = constant_pot(&g, 0.0);
        let config = SolverConfig {
            init: InitKind::Explicit {
                field: Field::zeros(4),
            },
            ..SolverConfig::default()
        };
        assert!(matches!(
            minimize_on_nehari(&g, &pot, Scheme::Quadratic, &config),
            Err(SolverError::ZeroInit)
        ));
    }

    #[test]
    fn descent_finds_the_localized_state_on_a_flat_ring() {
        // V ≡ 0 on a ring: the constant field u ≡ 1 is a critical point
        // with J = L/2, but a saddle on the constraint — the linearization
        // −Δ − 2 is negative along the slowest nonconstant ring modes. The
        // minimizer is a localized one-peak profile strictly below L/2.
        let g = ring(5);
        let pot = constant_pot(&g, 0.0);
        let config = SolverConfig {
            seed: 7,
            ..SolverConfig::default()
        };
        let result = minimize_on_nehari(&g, &pot, Scheme::Quadratic, &config).unwrap();
        assert!(result.converged);
        assert_eq!(result.sign_class, SignClass::Positive);
        // Energy equals (1/p)‖u‖_p^p on the constraint.
        let mass: f64 = result.u.values().iter().map(|&t| t * t).sum();
        assert!((result.energy - mass / 2.0).abs() <= 1e-7 * (1.0 + mass));
        // Strictly below the constant candidate's level 5/2.
        assert!(result.energy < 2.5 - 0.2, "J = {}", result.energy);
        // One dominant peak.
        let peak = result.u.values().iter().fold(0.0f64, |a, &v| a.max(v));
        assert!(peak > 1.5, "peak = {peak}");
        // Energy trace is monotone until convergence.
        for pair in result.trace.windows(2) {
            assert!(pair[1].energy <= pair[0].energy);
        }
        // The level is independent of the start (translation copies only).
        let other = minimize_on_nehari(
            &g,
            &pot,
            Scheme::Quadratic,
            &SolverConfig {
                seed: 2,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!(other.converged);
        assert!((other.energy - result.energy).abs() < 1e-9);
    }

    #[test]
    fn newton_polishes_to_machine_residual() {
        let g = ring(12);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 0.5],
            },
        )
        .unwrap();
        let config = SolverConfig {
            seed: 3,
            ..SolverConfig::default()
        };
        let coarse = minimize_on_nehari(&g, &pot, Scheme::Quadratic, &config).unwrap();
        assert!(coarse.converged);
        let refined = newton_refine(&g, &pot, &coarse.u, Scheme::Quadratic, &config).unwrap();
        assert!(refined.converged);
        assert!(
            refined.residual_sup <= coarse.residual_sup * 1e-4,
            "newton gained {} → {}",
            coarse.residual_sup,
            refined.residual_sup
        );
        assert!(refined.residual_sup <= 1e-10 * (1.0 + refined.u.sup()));
    }

    #[test]
    fn newton_on_single_free_vertex_finds_sqrt_e() {
        // One isolated vertex with V ≡ 1: the equation u = u·log u² has
        // the nonzero root u = e^{1/2}.
        let g = build_general_graph(1, &[]).unwrap();
        let pot = constant_pot(&g, 1.0);
        let u0 = Field::new(vec![1.2]).unwrap();
        let result = newton_refine(&g, &pot, &u0, Scheme::Quadratic, &SolverConfig::default())
            .unwrap();
        assert!(result.converged);
        // The stopping rule bounds the residual by ~2.6e−10; the equation's
        // slope at the root is −2, so the root error is half that.
        assert!((result.u[0] - 0.5f64.exp()).abs() < 2e-10, "{}", result.u[0]);
    }

    #[test]
    fn newton_reports_singular_linearization() {
        // V = 2 at an isolated vertex makes the linearization
        // V − log u² − 2 vanish exactly at u = 1.
        let g = build_general_graph(1, &[]).unwrap();
        let pot = constant_pot(&g, 2.0);
        let u0 = Field::new(vec![1.0]).unwrap();
        let err = newton_refine(&g, &pot, &u0, Scheme::Quadratic, &SolverConfig::default())
            .unwrap_err();
        assert!(matches!(err, SolverError::SingularSystem { .. }));
    }

    #[test]
    fn newton_requires_exponent_two() {
        let g = ring(4);
        let pot = constant_pot(&g, 0.0);
        let u0 = Field::constant(4, 1.0).unwrap();
        assert!(matches!(
            newton_refine(&g, &pot, &u0, Scheme::PowerP(3.0), &SolverConfig::default()),
            Err(SolverError::NewtonRequiresP2 { .. })
        ));
        // The general pipeline forced to exponent 2 is accepted.
        let r = newton_refine(&g, &pot, &u0, Scheme::PowerP(2.0), &SolverConfig::default());
        assert!(r.is_ok());
    }

    #[test]
    fn ground_state_handles_coercive_box() {
        let g = boxed(15);
        let pot = make_potential(
            &g,
            &PotentialSpec::Coercive {
                center: 7,
                exponent: 2.0,
                scale: 1.0,
                offset: 0.0,
            },
        )
        .unwrap();
        let config = SolverConfig {
            seed: 11,
            ..SolverConfig::default()
        };
        let result = ground_state(&g, &pot, Scheme::Quadratic, &config).unwrap();
        assert!(result.converged);
        assert_eq!(result.sign_class, SignClass::Positive);
        assert!(result.residual_sup < 1e-8);
        // Localized around the centre.
        let umax = result.u.sup();
        assert!(result.u[7].abs() > 0.5 * umax);
        assert!(result.u[0].abs() < 1e-6 * umax);
    }

    #[test]
    fn find_multiple_collects_distinct_states() {
        let g = boxed(15);
        let pot = make_potential(
            &g,
            &PotentialSpec::Coercive {
                center: 7,
                exponent: 2.0,
                scale: 1.0,
                offset: 0.0,
            },
        )
        .unwrap();
        let config = SolverConfig {
            seed: 5,
            ..SolverConfig::default()
        };
        let multi = find_multiple(&g, &pot, Scheme::Quadratic, 3, &config).unwrap();
        assert!(multi.solutions.len() >= 2, "got {}", multi.solutions.len());
        for s in &multi.solutions {
            assert!(s.converged);
            assert!(s.residual_sup <= 1e-9 * (1.0 + s.u.sup()));
        }
        for pair in multi.solutions.windows(2) {
            assert!(pair[0].energy <= pair[1].energy);
        }
        // The lowest state is the sign-constant ground state.
        let ground = &multi.solutions[0];
        assert!(matches!(
            ground.sign_class,
            SignClass::Positive | SignClass::Negative
        ));
    }

    #[test]
    fn compare_detects_a_lowered_well() {
        let g = ring(16);
        let tile = vec![0.0, 0.5];
        let periodic = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: tile.clone(),
            },
        )
        .unwrap();
        let mut decay = vec![0.0; 16];
        decay[4] = 0.3;
        decay[5] = 0.2;
        let lowered = make_potential(
            &g,
            &PotentialSpec::AsymptoticallyPeriodic {
                period: 2,
                tile,
                decay,
            },
        )
        .unwrap();
        let config = SolverConfig {
            seed: 1,
            ..SolverConfig::default()
        };
        let cmp =
            compare_ground_levels(&g, &lowered, &periodic, Scheme::Quadratic, &config, 3).unwrap();
        assert!(cmp.strict, "gap = {}", cmp.gap);
        assert!(cmp.gap > 1e-6);
        // Control: identical potentials are not strictly ordered.
        let cmp_eq =
            compare_ground_levels(&g, &periodic, &periodic, Scheme::Quadratic, &config, 3)
                .unwrap();
        assert!(!cmp_eq.strict);
        assert!(cmp_eq.gap.abs() <= 1e-6);
    }

    #[test]
    fn eigenvector_init_bounds_are_checked() {
        let g = ring(4);
        let config = SolverConfig {
            init: InitKind::LaplacianEigenvector { index: 4 },
            ..SolverConfig::default()
        };
        assert!(matches!(
            make_init(&g, &config),
            Err(SolverError::EigenIndexOutOfRange { .. })
        ));
    }
}
