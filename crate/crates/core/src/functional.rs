//! The logarithmic energy functional, its gradient, and the natural
//! constraint (Nehari) algebra.
//!
//! For p > 1 the energy of a field u under a potential V is
//!
//! ```text
//!     J(u) = (1/p)·Σ_x (|∇u|_p^p + (V+1)|u|^p) − (1/p)·Σ_x |u|^p log|u|^p,
//! ```
//!
//! with 0·log 0 := 0. Its gradient is the residual of the Euler–Lagrange
//! equation,
//!
//! ```text
//!     ∇J(u)(x) = −Δ_p u + V|u|^{p−2}u − |u|^{p−2}u·log|u|^p
//! ```
//!
//! (the +1 mass term cancels against the derivative of the logarithmic
//! term), so critical points of J are exactly the solutions.
//!
//! Two evaluation pipelines are provided behind [`Scheme`]: a specialized
//! quadratic path for p = 2 built on the linear Laplacian stencil, and a
//! general path built on p-power arithmetic. At p = 2 the general path must
//! reproduce the quadratic one to floating-point accuracy; keeping both is
//! a deliberate cross-check, so neither path is allowed to dispatch into
//! the other.
//!
//! Scaling along rays is governed by the identity
//!
//! ```text
//!     J(s·u) = s^p·J(u) − s^p·log s·‖u‖_p^p,
//! ```
//!
//! which yields a closed-form projection onto the natural constraint
//! {⟨J′(u), u⟩ = 0}: the unique maximizer of s ↦ J(su) sits at
//! log t = J(u)/‖u‖_p^p − 1/p. On the constraint, pJ(u) − ⟨J′(u),u⟩ =
//! ‖u‖_p^p collapses to J(u) = (1/p)‖u‖_p^p.
//!
//! The module also implements the superposition splitting of the
//! logarithmic primitive: write F(s) = (1/p)|s|^p log|s|^p = F₂(s) − F₁(s)
//! with a crossover scale δ. F₁ is convex for δ up to [`delta_max`], even,
//! nonnegative; F₂ vanishes identically on [−δ, δ] and is convex and
//! nonnegative beyond it. The energy then splits as J = Φ + Ψ with a
//! smooth part Φ and a convex penalty Ψ = Σ F₁(u).

use crate::field::{Field, FieldError};
use crate::graph::GraphTopology;
use crate::ops::{self, OpsError};
use crate::potential::Potential;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from energy and constraint computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("potential has {got} values but the graph has {expected} vertices")]
    PotentialDimensionMismatch { expected: usize, got: usize },
    #[error("exponent p = {p} must be a finite real > 1")]
    InvalidExponent { p: f64 },
    #[error("the zero field has no projection onto the natural constraint")]
    ZeroField,
    #[error("projection scale exp({log_scale}) overflows")]
    ProjectionOverflow { log_scale: f64 },
    #[error("crossover delta = {delta} outside (0, {max}] for p = {p}")]
    InvalidDelta { delta: f64, max: f64, p: f64 },
    #[error("growth-constant scan needs p' > p and at least 2 samples")]
    InvalidGrowthScan,
}

/// Which arithmetic pipeline evaluates the functional.
///
/// `Quadratic` is the specialized p = 2 path (linear Laplacian stencil,
/// squared differences, log u²). `PowerP(p)` is the general path for any
/// p > 1; `PowerP(2.0)` is legal and deliberately re-derives the quadratic
/// results through p-power arithmetic for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    Quadratic,
    PowerP(f64),
}

impl Scheme {
    /// The natural pipeline for exponent `p`: the specialized quadratic
    /// path at p = 2, the general path otherwise.
    pub fn for_exponent(p: f64) -> Result<Self, FunctionalError> {
        validate_p(p)?;
        if p == 2.0 {
            Ok(Scheme::Quadratic)
        } else {
            Ok(Scheme::PowerP(p))
        }
    }

    /// Forces the general p-power pipeline, even at p = 2.
    pub fn general(p: f64) -> Result<Self, FunctionalError> {
        validate_p(p)?;
        Ok(Scheme::PowerP(p))
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Scheme::Quadratic => 2.0,
            Scheme::PowerP(p) => *p,
        }
    }
}

fn validate_p(p: f64) -> Result<(), FunctionalError> {
    if !p.is_finite() || p <= 1.0 {
        return Err(FunctionalError::InvalidExponent { p });
    }
    Ok(())
}

fn check_inputs(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
) -> Result<(), FunctionalError> {
    if pot.len() != graph.vertex_count() {
        return Err(FunctionalError::PotentialDimensionMismatch {
            expected: graph.vertex_count(),
            got: pot.len(),
        });
    }
    ops::check_dims(graph, u)?;
    Ok(())
}

/// |t|^p through general power arithmetic (no p = 2 fast path): this is the
/// general pipeline's own primitive.
fn gen_pow(t: f64, p: f64) -> f64 {
    t.abs().powf(p)
}

/// |t|^{p−2}·t with 0 ↦ 0, general power arithmetic.
fn gen_phi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// The energy J(u).
pub fn energy(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<f64, FunctionalError> {
    check_inputs(graph, pot, u)?;
    let vals = u.values();
    let vs = pot.values();
    match scheme {
        Scheme::Quadratic => {
            let mut grad = 0.0;
            let mut mass = 0.0;
            let mut entropy = 0.0;
            for x in 0..graph.vertex_count() {
                let ux = vals[x];
                let mut gx = 0.0;
                for &y in graph.neighbors(x) {
                    let d = vals[y] - ux;
                    gx += d * d;
                }
                grad += 0.5 * gx + graph.phantom_degree(x) as f64 * ux * ux;
                mass += (vs[x] + 1.0) * ux * ux;
                if ux != 0.0 {
                    // u² log u² written as u²·2 log|u| to survive underflow
                    // of u² for very small entries.
                    entropy += ux * ux * (2.0 * ux.abs().ln());
                }
            }
            Ok(0.5 * (grad + mass - entropy))
        }
        Scheme::PowerP(p) => {
            let mut grad = 0.0;
            let mut mass = 0.0;
            let mut entropy = 0.0;
            for x in 0..graph.vertex_count() {
                let ux = vals[x];
                let mut gx = 0.0;
                for &y in graph.neighbors(x) {
                    gx += gen_pow(vals[y] - ux, p);
                }
                grad += 0.5 * gx + graph.phantom_degree(x) as f64 * gen_pow(ux, p);
                mass += (vs[x] + 1.0) * gen_pow(ux, p);
                if ux != 0.0 {
                    entropy += gen_pow(ux, p) * (p * ux.abs().ln());
                }
            }
            Ok((grad + mass - entropy) / p)
        }
    }
}

/// The energy gradient ∇J(u), assembled term by term from the energy sum
/// (edge differences, weighted mass, logarithmic term). This is a distinct
/// code path from [`residual`], which goes through the operator stencils;
/// the two must agree to rounding.
pub fn energy_gradient(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<Field, FunctionalError> {
    check_inputs(graph, pot, u)?;
    let vals = u.values();
    let vs = pot.values();
    let n = graph.vertex_count();
    let mut out = Vec::with_capacity(n);
    match scheme {
        Scheme::Quadratic => {
            for x in 0..n {
                let ux = vals[x];
                let mut acc = 0.0;
                for &y in graph.neighbors(x) {
                    acc += ux - vals[y];
                }
                acc += graph.phantom_degree(x) as f64 * ux;
                acc += (vs[x] + 1.0) * ux;
                if ux != 0.0 {
                    // d/du (1/2)u² log u² = u·log u² + u.
                    acc -= ux * (2.0 * ux.abs().ln()) + ux;
                }
                out.push(acc);
            }
        }
        Scheme::PowerP(p) => {
            for x in 0..n {
                let ux = vals[x];
                let mut acc = 0.0;
                for &y in graph.neighbors(x) {
                    acc += gen_phi(ux - vals[y], p);
                }
                acc += graph.phantom_degree(x) as f64 * gen_phi(ux, p);
                acc += (vs[x] + 1.0) * gen_phi(ux, p);
                if ux != 0.0 {
                    // d/du (1/p)|u|^p log|u|^p = |u|^{p−2}u·(log|u|^p + 1).
                    acc -= gen_phi(ux, p) * (p * ux.abs().ln() + 1.0);
                }
                out.push(acc);
            }
        }
    }
    Ok(Field::new(out)?)
}

/// The equation residual −Δ_p u + V|u|^{p−2}u − |u|^{p−2}u·log|u|^p,
/// evaluated through the operator stencils of [`crate::ops`].
pub fn residual(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<Field, FunctionalError> {
    check_inputs(graph, pot, u)?;
    let vals = u.values();
    let vs = pot.values();
    let n = graph.vertex_count();
    let mut out;
    match scheme {
        Scheme::Quadratic => {
            let lap = ops::apply_laplacian(graph, u)?;
            out = Vec::with_capacity(n);
            for x in 0..n {
                let ux = vals[x];
                let log_term = if ux == 0.0 {
                    0.0
                } else {
                    ux * (2.0 * ux.abs().ln())
                };
                out.push(-lap[x] + vs[x] * ux - log_term);
            }
        }
        Scheme::PowerP(p) => {
            let lap = ops::apply_p_laplacian(graph, u, p)?;
            out = Vec::with_capacity(n);
            for x in 0..n {
                let ux = vals[x];
                let log_term = if ux == 0.0 {
                    0.0
                } else {
                    gen_phi(ux, p) * (p * ux.abs().ln())
                };
                out.push(-lap[x] + vs[x] * gen_phi(ux, p) - log_term);
            }
        }
    }
    Ok(Field::new(out)?)
}

/// Σ|u|^p through the scheme's own arithmetic.
pub fn mass_p(u: &Field, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Quadratic => u.values().iter().map(|&t| t * t).sum(),
        Scheme::PowerP(p) => u.values().iter().map(|&t| gen_pow(t, p)).sum(),
    }
}

/// The natural-constraint defect ⟨∇J(u), u⟩ = Σ_x ∇J(u)(x)·u(x).
pub fn nehari_residual(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<f64, FunctionalError> {
    let grad = energy_gradient(graph, pot, u, scheme)?;
    Ok(grad
        .values()
        .iter()
        .zip(u.values())
        .map(|(&g, &t)| g * t)
        .sum())
}

/// The closed-form ray scale t with t·u on the natural constraint:
/// log t = J(u)/‖u‖_p^p − 1/p. Errors on the zero field.
pub fn nehari_scale(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<f64, FunctionalError> {
    check_inputs(graph, pot, u)?;
    if u.is_zero() {
        return Err(FunctionalError::ZeroField);
    }
    let j = energy(graph, pot, u, scheme)?;
    let mass = mass_p(u, scheme);
    let log_scale = j / mass - 1.0 / scheme.exponent();
    let t = log_scale.exp();
    if !t.is_finite() || t <= 0.0 {
        return Err(FunctionalError::ProjectionOverflow { log_scale });
    }
    Ok(t)
}

/// Outcome of a projection onto the natural constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NehariReport {
    /// The ray scale applied.
    pub t: f64,
    /// ⟨∇J(u), u⟩ before projection.
    pub residual_before: f64,
    /// ⟨∇J(tu), tu⟩ after projection (zero up to rounding).
    pub residual_after: f64,
    /// J(tu); equals (1/p)‖tu‖_p^p up to rounding.
    pub energy_after: f64,
}

/// Projects a nonzero field onto the natural constraint along its ray.
pub fn nehari_project(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    scheme: Scheme,
) -> Result<(Field, NehariReport), FunctionalError> {
    let residual_before = nehari_residual(graph, pot, u, scheme)?;
    let t = nehari_scale(graph, pot, u, scheme)?;
    let projected = u.scaled(t)?;
    let residual_after = nehari_residual(graph, pot, &projected, scheme)?;
    let energy_after = energy(graph, pot, &projected, scheme)?;
    Ok((
        projected,
        NehariReport {
            t,
            residual_before,
            residual_after,
            energy_after,
        },
    ))
}

/// Largest crossover scale δ for which both branches of F₁ stay convex:
/// δ_max(p) = exp(−(2p−1)/(p(p−1))); e^{−3/2} at p = 2.
pub fn delta_max(p: f64) -> f64 {
    (-(2.0 * p - 1.0) / (p * (p - 1.0))).exp()
}

/// Values of the splitting F = F₂ − F₁ of the logarithmic primitive and
/// their derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitValues {
    pub f1: f64,
    pub f2: f64,
    pub df1: f64,
    pub df2: f64,
}

/// Evaluates the splitting of F(s) = (1/p)|s|^p log|s|^p at `s`.
///
/// Inside the crossover, |s| ≤ δ:
///
/// ```text
///     F₁(s) = −(1/p)|s|^p log|s|^p,    F₂(s) = 0,
/// ```
///
/// and beyond it the logarithm in F₁ is frozen at the crossover in a
/// C¹-matched, convexity-preserving way:
///
/// ```text
///     F₁(s) = −(1/p)|s|^p (log δ^p + a_p) + b_p δ^{p−1}|s| + c_p δ^p,
/// ```
///
/// with a_p = (2p−1)/(p−1), b_p = p/(p−1), c_p = −(p−1)/p (3, 2, −1/2 at
/// p = 2), and F₂ = F + F₁. Requires 0 < δ ≤ [`delta_max`]`(p)` (with a
/// 1e−12 relative slack for round-tripped constants): that bound is
/// exactly where both branches of F₁ stay convex, and where F₂ comes out
/// nonnegative, nondecreasing in |s|, and C¹ across the crossover.
pub fn f_split(s: f64, delta: f64, p: f64) -> Result<SplitValues, FunctionalError> {
    validate_p(p)?;
    let max = delta_max(p);
    if !delta.is_finite() || delta <= 0.0 || delta > max * (1.0 + 1e-12) {
        return Err(FunctionalError::InvalidDelta { delta, max, p });
    }
    if s == 0.0 {
        return Ok(SplitValues {
            f1: 0.0,
            f2: 0.0,
            df1: 0.0,
            df2: 0.0,
        });
    }
    let a = s.abs();
    let sign = s.signum();
    if a < delta {
        // F₁ = −(1/p)|s|^p·log|s|^p = −|s|^p·log|s|.
        let f1 = -gen_pow(s, p) * a.ln();
        let df1 = -gen_phi(s, p) * (p * a.ln() + 1.0);
        Ok(SplitValues {
            f1,
            f2: 0.0,
            df1,
            df2: 0.0,
        })
    } else {
        let ap = (2.0 * p - 1.0) / (p - 1.0);
        let bp = p / (p - 1.0);
        let cp = -(p - 1.0) / p;
        let lgd = p * delta.ln();
        let dpm1 = delta.powf(p - 1.0);
        let f1 = -(gen_pow(s, p) / p) * (lgd + ap) + bp * dpm1 * a + cp * delta.powf(p);
        let df1 = -gen_phi(s, p) * (lgd + ap) + sign * bp * dpm1;
        let f = gen_pow(s, p) * a.ln(); // (1/p)|s|^p log|s|^p
        let df = gen_phi(s, p) * (p * a.ln() + 1.0);
        Ok(SplitValues {
            f1,
            f2: f + f1,
            df1,
            df2: df + df1,
        })
    }
}

/// The energy decomposed as J = Φ + Ψ through the splitting at scale δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySplit {
    /// Φ(u) = (1/p)Σ(|∇u|_p^p + (V+1)|u|^p) − ΣF₂(u).
    pub phi: f64,
    /// Ψ(u) = ΣF₁(u) ≥ 0.
    pub psi: f64,
    /// J(u), evaluated independently through [`energy`].
    pub total: f64,
    /// Crossover scale used.
    pub delta: f64,
}

/// Splits the energy as J = Φ + Ψ at crossover δ.
pub fn energy_split(
    graph: &GraphTopology,
    pot: &Potential,
    u: &Field,
    delta: f64,
    scheme: Scheme,
) -> Result<EnergySplit, FunctionalError> {
    check_inputs(graph, pot, u)?;
    let p = scheme.exponent();
    let vals = u.values();
    let vs = pot.values();
    let mut quad = 0.0;
    let mut f1_sum = 0.0;
    let mut f2_sum = 0.0;
    for x in 0..graph.vertex_count() {
        let ux = vals[x];
        let mut gx = 0.0;
        match scheme {
            Scheme::Quadratic => {
                for &y in graph.neighbors(x) {
                    let d = vals[y] - ux;
                    gx += d * d;
                }
                gx = 0.5 * gx + graph.phantom_degree(x) as f64 * ux * ux;
                quad += gx + (vs[x] + 1.0) * ux * ux;
            }
            Scheme::PowerP(pp) => {
                for &y in graph.neighbors(x) {
                    gx += gen_pow(vals[y] - ux, pp);
                }
                gx = 0.5 * gx + graph.phantom_degree(x) as f64 * gen_pow(ux, pp);
                quad += gx + (vs[x] + 1.0) * gen_pow(ux, pp);
            }
        }
        let split = f_split(ux, delta, p)?;
        f1_sum += split.f1;
        f2_sum += split.f2;
    }
    let phi = quad / p - f2_sum;
    let psi = f1_sum;
    let total = energy(graph, pot, u, scheme)?;
    Ok(EnergySplit {
        phi,
        psi,
        total,
        delta,
    })
}

/// Samples the growth constant C = sup_s |F₂′(s)| / |s|^{p′−1} over a
/// uniform grid on [−range, range]. Finite for any p′ > p because F₂′
/// grows like |s|^{p−1}log|s|; used to certify the subcritical growth of
/// the smooth part of the splitting.
pub fn f2_growth_constant(
    delta: f64,
    p: f64,
    p_prime: f64,
    range: f64,
    samples: usize,
) -> Result<f64, FunctionalError> {
    validate_p(p)?;
    if p_prime.is_nan() || p_prime <= p || samples < 2 || !range.is_finite() || range <= 0.0 {
        return Err(FunctionalError::InvalidGrowthScan);
    }
    let mut sup = 0.0f64;
    for i in 0..samples {
        let s = -range + 2.0 * range * i as f64 / (samples - 1) as f64;
        if s == 0.0 {
            continue;
        }
        let split = f_split(s, delta, p)?;
        let ratio = split.df2.abs() / s.abs().powf(p_prime - 1.0);
        sup = sup.max(ratio);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice, BoundaryKind, LatticeSpec};
    use crate::potential::{make_potential, PotentialSpec};

    fn torus(sides: &[usize]) -> GraphTopology {
        build_lattice(&LatticeSpec {
            dimension: sides.len(),
            sides: sides.to_vec(),
            boundary: BoundaryKind::Torus,
        })
        .unwrap()
    }

    fn boxed(sides: &[usize]) -> GraphTopology {
        build_lattice(&LatticeSpec {
            dimension: sides.len(),
            sides: sides.to_vec(),
            boundary: BoundaryKind::Dirichlet,
        })
        .unwrap()
    }

    fn zero_pot(g: &GraphTopology) -> Potential {
        make_potential(
            g,
            &PotentialSpec::Explicit {
                values: vec![0.0; g.vertex_count()],
            },
        )
        .unwrap()
    }

    fn wobble(n: usize, seed: u64) -> Field {
        Field::from_fn(n, |i| {
            let t = ((i as u64 + seed).wrapping_mul(2862933555777941757)) >> 12;
            0.15 + (t % 10000) as f64 / 7000.0
        })
        .unwrap()
    }

    fn mixed(n: usize, seed: u64) -> Field {
        Field::from_fn(n, |i| {
            let t = ((i as u64 + seed).wrapping_mul(6364136223846793005)) >> 12;
            (t % 10000) as f64 / 5000.0 - 1.0
        })
        .unwrap()
    }

    #[test]
    fn delta_energy_is_half_of_2n_plus_1() {
        for (sides, n) in [(vec![5], 1usize), (vec![4, 4], 2), (vec![3, 3, 3], 3)] {
            let g = torus(&sides);
            let pot = zero_pot(&g);
            let d = Field::delta(g.vertex_count(), 0).unwrap();
            let j = energy(&g, &pot, &d, Scheme::Quadratic).unwrap();
            let expected = (2 * n + 1) as f64 / 2.0;
            assert!((j - expected).abs() < 1e-14, "N = {n}: {j} vs {expected}");
        }
    }

    #[test]
    fn delta_projects_at_scale_e_to_the_n() {
        for (sides, n) in [(vec![7], 1usize), (vec![5, 5], 2)] {
            let g = torus(&sides);
            let pot = zero_pot(&g);
            let d = Field::delta(g.vertex_count(), 1).unwrap();
            let t = nehari_scale(&g, &pot, &d, Scheme::Quadratic).unwrap();
            assert!(
                ((t.ln()) - n as f64).abs() < 1e-13,
                "N = {n}: log t = {}",
                t.ln()
            );
        }
    }

    #[test]
    fn gradient_matches_residual_both_schemes() {
        let g = boxed(&[4, 4]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Coercive {
                center: 5,
                exponent: 2.0,
                scale: 0.5,
                offset: 0.0,
            },
        )
        .unwrap();
        let u = mixed(16, 3);
        for scheme in [
            Scheme::Quadratic,
            Scheme::PowerP(2.0),
            Scheme::PowerP(3.0),
            Scheme::PowerP(1.5),
        ] {
            let grad = energy_gradient(&g, &pot, &u, scheme).unwrap();
            let res = residual(&g, &pot, &u, scheme).unwrap();
            for x in 0..16 {
                assert!(
                    (grad[x] - res[x]).abs() <= 1e-11 * (1.0 + grad[x].abs()),
                    "{scheme:?} vertex {x}: {} vs {}",
                    grad[x],
                    res[x]
                );
            }
        }
    }

    #[test]
    fn quadratic_and_general_pipelines_agree_at_p2() {
        let g = torus(&[4, 4]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 0.5, 0.25, 0.75],
            },
        )
        .unwrap();
        let u = mixed(16, 11);
        let ja = energy(&g, &pot, &u, Scheme::Quadratic).unwrap();
        let jb = energy(&g, &pot, &u, Scheme::PowerP(2.0)).unwrap();
        assert!((ja - jb).abs() <= 1e-12 * (1.0 + ja.abs()));
        let ga = energy_gradient(&g, &pot, &u, Scheme::Quadratic).unwrap();
        let gb = energy_gradient(&g, &pot, &u, Scheme::PowerP(2.0)).unwrap();
        for x in 0..16 {
            assert!((ga[x] - gb[x]).abs() <= 1e-12 * (1.0 + ga[x].abs()));
        }
    }

    #[test]
    fn ray_identity_p_j_minus_pairing_is_mass() {
        let g = torus(&[6]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 0.5],
            },
        )
        .unwrap();
        for (seed, scheme) in [
            (1u64, Scheme::Quadratic),
            (2, Scheme::PowerP(3.0)),
            (3, Scheme::PowerP(2.0)),
        ] {
            let u = wobble(6, seed);
            let p = scheme.exponent();
            let j = energy(&g, &pot, &u, scheme).unwrap();
            let pairing = nehari_residual(&g, &pot, &u, scheme).unwrap();
            let mass = mass_p(&u, scheme);
            assert!(
                (p * j - pairing - mass).abs() <= 1e-11 * (1.0 + mass.abs()),
                "{scheme:?}: pJ − ⟨J′,u⟩ = {} vs mass {mass}",
                p * j - pairing
            );
        }
    }

    #[test]
    fn projection_lands_on_the_constraint() {
        let g = boxed(&[5]);
        let pot = zero_pot(&g);
        for scheme in [Scheme::Quadratic, Scheme::PowerP(2.5)] {
            let u = wobble(5, 9);
            let (v, report) = nehari_project(&g, &pot, &u, scheme).unwrap();
            let mass = mass_p(&v, scheme);
            assert!(
                report.residual_after.abs() <= 1e-9 * (1.0 + report.residual_before.abs()),
                "{scheme:?}: defect after = {}",
                report.residual_after
            );
            // On the constraint, J = (1/p)·mass.
            assert!(
                (report.energy_after - mass / scheme.exponent()).abs()
                    <= 1e-9 * (1.0 + mass.abs()),
                "{scheme:?}"
            );
        }
    }

    #[test]
    fn projection_rejects_zero_field() {
        let g = torus(&[4]);
        let pot = zero_pot(&g);
        let z = Field::zeros(4);
        assert!(matches!(
            nehari_scale(&g, &pot, &z, Scheme::Quadratic),
            Err(FunctionalError::ZeroField)
        ));
    }

    #[test]
    fn delta_max_at_p2_is_exp_minus_three_halves() {
        assert_eq!(delta_max(2.0).to_bits(), (-1.5f64).exp().to_bits());
        for p in [1.5, 2.0, 3.0, 4.0] {
            let d = delta_max(p);
            assert!(d > 0.0 && d < 1.0, "p = {p}: {d}");
        }
    }

    #[test]
    fn split_is_continuous_and_c1_at_the_crossover() {
        for p in [2.0, 3.0, 1.5] {
            let delta = delta_max(p);
            let eps = 1e-9 * delta;
            let inner = f_split(delta - eps, delta, p).unwrap();
            let outer = f_split(delta + eps, delta, p).unwrap();
            assert!((inner.f1 - outer.f1).abs() < 1e-8, "p = {p}");
            assert!((inner.df1 - outer.df1).abs() < 1e-7, "p = {p}");
            assert!(inner.f2.abs() == 0.0 && outer.f2.abs() < 1e-8, "p = {p}");
            assert!((inner.df2 - outer.df2).abs() < 1e-7, "p = {p}");
        }
    }

    #[test]
    fn split_reassembles_the_logarithmic_primitive() {
        for p in [2.0, 3.0] {
            let delta = 0.5 * delta_max(p);
            for s in [-2.0, -0.3, -0.05, 0.02, 0.11, 0.9, 4.7] {
                let sv = f_split(s, delta, p).unwrap();
                let f = s.abs().powf(p) * s.abs().ln();
                assert!(
                    ((sv.f2 - sv.f1) - f).abs() <= 1e-12 * (1.0 + f.abs()),
                    "p = {p}, s = {s}"
                );
            }
        }
    }

    #[test]
    fn split_derivatives_match_finite_differences() {
        for p in [2.0, 3.0] {
            let delta = delta_max(p);
            for s in [-1.7, -0.4, -0.1, 0.07, 0.5, 2.3] {
                let h = 1e-7;
                let hi = f_split(s + h, delta, p).unwrap();
                let lo = f_split(s - h, delta, p).unwrap();
                let sv = f_split(s, delta, p).unwrap();
                let fd1 = (hi.f1 - lo.f1) / (2.0 * h);
                let fd2 = (hi.f2 - lo.f2) / (2.0 * h);
                assert!(
                    (fd1 - sv.df1).abs() <= 1e-5 * (1.0 + sv.df1.abs()),
                    "p = {p}, s = {s}: {fd1} vs {}",
                    sv.df1
                );
                assert!(
                    (fd2 - sv.df2).abs() <= 1e-5 * (1.0 + sv.df2.abs()),
                    "p = {p}, s = {s}: {fd2} vs {}",
                    sv.df2
                );
            }
        }
    }

    #[test]
    fn f1_is_nonnegative_and_sign_aligned() {
        for p in [2.0, 3.0, 1.5] {
            let delta = delta_max(p);
            for i in 0..400 {
                let s = -5.0 + 10.0 * i as f64 / 399.0;
                let sv = f_split(s, delta, p).unwrap();
                assert!(sv.f1 >= 0.0, "p = {p}, s = {s}: F1 = {}", sv.f1);
                assert!(sv.f2 >= 0.0, "p = {p}, s = {s}: F2 = {}", sv.f2);
                assert!(sv.df1 * s >= 0.0, "p = {p}, s = {s}");
                if s.abs() <= delta {
                    assert_eq!(sv.f2, 0.0);
                    assert_eq!(sv.df2, 0.0);
                }
            }
        }
    }

    #[test]
    fn split_rejects_delta_beyond_convexity() {
        let p = 2.0;
        assert!(f_split(0.1, delta_max(p) * 1.01, p).is_err());
        assert!(f_split(0.1, 0.0, p).is_err());
        assert!(f_split(0.1, -0.1, p).is_err());
        assert!(f_split(0.1, 0.9 * delta_max(p), p).is_ok());
    }

    #[test]
    fn energy_split_adds_up_and_psi_is_nonnegative() {
        let g = torus(&[8]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 0.5],
            },
        )
        .unwrap();
        for scheme in [Scheme::Quadratic, Scheme::PowerP(3.0)] {
            let delta = delta_max(scheme.exponent());
            let u = mixed(8, 21);
            let split = energy_split(&g, &pot, &u, delta, scheme).unwrap();
            assert!(split.psi >= 0.0);
            assert!(
                (split.phi + split.psi - split.total).abs() <= 1e-10 * (1.0 + split.total.abs()),
                "{scheme:?}: Φ+Ψ = {} vs J = {}",
                split.phi + split.psi,
                split.total
            );
        }
    }

    #[test]
    fn growth_constant_is_finite_and_sampling_stable() {
        let p = 2.0;
        let delta = delta_max(p);
        let c1 = f2_growth_constant(delta, p, 2.5, 50.0, 10_001).unwrap();
        let c2 = f2_growth_constant(delta, p, 2.5, 50.0, 20_001).unwrap();
        assert!(c1.is_finite() && c1 > 0.0);
        assert!((c1 - c2).abs() <= 0.01 * c1, "{c1} vs {c2}");
        assert!(f2_growth_constant(delta, p, 2.0, 50.0, 100).is_err());
    }

    #[test]
    fn scaling_identity_along_rays() {
        let g = torus(&[6]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 3,
                tile: vec![0.0, 0.25, 0.5],
            },
        )
        .unwrap();
        for scheme in [Scheme::Quadratic, Scheme::PowerP(3.0)] {
            let p = scheme.exponent();
            let u = mixed(6, 5);
            let j = energy(&g, &pot, &u, scheme).unwrap();
            let mass = mass_p(&u, scheme);
            for s in [0.25, 0.5, 2.0, 4.0] {
                let su = u.scaled(s).unwrap();
                let js = energy(&g, &pot, &su, scheme).unwrap();
                let predicted = s.powf(p) * j - s.powf(p) * s.ln() * mass;
                assert!(
                    (js - predicted).abs() <= 1e-11 * (1.0 + js.abs()),
                    "{scheme:?}, s = {s}: {js} vs {predicted}"
                );
            }
        }
    }
}
