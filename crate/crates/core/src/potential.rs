//! Admissible potentials on graph vertex sets.
//!
//! Every potential must satisfy the strict lower bound inf V > −1: the
//! quadratic-form coefficient V+1 in the energy then stays positive, which
//! is what makes the Sobolev-type norm with weight V+1 equivalent to the
//! unweighted one. The bound is enforced at construction and re-checked
//! after algebraic manipulations such as the logarithmic gauge shift.
//!
//! Structured classes mirror the hypotheses under which ground states are
//! known to exist:
//!
//! * **periodic** — V(x) = tile(x mod T) with a T×…×T tile on a lattice;
//! * **coercive** — V(x) = a·d(x,x₀)^q + b with BFS graph distance d,
//!   growing towards the truncation boundary;
//! * **well** — V(x) = V∞ − A·exp(−d(x,x₀)²/σ²), a localized dip below an
//!   asymptotically constant level;
//! * **asymptotically periodic** — V = V_p − D with V_p periodic and a
//!   pointwise decay D ≥ 0, so V sits below V_p but approaches it away
//!   from the support of D;
//! * **explicit** — arbitrary admissible values.

use crate::field::Field;
use crate::graph::{GraphError, GraphKind, GraphTopology};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from potential construction and manipulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("potential infimum {infimum} violates the admissibility bound inf V > -1")]
    Inadmissible { infimum: f64 },
    #[error("potential has {got} values but the graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("periodic potentials require a lattice topology")]
    PeriodicNeedsLattice,
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("period {period} does not divide torus side {side} in axis {axis}")]
    PeriodMismatch { axis: usize, side: usize, period: usize },
    #[error("tile has {got} entries, expected period^dimension = {expected}")]
    TileSizeMismatch { expected: usize, got: usize },
    #[error("non-finite parameter {name} = {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
    #[error("parameter {name} = {value} is out of range: {requirement}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("decay field must be pointwise ≥ 0; entry {value} at vertex {index}")]
    NegativeDecay { index: usize, value: f64 },
    #[error("shift factor lambda = {lambda} must be positive and finite")]
    InvalidShift { lambda: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Construction request for [`make_potential`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PotentialSpec {
    Periodic {
        period: usize,
        /// Row-major T^N tile of values.
        tile: Vec<f64>,
    },
    Coercive {
        center: usize,
        exponent: f64,
        scale: f64,
        offset: f64,
    },
    Well {
        center: usize,
        /// Asymptotic level V∞.
        limit: f64,
        /// Well depth A > 0; the minimum value is V∞ − A at the centre.
        depth: f64,
        /// Gaussian width σ > 0.
        width: f64,
    },
    AsymptoticallyPeriodic {
        period: usize,
        tile: Vec<f64>,
        /// Pointwise decay D ≥ 0 subtracted from the periodic background.
        decay: Vec<f64>,
    },
    Explicit { values: Vec<f64> },
}

/// Which structured class a built potential belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PotentialClass {
    Periodic {
        period: usize,
        tile: Vec<f64>,
    },
    Coercive {
        center: usize,
        exponent: f64,
        scale: f64,
        offset: f64,
    },
    Well {
        center: usize,
        limit: f64,
        depth: f64,
        width: f64,
    },
    AsymptoticallyPeriodic {
        period: usize,
        tile: Vec<f64>,
        /// The periodic background V_p materialized on the graph.
        background: Vec<f64>,
        decay: Vec<f64>,
    },
    Explicit,
}

/// An admissible potential: per-vertex values with inf V > −1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
    class: PotentialClass,
    infimum: f64,
}

impl Potential {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class(&self) -> &PotentialClass {
        &self.class
    }

    pub fn infimum(&self) -> f64 {
        self.infimum
    }

    pub fn is_admissible(&self) -> bool {
        self.infimum > -1.0
    }

    /// Wraps explicit values **without** the admissibility check.
    ///
    /// Intended for purely algebraic identity checks that must evaluate
    /// residuals under an out-of-range potential; solvers should never see
    /// such a potential. The `infimum` field still reports the true
    /// minimum so callers can flag the violation.
    pub fn explicit_unchecked(values: Vec<f64>) -> Result<Self, PotentialError> {
        let field = Field::new(values)?; // still reject NaN/inf
        let values = field.into_values();
        let infimum = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            values,
            class: PotentialClass::Explicit,
            infimum,
        })
    }
}

fn require_finite(name: &'static str, value: f64) -> Result<(), PotentialError> {
    if !value.is_finite() {
        return Err(PotentialError::NonFiniteParameter { name, value });
    }
    Ok(())
}

fn finish(values: Vec<f64>, class: PotentialClass) -> Result<Potential, PotentialError> {
    let field = Field::new(values)?;
    let values = field.into_values();
    let infimum = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if infimum <= -1.0 {
        return Err(PotentialError::Inadmissible { infimum });
    }
    Ok(Potential {
        values,
        class,
        infimum,
    })
}

fn periodic_values(
    graph: &GraphTopology,
    period: usize,
    tile: &[f64],
) -> Result<Vec<f64>, PotentialError> {
    let meta = graph.lattice().ok_or(PotentialError::PeriodicNeedsLattice)?;
    if period == 0 {
        return Err(PotentialError::ZeroPeriod);
    }
    let n = meta.dimension();
    let expected = period.pow(n as u32);
    if tile.len() != expected {
        return Err(PotentialError::TileSizeMismatch {
            expected,
            got: tile.len(),
        });
    }
    if graph.kind() == GraphKind::LatticeTorus {
        for (axis, &side) in meta.sides().iter().enumerate() {
            if side % period != 0 {
                return Err(PotentialError::PeriodMismatch { axis, side, period });
            }
        }
    }
    let mut values = Vec::with_capacity(graph.vertex_count());
    for v in 0..graph.vertex_count() {
        let coords = meta.coords_of(v);
        // Row-major index into the T^N tile.
        let mut t = 0usize;
        for &c in &coords {
            t = t * period + (c % period);
        }
        values.push(tile[t]);
    }
    Ok(values)
}

/// Builds a potential of the requested class on a graph and verifies
/// admissibility.
pub fn make_potential(
    graph: &GraphTopology,
    spec: &PotentialSpec,
) -> Result<Potential, PotentialError> {
    let n = graph.vertex_count();
    match spec {
        PotentialSpec::Periodic { period, tile } => {
            for &t in tile {
                require_finite("tile", t)?;
            }
            let values = periodic_values(graph, *period, tile)?;
            finish(
                values,
                PotentialClass::Periodic {
                    period: *period,
                    tile: tile.clone(),
                },
            )
        }
        PotentialSpec::Coercive {
            center,
            exponent,
            scale,
            offset,
        } => {
            require_finite("exponent", *exponent)?;
            require_finite("scale", *scale)?;
            require_finite("offset", *offset)?;
            if *scale <= 0.0 {
                return Err(PotentialError::ParameterOutOfRange {
                    name: "scale",
                    value: *scale,
                    requirement: "coercive scale must be > 0",
                });
            }
            if *exponent <= 0.0 {
                return Err(PotentialError::ParameterOutOfRange {
                    name: "exponent",
                    value: *exponent,
                    requirement: "coercive exponent must be > 0",
                });
            }
            let dist = graph.distances_from(*center)?;
            let values = dist
                .iter()
                .map(|&d| {
                    let d = d as f64;
                    if d == 0.0 {
                        *offset
                    } else {
                        scale * d.powf(*exponent) + offset
                    }
                })
                .collect();
            finish(
                values,
                PotentialClass::Coercive {
                    center: *center,
                    exponent: *exponent,
                    scale: *scale,
                    offset: *offset,
                },
            )
        }
        PotentialSpec::Well {
            center,
            limit,
            depth,
            width,
        } => {
            require_finite("limit", *limit)?;
            require_finite("depth", *depth)?;
            require_finite("width", *width)?;
            if *depth <= 0.0 {
                return Err(PotentialError::ParameterOutOfRange {
                    name: "depth",
                    value: *depth,
                    requirement: "well depth must be > 0",
                });
            }
            if *width <= 0.0 {
                return Err(PotentialError::ParameterOutOfRange {
                    name: "width",
                    value: *width,
                    requirement: "well width must be > 0",
                });
            }
            let dist = graph.distances_from(*center)?;
            let values = dist
                .iter()
                .map(|&d| {
                    let d = d as f64;
                    limit - depth * (-(d * d) / (width * width)).exp()
                })
                .collect();
            finish(
                values,
                PotentialClass::Well {
                    center: *center,
                    limit: *limit,
                    depth: *depth,
                    width: *width,
                },
            )
        }
        PotentialSpec::AsymptoticallyPeriodic {
            period,
            tile,
            decay,
        } => {
            for &t in tile {
                require_finite("tile", t)?;
            }
            if decay.len() != n {
                return Err(PotentialError::DimensionMismatch {
                    expected: n,
                    got: decay.len(),
                });
            }
            for (index, &d) in decay.iter().enumerate() {
                require_finite("decay", d)?;
                if d < 0.0 {
                    return Err(PotentialError::NegativeDecay { index, value: d });
                }
            }
            let background = periodic_values(graph, *period, tile)?;
            let values: Vec<f64> = background
                .iter()
                .zip(decay.iter())
                .map(|(&b, &d)| b - d)
                .collect();
            finish(
                values,
                PotentialClass::AsymptoticallyPeriodic {
                    period: *period,
                    tile: tile.clone(),
                    background,
                    decay: decay.clone(),
                },
            )
        }
        PotentialSpec::Explicit { values } => {
            if values.len() != n {
                return Err(PotentialError::DimensionMismatch {
                    expected: n,
                    got: values.len(),
                });
            }
            finish(values.clone(), PotentialClass::Explicit)
        }
    }
}

/// Logarithmic gauge shift: returns the explicit potential V − log λ².
///
/// If u solves the equation with potential V, then u/λ solves it with the
/// shifted potential. The result is re-checked for admissibility; shifting
/// too far down fails with [`PotentialError::Inadmissible`].
pub fn shift_potential(pot: &Potential, lambda: f64) -> Result<Potential, PotentialError> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(PotentialError::InvalidShift { lambda });
    }
    let shift = (lambda * lambda).ln();
    let values = pot.values.iter().map(|&v| v - shift).collect();
    finish(values, PotentialClass::Explicit)
}

/// Admissibility and class-consistency report for a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// min V over the graph.
    pub infimum: f64,
    /// Strict bound inf V > −1.
    pub admissible: bool,
    /// Class-specific consistency numbers; see [`check_admissible`].
    pub details: BTreeMap<String, f64>,
}

/// Checks the admissibility bound and the defining structure of the class.
///
/// Beyond the infimum, the report carries per-class diagnostics:
///
/// * periodic — `periodicity_residual`: max |V(x) − V(x + T·eᵢ)| over all
///   in-graph translations by one period;
/// * asymptotically periodic — the same residual for the background, plus
///   `domination_residual` = max (V − V_p) (must be ≤ 0) and
///   `boundary_shell_max` = max |V − V_p| over the shell of vertices
///   farthest from the decay's maximum (small values mean the potential
///   has essentially reached its periodic background at the truncation
///   edge);
/// * well — `well_minimum` = V∞ − A and `well_limit_gap` = max over the
///   farthest shell of |V − V∞|.
pub fn check_admissible(
    graph: &GraphTopology,
    pot: &Potential,
) -> Result<AdmissibilityReport, PotentialError> {
    if pot.len() != graph.vertex_count() {
        return Err(PotentialError::DimensionMismatch {
            expected: graph.vertex_count(),
            got: pot.len(),
        });
    }
    let mut details = BTreeMap::new();
    match pot.class() {
        PotentialClass::Periodic { period, .. } => {
            details.insert(
                "periodicity_residual".to_string(),
                periodicity_residual(graph, pot.values(), *period)?,
            );
        }
        PotentialClass::Coercive { center, .. } => {
            // Coercivity proxy on a truncation: the minimum over the
            // farthest shell minus the value at the centre.
            let dist = graph.distances_from(*center)?;
            let dmax = dist.iter().copied().max().unwrap_or(0);
            let far_min = pot
                .values()
                .iter()
                .zip(&dist)
                .filter(|(_, &d)| d == dmax)
                .map(|(&v, _)| v)
                .fold(f64::INFINITY, f64::min);
            details.insert("far_shell_rise".to_string(), far_min - pot.values()[*center]);
        }
        PotentialClass::Well {
            center,
            limit,
            depth,
            ..
        } => {
            details.insert("well_minimum".to_string(), limit - depth);
            let dist = graph.distances_from(*center)?;
            let dmax = dist.iter().copied().max().unwrap_or(0);
            let gap = pot
                .values()
                .iter()
                .zip(&dist)
                .filter(|(_, &d)| d == dmax)
                .map(|(&v, _)| (v - limit).abs())
                .fold(0.0, f64::max);
            details.insert("well_limit_gap".to_string(), gap);
        }
        PotentialClass::AsymptoticallyPeriodic {
            period,
            background,
            decay,
            ..
        } => {
            details.insert(
                "periodicity_residual".to_string(),
                periodicity_residual(graph, background, *period)?,
            );
            let domination = pot
                .values()
                .iter()
                .zip(background)
                .map(|(&v, &b)| v - b)
                .fold(f64::NEG_INFINITY, f64::max);
            details.insert("domination_residual".to_string(), domination);
            // Shell farthest from the decay's maximum (ties → lowest index).
            let center = decay
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                })
                .0;
            let dist = graph.distances_from(center)?;
            let dmax = dist.iter().copied().max().unwrap_or(0);
            let shell_max = pot
                .values()
                .iter()
                .zip(background)
                .zip(&dist)
                .filter(|(_, &d)| d == dmax)
                .map(|((&v, &b), _)| (v - b).abs())
                .fold(0.0, f64::max);
            details.insert("boundary_shell_max".to_string(), shell_max);
        }
        PotentialClass::Explicit => {}
    }
    Ok(AdmissibilityReport {
        infimum: pot.infimum(),
        admissible: pot.is_admissible(),
        details,
    })
}

/// max |V(x) − V(x + T·eᵢ)| over every axis translation that stays in the
/// graph (all of them on a torus with T | Lᵢ).
fn periodicity_residual(
    graph: &GraphTopology,
    values: &[f64],
    period: usize,
) -> Result<f64, PotentialError> {
    let meta = graph.lattice().ok_or(PotentialError::PeriodicNeedsLattice)?;
    let mut worst = 0.0f64;
    for v in 0..graph.vertex_count() {
        let coords = meta.coords_of(v);
        for axis in 0..meta.dimension() {
            let side = meta.sides()[axis];
            let mut shifted = coords.clone();
            let target = match graph.kind() {
                GraphKind::LatticeTorus => (coords[axis] + period) % side,
                _ => {
                    let t = coords[axis] + period;
                    if t >= side {
                        continue;
                    }
                    t
                }
            };
            shifted[axis] = target;
            let w = meta.index_of(&shifted)?;
            worst = worst.max((values[v] - values[w]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_general_graph, build_lattice, BoundaryKind, LatticeSpec};

    fn ring(len: usize) -> GraphTopology {
        build_lattice(&LatticeSpec {
            dimension: 1,
            sides: vec![len],
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

    #[test]
    fn periodic_tile_repeats_row_major() {
        let g = ring(6);
        let pot = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 3.0],
            },
        )
        .unwrap();
        assert_eq!(pot.values(), &[0.0, 3.0, 0.0, 3.0, 0.0, 3.0]);
        let report = check_admissible(&g, &pot).unwrap();
        assert!(report.admissible);
        assert_eq!(report.details["periodicity_residual"], 0.0);
    }

    #[test]
    fn periodic_tile_in_two_dimensions() {
        let g = build_lattice(&LatticeSpec {
            dimension: 2,
            sides: vec![4, 4],
            boundary: BoundaryKind::Torus,
        })
        .unwrap();
        let tile = vec![1.0, 2.0, 3.0, 4.0]; // rows (1,2) and (3,4)
        let pot = make_potential(&g, &PotentialSpec::Periodic { period: 2, tile }).unwrap();
        let meta = g.lattice().unwrap();
        assert_eq!(pot.values()[meta.index_of(&[0, 0]).unwrap()], 1.0);
        assert_eq!(pot.values()[meta.index_of(&[0, 1]).unwrap()], 2.0);
        assert_eq!(pot.values()[meta.index_of(&[1, 0]).unwrap()], 3.0);
        assert_eq!(pot.values()[meta.index_of(&[3, 3]).unwrap()], 4.0);
        assert_eq!(
            check_admissible(&g, &pot).unwrap().details["periodicity_residual"],
            0.0
        );
    }

    #[test]
    fn torus_period_must_divide_side() {
        let g = ring(5);
        let err = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 1.0],
            },
        )
        .unwrap_err();
        assert!(matches!(err, PotentialError::PeriodMismatch { .. }));
    }

    #[test]
    fn coercive_uses_bfs_distance() {
        let g = boxed(&[5]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Coercive {
                center: 2,
                exponent: 2.0,
                scale: 1.0,
                offset: 0.0,
            },
        )
        .unwrap();
        assert_eq!(pot.values(), &[4.0, 1.0, 0.0, 1.0, 4.0]);
        let report = check_admissible(&g, &pot).unwrap();
        assert_eq!(report.details["far_shell_rise"], 4.0);
    }

    #[test]
    fn well_reaches_its_minimum_at_the_centre() {
        let g = boxed(&[9]);
        let pot = make_potential(
            &g,
            &PotentialSpec::Well {
                center: 4,
                limit: 1.0,
                depth: 1.5,
                width: 2.0,
            },
        )
        .unwrap();
        assert!((pot.infimum() - (1.0 - 1.5)).abs() < 1e-15);
        assert!(pot.is_admissible());
        let report = check_admissible(&g, &pot).unwrap();
        assert!((report.details["well_minimum"] + 0.5).abs() < 1e-15);
        // Depth 2.5 would push the minimum to −1.5 < −1.
        let err = make_potential(
            &g,
            &PotentialSpec::Well {
                center: 4,
                limit: 1.0,
                depth: 2.5,
                width: 2.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, PotentialError::Inadmissible { .. }));
    }

    #[test]
    fn asymptotically_periodic_is_dominated() {
        let g = ring(8);
        let mut decay = vec![0.0; 8];
        decay[3] = 0.5;
        decay[4] = 0.25;
        let pot = make_potential(
            &g,
            &PotentialSpec::AsymptoticallyPeriodic {
                period: 2,
                tile: vec![0.0, 0.5],
                decay,
            },
        )
        .unwrap();
        let report = check_admissible(&g, &pot).unwrap();
        assert!(report.admissible);
        assert!(report.details["domination_residual"] <= 0.0);
        assert_eq!(report.details["boundary_shell_max"], 0.0);
        // Negative decay entries are rejected.
        let err = make_potential(
            &g,
            &PotentialSpec::AsymptoticallyPeriodic {
                period: 2,
                tile: vec![0.0, 0.5],
                decay: vec![0.0, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            },
        )
        .unwrap_err();
        assert!(matches!(err, PotentialError::NegativeDecay { index: 1, .. }));
    }

    #[test]
    fn admissibility_bound_is_strict() {
        let g = build_general_graph(2, &[(0, 1)]).unwrap();
        let err = make_potential(
            &g,
            &PotentialSpec::Explicit {
                values: vec![-1.0, 0.0],
            },
        )
        .unwrap_err();
        assert!(matches!(err, PotentialError::Inadmissible { infimum } if infimum == -1.0));
        let ok = make_potential(
            &g,
            &PotentialSpec::Explicit {
                values: vec![-0.999, 5.0],
            },
        )
        .unwrap();
        assert!(ok.is_admissible());
    }

    #[test]
    fn shift_subtracts_log_lambda_squared() {
        let g = ring(4);
        let pot = make_potential(
            &g,
            &PotentialSpec::Explicit {
                values: vec![1.0; 4],
            },
        )
        .unwrap();
        let shifted = shift_potential(&pot, 2.0).unwrap();
        let expected = 1.0 - (4.0f64).ln();
        for &v in shifted.values() {
            assert!((v - expected).abs() < 1e-15);
        }
        assert!(matches!(shifted.class(), PotentialClass::Explicit));
        // Shifting far down violates admissibility.
        let err = shift_potential(&pot, 10.0).unwrap_err();
        assert!(matches!(err, PotentialError::Inadmissible { .. }));
        // And unchecked construction still records the true infimum.
        let raw = Potential::explicit_unchecked(vec![1.0 - 100.0f64.ln(); 4]).unwrap();
        assert!(!raw.is_admissible());
    }

    #[test]
    fn tile_size_is_validated() {
        let g = build_lattice(&LatticeSpec {
            dimension: 2,
            sides: vec![4, 4],
            boundary: BoundaryKind::Torus,
        })
        .unwrap();
        let err = make_potential(
            &g,
            &PotentialSpec::Periodic {
                period: 2,
                tile: vec![0.0, 1.0],
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PotentialError::TileSizeMismatch {
                expected: 4,
                got: 2
            }
        ));
    }
}
