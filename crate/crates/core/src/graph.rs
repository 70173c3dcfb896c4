//! Finite graph topologies: lattice truncations of ℤᴺ and general graphs.
//!
//! Two lattice truncations of ℤᴺ are supported, both on a box of side
//! lengths L₁ × … × L_N:
//!
//! * **torus** — opposite faces identified, so every vertex keeps its full
//!   ambient degree 2N inside the truncation;
//! * **dirichlet** — the box sits inside ℤᴺ with the field extended by zero
//!   outside. Edges leaving the box are not stored, but every vertex still
//!   reports the ambient degree 2N; the operators in [`crate::ops`] use the
//!   gap between ambient and stored degree to account for the phantom
//!   zero-valued neighbours.
//!
//! Arbitrary finite connected graphs are supported through
//! [`build_general_graph`]; there the ambient degree coincides with the
//! stored degree.
//!
//! Vertices are indexed `0..vertex_count`. Lattice vertices are mapped to
//! indices in row-major order: the first coordinate varies slowest and the
//! last coordinate fastest.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Errors arising while building or querying a graph topology.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} side lengths, got {got}")]
    SideCountMismatch { expected: usize, got: usize },
    #[error("torus side {side} in axis {axis} is below the minimum of 3")]
    TorusSideTooSmall { axis: usize, side: usize },
    #[error("dirichlet side {side} in axis {axis} is below the minimum of 1")]
    BoxSideTooSmall { axis: usize, side: usize },
    #[error("lattice volume overflows usize")]
    VolumeOverflow,
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("edge ({a}, {b}) references a vertex outside 0..{vertex_count}")]
    EdgeOutOfRange { a: usize, b: usize, vertex_count: usize },
    #[error("self-loop at vertex {vertex} is not allowed")]
    SelfLoop { vertex: usize },
    #[error("duplicate edge ({a}, {b})")]
    DuplicateEdge { a: usize, b: usize },
    #[error("graph is disconnected: vertex {unreached} is not reachable from vertex 0")]
    Disconnected { unreached: usize },
    #[error("coordinate {value} in axis {axis} exceeds side {side}")]
    CoordinateOutOfRange { axis: usize, value: usize, side: usize },
    #[error("expected {expected} coordinates, got {got}")]
    CoordinateCountMismatch { expected: usize, got: usize },
    #[error("vertex {vertex} out of range for graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("operation requires a lattice topology")]
    NotALattice,
}

/// Boundary treatment for a lattice truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Torus,
    Dirichlet,
}

/// Request for a lattice truncation of ℤᴺ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Ambient dimension N ≥ 1.
    pub dimension: usize,
    /// Side lengths, one per axis.
    pub sides: Vec<usize>,
    pub boundary: BoundaryKind,
}

/// What kind of topology a [`GraphTopology`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    LatticeTorus,
    LatticeDirichlet,
    General,
}

/// Coordinate bookkeeping for lattice topologies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeMeta {
    sides: Vec<usize>,
    /// Row-major strides: `strides[i]` is the index step of axis i.
    strides: Vec<usize>,
}

impl LatticeMeta {
    fn new(sides: &[usize]) -> Result<Self, GraphError> {
        let n = sides.len();
        let mut strides = vec![1usize; n];
        for axis in (0..n.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1]
                .checked_mul(sides[axis + 1])
                .ok_or(GraphError::VolumeOverflow)?;
        }
        Ok(Self {
            sides: sides.to_vec(),
            strides,
        })
    }

    pub fn dimension(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    /// Row-major vertex index of a coordinate tuple.
    pub fn index_of(&self, coords: &[usize]) -> Result<usize, GraphError> {
        if coords.len() != self.sides.len() {
            return Err(GraphError::CoordinateCountMismatch {
                expected: self.sides.len(),
                got: coords.len(),
            });
        }
        let mut index = 0usize;
        for (axis, (&c, (&side, &stride))) in coords
            .iter()
            .zip(self.sides.iter().zip(self.strides.iter()))
            .enumerate()
        {
            if c >= side {
                return Err(GraphError::CoordinateOutOfRange {
                    axis,
                    value: c,
                    side,
                });
            }
            index += c * stride;
        }
        Ok(index)
    }

    /// Coordinate tuple of a row-major vertex index.
    pub fn coords_of(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        let mut coords = Vec::with_capacity(self.sides.len());
        for &stride in &self.strides {
            coords.push(rest / stride);
            rest %= stride;
        }
        coords
    }
}

/// An immutable finite graph with per-vertex ambient degrees.
///
/// Adjacency is stored in compressed form: the neighbours of vertex `v` are
/// the sorted slice `neighbors(v)`. For dirichlet lattice truncations the
/// ambient degree 2N exceeds the stored degree at boundary vertices; the
/// difference counts phantom neighbours that carry the value zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTopology {
    vertex_count: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    ambient_degree: Vec<usize>,
    kind: GraphKind,
    lattice: Option<LatticeMeta>,
    max_degree: usize,
}

impl GraphTopology {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Degree of `v` in the ambient graph (2N on lattices, stored degree on
    /// general graphs).
    pub fn ambient_degree(&self, v: usize) -> usize {
        self.ambient_degree[v]
    }

    /// Number of stored (in-truncation) neighbours of `v`.
    pub fn stored_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Number of phantom zero-valued neighbours of `v` (dirichlet boundary).
    pub fn phantom_degree(&self, v: usize) -> usize {
        self.ambient_degree[v] - self.stored_degree(v)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn lattice(&self) -> Option<&LatticeMeta> {
        self.lattice.as_ref()
    }

    /// Largest ambient degree; the constant C in the Sobolev-type norm
    /// bound ‖u‖ ≤ √(2C+1)·‖u‖₂.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of stored undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Graph distances from `source` by breadth-first search.
    ///
    /// Phantom neighbours are not traversed: distances are measured inside
    /// the truncation.
    pub fn distances_from(&self, source: usize) -> Result<Vec<usize>, GraphError> {
        if source >= self.vertex_count {
            return Err(GraphError::VertexOutOfRange {
                vertex: source,
                vertex_count: self.vertex_count,
            });
        }
        let mut dist = vec![usize::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &w in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }
}

/// Builds a lattice truncation of ℤᴺ.
///
/// Torus sides must be at least 3 so that the two axis neighbours of a
/// vertex stay distinct; dirichlet sides must be at least 1. Every vertex
/// gets ambient degree 2N.
pub fn build_lattice(spec: &LatticeSpec) -> Result<GraphTopology, GraphError> {
    if spec.dimension == 0 {
        return Err(GraphError::ZeroDimension);
    }
    if spec.sides.len() != spec.dimension {
        return Err(GraphError::SideCountMismatch {
            expected: spec.dimension,
            got: spec.sides.len(),
        });
    }
    for (axis, &side) in spec.sides.iter().enumerate() {
        match spec.boundary {
            BoundaryKind::Torus if side < 3 => {
                return Err(GraphError::TorusSideTooSmall { axis, side });
            }
            BoundaryKind::Dirichlet if side < 1 => {
                return Err(GraphError::BoxSideTooSmall { axis, side });
            }
            _ => {}
        }
    }
    let meta = LatticeMeta::new(&spec.sides)?;
    let vertex_count = spec
        .sides
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or(GraphError::VolumeOverflow)?;
    if vertex_count == 0 {
        return Err(GraphError::EmptyGraph);
    }

    let ambient = 2 * spec.dimension;
    let mut offsets = Vec::with_capacity(vertex_count + 1);
    let mut neighbors = Vec::with_capacity(vertex_count * ambient);
    offsets.push(0);
    for v in 0..vertex_count {
        let coords = meta.coords_of(v);
        let mut local = Vec::with_capacity(ambient);
        for axis in 0..spec.dimension {
            let side = spec.sides[axis];
            for step in [-1isize, 1] {
                match spec.boundary {
                    BoundaryKind::Torus => {
                        let c = (coords[axis] as isize + step).rem_euclid(side as isize) as usize;
                        let mut nc = coords.clone();
                        nc[axis] = c;
                        local.push(meta.index_of(&nc)?);
                    }
                    BoundaryKind::Dirichlet => {
                        let c = coords[axis] as isize + step;
                        if c >= 0 && (c as usize) < side {
                            let mut nc = coords.clone();
                            nc[axis] = c as usize;
                            local.push(meta.index_of(&nc)?);
                        }
                    }
                }
            }
        }
        local.sort_unstable();
        neighbors.extend_from_slice(&local);
        offsets.push(neighbors.len());
    }

    let kind = match spec.boundary {
        BoundaryKind::Torus => GraphKind::LatticeTorus,
        BoundaryKind::Dirichlet => GraphKind::LatticeDirichlet,
    };
    let graph = GraphTopology {
        vertex_count,
        offsets,
        neighbors,
        ambient_degree: vec![ambient; vertex_count],
        kind,
        lattice: Some(meta),
        max_degree: ambient,
    };
    check_connected(&graph)?;
    Ok(graph)
}

/// Builds a general finite graph from an undirected edge list.
///
/// Rejects self-loops, duplicate edges (in either orientation), references
/// to vertices outside `0..vertex_count`, and disconnected graphs. The
/// ambient degree of every vertex equals its stored degree.
pub fn build_general_graph(
    vertex_count: usize,
    edges: &[(usize, usize)],
) -> Result<GraphTopology, GraphError> {
    if vertex_count == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut adjacency = vec![Vec::new(); vertex_count];
    for &(a, b) in edges {
        if a >= vertex_count || b >= vertex_count {
            return Err(GraphError::EdgeOutOfRange { a, b, vertex_count });
        }
        if a == b {
            return Err(GraphError::SelfLoop { vertex: a });
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            return Err(GraphError::DuplicateEdge { a, b });
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    let mut offsets = Vec::with_capacity(vertex_count + 1);
    let mut neighbors = Vec::with_capacity(2 * edges.len());
    let mut ambient_degree = Vec::with_capacity(vertex_count);
    offsets.push(0);
    for mut local in adjacency {
        local.sort_unstable();
        ambient_degree.push(local.len());
        neighbors.extend_from_slice(&local);
        offsets.push(neighbors.len());
    }
    let max_degree = ambient_degree.iter().copied().max().unwrap_or(0);

    let graph = GraphTopology {
        vertex_count,
        offsets,
        neighbors,
        ambient_degree,
        kind: GraphKind::General,
        lattice: None,
        max_degree,
    };
    check_connected(&graph)?;
    Ok(graph)
}

fn check_connected(graph: &GraphTopology) -> Result<(), GraphError> {
    let dist = graph.distances_from(0)?;
    match dist.iter().position(|&d| d == usize::MAX) {
        Some(unreached) => Err(GraphError::Disconnected { unreached }),
        None => Ok(()),
    }
}
