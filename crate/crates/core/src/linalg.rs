//! Dense linear-algebra helpers backing the solvers.
//!
//! Graphs at desk scale (a few thousand vertices) are handled perfectly
//! well by dense factorizations, so the Newton linearizations and spectral
//! initial guesses go through `nalgebra` rather than a sparse stack.

use crate::graph::GraphTopology;
use nalgebra::{DMatrix, DVector};

/// Dense matrix of −Δ: ambient degree on the diagonal, −1 for each stored
/// edge. Symmetric positive semidefinite (definite in dirichlet mode).
pub fn minus_laplacian_matrix(graph: &GraphTopology) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        m[(x, x)] = graph.ambient_degree(x) as f64;
        for &y in graph.neighbors(x) {
            m[(x, y)] = -1.0;
        }
    }
    m
}

/// Dense matrix of −Δ + diag(w).
pub fn schrodinger_matrix(graph: &GraphTopology, w: &[f64]) -> DMatrix<f64> {
    let mut m = minus_laplacian_matrix(graph);
    for (x, &v) in w.iter().enumerate() {
        m[(x, x)] += v;
    }
    m
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending,
/// each eigenvector sign-canonicalized (first significant entry positive).
/// Returns (eigenvalues, eigenvectors) with eigenvectors as rows of the
/// outer vector.
pub fn symmetric_eigen_ascending(m: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = m.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("symmetric eigenvalues are finite")
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &idx in &order {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let mut v: Vec<f64> = col.iter().copied().collect();
        canonicalize_sign(&mut v);
        vectors.push(v);
    }
    (values, vectors)
}

/// Flips a vector so its first entry of significant magnitude is positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    for &x in v.iter() {
        if x.abs() > 1e-12 * scale {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Solves A·x = b by LU with partial pivoting; `None` when the
/// factorization hits an exactly zero pivot.
pub fn solve_dense(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}
