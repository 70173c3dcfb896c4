//! CSV persistence for vertex fields.
//!
//! Two header forms are accepted: `index,value` rows keyed by vertex
//! index, or `x0,…,x{N−1},value` rows keyed by lattice coordinates
//! (lattice graphs only). Values are written with 17 significant digits,
//! so a store→load round trip reproduces every `f64` bit for bit.

use loglat_core::field::Field;
use loglat_core::graph::GraphTopology;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Errors from field persistence.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("{path}: line {line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: field covers {got} vertices but the graph has {expected}")]
    LengthMismatch {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Graph(#[from] loglat_core::graph::GraphError),
    #[error(transparent)]
    Field(#[from] loglat_core::field::FieldError),
}

/// Formats one value with 17 significant digits (round-trip exact).
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a field as CSV: coordinate columns on lattice graphs, a plain
/// index column otherwise.
pub fn store_field(path: &Path, graph: &GraphTopology, field: &Field) -> Result<(), IoError> {
    let mut out = String::new();
    if let Some(meta) = graph.lattice() {
        let header: Vec<String> = (0..meta.dimension()).map(|a| format!("x{a}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",value\n");
        for (v, &t) in field.values().iter().enumerate() {
            let coords = meta.coords_of(v);
            for c in coords {
                out.push_str(&c.to_string());
                out.push(',');
            }
            out.push_str(&format_value(t));
            out.push('\n');
        }
    } else {
        out.push_str("index,value\n");
        for (v, &t) in field.values().iter().enumerate() {
            out.push_str(&format!("{v},{}\n", format_value(t)));
        }
    }
    std::fs::write(path, out).map_err(|e| IoError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads a field for `graph` back from CSV, accepting either header form.
/// Every vertex must appear exactly once.
pub fn load_field(path: &Path, graph: &GraphTopology) -> Result<Field, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let fail = |line: usize, reason: String| IoError::Format {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file".to_string()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let by_index = columns == ["index", "value"];
    if !by_index {
        let n = columns.len().saturating_sub(1);
        let coord_form = n >= 1
            && columns[n] == "value"
            && columns[..n]
                .iter()
                .enumerate()
                .all(|(a, c)| *c == format!("x{a}"));
        if !coord_form {
            return Err(fail(
                1,
                format!(
                    "header must be 'index,value' or 'x0,…,x{{N−1}},value', got '{header}'"
                ),
            ));
        }
        let meta = graph.lattice().ok_or_else(|| {
            fail(
                1,
                "coordinate columns need a lattice graph; use 'index,value'".to_string(),
            )
        })?;
        if n != meta.dimension() {
            return Err(fail(
                1,
                format!(
                    "{n} coordinate columns for a {}-dimensional lattice",
                    meta.dimension()
                ),
            ));
        }
    }
    let n_vertices = graph.vertex_count();
    let mut values = vec![0.0f64; n_vertices];
    let mut seen = vec![false; n_vertices];
    let mut count = 0usize;
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != columns.len() {
            return Err(fail(
                lineno,
                format!("expected {} fields, got {}", columns.len(), parts.len()),
            ));
        }
        let value: f64 = parts[parts.len() - 1]
            .parse()
            .map_err(|_| fail(lineno, format!("bad value '{}'", parts[parts.len() - 1])))?;
        let vertex = if by_index {
            parts[0]
                .parse::<usize>()
                .map_err(|_| fail(lineno, format!("bad index '{}'", parts[0])))?
        } else {
            let meta = graph.lattice().expect("validated above");
            let coords: Vec<usize> = parts[..parts.len() - 1]
                .iter()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| fail(lineno, format!("bad coordinate '{s}'")))
                })
                .collect::<Result<_, _>>()?;
            meta.index_of(&coords)?
        };
        if vertex >= n_vertices {
            return Err(fail(
                lineno,
                format!("vertex {vertex} out of range for {n_vertices} vertices"),
            ));
        }
        if seen[vertex] {
            return Err(fail(lineno, format!("vertex {vertex} appears twice")));
        }
        seen[vertex] = true;
        values[vertex] = value;
        count += 1;
    }
    if count != n_vertices {
        return Err(IoError::LengthMismatch {
            path: path.to_path_buf(),
            expected: n_vertices,
            got: count,
        });
    }
    Ok(Field::new(values)?)
}
