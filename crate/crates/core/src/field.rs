//! Vertex fields: real-valued functions on the vertex set of a finite graph.
//!
//! A [`Field`] is a plain vector of `f64` values indexed by vertex, with one
//! invariant enforced at every construction site: all entries are finite.
//! NaN or infinite entries would silently poison every downstream energy and
//! residual computation, so they are rejected at the boundary instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors arising when constructing or combining vertex fields.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    /// An entry was NaN or ±infinity.
    #[error("non-finite entry {value} at vertex {index}")]
    NonFinite { index: usize, value: f64 },
    /// A vertex index was outside the field's support.
    #[error("vertex {index} out of range for field of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A finite real-valued function on the vertices of a graph.
///
/// Serialized as a bare array of numbers; deserialization re-checks the
/// finiteness invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    /// Wraps a value vector, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, FieldError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(FieldError::NonFinite { index, value });
            }
        }
        Ok(Self { values })
    }

    /// The zero field on `len` vertices.
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    /// The constant field `c` on `len` vertices.
    pub fn constant(len: usize, c: f64) -> Result<Self, FieldError> {
        Self::new(vec![c; len])
    }

    /// The indicator of a single vertex: 1 at `at`, 0 elsewhere.
    pub fn delta(len: usize, at: usize) -> Result<Self, FieldError> {
        if at >= len {
            return Err(FieldError::IndexOutOfRange { index: at, len });
        }
        let mut values = vec![0.0; len];
        values[at] = 1.0;
        Ok(Self { values })
    }

    /// Builds a field by evaluating `f` at every vertex index.
    pub fn from_fn(len: usize, f: impl FnMut(usize) -> f64) -> Result<Self, FieldError> {
        Self::new((0..len).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entrywise scaling by a finite factor.
    pub fn scaled(&self, factor: f64) -> Result<Self, FieldError> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Euclidean (ℓ²) norm of the value vector.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Supremum norm of the value vector.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl TryFrom<Vec<f64>> for Field {
    type Error = FieldError;

    fn try_from(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(values)
    }
}

impl From<Field> for Vec<f64> {
    fn from(field: Field) -> Vec<f64> {
        field.values
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}
