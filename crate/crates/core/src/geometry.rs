//! The fixed enclosing simplex and barycentric coordinates with respect to it.
//!
//! The simplex has vertex `v0` at the origin and `vi = n * e_i`, so it contains
//! the unit hypercube `[0, 1]^n`. Coordinates are obtained as `(1 | x) * M`
//! with `M` written down in closed form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimapError};

/// Default tolerance for membership and sum-to-one checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// The `n`-simplex enclosing `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosingSimplex {
    dim: usize,
    /// `(n+1) x n`, row `i` is vertex `i`.
    vertices: DMatrix<f64>,
    /// `(n+1) x (n+1)`, inverse of `(1 | S)`.
    coords: DMatrix<f64>,
}

impl EnclosingSimplex {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(SimapError::ZeroDimension);
        }
        let n = dim as f64;
        let vertices = DMatrix::from_fn(dim + 1, dim, |r, c| if r == c + 1 { n } else { 0.0 });
        let inv = 1.0 / n;
        let coords = DMatrix::from_fn(dim + 1, dim + 1, |r, c| match (r, c) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (_, 0) => -inv,
            (r, c) if r == c => inv,
            _ => 0.0,
        });
        Ok(Self {
            dim,
            vertices,
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertex matrix `S`.
    pub fn vertex_matrix(&self) -> &DMatrix<f64> {
        &self.vertices
    }

    /// Coordinate matrix `M`.
    pub fn coord_matrix(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// `T = (1 | S)`.
    pub fn augmented_vertex_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim + 1, self.dim + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                self.vertices[(r, c - 1)]
            }
        })
    }

    pub fn vertex(&self, i: usize) -> Vec<f64> {
        self.vertices.row(i).iter().copied().collect()
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(SimapError::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    /// Barycentric coordinates `(1 | x) * M`.
    pub fn barycentric_from_ambient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut row = Vec::with_capacity(self.dim + 1);
        row.push(1.0);
        row.extend_from_slice(x);
        let b = DVector::from_vec(row).transpose() * &self.coords;
        Ok(b.iter().copied().collect())
    }

    pub fn ambient_from_barycentric(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.ambient_from_barycentric_tol(b, DEFAULT_TOL)
    }

    /// `b * S`, rejecting `b` whose entries do not sum to 1 within `tol`.
    pub fn ambient_from_barycentric_tol(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        if b.len() != self.dim + 1 {
            return Err(SimapError::DimensionMismatch {
                expected: self.dim + 1,
                found: b.len(),
            });
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(SimapError::NotNormalized { sum });
        }
        let x = DVector::from_column_slice(b).transpose() * &self.vertices;
        Ok(x.iter().copied().collect())
    }

    /// True iff every barycentric coordinate of `x` is at least `-tol`.
    /// A point of the wrong length is never contained.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.barycentric_from_ambient(x) {
            Ok(b) => b.iter().all(|&v| v >= -tol),
            Err(_) => false,
        }
    }
}
