//! Point location and coordinate transport across barycentric subdivisions.
//!
//! Each maximal simplex of `Sd(tau)` is named by an ordering `(i0, .., in)`
//! of the vertices of `tau`; its vertices are the barycenters of the prefix
//! faces `{i0}, {i0,i1}, .., {i0..in}`. A point lies in the simplex whose
//! ordering sorts its coordinates non-increasingly, and its coordinates with
//! respect to that simplex follow from the bidiagonal matrix `P`. Nothing
//! here ever enumerates the subdivision.

use nalgebra::DMatrix;

use crate::error::{Result, SimapError};
use crate::geometry::{EnclosingSimplex, DEFAULT_TOL};
use crate::key::{VertexId, VertexInterner, VertexKey};

/// A permutation of `0..=n` naming a maximal simplex of a subdivision.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
                let max = perm.len().saturating_sub(1);
                return Err(SimapError::InvalidOrdering { perm, max });
            }
        }
        Ok(Self(perm))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The ordering sorting `b` non-increasingly, ties by ascending index.
pub fn locate_ordering(b: &[f64]) -> Result<Ordering> {
    locate_ordering_tol(b, DEFAULT_TOL)
}

pub fn locate_ordering_tol(b: &[f64], tol: f64) -> Result<Ordering> {
    for (index, &value) in b.iter().enumerate() {
        if value.is_nan() || value < -tol {
            return Err(SimapError::OutsideSimplex { index, value });
        }
    }
    let mut perm: Vec<usize> = (0..b.len()).collect();
    // `sort_by` is stable, so equal coordinates keep ascending index order.
    perm.sort_by(|&i, &j| b[j].total_cmp(&b[i]));
    Ok(Ordering(perm))
}

/// Coordinates with respect to the maximal simplex named by `ord`:
/// `out[j] = (j+1) (b[i_j] - b[i_{j+1}])`, `out[n] = (n+1) b[i_n]`.
pub fn subdivide_coords(b: &[f64], ord: &Ordering) -> Result<Vec<f64>> {
    subdivide_coords_tol(b, ord, DEFAULT_TOL)
}

pub fn subdivide_coords_tol(b: &[f64], ord: &Ordering, tol: f64) -> Result<Vec<f64>> {
    let perm = ord.as_slice();
    if perm.len() != b.len() {
        return Err(SimapError::DimensionMismatch {
            expected: b.len(),
            found: perm.len(),
        });
    }
    let n = b.len() - 1;
    let mut out = Vec::with_capacity(b.len());
    for j in 0..n {
        out.push((j + 1) as f64 * (b[perm[j]] - b[perm[j + 1]]));
    }
    out.push((n + 1) as f64 * b[perm[n]]);
    if let Some((index, &value)) = out.iter().enumerate().find(|(_, &v)| v < -tol) {
        return Err(SimapError::WrongOrdering { index, value });
    }
    Ok(out)
}

/// The matrices relating coordinates before and after one subdivision:
/// `b1 = b_perm * P` and `b_perm = b1 * Q`, with `Q * P = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdivisionMatrices {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl SubdivisionMatrices {
    pub fn new(n: usize) -> Self {
        let p = DMatrix::from_fn(n + 1, n + 1, |r, c| {
            if r == c {
                (r + 1) as f64
            } else if r == c + 1 {
                -((c + 1) as f64)
            } else {
                0.0
            }
        });
        let q = DMatrix::from_fn(n + 1, n + 1, |r, c| {
            if c <= r {
                1.0 / (r + 1) as f64
            } else {
                0.0
            }
        });
        Self { p, q }
    }

    /// Recovers the permuted parent coordinates `b1 * Q`.
    pub fn reconstruct(&self, b1: &[f64]) -> Vec<f64> {
        let row = DMatrix::from_row_slice(1, b1.len(), b1);
        (row * &self.q).iter().copied().collect()
    }
}

/// Level-(k+1) keys of the maximal simplex named by `ord` inside the level-k
/// simplex whose vertices are `parent_keys`.
pub fn child_vertex_keys(ord: &Ordering, parent_keys: &[VertexKey]) -> Vec<VertexKey> {
    let perm = ord.as_slice();
    debug_assert_eq!(perm.len(), parent_keys.len());
    (0..perm.len())
        .map(|j| VertexKey::face(perm[..=j].iter().map(|&i| parent_keys[i].clone())))
        .collect()
}

/// A point located in `Sd^level`: the containing maximal simplex and the
/// point's coordinates with respect to it. Zero coordinates are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub level: usize,
    pub keys: Vec<VertexKey>,
    pub coefficients: Vec<f64>,
}

/// Locates `x` by iterating ordering, child keys and coordinate transport
/// `level` times starting from the enclosing simplex.
pub fn locate(simplex: &EnclosingSimplex, x: &[f64], level: usize) -> Result<Located> {
    locate_with(simplex, x, level, locate_ordering)
}

/// [`locate`] with a caller-supplied choice of ordering at every level.
pub fn locate_with<F>(
    simplex: &EnclosingSimplex,
    x: &[f64],
    level: usize,
    mut choose: F,
) -> Result<Located>
where
    F: FnMut(&[f64]) -> Result<Ordering>,
{
    let mut coords = simplex.barycentric_from_ambient(x)?;
    if let Some((index, &value)) = coords.iter().enumerate().find(|(_, &v)| v < -DEFAULT_TOL) {
        return Err(SimapError::OutsideSimplex { index, value });
    }
    let mut keys: Vec<VertexKey> = (0..coords.len()).map(VertexKey::Base).collect();
    for _ in 0..level {
        let ord = choose(&coords)?;
        keys = child_vertex_keys(&ord, &keys);
        coords = subdivide_coords(&coords, &ord)?;
    }
    Ok(Located {
        level,
        keys,
        coefficients: coords,
    })
}

/// Barycentric coordinates of a point with respect to `Sd^level`, stored as
/// the `n+1` vertices of the containing simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseActivation {
    pub level: usize,
    pub entries: Vec<(VertexId, f64)>,
}

impl SparseActivation {
    /// Expands into a dense vector indexed by `order` (keys resolved through
    /// `interner`); vertices outside the support get 0.
    pub fn to_dense(&self, interner: &VertexInterner, order: &[VertexKey]) -> Vec<f64> {
        let mut dense = vec![0.0; order.len()];
        for &(id, c) in &self.entries {
            let key = interner.key(id);
            if let Some(pos) = order.iter().position(|k| k == key) {
                dense[pos] += c;
            }
        }
        dense
    }
}

pub fn activation(
    x: &[f64],
    level: usize,
    simplex: &EnclosingSimplex,
    interner: &mut VertexInterner,
) -> Result<SparseActivation> {
    let located = locate(simplex, x, level)?;
    Ok(intern_located(&located, interner))
}

pub fn intern_located(located: &Located, interner: &mut VertexInterner) -> SparseActivation {
    let entries = located
        .keys
        .iter()
        .zip(&located.coefficients)
        .map(|(k, &c)| (interner.intern(k).0, c))
        .collect();
    SparseActivation {
        level: located.level,
        entries,
    }
}

/// Ambient position of a subdivision vertex: base keys are simplex vertices,
/// face keys the mean of their children.
pub fn vertex_ambient_position(key: &VertexKey, simplex: &EnclosingSimplex) -> Vec<f64> {
    match key {
        VertexKey::Base(i) => simplex.vertex(*i),
        VertexKey::Face(children) => {
            let mut acc = vec![0.0; simplex.dim()];
            for child in children {
                for (a, v) in acc.iter_mut().zip(vertex_ambient_position(child, simplex)) {
                    *a += v;
                }
            }
            let m = children.len() as f64;
            acc.iter_mut().for_each(|a| *a /= m);
            acc
        }
    }
}

/// Number of maximal simplices of `Sd^k` of an `n`-simplex, and the vertex
/// count of `Sd^1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Census {
    pub maximal_simplices: u128,
    pub level_one_vertices: u128,
}

pub(crate) fn factorial(m: usize) -> Result<u128> {
    (1..=m as u128).try_fold(1u128, |acc, i| {
        acc.checked_mul(i).ok_or_else(|| SimapError::Overflow {
            what: format!("{m}!"),
        })
    })
}

pub fn subdivision_census(n: usize, k: usize) -> Result<Census> {
    if n == 0 {
        return Err(SimapError::ZeroDimension);
    }
    let per_level = factorial(n + 1)?;
    let overflow = || SimapError::Overflow {
        what: format!("(({n}+1)!)^{k}"),
    };
    let exp = u32::try_from(k).map_err(|_| overflow())?;
    let maximal_simplices = per_level.checked_pow(exp).ok_or_else(overflow)?;
    let level_one_vertices = u32::try_from(n + 1)
        .ok()
        .and_then(|e| 2u128.checked_pow(e))
        .map(|v| v - 1)
        .ok_or_else(|| SimapError::Overflow {
            what: format!("2^({n}+1) - 1"),
        })?;
    Ok(Census {
        maximal_simplices,
        level_one_vertices,
    })
}

/// All `2^(n+1) - 1` vertices of `Sd^1` of an `n`-simplex in canonical order.
pub fn level_one_vertices(n: usize) -> Vec<VertexKey> {
    let mut keys: Vec<VertexKey> = (1u64..(1 << (n + 1)))
        .map(|mask| VertexKey::face((0..=n).filter(|i| mask >> i & 1 == 1).map(VertexKey::Base)))
        .collect();
    keys.sort();
    keys
}
