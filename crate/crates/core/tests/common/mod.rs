//! Test oracles built without the library's fast paths.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use simap::VertexKey;

/// Every permutation of `0..m`, lexicographic.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Enclosing simplex written out by hand: the origin and `n e_i`.
pub fn base_vertices(n: usize) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; n]];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = n as f64;
        v.push(e);
    }
    v
}

/// A maximal simplex of `Sd^k` given by vertex keys and explicit positions.
#[derive(Debug, Clone)]
pub struct OracleSimplex {
    pub keys: Vec<VertexKey>,
    pub positions: Vec<Vec<f64>>,
}

/// Explicit `Sd^k`: every chain of faces, with barycenters computed from
/// the vertex positions of the enclosing maximal simplex.
pub struct BruteSubdivision {
    pub n: usize,
    pub simplices: Vec<OracleSimplex>,
}

impl BruteSubdivision {
    pub fn new(n: usize, k: usize) -> Self {
        let base = OracleSimplex {
            keys: (0..=n).map(VertexKey::Base).collect(),
            positions: base_vertices(n),
        };
        let perms = permutations(n + 1);
        let mut simplices = vec![base];
        for _ in 0..k {
            let mut next = Vec::with_capacity(simplices.len() * perms.len());
            for s in &simplices {
                for p in &perms {
                    let mut keys = Vec::with_capacity(n + 1);
                    let mut positions = Vec::with_capacity(n + 1);
                    for j in 0..=n {
                        let face = &p[..=j];
                        keys.push(VertexKey::face(face.iter().map(|&i| s.keys[i].clone())));
                        let mut c = vec![0.0; n];
                        for &i in face {
                            for (a, v) in c.iter_mut().zip(&s.positions[i]) {
                                *a += v;
                            }
                        }
                        c.iter_mut().for_each(|v| *v /= face.len() as f64);
                        positions.push(c);
                    }
                    next.push(OracleSimplex { keys, positions });
                }
            }
            simplices = next;
        }
        Self { n, simplices }
    }

    /// Vertex positions by key, checking that every occurrence of a key
    /// sits at the same place.
    pub fn vertex_positions(&self) -> HashMap<VertexKey, Vec<f64>> {
        let mut map: HashMap<VertexKey, Vec<f64>> = HashMap::new();
        for s in &self.simplices {
            for (key, pos) in s.keys.iter().zip(&s.positions) {
                let prev = map.entry(key.clone()).or_insert_with(|| pos.clone());
                for (a, b) in prev.iter().zip(pos) {
                    assert!((a - b).abs() < 1e-12, "vertex {key} at two places");
                }
            }
        }
        map
    }

    /// Solves for the coordinates of `x` in every maximal simplex and
    /// returns those of the first one containing it.
    pub fn coordinates(&self, x: &[f64]) -> Option<HashMap<VertexKey, f64>> {
        let n = self.n;
        let rhs = DVector::from_iterator(n + 1, x.iter().copied().chain(std::iter::once(1.0)));
        for s in &self.simplices {
            let a = DMatrix::from_fn(
                n + 1,
                n + 1,
                |r, c| if r < n { s.positions[c][r] } else { 1.0 },
            );
            let Some(lambda) = a.lu().solve(&rhs) else {
                continue;
            };
            if lambda.iter().all(|&l| l >= -1e-12) {
                return Some(s.keys.iter().cloned().zip(lambda.iter().copied()).collect());
            }
        }
        None
    }
}

/// Uniform point of `[0,1]^n`.
pub fn cube_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Uniform point of the enclosing simplex (sorted-uniform spacings).
pub fn simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let b: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    // b[0] weights the origin; the rest scale n e_i
    b[1..].iter().map(|v| v * n as f64).collect()
}

/// Cross-entropy of `sum_t coeffs[t] * rows[t]` against `onehot`, written
/// out densely.
pub fn dense_loss(rows: &[Vec<f64>], coeffs: &[f64], onehot: &[f64]) -> f64 {
    let classes = onehot.len();
    let z: Vec<f64> = (0..classes)
        .map(|j| rows.iter().zip(coeffs).map(|(r, c)| r[j] * c).sum())
        .collect();
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    onehot.iter().zip(&z).map(|(l, zj)| -l * (zj - lse)).sum()
}
