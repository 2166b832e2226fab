//! Dense coordinate-frame arrays of rank 3 and 4 with fixed index order.

use nalgebra::DMatrix;
use serde::Serialize;

pub type Matrix = DMatrix<f64>;

/// Rank-3 array `a[a][b][c]`, e.g. Christoffel symbols stored as
/// `Γ^k_{ij} = at(k, i, j)` or a covariant cubic form `C_{ijk}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tens3 {
    n: usize,
    data: Vec<f64>,
}

impl Tens3 {
    pub fn zeros(n: usize) -> Self {
        Tens3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tens3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t.data[(a * n + b) * n + c] = f(a, b, c);
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map2(&self, other: &Tens3, f: impl Fn(f64, f64) -> f64) -> Tens3 {
        Tens3 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Nested `[a][b][c]` vectors, for JSON output.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n;
        (0..n)
            .map(|a| (0..n).map(|b| (0..n).map(|c| self.at(a, b, c)).collect()).collect())
            .collect()
    }
}

/// Rank-4 array `a[a][b][c][d]`. Curvature is stored as
/// `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l` at `at(l, k, i, j)`; derivatives of a
/// connection as `∂_m Γ^k_{ij}` at `at(m, k, i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tens4 {
    n: usize,
    data: Vec<f64>,
}

impl Tens4 {
    pub fn zeros(n: usize) -> Self {
        Tens4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Tens4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        t.data[((a * n + b) * n + c) * n + d] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let n = self.n;
        self.data[((a * n + b) * n + c) * n + d] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map2(&self, other: &Tens4, f: impl Fn(f64, f64) -> f64) -> Tens4 {
        Tens4 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Scale-normalized residual `max|a - b| / max(1, max|a|, max|b|)`.
pub fn rel_residual(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / 1f64.max(max_abs(a)).max(max_abs(b))
}

/// `g(u, v)` for a symmetric matrix `g`.
pub fn inner(g: &Matrix, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * u[i] * v[j];
        }
    }
    s
}

/// Gram–Schmidt with respect to `g`, processing the inputs in order.
/// Returns `None` if a vector is (numerically) dependent on its
/// predecessors.
pub fn gram_schmidt(g: &Matrix, vectors: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let norm0 = inner(g, v, v).sqrt();
        let mut w = v.clone();
        for e in &out {
            let c = inner(g, &w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= c * ei;
            }
        }
        let norm = inner(g, &w, &w).sqrt();
        if !(norm > 1e-10 * norm0) || norm == 0.0 {
            return None;
        }
        w.iter_mut().for_each(|wi| *wi /= norm);
        out.push(w);
    }
    Some(out)
}

pub fn matrix_to_nested(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
