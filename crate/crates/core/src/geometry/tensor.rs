use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{Frame, PointState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Chart,
    Frame,
}

/// Components `S^k_{ij}` of a (1,2)-tensor at a point: `i` is the direction
/// slot `X`, `j` the argument slot `Y`, `k` the output. Stored row-major in
/// `(i, j, k)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor12 {
    dim: usize,
    data: Vec<f64>,
    basis: Basis,
}

/// Serialized as `{basis, dimension, components}` with `components[i][j][k]`.
impl Serialize for Tensor12 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.dim;
        let nested: Vec<Vec<&[f64]>> = (0..n)
            .map(|i| (0..n).map(|j| &self.data[(i * n + j) * n..(i * n + j + 1) * n]).collect())
            .collect();
        let mut st = serializer.serialize_struct("Tensor12", 3)?;
        st.serialize_field("basis", &self.basis)?;
        st.serialize_field("dimension", &n)?;
        st.serialize_field("components", &nested)?;
        st.end()
    }
}

impl Tensor12 {
    pub fn zeros(dim: usize, basis: Basis) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
            basis,
        }
    }

    pub fn from_fn(dim: usize, basis: Basis, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim, basis);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    /// `S(X, Y)` as a component vector.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// The endomorphism `ι_X S = S(X, ·)`; entry `(k, j)` is `S(X, ∂_j)^k`.
    pub fn slice(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| x[i] * self.get(i, j, k)).sum())
    }

    /// `S(X, Y) − S(Y, X)`.
    pub fn antisymmetrized(&self) -> Self {
        Self::from_fn(self.dim, self.basis, |i, j, k| self.get(i, j, k) - self.get(j, i, k))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
            basis: self.basis,
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "tensor dimension mismatch");
        assert_eq!(self.basis, other.basis, "tensor basis mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
            basis: self.basis,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Largest `|S(X,Y) + S(Y,X)|` component.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Largest `|α(S(X,Y),Z) + α(S(X,Z),Y)|` over basis vectors.
    pub fn skewness_residual(&self, ps: &PointState) -> f64 {
        let lowered = self.lowered(ps);
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((lowered[(i * n + j) * n + k] + lowered[(i * n + k) * n + j]).abs());
                }
            }
        }
        worst
    }

    /// `α(S(e_i, e_j), e_k)` in the tensor's own basis.
    fn lowered(&self, ps: &PointState) -> Vec<f64> {
        let n = self.dim;
        match self.basis {
            Basis::Frame => self.data.clone(),
            Basis::Chart => {
                let mut out = vec![0.0; n * n * n];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            out[(i * n + j) * n + k] =
                                (0..n).map(|r| self.get(i, j, r) * ps.g[(r, k)]).sum();
                        }
                    }
                }
                out
            }
        }
    }

    /// Frame components `α(S(e_a, e_b), e_c)` of a chart tensor.
    pub fn to_frame(&self, ps: &PointState, frame: &Frame) -> Self {
        assert_eq!(self.basis, Basis::Chart, "already in frame basis");
        let n = self.dim;
        let e = &frame.vectors;
        let ge = &ps.g * e;
        Self::from_fn(n, Basis::Frame, |a, b, c| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let w = e[(i, a)] * e[(j, b)];
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        s += w * self.get(i, j, k) * ge[(k, c)];
                    }
                }
            }
            s
        })
    }

    /// Chart components of a tensor given by frame components.
    pub fn to_chart(&self, ps: &PointState, frame: &Frame) -> Self {
        assert_eq!(self.basis, Basis::Frame, "already in chart basis");
        let n = self.dim;
        let e = &frame.vectors;
        // rows of E^T g are the dual coframe
        let coframe = e.transpose() * &ps.g;
        Self::from_fn(n, Basis::Chart, |i, j, k| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let w = coframe[(a, i)] * coframe[(b, j)];
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..n {
                        s += w * self.get(a, b, c) * e[(k, c)];
                    }
                }
            }
            s
        })
    }
}

/// `|T|² = g^{ip} g^{jq} g_{kr} T^k_{ij} T^r_{pq}`; plain sum of squares for
/// frame components.
pub fn tensor12_norm_sq(ps: &PointState, t: &Tensor12) -> f64 {
    assert_eq!(t.dim(), ps.dim(), "tensor dimension mismatch");
    if t.basis() == Basis::Frame {
        return t.as_slice().iter().map(|v| v * v).sum();
    }
    let n = t.dim();
    let gi = &ps.g_inv;
    let g = &ps.g;
    // raise the direction and argument slots, lower nothing: T^{k, i j}
    let mut raised = vec![0.0; n * n * n];
    for p in 0..n {
        for q in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += gi[(i, p)] * gi[(j, q)] * t.get(i, j, k);
                    }
                }
                raised[(p * n + q) * n + k] = s;
            }
        }
    }
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            for k in 0..n {
                for r in 0..n {
                    total += g[(k, r)] * raised[(p * n + q) * n + k] * t.get(p, q, r);
                }
            }
        }
    }
    total
}
