//! Riemannian data of `α` at a chart point: metric, inverse, Lévi-Civita
//! Christoffel symbols, the raised one-form `β♯` and its covariant
//! derivatives, projections along `β♯`, and orthonormal frames.

mod tensor;

pub use tensor::{tensor12_norm_sq, Basis, Tensor12};

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::expr::{self, EvalError, Expression, ParseError};
use crate::tolerance::RIEMANNIAN_LENGTH_SQ;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("{what}: expected {expected} entries, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cannot parse {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("cannot evaluate {field} at {point:?}: {source}")]
    Eval {
        field: String,
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("empty or inverted domain box along axis {0}")]
    InvalidDomain(usize),
    #[error("point {0:?} lies outside the domain box")]
    OutsideDomain(Vec<f64>),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("β♯ vanishes at this point; no β-direction")]
    DegenerateBeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DomainBox {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.min.len()
            && p
                .iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Affine image of a unit-cube point.
    pub fn map_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }
}

/// A Riemannian metric and a one-form given by coordinate expressions on a
/// box-shaped chart domain.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    dim: usize,
    /// Upper triangle, row-major: `(0,0), (0,1), …, (0,n-1), (1,1), …`.
    metric: Vec<Expression>,
    beta: Vec<Expression>,
    domain: DomainBox,
}

impl FieldSpec {
    /// `metric` is a full `n × n` array of expression strings of which only
    /// the upper triangle is read.
    pub fn new<S: AsRef<str>>(
        dim: usize,
        metric: &[Vec<S>],
        beta: &[S],
        domain: DomainBox,
    ) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::DimensionTooSmall(dim));
        }
        check_len("metric rows", dim, metric.len())?;
        check_len("beta", dim, beta.len())?;
        check_len("domain.min", dim, domain.min.len())?;
        check_len("domain.max", dim, domain.max.len())?;
        for (axis, (lo, hi)) in domain.min.iter().zip(&domain.max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::InvalidDomain(axis));
            }
        }
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, row) in metric.iter().enumerate() {
            check_len("metric row", dim, row.len())?;
            for (j, text) in row.iter().enumerate().skip(i) {
                upper.push(parse_field(&format!("metric[{i}][{j}]"), text.as_ref(), dim)?);
            }
        }
        let beta = beta
            .iter()
            .enumerate()
            .map(|(i, text)| parse_field(&format!("beta[{i}]"), text.as_ref(), dim))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            dim,
            metric: upper,
            beta,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expression {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.metric[i * self.dim - i * (i + 1) / 2 + j]
    }

    pub fn beta_component(&self, i: usize) -> &Expression {
        &self.beta[i]
    }

    /// Every expression with a label, metric upper triangle first.
    pub fn expressions(&self) -> Vec<(String, &Expression)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i..self.dim {
                out.push((format!("metric[{i}][{j}]"), self.metric_entry(i, j)));
            }
        }
        for (i, b) in self.beta.iter().enumerate() {
            out.push((format!("beta[{i}]"), b));
        }
        out
    }

    /// `g(p)` and `β(p)` with their directional derivatives along `dir`.
    fn eval_fields(
        &self,
        p: &[f64],
        dir: &[f64],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>), GeometryError> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (v, d) = self
                    .metric_entry(i, j)
                    .eval_dual(p, dir)
                    .map_err(|source| GeometryError::Eval {
                        field: format!("metric[{i}][{j}]"),
                        point: p.to_vec(),
                        source,
                    })?;
                g[(i, j)] = v;
                g[(j, i)] = v;
                dg[(i, j)] = d;
                dg[(j, i)] = d;
            }
        }
        let mut beta = DVector::zeros(n);
        let mut dbeta = DVector::zeros(n);
        for i in 0..n {
            let (v, d) =
                self.beta[i]
                    .eval_dual(p, dir)
                    .map_err(|source| GeometryError::Eval {
                        field: format!("beta[{i}]"),
                        point: p.to_vec(),
                        source,
                    })?;
            beta[i] = v;
            dbeta[i] = d;
        }
        Ok((g, dg, beta, dbeta))
    }

    /// `g(p)` alone, without domain checks.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let zeros = vec![0.0; self.dim];
        self.eval_fields(p, &zeros).map(|(g, ..)| g)
    }

    /// Raised one-form `β♯(q)` together with its directional derivative
    /// `D β♯(q)·dir`, from `∂β♯ = g⁻¹(∂β − ∂g β♯)`.
    pub fn beta_sharp_dual(
        &self,
        q: &[f64],
        dir: &[f64],
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>), GeometryError> {
        let (g, dg, beta, dbeta) = self.eval_fields(q, dir)?;
        let chol = Cholesky::new(g).ok_or_else(|| GeometryError::NotPositiveDefinite(q.to_vec()))?;
        let sharp = chol.solve(&beta);
        let dsharp = chol.solve(&(&dbeta - &dg * &sharp));
        Ok((beta, dbeta, sharp, dsharp))
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), GeometryError> {
    if expected == got {
        Ok(())
    } else {
        Err(GeometryError::Shape {
            what,
            expected,
            got,
        })
    }
}

fn parse_field(field: &str, text: &str, dim: usize) -> Result<Expression, GeometryError> {
    expr::parse(text, dim, false).map_err(|source| GeometryError::Parse {
        field: field.to_string(),
        source,
    })
}

/// Everything the constructions need at one point.
#[derive(Debug, Clone)]
pub struct PointState {
    pub point: DVector<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `dg[i]` holds `∂_i g`.
    pub dg: Vec<DMatrix<f64>>,
    /// Lévi-Civita coefficients: `christoffel.get(i, j, k) = Γ*^k_{ij}`.
    pub christoffel: Tensor12,
    /// Lowered components `β_i`.
    pub beta: DVector<f64>,
    /// Entry `(i, j)` is `∂_i β_j`.
    pub beta_partials: DMatrix<f64>,
    /// `β^k = g^{kj} β_j`.
    pub beta_sharp: DVector<f64>,
    /// Column `i` is `∇*_{∂_i} β♯`.
    pub nabla_beta_sharp: DMatrix<f64>,
    /// `α(β♯, β♯)`.
    pub length_sq: f64,
    /// `∂_i α(β♯, β♯)` from raw partial derivatives (no Christoffel symbols).
    pub length_sq_partials: DVector<f64>,
}

/// Evaluate the Riemannian data at `p`.
pub fn point_state(spec: &FieldSpec, p: &[f64]) -> Result<PointState, GeometryError> {
    let n = spec.dim;
    check_len("point", n, p.len())?;
    if !spec.domain.contains(p) {
        return Err(GeometryError::OutsideDomain(p.to_vec()));
    }

    let mut g = DMatrix::zeros(n, n);
    let mut beta = DVector::zeros(n);
    let mut dg = Vec::with_capacity(n);
    let mut beta_partials = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut dir = vec![0.0; n];
        dir[i] = 1.0;
        let (gi, dgi, b, db) = spec.eval_fields(p, &dir)?;
        g = gi;
        beta = b;
        dg.push(dgi);
        beta_partials.set_row(i, &db.transpose());
    }

    let chol =
        Cholesky::new(g.clone()).ok_or_else(|| GeometryError::NotPositiveDefinite(p.to_vec()))?;
    let inv = chol.inverse();
    let g_inv = 0.5 * (&inv + inv.transpose());

    // Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first_kind = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                first_kind[(i * n + j) * n + l] =
                    0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
            }
        }
    }
    let mut christoffel = Tensor12::zeros(n, Basis::Chart);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let v: f64 = (0..n)
                    .map(|l| g_inv[(k, l)] * first_kind[(i * n + j) * n + l])
                    .sum();
                christoffel.set(i, j, k, v);
                christoffel.set(j, i, k, v);
            }
        }
    }

    let beta_sharp = &g_inv * &beta;
    let mut nabla_beta_sharp = DMatrix::zeros(n, n);
    let mut length_sq_partials = DVector::zeros(n);
    for i in 0..n {
        let dbeta = beta_partials.row(i).transpose();
        let dsharp = &g_inv * (&dbeta - &dg[i] * &beta_sharp);
        length_sq_partials[i] = dbeta.dot(&beta_sharp) + beta.dot(&dsharp);
        for k in 0..n {
            let conn: f64 = (0..n).map(|j| christoffel.get(i, j, k) * beta_sharp[j]).sum();
            nabla_beta_sharp[(k, i)] = dsharp[k] + conn;
        }
    }
    let length_sq = beta.dot(&beta_sharp);

    Ok(PointState {
        point: DVector::from_column_slice(p),
        g,
        g_inv,
        dg,
        christoffel,
        beta,
        beta_partials,
        beta_sharp,
        nabla_beta_sharp,
        length_sq,
        length_sq_partials,
    })
}

impl PointState {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    /// `β(v) = β_i v^i`.
    pub fn beta_of(&self, v: &DVector<f64>) -> f64 {
        self.beta.dot(v)
    }

    /// `∇*_X β♯`.
    pub fn nabla_beta_sharp_along(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.nabla_beta_sharp * x
    }

    /// `K = |β♯|_α`.
    pub fn k(&self) -> f64 {
        self.length_sq.max(0.0).sqrt()
    }

    pub fn is_riemannian(&self) -> bool {
        self.length_sq <= RIEMANNIAN_LENGTH_SQ
    }

    pub fn basis_vector(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        e[i] = 1.0;
        e
    }
}

/// Split `Y = Y⊥ + Y^β` with `Y^β = α(Y,β♯)/K² · β♯`.
pub fn project(
    ps: &PointState,
    y: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), GeometryError> {
    if ps.is_riemannian() {
        return Err(GeometryError::DegenerateBeta);
    }
    let y_beta = &ps.beta_sharp * (ps.beta_of(y) / ps.length_sq);
    Ok((y - &y_beta, y_beta))
}

/// Columns are `α`-orthonormal vectors in chart components.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub vectors: DMatrix<f64>,
    /// Set when the last column is `β♯/K`.
    pub adapted: bool,
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, a: usize) -> DVector<f64> {
        self.vectors.column(a).into_owned()
    }

    /// `E^T g E`, the identity for a valid frame.
    pub fn gram(&self, ps: &PointState) -> DMatrix<f64> {
        self.vectors.transpose() * &ps.g * &self.vectors
    }
}

fn gram_schmidt_push(ps: &PointState, basis: &[DVector<f64>], v: DVector<f64>) -> DVector<f64> {
    let mut w = v;
    // two passes keep the Gram matrix at rounding level
    for _ in 0..2 {
        for e in basis {
            let c = ps.inner(e, &w);
            w -= e * c;
        }
    }
    let norm = ps.inner(&w, &w).sqrt();
    w / norm
}

/// Gram–Schmidt of the coordinate basis in index order.
pub fn orthonormal_frame(ps: &PointState) -> Frame {
    let n = ps.dim();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let e = gram_schmidt_push(ps, &basis, ps.basis_vector(i));
        basis.push(e);
    }
    Frame {
        vectors: DMatrix::from_columns(&basis),
        adapted: false,
    }
}

/// Orthonormal frame with `e_n = β♯/K`. The remaining vectors come from
/// Gram–Schmidt of the coordinate vectors in index order, skipping the one
/// with the largest `|α(∂_i, β♯)|`.
pub fn adapted_frame(ps: &PointState) -> Result<Frame, GeometryError> {
    if ps.is_riemannian() {
        return Err(GeometryError::DegenerateBeta);
    }
    let n = ps.dim();
    let unit = &ps.beta_sharp / ps.k();
    let pivot = (0..n)
        .max_by(|&a, &b| ps.beta[a].abs().total_cmp(&ps.beta[b].abs()).then(b.cmp(&a)))
        .expect("dimension >= 2");
    let mut basis = vec![unit.clone()];
    for i in (0..n).filter(|&i| i != pivot) {
        let e = gram_schmidt_push(ps, &basis, ps.basis_vector(i));
        basis.push(e);
    }
    basis.rotate_left(1);
    Ok(Frame {
        vectors: DMatrix::from_columns(&basis),
        adapted: true,
    })
}
