//! Brute-force solvers for the two minimum-norm problems behind the
//! closed-form connections. Everything is set up in a generic orthonormal
//! frame, where the tensor norm is the Euclidean norm of the components, and
//! solved with SVD pseudo-inverses. Nothing here calls into
//! [`crate::connection`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{orthonormal_frame, Basis, Frame, PointState, Tensor12};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("β♯ vanishes; the torsion problem needs K > 0")]
    Riemannian,
    #[error("difference-tensor problem is infeasible along frame vector {0}")]
    Infeasible(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticProgramResult {
    /// Free unknowns, flattened.
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    pub constraint_residual: f64,
}

/// Solution of `min |ι_X A|²` subject to `α`-skewness and `A(X,β♯) = −∇*_X β♯`.
#[derive(Debug, Clone)]
pub struct MinNormA {
    pub result: QuadraticProgramResult,
    /// `α(A(X,e_j),e_k)` in the oracle frame, entry `(j, k)`.
    pub frame_components: DMatrix<f64>,
    /// `ι_X A` in chart components; entry `(k, j)` is `A(X,∂_j)^k`.
    pub slice: DMatrix<f64>,
}

/// Solution of `min |T° + B(X,Y) − B(Y,X)|²` subject to `α`-skewness of `B`
/// and `B(X,β♯) = 0`.
#[derive(Debug, Clone)]
pub struct MinNormT {
    pub result: QuadraticProgramResult,
    /// Optimal `B`, chart components.
    pub b: Tensor12,
    /// Optimal torsion, chart components.
    pub torsion: Tensor12,
    /// Torsion of the difference tensor assembled from [`min_norm_a`].
    pub torsion_circ: Tensor12,
}

fn pinv(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    svd.pseudo_inverse(rank_tol * smax)
        .expect("u and v were computed")
}

/// Orthonormal basis (columns) of the null space of `m`.
fn null_space(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    // pad with zero rows so the thin SVD returns a full right basis
    let mut square = DMatrix::zeros(m.nrows().max(cols), cols);
    square.view_mut((0, 0), m.shape()).copy_from(m);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("v_t was requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= rank_tol * smax)
        .collect();
    DMatrix::from_fn(cols, keep.len(), |r, c| v_t[(keep[c], r)])
}

/// Strictly upper pairs `(j, k)`, `j < k`.
fn skew_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect()
}

fn frame_coeffs(ps: &PointState, frame: &Frame, v: &DVector<f64>) -> DVector<f64> {
    frame.vectors.transpose() * ps.lower(v)
}

pub fn min_norm_a(ps: &PointState, x: &DVector<f64>) -> MinNormA {
    min_norm_a_with(ps, x, &Tolerances::default())
}

pub fn min_norm_a_with(ps: &PointState, x: &DVector<f64>, tol: &Tolerances) -> MinNormA {
    let frame = orthonormal_frame(ps);
    min_norm_a_in(ps, &frame, x, tol)
}

fn min_norm_a_in(ps: &PointState, frame: &Frame, x: &DVector<f64>, tol: &Tolerances) -> MinNormA {
    let n = ps.dim();
    let pairs = skew_pairs(n);
    let beta_f = frame_coeffs(ps, frame, &ps.beta_sharp);
    let rhs = -frame_coeffs(ps, frame, &ps.nabla_beta_sharp_along(x));

    // row k: Σ_j β_j a_{jk} = rhs_k, with a_{jk} = u_p and a_{kj} = −u_p
    let mut c = DMatrix::zeros(n, pairs.len());
    for (p, &(j, k)) in pairs.iter().enumerate() {
        c[(k, p)] += beta_f[j];
        c[(j, p)] -= beta_f[k];
    }
    let u = pinv(&c, tol.rank) * &rhs;
    let residual = (&c * &u - &rhs).norm();

    let mut comps = DMatrix::zeros(n, n);
    for (p, &(j, k)) in pairs.iter().enumerate() {
        comps[(j, k)] = u[p];
        comps[(k, j)] = -u[p];
    }
    let coframe = frame.vectors.transpose() * &ps.g;
    let slice = &frame.vectors * comps.transpose() * coframe;

    MinNormA {
        result: QuadraticProgramResult {
            minimizer: u.as_slice().to_vec(),
            objective: comps.norm_squared(),
            feasible: residual <= tol.feasibility,
            constraint_residual: residual,
        },
        frame_components: comps,
        slice,
    }
}

pub fn min_norm_t(ps: &PointState) -> Result<MinNormT, OracleError> {
    min_norm_t_with(ps, &Tolerances::default())
}

pub fn min_norm_t_with(ps: &PointState, tol: &Tolerances) -> Result<MinNormT, OracleError> {
    if ps.is_riemannian() {
        return Err(OracleError::Riemannian);
    }
    let n = ps.dim();
    let frame = orthonormal_frame(ps);

    // a[i][j][k] = α(A(e_i,e_j),e_k), one minimum-norm problem per frame vector
    let mut a = Tensor12::zeros(n, Basis::Frame);
    for i in 0..n {
        let sol = min_norm_a_in(ps, &frame, &frame.vector(i), tol);
        if !sol.result.feasible {
            return Err(OracleError::Infeasible(i));
        }
        for j in 0..n {
            for k in 0..n {
                a.set(i, j, k, sol.frame_components[(j, k)]);
            }
        }
    }
    let t_circ = a.antisymmetrized();

    let pairs = skew_pairs(n);
    let np = pairs.len();
    let unknowns = n * np;
    let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

    // b_{ijk} as a linear function of the unknowns: (row index, unknown, sign)
    let mut b_entries = Vec::with_capacity(2 * unknowns);
    for i in 0..n {
        for (p, &(j, k)) in pairs.iter().enumerate() {
            b_entries.push((i, j, k, i * np + p, 1.0));
            b_entries.push((i, k, j, i * np + p, -1.0));
        }
    }

    // torsion residual r = t° + M u with (M u)_{ijk} = b_{ijk} − b_{jik}
    let mut m = DMatrix::zeros(n * n * n, unknowns);
    for &(i, j, k, q, s) in &b_entries {
        m[(idx3(i, j, k), q)] += s;
        m[(idx3(j, i, k), q)] -= s;
    }
    // B(e_i, β♯) = 0: Σ_j β_j b_{ijk} = 0 for every (i, k)
    let beta_f = frame_coeffs(ps, &frame, &ps.beta_sharp);
    let mut c = DMatrix::zeros(n * n, unknowns);
    for &(i, j, k, q, s) in &b_entries {
        c[(i * n + k, q)] += s * beta_f[j];
    }

    let t_vec = DVector::from_column_slice(t_circ.as_slice());
    let basis = null_space(&c, tol.rank);
    let z = -(pinv(&(&m * &basis), tol.rank) * &t_vec);
    let u = &basis * z;
    let residual = (&c * &u).norm();
    let torsion_vec = &t_vec + &m * &u;

    let mut b = Tensor12::zeros(n, Basis::Frame);
    for &(i, j, k, q, s) in &b_entries {
        b.set(i, j, k, s * u[q]);
    }
    let torsion = Tensor12::from_fn(n, Basis::Frame, |i, j, k| torsion_vec[idx3(i, j, k)]);

    Ok(MinNormT {
        result: QuadraticProgramResult {
            minimizer: u.as_slice().to_vec(),
            objective: torsion_vec.norm_squared(),
            feasible: residual <= tol.algebraic,
            constraint_residual: residual,
        },
        b: b.to_chart(ps, &frame),
        torsion: torsion.to_chart(ps, &frame),
        torsion_circ: t_circ.to_chart(ps, &frame),
    })
}
