//! Closed-form compatible connections.
//!
//! With `K² = α(β♯,β♯)` constant, the difference tensor
//!
//! ```text
//! A(X,Y) = α(∇*_X β♯, Y)/K² · β♯ − α(Y, β♯)/K² · ∇*_X β♯
//! ```
//!
//! gives the compatible connection `∇° = ∇* + A` with torsion
//! `T°(X,Y) = A(X,Y) − A(Y,X)`. The extremal compatible connection
//! `∇° + B` has torsion `T = T° + Ω`, where
//!
//! ```text
//! α(Ω(X,Y),Z) = [β(Y) dβ(X,Z) − β(X) dβ(Y,Z)] / 2K²
//!             + [β(X) dβ(Y,β♯) − β(Y) dβ(X,β♯)] β(Z) / 2K⁴
//! ```
//!
//! Conventions: `T(X,Y) = ∇_X Y − ∇_Y X − [X,Y]` and
//! `dβ(X,Y) = Xβ(Y) − Yβ(X) − β([X,Y])` (no ½).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{point_state, Basis, FieldSpec, Frame, GeometryError, PointState};
pub use crate::geometry::Tensor12;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("|β♯|² is not stationary at this point (gradient {0:e}); no compatible connection")]
    NonConstantLength(f64),
    #[error("β♯ vanishes (Riemannian case)")]
    Riemannian,
    #[error("frame is not adapted to β♯")]
    NotAdapted,
    #[error("chart is not orthonormal with β♯ along a coordinate axis at this point")]
    NotAdaptedCoordinates,
}

fn require_stationary_length(ps: &PointState) -> Result<(), ConnectionError> {
    let grad = ps.length_sq_partials.amax();
    if grad > Tolerances::default().feasibility {
        Err(ConnectionError::NonConstantLength(grad))
    } else {
        Ok(())
    }
}

fn require_beta(ps: &PointState) -> Result<(), ConnectionError> {
    if ps.is_riemannian() {
        Err(ConnectionError::Riemannian)
    } else {
        Ok(())
    }
}

/// Raise the last slot of lowered components `w[(i*n + j)*n + z] = α(S(∂_i,∂_j),∂_z)`.
fn raise_last(ps: &PointState, lowered: &[f64]) -> Tensor12 {
    let n = ps.dim();
    Tensor12::from_fn(n, Basis::Chart, |i, j, k| {
        (0..n)
            .map(|z| ps.g_inv[(k, z)] * lowered[(i * n + j) * n + z])
            .sum()
    })
}

/// Difference tensor `A` of `∇°` in chart components; zero when `β = 0`.
pub fn difference_tensor(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    let n = ps.dim();
    if ps.is_riemannian() {
        return Ok(Tensor12::zeros(n, Basis::Chart));
    }
    require_stationary_length(ps)?;
    let k2 = ps.length_sq;
    let nabla = &ps.nabla_beta_sharp;
    // lowered(j, i) = α(∇*_{∂i} β♯, ∂j)
    let lowered = &ps.g * nabla;
    Ok(Tensor12::from_fn(n, Basis::Chart, |i, j, k| {
        (lowered[(j, i)] * ps.beta_sharp[k] - ps.beta[j] * nabla[(k, i)]) / k2
    }))
}

/// `Γ°^k_{ij} = Γ*^k_{ij} + A^k_{ij}`.
pub fn nabla_circ_coeffs(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    Ok(ps.christoffel.add(&difference_tensor(ps)?))
}

/// Torsion `T°` of `∇°`.
pub fn torsion_circ(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    Ok(difference_tensor(ps)?.antisymmetrized())
}

/// `dβ(∂_i, ∂_j) = α(∇*_{∂i}β♯, ∂_j) − α(∇*_{∂j}β♯, ∂_i)`.
pub fn dbeta(ps: &PointState) -> DMatrix<f64> {
    let lowered = &ps.g * &ps.nabla_beta_sharp;
    DMatrix::from_fn(ps.dim(), ps.dim(), |i, j| lowered[(j, i)] - lowered[(i, j)])
}

/// `dβ(∂_i, ∂_j) = ∂_i β_j − ∂_j β_i` straight from the partial derivatives.
pub fn exterior_derivative(ps: &PointState) -> DMatrix<f64> {
    let p = &ps.beta_partials;
    p - p.transpose()
}

pub fn omega(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    require_beta(ps)?;
    let n = ps.dim();
    let k2 = ps.length_sq;
    let d = dbeta(ps);
    let d_sharp: DVector<f64> = &d * &ps.beta_sharp;
    let b = &ps.beta;
    let mut lowered = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for z in 0..n {
                lowered[(i * n + j) * n + z] = (b[j] * d[(i, z)] - b[i] * d[(j, z)]) / (2.0 * k2)
                    + (b[i] * d_sharp[j] - b[j] * d_sharp[i]) * b[z] / (2.0 * k2 * k2);
            }
        }
    }
    Ok(raise_last(ps, &lowered))
}

/// Torsion of the extremal compatible connection, `T° + Ω`.
pub fn extremal_torsion(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    require_beta(ps)?;
    Ok(torsion_circ(ps)?.add(&omega(ps)?))
}

/// The tensor `B` of the extremal connection `∇° + B`:
/// `α(B(X,Y),Z) = −β(X)/(2K²) · dβ(Y⊥, Z⊥)`.
pub fn recover_b(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    require_beta(ps)?;
    let n = ps.dim();
    let k2 = ps.length_sq;
    let proj = DMatrix::identity(n, n) - &ps.beta_sharp * ps.beta.transpose() / k2;
    let d_perp = proj.transpose() * dbeta(ps) * &proj;
    let mut lowered = vec![0.0; n * n * n];
    for i in 0..n {
        let w = -ps.beta[i] / (2.0 * k2);
        for j in 0..n {
            for z in 0..n {
                lowered[(i * n + j) * n + z] = w * d_perp[(j, z)];
            }
        }
    }
    Ok(raise_last(ps, &lowered))
}

/// Coefficients `Γ* + A + B` of the extremal compatible connection.
pub fn extremal_coeffs(ps: &PointState) -> Result<Tensor12, ConnectionError> {
    Ok(nabla_circ_coeffs(ps)?.add(&recover_b(ps)?))
}

/// Extremal torsion components relative to an adapted frame
/// `e_1, …, e_{n−1}, e_n = β♯/K`; indices `a, b, c < n − 1` (zero based).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTorsionComponents {
    dim: usize,
    /// `T^c_{ab}`, flattened `(a, b, c)`.
    pub tangential: Vec<f64>,
    /// `T^n_{ab}`, entry `(a, b)`.
    pub normal: DMatrix<f64>,
    /// `T^n_{an}`.
    pub normal_mixed: DVector<f64>,
    /// `T^c_{an}`, entry `(a, c)`.
    pub tangential_mixed: DMatrix<f64>,
}

impl FrameTorsionComponents {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Full frame-basis torsion tensor.
    pub fn to_tensor(&self) -> Tensor12 {
        let n = self.dim;
        let m = n - 1;
        let mut t = Tensor12::zeros(n, Basis::Frame);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    t.set(a, b, c, self.tangential[(a * m + b) * m + c]);
                }
                t.set(a, b, m, self.normal[(a, b)]);
            }
            t.set(a, m, m, self.normal_mixed[a]);
            t.set(m, a, m, -self.normal_mixed[a]);
            for c in 0..m {
                t.set(a, m, c, self.tangential_mixed[(a, c)]);
                t.set(m, a, c, -self.tangential_mixed[(a, c)]);
            }
        }
        t
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let m = self.dim - 1;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                worst = worst.max((self.normal[(a, b)] + self.normal[(b, a)]).abs());
                for c in 0..m {
                    let ab = self.tangential[(a * m + b) * m + c];
                    let ba = self.tangential[(b * m + a) * m + c];
                    worst = worst.max((ab + ba).abs());
                }
            }
        }
        worst
    }
}

/// Extremal torsion in an adapted frame from the component conditions:
/// `α(T(e_a,e_b),e_c) = 0`,
/// `α(T(e_a,e_b),β♯) = α(∇*_{e_a}β♯,e_b) − α(∇*_{e_b}β♯,e_a)`,
/// `α(T(e_a,β♯),β♯) = −α(∇*_{β♯}β♯, e_a)`,
/// `α(T(e_a,β♯),e_c) = −½[α(∇*_{e_a}β♯,e_c) + α(e_a,∇*_{e_c}β♯)]`.
pub fn extremal_torsion_frame(
    ps: &PointState,
    frame: &Frame,
) -> Result<FrameTorsionComponents, ConnectionError> {
    require_beta(ps)?;
    let n = ps.dim();
    let k = ps.k();
    let unit = &ps.beta_sharp / k;
    if !frame.adapted || frame.dim() != n || (frame.vector(n - 1) - &unit).amax() > 1e-10 {
        return Err(ConnectionError::NotAdapted);
    }
    let m = n - 1;
    let e: Vec<DVector<f64>> = (0..m).map(|a| frame.vector(a)).collect();
    let nabla_e: Vec<DVector<f64>> = e.iter().map(|v| ps.nabla_beta_sharp_along(v)).collect();
    // s(a, b) = α(∇*_{e_a} β♯, e_b)
    let s = DMatrix::from_fn(m, m, |a, b| ps.inner(&nabla_e[a], &e[b]));
    let along_beta = ps.nabla_beta_sharp_along(&ps.beta_sharp);

    Ok(FrameTorsionComponents {
        dim: n,
        tangential: vec![0.0; m * m * m],
        normal: DMatrix::from_fn(m, m, |a, b| (s[(a, b)] - s[(b, a)]) / k),
        normal_mixed: DVector::from_fn(m, |a, _| -ps.inner(&along_beta, &e[a]) / (k * k)),
        tangential_mixed: DMatrix::from_fn(m, m, |a, c| -(s[(a, c)] + s[(c, a)]) / (2.0 * k)),
    })
}

/// The coordinate formulas for a chart that is orthonormal at `p` with
/// `β♯ = K ∂_m` for some axis `m`:
/// `T^n_{ab} = (∂_a β_b − ∂_b β_a)/K`, `T^n_{an} = Γ*^n_{an} − ∂_n β_a / K`,
/// `T^c_{an} = Γ*^n_{ac} − (∂_a β_c + ∂_c β_a)/(2K)`, `T^c_{ab} = 0`, where
/// `n` stands for `m` and `a, b, c` run over the other axes in index order.
pub fn extremal_torsion_coordinates(
    ps: &PointState,
) -> Result<FrameTorsionComponents, ConnectionError> {
    require_beta(ps)?;
    let n = ps.dim();
    let tol = 1e-10;
    if (&ps.g - DMatrix::identity(n, n)).amax() > tol {
        return Err(ConnectionError::NotAdaptedCoordinates);
    }
    let k = ps.k();
    let axis = (0..n)
        .find(|&i| (ps.beta[i] - k).abs() <= tol)
        .ok_or(ConnectionError::NotAdaptedCoordinates)?;
    if (0..n).any(|i| i != axis && ps.beta[i].abs() > tol) {
        return Err(ConnectionError::NotAdaptedCoordinates);
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != axis).collect();
    let m = n - 1;
    let dpart = &ps.beta_partials;
    let gamma = &ps.christoffel;
    Ok(FrameTorsionComponents {
        dim: n,
        tangential: vec![0.0; m * m * m],
        normal: DMatrix::from_fn(m, m, |a, b| {
            let (a, b) = (others[a], others[b]);
            (dpart[(a, b)] - dpart[(b, a)]) / k
        }),
        normal_mixed: DVector::from_fn(m, |a, _| {
            let a = others[a];
            gamma.get(a, axis, axis) - dpart[(axis, a)] / k
        }),
        tangential_mixed: DMatrix::from_fn(m, m, |a, c| {
            let (a, c) = (others[a], others[c]);
            gamma.get(a, c, axis) - (dpart[(a, c)] + dpart[(c, a)]) / (2.0 * k)
        }),
    })
}

/// Largest `|α(β♯, [E_a⊥, E_b⊥])(p)|` over pairs of projected coordinate
/// fields `E_a⊥ = ∂_a − β(∂_a) β♯ / |β♯|²`. Zero iff the distribution
/// orthogonal to `β♯` is integrable at `p`.
pub fn integrability_defect(spec: &FieldSpec, p: &[f64]) -> Result<f64, ConnectionError> {
    let ps = point_state(spec, p)?;
    require_beta(&ps)?;
    let n = ps.dim();
    let field = |a: usize| -> DVector<f64> {
        ps.basis_vector(a) - &ps.beta_sharp * (ps.beta[a] / ps.length_sq)
    };
    let fields: Vec<DVector<f64>> = (0..n).map(field).collect();

    // D E_b · w for every b, one dual pass per direction w
    let derivatives = |w: &DVector<f64>| -> Result<Vec<DVector<f64>>, GeometryError> {
        let (beta, dbeta, sharp, dsharp) = spec.beta_sharp_dual(p, w.as_slice())?;
        let len = beta.dot(&sharp);
        let dlen = dbeta.dot(&sharp) + beta.dot(&dsharp);
        Ok((0..n)
            .map(|b| {
                -(&sharp * dbeta[b] + &dsharp * beta[b]) / len
                    + &sharp * (beta[b] * dlen / (len * len))
            })
            .collect())
    };
    let along: Vec<Vec<DVector<f64>>> = fields
        .iter()
        .map(derivatives)
        .collect::<Result<_, _>>()?;

    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let bracket = &along[a][b] - &along[b][a];
            worst = worst.max(ps.inner(&ps.beta_sharp, &bracket).abs());
        }
    }
    Ok(worst)
}
