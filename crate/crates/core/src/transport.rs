//! Parallel transport along parametrized curves with classic fixed-step RK4,
//! tracking how well `α(v,v)`, `β(v)` and `F(v)` are preserved.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::connection::{self, ConnectionError};
use crate::examples::CurveDef;
use crate::expr::{self, Dual, EvalError, Expression, ParseError};
use crate::geometry::{point_state, FieldSpec, GeometryError, PointState, Tensor12};
use crate::randers::randers_norm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("curve needs {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("curve component {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("curve component {index} at t = {t}: {source}")]
    Eval {
        index: usize,
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error("invalid parameter interval [{0}, {1}]")]
    Interval(f64, f64),
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("curve leaves the domain at t = {t}: {point:?}")]
    OutsideDomain { t: f64, point: Vec<f64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    LeviCivita,
    NablaCirc,
    Extremal,
}

impl ConnectionKind {
    pub const ALL: [ConnectionKind; 3] = [
        ConnectionKind::LeviCivita,
        ConnectionKind::NablaCirc,
        ConnectionKind::Extremal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::LeviCivita => "levi_civita",
            ConnectionKind::NablaCirc => "nabla_circ",
            ConnectionKind::Extremal => "extremal",
        }
    }

    /// Connection coefficients `Γ^k_{ij}` at a point. The Riemannian case
    /// (`β = 0`) falls back to Lévi-Civita for every kind.
    pub fn coefficients(self, ps: &PointState) -> Result<Tensor12, ConnectionError> {
        match self {
            ConnectionKind::LeviCivita => Ok(ps.christoffel.clone()),
            ConnectionKind::NablaCirc => connection::nabla_circ_coeffs(ps),
            ConnectionKind::Extremal if ps.is_riemannian() => Ok(ps.christoffel.clone()),
            ConnectionKind::Extremal => connection::extremal_coeffs(ps),
        }
    }
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnectionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConnectionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown connection `{s}`"))
    }
}

/// A curve `t ↦ γ(t)` on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct Curve {
    components: Vec<Expression>,
    pub t0: f64,
    pub t1: f64,
}

impl Curve {
    pub fn new<S: AsRef<str>>(
        components: &[S],
        dimension: usize,
        t0: f64,
        t1: f64,
    ) -> Result<Self, TransportError> {
        if components.len() != dimension {
            return Err(TransportError::Dimension {
                expected: dimension,
                got: components.len(),
            });
        }
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(TransportError::Interval(t0, t1));
        }
        let components = components
            .iter()
            .enumerate()
            .map(|(index, text)| {
                expr::parse(text.as_ref(), 0, true)
                    .map_err(|source| TransportError::Parse { index, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { components, t0, t1 })
    }

    pub fn from_def(def: &CurveDef, dimension: usize) -> Result<Self, TransportError> {
        Self::new(&def.components, dimension, def.t0, def.t1)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Position and velocity at `t`.
    pub fn at(&self, t: f64) -> Result<(Vec<f64>, DVector<f64>), TransportError> {
        let mut pos = Vec::with_capacity(self.dim());
        let mut vel = DVector::zeros(self.dim());
        for (index, c) in self.components.iter().enumerate() {
            let d = c
                .eval_with_param(&[], &[], Dual::new(t, 1.0))
                .map_err(|source| TransportError::Eval { index, t, source })?;
            pos.push(d.re);
            vel[index] = d.eps;
        }
        Ok((pos, vel))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub connection: ConnectionKind,
    pub final_vector: Vec<f64>,
    pub steps: usize,
    pub drift_alpha: f64,
    pub drift_beta: f64,
    pub drift_f: f64,
}

struct Invariants {
    alpha: f64,
    beta: f64,
    f: f64,
}

fn invariants(ps: &PointState, v: &DVector<f64>) -> Invariants {
    Invariants {
        alpha: ps.inner(v, v),
        beta: ps.beta_of(v),
        f: randers_norm(ps, v),
    }
}

fn state_on_curve(
    spec: &FieldSpec,
    curve: &Curve,
    t: f64,
) -> Result<(PointState, DVector<f64>), TransportError> {
    let (pos, vel) = curve.at(t)?;
    if !spec.domain().contains(&pos) {
        return Err(TransportError::OutsideDomain { t, point: pos });
    }
    Ok((point_state(spec, &pos)?, vel))
}

/// Integrate `v′ = −Γ(γ′, v)` from `v(t0) = v0` with `steps` RK4 steps.
pub fn parallel_transport(
    spec: &FieldSpec,
    curve: &Curve,
    v0: &DVector<f64>,
    kind: ConnectionKind,
    steps: usize,
) -> Result<TransportResult, TransportError> {
    if steps == 0 {
        return Err(TransportError::ZeroSteps);
    }
    let n = spec.dim();
    for got in [curve.dim(), v0.len()] {
        if got != n {
            return Err(TransportError::Dimension { expected: n, got });
        }
    }

    let rhs = |t: f64, v: &DVector<f64>| -> Result<DVector<f64>, TransportError> {
        let (ps, vel) = state_on_curve(spec, curve, t)?;
        let gamma = kind.coefficients(&ps)?;
        Ok(-gamma.apply(&vel, v))
    };

    let h = (curve.t1 - curve.t0) / steps as f64;
    let (ps0, _) = state_on_curve(spec, curve, curve.t0)?;
    let start = invariants(&ps0, v0);
    let (mut drift_alpha, mut drift_beta, mut drift_f) = (0.0f64, 0.0f64, 0.0f64);
    let mut v = v0.clone();

    for step in 0..steps {
        let t = curve.t0 + step as f64 * h;
        let k1 = rhs(t, &v)?;
        let k2 = rhs(t + 0.5 * h, &(&v + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&v + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&v + &k3 * h))?;
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        let t_next = if step + 1 == steps {
            curve.t1
        } else {
            curve.t0 + (step + 1) as f64 * h
        };
        let (ps, _) = state_on_curve(spec, curve, t_next)?;
        let now = invariants(&ps, &v);
        drift_alpha = drift_alpha.max((now.alpha - start.alpha).abs());
        drift_beta = drift_beta.max((now.beta - start.beta).abs());
        drift_f = drift_f.max((now.f - start.f).abs());
    }

    Ok(TransportResult {
        connection: kind,
        final_vector: v.as_slice().to_vec(),
        steps,
        drift_alpha,
        drift_beta,
        drift_f,
    })
}
