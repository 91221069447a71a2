//! Verification suites. Every identity the constructions must satisfy is
//! evaluated at the configured points, and the closed forms are compared
//! with the brute-force oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::commands::{default_v0, numerical, run_criterion, Header};
use super::config::{CurveConfig, PointSelector, RunConfig};
use super::{CliError, Code, Outcome};
use crate::connection::{self, ConnectionError};
use crate::geometry::{
    adapted_frame, orthonormal_frame, point_state, tensor12_norm_sq, Basis, Frame, PointState,
    Tensor12,
};
use crate::oracle;
use crate::randers::{gb_criterion_with, randers_norm, GBReport, Verdict};
use crate::report::to_json_string;
use crate::transport::{parallel_transport, ConnectionKind, TransportError, TransportResult};

/// Identities that hold up to a few ulps.
const ROUNDING: f64 = 1e-12;
/// `|T|² = |T°|²` threshold in the integrable-distribution equivalence.
const NORM_EQUALITY: f64 = 1e-9;
/// Optimality certificates: no feasible perturbation may beat the optimum by more.
const CERTIFICATE: f64 = 1e-12;
/// Transport linearity.
const LINEARITY: f64 = 1e-10;
const PERTURBATIONS: usize = 10;
const DIRECTIONS: usize = 3;
const ORDER_STEPS: [usize; 3] = [10, 100, 1000];
/// Drift at `N` steps may exceed the fourth-order prediction from 10 steps
/// by this factor, plus the rounding floor.
const ORDER_SLACK: f64 = 1.5;
const ORDER_FLOOR: f64 = 1e-13;
const CURVE_NODES: usize = 100;
const DEFAULT_RANDOM_POINTS: usize = 20;
/// Streams of the per-point generators start here.
const POINT_STREAM_BASE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub evaluations: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone)]
struct Check {
    name: &'static str,
    tolerance: Option<f64>,
    worst: f64,
    evaluations: usize,
    failures: usize,
}

impl Check {
    /// Residual: passes when `r ≤ tolerance`; NaN fails.
    fn record(&mut self, r: f64) {
        let tol = self.tolerance.expect("residual check");
        self.evaluations += 1;
        if r.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(r);
        }
        if !(r <= tol) {
            self.failures += 1;
        }
    }

    fn holds(&mut self, ok: bool) {
        self.evaluations += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn merge(&mut self, other: &Check) {
        self.evaluations += other.evaluations;
        self.failures += other.failures;
        self.worst = if self.worst.is_nan() || other.worst.is_nan() {
            f64::NAN
        } else {
            self.worst.max(other.worst)
        };
    }

    fn result(&self) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: self.failures == 0,
            evaluations: self.evaluations,
            failures: self.failures,
            worst: self.tolerance.map(|_| self.worst),
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone)]
struct Suite {
    name: &'static str,
    skipped: Option<String>,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            skipped: None,
            checks: Vec::new(),
        }
    }

    fn skipped(name: &'static str, reason: String) -> Self {
        Self {
            skipped: Some(reason),
            ..Self::new(name)
        }
    }

    fn entry(&mut self, name: &'static str, tolerance: Option<f64>) -> &mut Check {
        let i = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(Check {
                    name,
                    tolerance,
                    worst: 0.0,
                    evaluations: 0,
                    failures: 0,
                });
                self.checks.len() - 1
            }
        };
        &mut self.checks[i]
    }

    fn residual(&mut self, name: &'static str, tolerance: f64) -> &mut Check {
        self.entry(name, Some(tolerance))
    }

    fn predicate(&mut self, name: &'static str) -> &mut Check {
        self.entry(name, None)
    }

    fn merge(&mut self, other: &Suite) {
        for c in &other.checks {
            self.entry(c.name, c.tolerance).merge(c);
        }
    }

    fn result(&self) -> SuiteResult {
        let checks: Vec<CheckResult> = self.checks.iter().map(Check::result).collect();
        SuiteResult {
            name: self.name,
            passed: checks.iter().all(|c| c.passed),
            skipped: self.skipped.clone(),
            checks,
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = random_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

fn relative(err: f64, scale: f64) -> f64 {
    err / scale.abs().max(1.0)
}

fn expressions_suite(cfg: &RunConfig, p: &[f64], rng: &mut ChaCha8Rng) -> Suite {
    let tol = &cfg.tolerances;
    let h = tol.fd_step;
    let n = p.len();
    let mut s = Suite::new("expressions");
    s.residual("dual_vs_finite_difference", tol.finite_difference);
    s.residual("direction_linearity", ROUNDING);
    for (_, e) in cfg.spec.expressions() {
        for _ in 0..DIRECTIONS {
            let u = random_direction(rng, n);
            let w = random_direction(rng, n);
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let shifted = |sign: f64| -> Vec<f64> {
                p.iter().zip(u.iter()).map(|(x, d)| x + sign * h * d).collect()
            };
            let fd = match (e.eval_dual(p, u.as_slice()), e.eval(&shifted(1.0)), e.eval(&shifted(-1.0))) {
                (Ok((_, d)), Ok(fp), Ok(fm)) => relative((d - (fp - fm) / (2.0 * h)).abs(), d),
                _ => f64::NAN,
            };
            s.residual("dual_vs_finite_difference", tol.finite_difference).record(fd);

            let combo = &u * a + &w * b;
            let lin = match (
                e.eval_dual(p, combo.as_slice()),
                e.eval_dual(p, u.as_slice()),
                e.eval_dual(p, w.as_slice()),
            ) {
                (Ok((_, dc)), Ok((_, du)), Ok((_, dw))) => {
                    relative((dc - a * du - b * dw).abs(), (a * du).abs() + (b * dw).abs())
                }
                _ => f64::NAN,
            };
            s.residual("direction_linearity", ROUNDING).record(lin);
        }
    }
    s
}

fn geometry_suite(cfg: &RunConfig, ps: &PointState, rng: &mut ChaCha8Rng) -> Suite {
    let tol = &cfg.tolerances;
    let n = ps.dim();
    let gamma = &ps.christoffel;
    let mut s = Suite::new("geometry");

    let identity = DMatrix::<f64>::identity(n, n);
    s.residual("inverse", tol.inverse).record((&ps.g * &ps.g_inv - &identity).amax());

    let mut sym: f64 = 0.0;
    let mut compat: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                sym = sym.max((gamma.get(i, j, k) - gamma.get(j, i, k)).abs());
                let rhs: f64 = (0..n)
                    .map(|l| ps.g[(l, k)] * gamma.get(i, j, l) + ps.g[(j, l)] * gamma.get(i, k, l))
                    .sum();
                compat = compat.max((ps.dg[i][(j, k)] - rhs).abs());
            }
        }
    }
    s.residual("christoffel_symmetry", tol.algebraic).record(sym);
    s.residual("metric_compatibility", tol.agreement).record(compat);

    for _ in 0..DIRECTIONS {
        let x = random_vector(rng, n);
        let lhs = 2.0 * ps.inner(&ps.nabla_beta_sharp_along(&x), &ps.beta_sharp);
        let rhs = ps.length_sq_partials.dot(&x);
        s.residual("leibniz", tol.agreement).record((lhs - rhs).abs());
    }

    let ortho = orthonormal_frame(ps);
    s.residual("frame_orthonormality", tol.algebraic)
        .record((ortho.gram(ps) - &identity).amax());
    if !ps.is_riemannian() {
        match adapted_frame(ps) {
            Ok(f) => s
                .residual("frame_orthonormality", tol.algebraic)
                .record((f.gram(ps) - &identity).amax()),
            Err(_) => s.residual("frame_orthonormality", tol.algebraic).record(f64::NAN),
        }
    }

    for _ in 0..DIRECTIONS {
        let t = Tensor12::from_fn(n, Basis::Chart, |_, _, _| rng.random_range(-1.0..1.0));
        let chart = tensor12_norm_sq(ps, &t);
        let frame: f64 = t.to_frame(ps, &ortho).as_slice().iter().map(|v| v * v).sum();
        s.residual("norm_basis_independence", tol.algebraic)
            .record(relative((chart - frame).abs(), chart));
    }
    s
}

fn randers_suite(ps: &PointState, rng: &mut ChaCha8Rng) -> Suite {
    let n = ps.dim();
    let mut s = Suite::new("randers");
    let valid = ps.length_sq.sqrt() < 1.0;
    s.predicate("validity").holds(valid);
    for _ in 0..DIRECTIONS * 3 {
        let v = random_direction(rng, n) * 10f64.powf(rng.random_range(-3.0..3.0));
        if valid {
            s.predicate("positivity").holds(randers_norm(ps, &v) > 0.0);
        }
        let lambda = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled = lambda * randers_norm(ps, &v);
        s.residual("positive_homogeneity", ROUNDING)
            .record(relative((randers_norm(ps, &(&v * lambda)) - scaled).abs(), scaled));
    }
    s.predicate("positivity");
    s
}

/// Criterion versus oracle at one point. Returns whether the oracle found
/// every frame direction feasible.
fn compatibility_suite(cfg: &RunConfig, ps: &PointState) -> (Suite, bool) {
    let tol = &cfg.tolerances;
    let mut s = Suite::new("compatibility");
    let frame = orthonormal_frame(ps);
    let k = ps.length_sq.max(0.0).sqrt();
    let mut all_feasible = true;
    for a in 0..ps.dim() {
        let x = frame.vector(a);
        let sol = oracle::min_norm_a_with(ps, &x, tol);
        let nabla = ps.nabla_beta_sharp_along(&x);
        // the skew constraint reaches exactly the complement of β♯
        let predicted = if ps.is_riemannian() {
            ps.inner(&nabla, &nabla).sqrt()
        } else {
            ps.inner(&nabla, &ps.beta_sharp).abs() / k
        };
        s.residual("oracle_residual_vs_pointwise", tol.agreement)
            .record((sol.result.constraint_residual - predicted).abs());
        s.predicate("oracle_feasibility_vs_pointwise")
            .holds(sol.result.feasible == (predicted <= tol.feasibility));
        all_feasible &= sol.result.feasible;
    }
    (s, all_feasible)
}

/// Frame whose vectors are the coordinate axes with the `β♯` axis last.
fn axis_frame(ps: &PointState) -> Frame {
    let n = ps.dim();
    let axis = ps.beta.iamax();
    let order: Vec<usize> = (0..n).filter(|&i| i != axis).chain([axis]).collect();
    Frame {
        vectors: DMatrix::from_fn(n, n, |r, c| if r == order[c] { 1.0 } else { 0.0 }),
        adapted: true,
    }
}

fn frame_norm_sq(t: &Tensor12) -> f64 {
    t.as_slice().iter().map(|v| v * v).sum()
}

/// Random `δ` with `δ` skew and `δ·b̂ = 0`, in orthonormal-frame components.
fn feasible_perturbation(rng: &mut ChaCha8Rng, proj: &DMatrix<f64>) -> DMatrix<f64> {
    let n = proj.nrows();
    let scale = 10f64.powf(rng.random_range(-6.0..0.0));
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    proj * (&raw - raw.transpose()) * proj * scale
}

fn connection_suite(
    cfg: &RunConfig,
    ps: &PointState,
    rng: &mut ChaCha8Rng,
) -> Result<Suite, ConnectionError> {
    let tol = &cfg.tolerances;
    let n = ps.dim();
    let mut s = Suite::new("connection");

    let a = connection::difference_tensor(ps)?;
    let t_circ = connection::torsion_circ(ps)?;
    let om = connection::omega(ps)?;
    let t = connection::extremal_torsion(ps)?;
    let b = connection::recover_b(ps)?;

    s.residual("a_skew", tol.algebraic).record(a.skewness_residual(ps));
    s.residual("b_skew", tol.algebraic).record(b.skewness_residual(ps));
    let mut a_on_beta: f64 = 0.0;
    let mut b_on_beta: f64 = 0.0;
    for i in 0..n {
        let e = ps.basis_vector(i);
        let nabla = ps.nabla_beta_sharp_along(&e);
        a_on_beta = a_on_beta.max((a.apply(&e, &ps.beta_sharp) + nabla).amax());
        b_on_beta = b_on_beta.max(b.apply(&e, &ps.beta_sharp).amax());
    }
    s.residual("a_on_beta", tol.algebraic).record(a_on_beta);
    s.residual("b_on_beta", tol.algebraic).record(b_on_beta);

    s.residual("torsion_circ_antisymmetry", tol.algebraic).record(t_circ.antisymmetry_residual());
    s.residual("omega_antisymmetry", tol.algebraic).record(om.antisymmetry_residual());
    s.residual("extremal_antisymmetry", tol.algebraic).record(t.antisymmetry_residual());
    s.residual("extremal_is_circ_plus_omega", tol.algebraic)
        .record(t.max_abs_diff(&t_circ.add(&om)));
    s.residual("extremal_from_recovered_b", tol.algebraic)
        .record(t.max_abs_diff(&t_circ.add(&b.antisymmetrized())));

    let adapted = adapted_frame(ps)?;
    let by_frame = connection::extremal_torsion_frame(ps, &adapted)?;
    s.residual("frame_formula_agreement", tol.agreement)
        .record(t.to_frame(ps, &adapted).max_abs_diff(&by_frame.to_tensor()));
    s.residual("coordinate_formula_agreement", tol.agreement);
    if let Ok(coords) = connection::extremal_torsion_coordinates(ps) {
        s.residual("coordinate_formula_agreement", tol.agreement)
            .record(t.to_frame(ps, &axis_frame(ps)).max_abs_diff(&coords.to_tensor()));
    }

    let norm_circ = tensor12_norm_sq(ps, &t_circ);
    let norm_t = tensor12_norm_sq(ps, &t);
    s.residual("norm_decrease", tol.algebraic).record((norm_t - norm_circ).max(0.0));
    let defect = connection::integrability_defect(&cfg.spec, ps.point.as_slice())?;
    s.predicate("norm_equality_iff_integrable")
        .holds(((norm_circ - norm_t).abs() <= NORM_EQUALITY) == (defect < tol.integrability));

    let d = connection::dbeta(ps);
    s.residual("dbeta_identity", tol.agreement)
        .record((&d - connection::exterior_derivative(ps)).amax());
    s.residual("dbeta_antisymmetry", tol.algebraic).record((&d + d.transpose()).amax());

    let frame = orthonormal_frame(ps);
    let a_f = a.to_frame(ps, &frame);
    let b_hat = frame.vectors.transpose() * ps.lower(&ps.beta_sharp) / ps.k();
    let proj = DMatrix::identity(n, n) - &b_hat * b_hat.transpose();
    for i in 0..n {
        let sol = oracle::min_norm_a_with(ps, &frame.vector(i), tol);
        s.residual("oracle_a_agreement", tol.agreement)
            .record((a.slice(&frame.vector(i)) - &sol.slice).amax());
        let slice_f = DMatrix::from_fn(n, n, |j, k| a_f.get(i, j, k));
        s.residual("oracle_a_objective", tol.agreement)
            .record((slice_f.norm_squared() - sol.result.objective).abs());
        for _ in 0..PERTURBATIONS {
            let moved = &slice_f + feasible_perturbation(rng, &proj);
            s.residual("optimality_a", CERTIFICATE)
                .record(slice_f.norm() - moved.norm());
        }
    }

    match oracle::min_norm_t_with(ps, tol) {
        Ok(sol) => {
            s.residual("oracle_t_objective", tol.agreement)
                .record((norm_t - sol.result.objective).abs());
            s.residual("oracle_t_agreement", tol.agreement)
                .record(t.max_abs_diff(&sol.torsion));
        }
        Err(_) => {
            s.residual("oracle_t_objective", tol.agreement).record(f64::NAN);
            s.residual("oracle_t_agreement", tol.agreement).record(f64::NAN);
        }
    }
    let t_f = t.to_frame(ps, &frame);
    let base = frame_norm_sq(&t_f).sqrt();
    for _ in 0..PERTURBATIONS {
        let delta: Vec<DMatrix<f64>> = (0..n).map(|_| feasible_perturbation(rng, &proj)).collect();
        let moved = Tensor12::from_fn(n, Basis::Frame, |i, j, k| {
            t_f.get(i, j, k) + delta[i][(j, k)] - delta[j][(i, k)]
        });
        s.residual("optimality_t", CERTIFICATE)
            .record(base - frame_norm_sq(&moved).sqrt());
    }
    Ok(s)
}

struct PointOutcome {
    suites: Vec<Suite>,
    all_feasible: bool,
}

fn point_suites(
    cfg: &RunConfig,
    verdict: Verdict,
    index: usize,
    p: &[f64],
) -> Result<PointOutcome, CliError> {
    let at = |e: &dyn std::fmt::Display| numerical(format!("at {p:?}: {e}"));
    let ps = point_state(&cfg.spec, p).map_err(|e| at(&e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(POINT_STREAM_BASE + index as u64);

    let (compat, all_feasible) = compatibility_suite(cfg, &ps);
    let mut suites = vec![
        expressions_suite(cfg, p, &mut rng),
        geometry_suite(cfg, &ps, &mut rng),
        randers_suite(&ps, &mut rng),
        compat,
    ];
    if verdict == Verdict::GeneralizedBerwald {
        suites.push(connection_suite(cfg, &ps, &mut rng).map_err(|e| at(&e))?);
    }
    Ok(PointOutcome {
        suites,
        all_feasible,
    })
}

fn transport_err(ci: usize, kind: ConnectionKind, e: TransportError) -> CliError {
    numerical(format!("curve {ci}, {kind}: {e}"))
}

fn run(
    cfg: &RunConfig,
    c: &CurveConfig,
    v0: &DVector<f64>,
    kind: ConnectionKind,
    steps: usize,
) -> Result<TransportResult, TransportError> {
    parallel_transport(&cfg.spec, &c.curve, v0, kind, steps)
}

fn max_drift(r: &TransportResult) -> f64 {
    r.drift_alpha.max(r.drift_beta).max(r.drift_f)
}

/// Largest `|∇*_{γ′} β♯|_α` over uniformly spaced curve nodes.
fn curve_nabla_beta(cfg: &RunConfig, c: &CurveConfig) -> Result<f64, TransportError> {
    let mut worst: f64 = 0.0;
    for node in 0..=CURVE_NODES {
        let t = c.curve.t0 + (c.curve.t1 - c.curve.t0) * node as f64 / CURVE_NODES as f64;
        let (pos, vel) = c.curve.at(t)?;
        let ps = point_state(&cfg.spec, &pos)?;
        let nabla = ps.nabla_beta_sharp_along(&vel);
        worst = worst.max(ps.inner(&nabla, &nabla).sqrt());
    }
    Ok(worst)
}

fn transport_checks(
    cfg: &RunConfig,
    ci: usize,
    kind: ConnectionKind,
) -> Result<Suite, CliError> {
    let tol = &cfg.tolerances;
    let c = &cfg.curves[ci];
    let n = cfg.spec.dim();
    let err = |e| transport_err(ci, kind, e);
    let mut s = Suite::new("transport");

    let v0 = c.v0.clone().unwrap_or_else(|| default_v0(n));
    let main = run(cfg, c, &v0, kind, c.steps).map_err(err)?;

    let w = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
    let (a, b) = (0.7, -1.3);
    let tw = run(cfg, c, &w, kind, c.steps).map_err(err)?;
    let tc = run(cfg, c, &(&v0 * a + &w * b), kind, c.steps).map_err(err)?;
    let lin = tc
        .final_vector
        .iter()
        .zip(main.final_vector.iter().zip(&tw.final_vector))
        .map(|(c, (v, w))| relative((c - a * v - b * w).abs(), (a * v).abs() + (b * w).abs()))
        .fold(0.0, f64::max);
    s.residual("linearity", LINEARITY).record(lin);

    if kind == ConnectionKind::LeviCivita {
        s.residual("levi_civita_alpha_drift", tol.ode).record(main.drift_alpha);
        let mut beta_drift = main.drift_beta;
        for i in 0..n {
            let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            beta_drift = beta_drift.max(run(cfg, c, &e, kind, c.steps).map_err(err)?.drift_beta);
        }
        let nabla = curve_nabla_beta(cfg, c).map_err(err)?;
        s.predicate("levi_civita_beta_drift_iff_nonparallel")
            .holds((beta_drift > tol.ode) == (nabla > tol.ode));
    } else {
        s.residual("compatible_drift", tol.ode).record(max_drift(&main));
        let runs = ORDER_STEPS
            .iter()
            .map(|&steps| {
                if steps == c.steps {
                    Ok(main.clone())
                } else {
                    run(cfg, c, &v0, kind, steps)
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let coarse = &runs[0];
        let drifts = |r: &TransportResult| [r.drift_alpha, r.drift_beta, r.drift_f];
        for (r, &steps) in runs.iter().zip(&ORDER_STEPS).skip(1) {
            let ratio = (ORDER_STEPS[0] as f64 / steps as f64).powi(4);
            for (fine, rough) in drifts(r).into_iter().zip(drifts(coarse)) {
                s.residual("drift_fourth_order_bound", ORDER_FLOOR)
                    .record(fine - ORDER_SLACK * ratio * rough);
            }
        }
    }
    Ok(s)
}

fn transport_suite(cfg: &RunConfig, verdict: Verdict) -> Result<Suite, CliError> {
    if cfg.curves.is_empty() {
        return Ok(Suite::skipped("transport", "no curves configured".into()));
    }
    let compatible = verdict.admits_compatible_connection();
    let jobs: Vec<(usize, ConnectionKind)> = cfg
        .curves
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.connections
                .clone()
                .unwrap_or_else(|| ConnectionKind::ALL.to_vec())
                .into_iter()
                .filter(move |k| compatible || *k == ConnectionKind::LeviCivita)
                .map(move |k| (ci, k))
        })
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(ci, kind)| transport_checks(cfg, ci, kind))
        .collect::<Vec<_>>();
    let mut suite = Suite::new("transport");
    suite.residual("linearity", LINEARITY);
    suite.residual("levi_civita_alpha_drift", cfg.tolerances.ode);
    suite.predicate("levi_civita_beta_drift_iff_nonparallel");
    if compatible {
        suite.residual("compatible_drift", cfg.tolerances.ode);
        suite.residual("drift_fourth_order_bound", ORDER_FLOOR);
    }
    for p in parts {
        suite.merge(&p?);
    }
    Ok(suite)
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(flatten)]
    header: Header,
    check: GBReport,
    points: Vec<Vec<f64>>,
    passed: bool,
    suites: Vec<SuiteResult>,
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gb = run_criterion(cfg)?;
    let points = cfg.resolve_points(&[
        PointSelector::At(cfg.reference_point()),
        PointSelector::Random(DEFAULT_RANDOM_POINTS),
    ]);

    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| point_suites(cfg, gb.verdict, i, p))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut suites = vec![
        Suite::new("expressions"),
        Suite::new("geometry"),
        Suite::new("randers"),
        Suite::new("compatibility"),
    ];
    match gb.verdict {
        Verdict::GeneralizedBerwald => suites.push(Suite::new("connection")),
        Verdict::Riemannian => suites.push(Suite::skipped(
            "connection",
            "β vanishes identically; every construction is zero".into(),
        )),
        v => suites.push(Suite::skipped(
            "connection",
            format!("no compatible connection (verdict {})", verdict_name(v)),
        )),
    }
    for outcome in &per_point {
        for (total, s) in suites.iter_mut().zip(&outcome.suites) {
            total.merge(s);
        }
    }

    // global: constancy verdict against pointwise oracle feasibility
    let feasible_everywhere = per_point.iter().all(|o| o.all_feasible);
    suites[3]
        .predicate("verdict_vs_oracle")
        .holds(feasible_everywhere == (gb.relative_spread <= cfg.tolerances.length));
    for shift in 1..=2u64 {
        let other = gb_criterion_with(
            &cfg.spec,
            cfg.samples,
            cfg.seed.wrapping_add(shift),
            &cfg.tolerances,
        )
        .map_err(numerical)?;
        suites[2].predicate("seed_invariance").holds(other.verdict == gb.verdict);
    }
    suites.push(transport_suite(cfg, gb.verdict)?);

    let results: Vec<SuiteResult> = suites.iter().map(Suite::result).collect();
    let passed = results.iter().all(|s| s.passed);

    let mut summary = format!(
        "source: {} (dimension {}), {} points, seed {}\nverdict: {}\n",
        cfg.source,
        cfg.spec.dim(),
        points.len(),
        cfg.seed,
        verdict_name(gb.verdict)
    );
    let mut failed = 0;
    let mut total = 0;
    for s in &results {
        if let Some(reason) = &s.skipped {
            summary += &format!("[SKIP] {}: {reason}\n", s.name);
        }
        for c in &s.checks {
            total += 1;
            if !c.passed {
                failed += 1;
            }
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let detail = match (c.worst, c.tolerance) {
                (Some(w), Some(t)) => format!("worst {w:.3e} (tolerance {t:.0e})"),
                _ => format!("{} of {} held", c.evaluations - c.failures, c.evaluations),
            };
            summary += &format!("[{mark}] {}/{}: {detail}\n", s.name, c.name);
        }
    }
    summary += &if failed == 0 {
        format!("all {total} checks passed\n")
    } else {
        format!("{failed} of {total} checks failed\n")
    };

    let report = to_json_string(&VerifyReport {
        header: Header::new("verify", cfg),
        check: gb,
        points,
        passed,
        suites: results,
    });
    let code = if passed { Code::Success } else { Code::Numerical };
    Ok(Outcome { report, summary, code })
}
