use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{PointSelector, RunConfig};
use super::{CliError, Code, Outcome};
use crate::connection::{self, ConnectionError, FrameTorsionComponents};
use crate::geometry::{adapted_frame, point_state, tensor12_norm_sq, Basis, PointState, Tensor12};
use crate::randers::{gb_criterion_with, GBReport, RandersError, Verdict};
use crate::report::to_json_string;
use crate::transport::{parallel_transport, ConnectionKind, TransportResult};

#[derive(Debug, Serialize)]
pub(super) struct Header {
    command: &'static str,
    source: String,
    dimension: usize,
    seed: u64,
}

impl Header {
    pub(super) fn new(command: &'static str, cfg: &RunConfig) -> Self {
        Self {
            command,
            source: cfg.source.to_string(),
            dimension: cfg.spec.dim(),
            seed: cfg.seed,
        }
    }
}

pub(super) fn verdict_code(verdict: Verdict) -> Code {
    match verdict {
        Verdict::Riemannian | Verdict::GeneralizedBerwald => Code::Success,
        Verdict::InvalidRanders => Code::InvalidRanders,
        Verdict::NotGeneralizedBerwald => Code::NotBerwald,
    }
}

pub(super) fn run_criterion(cfg: &RunConfig) -> Result<GBReport, CliError> {
    gb_criterion_with(&cfg.spec, cfg.samples, cfg.seed, &cfg.tolerances).map_err(|e| match e {
        RandersError::TooFewSamples(_) => CliError::Numerical(e.to_string()),
        RandersError::Geometry(g) => CliError::Numerical(g.to_string()),
    })
}

pub(super) fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn check_summary(cfg: &RunConfig, gb: &GBReport) -> String {
    let mut s = format!(
        "source: {} (dimension {})\nverdict: {}\n",
        cfg.source,
        cfg.spec.dim(),
        serde_json::to_value(gb.verdict).expect("verdict serializes").as_str().unwrap_or("?"),
    );
    if gb.verdict == Verdict::GeneralizedBerwald {
        s += &format!("K = {:.12}\n", gb.k);
    }
    s += &format!(
        "|β♯| over {} samples (seed {}): min {:.6e}, max {:.6e}, relative spread of |β♯|² {:.3e}\n",
        gb.samples, gb.seed, gb.length.min, gb.length.max, gb.relative_spread
    );
    s
}

#[derive(Serialize)]
struct CheckReport {
    #[serde(flatten)]
    header: Header,
    check: GBReport,
}

pub fn check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gb = run_criterion(cfg)?;
    let summary = check_summary(cfg, &gb);
    let code = verdict_code(gb.verdict);
    let report = to_json_string(&CheckReport {
        header: Header::new("check", cfg),
        check: gb,
    });
    Ok(Outcome { report, summary, code })
}

#[derive(Debug, Serialize)]
struct FrameReport {
    /// Frame vectors in chart components, `e_n = β♯/K` last.
    vectors: Vec<Vec<f64>>,
    extremal_torsion: Tensor12,
    normal: Vec<Vec<f64>>,
    normal_mixed: Vec<f64>,
    tangential_mixed: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct PointConnection {
    point: Vec<f64>,
    christoffel: Tensor12,
    difference_tensor: Tensor12,
    nabla_circ: Tensor12,
    torsion_circ: Tensor12,
    omega: Tensor12,
    b: Tensor12,
    extremal_torsion: Tensor12,
    torsion_circ_norm_sq: f64,
    extremal_torsion_norm_sq: f64,
    integrability_defect: f64,
    frame: Option<FrameReport>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn frame_report(ps: &PointState) -> Result<FrameReport, ConnectionError> {
    let frame = adapted_frame(ps)?;
    let comps: FrameTorsionComponents = connection::extremal_torsion_frame(ps, &frame)?;
    Ok(FrameReport {
        vectors: frame
            .vectors
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect(),
        extremal_torsion: comps.to_tensor(),
        normal: rows(&comps.normal),
        normal_mixed: comps.normal_mixed.iter().copied().collect(),
        tangential_mixed: rows(&comps.tangential_mixed),
    })
}

fn point_connection(cfg: &RunConfig, p: &[f64]) -> Result<PointConnection, ConnectionError> {
    let ps = point_state(&cfg.spec, p)?;
    let n = ps.dim();
    if ps.is_riemannian() {
        let zero = Tensor12::zeros(n, Basis::Chart);
        return Ok(PointConnection {
            point: p.to_vec(),
            christoffel: ps.christoffel.clone(),
            difference_tensor: zero.clone(),
            nabla_circ: ps.christoffel.clone(),
            torsion_circ: zero.clone(),
            omega: zero.clone(),
            b: zero.clone(),
            extremal_torsion: zero,
            torsion_circ_norm_sq: 0.0,
            extremal_torsion_norm_sq: 0.0,
            integrability_defect: 0.0,
            frame: None,
        });
    }
    let a = connection::difference_tensor(&ps)?;
    let t_circ = a.antisymmetrized();
    let t = connection::extremal_torsion(&ps)?;
    Ok(PointConnection {
        point: p.to_vec(),
        christoffel: ps.christoffel.clone(),
        nabla_circ: ps.christoffel.add(&a),
        torsion_circ_norm_sq: tensor12_norm_sq(&ps, &t_circ),
        extremal_torsion_norm_sq: tensor12_norm_sq(&ps, &t),
        omega: connection::omega(&ps)?,
        b: connection::recover_b(&ps)?,
        integrability_defect: connection::integrability_defect(&cfg.spec, p)?,
        frame: Some(frame_report(&ps)?),
        difference_tensor: a,
        torsion_circ: t_circ,
        extremal_torsion: t,
    })
}

#[derive(Serialize)]
struct ConnectionReport {
    #[serde(flatten)]
    header: Header,
    check: GBReport,
    points: Vec<PointConnection>,
}

pub fn connection(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gb = run_criterion(cfg)?;
    let code = verdict_code(gb.verdict);
    if code != Code::Success {
        let report = to_json_string(&ConnectionReport {
            header: Header::new("connection", cfg),
            check: gb.clone(),
            points: Vec::new(),
        });
        let summary = check_summary(cfg, &gb) + "no compatible connection exists; nothing to construct\n";
        return Ok(Outcome { report, summary, code });
    }

    let points = cfg.resolve_points(&[PointSelector::At(cfg.reference_point())]);
    let results = points
        .par_iter()
        .map(|p| point_connection(cfg, p))
        .collect::<Vec<_>>()
        .into_iter()
        .zip(&points)
        .map(|(r, p)| r.map_err(|e| numerical(format!("at {p:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;

    let mut summary = check_summary(cfg, &gb);
    for r in &results {
        summary += &format!(
            "at {:?}: |T°|² = {:.10}, |T|² = {:.10}, integrability defect = {:.3e}\n",
            r.point, r.torsion_circ_norm_sq, r.extremal_torsion_norm_sq, r.integrability_defect
        );
    }
    let report = to_json_string(&ConnectionReport {
        header: Header::new("connection", cfg),
        check: gb,
        points: results,
    });
    Ok(Outcome { report, summary, code })
}

#[derive(Debug, Serialize)]
struct CurveReport {
    components: Vec<String>,
    t0: f64,
    t1: f64,
    v0: Vec<f64>,
    results: Vec<TransportResult>,
    /// Requested connections that were not run because none is compatible.
    skipped: Vec<ConnectionKind>,
}

#[derive(Serialize)]
struct TransportReport {
    #[serde(flatten)]
    header: Header,
    check: GBReport,
    curves: Vec<CurveReport>,
}

/// Default initial vector `∂_1`.
pub(super) fn default_v0(n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[0] = 1.0;
    v
}

pub fn transport(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gb = run_criterion(cfg)?;
    let code = verdict_code(gb.verdict);
    let compatible = gb.verdict.admits_compatible_connection();
    let n = cfg.spec.dim();

    let mut jobs = Vec::new();
    let mut curves = Vec::new();
    for (ci, c) in cfg.curves.iter().enumerate() {
        let requested = c.connections.clone().unwrap_or_else(|| ConnectionKind::ALL.to_vec());
        let (run, skipped): (Vec<_>, Vec<_>) = requested
            .into_iter()
            .partition(|k| compatible || *k == ConnectionKind::LeviCivita);
        let v0 = c.v0.clone().unwrap_or_else(|| default_v0(n));
        jobs.extend(run.iter().map(|&k| (ci, k, v0.clone())));
        curves.push(CurveReport {
            components: c.components.clone(),
            t0: c.curve.t0,
            t1: c.curve.t1,
            v0: v0.as_slice().to_vec(),
            results: Vec::new(),
            skipped,
        });
    }

    let results = jobs
        .par_iter()
        .map(|(ci, kind, v0)| {
            let c = &cfg.curves[*ci];
            parallel_transport(&cfg.spec, &c.curve, v0, *kind, c.steps)
        })
        .collect::<Vec<_>>();
    for ((ci, kind, _), r) in jobs.iter().zip(results) {
        let r = r.map_err(|e| numerical(format!("curve {ci}, {kind}: {e}")))?;
        curves[*ci].results.push(r);
    }

    let mut summary = check_summary(cfg, &gb);
    for (ci, c) in curves.iter().enumerate() {
        summary += &format!("curve {ci}: ({}) on [{}, {}]\n", c.components.join(", "), c.t0, c.t1);
        for r in &c.results {
            summary += &format!(
                "  {:<12} {} steps: drift α {:.3e}, β {:.3e}, F {:.3e}\n",
                r.connection, r.steps, r.drift_alpha, r.drift_beta, r.drift_f
            );
        }
        for k in &c.skipped {
            summary += &format!("  {k:<12} skipped: no compatible connection\n");
        }
    }
    let report = to_json_string(&TransportReport {
        header: Header::new("transport", cfg),
        check: gb,
        curves,
    });
    Ok(Outcome { report, summary, code })
}
