//! Run configuration: a JSON file or a built-in example, plus command-line
//! overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::examples::Example;
use crate::geometry::{DomainBox, FieldSpec, GeometryError};
use crate::randers::DEFAULT_SAMPLES;
use crate::tolerance::Tolerances;
use crate::transport::{ConnectionKind, Curve, TransportError};

/// Stream of the evaluation-point generator, kept apart from the one used
/// for the constancy sampling.
const POINT_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("one of --config or --example is required")]
    MissingSource,
    #[error("--config and --example cannot be combined")]
    ConflictingSource,
    #[error("config sets `example` together with inline field `{0}`")]
    MixedSource(&'static str),
    #[error("config is missing `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    UnknownExample(String),
    #[error(transparent)]
    Spec(#[from] GeometryError),
    #[error("samples must be at least 2, got {0}")]
    Samples(usize),
    #[error("every tolerance must be positive and finite")]
    Tolerances,
    #[error("cannot parse point `{0}` (expected comma-separated numbers or random:N)")]
    PointSyntax(String),
    #[error("point {index} has {got} coordinates, expected {expected}")]
    PointDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("curve {index}: {source}")]
    Curve {
        index: usize,
        #[source]
        source: TransportError,
    },
    #[error("curve {index}: v0 has {got} components, expected {expected}")]
    InitialVector {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("curve {index}: {message}")]
    CurveOption { index: usize, message: String },
    #[error("steps must be at least 1")]
    Steps,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecSource {
    Example(Example),
    File(PathBuf),
}

impl fmt::Display for SpecSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecSource::Example(e) => write!(f, "{e}"),
            SpecSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSelector {
    At(Vec<f64>),
    Random(usize),
}

impl PointSelector {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::PointSyntax(text.to_string());
        let text = text.trim();
        if let Some(count) = text.strip_prefix("random:") {
            return count.trim().parse().map(PointSelector::Random).map_err(|_| bad());
        }
        text.split(',')
            .map(|c| c.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .map(PointSelector::At)
            .ok_or_else(bad)
    }
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub components: Vec<String>,
    pub curve: Curve,
    pub steps: usize,
    pub v0: Option<DVector<f64>>,
    pub connections: Option<Vec<ConnectionKind>>,
}

/// Command-line flags that shape a run.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub example: Option<String>,
    pub points: Vec<String>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: SpecSource,
    pub spec: FieldSpec,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// `None` means "use the command's default points".
    pub points: Option<Vec<PointSelector>>,
    pub curves: Vec<CurveConfig>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawExpr {
    Number(f64),
    Text(String),
}

impl RawExpr {
    fn text(&self) -> String {
        match self {
            RawExpr::Number(v) => format!("{v:e}"),
            RawExpr::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPoint {
    Coords(Vec<f64>),
    Selector(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    components: Vec<String>,
    t0: f64,
    t1: f64,
    steps: Option<usize>,
    v0: Option<Vec<f64>>,
    connections: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    example: Option<String>,
    dimension: Option<usize>,
    metric: Option<Vec<Vec<RawExpr>>>,
    beta: Option<Vec<RawExpr>>,
    domain: Option<RawDomain>,
    samples: Option<usize>,
    seed: Option<u64>,
    tolerances: Option<Tolerances>,
    points: Option<Vec<RawPoint>>,
    curves: Option<Vec<RawCurve>>,
    output: Option<PathBuf>,
}

const DEFAULT_STEPS: usize = 1000;

impl RunConfig {
    /// A built-in example with default settings.
    pub fn example(example: Example) -> Self {
        Self::load(&Overrides {
            example: Some(example.name().to_string()),
            ..Overrides::default()
        })
        .expect("built-in example loads")
    }

    pub fn load(ov: &Overrides) -> Result<Self, ConfigError> {
        let (raw, file) = match (&ov.config, &ov.example) {
            (Some(_), Some(_)) => return Err(ConfigError::ConflictingSource),
            (None, None) => return Err(ConfigError::MissingSource),
            (Some(path), None) => (read_raw(path)?, Some(path.clone())),
            (None, Some(name)) => (
                RawConfig {
                    example: Some(name.clone()),
                    ..RawConfig::default()
                },
                None,
            ),
        };
        Self::from_raw(raw, file, ov)
    }

    /// Parse a config document given as a string.
    pub fn from_json(text: &str, ov: &Overrides) -> Result<Self, ConfigError> {
        Self::from_raw(serde_json::from_str(text)?, None, ov)
    }

    fn from_raw(raw: RawConfig, file: Option<PathBuf>, ov: &Overrides) -> Result<Self, ConfigError> {
        let (source, spec, example) = build_spec(&raw, file)?;
        let n = spec.dim();

        let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(ConfigError::Samples(samples));
        }
        let tolerances = raw.tolerances.unwrap_or_default();
        if !tolerances.all_positive() {
            return Err(ConfigError::Tolerances);
        }
        if ov.steps == Some(0) {
            return Err(ConfigError::Steps);
        }

        let points = if !ov.points.is_empty() {
            Some(
                ov.points
                    .iter()
                    .map(|p| PointSelector::parse(p))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        } else {
            raw.points
                .map(|pts| {
                    pts.into_iter()
                        .map(|p| match p {
                            RawPoint::Coords(c) => Ok(PointSelector::At(c)),
                            RawPoint::Selector(s) => PointSelector::parse(&s),
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
        };
        if let Some(points) = &points {
            for (index, p) in points.iter().enumerate() {
                if let PointSelector::At(c) = p {
                    if c.len() != n {
                        return Err(ConfigError::PointDimension {
                            index,
                            expected: n,
                            got: c.len(),
                        });
                    }
                }
            }
        }

        let raw_curves = match (raw.curves, example) {
            (Some(c), _) => c,
            (None, Some(e)) => e
                .curves()
                .into_iter()
                .map(|c| RawCurve {
                    components: c.components,
                    t0: c.t0,
                    t1: c.t1,
                    steps: Some(c.steps),
                    v0: None,
                    connections: None,
                })
                .collect(),
            (None, None) => Vec::new(),
        };
        let curves = raw_curves
            .into_iter()
            .enumerate()
            .map(|(index, c)| build_curve(index, c, n, ov.steps))
            .collect::<Result<_, _>>()?;

        Ok(Self {
            source,
            spec,
            samples,
            seed: ov.seed.or(raw.seed).unwrap_or(0),
            tolerances,
            points,
            curves,
            output: ov.output.clone().or(raw.output),
        })
    }

    pub fn example_source(&self) -> Option<Example> {
        match self.source {
            SpecSource::Example(e) => Some(e),
            SpecSource::File(_) => None,
        }
    }

    /// Reference point of a built-in example, else the domain centre.
    pub fn reference_point(&self) -> Vec<f64> {
        self.example_source()
            .map_or_else(|| self.spec.domain().center(), Example::reference_point)
    }

    /// Concrete evaluation points. Random points are uniform in the domain
    /// box and depend only on the seed.
    pub fn resolve_points(&self, default: &[PointSelector]) -> Vec<Vec<f64>> {
        let selectors = self.points.as_deref().unwrap_or(default);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(POINT_STREAM);
        let domain = self.spec.domain();
        let mut out = Vec::new();
        for sel in selectors {
            match sel {
                PointSelector::At(p) => out.push(p.clone()),
                PointSelector::Random(count) => {
                    for _ in 0..*count {
                        let u: Vec<f64> = (0..self.spec.dim()).map(|_| rng.random()).collect();
                        out.push(domain.map_unit(&u));
                    }
                }
            }
        }
        out
    }
}

fn read_raw(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn build_spec(
    raw: &RawConfig,
    file: Option<PathBuf>,
) -> Result<(SpecSource, FieldSpec, Option<Example>), ConfigError> {
    if let Some(name) = &raw.example {
        let inline = [
            ("dimension", raw.dimension.is_some()),
            ("metric", raw.metric.is_some()),
            ("beta", raw.beta.is_some()),
            ("domain", raw.domain.is_some()),
        ];
        if let Some((field, _)) = inline.iter().find(|(_, set)| *set) {
            return Err(ConfigError::MixedSource(field));
        }
        let example: Example = name.parse().map_err(ConfigError::UnknownExample)?;
        return Ok((SpecSource::Example(example), example.field_spec(), Some(example)));
    }

    let dim = raw.dimension.ok_or(ConfigError::Missing("dimension"))?;
    let metric: Vec<Vec<String>> = raw
        .metric
        .as_ref()
        .ok_or(ConfigError::Missing("metric"))?
        .iter()
        .map(|row| row.iter().map(RawExpr::text).collect())
        .collect();
    let beta: Vec<String> = raw
        .beta
        .as_ref()
        .ok_or(ConfigError::Missing("beta"))?
        .iter()
        .map(RawExpr::text)
        .collect();
    let domain = raw.domain.as_ref().ok_or(ConfigError::Missing("domain"))?;
    let domain = DomainBox {
        min: domain.min.clone(),
        max: domain.max.clone(),
    };
    let spec = FieldSpec::new(dim, &metric, &beta, domain)?;
    let source = SpecSource::File(file.unwrap_or_else(|| PathBuf::from("<inline>")));
    Ok((source, spec, None))
}

fn build_curve(
    index: usize,
    raw: RawCurve,
    n: usize,
    steps_override: Option<usize>,
) -> Result<CurveConfig, ConfigError> {
    let curve = Curve::new(&raw.components, n, raw.t0, raw.t1)
        .map_err(|source| ConfigError::Curve { index, source })?;
    let steps = steps_override.or(raw.steps).unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err(ConfigError::Steps);
    }
    let v0 = raw
        .v0
        .map(|v| {
            if v.len() == n {
                Ok(DVector::from_vec(v))
            } else {
                Err(ConfigError::InitialVector {
                    index,
                    expected: n,
                    got: v.len(),
                })
            }
        })
        .transpose()?;
    let connections = raw
        .connections
        .map(|names| {
            names
                .iter()
                .map(|s| s.parse::<ConnectionKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|message| ConfigError::CurveOption { index, message })
        })
        .transpose()?;
    Ok(CurveConfig {
        components: raw.components,
        curve,
        steps,
        v0,
        connections,
    })
}
